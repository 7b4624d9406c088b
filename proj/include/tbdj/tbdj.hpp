#pragma once

#include "tbdj/core.hpp"
#include "tbdj/components.hpp"
#include "tbdj/oracles.hpp"
#include "tbdj/reference.hpp"
#include "tbdj/experiment.hpp"
#include "tbdj/detection.hpp"
#include "tbdj/config.hpp"

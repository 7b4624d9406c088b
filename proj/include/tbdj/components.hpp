#pragma once

// Optical elements of the double-pass interferometer chain.
//
// Couplers are symmetric: transmission carries amplitude t, reflection i*r.
// Two reflections therefore contribute exp(i*pi), which is the sign every
// long-arm pulse picks up on a single pass through an unbalanced MZI.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "tbdj/core.hpp"

namespace tbdj {

struct CouplerSpec {
    double transmittance = 0.5;  // power fraction on the straight-through path
    double excess_loss = 0.0;    // power fraction absorbed, shared by both outputs

    double t() const { return std::sqrt(transmittance) * std::sqrt(1.0 - excess_loss); }
    double r() const { return std::sqrt(1.0 - transmittance) * std::sqrt(1.0 - excess_loss); }

    void validate() const {
        if (!(transmittance >= 0.0 && transmittance <= 1.0)) {
            throw std::invalid_argument("CouplerSpec: transmittance " + std::to_string(transmittance) + " outside [0,1]");
        }
        if (!(excess_loss >= 0.0 && excess_loss <= 1.0)) {
            throw std::invalid_argument("CouplerSpec: excess_loss " + std::to_string(excess_loss) + " outside [0,1]");
        }
    }

    // Amplitude for going from input port `in` to output port `out` (0 or 1).
    Amplitude route(int in, int out) const { return in == out ? Amplitude{t()} : kI * r(); }
};

// Unbalanced Mach-Zehnder stage. `phi` is the propagation phase of the long arm
// relative to the short one (k * delta mod 2*pi).
struct MziSpec {
    BinIndex delta = 1;
    double phi = 0.0;
    CouplerSpec in_coupler{};
    CouplerSpec out_coupler{};

    void validate() const {
        if (delta < 1) throw std::invalid_argument("MziSpec: delta must be >= 1");
        if (!std::isfinite(phi)) throw std::invalid_argument("MziSpec: phi must be finite");
        in_coupler.validate();
        out_coupler.validate();
    }
};

// Delay line hanging off an MZI output port.
struct OutputArmSpec {
    BinIndex L = 0;
    bool has_isolator = false;
};

struct PortPair {
    TimeBinState port0;
    TimeBinState port1;
};

inline std::pair<Amplitude, Amplitude> coupler_scatter(Amplitude a_in, Amplitude b_in, const CouplerSpec& spec) {
    const double t = spec.t();
    const double r = spec.r();
    return {t * a_in + kI * r * b_in, kI * r * a_in + t * b_in};
}

// Full two-port transfer: `entry` couples the ports to the arms (port p ->
// arm p transmits), the long arm (arm 1) adds `delta` bins and `phi`, `exit`
// couples the arms back to the ports.
inline PortPair mzi_transfer(const PortPair& in, const CouplerSpec& entry, const CouplerSpec& exit, BinIndex delta,
                             double phi) {
    PortPair out{in.port0.empty_like(), in.port0.empty_like()};
    const Amplitude long_phase = std::polar(1.0, phi);
    const TimeBinState* inputs[2] = {&in.port0, &in.port1};
    TimeBinState* outputs[2] = {&out.port0, &out.port1};
    for (int p = 0; p < 2; ++p) {
        for (const auto& [bin, a] : inputs[p]->bins()) {
            for (int arm = 0; arm < 2; ++arm) {
                const Amplitude in_arm = a * entry.route(p, arm) * (arm == 1 ? long_phase : Amplitude{1.0});
                const BinIndex arm_bin = bin + (arm == 1 ? delta : 0);
                for (int q = 0; q < 2; ++q) outputs[q]->add(arm_bin, in_arm * exit.route(arm, q));
            }
        }
    }
    return out;
}

// Forward traversal with light entering input port 0. `through` continues
// toward the mirror, `drop` is the complementary output.
inline std::pair<TimeBinState, TimeBinState> mzi_forward(const TimeBinState& state, const MziSpec& spec) {
    PortPair in{state, state.empty_like()};
    auto out = mzi_transfer(in, spec.in_coupler, spec.out_coupler, spec.delta, spec.phi);
    return {std::move(out.port0), std::move(out.port1)};
}

// Return traversal: light enters the output-side port `entry_port`, crosses the
// out coupler first and leaves through either input-side port.
inline PortPair mzi_backward(const TimeBinState& state, const MziSpec& spec, int entry_port, double phi) {
    if (entry_port != 0 && entry_port != 1) throw std::invalid_argument("mzi_backward: entry_port must be 0 or 1");
    PortPair in{state.empty_like(), state.empty_like()};
    (entry_port == 0 ? in.port0 : in.port1) = state;
    return mzi_transfer(in, spec.out_coupler, spec.in_coupler, spec.delta, phi);
}

inline PortPair mzi_backward(const TimeBinState& state, const MziSpec& spec, int entry_port) {
    return mzi_backward(state, spec, entry_port, spec.phi);
}

// Ideal Faraday mirror: amplitudes untouched, propagation reversed.
inline TimeBinState faraday_reflect(TimeBinState state) {
    state.set_direction(state.direction() == Direction::forward ? Direction::backward : Direction::forward);
    return state;
}

// Isolator inside a delay line: forward-going light is absorbed.
inline TimeBinState pass_output_arm(const TimeBinState& state, const OutputArmSpec& arm) {
    if (arm.has_isolator && state.direction() == Direction::forward) return state.empty_like();
    return state;
}

inline TimeBinState attenuate(TimeBinState state, double power_transmittance) {
    if (!(power_transmittance >= 0.0 && power_transmittance <= 1.0)) {
        throw std::invalid_argument("attenuate: power transmittance " + std::to_string(power_transmittance) +
                                    " outside [0,1]");
    }
    const double scale = std::sqrt(power_transmittance);
    for (auto& [bin, a] : state.mutable_bins()) a *= scale;
    return state;
}

inline double db_to_transmittance(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

}  // namespace tbdj

#pragma once

// Independent closed forms used only by tests. Nothing here goes through the
// component-level propagation.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "tbdj/core.hpp"
#include "tbdj/oracles.hpp"

namespace tbdj::paths {

inline int bit(std::uint64_t v, int l, int n) { return static_cast<int>((v >> (n - 1 - l)) & 1u); }

// Return-state amplitude of the path (x, y, z) for an ideal 50:50 setup:
//   4^-n (-1)^f(x) exp(i sum_l [phi_l (x_l + y_l) + pi (x_l + y_l - y_l (z_l + z_{l+1}) + (z_l + z_{l+1}) / 2)])
// with z_{n+1} = 0.
inline Amplitude return_state_amplitude(int n, const OracleSpec& f, std::uint64_t x, std::uint64_t y, std::uint64_t z,
                                        const std::vector<double>& phis) {
    double phase = 0.0;
    for (int l = 0; l < n; ++l) {
        const int xl = bit(x, l, n), yl = bit(y, l, n), zl = bit(z, l, n);
        const int znext = l + 1 < n ? bit(z, l + 1, n) : 0;
        const double s = zl + znext;
        phase += phis[static_cast<std::size_t>(l)] * (xl + yl) + kPi * (xl + yl - yl * s + s / 2.0);
    }
    return std::pow(4.0, -n) * (f(x) ? -1.0 : 1.0) * std::polar(1.0, phase);
}

inline BinIndex path_offset(int n, std::uint64_t x, std::uint64_t y, const std::vector<BinIndex>& deltas) {
    BinIndex off = 0;
    for (int l = 0; l < n; ++l) off += (bit(x, l, n) + bit(y, l, n)) * deltas[static_cast<std::size_t>(l)];
    return off;
}

// (offset, physical z) -> summed amplitude over all (x, y) landing there.
inline std::map<std::pair<BinIndex, std::uint64_t>, Amplitude> brute_force_return_state(int n, const OracleSpec& f,
                                                                                       const std::vector<BinIndex>& deltas,
                                                                                       const std::vector<double>& phis) {
    std::map<std::pair<BinIndex, std::uint64_t>, Amplitude> out;
    const std::uint64_t N = std::uint64_t{1} << n;
    for (std::uint64_t x = 0; x < N; ++x) {
        for (std::uint64_t y = 0; y < N; ++y) {
            for (std::uint64_t z = 0; z < N; ++z) {
                out[{path_offset(n, x, y, deltas), z}] += return_state_amplitude(n, f, x, y, z, phis);
            }
        }
    }
    return out;
}

// |2^-n sum_x (-1)^(x.z + f(x))|^2 by direct summation.
inline std::vector<double> brute_force_dj(const OracleSpec& f) {
    const std::uint64_t N = std::uint64_t{1} << f.n();
    std::vector<double> p(N);
    for (std::uint64_t z = 0; z < N; ++z) {
        double s = 0.0;
        for (std::uint64_t x = 0; x < N; ++x) s += ((dot_mod2(x, z) + f(x)) & 1) ? -1.0 : 1.0;
        s /= static_cast<double>(N);
        p[z] = s * s;
    }
    return p;
}

// Number of distinct (offset, z) pulse slots by enumerating every (x, y, z).
inline std::size_t brute_force_slot_count(int n, const std::vector<BinIndex>& deltas) {
    std::set<std::pair<BinIndex, std::uint64_t>> slots;
    const std::uint64_t N = std::uint64_t{1} << n;
    for (std::uint64_t x = 0; x < N; ++x)
        for (std::uint64_t y = 0; y < N; ++y)
            for (std::uint64_t z = 0; z < N; ++z) slots.insert({path_offset(n, x, y, deltas), z});
    return slots.size();
}

// True if some output bin (offset sum(delta), z) shares its arrival time with
// another pulse slot.
inline bool brute_force_output_collision(int n, const std::vector<BinIndex>& deltas, const std::vector<BinIndex>& Ls) {
    const std::uint64_t N = std::uint64_t{1} << n;
    BinIndex target = 0;
    for (auto d : deltas) target += d;
    auto time = [&](BinIndex off, std::uint64_t z) {
        BinIndex t = off;
        for (int l = 0; l < n; ++l) t += bit(z, l, n) * Ls[static_cast<std::size_t>(l)];
        return t;
    };
    std::map<BinIndex, std::set<std::pair<BinIndex, std::uint64_t>>> by_time;
    for (std::uint64_t x = 0; x < N; ++x)
        for (std::uint64_t y = 0; y < N; ++y)
            for (std::uint64_t z = 0; z < N; ++z) {
                const auto off = path_offset(n, x, y, deltas);
                by_time[time(off, z)].insert({off, z});
            }
    for (const auto& [t, slots] : by_time) {
        if (slots.size() < 2) continue;
        for (const auto& s : slots) {
            if (s.first == target) return true;
        }
    }
    return false;
}

// Click probability p = 1 - (1 - pd) exp(-eta m), pd = 1 - exp(-rate * gate).
inline double click_probability(double mean_photons, double eta, double rate, double gate) {
    const double pd = 1.0 - std::exp(-rate * gate);
    return 1.0 - (1.0 - pd) * std::exp(-eta * mean_photons);
}

}  // namespace tbdj::paths

#pragma once

// Time-bin field representation shared by every other module.
//
// A pulse train is a sparse map from an integer bin index (in units of the
// shortest interferometer delay) to a complex amplitude. States are allowed to
// be sub-normalized; the missing probability is light lost to isolators,
// unconnected ports and couplers.

#include <cmath>
#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tbdj {

using Amplitude = std::complex<double>;
using BinIndex = std::int64_t;

inline constexpr Amplitude kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

inline bool is_finite(Amplitude a) { return std::isfinite(a.real()) && std::isfinite(a.imag()); }

// Ordered n-bit string. Bit 0 is x_1, the most significant bit of index().
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_) {
            if (b > 1) throw std::invalid_argument("BitString: bits must be 0 or 1");
        }
    }

    static BitString zeros(int n) { return BitString(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)); }

    static BitString from_index(std::uint64_t index, int n) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
        for (int l = 0; l < n; ++l) bits[static_cast<std::size_t>(l)] = (index >> (n - 1 - l)) & 1u;
        return BitString(std::move(bits));
    }

    static BitString parse(std::string_view text) {
        std::vector<std::uint8_t> bits;
        bits.reserve(text.size());
        for (char c : text) {
            if (c != '0' && c != '1') throw std::invalid_argument("BitString: expected only '0'/'1', got '" + std::string(text) + "'");
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        return BitString(std::move(bits));
    }

    int size() const { return static_cast<int>(bits_.size()); }
    std::uint8_t operator[](int l) const { return bits_[static_cast<std::size_t>(l)]; }
    std::span<const std::uint8_t> bits() const { return bits_; }

    std::uint64_t index() const {
        std::uint64_t v = 0;
        for (auto b : bits_) v = (v << 1) | b;
        return v;
    }

    int weight() const {
        int w = 0;
        for (auto b : bits_) w += b;
        return w;
    }

    std::string str() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
        return s;
    }

    auto operator<=>(const BitString&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

// x . j mod 2
inline int dot_mod2(std::uint64_t x, std::uint64_t j) { return static_cast<int>(__builtin_popcountll(x & j) & 1); }

enum class Direction { forward, backward };

class TimeBinState {
public:
    using Bins = std::map<BinIndex, Amplitude>;

    TimeBinState() = default;
    explicit TimeBinState(int n, double unit_ns = 3.75, double prune_threshold = 0.0)
        : n_(n), unit_ns_(unit_ns), prune_threshold_(prune_threshold) {}

    static TimeBinState single_pulse(BinIndex bin, Amplitude a = 1.0, int n = 0) {
        TimeBinState s(n);
        s.add(bin, a);
        return s;
    }

    // Coherent accumulation. A bin that a pulse has reached stays occupied even
    // if it cancels to zero, unless its power drops below the prune threshold.
    void add(BinIndex bin, Amplitude a) {
        if (!is_finite(a)) throw std::domain_error("TimeBinState: non-finite amplitude");
        auto [it, inserted] = bins_.try_emplace(bin, a);
        if (!inserted) it->second += a;
        if (std::norm(it->second) < prune_threshold_) bins_.erase(it);
    }

    Amplitude at(BinIndex bin) const {
        auto it = bins_.find(bin);
        return it == bins_.end() ? Amplitude{} : it->second;
    }

    const Bins& bins() const { return bins_; }
    Bins& mutable_bins() { return bins_; }
    bool empty() const { return bins_.empty(); }
    std::size_t occupied() const { return bins_.size(); }

    int stages() const { return n_; }
    double unit_ns() const { return unit_ns_; }
    double prune_threshold() const { return prune_threshold_; }
    Direction direction() const { return direction_; }
    void set_direction(Direction d) { direction_ = d; }

    // Same metadata, no pulses.
    TimeBinState empty_like() const {
        TimeBinState s(n_, unit_ns_, prune_threshold_);
        s.direction_ = direction_;
        return s;
    }

private:
    Bins bins_;
    int n_ = 0;
    double unit_ns_ = 3.75;
    double prune_threshold_ = 0.0;
    Direction direction_ = Direction::forward;
};

inline double total_probability(const TimeBinState& state) {
    double p = 0.0;
    for (const auto& [bin, a] : state.bins()) p += std::norm(a);
    return p;
}

inline TimeBinState add_amplitude(TimeBinState state, BinIndex bin, Amplitude a) {
    state.add(bin, a);
    return state;
}

// Multiplies each listed bin by exp(i*phase). Unlisted bins are untouched.
inline TimeBinState apply_phase_pattern(TimeBinState state, const std::map<BinIndex, double>& pattern) {
    for (const auto& [bin, phase] : pattern) {
        if (!std::isfinite(phase)) throw std::invalid_argument("apply_phase_pattern: non-finite phase");
        auto it = state.mutable_bins().find(bin);
        if (it != state.mutable_bins().end()) it->second *= std::polar(1.0, phase);
    }
    return state;
}

inline BinIndex bitstring_to_bin(const BitString& x, std::span<const BinIndex> deltas) {
    if (static_cast<std::size_t>(x.size()) != deltas.size()) {
        throw std::invalid_argument("bitstring_to_bin: " + std::to_string(x.size()) + " bits but " +
                                    std::to_string(deltas.size()) + " delays");
    }
    BinIndex bin = 0;
    for (int l = 0; l < x.size(); ++l) bin += x[l] * deltas[static_cast<std::size_t>(l)];
    return bin;
}

}  // namespace tbdj

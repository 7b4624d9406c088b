#pragma once

// Gate-model Deutsch-Jozsa / Bernstein-Vazirani and the classical query
// baselines. This is the ground truth the optical simulation is checked against.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tbdj/core.hpp"
#include "tbdj/oracles.hpp"

namespace tbdj {

inline int reference_qubit_cap = kMaxOracleQubits;

// Dense register of n qubits, optionally followed by one ancilla qubit stored
// as the least significant index bit (index = 2*x + y).
class StateVector {
public:
    StateVector(int n, bool with_ancilla = false) : n_(n), ancilla_(with_ancilla) {
        if (n < 1 || n > reference_qubit_cap) {
            throw std::invalid_argument("StateVector: n=" + std::to_string(n) + " outside [1," +
                                        std::to_string(reference_qubit_cap) + "]");
        }
        amps_.assign(std::size_t{1} << (n + (with_ancilla ? 1 : 0)), Amplitude{});
        amps_[0] = 1.0;
    }

    static StateVector basis(int n, std::uint64_t x) {
        StateVector s(n);
        s.amps_[0] = 0.0;
        s.amps_.at(x) = 1.0;
        return s;
    }

    // |x> (x) ancilla, where ancilla = (a0, a1).
    static StateVector with_ancilla(const StateVector& reg, Amplitude a0, Amplitude a1) {
        if (reg.ancilla_) throw std::invalid_argument("StateVector::with_ancilla: register already has an ancilla");
        StateVector s(reg.n_, true);
        for (std::size_t x = 0; x < reg.amps_.size(); ++x) {
            s.amps_[2 * x] = reg.amps_[x] * a0;
            s.amps_[2 * x + 1] = reg.amps_[x] * a1;
        }
        return s;
    }

    int n() const { return n_; }
    bool has_ancilla() const { return ancilla_; }
    std::size_t register_size() const { return std::size_t{1} << n_; }
    std::vector<Amplitude>& amplitudes() { return amps_; }
    const std::vector<Amplitude>& amplitudes() const { return amps_; }
    Amplitude operator[](std::size_t i) const { return amps_[i]; }

    double norm() const {
        double p = 0.0;
        for (auto a : amps_) p += std::norm(a);
        return p;
    }

private:
    int n_;
    bool ancilla_;
    std::vector<Amplitude> amps_;
};

// H on every register qubit (ancilla untouched), via the in-place butterfly.
inline StateVector hadamard_all(StateVector s) {
    const double h = 1.0 / std::sqrt(2.0);
    auto& a = s.amplitudes();
    const std::size_t stride0 = s.has_ancilla() ? 2 : 1;
    for (int q = 0; q < s.n(); ++q) {
        const std::size_t bit = stride0 << q;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i & bit) continue;
            const Amplitude u = a[i];
            const Amplitude v = a[i | bit];
            a[i] = h * (u + v);
            a[i | bit] = h * (u - v);
        }
    }
    return s;
}

inline void require_matching(const StateVector& s, const OracleSpec& o, const char* what) {
    if (o.n() != s.n()) {
        throw std::invalid_argument(std::string(what) + ": oracle n=" + std::to_string(o.n()) + " but state n=" +
                                    std::to_string(s.n()));
    }
}

inline StateVector apply_phase_oracle(StateVector s, const OracleSpec& o) {
    require_matching(s, o, "apply_phase_oracle");
    if (s.has_ancilla()) throw std::invalid_argument("apply_phase_oracle: expects a register without ancilla");
    auto& a = s.amplitudes();
    for (std::size_t x = 0; x < a.size(); ++x) {
        if (o(x)) a[x] = -a[x];
    }
    return s;
}

// |x>|y> -> |x>|y xor f(x)>
inline StateVector apply_oracle_with_ancilla(StateVector s, const OracleSpec& o) {
    require_matching(s, o, "apply_oracle_with_ancilla");
    if (!s.has_ancilla()) throw std::invalid_argument("apply_oracle_with_ancilla: state has no ancilla");
    auto& a = s.amplitudes();
    for (std::size_t x = 0; x < s.register_size(); ++x) {
        if (o(x)) std::swap(a[2 * x], a[2 * x + 1]);
    }
    return s;
}

// P(z) = |2^-n sum_x (-1)^(x.z + f(x))|^2, computed by running the circuit.
inline std::vector<double> dj_distribution(const OracleSpec& o) {
    auto s = hadamard_all(StateVector(o.n()));
    s = apply_phase_oracle(std::move(s), o);
    s = hadamard_all(std::move(s));
    std::vector<double> p(s.register_size());
    for (std::size_t z = 0; z < p.size(); ++z) p[z] = std::norm(s[z]);
    return p;
}

// Single-query DJ decision from the measured z.
inline OracleClass dj_decide(std::uint64_t measured_z) { return measured_z == 0 ? OracleClass::constant : OracleClass::balanced; }

// --- classical baselines -------------------------------------------------

inline std::uint64_t classical_dj_worst_case(int n) {
    if (n < 1) throw std::invalid_argument("classical_dj_worst_case: n must be >= 1");
    return (std::uint64_t{1} << (n - 1)) + 1;
}

// Adversary demo: given answers to queries at distinct points that all
// returned the same value, build a constant and a balanced oracle that both
// agree with them. Possible exactly when fewer than 2^(n-1)+1 queries were made.
struct DjAmbiguity {
    OracleSpec constant;
    OracleSpec balanced;
};

inline std::optional<DjAmbiguity> dj_adversary_completions(int n, const std::vector<std::uint64_t>& queried, int answer) {
    const std::size_t size = std::size_t{1} << n;
    if (queried.size() > size / 2) return std::nullopt;
    std::vector<std::uint8_t> is_queried(size, 0);
    for (auto x : queried) {
        if (x >= size) throw std::invalid_argument("dj_adversary_completions: query out of range");
        if (is_queried[x]) throw std::invalid_argument("dj_adversary_completions: repeated query");
        is_queried[x] = 1;
    }
    const auto bit = static_cast<std::uint8_t>(answer & 1);
    std::vector<std::uint8_t> balanced(size, bit ^ 1u);
    std::size_t same = 0;
    for (std::size_t x = 0; x < size; ++x) {
        if (is_queried[x]) {
            balanced[x] = bit;
            ++same;
        }
    }
    for (std::size_t x = 0; x < size && same < size / 2; ++x) {
        if (!is_queried[x]) {
            balanced[x] = bit;
            ++same;
        }
    }
    return DjAmbiguity{OracleSpec::constant(n, bit), OracleSpec(n, std::move(balanced), "balanced_completion")};
}

// Deterministic classical DJ: query x = 0, 1, 2, ... until two answers differ
// or 2^(n-1)+1 equal answers are seen. Returns the verdict and queries used.
inline std::pair<OracleClass, std::uint64_t> classical_dj_solve(const OracleSpec& o) {
    const int first = o(0);
    const std::uint64_t limit = classical_dj_worst_case(o.n());
    for (std::uint64_t q = 1; q < limit; ++q) {
        if (o(q) != first) return {OracleClass::balanced, q + 1};
    }
    return {OracleClass::constant, limit};
}

inline std::uint64_t classical_bv_queries(int n) {
    if (n < 1) throw std::invalid_argument("classical_bv_queries: n must be >= 1");
    return static_cast<std::uint64_t>(n);
}

// Query the unit vectors e_l; f_j(e_l) = j_l.
inline std::pair<BitString, std::uint64_t> classical_bv_recover(const OracleSpec& o) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(o.n()));
    for (int l = 0; l < o.n(); ++l) {
        const std::uint64_t unit = std::uint64_t{1} << (o.n() - 1 - l);
        bits[static_cast<std::size_t>(l)] = static_cast<std::uint8_t>(o(unit));
    }
    return {BitString(std::move(bits)), static_cast<std::uint64_t>(o.n())};
}

}  // namespace tbdj

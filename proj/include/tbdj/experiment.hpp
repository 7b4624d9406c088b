#pragma once

// Double-pass time-bin realization of Deutsch-Jozsa / Bernstein-Vazirani.
//
// Forward: a single pulse crosses n unbalanced MZIs (through ports chained,
// drop ports lost to isolators / an open pigtail), giving 2^n pulses at the
// mirror. Backward: the phase-modulated train re-crosses the MZIs in reverse
// order. Stage l is entered through port z_{l+1} (z_{n+1} = 0) and left
// through port z_l; port 1 of stage l feeds the delay line L_l. A pulse that
// took short/long (x_l) forward and short/long (y_l) backward in every stage
// arrives at
//
//     sum_l (x_l + y_l) * delta_l + sum_l z_l * L_l.
//
// The 2^n bins with x_l + y_l = 1 for all l carry the algorithm's output.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tbdj/components.hpp"
#include "tbdj/core.hpp"
#include "tbdj/oracles.hpp"

namespace tbdj {

struct Imperfections {
    double coupler_imbalance = 0.0;   // eps: input couplers at t0+eps, output couplers at t0-eps
    double phase_jitter_sigma = 0.0;  // rad, per long-arm traversal, independent forward/backward
    double visibility = 1.0;          // v: weight of cross terms between paths in an interference bin

    bool ideal() const { return coupler_imbalance == 0.0 && phase_jitter_sigma == 0.0 && visibility == 1.0; }
};

// Knob values that land the n=3 visibilities in the same band as the
// published measurements (about 97%).
inline Imperfections paper_like_preset() { return Imperfections{0.02, 0.15, 1.0}; }

struct StageCouplers {
    CouplerSpec in{};
    CouplerSpec out{};
};

struct ExperimentConfig {
    int n = 3;
    std::vector<BinIndex> deltas;
    std::vector<BinIndex> arm_Ls;
    std::vector<double> phis;
    std::vector<StageCouplers> couplers;
    bool lossless_routing = false;
    double final_coupler_transmittance = 0.5;
    Imperfections imperfections{};
    double unit_ns = 3.75;

    // delta_l = 2^(l-1); L_1 = 2*delta_n + 1, L_l = 2*L_{l-1} + 1; phases 0.
    static ExperimentConfig defaults(int n) {
        if (n < 1 || n > kMaxOracleQubits) throw std::invalid_argument("ExperimentConfig: n=" + std::to_string(n) + " out of range");
        ExperimentConfig c;
        c.n = n;
        for (int l = 0; l < n; ++l) c.deltas.push_back(BinIndex{1} << l);
        c.arm_Ls = default_arm_lengths(c.deltas);
        c.phis.assign(static_cast<std::size_t>(n), 0.0);
        c.couplers.assign(static_cast<std::size_t>(n), StageCouplers{});
        return c;
    }

    static std::vector<BinIndex> default_arm_lengths(const std::vector<BinIndex>& deltas) {
        std::vector<BinIndex> Ls;
        if (deltas.empty()) return Ls;
        Ls.push_back(2 * deltas.back() + 1);
        for (std::size_t l = 1; l < deltas.size(); ++l) Ls.push_back(2 * Ls.back() + 1);
        return Ls;
    }

    // Stage l (0-based) with the coupler imbalance folded in.
    MziSpec stage(int l) const {
        const auto& c = couplers.at(static_cast<std::size_t>(l));
        MziSpec s;
        s.delta = deltas.at(static_cast<std::size_t>(l));
        s.phi = phis.at(static_cast<std::size_t>(l));
        s.in_coupler = c.in;
        s.out_coupler = c.out;
        s.in_coupler.transmittance += imperfections.coupler_imbalance;
        s.out_coupler.transmittance -= imperfections.coupler_imbalance;
        return s;
    }

    // Delay line on port 1 of stage l. L_1 leads to the detector and has no isolator.
    OutputArmSpec arm(int l) const { return OutputArmSpec{arm_Ls.at(static_cast<std::size_t>(l)), l > 0}; }

    BinIndex interference_offset() const {
        BinIndex s = 0;
        for (auto d : deltas) s += d;
        return s;
    }

    double final_coupler_factor() const { return lossless_routing ? 1.0 : final_coupler_transmittance; }
};

// Long-arm phases actually used on each pass.
struct ArmPhases {
    std::vector<double> forward;
    std::vector<double> backward;
};

inline ArmPhases nominal_phases(const ExperimentConfig& c) { return ArmPhases{c.phis, c.phis}; }

// ---------------------------------------------------------------------------
// Validation

struct ConfigViolation {
    enum class Kind { structure, interference_collision, ambiguous_interference_offset, inequality };
    Kind kind;
    std::string message;
};

inline const char* to_string(ConfigViolation::Kind k) {
    switch (k) {
        case ConfigViolation::Kind::structure: return "structure";
        case ConfigViolation::Kind::interference_collision: return "interference_collision";
        case ConfigViolation::Kind::ambiguous_interference_offset: return "ambiguous_interference_offset";
        case ConfigViolation::Kind::inequality: return "inequality";
    }
    return "?";
}

inline BinIndex arrival_time(const ExperimentConfig& c, BinIndex offset, std::uint64_t z_physical) {
    BinIndex t = offset;
    for (int l = 0; l < c.n; ++l) {
        if ((z_physical >> (c.n - 1 - l)) & 1u) t += c.arm_Ls[static_cast<std::size_t>(l)];
    }
    return t;
}

// Every achievable offset sum_l s_l*delta_l (s_l = x_l + y_l in {0,1,2}),
// mapped to how many distinct s-vectors produce it and whether s = (1,...,1)
// is among them.
struct OffsetInfo {
    std::size_t s_vectors = 0;
    bool all_ones = false;
};

inline std::map<BinIndex, OffsetInfo> achievable_offsets(const ExperimentConfig& c) {
    std::map<BinIndex, OffsetInfo> out;
    std::vector<int> s(static_cast<std::size_t>(c.n), 0);
    while (true) {
        BinIndex off = 0;
        bool ones = true;
        for (int l = 0; l < c.n; ++l) {
            off += s[static_cast<std::size_t>(l)] * c.deltas[static_cast<std::size_t>(l)];
            ones = ones && s[static_cast<std::size_t>(l)] == 1;
        }
        auto& info = out[off];
        ++info.s_vectors;
        info.all_ones = info.all_ones || ones;
        int l = 0;
        while (l < c.n && s[static_cast<std::size_t>(l)] == 2) s[static_cast<std::size_t>(l++)] = 0;
        if (l == c.n) break;
        ++s[static_cast<std::size_t>(l)];
    }
    return out;
}

inline std::vector<ConfigViolation> validate_config(const ExperimentConfig& c) {
    using K = ConfigViolation::Kind;
    std::vector<ConfigViolation> v;
    const auto n = static_cast<std::size_t>(c.n);
    if (c.n < 1 || c.n > kMaxOracleQubits) {
        v.push_back({K::structure, "n=" + std::to_string(c.n) + " outside [1," + std::to_string(kMaxOracleQubits) + "]"});
        return v;
    }
    if (c.deltas.size() != n) v.push_back({K::structure, "deltas: expected " + std::to_string(n) + " values"});
    if (c.arm_Ls.size() != n) v.push_back({K::structure, "arm_Ls: expected " + std::to_string(n) + " values"});
    if (c.phis.size() != n) v.push_back({K::structure, "phis: expected " + std::to_string(n) + " values"});
    if (c.couplers.size() != n) v.push_back({K::structure, "couplers: expected " + std::to_string(n) + " stages"});
    if (!v.empty()) return v;

    for (std::size_t l = 0; l < n; ++l) {
        const auto tag = std::to_string(l + 1);
        if (c.deltas[l] < 1) v.push_back({K::structure, "deltas[" + tag + "] must be >= 1"});
        if (c.arm_Ls[l] < 0) v.push_back({K::structure, "arm_Ls[" + tag + "] must be >= 0"});
        if (!(c.phis[l] >= 0.0 && c.phis[l] < 2.0 * kPi)) v.push_back({K::structure, "phis[" + tag + "] outside [0, 2pi)"});
        for (const auto* cs : {&c.couplers[l].in, &c.couplers[l].out}) {
            for (double t : {cs->transmittance + c.imperfections.coupler_imbalance, cs->transmittance - c.imperfections.coupler_imbalance}) {
                if (!(t >= 0.0 && t <= 1.0)) v.push_back({K::structure, "stage " + tag + ": coupler transmittance outside [0,1]"});
            }
            if (!(cs->excess_loss >= 0.0 && cs->excess_loss <= 1.0)) {
                v.push_back({K::structure, "stage " + tag + ": excess_loss outside [0,1]"});
            }
        }
    }
    if (!(c.final_coupler_transmittance >= 0.0 && c.final_coupler_transmittance <= 1.0)) {
        v.push_back({K::structure, "final_coupler_transmittance outside [0,1]"});
    }
    const auto& imp = c.imperfections;
    if (!(imp.phase_jitter_sigma >= 0.0) || !std::isfinite(imp.phase_jitter_sigma)) v.push_back({K::structure, "imperfections.sigma_phi must be >= 0"});
    if (!(imp.visibility >= 0.0 && imp.visibility <= 1.0)) v.push_back({K::structure, "imperfections.v outside [0,1]"});
    if (!std::isfinite(imp.coupler_imbalance)) v.push_back({K::structure, "imperfections.eps must be finite"});
    if (!v.empty()) return v;

    const auto offsets = achievable_offsets(c);
    const BinIndex target = c.interference_offset();
    const auto& info = offsets.at(target);
    if (info.s_vectors != 1) {
        v.push_back({K::ambiguous_interference_offset, "interference offset " + std::to_string(target) + " is reached by " +
                                                           std::to_string(info.s_vectors - 1) +
                                                           " non-interfering delay combination(s)"});
    }

    const std::uint64_t exits = std::uint64_t{1} << c.n;
    std::map<BinIndex, std::uint64_t> interference_times;
    for (std::uint64_t z = 0; z < exits; ++z) {
        const auto t = arrival_time(c, target, z);
        auto [it, inserted] = interference_times.emplace(t, z);
        if (!inserted) {
            v.push_back({K::interference_collision, "outputs z=" + BitString::from_index(it->second, c.n).str() + " and z=" +
                                                        BitString::from_index(z, c.n).str() + " share arrival time " +
                                                        std::to_string(t)});
        }
    }
    for (const auto& [off, oi] : offsets) {
        if (off == target) continue;
        for (std::uint64_t z = 0; z < exits; ++z) {
            const auto t = arrival_time(c, off, z);
            auto it = interference_times.find(t);
            if (it != interference_times.end()) {
                v.push_back({K::interference_collision, "filtered pulse (offset " + std::to_string(off) + ", z=" +
                                                            BitString::from_index(z, c.n).str() + ") lands on output z=" +
                                                            BitString::from_index(it->second, c.n).str() + " at time " +
                                                            std::to_string(t)});
            }
        }
    }

    // Sufficient spacing: L_1 > 2*delta_n and L_l > 2*L_{l-1}.
    if (!(c.arm_Ls[0] > 2 * c.deltas[n - 1])) {
        v.push_back({K::inequality, "L_1=" + std::to_string(c.arm_Ls[0]) + " must exceed 2*delta_" + std::to_string(n) +
                                        "=" + std::to_string(2 * c.deltas[n - 1])});
    }
    for (std::size_t l = 1; l < n; ++l) {
        if (!(c.arm_Ls[l] > 2 * c.arm_Ls[l - 1])) {
            v.push_back({K::inequality, "L_" + std::to_string(l + 1) + "=" + std::to_string(c.arm_Ls[l]) + " must exceed 2*L_" +
                                            std::to_string(l) + "=" + std::to_string(2 * c.arm_Ls[l - 1])});
        }
    }
    return v;
}

// Timing of the filtered pulses: these may share detector slots without
// affecting the output bins.
struct TimingSummary {
    std::size_t pulse_slots = 0;          // (offset, z) pairs
    std::size_t distinct_arrival_times = 0;
    std::size_t filtered_collisions = 0;  // slots sharing a time with another slot
};

inline TimingSummary timing_summary(const ExperimentConfig& c) {
    TimingSummary s;
    std::map<BinIndex, std::size_t> per_time;
    for (const auto& [off, info] : achievable_offsets(c)) {
        for (std::uint64_t z = 0; z < (std::uint64_t{1} << c.n); ++z) {
            ++per_time[arrival_time(c, off, z)];
            ++s.pulse_slots;
        }
    }
    s.distinct_arrival_times = per_time.size();
    for (const auto& [t, count] : per_time) {
        if (count > 1) s.filtered_collisions += count;
    }
    return s;
}

class InvalidConfig : public std::invalid_argument {
public:
    explicit InvalidConfig(std::vector<ConfigViolation> violations)
        : std::invalid_argument(summarize(violations)), violations_(std::move(violations)) {}
    const std::vector<ConfigViolation>& violations() const { return violations_; }

private:
    static std::string summarize(const std::vector<ConfigViolation>& v) {
        std::string s = "invalid experiment config";
        for (const auto& e : v) s += "; " + e.message;
        return s;
    }
    std::vector<ConfigViolation> violations_;
};

inline void require_valid(const ExperimentConfig& c) {
    auto v = validate_config(c);
    if (!v.empty()) throw InvalidConfig(std::move(v));
}

inline void require_phases(const ExperimentConfig& c, const ArmPhases& p) {
    if (p.forward.size() != static_cast<std::size_t>(c.n) || p.backward.size() != static_cast<std::size_t>(c.n)) {
        throw std::invalid_argument("ArmPhases: expected " + std::to_string(c.n) + " phases per pass");
    }
}

// ---------------------------------------------------------------------------
// Propagation

inline TimeBinState forward_pass_unchecked(const ExperimentConfig& c, const ArmPhases& phases) {
    TimeBinState state(c.n, c.unit_ns);
    state.add(0, 1.0);
    for (int l = 0; l < c.n; ++l) {
        auto spec = c.stage(l);
        spec.phi = phases.forward[static_cast<std::size_t>(l)];
        auto [through, drop] = mzi_forward(state, spec);
        // Drop port: into the isolated delay line of the next stage, or the open
        // pigtail after the last stage. Either way it never comes back.
        if (l + 1 < c.n) (void)pass_output_arm(drop, c.arm(l + 1));
        state = std::move(through);
    }
    return state;
}

inline TimeBinState forward_pass(const ExperimentConfig& c, const ArmPhases& phases) {
    require_valid(c);
    require_phases(c, phases);
    return forward_pass_unchecked(c, phases);
}

inline TimeBinState forward_pass(const ExperimentConfig& c) { return forward_pass(c, nominal_phases(c)); }

// Bin position of each oracle input x: sum_l x_l * delta_l.
inline std::vector<BinIndex> oracle_bins(const ExperimentConfig& c) {
    std::vector<BinIndex> bins(std::size_t{1} << c.n);
    for (std::uint64_t x = 0; x < bins.size(); ++x) bins[x] = bitstring_to_bin(BitString::from_index(x, c.n), c.deltas);
    return bins;
}

// Phase modulator after the mirror: 0 or pi on the pulse for input x.
inline TimeBinState apply_oracle_modulation(TimeBinState state, const OracleSpec& oracle, const ExperimentConfig& c) {
    if (oracle.n() != c.n) {
        throw std::invalid_argument("apply_oracle_modulation: oracle has n=" + std::to_string(oracle.n()) + ", setup has n=" +
                                    std::to_string(c.n));
    }
    const auto bins = oracle_bins(c);
    std::map<BinIndex, int> sign_of;
    for (std::uint64_t x = 0; x < bins.size(); ++x) sign_of[bins[x]] = oracle(x);
    for (auto& [bin, a] : state.mutable_bins()) {
        auto it = sign_of.find(bin);
        if (it == sign_of.end()) throw std::invalid_argument("apply_oracle_modulation: pulse at bin " + std::to_string(bin) + " outside the oracle window");
        if (it->second) a = -a;
    }
    return state;
}

struct PropagationResult {
    int n = 0;
    BinIndex interference_offset = 0;
    // by_exit[z] holds the pulses leaving through exit arms z (physical index,
    // z_1 most significant), keyed by offset sum_l (x_l + y_l) * delta_l.
    std::vector<TimeBinState> by_exit;
    std::map<BitString, Amplitude> interference;
    double discarded_power = 0.0;

    std::size_t occupied_bins() const {
        std::size_t k = 0;
        for (const auto& s : by_exit) k += s.occupied();
        return k;
    }

    double total_power() const {
        double p = 0.0;
        for (const auto& s : by_exit) p += total_probability(s);
        return p;
    }

    double interference_power() const {
        double p = 0.0;
        for (const auto& [z, a] : interference) p += std::norm(a);
        return p;
    }

    // What the detector sees: all pulses on one absolute time axis.
    TimeBinState detector_trace(const ExperimentConfig& c) const {
        TimeBinState trace(c.n, c.unit_ns);
        trace.set_direction(Direction::backward);
        for (std::uint64_t z = 0; z < by_exit.size(); ++z) {
            for (const auto& [off, a] : by_exit[z].bins()) trace.add(arrival_time(c, off, z), a);
        }
        return trace;
    }
};

inline std::map<BitString, Amplitude> extract_interference_bins(const PropagationResult& r, const ExperimentConfig& c) {
    std::map<BitString, Amplitude> out;
    const BinIndex target = c.interference_offset();
    for (std::uint64_t z = 0; z < r.by_exit.size(); ++z) out[BitString::from_index(z, c.n)] = r.by_exit[z].at(target);
    return out;
}

inline PropagationResult backward_pass_unchecked(const TimeBinState& modulated, const ExperimentConfig& c,
                                                 const ArmPhases& phases) {
    const int n = c.n;
    TimeBinState entry = modulated;
    entry.set_direction(Direction::backward);
    // Exit-arm suffixes z_{l..n}, indexed with the full physical-z bit layout.
    std::vector<TimeBinState> by_suffix(std::size_t{1} << n, entry.empty_like());
    std::vector<std::uint8_t> live(by_suffix.size(), 0);
    by_suffix[0] = entry;
    live[0] = 1;
    for (int l = n - 1; l >= 0; --l) {
        const auto spec = c.stage(l);
        const int own_bit = n - 1 - l;
        std::vector<TimeBinState> next(by_suffix.size(), entry.empty_like());
        std::vector<std::uint8_t> next_live(by_suffix.size(), 0);
        for (std::uint64_t s = 0; s < by_suffix.size(); ++s) {
            if (!live[s]) continue;
            const int entry_port = (l + 1 < n) ? static_cast<int>((s >> (own_bit - 1)) & 1u) : 0;
            auto out = mzi_backward(by_suffix[s], spec, entry_port, phases.backward[static_cast<std::size_t>(l)]);
            const std::uint64_t s1 = s | (std::uint64_t{1} << own_bit);
            next[s] = std::move(out.port0);
            next[s1] = pass_output_arm(out.port1, c.arm(l));
            next_live[s] = next_live[s1] = 1;
        }
        by_suffix = std::move(next);
        live = std::move(next_live);
    }

    PropagationResult r;
    r.n = n;
    r.interference_offset = c.interference_offset();
    r.by_exit = std::move(by_suffix);
    r.interference = extract_interference_bins(r, c);
    r.discarded_power = r.total_power() - r.interference_power();
    return r;
}

inline PropagationResult backward_pass(const TimeBinState& modulated, const ExperimentConfig& c, const ArmPhases& phases) {
    require_valid(c);
    require_phases(c, phases);
    return backward_pass_unchecked(modulated, c, phases);
}

inline PropagationResult backward_pass(const TimeBinState& modulated, const ExperimentConfig& c) {
    return backward_pass(modulated, c, nominal_phases(c));
}

// Full forward -> mirror -> modulator -> backward chain.
inline PropagationResult propagate(const ExperimentConfig& c, const OracleSpec& oracle, const ArmPhases& phases) {
    require_valid(c);
    require_phases(c, phases);
    auto fwd = forward_pass_unchecked(c, phases);
    auto at_modulator = faraday_reflect(std::move(fwd));
    auto modulated = apply_oracle_modulation(std::move(at_modulator), oracle, c);
    return backward_pass_unchecked(modulated, c, phases);
}

inline PropagationResult propagate(const ExperimentConfig& c, const OracleSpec& oracle) {
    return propagate(c, oracle, nominal_phases(c));
}

// ---------------------------------------------------------------------------
// Output relabeling and ideal runs

// z'_l = z_l xor z_{l+1}, z_{n+1} = 0.
inline BitString relabel_physical_to_logical(const BitString& z) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(z.size()));
    for (int l = 0; l < z.size(); ++l) {
        const std::uint8_t next = (l + 1 < z.size()) ? z[l + 1] : 0;
        out[static_cast<std::size_t>(l)] = z[l] ^ next;
    }
    return BitString(std::move(out));
}

// z_l = z'_l xor z'_{l+1} xor ... xor z'_n
inline BitString relabel_logical_to_physical(const BitString& logical) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(logical.size()));
    std::uint8_t acc = 0;
    for (int l = logical.size() - 1; l >= 0; --l) {
        acc ^= logical[l];
        out[static_cast<std::size_t>(l)] = acc;
    }
    return BitString(std::move(out));
}

// Outcome distribution over logical z, renormalized over the output bins.
inline std::vector<double> logical_distribution(const PropagationResult& r) {
    std::vector<double> p(std::size_t{1} << r.n, 0.0);
    double total = 0.0;
    for (const auto& [z, a] : r.interference) {
        p[relabel_physical_to_logical(z).index()] = std::norm(a);
        total += std::norm(a);
    }
    if (total <= 0.0) throw std::runtime_error("logical_distribution: no light in the output bins");
    for (auto& v : p) v /= total;
    return p;
}

inline std::vector<double> run_with_phases(const ExperimentConfig& c, const OracleSpec& oracle, const ArmPhases& phases) {
    return logical_distribution(propagate(c, oracle, phases));
}

// Nominal optics: imperfection knobs are ignored.
inline std::vector<double> run_ideal(const ExperimentConfig& c, const OracleSpec& oracle) {
    ExperimentConfig ideal = c;
    ideal.imperfections = Imperfections{};
    return logical_distribution(propagate(ideal, oracle));
}

struct LossBudget {
    double forward = 1.0;                // power reaching the mirror
    double interference_fraction = 1.0;  // share of returning power in output bins
    double final_coupler = 1.0;
    double total() const { return forward * interference_fraction * final_coupler; }
};

inline LossBudget loss_budget(const ExperimentConfig& c, const OracleSpec& oracle) {
    if (c.lossless_routing) return LossBudget{};
    require_valid(c);
    const auto phases = nominal_phases(c);
    const auto fwd = forward_pass_unchecked(c, phases);
    const double forward_power = total_probability(fwd);
    const auto r = backward_pass_unchecked(apply_oracle_modulation(faraday_reflect(fwd), oracle, c), c, phases);
    LossBudget b;
    b.forward = forward_power;
    b.interference_fraction = forward_power > 0.0 ? r.interference_power() / forward_power : 0.0;
    b.final_coupler = c.final_coupler_factor();
    return b;
}

// Probability that a photon leaving the source is counted in an output bin.
inline double throughput(const ExperimentConfig& c, const OracleSpec& oracle) { return loss_budget(c, oracle).total(); }

// ---------------------------------------------------------------------------
// Per-path interference kernel

// Output-bin amplitudes as explicit path sums. coefficient(z, x) is the
// amplitude of the unique output path through z whose forward pass took
// arms x (and backward arms y = not x), with all arm phases set to zero.
// Arm phases then enter as exp(i * sum_l [x_l phi_fwd_l + (1 - x_l) phi_bwd_l]).
// Built from the component-level propagation, one forward pulse at a time.
class InterferenceKernel {
public:
    explicit InterferenceKernel(const ExperimentConfig& c) : n_(c.n), size_(std::size_t{1} << c.n) {
        require_valid(c);
        ArmPhases zero{std::vector<double>(size_t(n_), 0.0), std::vector<double>(size_t(n_), 0.0)};
        const auto fwd = forward_pass_unchecked(c, zero);
        forward_power_ = total_probability(fwd);
        const auto bins = oracle_bins(c);
        coeff_.assign(size_ * size_, Amplitude{});
        for (std::uint64_t x = 0; x < size_; ++x) {
            TimeBinState single = fwd.empty_like();
            single.add(bins[x], fwd.at(bins[x]));
            const auto r = backward_pass_unchecked(faraday_reflect(std::move(single)), c, zero);
            for (std::uint64_t z = 0; z < size_; ++z) coeff_[z * size_ + x] = r.by_exit[z].at(c.interference_offset());
        }
        logical_of_.resize(size_);
        for (std::uint64_t z = 0; z < size_; ++z) logical_of_[z] = relabel_physical_to_logical(BitString::from_index(z, n_)).index();
    }

    int n() const { return n_; }
    std::size_t outputs() const { return size_; }
    double forward_power() const { return forward_power_; }
    Amplitude coefficient(std::uint64_t z_physical, std::uint64_t x) const { return coeff_[z_physical * size_ + x]; }
    std::uint64_t logical_index(std::uint64_t z_physical) const { return logical_of_[z_physical]; }

    // exp(i theta_x) for every x.
    std::vector<Amplitude> path_phases(const ArmPhases& p) const {
        std::vector<Amplitude> w(size_);
        path_phases_into(p.forward, p.backward, w);
        return w;
    }

    void path_phases_into(std::span<const double> fwd, std::span<const double> bwd, std::span<Amplitude> out) const {
        for (std::uint64_t x = 0; x < size_; ++x) {
            double theta = 0.0;
            for (int l = 0; l < n_; ++l) {
                const bool long_forward = (x >> (n_ - 1 - l)) & 1u;
                theta += long_forward ? fwd[static_cast<std::size_t>(l)] : bwd[static_cast<std::size_t>(l)];
            }
            out[x] = std::polar(1.0, theta);
        }
    }

    // Pre-final-coupler power in each output bin, indexed by logical z.
    // Cross terms between distinct paths are weighted by `v`.
    std::vector<double> bin_powers(const OracleSpec& oracle, const ArmPhases& phases, double v) const {
        std::vector<double> out(size_);
        const auto w = path_phases(phases);
        bin_powers_into(signed_coefficients(oracle), w, v, out);
        return out;
    }

    // coeff * (-1)^f(x), laid out [z_physical][x].
    std::vector<Amplitude> signed_coefficients(const OracleSpec& oracle) const {
        if (oracle.n() != n_) throw std::invalid_argument("InterferenceKernel: oracle n mismatch");
        std::vector<Amplitude> s(coeff_);
        for (std::uint64_t z = 0; z < size_; ++z) {
            for (std::uint64_t x = 0; x < size_; ++x) {
                if (oracle(x)) s[z * size_ + x] = -s[z * size_ + x];
            }
        }
        return s;
    }

    void bin_powers_into(std::span<const Amplitude> signed_coeff, std::span<const Amplitude> w, double v,
                         std::span<double> out) const {
        for (std::uint64_t z = 0; z < size_; ++z) {
            Amplitude sum{};
            double incoherent = 0.0;
            for (std::uint64_t x = 0; x < size_; ++x) {
                const Amplitude a = signed_coeff[z * size_ + x] * w[x];
                sum += a;
                incoherent += std::norm(a);
            }
            out[logical_of_[z]] = v * std::norm(sum) + (1.0 - v) * incoherent;
        }
    }

    // Mean bin power when every long-arm traversal gets an independent
    // N(0, sigma^2) phase: the cross term between paths x, x' is damped by
    // exp(-sigma^2 * hamming(x, x')).
    std::vector<double> expected_bin_powers(const OracleSpec& oracle, const ArmPhases& nominal, double sigma, double v) const {
        const auto s = signed_coefficients(oracle);
        const auto w = path_phases(nominal);
        std::vector<double> damping(static_cast<std::size_t>(n_) + 1);
        for (int d = 0; d <= n_; ++d) damping[static_cast<std::size_t>(d)] = std::exp(-sigma * sigma * d);
        std::vector<double> out(size_);
        for (std::uint64_t z = 0; z < size_; ++z) {
            double p = 0.0;
            for (std::uint64_t x = 0; x < size_; ++x) {
                const Amplitude ax = s[z * size_ + x] * w[x];
                p += std::norm(ax);
                for (std::uint64_t x2 = x + 1; x2 < size_; ++x2) {
                    const Amplitude ax2 = s[z * size_ + x2] * w[x2];
                    const auto d = static_cast<std::size_t>(__builtin_popcountll(x ^ x2));
                    p += 2.0 * v * damping[d] * (ax * std::conj(ax2)).real();
                }
            }
            out[logical_of_[z]] = p;
        }
        return out;
    }

private:
    int n_;
    std::size_t size_;
    double forward_power_ = 0.0;
    std::vector<Amplitude> coeff_;
    std::vector<std::uint64_t> logical_of_;
};

}  // namespace tbdj

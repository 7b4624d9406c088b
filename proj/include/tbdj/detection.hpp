#pragma once

// Gated threshold detection of the output bins and the visibility estimator.
//
// Photon number per pulse is Poissonian, so a gate holding mean photon number
// m clicks with probability 1 - (1 - p_dark) * exp(-eta * m). Every output bin
// gets one gate per run and clicks independently.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tbdj/experiment.hpp"
#include "tbdj/oracles.hpp"

namespace tbdj {

struct SourceModel {
    double mu_at_modulator = 50.0;  // mean photons per pulse entering the phase modulator

    // Operating points used in the lab: ~20 photons/pulse in 4 dimensions, ~50 in 8.
    static SourceModel defaults(int n) { return SourceModel{n <= 2 ? 20.0 : 50.0}; }

    void validate() const {
        if (!(mu_at_modulator >= 0.0) || !std::isfinite(mu_at_modulator)) {
            throw std::invalid_argument("SourceModel: mu must be finite and >= 0");
        }
    }
};

struct DetectorModel {
    double efficiency = 0.105;
    double dark_rate_per_ns = 1e-4;
    double gate_ns = 5.0;

    double dark_click_probability() const { return 1.0 - std::exp(-dark_rate_per_ns * gate_ns); }

    double click_probability(double mean_photons) const {
        return 1.0 - (1.0 - dark_click_probability()) * std::exp(-efficiency * mean_photons);
    }

    void validate() const {
        if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("DetectorModel: efficiency outside [0,1]");
        if (!(dark_rate_per_ns >= 0.0) || !std::isfinite(dark_rate_per_ns)) {
            throw std::invalid_argument("DetectorModel: dark_rate_per_ns must be finite and >= 0");
        }
        if (!(gate_ns > 0.0) || !std::isfinite(gate_ns)) throw std::invalid_argument("DetectorModel: gate_ns must be > 0");
    }
};

// Mean photon number reaching each output bin, indexed by logical z.
// mu * 2^n photons pass the modulator; bin z receives the fraction
// T(z) = P(z) / P_modulator of them (times the final coupler).
class ClickModel {
public:
    ClickModel(const ExperimentConfig& config, SourceModel source, DetectorModel detector)
        : config_(config), kernel_(config), source_(source), detector_(detector) {
        source_.validate();
        detector_.validate();
        photons_at_modulator_ = source_.mu_at_modulator * static_cast<double>(std::uint64_t{1} << config_.n);
    }

    const ExperimentConfig& config() const { return config_; }
    const InterferenceKernel& kernel() const { return kernel_; }
    const SourceModel& source() const { return source_; }
    const DetectorModel& detector() const { return detector_; }

    // Scale from pre-final-coupler bin power to mean photon number.
    double photons_per_unit_power(std::span<const double> powers) const {
        if (config_.lossless_routing) {
            double total = 0.0;
            for (double p : powers) total += p;
            return total > 0.0 ? photons_at_modulator_ / total : 0.0;
        }
        return photons_at_modulator_ * config_.final_coupler_factor() / kernel_.forward_power();
    }

    std::vector<double> mean_photons_from_powers(std::vector<double> powers) const {
        const double scale = photons_per_unit_power(powers);
        for (auto& p : powers) p *= scale;
        return powers;
    }

    std::vector<double> click_probabilities_from_powers(const std::vector<double>& powers) const {
        auto m = mean_photons_from_powers(powers);
        for (auto& v : m) v = detector_.click_probability(v);
        return m;
    }

    // Nominal phases, no jitter.
    std::vector<double> click_probabilities(const OracleSpec& oracle) const {
        return click_probabilities_from_powers(
            kernel_.bin_powers(oracle, nominal_phases(config_), config_.imperfections.visibility));
    }

    // Closed form with phase jitter folded into damped cross terms.
    std::vector<double> expected_click_probabilities(const OracleSpec& oracle) const {
        return click_probabilities_from_powers(kernel_.expected_bin_powers(
            oracle, nominal_phases(config_), config_.imperfections.phase_jitter_sigma, config_.imperfections.visibility));
    }

private:
    ExperimentConfig config_;
    InterferenceKernel kernel_;
    SourceModel source_;
    DetectorModel detector_;
    double photons_at_modulator_ = 0.0;
};

// mu that makes the constructive bin of f_0 click with probability `target`.
inline double mu_for_click_probability(double target, const ExperimentConfig& config, const DetectorModel& detector) {
    const double pd = detector.dark_click_probability();
    if (!(target > pd && target < 1.0)) throw std::invalid_argument("mu_for_click_probability: target must lie in (p_dark, 1)");
    if (detector.efficiency <= 0.0) throw std::invalid_argument("mu_for_click_probability: zero efficiency");
    const ClickModel unit(config, SourceModel{1.0}, detector);
    const auto powers = unit.kernel().bin_powers(OracleSpec::constant(config.n, 0), nominal_phases(config), 1.0);
    const double photons_per_mu = unit.mean_photons_from_powers(powers)[0];
    const double needed = -std::log((1.0 - target) / (1.0 - pd)) / detector.efficiency;
    return needed / photons_per_mu;
}

// Photons per pulse the source must emit so that `mu` per pulse reach the
// modulator (before any attenuator).
inline double source_photons_per_pulse(double mu_at_modulator, const ExperimentConfig& config) {
    const InterferenceKernel k(config);
    return mu_at_modulator * static_cast<double>(std::uint64_t{1} << config.n) / k.forward_power();
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct CountHistogram {
    int n = 0;
    std::uint64_t runs = 0;
    std::vector<std::uint64_t> counts;  // indexed by logical z
    std::string oracle_label;
};

struct SimulationOptions {
    unsigned threads = 0;              // 0: hardware concurrency
    std::uint64_t chunk_runs = 8192;   // fixed partition; results do not depend on threads
    std::uint64_t stream = 0;          // independent sub-stream id (e.g. oracle index)
};

namespace detail {

inline std::mt19937_64 chunk_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
    return std::mt19937_64(seq);
}

template <typename Fn>
void for_each_chunk(std::uint64_t chunks, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(chunks, 1)));
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t c = next++; c < chunks; c = next++) fn(c);
    };
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace detail

inline CountHistogram simulate_counts(const ClickModel& model, const OracleSpec& oracle, std::uint64_t runs,
                                      std::uint64_t seed, const SimulationOptions& opt = {}) {
    if (runs < 1) throw std::invalid_argument("simulate_counts: runs must be >= 1");
    if (opt.chunk_runs < 1) throw std::invalid_argument("simulate_counts: chunk_runs must be >= 1");
    const auto& cfg = model.config();
    const auto& kernel = model.kernel();
    const std::size_t outputs = kernel.outputs();
    const double sigma = cfg.imperfections.phase_jitter_sigma;
    const double v = cfg.imperfections.visibility;
    const auto fixed_p = model.click_probabilities(oracle);
    const auto signed_coeff = kernel.signed_coefficients(oracle);
    const auto nominal = nominal_phases(cfg);

    const std::uint64_t chunks = (runs + opt.chunk_runs - 1) / opt.chunk_runs;
    std::vector<std::vector<std::uint64_t>> per_chunk(chunks, std::vector<std::uint64_t>(outputs, 0));

    detail::for_each_chunk(chunks, opt.threads, [&](std::uint64_t chunk) {
        auto rng = detail::chunk_engine(seed, opt.stream, chunk);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::normal_distribution<double> jitter(0.0, sigma > 0.0 ? sigma : 1.0);
        const std::uint64_t begin = chunk * opt.chunk_runs;
        const std::uint64_t end = std::min(runs, begin + opt.chunk_runs);
        auto& counts = per_chunk[chunk];
        std::vector<double> fwd(nominal.forward), bwd(nominal.backward);
        std::vector<Amplitude> w(outputs);
        std::vector<double> powers(outputs);
        std::vector<double> p = fixed_p;
        for (std::uint64_t run = begin; run < end; ++run) {
            if (sigma > 0.0) {
                for (std::size_t l = 0; l < fwd.size(); ++l) fwd[l] = nominal.forward[l] + jitter(rng);
                for (std::size_t l = 0; l < bwd.size(); ++l) bwd[l] = nominal.backward[l] + jitter(rng);
                kernel.path_phases_into(fwd, bwd, w);
                kernel.bin_powers_into(signed_coeff, w, v, powers);
                p = model.click_probabilities_from_powers(powers);
            }
            for (std::size_t z = 0; z < outputs; ++z) counts[z] += uniform(rng) < p[z] ? 1u : 0u;
        }
    });

    CountHistogram h;
    h.n = cfg.n;
    h.runs = runs;
    h.counts.assign(outputs, 0);
    h.oracle_label = oracle.label();
    for (const auto& c : per_chunk) {
        for (std::size_t z = 0; z < outputs; ++z) h.counts[z] += c[z];
    }
    return h;
}

inline CountHistogram simulate_counts(const ExperimentConfig& config, const OracleSpec& oracle, const SourceModel& source,
                                      const DetectorModel& detector, std::uint64_t runs, std::uint64_t seed,
                                      const SimulationOptions& opt = {}) {
    return simulate_counts(ClickModel(config, source, detector), oracle, runs, seed, opt);
}

// ---------------------------------------------------------------------------
// Visibility

// Half-sum of the contrasts of the constructive counts for f_z and its
// complement against the count of oracle f_j in the same bin. nullopt when a
// denominator vanishes.
inline std::optional<double> visibility_pairwise(double n_zz, double n_jz, double nbar_zz) {
    const double d1 = n_zz + n_jz;
    const double d2 = nbar_zz + n_jz;
    if (!(d1 > 0.0) || !(d2 > 0.0)) return std::nullopt;
    return 0.5 * ((n_zz - n_jz) / d1 + (nbar_zz - n_jz) / d2);
}

struct VisibilityEntry {
    double V = 0.0;
    double stderr_ = 0.0;
    int terms = 0;  // number of j with a defined V_j(z)
    bool defined() const { return terms > 0; }
};

struct VisibilityReport {
    int n = 0;
    std::vector<VisibilityEntry> per_bin;  // indexed by logical z
};

// Counts for the BV family, ordered as enumerate_bv_family: f_0..f_{N-1}, fbar_0..fbar_{N-1}.
// `variance(k, z)` is the variance attributed to count k at bin z; the reported
// stderr is the first-order propagation through the estimator.
template <typename CountFn, typename VarFn>
VisibilityReport visibility_from(int n, CountFn&& count, VarFn&& variance) {
    const std::uint64_t N = std::uint64_t{1} << n;
    VisibilityReport rep;
    rep.n = n;
    rep.per_bin.resize(N);
    for (std::uint64_t z = 0; z < N; ++z) {
        const double a = count(z, z);          // N_z(z)
        const double b = count(N + z, z);      // Nbar_z(z)
        double sum = 0.0;
        double dA = 0.0, dB = 0.0, var_d = 0.0;
        int terms = 0;
        for (std::uint64_t j = 0; j < N; ++j) {
            if (j == z) continue;
            const double d = count(j, z);
            const auto vj = visibility_pairwise(a, d, b);
            if (!vj) continue;
            ++terms;
            sum += *vj;
            // g(p, q) = (p - q) / (p + q): dg/dp = 2q/(p+q)^2, dg/dq = -2p/(p+q)^2
            const double ad = (a + d) * (a + d);
            const double bd = (b + d) * (b + d);
            dA += 0.5 * 2.0 * d / ad;
            dB += 0.5 * 2.0 * d / bd;
            const double dD = 0.5 * (-2.0 * a / ad - 2.0 * b / bd);
            var_d += dD * dD * variance(j, z);
        }
        auto& e = rep.per_bin[z];
        e.terms = terms;
        if (terms == 0) continue;
        const double m = terms;
        e.V = sum / m;
        const double var = (dA * dA * variance(z, z) + dB * dB * variance(N + z, z) + var_d) / (m * m);
        e.stderr_ = std::sqrt(std::max(0.0, var));
    }
    return rep;
}

inline VisibilityReport visibility_from_counts(const std::vector<CountHistogram>& family) {
    if (family.empty()) throw std::invalid_argument("visibility_from_counts: no histograms");
    const int n = family.front().n;
    const std::size_t N = std::size_t{1} << n;
    if (family.size() != 2 * N) throw std::invalid_argument("visibility_from_counts: expected 2*2^n histograms");
    auto count = [&](std::uint64_t k, std::uint64_t z) { return static_cast<double>(family[k].counts[z]); };
    auto variance = [&](std::uint64_t k, std::uint64_t z) {
        const double runs = static_cast<double>(family[k].runs);
        const double p = count(k, z) / runs;
        return runs * p * (1.0 - p);
    };
    return visibility_from(n, count, variance);
}

// Expected visibility at a given number of runs per oracle: expected counts
// runs * p plugged into the estimator, binomial variances for the stderr.
inline VisibilityReport expected_visibility(const ClickModel& model, std::uint64_t runs) {
    const int n = model.config().n;
    const auto family = enumerate_bv_family(n);
    std::vector<std::vector<double>> p;
    p.reserve(family.size());
    for (const auto& o : family) p.push_back(model.expected_click_probabilities(o));
    const double r = static_cast<double>(runs);
    auto count = [&](std::uint64_t k, std::uint64_t z) { return r * p[k][z]; };
    auto variance = [&](std::uint64_t k, std::uint64_t z) { return r * p[k][z] * (1.0 - p[k][z]); };
    return visibility_from(n, count, variance);
}

struct VisibilityRun {
    VisibilityReport report;
    std::vector<CountHistogram> histograms;  // BV family order
};

// Every f_j and fbar_j is run `runs` times on its own sub-stream of `seed`.
inline VisibilityRun visibility_table(const ClickModel& model, std::uint64_t runs, std::uint64_t seed,
                                      SimulationOptions opt = {}) {
    const auto family = enumerate_bv_family(model.config().n);
    VisibilityRun out;
    out.histograms.reserve(family.size());
    for (std::size_t k = 0; k < family.size(); ++k) {
        opt.stream = k;
        out.histograms.push_back(simulate_counts(model, family[k], runs, seed, opt));
    }
    out.report = visibility_from_counts(out.histograms);
    return out;
}

inline VisibilityRun visibility_table(const ExperimentConfig& config, const SourceModel& source, const DetectorModel& detector,
                                      std::uint64_t runs, std::uint64_t seed, const SimulationOptions& opt = {}) {
    return visibility_table(ClickModel(config, source, detector), runs, seed, opt);
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_number(double v, int precision = 10) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

// z,bin_time_units,oracle,counts,runs
inline void write_counts_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<CountHistogram>& hists) {
    os << "z,bin_time_units,oracle,counts,runs\n";
    const BinIndex offset = config.interference_offset();
    for (const auto& h : hists) {
        for (std::uint64_t z = 0; z < h.counts.size(); ++z) {
            const auto logical = BitString::from_index(z, h.n);
            const auto physical = relabel_logical_to_physical(logical);
            os << logical.str() << ',' << arrival_time(config, offset, physical.index()) << ',' << h.oracle_label << ','
               << h.counts[z] << ',' << h.runs << '\n';
        }
    }
}

// z,V,stderr
inline void write_visibility_csv(std::ostream& os, const VisibilityReport& rep) {
    os << "z,V,stderr\n";
    for (std::uint64_t z = 0; z < rep.per_bin.size(); ++z) {
        const auto& e = rep.per_bin[z];
        os << BitString::from_index(z, rep.n).str() << ',';
        if (e.defined()) {
            os << format_number(e.V) << ',' << format_number(e.stderr_);
        } else {
            os << "nan,nan";
        }
        os << '\n';
    }
}

// Bins numbered 1..2^n, visibilities in percent with two decimals.
inline std::string format_visibility_table(const VisibilityReport& rep) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "z";
    for (std::size_t z = 0; z < rep.per_bin.size(); ++z) os << std::right << std::setw(8) << (z + 1);
    os << '\n' << std::left << std::setw(10) << ("V(z) n=" + std::to_string(rep.n));
    os << std::fixed << std::setprecision(2);
    for (const auto& e : rep.per_bin) {
        if (e.defined()) {
            os << std::right << std::setw(8) << 100.0 * e.V;
        } else {
            os << std::right << std::setw(8) << "-";
        }
    }
    os << '\n';
    return os.str();
}

}  // namespace tbdj

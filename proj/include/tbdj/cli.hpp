#pragma once

// Subcommand implementations behind tools/tbdj. Each command writes its report
// to the given stream; failures surface as CliError with a stable category.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbdj/config.hpp"
#include "tbdj/detection.hpp"
#include "tbdj/experiment.hpp"
#include "tbdj/oracles.hpp"
#include "tbdj/reference.hpp"

namespace tbdj::cli {

// Exit codes: 1 usage, 2 config, 3 validation, 4 oracle, 5 io.
class CliError : public std::runtime_error {
public:
    CliError(std::string category, int exit_code, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)), exit_code_(exit_code) {}
    const std::string& category() const { return category_; }
    int exit_code() const { return exit_code_; }

private:
    std::string category_;
    int exit_code_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError("io", 5, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline ParsedConfig load_config(const std::string& path) {
    const std::string text = path.empty() ? std::string("n=3\n") : read_file(path);
    try {
        return parse_config(text);
    } catch (const ConfigError& e) {
        const bool validation = e.category() == "validation";
        throw CliError(validation ? "validation" : "config", validation ? 3 : 2, e.what());
    }
}

// 0.0078125 -> "7.8125e-3"
inline std::string format_sci(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    std::string s(buf);
    const auto e = s.find('e');
    std::string mant = s.substr(0, e);
    const int exp = std::atoi(s.c_str() + e + 1);
    if (mant.find('.') != std::string::npos) {
        while (mant.back() == '0') mant.pop_back();
        if (mant.back() == '.') mant.pop_back();
    }
    return mant + "e" + std::to_string(exp);
}

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// ---------------------------------------------------------------------------

inline int cmd_validate(const ParsedConfig& cfg, std::ostream& out) {
    const auto& ex = cfg.experiment;
    const auto t = timing_summary(ex);
    out << "valid n=" << ex.n << "\n";
    out << "pulse_slots=" << t.pulse_slots << " distinct_arrival_times=" << t.distinct_arrival_times
        << " filtered_slots_sharing_time=" << t.filtered_collisions << "\n";
    out << "output_bins:";
    for (std::uint64_t z = 0; z < (std::uint64_t{1} << ex.n); ++z) {
        out << ' ' << BitString::from_index(z, ex.n).str() << '@' << arrival_time(ex, ex.interference_offset(), z);
    }
    out << "\n";
    return 0;
}

enum class Mode { dj, bv };

struct RunRequest {
    std::string oracle_path;  // truth-table file
    std::string bv;           // j for f_j, e.g. "101"
    bool complement = false;
    Mode mode = Mode::dj;
};

inline OracleSpec resolve_oracle(const RunRequest& req, int n) {
    OracleSpec o;
    try {
        if (!req.bv.empty()) {
            o = oracle_bv(BitString::parse(req.bv));
        } else if (!req.oracle_path.empty()) {
            o = parse_truth_table(read_file(req.oracle_path));
        } else {
            throw CliError("usage", 1, "run: need --oracle FILE or --bv BITS");
        }
    } catch (const std::invalid_argument& e) {
        throw CliError("oracle", 4, e.what());
    }
    if (req.complement) o = oracle_complement(o);
    if (o.n() != n) {
        throw CliError("oracle", 4, "oracle has n=" + std::to_string(o.n()) + " but config has n=" + std::to_string(n));
    }
    return o;
}

inline int cmd_run(const ParsedConfig& cfg, const RunRequest& req, std::ostream& out) {
    const auto& ex = cfg.experiment;
    const auto oracle = resolve_oracle(req, ex.n);
    const auto result = propagate(ex, oracle);
    const auto dist = logical_distribution(result);
    const double tp = throughput(ex, oracle);

    out << "distribution:\n";
    for (std::size_t z = 0; z < dist.size(); ++z) {
        out << "  z=" << BitString::from_index(z, ex.n).str() << " P=" << fixed6(dist[z]) << "\n";
    }
    if (req.mode == Mode::bv) {
        std::size_t best = 0;
        for (std::size_t z = 1; z < dist.size(); ++z) {
            if (dist[z] > dist[best]) best = z;
        }
        out << "outcome=" << BitString::from_index(best, ex.n).str() << ", P=" << fixed6(dist[best])
            << ", throughput=" << format_sci(tp) << "\n";
    } else {
        // One query: the verdict follows from whether z=0 can occur.
        const char* verdict = dist[0] > 1.0 - 1e-9 ? "constant" : (dist[0] < 1e-9 ? "balanced" : "undetermined");
        out << "verdict=" << verdict << ", P(0)=" << fixed6(dist[0]) << ", throughput=" << format_sci(tp) << "\n";
    }
    out << "occupied_bins=" << result.occupied_bins() << "\n";
    return 0;
}

inline int cmd_throughput(const ParsedConfig& cfg, std::ostream& out) {
    const auto& ex = cfg.experiment;
    const auto b = loss_budget(ex, OracleSpec::constant(ex.n, 0));
    out << "forward=" << format_sci(b.forward) << "\n";
    out << "interference_fraction=" << format_sci(b.interference_fraction) << "\n";
    out << "final_coupler=" << format_sci(b.final_coupler) << "\n";
    char db[32];
    std::snprintf(db, sizeof db, "%.2f", -10.0 * std::log10(b.total()));
    out << "throughput=" << format_sci(b.total()) << " (" << db << " dB)\n";
    return 0;
}

struct VisibilityRequest {
    std::uint64_t runs = 500000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out_path;     // visibility CSV; stdout when empty
    std::string counts_path;  // optional counts CSV
};

inline int cmd_visibility(const ParsedConfig& cfg, const VisibilityRequest& req, std::ostream& out) {
    const ClickModel model(cfg.experiment, cfg.source, cfg.detector);
    SimulationOptions opt;
    opt.threads = req.threads;
    const auto run = visibility_table(model, req.runs, req.seed, opt);
    const auto expected = expected_visibility(model, req.runs);

    std::ostringstream csv;
    write_visibility_csv(csv, run.report);
    if (req.out_path.empty()) {
        out << csv.str();
    } else {
        std::ofstream f(req.out_path, std::ios::binary);
        if (!f) throw CliError("io", 5, "cannot write '" + req.out_path + "'");
        f << csv.str();
    }
    if (!req.counts_path.empty()) {
        std::ofstream f(req.counts_path, std::ios::binary);
        if (!f) throw CliError("io", 5, "cannot write '" + req.counts_path + "'");
        write_counts_csv(f, cfg.experiment, run.histograms);
    }
    out << "sampled (" << req.runs << " runs per oracle, seed " << req.seed << ")\n" << format_visibility_table(run.report);
    out << "expected\n" << format_visibility_table(expected);
    return 0;
}

enum class Knob { eps, sigma_phi, v, dark_rate, mu };

inline Knob parse_knob(const std::string& s) {
    if (s == "eps") return Knob::eps;
    if (s == "sigma_phi") return Knob::sigma_phi;
    if (s == "v") return Knob::v;
    if (s == "dark_rate") return Knob::dark_rate;
    if (s == "mu") return Knob::mu;
    throw CliError("usage", 1, "unknown knob '" + s + "' (eps, sigma_phi, v, dark_rate, mu)");
}

inline ParsedConfig with_knob(ParsedConfig cfg, Knob knob, double value) {
    switch (knob) {
        case Knob::eps: cfg.experiment.imperfections.coupler_imbalance = value; break;
        case Knob::sigma_phi: cfg.experiment.imperfections.phase_jitter_sigma = value; break;
        case Knob::v: cfg.experiment.imperfections.visibility = value; break;
        case Knob::dark_rate: cfg.detector.dark_rate_per_ns = value; break;
        case Knob::mu: cfg.source.mu_at_modulator = value; break;
    }
    if (auto v = validate_config(cfg.experiment); !v.empty()) throw CliError("validation", 3, InvalidConfig(v).what());
    try {
        cfg.source.validate();
        cfg.detector.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError("config", 2, e.what());
    }
    return cfg;
}

struct SweepRow {
    double value = 0.0;
    double expected = 0.0;  // mean over z
    double sampled = 0.0;   // mean over z
    double stderr_ = 0.0;   // of the sampled mean, bins treated as independent
};

inline std::vector<SweepRow> sweep(const ParsedConfig& base, Knob knob, const std::vector<double>& values, std::uint64_t runs,
                                   std::uint64_t seed, unsigned threads = 0) {
    std::vector<SweepRow> rows;
    for (double value : values) {
        const auto cfg = with_knob(base, knob, value);
        const ClickModel model(cfg.experiment, cfg.source, cfg.detector);
        SweepRow row;
        row.value = value;
        const auto exp = expected_visibility(model, runs);
        SimulationOptions opt;
        opt.threads = threads;
        const auto sampled = visibility_table(model, runs, seed, opt).report;
        double var = 0.0;
        const double m = static_cast<double>(exp.per_bin.size());
        for (std::size_t z = 0; z < exp.per_bin.size(); ++z) {
            row.expected += exp.per_bin[z].V / m;
            row.sampled += sampled.per_bin[z].V / m;
            var += sampled.per_bin[z].stderr_ * sampled.per_bin[z].stderr_;
        }
        row.stderr_ = std::sqrt(var) / m;
        rows.push_back(row);
    }
    return rows;
}

inline int cmd_sweep(const ParsedConfig& cfg, const std::string& knob_name, const std::vector<double>& values,
                     std::uint64_t runs, std::uint64_t seed, unsigned threads, std::ostream& out) {
    const Knob knob = parse_knob(knob_name);
    if (values.empty()) throw CliError("usage", 1, "sweep: no values given");
    const auto rows = sweep(cfg, knob, values, runs, seed, threads);
    out << "knob,value,V_expected,V_sampled,stderr\n";
    for (const auto& r : rows) {
        out << knob_name << ',' << format_number(r.value) << ',' << format_number(r.expected) << ',' << format_number(r.sampled)
            << ',' << format_number(r.stderr_) << '\n';
    }
    return 0;
}

}  // namespace tbdj::cli

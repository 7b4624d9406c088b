#pragma once

// Key-value experiment description.
//
//   # comment
//   n = 3
//   deltas = 1,2,4
//   arm_Ls = 9,19,39
//   phis = 0,0,0
//   transmittances = 0.5,0.5,0.5          (n values: both couplers of a stage,
//                                          or 2n values: in,out per stage)
//   lossless_routing = false
//   final_coupler_transmittance = 0.5
//   unit_ns = 3.75
//   preset = paper-like | ideal           (imperfection knobs; explicit keys win)
//   imperfections.eps = 0
//   imperfections.sigma_phi = 0
//   imperfections.v = 1
//   source.mu = 50
//   detector.efficiency = 0.105
//   detector.dark_rate_per_ns = 1e-4
//   detector.gate_ns = 5
//
// Omitted keys take the defaults for the given n.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tbdj/detection.hpp"
#include "tbdj/experiment.hpp"

namespace tbdj {

class ConfigError : public std::runtime_error {
public:
    // category: "parse" (syntax, unknown key, type), "range", or "validation".
    ConfigError(std::string category, int line, std::string field, const std::string& message)
        : std::runtime_error(compose(category, line, field, message)),
          category_(std::move(category)),
          line_(line),
          field_(std::move(field)) {}

    const std::string& category() const { return category_; }
    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    static std::string compose(const std::string& category, int line, const std::string& field, const std::string& msg) {
        std::string s = category;
        if (line > 0) s += ": line " + std::to_string(line);
        if (!field.empty()) s += ": " + field;
        return s + ": " + msg;
    }
    std::string category_;
    int line_;
    std::string field_;
};

struct ParsedConfig {
    ExperimentConfig experiment;
    SourceModel source;
    DetectorModel detector;
};

namespace config_detail {

struct Entry {
    std::string value;
    int line = 0;
};

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double to_double(const std::string& key, const Entry& e) {
    const std::string v = trim(e.value);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
        throw ConfigError("parse", e.line, key, "expected a number, got '" + v + "'");
    }
    return out;
}

inline long long to_int(const std::string& key, const Entry& e, const std::string& v) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError("parse", e.line, key, "expected an integer, got '" + v + "'");
    }
    return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> items;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) items.push_back(trim(cur));
    return items;
}

inline std::vector<long long> to_int_list(const std::string& key, const Entry& e) {
    std::vector<long long> out;
    for (const auto& item : split_list(e.value)) out.push_back(to_int(key, e, item));
    return out;
}

inline std::vector<double> to_double_list(const std::string& key, const Entry& e) {
    std::vector<double> out;
    for (const auto& item : split_list(e.value)) out.push_back(to_double(key, Entry{item, e.line}));
    return out;
}

inline bool to_bool(const std::string& key, const Entry& e) {
    const std::string v = trim(e.value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("parse", e.line, key, "expected true/false, got '" + v + "'");
}

inline void require_count(const std::string& key, const Entry& e, std::size_t got, std::size_t want) {
    if (got != want) {
        throw ConfigError("parse", e.line, key, "expected " + std::to_string(want) + " values, got " + std::to_string(got));
    }
}

inline void require_range(const std::string& key, const Entry& e, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi)) {
        std::ostringstream os;
        os << "value " << v << " outside [" << lo << "," << hi << "]";
        throw ConfigError("range", e.line, key, os.str());
    }
}

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "n", "deltas", "arm_Ls", "phis", "transmittances", "lossless_routing", "final_coupler_transmittance", "unit_ns",
        "preset", "imperfections.eps", "imperfections.sigma_phi", "imperfections.v", "source.mu", "detector.efficiency",
        "detector.dark_rate_per_ns", "detector.gate_ns"};
    return keys;
}

}  // namespace config_detail

inline std::optional<Imperfections> imperfection_preset(std::string_view name) {
    if (name == "paper-like") return paper_like_preset();
    if (name == "ideal") return Imperfections{};
    return std::nullopt;
}

inline ParsedConfig parse_config(std::string_view text) {
    using namespace config_detail;
    std::map<std::string, Entry> entries;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("parse", line_no, "", "expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("parse", line_no, key, "unknown key");
        if (entries.count(key)) throw ConfigError("parse", line_no, key, "duplicate key (first on line " + std::to_string(entries[key].line) + ")");
        entries[key] = Entry{value, line_no};
    }
    auto get = [&](const char* key) -> const Entry* {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second;
    };

    int n = 3;
    if (const auto* e = get("n")) {
        const auto v = to_int("n", *e, trim(e->value));
        if (v < 1 || v > kMaxOracleQubits) throw ConfigError("range", e->line, "n", "value " + std::to_string(v) + " outside [1," + std::to_string(kMaxOracleQubits) + "]");
        n = static_cast<int>(v);
    }
    const auto count = static_cast<std::size_t>(n);

    ParsedConfig out{ExperimentConfig::defaults(n), SourceModel::defaults(n), DetectorModel{}};
    auto& ex = out.experiment;

    if (const auto* e = get("deltas")) {
        auto v = to_int_list("deltas", *e);
        require_count("deltas", *e, v.size(), count);
        for (std::size_t l = 0; l < count; ++l) {
            if (v[l] < 1) throw ConfigError("range", e->line, "deltas", "entries must be >= 1");
        }
        ex.deltas.assign(v.begin(), v.end());
        ex.arm_Ls = ExperimentConfig::default_arm_lengths(ex.deltas);
    }
    if (const auto* e = get("arm_Ls")) {
        auto v = to_int_list("arm_Ls", *e);
        require_count("arm_Ls", *e, v.size(), count);
        for (auto L : v) {
            if (L < 0) throw ConfigError("range", e->line, "arm_Ls", "entries must be >= 0");
        }
        ex.arm_Ls.assign(v.begin(), v.end());
    }
    if (const auto* e = get("phis")) {
        auto v = to_double_list("phis", *e);
        require_count("phis", *e, v.size(), count);
        for (double p : v) {
            if (!(p >= 0.0 && p < 2.0 * kPi)) throw ConfigError("range", e->line, "phis", "entries must lie in [0, 2pi)");
        }
        ex.phis = v;
    }
    if (const auto* e = get("transmittances")) {
        auto v = to_double_list("transmittances", *e);
        if (v.size() != count && v.size() != 2 * count) {
            throw ConfigError("parse", e->line, "transmittances",
                              "expected " + std::to_string(count) + " or " + std::to_string(2 * count) + " values, got " +
                                  std::to_string(v.size()));
        }
        for (double t : v) require_range("transmittances", *e, t, 0.0, 1.0);
        for (std::size_t l = 0; l < count; ++l) {
            if (v.size() == count) {
                ex.couplers[l].in.transmittance = ex.couplers[l].out.transmittance = v[l];
            } else {
                ex.couplers[l].in.transmittance = v[2 * l];
                ex.couplers[l].out.transmittance = v[2 * l + 1];
            }
        }
    }
    if (const auto* e = get("lossless_routing")) ex.lossless_routing = to_bool("lossless_routing", *e);
    if (const auto* e = get("final_coupler_transmittance")) {
        ex.final_coupler_transmittance = to_double("final_coupler_transmittance", *e);
        require_range("final_coupler_transmittance", *e, ex.final_coupler_transmittance, 0.0, 1.0);
    }
    if (const auto* e = get("unit_ns")) {
        ex.unit_ns = to_double("unit_ns", *e);
        if (!(ex.unit_ns > 0.0)) throw ConfigError("range", e->line, "unit_ns", "must be > 0");
    }
    if (const auto* e = get("preset")) {
        auto p = imperfection_preset(trim(e->value));
        if (!p) throw ConfigError("parse", e->line, "preset", "unknown preset '" + trim(e->value) + "' (paper-like, ideal)");
        ex.imperfections = *p;
    }
    if (const auto* e = get("imperfections.eps")) ex.imperfections.coupler_imbalance = to_double("imperfections.eps", *e);
    if (const auto* e = get("imperfections.sigma_phi")) {
        ex.imperfections.phase_jitter_sigma = to_double("imperfections.sigma_phi", *e);
        if (ex.imperfections.phase_jitter_sigma < 0.0) throw ConfigError("range", e->line, "imperfections.sigma_phi", "must be >= 0");
    }
    if (const auto* e = get("imperfections.v")) {
        ex.imperfections.visibility = to_double("imperfections.v", *e);
        require_range("imperfections.v", *e, ex.imperfections.visibility, 0.0, 1.0);
    }
    if (const auto* e = get("source.mu")) {
        out.source.mu_at_modulator = to_double("source.mu", *e);
        if (out.source.mu_at_modulator < 0.0) throw ConfigError("range", e->line, "source.mu", "must be >= 0");
    }
    if (const auto* e = get("detector.efficiency")) {
        out.detector.efficiency = to_double("detector.efficiency", *e);
        require_range("detector.efficiency", *e, out.detector.efficiency, 0.0, 1.0);
    }
    if (const auto* e = get("detector.dark_rate_per_ns")) {
        out.detector.dark_rate_per_ns = to_double("detector.dark_rate_per_ns", *e);
        if (out.detector.dark_rate_per_ns < 0.0) throw ConfigError("range", e->line, "detector.dark_rate_per_ns", "must be >= 0");
    }
    if (const auto* e = get("detector.gate_ns")) {
        out.detector.gate_ns = to_double("detector.gate_ns", *e);
        if (!(out.detector.gate_ns > 0.0)) throw ConfigError("range", e->line, "detector.gate_ns", "must be > 0");
    }

    const auto violations = validate_config(ex);
    if (!violations.empty()) {
        // Point at the line most likely responsible.
        const char* field = "arm_Ls";
        if (violations.front().kind == ConfigViolation::Kind::structure) field = "";
        else if (violations.front().kind == ConfigViolation::Kind::ambiguous_interference_offset) field = "deltas";
        const auto* e = field[0] ? get(field) : nullptr;
        std::string msg;
        for (std::size_t k = 0; k < violations.size(); ++k) {
            if (k) msg += "; ";
            msg += std::string(to_string(violations[k].kind)) + ": " + violations[k].message;
        }
        throw ConfigError("validation", e ? e->line : 0, field, msg);
    }
    return out;
}

}  // namespace tbdj

#pragma once

// Boolean oracles on n-bit inputs, stored as explicit truth tables.
//
// Text format:
//   n=<int>
//   <2^n characters of 0/1, entry x in x-lexicographic order>
// Blank lines and lines starting with '#' are ignored.

#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbdj/core.hpp"

namespace tbdj {

inline constexpr int kMaxOracleQubits = 20;

class OracleSpec {
public:
    OracleSpec() = default;
    OracleSpec(int n, std::vector<std::uint8_t> table, std::string label = {})
        : n_(n), table_(std::move(table)), label_(std::move(label)) {
        if (n < 0 || n > kMaxOracleQubits) throw std::invalid_argument("OracleSpec: n=" + std::to_string(n) + " out of range");
        if (table_.size() != (std::size_t{1} << n)) {
            throw std::invalid_argument("OracleSpec: table has " + std::to_string(table_.size()) + " entries, expected " +
                                        std::to_string(std::size_t{1} << n));
        }
        for (auto b : table_) {
            if (b > 1) throw std::invalid_argument("OracleSpec: table entries must be 0 or 1");
        }
    }

    static OracleSpec constant(int n, int value) {
        return OracleSpec(n, std::vector<std::uint8_t>(std::size_t{1} << n, static_cast<std::uint8_t>(value & 1)),
                          value ? "const1" : "const0");
    }

    int n() const { return n_; }
    std::size_t size() const { return table_.size(); }
    int operator()(std::uint64_t x) const { return table_.at(x); }
    int operator()(const BitString& x) const { return table_.at(x.index()); }
    const std::vector<std::uint8_t>& table() const { return table_; }
    const std::string& label() const { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

    std::size_t ones() const {
        std::size_t c = 0;
        for (auto b : table_) c += b;
        return c;
    }

    std::string table_str() const {
        std::string s;
        s.reserve(table_.size());
        for (auto b : table_) s.push_back(static_cast<char>('0' + b));
        return s;
    }

    // Truth tables compare equal regardless of label.
    bool operator==(const OracleSpec& other) const { return n_ == other.n_ && table_ == other.table_; }

private:
    int n_ = 0;
    std::vector<std::uint8_t> table_{0};
    std::string label_;
};

enum class OracleClass { constant, balanced, neither };

inline const char* to_string(OracleClass c) {
    switch (c) {
        case OracleClass::constant: return "constant";
        case OracleClass::balanced: return "balanced";
        case OracleClass::neither: return "neither";
    }
    return "?";
}

// f_j(x) = x . j mod 2
inline OracleSpec oracle_bv(const BitString& j) {
    const int n = j.size();
    std::vector<std::uint8_t> table(std::size_t{1} << n);
    const auto jj = j.index();
    for (std::uint64_t x = 0; x < table.size(); ++x) table[x] = static_cast<std::uint8_t>(dot_mod2(x, jj));
    return OracleSpec(n, std::move(table), "f_" + j.str());
}

inline OracleSpec oracle_complement(const OracleSpec& o) {
    auto table = o.table();
    for (auto& b : table) b ^= 1u;
    std::string label = o.label();
    if (label.rfind("f_", 0) == 0) {
        label = "fbar_" + label.substr(2);
    } else if (label.rfind("fbar_", 0) == 0) {
        label = "f_" + label.substr(5);
    } else if (!label.empty()) {
        label = "not(" + label + ")";
    }
    return OracleSpec(o.n(), std::move(table), std::move(label));
}

inline OracleClass classify(const OracleSpec& o) {
    const auto ones = o.ones();
    if (ones == 0 || ones == o.size()) return OracleClass::constant;
    if (2 * ones == o.size()) return OracleClass::balanced;
    return OracleClass::neither;
}

// XOR of the two parties' tables: constant iff f == g, balanced iff they differ
// in exactly half the positions.
inline OracleSpec compose_distributed(const OracleSpec& f, const OracleSpec& g) {
    if (f.n() != g.n()) {
        throw std::invalid_argument("compose_distributed: n mismatch (" + std::to_string(f.n()) + " vs " +
                                    std::to_string(g.n()) + ")");
    }
    std::vector<std::uint8_t> table(f.size());
    for (std::size_t x = 0; x < table.size(); ++x) table[x] = f.table()[x] ^ g.table()[x];
    return OracleSpec(f.n(), std::move(table));
}

// All f_j in lexicographic j order, followed by all complements.
inline std::vector<OracleSpec> enumerate_bv_family(int n) {
    if (n < 1) throw std::invalid_argument("enumerate_bv_family: n must be >= 1");
    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<OracleSpec> family;
    family.reserve(2 * count);
    for (std::uint64_t j = 0; j < count; ++j) family.push_back(oracle_bv(BitString::from_index(j, n)));
    for (std::uint64_t j = 0; j < count; ++j) family.push_back(oracle_complement(family[j]));
    return family;
}

inline std::string format_truth_table(const OracleSpec& o) { return "n=" + std::to_string(o.n()) + "\n" + o.table_str() + "\n"; }

inline OracleSpec parse_truth_table(std::istream& in) {
    std::string line;
    int n = -1;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        line = line.substr(first);
        if (n < 0) {
            if (line.rfind("n=", 0) != 0) {
                throw std::invalid_argument("truth table line " + std::to_string(line_no) + ": expected 'n=<int>'");
            }
            try {
                std::size_t used = 0;
                n = std::stoi(line.substr(2), &used);
                if (used != line.size() - 2) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw std::invalid_argument("truth table line " + std::to_string(line_no) + ": bad n value '" +
                                            line.substr(2) + "'");
            }
            if (n < 1 || n > kMaxOracleQubits) {
                throw std::invalid_argument("truth table line " + std::to_string(line_no) + ": n=" + std::to_string(n) +
                                            " out of range");
            }
            continue;
        }
        std::vector<std::uint8_t> table;
        table.reserve(line.size());
        for (char c : line) {
            if (c != '0' && c != '1') {
                throw std::invalid_argument("truth table line " + std::to_string(line_no) + ": non-binary character '" +
                                            std::string(1, c) + "'");
            }
            table.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        if (table.size() != (std::size_t{1} << n)) {
            throw std::invalid_argument("truth table line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(std::size_t{1} << n) + " entries for n=" + std::to_string(n) +
                                        ", got " + std::to_string(table.size()));
        }
        return OracleSpec(n, std::move(table));
    }
    throw std::invalid_argument(n < 0 ? "truth table: missing 'n=' line" : "truth table: missing table line");
}

inline OracleSpec parse_truth_table(const std::string& text) {
    std::istringstream in(text);
    return parse_truth_table(in);
}

}  // namespace tbdj

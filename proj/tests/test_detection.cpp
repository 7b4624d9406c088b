#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "path_oracle.hpp"
#include "tbdj/detection.hpp"

using namespace tbdj;

namespace {

DetectorModel no_dark() { return DetectorModel{0.105, 0.0, 5.0}; }

}  // namespace

TEST(Detector, ClickProbabilityClosedForm) {
    const DetectorModel d;
    for (double m : {0.0, 0.1, 1.0, 25.0, 400.0}) {
        EXPECT_NEAR(d.click_probability(m), paths::click_probability(m, 0.105, 1e-4, 5.0), 1e-15);
    }
    EXPECT_NEAR(d.dark_click_probability(), 1.0 - std::exp(-5e-4), 1e-18);
    EXPECT_EQ(no_dark().click_probability(0.0), 0.0);
}

TEST(Detector, Validation) {
    EXPECT_THROW((DetectorModel{1.5, 0.0, 5.0}.validate()), std::invalid_argument);
    EXPECT_THROW((DetectorModel{0.1, -1.0, 5.0}.validate()), std::invalid_argument);
    EXPECT_THROW(SourceModel{-1.0}.validate(), std::invalid_argument);
    EXPECT_EQ(SourceModel::defaults(2).mu_at_modulator, 20.0);
    EXPECT_EQ(SourceModel::defaults(3).mu_at_modulator, 50.0);
}

// Constructive bin of f_0: mu * 2^n pulses at the modulator, a 2^-n share of
// the returning power lands in one bin, halved by the final coupler.
TEST(ClickModel, MeanPhotonsConstructiveBin) {
    for (int n = 1; n <= 4; ++n) {
        const auto c = ExperimentConfig::defaults(n);
        const ClickModel m(c, SourceModel{50.0}, DetectorModel{});
        const auto powers = m.kernel().bin_powers(OracleSpec::constant(n, 0), nominal_phases(c), 1.0);
        const auto photons = m.mean_photons_from_powers(powers);
        EXPECT_NEAR(photons[0], 25.0, 1e-10);
        for (std::size_t z = 1; z < photons.size(); ++z) EXPECT_NEAR(photons[z], 0.0, 1e-10);
    }
}

TEST(ClickModel, SourcePhotons) {
    EXPECT_NEAR(source_photons_per_pulse(50.0, ExperimentConfig::defaults(3)), 3200.0, 1e-9);
}

TEST(ClickModel, MuForClickProbability) {
    for (int n : {2, 3}) {
        const auto c = ExperimentConfig::defaults(n);
        const DetectorModel d;
        const double mu = mu_for_click_probability(0.3, c, d);
        const ClickModel m(c, SourceModel{mu}, d);
        EXPECT_NEAR(m.click_probabilities(OracleSpec::constant(n, 0))[0], 0.3, 1e-12);
        EXPECT_NEAR(m.click_probabilities(oracle_bv(BitString::from_index(1, n)))[1], 0.3, 1e-12);
    }
    EXPECT_THROW(mu_for_click_probability(1e-6, ExperimentConfig::defaults(3), DetectorModel{}), std::invalid_argument);
}

TEST(ClickModel, ExpectedMatchesNominalWithoutJitter) {
    auto c = ExperimentConfig::defaults(3);
    c.imperfections.coupler_imbalance = 0.03;
    const ClickModel m(c, SourceModel{50.0}, DetectorModel{});
    const auto f = oracle_bv(BitString::parse("110"));
    const auto a = m.click_probabilities(f), b = m.expected_click_probabilities(f);
    for (std::size_t z = 0; z < a.size(); ++z) EXPECT_NEAR(a[z], b[z], 1e-14);
}

TEST(Simulate, MeansWithinBinomialError) {
    auto c = ExperimentConfig::defaults(2);
    c.imperfections.coupler_imbalance = 0.05;
    const ClickModel m(c, SourceModel{0.5}, DetectorModel{0.105, 1e-2, 5.0});
    const auto f = oracle_bv(BitString::parse("10"));
    const std::uint64_t runs = 200000;
    const auto h = simulate_counts(m, f, runs, 5);
    const auto p = m.click_probabilities(f);
    for (std::size_t z = 0; z < p.size(); ++z) {
        const double sd = std::sqrt(runs * p[z] * (1 - p[z]));
        EXPECT_NEAR(static_cast<double>(h.counts[z]), runs * p[z], 5 * sd + 1) << z;
    }
    EXPECT_EQ(h.oracle_label, "f_10");
    EXPECT_EQ(h.runs, runs);
}

TEST(Simulate, JitterMeansMatchClosedForm) {
    auto c = ExperimentConfig::defaults(2);
    c.imperfections.phase_jitter_sigma = 0.6;
    const ClickModel m(c, SourceModel{1.0}, no_dark());
    const auto f = oracle_bv(BitString::parse("01"));
    const std::uint64_t runs = 400000;
    const auto h = simulate_counts(m, f, runs, 9);
    // At low mu the click probability is nearly linear in power, so the jitter
    // average of p is close to p at the average power.
    const auto p = m.expected_click_probabilities(f);
    for (std::size_t z = 0; z < p.size(); ++z) {
        const double sd = std::sqrt(runs * p[z] * (1 - p[z]));
        EXPECT_NEAR(static_cast<double>(h.counts[z]), runs * p[z], 5 * sd + 0.01 * runs * p[z]) << z;
    }
}

TEST(Simulate, DeterministicAcrossThreads) {
    auto c = ExperimentConfig::defaults(3);
    c.imperfections = paper_like_preset();
    const ClickModel m(c, SourceModel::defaults(3), DetectorModel{});
    const auto f = oracle_bv(BitString::parse("011"));
    SimulationOptions one, many;
    one.threads = 1;
    many.threads = 4;
    one.chunk_runs = many.chunk_runs = 1000;
    const auto a = simulate_counts(m, f, 20500, 42, one);
    const auto b = simulate_counts(m, f, 20500, 42, many);
    EXPECT_EQ(a.counts, b.counts);
    const auto d = simulate_counts(m, f, 20500, 43, one);
    EXPECT_NE(a.counts, d.counts);
}

TEST(Simulate, RejectsZeroRuns) {
    const ClickModel m(ExperimentConfig::defaults(1), SourceModel{1.0}, DetectorModel{});
    EXPECT_THROW(simulate_counts(m, OracleSpec::constant(1, 0), 0, 1), std::invalid_argument);
}

TEST(Visibility, PairwiseExamples) {
    EXPECT_DOUBLE_EQ(*visibility_pairwise(100, 0, 100), 1.0);
    EXPECT_DOUBLE_EQ(*visibility_pairwise(50, 50, 50), 0.0);
    EXPECT_DOUBLE_EQ(*visibility_pairwise(90, 10, 70), 0.5 * (0.8 + 0.75));
    EXPECT_FALSE(visibility_pairwise(0, 0, 5).has_value());
    EXPECT_FALSE(visibility_pairwise(5, 0, 0).has_value());
}

TEST(Visibility, IdealNoDarkIsExactlyOne) {
    for (int n : {1, 2, 3}) {
        const auto c = ExperimentConfig::defaults(n);
        const ClickModel m(c, SourceModel::defaults(n), no_dark());
        const auto exp = expected_visibility(m, 10000);
        const auto run = visibility_table(m, 5000, 1);
        for (std::size_t z = 0; z < exp.per_bin.size(); ++z) {
            EXPECT_NEAR(exp.per_bin[z].V, 1.0, 1e-12);
            EXPECT_EQ(run.report.per_bin[z].V, 1.0);
            EXPECT_EQ(run.report.per_bin[z].terms, (1 << n) - 1);
        }
    }
}

TEST(Visibility, UndefinedWhenNoCounts) {
    const int n = 1;
    std::vector<CountHistogram> fam(4, CountHistogram{n, 10, {0, 0}, ""});
    const auto rep = visibility_from_counts(fam);
    EXPECT_FALSE(rep.per_bin[0].defined());
    std::ostringstream os;
    write_visibility_csv(os, rep);
    EXPECT_EQ(os.str(), "z,V,stderr\n0,nan,nan\n1,nan,nan\n");
    EXPECT_THROW(visibility_from_counts(std::vector<CountHistogram>(3, fam[0])), std::invalid_argument);
}

// The delta-method stderr against the spread of V over independent seeds.
TEST(Visibility, StderrMatchesReplicateSpread) {
    auto c = ExperimentConfig::defaults(2);
    c.imperfections.coupler_imbalance = 0.08;
    const ClickModel m(c, SourceModel{0.5}, DetectorModel{0.105, 2e-3, 5.0});
    const int reps = 150;
    std::vector<std::vector<double>> vs(4);
    double predicted[4] = {};
    for (int r = 0; r < reps; ++r) {
        const auto run = visibility_table(m, 4000, 1000 + r);
        for (std::size_t z = 0; z < 4; ++z) {
            vs[z].push_back(run.report.per_bin[z].V);
            predicted[z] += run.report.per_bin[z].stderr_ / reps;
        }
    }
    for (std::size_t z = 0; z < 4; ++z) {
        double mean = 0, var = 0;
        for (double v : vs[z]) mean += v / reps;
        for (double v : vs[z]) var += (v - mean) * (v - mean) / (reps - 1);
        const double ratio = std::sqrt(var) / predicted[z];
        EXPECT_GT(ratio, 0.75) << z;
        EXPECT_LT(ratio, 1.3) << z;
    }
}

TEST(Report, CountsCsv) {
    const auto c = ExperimentConfig::defaults(2);
    CountHistogram h{2, 100, {90, 1, 2, 3}, "f_00"};
    std::ostringstream os;
    write_counts_csv(os, c, {h});
    // Output offset 3, L = (5, 11). Logical 01 leaves through physical 11, 10 through 10, 11 through 01.
    EXPECT_EQ(os.str(), "z,bin_time_units,oracle,counts,runs\n00,3,f_00,90,100\n01,19,f_00,1,100\n10,8,f_00,2,100\n11,14,f_00,3,100\n");
}

TEST(Report, VisibilityTable) {
    VisibilityReport rep;
    rep.n = 1;
    rep.per_bin = {VisibilityEntry{0.97123, 0.001, 1}, VisibilityEntry{}};
    const auto s = format_visibility_table(rep);
    EXPECT_NE(s.find("97.12"), std::string::npos);
    EXPECT_NE(s.find("-"), std::string::npos);
    EXPECT_EQ(format_number(0.5), "0.5");
}

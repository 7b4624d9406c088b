#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "path_oracle.hpp"
#include "tbdj/reference.hpp"

using namespace tbdj;

namespace {

OracleSpec random_balanced(int n, std::mt19937_64& rng) {
    std::vector<std::uint8_t> t(std::size_t{1} << n, 0);
    std::fill(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), 1);
    std::shuffle(t.begin(), t.end(), rng);
    return OracleSpec(n, t);
}

}  // namespace

TEST(Hadamard, UniformFromZeroAndInvolution) {
    for (int n = 1; n <= 8; ++n) {
        const auto s = hadamard_all(StateVector::basis(n, 0));
        const double a = std::pow(2.0, -0.5 * n);
        for (std::size_t x = 0; x < s.register_size(); ++x) EXPECT_NEAR(s[x].real(), a, 1e-14);
        const auto back = hadamard_all(s);
        EXPECT_NEAR(std::norm(back[0]), 1.0, 1e-12);
    }
}

TEST(Hadamard, MatchesExplicitSign) {
    const int n = 4;
    for (std::uint64_t x = 0; x < 16; ++x) {
        const auto s = hadamard_all(StateVector::basis(n, x));
        for (std::uint64_t z = 0; z < 16; ++z) EXPECT_NEAR(s[z].real(), (dot_mod2(x, z) ? -0.25 : 0.25), 1e-14);
    }
}

TEST(DjDistribution, MatchesDirectSum) {
    std::mt19937_64 rng(21);
    for (int n = 1; n <= 8; ++n) {
        std::vector<OracleSpec> fs{OracleSpec::constant(n, 0), OracleSpec::constant(n, 1), random_balanced(n, rng)};
        std::vector<std::uint8_t> t(std::size_t{1} << n);
        for (auto& b : t) b = rng() & 1;
        fs.emplace_back(n, t);
        for (const auto& f : fs) {
            const auto got = dj_distribution(f);
            const auto want = paths::brute_force_dj(f);
            double sum = 0.0;
            for (std::size_t z = 0; z < got.size(); ++z) {
                EXPECT_NEAR(got[z], want[z], 1e-12);
                sum += got[z];
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(DjDistribution, ConstantAndBalancedZeroBin) {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 10; ++n) {
        EXPECT_NEAR(dj_distribution(OracleSpec::constant(n, 1))[0], 1.0, 1e-12);
        for (int k = 0; k < 5; ++k) EXPECT_NEAR(dj_distribution(random_balanced(n, rng))[0], 0.0, 1e-12);
    }
}

TEST(DjDistribution, BvConcentratesOnJ) {
    for (int n = 1; n <= 6; ++n) {
        for (std::uint64_t j = 0; j < (std::uint64_t{1} << n); ++j) {
            const auto p = dj_distribution(oracle_complement(oracle_bv(BitString::from_index(j, n))));
            EXPECT_NEAR(p[j], 1.0, 1e-12);
        }
    }
}

TEST(AncillaOracle, PhaseKickbackMatchesPhaseOracle) {
    std::mt19937_64 rng(8);
    const double r = 1.0 / std::sqrt(2.0);
    for (int n = 1; n <= 5; ++n) {
        const auto f = random_balanced(n, rng);
        const auto reg = hadamard_all(StateVector::basis(n, 0));
        const auto full = apply_oracle_with_ancilla(StateVector::with_ancilla(reg, r, -r), f);
        const auto phase = apply_phase_oracle(reg, f);
        for (std::size_t x = 0; x < reg.register_size(); ++x) {
            EXPECT_LE(std::abs(full[2 * x] - phase[x] * r), 1e-14);
            EXPECT_LE(std::abs(full[2 * x + 1] + phase[x] * r), 1e-14);
        }
    }
}

TEST(Reference, MismatchAndCap) {
    EXPECT_THROW(apply_phase_oracle(StateVector(3), OracleSpec::constant(2, 0)), std::invalid_argument);
    EXPECT_THROW(StateVector(kMaxOracleQubits + 1), std::invalid_argument);
}

TEST(DjDecide, Examples) {
    EXPECT_EQ(dj_decide(0), OracleClass::constant);
    EXPECT_EQ(dj_decide(5), OracleClass::balanced);
}

TEST(ClassicalDj, WorstCaseCount) {
    EXPECT_EQ(classical_dj_worst_case(1), 2u);
    EXPECT_EQ(classical_dj_worst_case(3), 5u);
    EXPECT_EQ(classical_dj_worst_case(10), 513u);
}

// Fewer than 2^(n-1)+1 agreeing queries leave both a constant and a balanced
// oracle consistent with what was seen.
TEST(ClassicalDj, AdversaryBound) {
    std::mt19937_64 rng(13);
    for (int n = 1; n <= 6; ++n) {
        const std::size_t N = std::size_t{1} << n;
        for (std::size_t q = 0; q <= N / 2; ++q) {
            std::vector<std::uint64_t> xs(N);
            std::iota(xs.begin(), xs.end(), 0);
            std::shuffle(xs.begin(), xs.end(), rng);
            xs.resize(q);
            for (int answer : {0, 1}) {
                const auto amb = dj_adversary_completions(n, xs, answer);
                ASSERT_TRUE(amb.has_value());
                EXPECT_EQ(classify(amb->constant), OracleClass::constant);
                EXPECT_EQ(classify(amb->balanced), OracleClass::balanced);
                for (auto x : xs) {
                    EXPECT_EQ(amb->constant(x), answer);
                    EXPECT_EQ(amb->balanced(x), answer);
                }
            }
        }
        std::vector<std::uint64_t> many(N / 2 + 1);
        std::iota(many.begin(), many.end(), 0);
        EXPECT_FALSE(dj_adversary_completions(n, many, 0).has_value());
    }
}

TEST(ClassicalDj, SolverIsCorrect) {
    std::mt19937_64 rng(17);
    for (int n = 1; n <= 6; ++n) {
        EXPECT_EQ(classical_dj_solve(OracleSpec::constant(n, 1)), std::make_pair(OracleClass::constant, classical_dj_worst_case(n)));
        for (int k = 0; k < 10; ++k) {
            const auto [c, q] = classical_dj_solve(random_balanced(n, rng));
            EXPECT_EQ(c, OracleClass::balanced);
            EXPECT_LE(q, classical_dj_worst_case(n));
        }
    }
}

TEST(ClassicalBv, RecoversEveryJ) {
    for (int n = 1; n <= 8; ++n) {
        EXPECT_EQ(classical_bv_queries(n), static_cast<std::uint64_t>(n));
        for (std::uint64_t j = 0; j < (std::uint64_t{1} << n); ++j) {
            const auto [got, q] = classical_bv_recover(oracle_bv(BitString::from_index(j, n)));
            EXPECT_EQ(got.index(), j);
            EXPECT_EQ(q, static_cast<std::uint64_t>(n));
        }
    }
}

// One query reveals one bit of j, so n-1 queries leave two candidates.
TEST(ClassicalBv, FewerQueriesAmbiguous) {
    const int n = 4;
    for (std::uint64_t j = 0; j < 16; ++j) {
        const auto f = oracle_bv(BitString::from_index(j, n));
        std::vector<int> seen;
        for (int l = 0; l < n - 1; ++l) seen.push_back(f(std::uint64_t{1} << (n - 1 - l)));
        int consistent = 0;
        for (std::uint64_t k = 0; k < 16; ++k) {
            const auto g = oracle_bv(BitString::from_index(k, n));
            bool ok = true;
            for (int l = 0; l < n - 1; ++l) ok &= g(std::uint64_t{1} << (n - 1 - l)) == seen[l];
            consistent += ok;
        }
        EXPECT_EQ(consistent, 2);
    }
}

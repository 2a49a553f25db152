#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "shadow/experiment.hpp"

using shadow::DetectorRole;
using shadow::JointDistribution;

namespace {

constexpr double kPi = oracle::kPi;
const double kTsirelson = 2.0 * std::sqrt(2.0);

void expect_dist(const JointDistribution& j, double uu, double ud, double du, double dd, double tol) {
  EXPECT_NEAR(j.p_uu, uu, tol);
  EXPECT_NEAR(j.p_ud, ud, tol);
  EXPECT_NEAR(j.p_du, du, tol);
  EXPECT_NEAR(j.p_dd, dd, tol);
}

TEST(JointDistribution, MatchesStateVectorOracleEverywhere) {
  oracle::Gen g(101);
  double worst_closed = 0.0, worst_piped = 0.0, worst_sum = 0.0;
  for (int k = 0; k < 10000; ++k) {
    double alpha = g.angle(), beta = g.angle();
    auto ref = oracle::two_photon_probabilities(alpha, beta);
    auto closed = shadow::joint_distribution_closed_form(alpha, beta).as_array();
    auto piped = shadow::joint_distribution_from_amplitudes(alpha, beta).as_array();
    for (int i = 0; i < 4; ++i) {
      worst_closed = std::max(worst_closed, std::abs(closed[i] - ref[i]));
      worst_piped = std::max(worst_piped, std::abs(piped[i] - ref[i]));
    }
    worst_sum = std::max(worst_sum, std::abs(shadow::joint_distribution(alpha, beta).sum() - 1.0));
  }
  EXPECT_LT(worst_closed, 1e-12);
  EXPECT_LT(worst_piped, 1e-12);
  EXPECT_LT(worst_sum, 1e-12);
}

TEST(JointDistribution, SpecialAngles) {
  expect_dist(shadow::joint_distribution(0.7, 0.7), 0.5, 0.0, 0.0, 0.5, 1e-15);
  expect_dist(shadow::joint_distribution(0.2, 0.2 + kPi), 0.0, 0.5, 0.5, 0.0, 1e-15);
  expect_dist(shadow::joint_distribution(1.0, 1.0 + kPi / 2), 0.25, 0.25, 0.25, 0.25, 1e-15);
}

TEST(JointDistribution, SymmetricAndNoSignaling) {
  oracle::Gen g(7);
  for (int k = 0; k < 1000; ++k) {
    double alpha = g.angle(), beta = g.angle();
    auto j = shadow::joint_distribution(alpha, beta);
    EXPECT_DOUBLE_EQ(j.p_uu, j.p_dd);
    EXPECT_DOUBLE_EQ(j.p_ud, j.p_du);
    EXPECT_NEAR(j.left_up(), 0.5, 1e-15);
    EXPECT_NEAR(j.right_up(), 0.5, 1e-15);
    for (double p : j.as_array()) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(Correlation, Examples) {
  EXPECT_NEAR(shadow::correlation(0.3, 0.3), 1.0, 1e-15);
  EXPECT_NEAR(shadow::correlation(0.0, kPi), -1.0, 1e-15);
  EXPECT_NEAR(shadow::correlation(0.0, kPi / 2), 0.0, 1e-15);
  oracle::Gen g(9);
  for (int k = 0; k < 1000; ++k) {
    double a = g.angle(), b = g.angle();
    EXPECT_NEAR(shadow::correlation(a, b), std::cos(b - a), 1e-14);
  }
}

TEST(Chsh, OptimalAnglesReachTsirelson) {
  auto r = shadow::chsh(0.0, kPi / 2, kPi / 4, 3 * kPi / 4);
  EXPECT_NEAR(r.S, kTsirelson, 1e-9);
  EXPECT_TRUE(r.violated);
  const double h = std::sqrt(0.5);
  EXPECT_NEAR(r.E[0], h, 1e-15);
  EXPECT_NEAR(r.E[1], -h, 1e-15);
  EXPECT_NEAR(r.E[2], h, 1e-15);
  EXPECT_NEAR(r.E[3], h, 1e-15);
  EXPECT_FALSE(r.S_stderr.has_value());
}

TEST(Chsh, ClassicalExamples) {
  auto eq = shadow::chsh(0.4, 0.4, 0.4, 0.4);
  EXPECT_NEAR(eq.S, 2.0, 1e-15);
  EXPECT_FALSE(eq.violated);
  auto r = shadow::chsh(0.0, 0.0, 0.0, kPi);
  EXPECT_NEAR(r.S, 2.0, 1e-15);
  EXPECT_FALSE(r.violated);
}

TEST(Chsh, NeverExceedsTsirelson) {
  oracle::Gen g(1234);
  double worst = 0.0;
  for (int k = 0; k < 100000; ++k) {
    auto r = shadow::chsh(g.angle(), g.angle(), g.angle(), g.angle());
    worst = std::max(worst, std::abs(r.S));
  }
  EXPECT_LE(worst, kTsirelson + 1e-9);
  EXPECT_GT(worst, 2.7);
}

TEST(Sampler, EqualAnglesNeverGiveMixedOutcomes) {
  auto recs = shadow::sample_coincidences(0.9, 0.9, 100000, 42);
  for (const auto& r : recs) ASSERT_EQ(r.left, r.right);
  auto c = shadow::count_outcomes(recs);
  EXPECT_EQ(c.ud + c.du, 0u);
  EXPECT_EQ(c.total(), 100000u);
}

TEST(Sampler, QuarterTurnFrequenciesWithinFiveSigma) {
  const std::uint64_t n = 1'000'000;
  auto c = shadow::count_coincidences(0.0, kPi / 2, n, 31337, 0, 4);
  double tol = 5.0 * oracle::binomial_sd(0.25, static_cast<double>(n));
  auto f = c.frequencies();
  expect_dist(f, 0.25, 0.25, 0.25, 0.25, tol);
}

TEST(Sampler, RecordsAndCountsAgree) {
  auto recs = shadow::sample_coincidences(0.1, 1.7, 5000, 8, 2, 3);
  EXPECT_EQ(shadow::count_outcomes(recs), shadow::count_coincidences(0.1, 1.7, 5000, 8, 2, 1));
  for (std::size_t t = 0; t < recs.size(); ++t) {
    EXPECT_EQ(recs[t].trial, t);
    EXPECT_EQ(recs[t].seed_path, shadow::trial_stream_id(2, t));
  }
}

TEST(Sampler, DeterministicAndWorkerInvariant) {
  auto a = shadow::sample_coincidences(0.3, 2.2, 20000, 99);
  auto b = shadow::sample_coincidences(0.3, 2.2, 20000, 99);
  EXPECT_EQ(a, b);
  for (unsigned w : {2u, 3u, 7u, 16u}) {
    EXPECT_EQ(a, shadow::sample_coincidences(0.3, 2.2, 20000, 99, 0, w)) << w;
  }
  EXPECT_NE(a, shadow::sample_coincidences(0.3, 2.2, 20000, 100));
  EXPECT_EQ(shadow::count_coincidences(0.3, 2.2, 20000, 99, 0, 1),
            shadow::count_coincidences(0.3, 2.2, 20000, 99, 0, 5));
}

TEST(Sampler, PrefixStableWhenShotsGrow) {
  auto small = shadow::sample_coincidences(1.0, 2.0, 100, 5);
  auto large = shadow::sample_coincidences(1.0, 2.0, 1000, 5, 0, 4);
  for (std::size_t t = 0; t < small.size(); ++t) EXPECT_EQ(small[t], large[t]);
}

TEST(Sampler, ZeroShotsIsDomainError) {
  EXPECT_THROW(shadow::sample_coincidences(0.0, 0.0, 0, 1), shadow::DomainError);
  EXPECT_THROW(shadow::count_coincidences(0.0, 0.0, 0, 1), shadow::DomainError);
}

TEST(Sampler, AssignmentFollowsTheSameDraw) {
  auto L = shadow::build_rarity_tapster(0.0, 0.0);
  auto recs = shadow::sample_coincidences(0.0, 0.0, 200, 12);
  for (const auto& r : recs) {
    auto rng = shadow::trial_stream(12, 0, r.trial);
    EXPECT_EQ(shadow::assign_streams(L, rng).assignment, r.assignment);
  }
}

TEST(DrawOutcome, CumulativeBoundaries) {
  JointDistribution j{0, 0, 0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(shadow::draw_outcome(j, 0.0), std::make_pair(DetectorRole::up, DetectorRole::up));
  EXPECT_EQ(shadow::draw_outcome(j, 0.25), std::make_pair(DetectorRole::up, DetectorRole::down));
  EXPECT_EQ(shadow::draw_outcome(j, 0.5), std::make_pair(DetectorRole::down, DetectorRole::up));
  EXPECT_EQ(shadow::draw_outcome(j, 0.999), std::make_pair(DetectorRole::down, DetectorRole::down));
}

std::vector<shadow::CoincidenceRecord> fixed(DetectorRole l, DetectorRole r, std::size_t n) {
  std::vector<shadow::CoincidenceRecord> v(n);
  for (std::size_t t = 0; t < n; ++t) {
    v[t].trial = t;
    v[t].left = l;
    v[t].right = r;
  }
  return v;
}

TEST(EstimateChsh, AllUpUpGivesUnitCorrelation) {
  using R = DetectorRole;
  std::vector<std::vector<shadow::CoincidenceRecord>> g{
      fixed(R::up, R::up, 100), fixed(R::up, R::down, 100), fixed(R::down, R::down, 100),
      fixed(R::up, R::up, 100)};
  auto r = shadow::estimate_chsh_from_records(g, {0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(r.E[0], 1.0);
  EXPECT_DOUBLE_EQ(r.E[1], -1.0);
  EXPECT_DOUBLE_EQ(r.S, 4.0);
  EXPECT_DOUBLE_EQ(*r.S_stderr, 0.0);
  EXPECT_EQ(r.counts[2], 100u);
}

TEST(EstimateChsh, MinimumGroupAcceptedWithWideErrors) {
  std::vector<std::vector<shadow::CoincidenceRecord>> g;
  auto settings = shadow::chsh_settings(0, kPi / 2, kPi / 4, 3 * kPi / 4);
  for (std::size_t i = 0; i < 4; ++i) {
    g.push_back(shadow::sample_coincidences(settings[i].first, settings[i].second, 100, 3, i));
  }
  auto r = shadow::estimate_chsh_from_records(g, {0, kPi / 2, kPi / 4, 3 * kPi / 4});
  ASSERT_TRUE(r.S_stderr.has_value());
  EXPECT_GT(*r.S_stderr, 0.1);
  for (double se : *r.E_stderr) EXPECT_GT(se, 0.0);
}

TEST(EstimateChsh, MissingOrThinSettingIsDomainError) {
  using R = DetectorRole;
  std::vector<std::vector<shadow::CoincidenceRecord>> three{
      fixed(R::up, R::up, 100), fixed(R::up, R::up, 100), fixed(R::up, R::up, 100)};
  EXPECT_THROW(shadow::estimate_chsh_from_records(three, {}), shadow::DomainError);
  auto thin = three;
  thin.push_back(fixed(R::up, R::up, 99));
  EXPECT_THROW(shadow::estimate_chsh_from_records(thin, {}), shadow::DomainError);
}

TEST(MonteCarloChsh, MillionShotsPerSettingViolates) {
  auto r = shadow::monte_carlo_chsh(0, kPi / 2, kPi / 4, 3 * kPi / 4, 1'000'000, 20240601, 8);
  ASSERT_TRUE(r.S_stderr.has_value());
  EXPECT_LT(std::abs(r.S - kTsirelson), 3.0 * *r.S_stderr);
  EXPECT_NEAR(r.S, 2.828, 0.005);
  EXPECT_GT(r.lower_bound(3.0), 2.0);
  EXPECT_TRUE(r.violated);
}

TEST(MonteCarlo, MarginalsStayAtOneHalfForAnyBeta) {
  oracle::Gen g(55);
  const std::uint64_t n = 1'000'000;
  const double tol = 3.0 * oracle::binomial_sd(0.5, static_cast<double>(n));
  int outside = 0;
  for (int k = 0; k < 20; ++k) {
    double beta = g.angle();
    EXPECT_NEAR(shadow::joint_distribution(0.8, beta).left_up(), 0.5, 1e-15);
    auto c = shadow::count_coincidences(0.8, beta, n, 1000 + k, 0, 8);
    if (std::abs(c.frequencies().left_up() - 0.5) > tol) ++outside;
  }
  EXPECT_EQ(outside, 0);
}

TEST(MonteCarlo, EmpiricalErrorShrinksAsInverseSqrtShots) {
  std::vector<double> x, y;
  const double alpha = 0.3, beta = 1.9;
  auto exact = shadow::joint_distribution(alpha, beta);
  for (std::uint64_t shots : {1'000ull, 10'000ull, 100'000ull, 1'000'000ull}) {
    // Average over replicate seeds so the slope reflects scaling, not luck.
    double mean = 0.0;
    const int reps = 16;
    for (int r = 0; r < reps; ++r) {
      auto c = shadow::count_coincidences(alpha, beta, shots, 500 + r, 0, 8);
      mean += shadow::max_abs_difference(c.frequencies(), exact);
    }
    x.push_back(std::log10(static_cast<double>(shots)));
    y.push_back(std::log10(mean / reps));
  }
  EXPECT_NEAR(oracle::slope(x, y), -0.5, 0.1);
}

}  // namespace

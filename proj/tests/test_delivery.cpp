#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "cachenet/bounds.hpp"
#include "cachenet/delivery.hpp"
#include "oracles.hpp"

using namespace cachenet;

TEST(NonadaptiveRate, Examples) {
  EXPECT_NEAR(rate_nonadaptive(centralized_profile(9, 1.0 / 9.0), 3), 4.0, 1e-12);
  EXPECT_NEAR(rate_nonadaptive(centralized_profile(9, 0.025), 3), 3.225, 1e-12);
  EXPECT_NEAR(rate_nonadaptive(centralized_profile(4, 0.0), 4), 4.0, 1e-12);
  EXPECT_THROW(rate_nonadaptive(centralized_profile(4, 0.5), 5), ConfigError);
  EXPECT_THROW(rate_nonadaptive(centralized_profile(4, 0.5), 0), ConfigError);
}

TEST(PeakRates, Examples) {
  EXPECT_NEAR(peak_rate_centralized(9, 1.0 / 9.0), 4.0, 1e-12);
  EXPECT_NEAR(peak_rate_centralized(6, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(peak_rate_centralized(6, 0.0), 6.0, 1e-12);
  EXPECT_THROW(peak_rate_centralized(5, 0.3), ConfigError);
  EXPECT_NEAR(peak_rate_decentralized(2, 0.5), 0.75, 1e-12);
  EXPECT_NEAR(peak_rate_decentralized(7, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(peak_rate_decentralized(7, 0.0), 7.0, 1e-12);
}

TEST(PeakRates, MatchNonadaptiveAtFullDistinct) {
  for (int k = 1; k <= 10; ++k) {
    for (int t = 0; t <= k; ++t) {
      const double m = static_cast<double>(t) / k;
      EXPECT_NEAR(rate_nonadaptive(centralized_profile(k, m), k), peak_rate_centralized(k, m), 1e-9);
    }
    for (int j = 1; j <= 39; ++j) {
      const double m = 0.025 * j;
      EXPECT_NEAR(rate_nonadaptive(decentralized_profile(k, m), k), peak_rate_decentralized(k, m), 1e-9);
    }
  }
}

TEST(Shat, Examples) {
  EXPECT_EQ(shat(9, 3), 1);
  EXPECT_EQ(shat(9, 9), 0);
  EXPECT_EQ(shat(8, 1), 3);
  EXPECT_THROW(shat(3, 4), ConfigError);
}

TEST(SimplifiedPlan, Examples) {
  const auto a = simplified_plan(centralized_profile(9, 1.0 / 9.0), 3);
  EXPECT_EQ(a.shat, 1);
  EXPECT_NEAR(a.y[0], 1.0, 1e-12);
  EXPECT_NEAR(a.rate, 3.0, 1e-12);

  const auto b = simplified_plan(centralized_profile(9, 0.025), 3);
  EXPECT_NEAR(b.y[0], 1.0, 1e-12);
  EXPECT_NEAR(b.rate, 3.0, 1e-12);

  const auto p = decentralized_profile(6, 0.4);
  const auto c = simplified_plan(p, 6);
  EXPECT_EQ(c.y, p.x);
  EXPECT_NEAR(c.rate, rate_nonadaptive(p, 6), 1e-12);
}

// The closed-form rule reaches the minimum over every keep/transfer choice per size class.
TEST(SimplifiedPlan, MatchesExhaustiveChoice) {
  for (int k = 1; k <= 6; ++k) {
    for (double m : {0.1, 0.25, 0.4, 0.6, 0.85}) {
      for (const auto& p : {centralized_profile(k, m), decentralized_profile(k, m)}) {
        for (int l = 1; l <= k; ++l) {
          const auto plan = simplified_plan(p, l);
          EXPECT_NEAR(plan.rate, oracle::simplified_exhaustive(p.x, l), 1e-9)
              << to_string(p.scheme) << " K=" << k << " m=" << m << " L=" << l;
          EXPECT_LE(plan.rate, rate_nonadaptive(p, l) + 1e-12);
          EXPECT_NEAR(validate_profile(PlacementProfile{p.scheme, m, plan.y}, k, m).partition_residual, 0.0, 1e-9);
        }
      }
    }
  }
}

TEST(AdaptivePlan, SymmetricPatternMatchesSimplified) {
  const auto p = centralized_profile(9, 1.0 / 9.0);
  const DemandVector d({1, 1, 1, 2, 2, 2, 3, 3, 3});
  const auto a = adaptive_plan(p, d);
  EXPECT_NEAR(a.rate, 3.0, 1e-9);
  EXPECT_NEAR(a.rate, simplified_plan(p, 3).rate, 1e-9);
  EXPECT_LE(a.plan.max_violation(), 1e-9);
  EXPECT_NEAR(a.plan.rate(), a.rate, 1e-9);
}

TEST(AdaptivePlan, AsymmetricPatternGapReduction) {
  const auto p = centralized_profile(9, 0.025);
  const double na = rate_nonadaptive(p, 3);
  const double ad = adaptive_rate(p, RedundancyPattern({7, 1, 1}));
  const double lb = cutset_bound(9, 3, 1000, 0.025 * 1000).value;
  EXPECT_NEAR((na - ad) / (na - lb), 0.78, 0.03);
}

TEST(AdaptivePlan, RejectsMismatchedProfile) {
  EXPECT_THROW(adaptive_plan(centralized_profile(4, 0.5), DemandVector({1, 2, 3})), ConfigError);
}

// Orbit-reduced LP, full LP and the independent literal LP give the same optimum.
TEST(AdaptivePlan, MatchesLiteralLp) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mdist(0.0, 1.0);
  std::uniform_int_distribution<int> sdist(0, 2);
  for (int trial = 0; trial < 120; ++trial) {
    const int k = 2 + trial % 4;
    const double m = mdist(rng);
    const auto p = make_profile(static_cast<PlacementScheme>(sdist(rng)), k, m);
    const auto demand = oracle::random_demand(rng, k, k);
    const DemandVector d(demand);
    const auto literal = lp::solve(oracle::literal_selection_lp(p.x, demand));
    ASSERT_EQ(literal.status, lp::Status::optimal);
    const auto reduced = adaptive_plan(p, d);
    const auto full = adaptive_plan_full(p, d);
    EXPECT_NEAR(reduced.rate, literal.value, 1e-8) << "trial " << trial;
    EXPECT_NEAR(full.rate, literal.value, 1e-8) << "trial " << trial;
    EXPECT_LE(reduced.plan.max_violation(), 1e-9);
    EXPECT_NEAR(reduced.plan.rate(), reduced.rate, 1e-8);
    EXPECT_LE(reduced.lp_variables, full.lp_variables);
  }
}

TEST(AdaptivePlan, TwoCacheLpAgreesWithVertexEnumeration) {
  for (double m : {0.0, 0.2, 0.5, 0.7, 1.0}) {
    for (const auto& demand : {std::vector<int>{1, 2}, std::vector<int>{1, 1}}) {
      const auto p = decentralized_profile(2, m);
      const auto expected = oracle::brute_force_lp(oracle::literal_selection_lp(p.x, demand));
      ASSERT_TRUE(expected.has_value());
      EXPECT_NEAR(adaptive_plan(p, DemandVector(demand)).rate, *expected, 1e-9) << "m=" << m;
    }
  }
}

TEST(AdaptivePlan, DominanceChain) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mdist(0.0, 1.0);
  std::uniform_int_distribution<int> sdist(0, 2);
  for (int trial = 0; trial < 80; ++trial) {
    const int k = 2 + trial % 6;
    const double m = mdist(rng);
    const auto p = make_profile(static_cast<PlacementScheme>(sdist(rng)), k, m);
    const DemandVector d(oracle::random_demand(rng, k, k));
    const int l = redundancy_pattern(d).distinct;
    const double bound = cutset_bound(k, l, 1000, m * 1000).value;
    const double ad = adaptive_plan(p, d).rate;
    const double si = simplified_plan(p, l).rate;
    const double na = rate_nonadaptive(p, l);
    EXPECT_LE(bound, ad + 1e-7) << "trial " << trial;
    EXPECT_LE(ad, si + 1e-7) << "trial " << trial;
    EXPECT_LE(si, na + 1e-7) << "trial " << trial;
  }
}

TEST(AdaptivePlan, AllDistinctCollapsesToNonadaptive) {
  for (int k = 2; k <= 7; ++k) {
    std::vector<int> files(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) files[static_cast<std::size_t>(i)] = k - i;
    for (double m : {0.05, 0.3, 0.55, 0.9}) {
      for (auto scheme : {PlacementScheme::centralized, PlacementScheme::decentralized, PlacementScheme::lp}) {
        const auto p = make_profile(scheme, k, m);
        const double na = rate_nonadaptive(p, k);
        EXPECT_NEAR(adaptive_plan(p, DemandVector(files)).rate, na, 1e-9)
            << to_string(scheme) << " K=" << k << " m=" << m;
        EXPECT_NEAR(simplified_plan(p, k).rate, na, 1e-12);
      }
    }
  }
}

TEST(AdaptivePlan, AsymmetryOrdering) {
  for (double m : {0.025, 0.1}) {
    const auto p = centralized_profile(9, m);
    const double r711 = adaptive_rate(p, RedundancyPattern({7, 1, 1}));
    const double r441 = adaptive_rate(p, RedundancyPattern({4, 4, 1}));
    const double r522 = adaptive_rate(p, RedundancyPattern({5, 2, 2}));
    const double r333 = adaptive_rate(p, RedundancyPattern({3, 3, 3}));
    EXPECT_LE(r711, r441 + 1e-9) << "m=" << m;
    EXPECT_LE(r441, r522 + 1e-9) << "m=" << m;
    EXPECT_LE(r522, r333 + 1e-9) << "m=" << m;
  }
}

TEST(AdaptivePlan, InvariantUnderPermutationAndRelabeling) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 3 + trial % 4;
    const auto p = decentralized_profile(k, 0.35);
    auto demand = oracle::random_demand(rng, k, 3);
    const double base = adaptive_plan(p, DemandVector(demand)).rate;
    std::shuffle(demand.begin(), demand.end(), rng);
    EXPECT_NEAR(adaptive_plan(p, DemandVector(demand)).rate, base, 1e-9);
    for (auto& v : demand) v = 100 - 7 * v;
    EXPECT_NEAR(adaptive_plan(p, DemandVector(demand)).rate, base, 1e-9);
  }
}

TEST(TransferPlan, IdentityAndSymmetricPlans) {
  const auto p = centralized_profile(4, 0.3);
  const DemandVector d({2, 2, 5, 7});
  const auto id = TransferPlan::identity(d, p);
  EXPECT_NEAR(id.rate(), rate_nonadaptive(p, 3), 1e-12);
  EXPECT_LE(id.max_violation(), 1e-12);

  const auto s = simplified_plan(p, 3);
  const auto plan = TransferPlan::from_symmetric(d, p.x, s.y);
  EXPECT_NEAR(plan.rate(), s.rate, 1e-12);
  EXPECT_LE(plan.max_violation(), 1e-12);
  EXPECT_THROW(plan.fraction(3, CacheSubset(0)), ConfigError);
}

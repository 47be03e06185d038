#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "cachenet/placement.hpp"
#include "oracles.hpp"

using namespace cachenet;

namespace {

void expect_profile(const PlacementProfile& p, std::vector<double> want, double tol = 1e-12) {
  ASSERT_EQ(p.x.size(), want.size());
  for (std::size_t s = 0; s < want.size(); ++s) EXPECT_NEAR(p.x[s], want[s], tol) << "x_" << s;
}

}  // namespace

TEST(CentralizedProfile, FiveCacheTable) {
  expect_profile(centralized_profile(5, 0.1), {0.5, 0.1, 0, 0, 0, 0});
  expect_profile(centralized_profile(5, 0.2), {0, 0.2, 0, 0, 0, 0});
  expect_profile(centralized_profile(5, 0.3), {0, 0.1, 0.05, 0, 0, 0});
  expect_profile(centralized_profile(5, 0.5), {0, 0, 0.05, 0.05, 0, 0});
  expect_profile(centralized_profile(5, 0.8), {0, 0, 0, 0, 0.2, 0});
  expect_profile(centralized_profile(5, 0.9), {0, 0, 0, 0, 0.1, 0.5});
}

TEST(CentralizedProfile, Extremes) {
  expect_profile(centralized_profile(4, 0.0), {1, 0, 0, 0, 0});
  expect_profile(centralized_profile(4, 1.0), {0, 0, 0, 0, 1});
  // t = 3 * (1/3) lands within rounding of an integer.
  expect_profile(centralized_profile(3, 1.0 / 3.0), {0, 1.0 / 3.0, 0, 0});
}

TEST(DecentralizedProfile, Examples) {
  expect_profile(decentralized_profile(2, 0.5), {0.25, 0.25, 0.25});
  expect_profile(decentralized_profile(3, 0.2), {0.512, 0.128, 0.032, 0.008});
  expect_profile(decentralized_profile(6, 1e-9), {1, 0, 0, 0, 0, 0, 0}, 1e-8);
}

TEST(Profiles, RejectBadInputs) {
  EXPECT_THROW(centralized_profile(5, 1.1), ConfigError);
  EXPECT_THROW(decentralized_profile(5, -0.1), ConfigError);
  EXPECT_THROW(centralized_profile(13, 0.5), ConfigError);
  EXPECT_THROW(solve_placement_lp(0, 0.5), ConfigError);
  EXPECT_THROW(parse_placement("random"), ConfigError);
  EXPECT_EQ(parse_placement("lp"), PlacementScheme::lp);
}

TEST(Profiles, CapacityIsTightInside) {
  for (int k = 1; k <= 12; ++k) {
    for (int j = 1; j < 40; ++j) {
      const double m = 0.025 * j;
      for (const auto& p : {centralized_profile(k, m), decentralized_profile(k, m)}) {
        const auto r = validate_profile(p, k, m);
        EXPECT_TRUE(r.ok()) << to_string(p.scheme) << " K=" << k << " m=" << m;
        EXPECT_LT(std::abs(r.capacity_residual), 1e-9) << to_string(p.scheme) << " K=" << k << " m=" << m;
      }
    }
  }
}

TEST(ValidateProfile, Examples) {
  EXPECT_TRUE(validate_profile(centralized_profile(5, 0.2), 5, 0.2).ok());
  EXPECT_NEAR(validate_profile(centralized_profile(5, 0.2), 5, 0.2).capacity_residual, 0.0, 1e-15);

  PlacementProfile bad{PlacementScheme::centralized, 0.1, {1.0, 0.1, 0.0}};
  const auto r = validate_profile(bad, 2, 0.1);
  EXPECT_FALSE(r.partition_ok);
  EXPECT_FALSE(r.ok());

  EXPECT_TRUE(validate_profile(decentralized_profile(8, 0.3), 8, 0.3).ok());

  PlacementProfile negative{PlacementScheme::lp, 0.5, {0.6, -0.1, 0.3}};
  EXPECT_FALSE(validate_profile(negative, 2, 0.5).nonnegative);
  EXPECT_FALSE(validate_profile(centralized_profile(3, 0.5), 4, 0.5).ok());
}

TEST(PlacementLp, Examples) {
  EXPECT_NEAR(worst_case_rate(solve_placement_lp(5, 0.3)), worst_case_rate(centralized_profile(5, 0.3)), 1e-9);
  const auto full = solve_placement_lp(9, 1.0);
  EXPECT_NEAR(full.x[9], 1.0, 1e-9);
  EXPECT_NEAR(worst_case_rate(full), 0.0, 1e-9);
  EXPECT_NEAR(worst_case_rate(solve_placement_lp(4, 0.37)), worst_case_rate(centralized_profile(4, 0.37)), 1e-9);
}

// The closed form and the LP both reach the vertex-enumeration optimum.
TEST(PlacementLp, MatchesClosedFormAndVertexOracle) {
  for (int k = 2; k <= 10; ++k) {
    for (int j = 1; j <= 39; ++j) {
      const double m = 0.025 * j;
      const double oracle_value = oracle::placement_vertex_optimum(k, m);
      const auto lp_profile = solve_placement_lp(k, m);
      EXPECT_TRUE(validate_profile(lp_profile, k, m, 1e-9).ok());
      EXPECT_NEAR(worst_case_rate(lp_profile), oracle_value, 1e-9) << "K=" << k << " m=" << m;
      EXPECT_NEAR(worst_case_rate(centralized_profile(k, m)), oracle_value, 1e-9) << "K=" << k << " m=" << m;
    }
  }
}

TEST(PlacementProfile, CsvRow) {
  EXPECT_EQ(centralized_profile(5, 0.1).csv_row(), "centralized,5,0.1,0.5,0.1,0,0,0,0");
  EXPECT_EQ(decentralized_profile(2, 0.5).csv_row(), "decentralized,2,0.5,0.25,0.25,0.25");
}

namespace {

void expect_exact_partition(const PartitionMap& pm) {
  const std::size_t f = pm.file_length();
  for (int file : pm.files()) {
    std::vector<int> seen(f, 0);
    for (std::uint32_t mask = 0; mask < (1u << pm.caches()); ++mask) {
      for (auto i : pm.part(file, CacheSubset(mask))) {
        ASSERT_LT(i, f);
        ++seen[i];
      }
    }
    for (std::size_t i = 0; i < f; ++i) ASSERT_EQ(seen[i], 1) << "file " << file << " symbol " << i;
  }
}

}  // namespace

TEST(Materialize, TwoCachesHalfFull) {
  const auto pm = materialize_partition(SystemConfig{2, 2, 0.5, 2}, centralized_profile(2, 0.5), 1);
  for (int file : {1, 2}) {
    EXPECT_EQ(pm.part(file, CacheSubset::of({1})), (std::vector<std::uint32_t>{0}));
    EXPECT_EQ(pm.part(file, CacheSubset::of({2})), (std::vector<std::uint32_t>{1}));
    EXPECT_TRUE(pm.part(file, CacheSubset(0)).empty());
    EXPECT_TRUE(pm.part(file, CacheSubset::of({1, 2})).empty());
  }
}

TEST(Materialize, ThreeEqualSubfiles) {
  const auto pm = materialize_partition(SystemConfig{3, 3, 1.0 / 3.0, 6}, centralized_profile(3, 1.0 / 3.0), 1);
  for (int c = 1; c <= 3; ++c) EXPECT_EQ(pm.part(1, CacheSubset::of({c})).size(), 2u);
  expect_exact_partition(pm);
}

TEST(Materialize, PartitionPropertyAndCapacity) {
  for (int k = 1; k <= 6; ++k) {
    for (double m : {0.0, 0.13, 0.3, 0.5, 0.77, 1.0}) {
      for (auto scheme : {PlacementScheme::centralized, PlacementScheme::decentralized, PlacementScheme::lp}) {
        const SystemConfig sys{k, k + 2, m, 997};
        const auto p = make_profile(scheme, k, m);
        const auto pm = materialize_partition(sys, p, 42);
        expect_exact_partition(pm);
        if (scheme != PlacementScheme::decentralized) {
          // Per-file storage at each cache is within one symbol per subset of m*F.
          for (int c = 1; c <= k; ++c) {
            const double per_file = static_cast<double>(pm.stored_symbols(c)) / sys.files;
            EXPECT_LE(std::abs(per_file - m * 997), static_cast<double>(1u << k));
          }
        }
      }
    }
  }
}

TEST(Materialize, DecentralizedFractionsNearExpected) {
  const auto pm = materialize_partition(SystemConfig{2, 2, 0.5, 10000}, decentralized_profile(2, 0.5), 5, {1});
  for (std::uint32_t mask = 0; mask < 4; ++mask) {
    EXPECT_NEAR(static_cast<double>(pm.part(1, CacheSubset(mask)).size()) / 1e4, 0.25, 0.02);
  }
}

TEST(Materialize, DecentralizedConvergesAtLargeF) {
  const int k = 3;
  const double q = 0.3;
  const std::size_t f = 100000;
  const auto pm = materialize_partition(SystemConfig{k, k, q, f}, decentralized_profile(k, q), 17, {1, 2});
  for (int file : {1, 2}) {
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
      const int s = std::popcount(mask);
      const double p = std::pow(q, s) * std::pow(1 - q, k - s);
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(f));
      const double got = static_cast<double>(pm.part(file, CacheSubset(mask)).size()) / static_cast<double>(f);
      EXPECT_LE(std::abs(got - p), 3 * sigma) << "file " << file << " mask " << mask;
    }
  }
}

TEST(Materialize, FileSubsetsAgreeWithFullLibrary) {
  const SystemConfig sys{3, 5, 0.4, 500};
  const auto p = decentralized_profile(3, 0.4);
  const auto all = materialize_partition(sys, p, 9);
  const auto some = materialize_partition(sys, p, 9, {4, 2});
  for (int file : {2, 4}) {
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
      EXPECT_EQ(all.part(file, CacheSubset(mask)), some.part(file, CacheSubset(mask)));
    }
  }
  EXPECT_FALSE(some.has_file(1));
  EXPECT_THROW(some.part(1, CacheSubset(0)), ConfigError);
}

TEST(Materialize, RejectsMismatches) {
  EXPECT_THROW(materialize_partition(SystemConfig{3, 3, 0.5, 0}, centralized_profile(3, 0.5), 1), ConfigError);
  EXPECT_THROW(materialize_partition(SystemConfig{3, 3, 0.5, 10}, centralized_profile(4, 0.5), 1), ConfigError);
}

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "hkembed/distmat.hpp"
#include "hkembed/errors.hpp"
#include "test_util.hpp"

using namespace hkembed;
using hkembed::testutil::normalized;
using hkembed::testutil::random_grid_measure;

namespace {

HKParams hk(double epsilon) {
  HKParams p;
  p.epsilon = epsilon;
  return p;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hkembed_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::vector<GridMeasure> random_measures(std::size_t count, std::uint64_t seed, bool unit_mass) {
  std::mt19937_64 rng(seed);
  std::vector<GridMeasure> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto m = random_grid_measure(rng, 4 + i % 4, 6);
    out.push_back(unit_mass ? normalized(m) : m);
  }
  return out;
}

}  // namespace

TEST(CondensedIndex, IsABijection) {
  for (std::size_t n : {2u, 3u, 7u, 20u}) {
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto k = DistanceMatrix::index(i, j, n);
        EXPECT_LT(k, DistanceMatrix::condensed_size(n));
        seen.insert(k);
      }
    }
    EXPECT_EQ(seen.size(), DistanceMatrix::condensed_size(n));
  }
}

TEST(DistanceMatrix, AccessorsAndSquare) {
  DistanceMatrix m(3, MetricKind::euclidean(), {1.0, 2.0, 3.0}, {});
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(0, 1), 1.0);
  EXPECT_EQ(m(2, 0), 2.0);
  EXPECT_EQ(m(1, 2), 3.0);
  const auto sq = m.square();
  EXPECT_EQ(sq, sq.transpose());
  const std::vector<std::size_t> pick{2, 0};
  const auto sub = m.subset(pick);
  EXPECT_EQ(sub.n(), 2u);
  EXPECT_EQ(sub(0, 1), 2.0);
  EXPECT_THROW(DistanceMatrix(3, MetricKind::euclidean(), {1.0, 2.0}, {}), Error);
  EXPECT_THROW(DistanceMatrix(2, MetricKind::euclidean(), {-1.0}, {}), Error);
}

TEST(ComputePairwise, IdenticalImagesGiveZero) {
  std::mt19937_64 rng(3);
  const auto m = random_grid_measure(rng, 6, 5);
  const std::vector<GridMeasure> same{normalized(m), normalized(m)};
  EXPECT_NEAR(compute_pairwise(std::span<const GridMeasure>(same), MetricKind::ot(), 1).values()[0], 0.0, 1e-12);

  // Unit masses on a coarse grid keep the entropic reference bias below 1e-6.
  const std::vector<GridMeasure> units{GridMeasure({{0.1, 0.1}, {0.6, 0.4}}, {1.0, 1.0}),
                                       GridMeasure({{0.1, 0.1}, {0.6, 0.4}}, {1.0, 1.0})};
  EXPECT_LE(compute_pairwise(std::span<const GridMeasure>(units), MetricKind::uot(hk(1e-4)), 1).values()[0], 1e-6);

  const std::vector<std::vector<double>> vecs{{0.5, 0.25, 1.0}, {0.5, 0.25, 1.0}};
  EXPECT_EQ(compute_pairwise(std::span<const std::vector<double>>(vecs), MetricKind::euclidean(), 1).values()[0], 0.0);
}

TEST(ComputePairwise, DiracsAtMutualDistance) {
  const double r = 0.2;
  const std::vector<GridMeasure> diracs{GridMeasure::dirac({0.3, 0.3}), GridMeasure::dirac({0.3 + r, 0.3}),
                                        GridMeasure::dirac({0.3 + r / 2, 0.3 + r * std::sqrt(3.0) / 2})};
  const auto d = compute_pairwise(std::span<const GridMeasure>(diracs), MetricKind::ot(), 2);
  for (double v : d.values()) EXPECT_NEAR(v, r, 1e-12);
}

TEST(ComputePairwise, IndependentOfWorkerCount) {
  for (bool uot : {false, true}) {
    const auto ms = random_measures(10, 17, !uot);
    const MetricKind kind = uot ? MetricKind::uot(hk(1e-2)) : MetricKind::ot();
    PairwiseStats s1, s4;
    const auto a = compute_pairwise(std::span<const GridMeasure>(ms), kind, 1, &s1);
    const auto b = compute_pairwise(std::span<const GridMeasure>(ms), kind, 4, &s4);
    ASSERT_EQ(a.values().size(), b.values().size());
    EXPECT_EQ(0, std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(double)));
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    EXPECT_EQ(s1.solves, 45u);
    EXPECT_EQ(s4.solves, 45u);
  }
}

TEST(ComputePairwise, OtRequiresUnitMass) {
  const auto ms = random_measures(3, 5, false);
  EXPECT_THROW(compute_pairwise(std::span<const GridMeasure>(ms), MetricKind::ot(), 1), MassMismatch);
}

TEST(ComputePairwise, UotEpsilonIsResolvedOncePerDataset) {
  const auto ms = random_measures(4, 9, false);
  HKParams p;
  const auto d = compute_pairwise(std::span<const GridMeasure>(ms), MetricKind::uot(p), 1);
  ASSERT_TRUE(d.metric().hk->epsilon.has_value());
  EXPECT_DOUBLE_EQ(*d.metric().hk->epsilon, resolve_uot_epsilon(ms, p.kappa));
}

TEST(Cache, RoundTrip) {
  const auto ms = random_measures(6, 21, true);
  const auto d = compute_pairwise(std::span<const GridMeasure>(ms), MetricKind::ot(), 1);
  const auto path = temp_file("roundtrip.uotm");
  save_cache(d, path);
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".partial"));
  const auto back = load_cache(path, d.fingerprint());
  EXPECT_TRUE(back == d);
  EXPECT_EQ(back.metric().kind, Metric::OT);
}

TEST(Cache, TruncatedFileIsCorrupt) {
  const auto ms = random_measures(5, 2, true);
  const auto d = compute_pairwise(std::span<const GridMeasure>(ms), MetricKind::ot(), 1);
  const auto path = temp_file("truncated.uotm");
  save_cache(d, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(load_cache(path), CorruptCache);

  const auto junk = temp_file("junk.uotm");
  std::ofstream(junk) << "not a cache";
  EXPECT_THROW(load_cache(junk), CorruptCache);
}

TEST(Cache, DifferentParametersMismatch) {
  const auto ms = random_measures(4, 8, false);
  const auto d = compute_pairwise(std::span<const GridMeasure>(ms), MetricKind::uot(hk(1e-2)), 1);
  const auto path = temp_file("params.uotm");
  save_cache(d, path);
  const auto other = fingerprint_measures(ms, MetricKind::uot(hk(2e-2)));
  EXPECT_NE(other, d.fingerprint());
  EXPECT_THROW(load_cache(path, other), FingerprintMismatch);
  EXPECT_NO_THROW(load_cache(path, fingerprint_measures(ms, MetricKind::uot(hk(1e-2)))));
}

TEST(MetricAxioms, ExactW2HasNoTriangleViolations) {
  const auto ms = random_measures(12, 33, true);
  const auto d = compute_pairwise(std::span<const GridMeasure>(ms), MetricKind::ot(), 1);
  const auto r = metric_axiom_report(d, 0, 0);
  EXPECT_EQ(r.triples_checked, 12u * 11u * 10u);
  EXPECT_LE(r.max_triangle_violation, 1e-9);
  EXPECT_EQ(r.max_asymmetry, 0.0);
  EXPECT_GT(r.min_value, 0.0);
}

TEST(MetricAxioms, ZeroAndEuclideanMatrices) {
  DistanceMatrix zero(5, MetricKind::euclidean(), std::vector<double>(10, 0.0), {});
  EXPECT_EQ(metric_axiom_report(zero, 0, 0).max_triangle_violation, 0.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> pts(15, std::vector<double>(4));
  for (auto& p : pts) {
    for (auto& x : p) x = g(rng);
  }
  const auto d = compute_pairwise(std::span<const std::vector<double>>(pts), MetricKind::euclidean(), 1);
  EXPECT_LE(metric_axiom_report(d, 0, 0).max_triangle_violation, 1e-12);
  const auto sampled = metric_axiom_report(d, 500, 7);
  EXPECT_EQ(sampled.triples_checked, 500u);
}

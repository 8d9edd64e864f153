#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "hkembed/embed.hpp"
#include "hkembed/errors.hpp"
#include "hkembed/linalg.hpp"

using namespace hkembed;

namespace {

DistanceMatrix from_points(const Eigen::MatrixXd& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      v.push_back((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm());
    }
  }
  return DistanceMatrix(n, MetricKind::euclidean(), std::move(v), {});
}

Eigen::MatrixXd pairwise(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).norm();
  }
  return d;
}

Eigen::MatrixXd random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

Eigen::MatrixXd low_rank_data(std::size_t n, std::size_t p, std::size_t rank, std::uint64_t seed) {
  return random_points(n, rank, seed) * random_points(rank, p, seed + 1);
}

}  // namespace

TEST(SymmetricEigen, Examples) {
  const auto id = symmetric_eigendecomposition(Eigen::MatrixXd::Identity(4, 4), 4, EigenOrder::Descending);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(id.values[i], 1.0, 1e-15);

  const Eigen::MatrixXd d = Eigen::Vector3d(3, 1, 2).asDiagonal();
  const auto desc = symmetric_eigendecomposition(d, 3, EigenOrder::Descending);
  EXPECT_NEAR(desc.values[0], 3.0, 1e-14);
  EXPECT_NEAR(desc.values[1], 2.0, 1e-14);
  EXPECT_NEAR(desc.values[2], 1.0, 1e-14);
  const auto asc = symmetric_eigendecomposition(d, 2, EigenOrder::Ascending);
  EXPECT_EQ(asc.values.size(), 2);
  EXPECT_NEAR(asc.values[0], 1.0, 1e-14);
}

TEST(SymmetricEigen, ResidualOnRandomMatrix) {
  Eigen::MatrixXd a = random_points(10, 10, 5);
  a = (a + a.transpose()).eval();
  const auto e = symmetric_eigendecomposition(a, 10, EigenOrder::Descending);
  for (Eigen::Index k = 0; k < 10; ++k) {
    EXPECT_LE((a * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm(), 1e-8);
    Eigen::Index arg = 0;
    e.vectors.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(e.vectors(arg, k), 0.0);
    if (k > 0) EXPECT_GE(e.values[k - 1], e.values[k]);
  }
  a(0, 1) += 1e-3;
  EXPECT_THROW(symmetric_eigendecomposition(a, 2, EigenOrder::Descending), InvalidArgument);
}

TEST(ChooseDimension, Examples) {
  const std::vector<double> s{2.0, 1.0, 1.0};
  EXPECT_EQ(choose_dimension(s, 0.8), 2u);
  EXPECT_EQ(choose_dimension(s, 1e-9), 1u);
  EXPECT_EQ(choose_dimension(s, 0.6), 1u);
  EXPECT_EQ(choose_dimension(s, 0.99), 3u);
}

TEST(EmbeddingDimension, RecoversRankAndIsMonotone) {
  for (std::size_t rank : {3u, 7u}) {
    const Eigen::MatrixXd data = low_rank_data(60, 25, rank, 100 + rank);
    const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(centered);
    lu.setThreshold(1e-10);
    ASSERT_EQ(static_cast<std::size_t>(lu.rank()), rank);
    EXPECT_EQ(embedding_dimension(data, 0.999).chosen_dimension, rank);

    std::size_t last = 0;
    for (double a : {0.5, 0.9, 0.97, 0.99, 0.999}) {
      const auto d = embedding_dimension(data, a).chosen_dimension;
      EXPECT_GE(d, last);
      last = d;
    }
  }
  EXPECT_THROW(embedding_dimension(Eigen::MatrixXd::Ones(4, 3), 1.0), InvalidArgument);
}

TEST(ClassicalMds, Examples) {
  Eigen::MatrixXd line(3, 1);
  line << 0, 1, 3;
  const auto e = classical_mds(from_points(line), 1);
  EXPECT_LE((pairwise(e.coords) - pairwise(line)).cwiseAbs().maxCoeff(), 1e-9);

  Eigen::MatrixXd square(4, 2);
  square << 0, 0, 1, 0, 1, 1, 0, 1;
  const auto s = classical_mds(from_points(square), 2);
  EXPECT_LE((pairwise(s.coords) - pairwise(square)).cwiseAbs().maxCoeff(), 1e-9);

  const auto z = classical_mds(DistanceMatrix(5, MetricKind::euclidean(), std::vector<double>(10, 0.0), {}), 2);
  EXPECT_EQ(z.coords.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ClassicalMds, ReproducesEuclideanRealizableDistances) {
  const Eigen::MatrixXd x = random_points(20, 3, 8);
  const auto e = classical_mds(from_points(x), 3);
  const Eigen::MatrixXd want = pairwise(x);
  EXPECT_LE((pairwise(e.coords) - want).norm(), 1e-8 * want.norm());
  EXPECT_THROW(classical_mds(from_points(x), 20), InvalidArgument);
}

TEST(KnnGraph, Examples) {
  const DistanceMatrix d(3, MetricKind::euclidean(), {1.0, 3.0, 2.0}, {});
  const auto g = knn_graph(d, 1);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_TRUE(g.repair_edges.empty());

  const auto full = knn_graph(from_points(random_points(7, 2, 1)), 6);
  EXPECT_EQ(full.edge_count(), 21u);
}

TEST(KnnGraph, RepairJoinsFarClustersAtTheShortestCrossPair) {
  Eigen::MatrixXd x(8, 2);
  x << 0, 0, 0.1, 0, 0.25, 0.02, 0.45, 0, 10, 3, 10.1, 3.05, 10.3, 3.0, 10.6, 3.1;
  const auto d = from_points(x);
  const auto g = knn_graph(d, 1);
  ASSERT_EQ(g.repair_edges.size(), 1u);
  double best = 1e300;
  std::pair<std::size_t, std::size_t> pair;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 4; j < 8; ++j) {
      if (d(i, j) < best) {
        best = d(i, j);
        pair = {i, j};
      }
    }
  }
  EXPECT_EQ(g.repair_edges[0], pair);
  EXPECT_TRUE(g.has_edge(pair.first, pair.second));
}

TEST(Isomap, LineAndCompleteGraph) {
  Eigen::MatrixXd line(6, 1);
  line << 0, 0.5, 1.7, 2.0, 3.1, 5.0;
  const auto d = from_points(line);
  for (std::size_t k : {1u, 2u, 4u}) {
    const Eigen::MatrixXd geo = graph_geodesics(knn_graph(d, k));
    EXPECT_LE((geo - d.square()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_LE((pairwise(isomap(d, 1, 1).coords) - d.square()).cwiseAbs().maxCoeff(), 1e-9);

  const auto cloud = from_points(random_points(12, 3, 2));
  const auto iso = isomap(cloud, 11, 3).coords;
  const auto mds = classical_mds(cloud, 3).coords;
  EXPECT_LE((pairwise(iso) - pairwise(mds)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Isomap, ArcGeodesicExceedsChord) {
  const std::size_t n = 20;
  Eigen::MatrixXd x(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    x(static_cast<Eigen::Index>(i), 0) = std::cos(t);
    x(static_cast<Eigen::Index>(i), 1) = std::sin(t);
  }
  const auto d = from_points(x);
  const Eigen::MatrixXd geo = graph_geodesics(knn_graph(d, 2));
  // the endpoints' second neighbours are two steps along the arc
  double chords = d(0, 2) + d(n - 3, n - 1);
  for (std::size_t i = 2; i + 3 < n; ++i) chords += d(i, i + 1);
  EXPECT_NEAR(geo(0, n - 1), chords, 1e-12);
  EXPECT_GT(geo(0, n - 1), d(0, n - 1) + 0.5);
  EXPECT_TRUE(((geo - d.square()).array() >= -1e-12).all());
}

TEST(LaplacianEigenmaps, SpectrumOfConnectedAndCompleteGraphs) {
  Eigen::MatrixXd x(8, 2);
  x << 0, 0, 0.1, 0, 0.25, 0.02, 0.45, 0, 0.7, 0.05, 1.0, 0, 1.3, 0.1, 1.7, 0;
  const auto lap = normalized_laplacian(knn_graph(from_points(x), 1));
  const auto spec = symmetric_eigendecomposition(lap, 8, EigenOrder::Ascending).values;
  EXPECT_LE(std::abs(spec[0]), 1e-10);
  EXPECT_GT(spec[1], 1e-10);

  const std::size_t n = 6;
  const DistanceMatrix equal(n, MetricKind::euclidean(), std::vector<double>(15, 1.0), {});
  const auto kn = symmetric_eigendecomposition(normalized_laplacian(knn_graph(equal, n - 1)), n, EigenOrder::Ascending);
  EXPECT_LE(std::abs(kn.values[0]), 1e-10);
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
    EXPECT_NEAR(kn.values[i], static_cast<double>(n) / static_cast<double>(n - 1), 1e-9);
  }
}

TEST(LaplacianEigenmaps, ColumnsAreOrthogonal) {
  const auto e = laplacian_eigenmaps(from_points(random_points(40, 3, 6)), 6, 4);
  ASSERT_EQ(e.coords.cols(), 4);
  const Eigen::MatrixXd gram = e.coords.transpose() * e.coords;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Tsne, AffinitiesAreNormalizedAtTargetPerplexity) {
  const auto d = from_points(random_points(30, 4, 11));
  const auto aff = tsne_affinities(d, 5.0);
  for (Eigen::Index i = 0; i < 30; ++i) {
    EXPECT_NEAR(aff.conditional.row(i).sum(), 1.0, 1e-9);
    EXPECT_EQ(aff.conditional(i, i), 0.0);
    EXPECT_NEAR(aff.entropy_bits[i], std::log2(5.0), 1e-4);
  }
}

TEST(Tsne, TightPairsStayTogether) {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0.01, 0, 5, 5, 5.01, 5;
  TsneParams p;
  p.perplexity = 1.0;
  p.seed = 3;
  const auto e = tsne(from_points(x), p);
  ASSERT_EQ(e.coords.cols(), 3);
  const Eigen::MatrixXd y = pairwise(e.coords);
  const double within = std::max(y(0, 1), y(2, 3));
  const double between = std::min({y(0, 2), y(0, 3), y(1, 2), y(1, 3)});
  EXPECT_LT(within, between);
}

TEST(Tsne, DeterministicAndValidated) {
  const auto d = from_points(random_points(25, 3, 12));
  TsneParams p;
  p.perplexity = 5.0;
  p.iterations = 300;
  p.seed = 99;
  const auto a = tsne(d, p);
  const auto b = tsne(d, p);
  EXPECT_EQ(a.coords, b.coords);
  p.perplexity = 8.5;
  EXPECT_THROW(tsne(d, p), InvalidArgument);
}

TEST(EmbeddingCsv, HeaderAndRows) {
  Embedding e;
  e.coords = Eigen::MatrixXd::Zero(2, 2);
  e.coords(1, 0) = 0.5;
  const auto path = std::filesystem::temp_directory_path() / "hkembed_tests" / "embedding.csv";
  const std::vector<std::uint32_t> labels{4, 7};
  write_embedding_csv(path, e, labels);
  std::ifstream in(path);
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "id,label,c0,c1");
  EXPECT_EQ(row0, "0,4,0,0");
  EXPECT_EQ(row1, "1,7,0.5,0");
  const std::vector<std::uint32_t> short_labels{1};
  EXPECT_THROW(write_embedding_csv(path, e, short_labels), LengthMismatch);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hkembed/distmat.hpp"

namespace hkembed {

enum class EmbedMethod { MDS, Isomap, Eigenmaps, TSNE };

std::string method_name(EmbedMethod m);
/** Accepts "mds", "isomap", "eigenmaps" (or "laplacian"), "tsne" (any case). */
EmbedMethod parse_method(const std::string& name);

struct Embedding {
  /** n x d, finite. */
  Eigen::MatrixXd coords;
  EmbedMethod method = EmbedMethod::MDS;
  Metric metric = Metric::Euclidean;

  std::size_t n() const { return static_cast<std::size_t>(coords.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(coords.cols()); }
};

struct NeighborGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  /** adjacency[i] = (neighbor, input distance), sorted by neighbor index. */
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;
  /** Edges added to join components. */
  std::vector<std::pair<std::size_t, std::size_t>> repair_edges;

  bool has_edge(std::size_t i, std::size_t j) const;
  std::size_t edge_count() const;
};

struct SpectrumReport {
  std::vector<double> singular_values;
  std::size_t chosen_dimension = 0;
  double threshold = 0.0;
};

/** Smallest n with sum_{i<=n} s_i^2 / sum_j s_j^2 >= a, for s sorted descending. */
std::size_t choose_dimension(std::span<const double> singular_values, double a);

/** Singular values of the column-centered data (rows are items) and the dimension chosen by the variance rule. */
SpectrumReport embedding_dimension(const Eigen::MatrixXd& data, double a);

Embedding classical_mds(const DistanceMatrix& d, std::size_t dim);
/** Same, on a dense symmetric matrix with zero diagonal. */
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& d, std::size_t dim);

NeighborGraph knn_graph(const DistanceMatrix& d, std::size_t k);

/** All-pairs shortest path lengths over the graph (Dijkstra from every node). */
Eigen::MatrixXd graph_geodesics(const NeighborGraph& g);

Embedding isomap(const DistanceMatrix& d, std::size_t k, std::size_t dim);

/** I - D^{-1/2} W D^{-1/2}, heat-kernel weights with the median edge length as bandwidth. */
Eigen::MatrixXd normalized_laplacian(const NeighborGraph& graph);
Embedding laplacian_eigenmaps(const DistanceMatrix& d, std::size_t k, std::size_t dim);

struct TsneParams {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::size_t dimension = 3;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  std::size_t momentum_switch = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::uint64_t seed = 0;
};

struct TsneAffinities {
  /** Row-stochastic conditional probabilities p_{j|i}, zero diagonal. */
  Eigen::MatrixXd conditional;
  /** log2 of the perplexity reached per row. */
  Eigen::VectorXd entropy_bits;
};

/** Per-row Gaussian bandwidths on squared distances, found by bisection. */
TsneAffinities tsne_affinities(const DistanceMatrix& d, double perplexity);

/** Exact t-SNE on the distance matrix. Requires perplexity <= (n-1)/3. */
Embedding tsne(const DistanceMatrix& d, const TsneParams& params);

/** CSV with header id,label,c0..c{d-1}. */
void write_embedding_csv(const std::filesystem::path& path, const Embedding& e, std::span<const std::uint32_t> labels);

}  // namespace hkembed

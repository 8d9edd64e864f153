#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hkembed {

struct KMeansResult {
  std::vector<std::uint32_t> labels;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
  /** Final inertia of each restart, in restart order. */
  std::vector<double> restart_inertia;
};

/** k-means++ seeding then Lloyd (at most 300 iterations) per restart; the lowest inertia wins. */
KMeansResult kmeans(const Eigen::MatrixXd& coords, std::size_t k, std::size_t restarts, std::uint64_t seed);

/**
 * Gaussian affinity with bandwidth the median nonzero pairwise distance,
 * bottom k eigenvectors of the symmetric normalized Laplacian, rows scaled to
 * unit length, then k-means with 10 restarts.
 */
std::vector<std::uint32_t> spectral_clustering(const Eigen::MatrixXd& coords, std::size_t k, std::uint64_t seed);

/** Fraction of items agreeing after the best one-to-one matching of predicted to true labels. */
double assignment_accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth);

/** Minimum-cost assignment of rows to columns of a square matrix; returns the column of each row. */
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost);

enum class ClusteringKind { KMeans, Spectral };

struct ClusteringSpec {
  ClusteringKind kind = ClusteringKind::KMeans;
  std::size_t k = 2;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;

  /** "k-means" or "spectral". */
  std::string name() const;
  void validate() const;
};

std::vector<std::uint32_t> run_clustering(const ClusteringSpec& spec, const Eigen::MatrixXd& coords);

}  // namespace hkembed

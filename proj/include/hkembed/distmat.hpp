#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hkembed/measures.hpp"
#include "hkembed/transport.hpp"

namespace hkembed {

enum class Metric : std::uint8_t { Euclidean = 0, OT = 1, UOT = 2 };

std::string metric_name(Metric m);
/** Accepts "euclidean", "ot", "w2", "uot", "hk" (any case). */
Metric parse_metric(const std::string& name);

struct MetricKind {
  Metric kind = Metric::Euclidean;
  /** Present iff kind == UOT. */
  std::optional<HKParams> hk;

  static MetricKind euclidean() { return {Metric::Euclidean, std::nullopt}; }
  static MetricKind ot() { return {Metric::OT, std::nullopt}; }
  static MetricKind uot(const HKParams& p) { return {Metric::UOT, p}; }

  void validate() const;
};

using Fingerprint = std::array<std::uint8_t, 32>;

std::string to_hex(const Fingerprint& fp);

/** Condensed upper triangle of a symmetric matrix with zero diagonal. */
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, MetricKind metric, std::vector<double> values, Fingerprint fingerprint);

  static std::size_t condensed_size(std::size_t n) { return n * (n - 1) / 2; }
  /** k(i,j) = i*n - i(i+1)/2 + (j-i-1) for i < j. */
  static std::size_t index(std::size_t i, std::size_t j, std::size_t n) { return i * n - i * (i + 1) / 2 + (j - i - 1); }

  std::size_t n() const noexcept { return n_; }
  const MetricKind& metric() const noexcept { return metric_; }
  std::span<const double> values() const noexcept { return values_; }
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }

  double operator()(std::size_t i, std::size_t j) const;
  Eigen::MatrixXd square() const;

  /** Rows/columns restricted to `indices`, in that order. Keeps metric and fingerprint. */
  DistanceMatrix subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const DistanceMatrix& a, const DistanceMatrix& b);

 private:
  std::size_t n_ = 0;
  MetricKind metric_;
  std::vector<double> values_;
  Fingerprint fingerprint_{};
};

/** Per-call counters; `solves` counts distance evaluations actually performed. */
struct PairwiseStats {
  std::size_t solves = 0;
  std::size_t unconverged = 0;
};

/**
 * Epsilon used for every pair of a UOT matrix when the parameters leave it
 * unset: 1e-2 times the mean finite HK cost over all pairs of points in the
 * union of the supports.
 */
double resolve_uot_epsilon(std::span<const GridMeasure> measures, double kappa);

Fingerprint fingerprint_measures(std::span<const GridMeasure> measures, const MetricKind& metric);
Fingerprint fingerprint_vectors(std::span<const std::vector<double>> vectors, const MetricKind& metric);

/**
 * OT (w2_exact, measures must be normalized) or UOT (hk_distance) over all
 * pairs. An unset UOT epsilon is resolved once for the whole dataset and
 * recorded in the returned metric. Results do not depend on `workers`.
 * Throws PairSolveError for the lowest failing pair index.
 */
DistanceMatrix compute_pairwise(std::span<const GridMeasure> measures, const MetricKind& metric, std::size_t workers,
                                PairwiseStats* stats = nullptr);

/** Euclidean distances between equal-length intensity vectors. */
DistanceMatrix compute_pairwise(std::span<const std::vector<double>> vectors, const MetricKind& metric,
                                std::size_t workers, PairwiseStats* stats = nullptr);

void save_cache(const DistanceMatrix& m, const std::filesystem::path& path);
/** Throws CorruptCache on bad magic/version/length/values; FingerprintMismatch if `expected` differs. */
DistanceMatrix load_cache(const std::filesystem::path& path, const std::optional<Fingerprint>& expected = std::nullopt);

struct MetricAxiomReport {
  double max_triangle_violation = 0.0;
  double max_asymmetry = 0.0;
  double min_value = 0.0;
  std::size_t triples_checked = 0;
};

/**
 * Largest d(i,k) - d(i,j) - d(j,k) over ordered triples of distinct indices.
 * `triple_samples` == 0 checks every triple; otherwise triples are drawn
 * uniformly with the given seed.
 */
MetricAxiomReport metric_axiom_report(const DistanceMatrix& m, std::size_t triple_samples, std::uint64_t seed);

}  // namespace hkembed

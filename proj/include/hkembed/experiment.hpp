#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hkembed/cluster.hpp"
#include "hkembed/distmat.hpp"
#include "hkembed/embed.hpp"
#include "hkembed/learn.hpp"
#include "hkembed/stats.hpp"

namespace hkembed {

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::size_t sample_size = 1000;
  double variance_threshold = 0.97;
  std::vector<Metric> metrics{Metric::Euclidean, Metric::OT, Metric::UOT};
  std::vector<EmbedMethod> embeddings{EmbedMethod::MDS, EmbedMethod::Isomap, EmbedMethod::Eigenmaps, EmbedMethod::TSNE};
  /** Names as accepted by parse_task: knn1, knn3, knn5, lda, svm, mlr, kmeans, spectral. */
  std::vector<std::string> tasks{"knn1", "knn3", "knn5", "lda", "svm", "mlr", "kmeans", "spectral"};
  std::size_t replicates = 10;
  double alpha = 0.05;
  double kappa = 1.0;
  /** Unset: resolved per subsample from the HK cost scale. */
  std::optional<double> epsilon;
  double tol = 1e-9;
  std::size_t neighbor_k = 10;
  std::uint64_t seed = 0;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir = "results";
  std::size_t workers = 1;

  void validate() const;
};

/**
 * Plain key=value lines, '#' starts a comment. Keys are the field names above.
 * Relative paths are resolved against `base_dir`.
 */
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct Task {
  bool is_classifier = true;
  ClassifierSpec classifier;
  ClusteringSpec clustering;

  std::string name() const;
};

Task parse_task(const std::string& name);

/**
 * Stratified sample without replacement: per-class counts are the largest
 * remainder apportionment of `size`, indices returned ascending.
 */
std::vector<std::size_t> subsample(std::span<const std::uint32_t> labels, std::size_t size, std::uint64_t seed);

struct SummaryCell {
  Metric metric = Metric::Euclidean;
  bool failed = false;
  double mean = 0.0;
  double std = 0.0;
  /** One-sided p-values against the other metrics, in Euclidean, OT, UOT order; NaN when unavailable. */
  double p_first = 0.0;
  double p_second = 0.0;
};

struct SummaryRow {
  std::string dataset;
  std::string embedding;
  std::string algorithm;
  std::vector<SummaryCell> cells;
  /** outcome_name of the verdict, "n/a" without three metrics, "failed" if any cell failed. */
  std::string verdict;
};

struct ResultsTable {
  std::string dataset;
  std::vector<SummaryRow> rows;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::string embedding;
  std::string algorithm;
  Metric metric = Metric::Euclidean;
  std::size_t dimension = 0;
  std::optional<double> accuracy;
  std::string error;
};

struct ExperimentOutcome {
  ResultsTable table;
  std::vector<ReplicateRecord> records;
  std::vector<std::size_t> dimensions;
  std::size_t transport_solves = 0;
  std::size_t cache_hits = 0;
  std::size_t failed_cells = 0;
};

/** Runs every replicate and writes accuracies.csv, results.csv and results.md to the output directory. */
ExperimentOutcome run_experiment(const ExperimentConfig& config);

std::string table_csv(const ResultsTable& table);
std::string table_markdown(const ResultsTable& table);
std::string accuracies_csv(std::span<const ReplicateRecord> records, const std::string& dataset);
/** Inverse of table_csv. Throws FormatError on malformed input. */
ResultsTable parse_table_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace hkembed

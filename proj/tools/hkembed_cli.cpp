#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hkembed/dataset_io.hpp"
#include "hkembed/distmat.hpp"
#include "hkembed/embed.hpp"
#include "hkembed/errors.hpp"
#include "hkembed/experiment.hpp"
#include "hkembed/measures.hpp"

using namespace hkembed;

namespace {

int cmd_run(const std::string& config_path) {
  const auto config = load_config(config_path);
  const auto out = run_experiment(config);
  std::printf("transport solves: %zu\ncache hits: %zu\nfailed cells: %zu\nresults: %s\n", out.transport_solves,
              out.cache_hits, out.failed_cells, config.output_dir.string().c_str());
  return out.failed_cells ? 2 : 0;
}

struct DistanceArgs {
  std::string dataset;
  std::string metric = "uot";
  std::string out;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  double kappa = 1.0;
  std::optional<double> epsilon;
  double tol = 1e-9;
  std::size_t workers = 1;
};

int cmd_distances(const DistanceArgs& a) {
  auto images = read_dataset(a.dataset);
  Labels labels;
  for (const auto& img : images) labels.push_back(img.label);
  const double mean_mass = dataset_mean_mass(images);
  if (a.sample_size) {
    std::vector<ImageRecord> sub;
    Labels sub_labels;
    for (auto i : subsample(labels, a.sample_size, a.seed)) {
      sub.push_back(images[i]);
      sub_labels.push_back(labels[i]);
    }
    images = std::move(sub);
    labels = std::move(sub_labels);
  }

  const Metric metric = parse_metric(a.metric);
  PairwiseStats stats;
  DistanceMatrix d;
  if (metric == Metric::Euclidean) {
    std::vector<std::vector<double>> vectors;
    for (const auto& img : images) {
      auto v = flatten(img);
      for (double& x : v) x /= mean_mass;
      vectors.push_back(std::move(v));
    }
    d = compute_pairwise(std::span<const std::vector<double>>(vectors), MetricKind::euclidean(), a.workers, &stats);
  } else {
    MeasureConversionParams conv;
    MetricKind kind = MetricKind::ot();
    if (metric == Metric::UOT) {
      conv.normalize = false;
      conv.mass_calibration = mean_mass;
      HKParams hk;
      hk.kappa = a.kappa;
      hk.epsilon = a.epsilon;
      hk.tol = a.tol;
      kind = MetricKind::uot(hk);
    }
    std::vector<GridMeasure> measures;
    for (const auto& img : images) measures.push_back(image_to_measure(img, conv));
    d = compute_pairwise(std::span<const GridMeasure>(measures), kind, a.workers, &stats);
  }
  save_cache(d, a.out);
  std::string text;
  for (auto l : labels) text += std::to_string(l) + "\n";
  write_text(a.out + ".labels", text);
  std::printf("n=%zu solves=%zu unconverged=%zu fingerprint=%s\n", d.n(), stats.solves, stats.unconverged,
              to_hex(d.fingerprint()).c_str());
  return stats.unconverged ? 2 : 0;
}

struct EmbedArgs {
  std::string cache;
  std::string method = "mds";
  std::size_t dim = 2;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  double perplexity = 30.0;
  std::string out;
};

int cmd_embed(const EmbedArgs& a) {
  const auto d = load_cache(a.cache);
  Labels labels(d.n(), 0);
  if (std::filesystem::exists(a.cache + ".labels")) {
    std::istringstream in(read_text(a.cache + ".labels"));
    for (auto& l : labels) {
      if (!(in >> l)) throw FormatError("label sidecar shorter than the matrix");
    }
  }
  Embedding e;
  switch (parse_method(a.method)) {
    case EmbedMethod::MDS:
      e = classical_mds(d, a.dim);
      break;
    case EmbedMethod::Isomap:
      e = isomap(d, a.k, a.dim);
      break;
    case EmbedMethod::Eigenmaps:
      e = laplacian_eigenmaps(d, a.k, a.dim);
      break;
    case EmbedMethod::TSNE: {
      TsneParams p;
      p.dimension = a.dim;
      p.perplexity = a.perplexity;
      p.seed = a.seed;
      e = tsne(d, p);
      break;
    }
  }
  write_embedding_csv(a.out, e, labels);
  return 0;
}

int cmd_report(const std::string& dir, const std::string& format) {
  const auto table = parse_table_csv(read_text(std::filesystem::path(dir) / "results.csv"));
  if (format == "csv") {
    std::cout << table_csv(table);
  } else if (format == "markdown" || format == "md") {
    std::cout << table_markdown(table);
  } else {
    throw InvalidArgument("format must be csv or markdown");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-measure distances, embeddings and task benchmarks"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a key=value config file");
  run->add_option("config", config_path)->required()->check(CLI::ExistingFile);

  DistanceArgs da;
  double eps = 0.0;
  auto* dist = app.add_subcommand("distances", "compute a pairwise distance matrix cache");
  dist->add_option("dataset", da.dataset)->required()->check(CLI::ExistingFile);
  dist->add_option("--metric", da.metric, "euclidean, ot or uot")->capture_default_str();
  dist->add_option("--out", da.out)->required();
  dist->add_option("--sample-size", da.sample_size, "stratified subsample size (0 = all)");
  dist->add_option("--seed", da.seed);
  dist->add_option("--kappa", da.kappa)->capture_default_str();
  auto* eps_opt = dist->add_option("--epsilon", eps, "entropic regularization (default: from the cost scale)");
  dist->add_option("--tol", da.tol)->capture_default_str();
  dist->add_option("--workers", da.workers)->capture_default_str();

  EmbedArgs ea;
  auto* emb = app.add_subcommand("embed", "embed a cached distance matrix");
  emb->add_option("cache", ea.cache)->required()->check(CLI::ExistingFile);
  emb->add_option("--method", ea.method, "mds, isomap, eigenmaps or tsne")->capture_default_str();
  emb->add_option("--dim", ea.dim)->capture_default_str();
  emb->add_option("--k", ea.k, "neighbors for isomap and eigenmaps")->capture_default_str();
  emb->add_option("--perplexity", ea.perplexity)->capture_default_str();
  emb->add_option("--seed", ea.seed);
  emb->add_option("--out", ea.out, "CSV path")->required();

  std::string report_dir, format = "markdown";
  auto* rep = app.add_subcommand("report", "print a results table");
  rep->add_option("results-dir", report_dir)->required()->check(CLI::ExistingDirectory);
  rep->add_option("--format", format, "csv or markdown")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("hkembed"));
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*run) return cmd_run(config_path);
    if (*dist) {
      if (*eps_opt) da.epsilon = eps;
      return cmd_distances(da);
    }
    if (*emb) return cmd_embed(ea);
    if (*rep) return cmd_report(report_dir, format);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}

#include "hkembed/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hkembed/dataset_io.hpp"
#include "hkembed/errors.hpp"
#include "hkembed/measures.hpp"
#include "hkembed/seeding.hpp"

namespace hkembed {

namespace {

// Stream tags for per-replicate seeds.
enum SeedTag : std::uint64_t { kSubsampleTag = 1, kSplitTag, kTsneTag, kClassifierTag, kClusterTag };

constexpr double kSupportThreshold = 1e-6;
constexpr double kTsnePerplexity = 30.0;
constexpr std::size_t kTsneDimension = 3;
constexpr std::size_t kClusterRestarts = 10;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw InvalidArgument("bad value for " + key + ": '" + value + "'");
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double_field(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number '" + s + "'");
  }
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

struct CellAccumulator {
  std::vector<double> accuracies;
  std::string error;
};

class DistanceSource {
 public:
  DistanceSource(const ExperimentConfig& config, double mean_mass) : config_(config), mean_mass_(mean_mass) {}

  DistanceMatrix get(Metric metric, std::span<const ImageRecord> images, std::size_t& solves, std::size_t& hits) const {
    if (metric == Metric::Euclidean) {
      std::vector<std::vector<double>> vectors;
      vectors.reserve(images.size());
      for (const auto& img : images) {
        auto v = flatten(img);
        for (double& x : v) x /= mean_mass_;
        vectors.push_back(std::move(v));
      }
      const auto kind = MetricKind::euclidean();
      return cached(fingerprint_vectors(vectors, kind), hits,
                    [&] { return compute_pairwise(std::span<const std::vector<double>>(vectors), kind, config_.workers); });
    }

    MeasureConversionParams conv;
    conv.support_threshold = kSupportThreshold;
    MetricKind kind = MetricKind::ot();
    if (metric == Metric::UOT) {
      conv.normalize = false;
      conv.mass_calibration = mean_mass_;
      HKParams hk;
      hk.kappa = config_.kappa;
      hk.epsilon = config_.epsilon;
      hk.tol = config_.tol;
      kind = MetricKind::uot(hk);
    }
    std::vector<GridMeasure> measures;
    measures.reserve(images.size());
    for (const auto& img : images) measures.push_back(image_to_measure(img, conv));
    return cached(fingerprint_measures(measures, kind), hits, [&] {
      PairwiseStats stats;
      auto m = compute_pairwise(std::span<const GridMeasure>(measures), kind, config_.workers, &stats);
      solves += stats.solves;
      if (stats.unconverged) spdlog::warn("{}: {} pair solves hit the iteration cap", metric_name(metric), stats.unconverged);
      return m;
    });
  }

 private:
  template <typename Compute>
  DistanceMatrix cached(const Fingerprint& fp, std::size_t& hits, Compute compute) const {
    if (config_.cache_dir.empty()) return compute();
    const auto path = config_.cache_dir / (to_hex(fp) + ".uotm");
    if (std::filesystem::exists(path)) {
      try {
        auto m = load_cache(path, fp);
        ++hits;
        return m;
      } catch (const Error& e) {
        spdlog::warn("ignoring cache {}: {}", path.string(), e.what());
      }
    }
    auto m = compute();
    std::filesystem::create_directories(config_.cache_dir);
    save_cache(m, path);
    return m;
  }

  const ExperimentConfig& config_;
  double mean_mass_;
};

Eigen::MatrixXd embed_coords(EmbedMethod method, const DistanceMatrix& d, std::size_t dim, std::size_t neighbor_k,
                             std::uint64_t seed) {
  switch (method) {
    case EmbedMethod::MDS:
      return classical_mds(d, dim).coords;
    case EmbedMethod::Isomap:
      return isomap(d, neighbor_k, dim).coords;
    case EmbedMethod::Eigenmaps:
      return laplacian_eigenmaps(d, neighbor_k, dim).coords;
    case EmbedMethod::TSNE: {
      TsneParams p;
      p.dimension = kTsneDimension;
      p.perplexity = std::min(kTsnePerplexity, static_cast<double>(d.n() - 1) / 3.0);
      p.seed = seed;
      return tsne(d, p).coords;
    }
  }
  throw InvalidArgument("unknown embedding method");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw InvalidArgument("dataset is required");
  if (sample_size < 5) throw InvalidArgument("sample_size must be at least 5");
  if (!(variance_threshold > 0.0 && variance_threshold < 1.0)) throw InvalidArgument("variance_threshold must lie in (0,1)");
  if (metrics.empty() || embeddings.empty() || tasks.empty()) throw InvalidArgument("metrics, embeddings and tasks must be nonempty");
  if (std::set<Metric>(metrics.begin(), metrics.end()).size() != metrics.size()) throw InvalidArgument("duplicate metric");
  if (replicates < 2) throw InvalidArgument("replicates must be at least 2");
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5)");
  if (!(kappa > 0.0) || !(tol > 0.0)) throw InvalidArgument("kappa and tol must be positive");
  if (epsilon && !(*epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (neighbor_k == 0) throw InvalidArgument("neighbor_k must be positive");
  if (workers == 0) throw InvalidArgument("workers must be positive");
  for (const auto& t : tasks) parse_task(t);
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "dataset") {
      c.dataset = resolve(value, base_dir);
    } else if (key == "sample_size") {
      c.sample_size = parse_number<std::size_t>(key, value);
    } else if (key == "variance_threshold") {
      c.variance_threshold = parse_number<double>(key, value);
    } else if (key == "metrics") {
      c.metrics.clear();
      for (const auto& m : split_list(value)) c.metrics.push_back(parse_metric(m));
    } else if (key == "embeddings") {
      c.embeddings.clear();
      for (const auto& m : split_list(value)) c.embeddings.push_back(parse_method(m));
    } else if (key == "tasks") {
      c.tasks = split_list(value);
    } else if (key == "replicates") {
      c.replicates = parse_number<std::size_t>(key, value);
    } else if (key == "alpha") {
      c.alpha = parse_number<double>(key, value);
    } else if (key == "kappa") {
      c.kappa = parse_number<double>(key, value);
    } else if (key == "epsilon") {
      if (lower(value) == "auto" || value.empty()) {
        c.epsilon.reset();
      } else {
        c.epsilon = parse_number<double>(key, value);
      }
    } else if (key == "tol") {
      c.tol = parse_number<double>(key, value);
    } else if (key == "neighbor_k") {
      c.neighbor_k = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "cache_dir") {
      c.cache_dir = resolve(value, base_dir);
    } else if (key == "output_dir") {
      c.output_dir = resolve(value, base_dir);
    } else if (key == "workers") {
      c.workers = parse_number<std::size_t>(key, value);
    } else {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.parent_path());
}

std::string Task::name() const { return is_classifier ? classifier.name() : clustering.name(); }

Task parse_task(const std::string& name) {
  const std::string s = lower(name);
  Task t;
  if (s.rfind("knn", 0) == 0) {
    t.classifier.kind = ClassifierKind::KNN;
    t.classifier.k = s.size() > 3 ? parse_number<std::size_t>("knn", s.substr(3)) : 1;
    t.classifier.validate();
  } else if (s == "lda") {
    t.classifier.kind = ClassifierKind::LDA;
  } else if (s == "mlr") {
    t.classifier.kind = ClassifierKind::MLR;
  } else if (s == "svm") {
    t.classifier.kind = ClassifierKind::LinearSVM;
    t.classifier.iters = 20000;
  } else if (s == "kmeans" || s == "k-means") {
    t.is_classifier = false;
    t.clustering.kind = ClusteringKind::KMeans;
  } else if (s == "spectral") {
    t.is_classifier = false;
    t.clustering.kind = ClusteringKind::Spectral;
  } else {
    throw InvalidArgument("unknown task '" + name + "'");
  }
  return t;
}

std::vector<std::size_t> subsample(std::span<const std::uint32_t> labels, std::size_t size, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (size == 0) throw InvalidArgument("subsample size must be positive");
  if (size > n) throw SizeTooLarge("subsample of " + std::to_string(size) + " from " + std::to_string(n) + " items");
  std::map<std::uint32_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[labels[i]].push_back(i);

  std::vector<std::vector<std::size_t>*> classes;
  std::vector<std::size_t> quota, remainder;
  std::size_t assigned = 0;
  for (auto& [label, idx] : members) {
    classes.push_back(&idx);
    quota.push_back(size * idx.size() / n);
    remainder.push_back(size * idx.size() % n);
    assigned += quota.back();
  }
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < size; ++r, ++assigned) ++quota[order[r]];

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  out.reserve(size);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto idx = *classes[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto images = read_dataset(config.dataset);
  if (config.sample_size > images.size()) {
    throw SizeTooLarge("sample_size " + std::to_string(config.sample_size) + " exceeds dataset size " +
                       std::to_string(images.size()));
  }
  Labels labels;
  labels.reserve(images.size());
  for (const auto& img : images) labels.push_back(img.label);
  const double mean_mass = dataset_mean_mass(images);
  if (!(mean_mass > 0.0)) throw InvalidArgument("dataset has no mass");

  std::vector<Task> tasks;
  for (const auto& t : config.tasks) tasks.push_back(parse_task(t));
  const std::size_t n_metrics = config.metrics.size();
  const std::size_t n_rows = config.embeddings.size() * tasks.size();
  std::vector<std::vector<CellAccumulator>> cells(n_rows, std::vector<CellAccumulator>(n_metrics));

  ExperimentOutcome out;
  out.table.dataset = config.dataset.stem().string();
  const DistanceSource source(config, mean_mass);

  auto fail = [&](std::size_t row, std::size_t m, std::size_t rep, std::size_t dim, const std::string& what) {
    auto& cell = cells[row][m];
    if (cell.error.empty()) cell.error = what;
    out.records.push_back({rep, method_name(config.embeddings[row / tasks.size()]), tasks[row % tasks.size()].name(),
                           config.metrics[m], dim, std::nullopt, what});
  };

  for (std::size_t rep = 0; rep < config.replicates; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, {rep});
    const auto idx = subsample(labels, config.sample_size, derive_seed(rep_seed, {kSubsampleTag}));
    std::vector<ImageRecord> sub;
    sub.reserve(idx.size());
    for (auto i : idx) sub.push_back(images[i]);
    const Labels sub_labels = take(labels, idx);
    const std::size_t n = sub.size();
    const std::size_t n_classes = std::set<std::uint32_t>(sub_labels.begin(), sub_labels.end()).size();

    std::size_t dim = 0;
    TrainTestSplit split;
    std::string rep_error;
    try {
      const std::size_t pixels = sub.front().pixels.size();
      Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < pixels; ++p) {
          data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = sub[i].pixels[p] / mean_mass;
        }
      }
      dim = embedding_dimension(data, config.variance_threshold).chosen_dimension;
      dim = std::clamp<std::size_t>(dim, 1, n - 2);
      split = split_80_20(sub_labels, derive_seed(rep_seed, {kSplitTag}));
    } catch (const Error& e) {
      rep_error = e.what();
    }
    out.dimensions.push_back(dim);
    spdlog::info("replicate {}: n={} classes={} dimension={}", rep, n, n_classes, dim);
    const Labels train_labels = take(sub_labels, split.train);
    const Labels test_labels = take(sub_labels, split.test);

    for (std::size_t m = 0; m < n_metrics; ++m) {
      const Metric metric = config.metrics[m];
      std::optional<DistanceMatrix> d;
      std::string metric_error = rep_error;
      if (metric_error.empty()) {
        try {
          std::size_t solves = 0, hits = 0;
          d = source.get(metric, sub, solves, hits);
          out.transport_solves += solves;
          out.cache_hits += hits;
          spdlog::info("replicate {} {}: {} transport solves, {} cache hits", rep, metric_name(metric), solves, hits);
        } catch (const Error& e) {
          metric_error = e.what();
        }
      }

      for (std::size_t e = 0; e < config.embeddings.size(); ++e) {
        const EmbedMethod method = config.embeddings[e];
        const std::size_t edim = method == EmbedMethod::TSNE ? kTsneDimension : dim;
        Eigen::MatrixXd coords;
        std::string embed_error = metric_error;
        if (embed_error.empty()) {
          try {
            coords = embed_coords(method, *d, edim, config.neighbor_k, derive_seed(rep_seed, {kTsneTag}));
          } catch (const Error& ex) {
            embed_error = ex.what();
          }
        }
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          const std::size_t row = e * tasks.size() + t;
          if (!embed_error.empty()) {
            fail(row, m, rep, edim, embed_error);
            continue;
          }
          try {
            double acc = 0.0;
            if (tasks[t].is_classifier) {
              ClassifierSpec spec = tasks[t].classifier;
              spec.seed = derive_seed(rep_seed, {kClassifierTag});
              const auto pred =
                  fit_predict(spec, take_rows(coords, split.train), train_labels, take_rows(coords, split.test));
              acc = accuracy(pred, test_labels);
            } else {
              ClusteringSpec spec = tasks[t].clustering;
              spec.k = n_classes;
              spec.restarts = kClusterRestarts;
              spec.seed = derive_seed(rep_seed, {kClusterTag});
              acc = assignment_accuracy(run_clustering(spec, coords), sub_labels);
            }
            cells[row][m].accuracies.push_back(acc);
            out.records.push_back({rep, method_name(method), tasks[t].name(), metric, edim, acc, {}});
          } catch (const Error& ex) {
            fail(row, m, rep, edim, ex.what());
          }
        }
      }
    }
  }

  for (std::size_t row = 0; row < n_rows; ++row) {
    SummaryRow sr;
    sr.dataset = out.table.dataset;
    sr.embedding = method_name(config.embeddings[row / tasks.size()]);
    sr.algorithm = tasks[row % tasks.size()].name();
    bool any_failed = false;
    std::vector<TaskResult> results;
    for (std::size_t m = 0; m < n_metrics; ++m) {
      const auto& acc = cells[row][m];
      if (!acc.error.empty()) {
        any_failed = true;
        ++out.failed_cells;
        spdlog::warn("{} / {} / {} failed: {}", sr.embedding, sr.algorithm, metric_name(config.metrics[m]), acc.error);
      }
      TaskResult tr;
      tr.dataset = sr.dataset;
      tr.embedding = sr.embedding;
      tr.algorithm = sr.algorithm;
      tr.metric = config.metrics[m];
      tr.accuracies = acc.accuracies;
      results.push_back(std::move(tr));
    }
    for (std::size_t m = 0; m < n_metrics; ++m) {
      SummaryCell cell;
      cell.metric = config.metrics[m];
      cell.failed = !cells[row][m].error.empty();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      cell.mean = cell.std = cell.p_first = cell.p_second = nan;
      if (!cell.failed) {
        cell.mean = results[m].mean();
        cell.std = results[m].stddev();
      }
      // Others in Euclidean, OT, UOT order.
      std::vector<std::size_t> others;
      for (Metric o : {Metric::Euclidean, Metric::OT, Metric::UOT}) {
        auto it = std::find(config.metrics.begin(), config.metrics.end(), o);
        if (o != cell.metric && it != config.metrics.end()) others.push_back(static_cast<std::size_t>(it - config.metrics.begin()));
      }
      for (std::size_t k = 0; k < others.size() && k < 2; ++k) {
        if (cell.failed || !cells[row][others[k]].error.empty()) continue;
        (k == 0 ? cell.p_first : cell.p_second) = welch_one_sided(results[m].accuracies, results[others[k]].accuracies).p;
      }
      sr.cells.push_back(cell);
    }
    if (any_failed) {
      sr.verdict = "failed";
    } else if (n_metrics == 3) {
      sr.verdict = outcome_name(verdict(results, config.alpha));
    } else {
      sr.verdict = "n/a";
    }
    out.table.rows.push_back(std::move(sr));
  }

  std::filesystem::create_directories(config.output_dir);
  write_text(config.output_dir / "accuracies.csv", accuracies_csv(out.records, out.table.dataset));
  write_text(config.output_dir / "results.csv", table_csv(out.table));
  write_text(config.output_dir / "results.md", table_markdown(out.table));
  spdlog::info("total transport solves: {}, cache hits: {}, failed cells: {}", out.transport_solves, out.cache_hits,
               out.failed_cells);
  return out;
}

std::string table_csv(const ResultsTable& table) {
  std::string s = "dataset,embedding,algorithm,metric,mean,std,p_vs_first_other,p_vs_second_other,verdict\n";
  for (const auto& row : table.rows) {
    for (const auto& c : row.cells) {
      s += csv_safe(row.dataset) + "," + csv_safe(row.embedding) + "," + csv_safe(row.algorithm) + "," +
           metric_name(c.metric) + "," + fmt_double(c.mean) + "," + fmt_double(c.std) + "," + fmt_double(c.p_first) +
           "," + fmt_double(c.p_second) + "," + row.verdict + "\n";
    }
  }
  return s;
}

ResultsTable parse_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "dataset,embedding,algorithm,metric,mean,std,p_vs_first_other,p_vs_second_other,verdict") {
    throw FormatError("results CSV header missing");
  }
  ResultsTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 9) throw FormatError("results CSV line " + std::to_string(line_no) + ": expected 9 fields");
    if (table.rows.empty() || table.rows.back().embedding != f[1] || table.rows.back().algorithm != f[2] ||
        table.rows.back().dataset != f[0]) {
      table.rows.push_back({f[0], f[1], f[2], {}, f[8]});
    }
    SummaryCell c;
    try {
      c.metric = parse_metric(f[3]);
    } catch (const InvalidArgument& e) {
      throw FormatError(e.what());
    }
    c.mean = parse_double_field(f[4]);
    c.std = parse_double_field(f[5]);
    c.p_first = parse_double_field(f[6]);
    c.p_second = parse_double_field(f[7]);
    c.failed = std::isnan(c.mean);
    table.rows.back().cells.push_back(c);
  }
  if (!table.rows.empty()) table.dataset = table.rows.front().dataset;
  return table;
}

std::string table_markdown(const ResultsTable& table) {
  std::vector<Metric> metrics;
  if (!table.rows.empty()) {
    for (const auto& c : table.rows.front().cells) metrics.push_back(c.metric);
  } else {
    metrics = {Metric::Euclidean, Metric::OT, Metric::UOT};
  }
  auto short_name = [](Metric m) { return m == Metric::Euclidean ? std::string("Euc") : metric_name(m); };

  std::string s = "## " + (table.dataset.empty() ? std::string("results") : table.dataset) + "\n\n| Embedding | Algorithm |";
  for (Metric m : metrics) s += " " + short_name(m) + " |";
  s += "\n|---|---|";
  for (std::size_t i = 0; i < metrics.size(); ++i) s += "---|";
  s += "\n";
  for (const auto& row : table.rows) {
    std::string strict, bar;
    if (row.verdict.rfind("strict:", 0) == 0) strict = row.verdict.substr(7);
    if (row.verdict.rfind("bar:", 0) == 0) bar = row.verdict.substr(4, row.verdict.find('>') - 4);
    s += "| " + row.embedding + " | " + row.algorithm + " |";
    for (const auto& c : row.cells) {
      std::string cell = "failed";
      if (!c.failed) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f ± %.3f", c.mean, c.std);
        cell = buf;
        if (metric_name(c.metric) == strict) cell = "**" + cell + "**";
        if (metric_name(c.metric) == bar) {
          std::snprintf(buf, sizeof buf, "$\\overline{%.3f}$ ± %.3f", c.mean, c.std);
          cell = buf;
        }
      }
      s += " " + cell + " |";
    }
    s += "\n";
  }
  s += "\nBold: significantly better than both other metrics. Overline: best mean, significantly better than exactly one other.\n";
  return s;
}

std::string accuracies_csv(std::span<const ReplicateRecord> records, const std::string& dataset) {
  std::string s = "dataset,replicate,embedding,algorithm,metric,dimension,accuracy,error\n";
  for (const auto& r : records) {
    s += csv_safe(dataset) + "," + std::to_string(r.replicate) + "," + csv_safe(r.embedding) + "," +
         csv_safe(r.algorithm) + "," + metric_name(r.metric) + "," + std::to_string(r.dimension) + "," +
         (r.accuracy ? fmt_double(*r.accuracy) : std::string()) + "," + csv_safe(r.error) + "\n";
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoFailure("write to " + path.string() + " failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hkembed

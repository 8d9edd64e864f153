#include "hkembed/distmat.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "hkembed/binary_io.hpp"
#include "hkembed/errors.hpp"

namespace hkembed {

namespace {

constexpr char kCacheMagic[4] = {'U', 'O', 'T', 'M'};
constexpr std::uint32_t kCacheVersion = 1;
constexpr std::size_t kCacheHeaderBytes = 4 + 4 + 1 + 8 + 8 + 4 + 32;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialisation failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void bytes(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }
  template <typename T>
  void scalar(T v) {
    bytes(&v, sizeof(T));
  }

  Fingerprint finish() {
    Fingerprint out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, out.data(), &len);
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

void hash_metric(Sha256& h, const MetricKind& metric, std::size_t n) {
  static constexpr char tag[] = "hkembed-distmat/1";
  h.bytes(tag, sizeof(tag));
  h.scalar(static_cast<std::uint8_t>(metric.kind));
  if (metric.hk) {
    h.scalar(metric.hk->kappa);
    h.scalar(static_cast<std::uint8_t>(metric.hk->epsilon.has_value()));
    h.scalar(metric.hk->epsilon.value_or(0.0));
    h.scalar(static_cast<std::uint64_t>(metric.hk->max_iter));
    h.scalar(metric.hk->tol);
    h.scalar(static_cast<std::uint8_t>(metric.hk->epsilon_scaling));
  }
  h.scalar(static_cast<std::uint64_t>(n));
}

struct PairList {
  std::vector<std::uint32_t> first;
  std::vector<std::uint32_t> second;

  explicit PairList(std::size_t n) {
    first.reserve(DistanceMatrix::condensed_size(n));
    second.reserve(DistanceMatrix::condensed_size(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        first.push_back(static_cast<std::uint32_t>(i));
        second.push_back(static_cast<std::uint32_t>(j));
      }
    }
  }
  std::size_t size() const { return first.size(); }
};

/**
 * Runs solve(i, j) for every pair i < j on up to `workers` threads. Each result
 * lands in its own slot. If any pair throws, the lowest failing index is rethrown.
 */
template <typename Solve>
std::vector<double> run_pairs(std::size_t n, std::size_t workers, Solve solve) {
  const PairList pairs(n);
  std::vector<double> values(pairs.size(), 0.0);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::max<std::size_t>(1, std::min(workers, pairs.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{pairs.size()};
  std::mutex failure_mutex;
  std::string failure_message;

  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
      if (k >= pairs.size() || k > first_failure.load(std::memory_order_relaxed)) return;
      try {
        values[k] = solve(pairs.first[k], pairs.second[k]);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (k < first_failure.load()) {
          first_failure.store(k);
          failure_message = e.what();
        }
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  const std::size_t failed = first_failure.load();
  if (failed < pairs.size()) throw PairSolveError(pairs.first[failed], pairs.second[failed], failure_message);
  return values;
}

void check_value(double v, std::size_t i, std::size_t j) {
  if (!std::isfinite(v) || v < 0.0) throw PairSolveError(i, j, "distance is not a finite nonnegative number");
}

}  // namespace

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Euclidean:
      return "Euclidean";
    case Metric::OT:
      return "OT";
    case Metric::UOT:
      return "UOT";
  }
  return "?";
}

Metric parse_metric(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "euclidean" || s == "l2") return Metric::Euclidean;
  if (s == "ot" || s == "w2") return Metric::OT;
  if (s == "uot" || s == "hk") return Metric::UOT;
  throw InvalidArgument("unknown metric '" + name + "'");
}

void MetricKind::validate() const {
  if ((kind == Metric::UOT) != hk.has_value()) throw InvalidArgument("HK parameters are required for UOT only");
  if (hk) hk->validate();
}

std::string to_hex(const Fingerprint& fp) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : fp) {
    out += digits[b >> 4];
    out += digits[b & 15];
  }
  return out;
}

DistanceMatrix::DistanceMatrix(std::size_t n, MetricKind metric, std::vector<double> values, Fingerprint fingerprint)
    : n_(n), metric_(std::move(metric)), values_(std::move(values)), fingerprint_(fingerprint) {
  if (n_ < 2) throw InvalidArgument("a distance matrix needs at least two items");
  if (values_.size() != condensed_size(n_)) throw LengthMismatch("condensed length does not match n");
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("distances must be finite and nonnegative");
  }
}

double DistanceMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw InvalidArgument("distance index out of range");
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  return values_[index(i, j, n_)];
}

Eigen::MatrixXd DistanceMatrix::square() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j, ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values_[k];
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = values_[k];
    }
  }
  return out;
}

DistanceMatrix DistanceMatrix::subset(std::span<const std::size_t> indices) const {
  const std::size_t m = indices.size();
  std::vector<double> v;
  v.reserve(condensed_size(m));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) v.push_back((*this)(indices[a], indices[b]));
  }
  return DistanceMatrix(m, metric_, std::move(v), fingerprint_);
}

bool operator==(const DistanceMatrix& a, const DistanceMatrix& b) {
  if (a.n_ != b.n_ || a.metric_.kind != b.metric_.kind || a.fingerprint_ != b.fingerprint_) return false;
  if (a.metric_.hk.has_value() != b.metric_.hk.has_value()) return false;
  if (a.metric_.hk && (a.metric_.hk->kappa != b.metric_.hk->kappa || a.metric_.hk->epsilon != b.metric_.hk->epsilon)) {
    return false;
  }
  return a.values_.size() == b.values_.size() &&
         std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
}

double resolve_uot_epsilon(std::span<const GridMeasure> measures, double kappa) {
  std::vector<Point2> points;
  for (const auto& m : measures) points.insert(points.end(), m.coords().begin(), m.coords().end());
  std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());

  double total = 0.0;
  std::size_t count = 0;
  for (const auto& p : points) {
    for (const auto& q : points) {
      const double c = hk_cost_value(std::sqrt(squared_distance(p, q)), kappa);
      if (std::isfinite(c)) {
        total += c;
        ++count;
      }
    }
  }
  const double eps = count ? 1e-2 * total / static_cast<double>(count) : 0.0;
  return eps > 0.0 ? eps : 1e-2;
}

Fingerprint fingerprint_measures(std::span<const GridMeasure> measures, const MetricKind& metric) {
  Sha256 h;
  hash_metric(h, metric, measures.size());
  for (const auto& m : measures) {
    h.scalar(static_cast<std::uint64_t>(m.size()));
    for (const auto& p : m.coords()) {
      h.scalar(p.x);
      h.scalar(p.y);
    }
    h.bytes(m.weights().data(), m.weights().size() * sizeof(double));
  }
  return h.finish();
}

Fingerprint fingerprint_vectors(std::span<const std::vector<double>> vectors, const MetricKind& metric) {
  Sha256 h;
  hash_metric(h, metric, vectors.size());
  for (const auto& v : vectors) {
    h.scalar(static_cast<std::uint64_t>(v.size()));
    h.bytes(v.data(), v.size() * sizeof(double));
  }
  return h.finish();
}

DistanceMatrix compute_pairwise(std::span<const GridMeasure> measures, const MetricKind& metric, std::size_t workers,
                                PairwiseStats* stats) {
  metric.validate();
  const std::size_t n = measures.size();
  if (n < 2) throw InvalidArgument("pairwise distances need at least two measures");
  if (metric.kind == Metric::Euclidean) throw InvalidArgument("Euclidean distances take intensity vectors");
  const Fingerprint fp = fingerprint_measures(measures, metric);

  MetricKind resolved = metric;
  std::atomic<std::size_t> unconverged{0};
  std::vector<double> values;
  if (metric.kind == Metric::OT) {
    for (const auto& m : measures) {
      if (std::abs(m.total_mass() - 1.0) > 1e-9) throw MassMismatch("OT distances need normalized measures");
    }
    values = run_pairs(n, workers, [&](std::size_t i, std::size_t j) {
      const double d = w2_exact(measures[i], measures[j]).distance;
      check_value(d, i, j);
      return d;
    });
  } else {
    if (!resolved.hk->epsilon) resolved.hk->epsilon = resolve_uot_epsilon(measures, resolved.hk->kappa);
    spdlog::debug("UOT pairwise: kappa {} epsilon {:.6g}", resolved.hk->kappa, *resolved.hk->epsilon);
    const HKParams params = *resolved.hk;
    values = run_pairs(n, workers, [&](std::size_t i, std::size_t j) {
      const auto r = hk_distance(measures[i], measures[j], params);
      if (!r.converged) unconverged.fetch_add(1, std::memory_order_relaxed);
      check_value(r.distance, i, j);
      return r.distance;
    });
  }
  if (stats) {
    stats->solves += values.size();
    stats->unconverged += unconverged.load();
  }
  if (unconverged.load() > 0) {
    spdlog::warn("{} of {} HK solves stopped at max_iter", unconverged.load(), values.size());
  }
  return DistanceMatrix(n, std::move(resolved), std::move(values), fp);
}

DistanceMatrix compute_pairwise(std::span<const std::vector<double>> vectors, const MetricKind& metric,
                                std::size_t workers, PairwiseStats* stats) {
  metric.validate();
  const std::size_t n = vectors.size();
  if (n < 2) throw InvalidArgument("pairwise distances need at least two vectors");
  if (metric.kind != Metric::Euclidean) throw InvalidArgument("intensity vectors only support the Euclidean metric");
  for (const auto& v : vectors) {
    if (v.size() != vectors[0].size()) throw LengthMismatch("intensity vectors differ in length");
  }
  auto values = run_pairs(n, workers, [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    const auto& a = vectors[i];
    const auto& b = vectors[j];
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    const double d = std::sqrt(s);
    check_value(d, i, j);
    return d;
  });
  if (stats) stats->solves += values.size();
  return DistanceMatrix(n, metric, std::move(values), fingerprint_vectors(vectors, metric));
}

void save_cache(const DistanceMatrix& m, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write cache " + tmp.string());
    out.write(kCacheMagic, 4);
    binio::put(out, kCacheVersion);
    binio::put(out, static_cast<std::uint8_t>(m.metric().kind));
    binio::put(out, m.metric().hk ? m.metric().hk->kappa : 0.0);
    binio::put(out, m.metric().hk ? m.metric().hk->epsilon.value_or(0.0) : 0.0);
    binio::put(out, static_cast<std::uint32_t>(m.n()));
    out.write(reinterpret_cast<const char*>(m.fingerprint().data()), 32);
    out.write(reinterpret_cast<const char*>(m.values().data()),
              static_cast<std::streamsize>(m.values().size() * sizeof(double)));
    if (!out) throw IoFailure("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DistanceMatrix load_cache(const std::filesystem::path& path, const std::optional<Fingerprint>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open cache " + path.string());
  const std::uintmax_t size = std::filesystem::file_size(path);
  if (size < kCacheHeaderBytes) throw CorruptCache("cache shorter than its header");

  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kCacheMagic, 4) != 0) throw CorruptCache("bad cache magic");
  std::uint32_t version = 0, n = 0;
  std::uint8_t kind = 0;
  double kappa = 0.0, epsilon = 0.0;
  binio::get(in, version);
  binio::get(in, kind);
  binio::get(in, kappa);
  binio::get(in, epsilon);
  binio::get(in, n);
  if (version != kCacheVersion) throw CorruptCache("unsupported cache version " + std::to_string(version));
  if (kind > 2) throw CorruptCache("unknown metric id in cache");
  if (n < 2) throw CorruptCache("cache declares fewer than two items");
  Fingerprint fp{};
  in.read(reinterpret_cast<char*>(fp.data()), 32);
  const std::size_t count = DistanceMatrix::condensed_size(n);
  if (size != kCacheHeaderBytes + count * sizeof(double)) throw CorruptCache("cache length does not match n");
  if (expected && *expected != fp) throw FingerprintMismatch("cache " + path.string() + " was built from other inputs");

  std::vector<double> values(count);
  if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
    throw CorruptCache("truncated cache values");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw CorruptCache("cache holds an invalid distance");
  }
  MetricKind metric{static_cast<Metric>(kind), std::nullopt};
  if (metric.kind == Metric::UOT) {
    HKParams p;
    p.kappa = kappa;
    p.epsilon = epsilon;
    metric.hk = p;
  }
  return DistanceMatrix(n, std::move(metric), std::move(values), fp);
}

MetricAxiomReport metric_axiom_report(const DistanceMatrix& m, std::size_t triple_samples, std::uint64_t seed) {
  const std::size_t n = m.n();
  if (n < 3) throw InvalidArgument("triangle checks need at least three items");
  MetricAxiomReport report;
  report.min_value = *std::min_element(m.values().begin(), m.values().end());
  double worst = -std::numeric_limits<double>::infinity();
  auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
    worst = std::max(worst, m(i, k) - m(i, j) - m(j, k));
    ++report.triples_checked;
  };
  if (triple_samples == 0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i && k != j) check(i, j, k);
        }
      }
    }
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t s = 0; s < triple_samples; ++s) {
      std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
      while (j == i) j = pick(rng);
      while (k == i || k == j) k = pick(rng);
      check(i, j, k);
    }
  }
  report.max_triangle_violation = std::max(0.0, worst);
  return report;
}

}  // namespace hkembed

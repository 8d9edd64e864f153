#include "hkembed/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "hkembed/errors.hpp"
#include "hkembed/linalg.hpp"
#include "hkembed/seeding.hpp"

namespace hkembed {

namespace {

constexpr std::size_t kMaxLloydIterations = 300;
constexpr std::size_t kSpectralRestarts = 10;

void check_coords(const Eigen::MatrixXd& x, std::size_t k) {
  if (x.rows() == 0) throw InvalidArgument("no points to cluster");
  if (k == 0 || k > static_cast<std::size_t>(x.rows())) throw InvalidArgument("k must lie in [1, n]");
  if (!x.allFinite()) throw InvalidArgument("coordinates must be finite");
}

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& x, std::size_t k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = first(rng);
    }
    centers.row(static_cast<Eigen::Index>(c)) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

struct Lloyd {
  std::vector<std::uint32_t> labels;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
};

Lloyd lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  Lloyd out;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd best(n);
  auto assign = [&]() {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      double low = (x.row(i) - centers.row(0)).squaredNorm();
      for (Eigen::Index c = 1; c < k; ++c) {
        const double v = (x.row(i) - centers.row(c)).squaredNorm();
        if (v < low) {
          low = v;
          arg = c;
        }
      }
      best[i] = low;
      auto& l = out.labels[static_cast<std::size_t>(i)];
      if (l != static_cast<std::uint32_t>(arg)) changed = true;
      l = static_cast<std::uint32_t>(arg);
    }
    return changed;
  };

  assign();
  for (std::size_t it = 0; it < kMaxLloydIterations; ++it) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(out.labels[static_cast<std::size_t>(i)]) += x.row(i);
      counts[out.labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0.0) {
        centers.row(c) = sums.row(c) / counts[c];
        continue;
      }
      // Empty cluster: move it onto the point farthest from its own center.
      Eigen::Index far = 0;
      best.maxCoeff(&far);
      centers.row(c) = x.row(far);
      best[far] = 0.0;
    }
    if (!assign()) break;
  }
  out.centers = centers;
  out.inertia = best.sum();
  return out;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& coords, std::size_t k, std::size_t restarts, std::uint64_t seed) {
  check_coords(coords, k);
  if (restarts == 0) throw InvalidArgument("k-means needs at least one restart");
  KMeansResult result;
  result.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, {r}));
    auto run = lloyd(coords, plus_plus_seeds(coords, k, rng));
    result.restart_inertia.push_back(run.inertia);
    if (run.inertia < result.inertia) {
      result.inertia = run.inertia;
      result.labels = std::move(run.labels);
      result.centers = std::move(run.centers);
    }
  }
  return result;
}

std::vector<std::uint32_t> spectral_clustering(const Eigen::MatrixXd& coords, std::size_t k, std::uint64_t seed) {
  check_coords(coords, k);
  const Eigen::Index n = coords.rows();
  Eigen::MatrixXd dist(n, n);
  std::vector<double> nonzero;
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = (coords.row(i) - coords.row(j)).norm();
      if (dist(i, j) > 0.0) nonzero.push_back(dist(i, j));
    }
  }
  double sigma = 1.0;
  if (!nonzero.empty()) {
    const std::size_t mid = nonzero.size() / 2;
    std::nth_element(nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(mid), nonzero.end());
    sigma = nonzero[mid];
    if (nonzero.size() % 2 == 0) {
      sigma = 0.5 * (sigma + *std::max_element(nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
  }

  Eigen::MatrixXd w = (-(dist.array().square()) / (2.0 * sigma * sigma)).exp().matrix();
  w.diagonal().setZero();
  Eigen::VectorXd inv_sqrt = w.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) inv_sqrt[i] = inv_sqrt[i] > 0.0 ? 1.0 / std::sqrt(inv_sqrt[i]) : 0.0;
  Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose()).eval();

  Eigen::MatrixXd u = symmetric_eigendecomposition(lap, k, EigenOrder::Ascending).vectors;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }
  return kmeans(u, k, kSpectralRestarts, seed).labels;
}

std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw InvalidArgument("assignment cost must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials and matching are 1-based; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of(n);
  for (std::size_t j = 1; j <= n; ++j) col_of[match[j] - 1] = j - 1;
  return col_of;
}

double assignment_accuracy(std::span<const std::uint32_t> pred, std::span<const std::uint32_t> truth) {
  if (pred.size() != truth.size()) throw LengthMismatch("prediction and truth lengths differ");
  if (pred.empty()) throw InvalidArgument("assignment accuracy of an empty labeling");
  std::map<std::uint32_t, std::size_t> pred_id, true_id;
  for (auto p : pred) pred_id.emplace(p, pred_id.size());
  for (auto t : truth) true_id.emplace(t, true_id.size());
  const auto size = static_cast<Eigen::Index>(std::max(pred_id.size(), true_id.size()));
  Eigen::MatrixXd agree = Eigen::MatrixXd::Zero(size, size);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    agree(static_cast<Eigen::Index>(pred_id[pred[i]]), static_cast<Eigen::Index>(true_id[truth[i]])) += 1.0;
  }
  const auto match = hungarian(-agree);
  double hits = 0.0;
  for (Eigen::Index r = 0; r < size; ++r) hits += agree(r, static_cast<Eigen::Index>(match[static_cast<std::size_t>(r)]));
  return hits / static_cast<double>(pred.size());
}

std::string ClusteringSpec::name() const { return kind == ClusteringKind::KMeans ? "k-means" : "spectral"; }

void ClusteringSpec::validate() const {
  if (k < 2) throw InvalidArgument("clustering needs k >= 2");
  if (restarts == 0) throw InvalidArgument("clustering needs at least one restart");
}

std::vector<std::uint32_t> run_clustering(const ClusteringSpec& spec, const Eigen::MatrixXd& coords) {
  spec.validate();
  if (spec.kind == ClusteringKind::KMeans) return kmeans(coords, spec.k, spec.restarts, spec.seed).labels;
  return spectral_clustering(coords, spec.k, spec.seed);
}

}  // namespace hkembed

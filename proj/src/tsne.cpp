#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hkembed/embed.hpp"
#include "hkembed/errors.hpp"

namespace hkembed {

namespace {

constexpr int kBisectionSteps = 64;
constexpr int kBracketSteps = 2000;
constexpr double kEntropyTol = 1e-5;
constexpr double kMinGain = 0.01;
constexpr double kProbFloor = 1e-12;

// Entropy in bits of the row distribution exp(-beta * shifted) / Z; fills `p` with it.
double row_entropy(const std::vector<double>& shifted, double beta, std::vector<double>& p) {
  double z = 0.0, weighted = 0.0;
  for (std::size_t j = 0; j < shifted.size(); ++j) {
    p[j] = std::exp(-beta * shifted[j]);
    z += p[j];
    weighted += p[j] * shifted[j];
  }
  for (double& v : p) v /= z;
  return (std::log(z) + beta * weighted / z) / std::numbers::ln2;
}

}  // namespace

TsneAffinities tsne_affinities(const DistanceMatrix& d, double perplexity) {
  const std::size_t n = d.n();
  if (!(perplexity > 0.0)) throw InvalidArgument("perplexity must be positive");
  const double target = std::log2(perplexity);

  TsneAffinities out;
  out.conditional = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  out.entropy_bits.resize(static_cast<Eigen::Index>(n));
  std::vector<double> shifted(n - 1), p(n - 1);

  for (std::size_t i = 0; i < n; ++i) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0, c = 0; j < n; ++j) {
      if (j == i) continue;
      const double v = d(i, j);
      shifted[c++] = v * v;
      lowest = std::min(lowest, v * v);
    }
    double mean = 0.0;
    for (double& v : shifted) mean += (v -= lowest);
    mean /= static_cast<double>(shifted.size());

    // Entropy falls as beta grows; bracket the target, then bisect in log(beta).
    double beta = mean > 0.0 ? 1.0 / mean : 1.0;
    double lo = beta, hi = beta;
    double h = row_entropy(shifted, beta, p);
    for (int s = 0; s < kBracketSteps && row_entropy(shifted, hi, p) > target; ++s) hi *= 2.0;
    for (int s = 0; s < kBracketSteps && row_entropy(shifted, lo, p) < target; ++s) lo *= 0.5;
    bool found = std::abs(h - target) <= kEntropyTol;
    for (int step = 0; step < kBisectionSteps && !found; ++step) {
      beta = std::sqrt(lo * hi);
      h = row_entropy(shifted, beta, p);
      if (!std::isfinite(h)) break;
      if (std::abs(h - target) <= kEntropyTol) {
        found = true;
      } else if (h > target) {
        lo = beta;
      } else {
        hi = beta;
      }
    }
    if (!found) {
      throw BandwidthBisectionFailure("row " + std::to_string(i) + " cannot reach perplexity " +
                                      std::to_string(perplexity));
    }
    row_entropy(shifted, beta, p);
    for (std::size_t j = 0, c = 0; j < n; ++j) {
      if (j != i) out.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[c++];
    }
    out.entropy_bits[static_cast<Eigen::Index>(i)] = h;
  }
  return out;
}

Embedding tsne(const DistanceMatrix& d, const TsneParams& params) {
  const std::size_t n = d.n();
  if (!(params.perplexity > 0.0) || params.perplexity > static_cast<double>(n - 1) / 3.0) {
    throw InvalidArgument("t-SNE needs 0 < perplexity <= (n-1)/3");
  }
  if (params.iterations == 0 || params.dimension == 0) throw InvalidArgument("t-SNE needs iterations and dimension");
  if (!(params.learning_rate > 0.0) || !(params.exaggeration > 0.0)) {
    throw InvalidArgument("t-SNE learning rate and exaggeration must be positive");
  }

  const auto ni = static_cast<Eigen::Index>(n);
  const auto dim = static_cast<Eigen::Index>(params.dimension);
  const auto aff = tsne_affinities(d, params.perplexity);
  Eigen::MatrixXd p = (aff.conditional + aff.conditional.transpose()) / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(kProbFloor);
  p.diagonal().setZero();

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd y(ni, dim);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index c = 0; c < dim; ++c) y(i, c) = 1e-4 * normal(rng);
  }
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(ni, dim);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(ni, dim);
  Eigen::MatrixXd grad(ni, dim);
  Eigen::MatrixXd num(ni, ni);

  for (std::size_t it = 0; it < params.iterations; ++it) {
    const double exaggeration = it < params.exaggeration_iterations ? params.exaggeration : 1.0;
    const double momentum = it < params.momentum_switch ? params.initial_momentum : params.final_momentum;

    double total = 0.0;
    for (Eigen::Index i = 0; i < ni; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < ni; ++j) {
        const double q = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = num(j, i) = q;
        total += 2.0 * q;
      }
    }
    grad.setZero();
    for (Eigen::Index i = 0; i < ni; ++i) {
      for (Eigen::Index j = 0; j < ni; ++j) {
        if (i == j) continue;
        const double q = std::max(num(i, j) / total, kProbFloor);
        const double coeff = 4.0 * (exaggeration * p(i, j) - q) * num(i, j);
        grad.row(i) += coeff * (y.row(i) - y.row(j));
      }
    }
    for (Eigen::Index i = 0; i < ni; ++i) {
      for (Eigen::Index c = 0; c < dim; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = std::max(kMinGain, same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2);
        velocity(i, c) = momentum * velocity(i, c) - params.learning_rate * gains(i, c) * grad(i, c);
      }
    }
    y += velocity;
    y.rowwise() -= y.colwise().mean();
    if (!y.allFinite()) throw NumericalOverflow("t-SNE coordinates diverged");
  }

  Embedding e;
  e.coords = y;
  e.method = EmbedMethod::TSNE;
  e.metric = d.metric().kind;
  return e;
}

}  // namespace hkembed

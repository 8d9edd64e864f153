#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "hkembed/errors.hpp"
#include "hkembed/solvers.hpp"

namespace hkembed::solvers {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Kernel is re-absorbed once a scaling factor leaves [e^-30, e^30].
constexpr double kAbsorbThreshold = 30.0;
// Kernel sums below this lose too much precision; fall back to log-sum-exp.
constexpr double kTinySum = 1e-200;
constexpr double kAnnealFactor = 0.5;

class ScalingSolver {
 public:
  ScalingSolver(const RowMatrix& cost, std::span<const double> a, std::span<const double> b,
                const ScalingOptions& options)
      : cost_(cost), a_(a), b_(b), options_(options), m_(cost.rows()), n_(cost.cols()) {
    row_alive_.assign(m_, 0);
    col_alive_.assign(n_, 0);
    for (Eigen::Index i = 0; i < m_; ++i) {
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::isfinite(cost_(i, j))) {
          row_alive_[i] = 1;
          col_alive_[j] = 1;
        }
      }
    }
    log_a_.resize(m_);
    log_b_.resize(n_);
    for (Eigen::Index i = 0; i < m_; ++i) log_a_[i] = std::log(a_[i]);
    for (Eigen::Index j = 0; j < n_; ++j) log_b_[j] = std::log(b_[j]);
    f_ = Eigen::VectorXd::Zero(m_);
    g_ = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!row_alive_[i]) f_[i] = kInf;
    }
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (!col_alive_[j]) g_[j] = kInf;
    }
  }

  ScalingResult run() {
    ScalingResult result;
    std::vector<double> schedule;
    const double target = options_.epsilon;
    if (options_.epsilon_scaling) {
      double start = 0.0;
      std::size_t count = 0;
      for (Eigen::Index k = 0; k < cost_.size(); ++k) {
        if (std::isfinite(cost_.data()[k])) {
          start += cost_.data()[k];
          ++count;
        }
      }
      start = count ? start / static_cast<double>(count) : target;
      for (double eps = start; eps > target; eps *= kAnnealFactor) schedule.push_back(eps);
    }
    schedule.push_back(target);

    std::size_t iterations = 0;
    bool converged = false;
    for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
      const bool last = stage + 1 == schedule.size();
      const double eps = schedule[stage];
      const double stage_tol = last ? options_.tol : std::max(options_.tol, 1e-3 * eps);
      converged = run_stage(eps, stage_tol, iterations);
      if (iterations >= options_.max_iter && !(last && converged)) {
        converged = last && converged;
        break;
      }
    }
    result.f = f_;
    result.g = g_;
    result.iterations = iterations;
    result.converged = converged;
    return result;
  }

 private:
  double damping(double eps) const { return std::isinf(options_.rho) ? 1.0 : options_.rho / (options_.rho + eps); }

  void absorb(double eps) {
    ft_ = f_;
    gt_ = g_;
    kernel_.resize(m_, n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      for (Eigen::Index j = 0; j < n_; ++j) {
        const double c = cost_(i, j);
        kernel_(i, j) = std::isfinite(c) ? std::exp((ft_[i] + gt_[j] - c) / eps) : 0.0;
      }
    }
  }

  // softmin over row i (or column j) evaluated directly in the log domain.
  double row_softmin(Eigen::Index i, double eps) const {
    double peak = -kInf;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(cost_(i, j))) peak = std::max(peak, log_b_[j] + (g_[j] - cost_(i, j)) / eps);
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(cost_(i, j))) sum += std::exp(log_b_[j] + (g_[j] - cost_(i, j)) / eps - peak);
    }
    return -eps * (peak + std::log(sum));
  }

  double col_softmin(Eigen::Index j, double eps) const {
    double peak = -kInf;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (std::isfinite(cost_(i, j))) peak = std::max(peak, log_a_[i] + (f_[i] - cost_(i, j)) / eps);
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (std::isfinite(cost_(i, j))) sum += std::exp(log_a_[i] + (f_[i] - cost_(i, j)) / eps - peak);
    }
    return -eps * (peak + std::log(sum));
  }

  bool run_stage(double eps, double tol, std::size_t& iterations) {
    const double damp = damping(eps);
    Relaxation relax;
    absorb(eps);
    Eigen::VectorXd scaled_b(n_), scaled_a(m_), sums;
    while (iterations < options_.max_iter) {
      bool reabsorb = false;
      double change = 0.0;
      const double w = relax.omega;

      for (Eigen::Index j = 0; j < n_; ++j) {
        scaled_b[j] = col_alive_[j] ? b_[j] * std::exp((g_[j] - gt_[j]) / eps) : 0.0;
      }
      sums.noalias() = kernel_ * scaled_b;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (!row_alive_[i]) continue;
        double updated;
        const double s = sums[i];
        if (s > kTinySum && std::isfinite(s)) {
          updated = damp * (ft_[i] - eps * std::log(s));
        } else {
          updated = damp * row_softmin(i, eps);
          reabsorb = true;
        }
        updated = (1.0 - w) * f_[i] + w * updated;
        change = std::max(change, std::abs(updated - f_[i]));
        f_[i] = updated;
      }

      for (Eigen::Index i = 0; i < m_; ++i) {
        scaled_a[i] = row_alive_[i] ? a_[i] * std::exp((f_[i] - ft_[i]) / eps) : 0.0;
      }
      sums.noalias() = kernel_.transpose() * scaled_a;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (!col_alive_[j]) continue;
        double updated;
        const double s = sums[j];
        if (s > kTinySum && std::isfinite(s)) {
          updated = damp * (gt_[j] - eps * std::log(s));
        } else {
          updated = damp * col_softmin(j, eps);
          reabsorb = true;
        }
        updated = (1.0 - w) * g_[j] + w * updated;
        change = std::max(change, std::abs(updated - g_[j]));
        g_[j] = updated;
      }
      if (!std::isinf(options_.rho) && !reabsorb) change = std::max(change, translate(eps, sums));
      ++iterations;

      if (!std::isfinite(change)) throw NumericalOverflow("scaling potentials diverged");
      const double rate = relax.observe(change);
      if (damp < 1.0) {
        // Estimated distance to the fixed point, with the rate capped by the worst case.
        const double q = std::min(damp, rate);
        if (change * q / (1.0 - q) < tol) return true;
      } else if (change < tol) {
        return true;
      }

      double drift = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (row_alive_[i]) drift = std::max(drift, std::abs(f_[i] - ft_[i]));
      }
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (col_alive_[j]) drift = std::max(drift, std::abs(g_[j] - gt_[j]));
      }
      if (reabsorb || drift > kAbsorbThreshold * eps) absorb(eps);
    }
    return false;
  }

  /**
   * Over-relaxation factor for one stage. Plain iterations run first; once the
   * ratio of successive changes settles at theta, omega = 2/(1+sqrt(1-theta)),
   * re-estimated as the rate keeps settling. Growth of the changes drops omega back to 1 and halves the allowed excess.
   */
  struct Relaxation {
    static constexpr int kWindow = 5;
    double omega = 1.0;
    double omega_cap = 1.95;
    std::array<double, kWindow> ratios{};
    int seen = 0;
    int since_reset = 0;
    int growing = 0;
    double previous = kInf;

    // Returns a conservative contraction estimate (largest recent ratio, 1 while unknown).
    double observe(double change) {
      if (std::isinf(previous) || previous == 0.0) {
        previous = change;
        return 1.0;
      }
      const double ratio = change / previous;
      previous = change;
      ratios[seen % kWindow] = ratio;
      ++seen;
      ++since_reset;
      growing = ratio > 1.0 ? growing + 1 : 0;
      if (omega > 1.0 && growing >= 3) {
        omega_cap = 1.0 + 0.5 * (omega_cap - 1.0);
        omega = 1.0;
        since_reset = 0;
        return 1.0;
      }
      if (seen < kWindow) return 1.0;
      const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
      // A relaxed real mode contracts at 1 - omega*(1 - theta); a rate near omega - 1
      // means omega already overshoots into the oscillating regime.
      if (since_reset >= 2 * kWindow && *hi < 1.0 && *hi - *lo < 0.05 && *hi > omega - 1.0 + 0.02) {
        const double theta = 1.0 - (1.0 - *hi) / omega;
        const double target = std::min(omega_cap, 2.0 / (1.0 + std::sqrt(1.0 - theta)));
        if (theta > 0.5 && target > omega + 0.01) {
          omega = target;
          since_reset = 0;
        }
      }
      return std::min(1.0, *hi);
    }
  };

  // Exact dual ascent over the shifts (f + u, g + v). The damped updates contract
  // slowest along these two directions; along f - g the plan does not change at all.
  // col_sums holds K^T (a * e^((f - ft)/eps)) for the current f.
  double translate(double eps, const Eigen::VectorXd& col_sums) {
    const double rho = options_.rho;
    double plan_mass = 0.0;
    double penalty_a = 0.0;
    double penalty_b = 0.0;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (!col_alive_[j]) continue;
      plan_mass += b_[j] * std::exp((g_[j] - gt_[j]) / eps) * col_sums[j];
      penalty_b += b_[j] * std::exp(-g_[j] / rho);
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (row_alive_[i]) penalty_a += a_[i] * std::exp(-f_[i] / rho);
    }
    if (!(plan_mass > 0.0) || !(penalty_a > 0.0) || !(penalty_b > 0.0) || !std::isfinite(plan_mass) ||
        !std::isfinite(penalty_a) || !std::isfinite(penalty_b)) {
      return 0.0;
    }
    // Stationarity: A e^(-u/rho) = M e^((u+v)/eps) = B e^(-v/rho).
    const double split = 0.5 * rho * std::log(penalty_a / penalty_b);
    const double common = (0.5 * (std::log(penalty_a) + std::log(penalty_b)) - std::log(plan_mass)) / (1.0 / rho + 2.0 / eps);
    const double u = common + split;
    const double v = common - split;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (row_alive_[i]) f_[i] += u;
    }
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (col_alive_[j]) g_[j] += v;
    }
    return std::max(std::abs(u), std::abs(v));
  }

  const RowMatrix& cost_;
  std::span<const double> a_;
  std::span<const double> b_;
  ScalingOptions options_;
  Eigen::Index m_;
  Eigen::Index n_;
  std::vector<char> row_alive_;
  std::vector<char> col_alive_;
  Eigen::VectorXd log_a_;
  Eigen::VectorXd log_b_;
  Eigen::VectorXd f_;
  Eigen::VectorXd g_;
  Eigen::VectorXd ft_;
  Eigen::VectorXd gt_;
  RowMatrix kernel_;
};

}  // namespace

ScalingResult solve_scaling(const RowMatrix& cost, std::span<const double> a, std::span<const double> b,
                            const ScalingOptions& options) {
  if (static_cast<std::size_t>(cost.rows()) != a.size() || static_cast<std::size_t>(cost.cols()) != b.size()) {
    throw InvalidArgument("cost matrix shape does not match the marginals");
  }
  if (a.empty() || b.empty()) throw InvalidArgument("scaling problem with an empty side");
  if (!(options.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(options.rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(options.tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (options.max_iter == 0) throw InvalidArgument("max_iter must be positive");
  for (double v : a) {
    if (!(v > 0.0)) throw InvalidArgument("marginal weights must be positive");
  }
  for (double v : b) {
    if (!(v > 0.0)) throw InvalidArgument("marginal weights must be positive");
  }
  ScalingSolver solver(cost, a, b, options);
  return solver.run();
}

RowMatrix plan_from_potentials(const RowMatrix& cost, std::span<const double> a, std::span<const double> b,
                               const Eigen::VectorXd& f, const Eigen::VectorXd& g, double epsilon) {
  RowMatrix plan(cost.rows(), cost.cols());
  for (Eigen::Index i = 0; i < cost.rows(); ++i) {
    const double log_ai = std::log(a[i]);
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      const double c = cost(i, j);
      plan(i, j) = std::isfinite(c) ? std::exp(log_ai + std::log(b[j]) + (f[i] + g[j] - c) / epsilon) : 0.0;
    }
  }
  return plan;
}

}  // namespace hkembed::solvers

#include "hkembed/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hkembed/errors.hpp"
#include "hkembed/solvers.hpp"

namespace hkembed {

namespace {

TransportResult finish(RowMatrix plan, double objective, std::size_t iterations, bool converged) {
  TransportResult r;
  r.objective = std::max(0.0, objective);
  r.distance = std::sqrt(r.objective);
  r.plan = TransportPlan{std::move(plan)};
  r.iterations = iterations;
  r.converged = converged;
  return r;
}

void require_equal_mass(const GridMeasure& mu, const GridMeasure& nu) {
  if (mu.empty() || nu.empty()) throw InvalidArgument("transport between empty measures");
  if (std::abs(mu.total_mass() - nu.total_mass()) > 1e-9) {
    throw MassMismatch("balanced transport needs equal masses (got " + std::to_string(mu.total_mass()) + " and " +
                       std::to_string(nu.total_mass()) + ")");
  }
}

double plan_cost(const RowMatrix& plan, const CostMatrix& cost) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < plan.size(); ++k) {
    const double p = plan.data()[k];
    if (p > 0.0) total += p * cost.data()[k];
  }
  return total;
}

}  // namespace

void HKParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be positive");
  if (epsilon && (!(*epsilon > 0.0) || !std::isfinite(*epsilon))) throw InvalidArgument("epsilon must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (max_iter == 0) throw InvalidArgument("max_iter must be positive");
}

TransportResult w2_exact(const GridMeasure& mu, const GridMeasure& nu) {
  require_equal_mass(mu, nu);
  const CostMatrix cost = squared_euclidean_cost(mu, nu);
  auto lp = solvers::solve_transport_lp(cost, mu.weights(), nu.weights());
  const double objective = lp.cost;
  return finish(std::move(lp.plan), objective, lp.pivots, true);
}

TransportResult w2_entropic(const GridMeasure& mu, const GridMeasure& nu, double epsilon, std::size_t max_iter,
                            double tol) {
  require_equal_mass(mu, nu);
  const CostMatrix cost = squared_euclidean_cost(mu, nu);
  solvers::ScalingOptions options;
  options.epsilon = epsilon;
  options.rho = solvers::kBalanced;
  options.max_iter = max_iter;
  options.tol = tol;
  const auto s = solvers::solve_scaling(cost, mu.weights(), nu.weights(), options);
  RowMatrix plan = solvers::plan_from_potentials(cost, mu.weights(), nu.weights(), s.f, s.g, epsilon);
  const double objective = plan_cost(plan, cost);
  return finish(std::move(plan), objective, s.iterations, s.converged);
}

TransportResult hk_distance(const GridMeasure& mu, const GridMeasure& nu, const HKParams& params) {
  params.validate();
  if (mu.empty() || nu.empty()) throw InvalidArgument("transport between empty measures");
  const CostMatrix cost = hk_cost(mu, nu, params.kappa);

  double epsilon = 0.0;
  if (params.epsilon) {
    epsilon = *params.epsilon;
  } else {
    epsilon = 1e-2 * mean_finite_cost(cost);
    // All support pairs coincide or lie beyond the cutoff; any positive value gives the same plan.
    if (!(epsilon > 0.0)) epsilon = 1e-2;
  }

  solvers::ScalingOptions options;
  options.epsilon = epsilon;
  options.rho = 1.0;
  options.max_iter = params.max_iter;
  options.tol = params.tol;
  options.epsilon_scaling = params.epsilon_scaling;
  const auto s = solvers::solve_scaling(cost, mu.weights(), nu.weights(), options);
  TransportPlan plan{solvers::plan_from_potentials(cost, mu.weights(), nu.weights(), s.f, s.g, epsilon)};
  const double objective = eval_hk_objective(plan, cost, mu, nu);
  return finish(std::move(plan.mass), objective, s.iterations, s.converged);
}

double hk_dirac_closed_form(double a, double b, double d, double kappa) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw InvalidArgument("Dirac masses must be nonnegative");
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  const double angle = std::min(d / kappa, std::numbers::pi / 2);
  return std::max(0.0, a + b - 2.0 * std::sqrt(a * b) * std::cos(angle));
}

double kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) throw LengthMismatch("KL divergence of vectors with different lengths");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    const double qi = q[i];
    if (pi > 0.0) {
      if (!(qi > 0.0)) return std::numeric_limits<double>::infinity();
      total += pi * std::log(pi / qi) - pi + qi;
    } else {
      total += qi;
    }
  }
  return total;
}

double eval_hk_objective(const TransportPlan& plan, const CostMatrix& cost, const GridMeasure& mu,
                         const GridMeasure& nu) {
  if (plan.mass.rows() != cost.rows() || plan.mass.cols() != cost.cols() ||
      static_cast<std::size_t>(cost.rows()) != mu.size() || static_cast<std::size_t>(cost.cols()) != nu.size()) {
    throw InvalidArgument("plan, cost and measures disagree in shape");
  }
  double transport = 0.0;
  for (Eigen::Index k = 0; k < cost.size(); ++k) {
    const double p = plan.mass.data()[k];
    if (p < 0.0 || !std::isfinite(p)) throw InvalidArgument("plan entries must be finite and nonnegative");
    if (p == 0.0) continue;
    const double c = cost.data()[k];
    if (!std::isfinite(c)) throw InfiniteCostMass("plan moves mass across an infinite-cost pair");
    transport += p * c;
  }
  const Eigen::Map<const Eigen::VectorXd> mu_w(mu.weights().data(), static_cast<Eigen::Index>(mu.size()));
  const Eigen::Map<const Eigen::VectorXd> nu_w(nu.weights().data(), static_cast<Eigen::Index>(nu.size()));
  return transport + kl_divergence(plan.row_marginals(), mu_w) + kl_divergence(plan.col_marginals(), nu_w);
}

}  // namespace hkembed

#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "hkembed/measures.hpp"

namespace hkembed {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/** m x n ground costs; +infinity marks pairs that may not exchange mass. */
using CostMatrix = RowMatrix;

struct TransportPlan {
  RowMatrix mass;

  Eigen::VectorXd row_marginals() const { return mass.rowwise().sum(); }
  Eigen::VectorXd col_marginals() const { return mass.colwise().sum().transpose(); }
};

struct HKParams {
  double kappa = 1.0;
  /** Entropic regularization; unset selects 1e-2 times the mean finite cost entry of the pair. */
  std::optional<double> epsilon;
  std::size_t max_iter = 10000;
  /** Stop once the largest potential update falls below this. */
  double tol = 1e-9;
  /** Anneal epsilon geometrically from the cost scale down to the target (same fixed point). */
  bool epsilon_scaling = true;

  void validate() const;
};

struct TransportResult {
  double distance = 0.0;
  double objective = 0.0;
  std::optional<TransportPlan> plan;
  std::size_t iterations = 0;
  bool converged = true;
};

/** Entry (i,j) = |a_i - b_j|^2. */
CostMatrix squared_euclidean_cost(const GridMeasure& a, const GridMeasure& b);

/** Entry (i,j) = -2 log cos(d/kappa) for d = |a_i - b_j| < kappa*pi/2, +infinity otherwise. */
CostMatrix hk_cost(const GridMeasure& a, const GridMeasure& b, double kappa);

/** Scalar form of the Hellinger-Kantorovich ground cost. */
double hk_cost_value(double distance, double kappa);

double mean_finite_cost(const CostMatrix& cost);

/** Exact W2 via the transportation linear program (network simplex). */
TransportResult w2_exact(const GridMeasure& mu, const GridMeasure& nu);

/**
 * Entropic W2 by balanced log-domain Sinkhorn. The reported objective is
 * sum C_ij gamma_ij on the returned plan, without the entropy term.
 */
TransportResult w2_entropic(const GridMeasure& mu, const GridMeasure& nu, double epsilon, std::size_t max_iter,
                            double tol);

/**
 * Entropic Hellinger-Kantorovich distance.
 *
 * Minimizes <C,gamma> + KL(P1 gamma | mu) + KL(P2 gamma | nu) + eps KL(gamma | mu x nu)
 * with C = hk_cost(kappa) by alternating damped softmin updates of the dual
 * potentials (damping 1/(1+eps)). The objective reported is the unregularized
 * one evaluated on gamma_ij = mu_i nu_j exp((f_i + g_j - C_ij)/eps).
 */
TransportResult hk_distance(const GridMeasure& mu, const GridMeasure& nu, const HKParams& params);

/** HK^2 between a*delta_x and b*delta_y with |x-y| = d. */
double hk_dirac_closed_form(double a, double b, double d, double kappa);

/** <C,gamma> + KL(P1 gamma | mu) + KL(P2 gamma | nu), with KL(p|q) = sum p log(p/q) - p + q. */
double eval_hk_objective(const TransportPlan& plan, const CostMatrix& cost, const GridMeasure& mu,
                         const GridMeasure& nu);

/** Generalized KL divergence between nonnegative vectors, 0 log 0 = 0. */
double kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& q);

}  // namespace hkembed

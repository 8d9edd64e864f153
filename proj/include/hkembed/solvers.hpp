#pragma once

// Solver kernels behind the transport API. Exposed for testing.

#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Core>

#include "hkembed/transport.hpp"

namespace hkembed::solvers {

struct LpResult {
  RowMatrix plan;
  double cost = 0.0;
  std::size_t pivots = 0;
};

/**
 * Minimum-cost transportation LP: min <C,x> s.t. row sums = supply,
 * column sums = demand, x >= 0. Primal network simplex on the bipartite
 * graph with an artificial root; leaving arcs follow the strongly-feasible
 * tree rule, entering arcs come from block pricing (most negative reduced
 * cost in the block, lowest index on ties). Costs must be finite.
 */
LpResult solve_transport_lp(const RowMatrix& cost, std::span<const double> supply, std::span<const double> demand,
                            std::size_t max_pivots = 0);

inline constexpr double kBalanced = std::numeric_limits<double>::infinity();

struct ScalingOptions {
  double epsilon = 1e-2;
  /** KL marginal penalty weight; kBalanced enforces the marginals exactly. */
  double rho = kBalanced;
  std::size_t max_iter = 10000;
  double tol = 1e-9;
  bool epsilon_scaling = true;
};

struct ScalingResult {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
  std::size_t iterations = 0;
  bool converged = false;
};

/**
 * Log-domain entropic scaling with kernel absorption. Each half step sets
 *   f_i = rho/(rho+eps) * softmin_eps(C_i. - g ; b)
 *   g_j = rho/(rho+eps) * softmin_eps(C_.j - f ; a)
 * where softmin_eps(x ; w) = -eps log sum_k w_k exp(-x_k/eps). Rows or
 * columns with no finite cost get potential +infinity.
 */
ScalingResult solve_scaling(const RowMatrix& cost, std::span<const double> a, std::span<const double> b,
                            const ScalingOptions& options);

/** gamma_ij = a_i b_j exp((f_i + g_j - C_ij)/eps), zero where C is infinite. */
RowMatrix plan_from_potentials(const RowMatrix& cost, std::span<const double> a, std::span<const double> b,
                               const Eigen::VectorXd& f, const Eigen::VectorXd& g, double epsilon);

}  // namespace hkembed::solvers

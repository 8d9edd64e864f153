#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace hkembed {

enum class EigenOrder { Descending, Ascending };

struct Eigenpairs {
  Eigen::VectorXd values;
  /** One eigenvector per column, unit length, sign fixed so its largest-magnitude entry is positive. */
  Eigen::MatrixXd vectors;
};

/**
 * The first `count` eigenpairs of a symmetric matrix in the requested order.
 * Throws InvalidArgument if M is not symmetric within 1e-10 (relative to its
 * largest entry), ConvergenceFailure if the solver does not converge.
 */
Eigenpairs symmetric_eigendecomposition(const Eigen::MatrixXd& m, std::size_t count, EigenOrder order);

}  // namespace hkembed

#include "hkembed/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "hkembed/errors.hpp"

namespace hkembed {

Eigenpairs symmetric_eigendecomposition(const Eigen::MatrixXd& m, std::size_t count, EigenOrder order) {
  if (m.rows() != m.cols()) throw InvalidArgument("eigendecomposition needs a square matrix");
  const auto n = static_cast<std::size_t>(m.rows());
  if (n == 0) throw InvalidArgument("eigendecomposition of an empty matrix");
  if (count > n) throw InvalidArgument("more eigenpairs requested than the matrix has");
  if (!m.allFinite()) throw InvalidArgument("matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw InvalidArgument("matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw ConvergenceFailure("symmetric eigensolver did not converge");

  // Eigen returns ascending eigenvalues.
  Eigenpairs out;
  out.values.resize(static_cast<Eigen::Index>(count));
  out.vectors.resize(m.rows(), static_cast<Eigen::Index>(count));
  for (std::size_t c = 0; c < count; ++c) {
    const Eigen::Index src = order == EigenOrder::Ascending ? static_cast<Eigen::Index>(c)
                                                            : static_cast<Eigen::Index>(n - 1 - c);
    out.values[static_cast<Eigen::Index>(c)] = solver.eigenvalues()[src];
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v[peak] < 0.0) v = -v;
    out.vectors.col(static_cast<Eigen::Index>(c)) = v;
  }
  return out;
}

}  // namespace hkembed

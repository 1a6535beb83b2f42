#include <algorithm>
#include <limits>
#include <Eigen/Eigenvalues>

#include "capmfg/error.hpp"
#include "capmfg/numerics.hpp"

namespace capmfg::numerics {

Eigen::VectorXcd eigenvalues(const Matrix& m) {
  require_square(m, "matrix");
  require_finite(m, "matrix");
  if (m.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "eigenvalue iteration did not converge");
  }
  return solver.eigenvalues();
}

HurwitzReport is_hurwitz(const Matrix& m, double margin) {
  const Eigen::VectorXcd ev = eigenvalues(m);
  HurwitzReport report;
  report.abscissa = ev.size() ? ev.real().maxCoeff() : -std::numeric_limits<double>::infinity();
  report.hurwitz = report.abscissa < -margin;
  return report;
}

}  // namespace capmfg::numerics

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>

#include "capmfg/error.hpp"
#include "capmfg/numerics.hpp"

namespace capmfg::numerics {
namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

// Swaps diagonal entries k and k+1 of the upper-triangular T, updating the
// Schur vectors U so that A = U T U^H still holds.
void swap_adjacent(CMatrix& T, CMatrix& U, Index k) {
  const Complex t11 = T(k, k);
  const Complex t22 = T(k + 1, k + 1);
  // [t12; t22 - t11] is the eigenvector of the 2x2 block for eigenvalue t22.
  Eigen::Vector2cd v(T(k, k + 1), t22 - t11);
  const double nv = v.norm();
  if (nv == 0.0) return;
  v /= nv;
  Eigen::Matrix2cd Z;
  Z << v(0), -std::conj(v(1)), v(1), std::conj(v(0));

  T.middleRows(k, 2) = Z.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * Z;
  U.middleCols(k, 2) = U.middleCols(k, 2) * Z;
  T(k + 1, k) = 0.0;
}

double frobenius(const Matrix& m) { return m.norm(); }

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Stable invariant subspace of the Hamiltonian via reordered complex Schur form.
Matrix hamiltonian_subspace(const Matrix& A, const Matrix& G, const Matrix& Q) {
  const Index n = A.rows();
  Matrix ham(2 * n, 2 * n);
  ham << A, -G, -Q, -A.transpose();

  Eigen::ComplexSchur<Matrix> schur(ham);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "Schur decomposition of the Hamiltonian did not converge");
  }
  CMatrix T = schur.matrixT();
  CMatrix U = schur.matrixU();

  const double scale = 1.0 + ham.cwiseAbs().maxCoeff();
  const double axis_tol = 1e-10 * scale;
  Index stable = 0;
  for (Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= axis_tol) {
      throw Error(ErrorKind::NoStabilizingSolution,
                  "Hamiltonian has an eigenvalue on the imaginary axis (real part " +
                      std::to_string(re) + ")");
    }
    if (re < 0.0) {
      for (Index j = i; j > stable; --j) swap_adjacent(T, U, j - 1);
      ++stable;
    }
  }
  if (stable != n) {
    throw Error(ErrorKind::NoStabilizingSolution,
                "stable invariant subspace has dimension " + std::to_string(stable) +
                    ", expected " + std::to_string(n));
  }

  const CMatrix U1 = U.topLeftCorner(n, n);
  const CMatrix U2 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<CMatrix> lu(U1.transpose());
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::NoStabilizingSolution, "stable subspace is not a graph over the state");
  }
  const CMatrix phi_t = lu.solve(U2.transpose());
  return symmetrize(phi_t.transpose().real());
}

// One Newton-Kleinman update from a stabilizing phi.
Matrix newton_step(const Matrix& A, const Matrix& G, const Matrix& Q, const Matrix& phi) {
  const Matrix closed = A - G * phi;
  const Matrix W = Q + phi * G * phi;
  return symmetrize(solve_lyapunov(closed, W));
}

}  // namespace

Matrix control_gram(const Matrix& B, const Matrix& R) {
  require_square(R, "R");
  if (B.cols() != R.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "B columns must match R dimension");
  }
  return B * R.llt().solve(B.transpose());
}

Matrix care_residual(const Matrix& A, const Matrix& G, const Matrix& Q, const Matrix& phi,
                     CareForm form) {
  if (form == CareForm::StandardSymmetric) {
    return A.transpose() * phi + phi * A - phi * G * phi + Q;
  }
  return A.transpose() * phi - phi.transpose() * G * phi + Q;
}

Matrix solve_lyapunov(const Matrix& F, const Matrix& W) {
  require_square(F, "F");
  const Index n = F.rows();
  if (W.rows() != n || W.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "Lyapunov right-hand side has wrong shape");
  }
  // F' = U T U^H, so F = U T^H U^H and the equation becomes T Y + Y T^H = -U^H W U.
  const Matrix Ft = F.transpose();
  Eigen::ComplexSchur<Matrix> schur(Ft);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "Schur decomposition did not converge");
  }
  const CMatrix& T = schur.matrixT();
  const CMatrix& U = schur.matrixU();
  const CMatrix rhs = -(U.adjoint() * W.cast<Complex>() * U);

  CMatrix Y = CMatrix::Zero(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd b = rhs.col(j);
    for (Index k = j + 1; k < n; ++k) b -= Y.col(k) * std::conj(T(j, k));
    CMatrix M = T.triangularView<Eigen::Upper>();
    M.diagonal().array() += std::conj(T(j, j));
    for (Index i = 0; i < n; ++i) {
      if (std::abs(M(i, i)) == 0.0) {
        throw Error(ErrorKind::SingularMatrix, "Lyapunov operator is singular");
      }
    }
    Y.col(j) = M.triangularView<Eigen::Upper>().solve(b);
  }
  return (U * Y * U.adjoint()).real();
}

CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                        const CareConfig& cfg) {
  require_square(A, "A");
  require_square(Q, "Q");
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(Q, "Q");
  require_finite(R, "R");
  if (cfg.max_iter < 1 || !(cfg.residual_tol > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "CARE config needs max_iter >= 1 and residual_tol > 0");
  }
  const Index n = A.rows();
  if (B.rows() != n || Q.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "A, B and Q must share the state dimension");
  }
  const Matrix G = control_gram(B, R);

  CareSolution out;
  Matrix phi;
  auto residual = [&](const Matrix& x) { return frobenius(care_residual(A, G, Q, x)); };

  auto run_newton = [&](Matrix start) {
    Matrix x = std::move(start);
    double res = residual(x);
    int it = 0;
    while (res > cfg.residual_tol && it < cfg.max_iter) {
      x = newton_step(A, G, Q, x);
      res = residual(x);
      ++it;
    }
    out.newton_iterations = it;
    if (res > cfg.residual_tol) {
      throw Error(ErrorKind::NotConverged, "Newton-Kleinman residual " + std::to_string(res) +
                                               " after " + std::to_string(it) + " iterations");
    }
    return x;
  };

  auto stabilizing_guess = [&]() -> Matrix {
    if (cfg.initial_guess) return *cfg.initial_guess;
    if (is_hurwitz(A).hurwitz) return Matrix::Zero(n, n);
    throw Error(ErrorKind::NoStabilizingSolution,
                "Newton-Kleinman needs a stabilizing initial guess (A is not Hurwitz)");
  };

  if (cfg.method == CareMethod::HamiltonianEigen) {
    phi = hamiltonian_subspace(A, G, Q);
    out.method_used = CareMethod::HamiltonianEigen;
    // Polish with Newton steps while they help.
    double res = residual(phi);
    for (int it = 0; it < cfg.max_iter && res > 0.1 * cfg.residual_tol; ++it) {
      Matrix next;
      try {
        next = newton_step(A, G, Q, phi);
      } catch (const Error&) {
        break;
      }
      const double next_res = residual(next);
      if (!(next_res < res)) break;
      phi = std::move(next);
      res = next_res;
      ++out.newton_iterations;
    }
    if (res > cfg.residual_tol) {
      out.newton_iterations = 0;
      phi = run_newton(stabilizing_guess());
      out.method_used = CareMethod::NewtonKleinman;
    }
  } else {
    phi = run_newton(stabilizing_guess());
    out.method_used = CareMethod::NewtonKleinman;
  }

  out.phi = std::move(phi);
  out.standard_residual = residual(out.phi);
  out.one_sided_residual = frobenius(care_residual(A, G, Q, out.phi, CareForm::OneSided));
  out.residual_norm =
      cfg.form == CareForm::StandardSymmetric ? out.standard_residual : out.one_sided_residual;
  out.closed_loop_abscissa = is_hurwitz(A - G * out.phi).abscissa;
  if (cfg.form == CareForm::StandardSymmetric && out.closed_loop_abscissa >= 0.0) {
    throw Error(ErrorKind::NoStabilizingSolution,
                "closed loop is not Hurwitz (abscissa " + std::to_string(out.closed_loop_abscissa) +
                    ")");
  }
  return out;
}

}  // namespace capmfg::numerics

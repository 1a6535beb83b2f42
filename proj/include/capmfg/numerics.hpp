#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace capmfg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// True when every entry is finite.
bool all_finite(const Eigen::Ref<const Matrix>& m);

/// Throws DimensionMismatch / InvalidParams style errors with a field name attached.
void require_square(const Eigen::Ref<const Matrix>& m, const char* what);
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

}  // namespace capmfg

namespace capmfg::numerics {

// ---------------------------------------------------------------------------
// Linear solves
// ---------------------------------------------------------------------------

struct LinearSolveOptions {
  // A pivot is rejected when |pivot| < pivot_tol * (largest magnitude in its original row).
  double pivot_tol = 1e-12;
  int refinement_steps = 2;
};

/// LU factorization with row-scaled partial pivoting. Keeps a copy of the
/// original matrix so solves can apply iterative refinement.
class LuFactorization {
 public:
  explicit LuFactorization(const Matrix& m, const LinearSolveOptions& opts = {});

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;

  Index size() const { return lu_.rows(); }
  /// Smallest |pivot| / row-scale encountered during elimination.
  double min_relative_pivot() const { return min_relative_pivot_; }
  const Matrix& matrix() const { return original_; }

 private:
  Vector substitute(const Vector& b) const;

  Matrix original_;
  Matrix lu_;
  std::vector<Index> perm_;
  double min_relative_pivot_ = 0.0;
  int refinement_steps_ = 2;
};

Vector solve_linear(const Matrix& m, const Vector& b, const LinearSolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

struct HurwitzReport {
  bool hurwitz = false;
  double abscissa = 0.0;  // max real part over the spectrum
};

/// Hurwitz iff every eigenvalue has real part < -margin.
HurwitzReport is_hurwitz(const Matrix& m, double margin = 0.0);

Eigen::VectorXcd eigenvalues(const Matrix& m);

// ---------------------------------------------------------------------------
// Continuous-time algebraic Riccati equation
// ---------------------------------------------------------------------------

enum class CareMethod { HamiltonianEigen, NewtonKleinman };

enum class CareForm {
  StandardSymmetric,  // A'X + XA - X G X + Q = 0
  OneSided,       // A'X + X'(-G)X + Q = 0, residual reported only
};

struct CareConfig {
  CareMethod method = CareMethod::HamiltonianEigen;
  int max_iter = 50;
  double residual_tol = 1e-8;
  CareForm form = CareForm::StandardSymmetric;
  /// Stabilizing start for Newton-Kleinman. Zero is used when A is Hurwitz.
  std::optional<Matrix> initial_guess;
};

struct CareSolution {
  Matrix phi;
  double residual_norm = 0.0;      // Frobenius residual in the configured form
  double standard_residual = 0.0;  // always the symmetric-form residual
  double one_sided_residual = 0.0;   // always the one-sided residual
  double closed_loop_abscissa = 0.0;
  CareMethod method_used = CareMethod::HamiltonianEigen;
  int newton_iterations = 0;
};

/// G = B R^{-1} B'.
Matrix control_gram(const Matrix& B, const Matrix& R);

Matrix care_residual(const Matrix& A, const Matrix& G, const Matrix& Q, const Matrix& phi,
                     CareForm form = CareForm::StandardSymmetric);

CareSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                        const CareConfig& cfg = {});

/// Solves F'X + XF + W = 0 for X. F must have no eigenvalue pair summing to zero.
Matrix solve_lyapunov(const Matrix& F, const Matrix& W);

// ---------------------------------------------------------------------------
// Finite-horizon Riccati / affine / scalar coefficient ODEs, integrated backward
// ---------------------------------------------------------------------------

using RhoPath = std::function<Vector(double)>;

/// Piecewise-linear interpolant over a uniform grid on [0, T].
RhoPath interpolate_path(std::vector<Vector> samples, double horizon);
RhoPath constant_path(Vector value);

struct RiccatiTerminal {
  std::optional<Matrix> phi;  // default S
  std::optional<Vector> h;    // default -S rho(T)
  std::optional<double> chi;  // default 0.5 rho(T)' S rho(T)
};

struct RiccatiOdeOptions {
  double divergence_bound = 1e12;
  std::size_t record_stride = 1;
  RiccatiTerminal terminal;
};

struct RiccatiTrajectory {
  std::vector<double> times;  // ascending; times.front() == 0, times.back() == T
  std::vector<Matrix> phi;
  std::vector<Vector> h;
  std::vector<double> chi;
  double step = 0.0;
};

/// RK4 on the reversed time axis. The quadratic coefficient uses the
/// symmetric form; the affine coefficient keeps the doubled feedback term
/// so that its stationary point is H = [A' - 2 Phi G]^{-1} (Q rho - Phi C).
RiccatiTrajectory integrate_riccati_backward(const Matrix& A, const Matrix& B, const Matrix& Q,
                                             const Matrix& R, const Matrix& S, const RhoPath& rho,
                                             const Vector& C, double horizon, double dt,
                                             const RiccatiOdeOptions& opts = {});

}  // namespace capmfg::numerics

#pragma once

#include <memory>

#include "capmfg/dynamics.hpp"
#include "capmfg/numerics.hpp"

namespace capmfg {

enum class ControlMode {
  ScalarOnCapacity,   // q = 1, ones on the c-block
  PerEdgeOnCapacity,  // q = m, identity on the c-block
};

struct ControlMatrix {
  Matrix B;
  ControlMode mode = ControlMode::ScalarOnCapacity;

  Index inputs() const { return B.cols(); }
};

ControlMatrix make_control_matrix(const StateLayout& layout, ControlMode mode);

/// Diagonal running (Q), control (R) and terminal (S) penalties.
struct MfgPenalties {
  Matrix Q;
  Matrix R;
  Matrix S;
};

/// Q and S weight only the capacity block; R = r_weight * I.
MfgPenalties build_penalties(const StateLayout& layout, double q_weight, double r_weight,
                             double s_weight, ControlMode mode);

/// Quadratic value function sigma(x) = x'Phi x / 2 + H'x + chi.
struct ValueCoeffs {
  Matrix phi;
  Vector h;
  double chi = 0.0;
  bool stationary = true;
  // Stationary mode only: residual of the scalar equation, which has no
  // stationary solution in general and does not enter the control.
  double chi_residual = 0.0;
};

/// Stationary value-function machinery for one (A, B, Q, R): Phi from the
/// CARE and a cached factorization of A' - 2 Phi G used for every H solve.
class StationarySolver {
 public:
  StationarySolver(const SystemMatrices& sys, const ControlMatrix& ctrl, const MfgPenalties& pen,
                   const numerics::CareConfig& care_cfg = {});

  /// H = [A' - 2 Phi G]^{-1} (Q rho - Phi C).
  Vector solve_h(const Vector& rho, const Vector& C) const;
  ValueCoeffs coeffs(const Vector& rho, const Vector& C) const;

  const Matrix& phi() const { return care_.phi; }
  const Matrix& gram() const { return gram_; }  // B R^{-1} B'
  const numerics::CareSolution& care() const { return care_; }
  const numerics::LuFactorization& affine_factorization() const { return *affine_lu_; }
  /// Z = [A' - 2 Phi G]^{-1}, materialized.
  Matrix z_tilde() const;

 private:
  Matrix Q_;
  Matrix gram_;
  numerics::CareSolution care_;
  std::shared_ptr<const numerics::LuFactorization> affine_lu_;
};

ValueCoeffs solve_value_stationary(const SystemMatrices& sys, const ControlMatrix& ctrl,
                                   const MfgPenalties& pen, const Vector& rho,
                                   const numerics::CareConfig& care_cfg = {});

/// Finite-horizon coefficients at t = 0 for a constant rho, via backward RK4.
ValueCoeffs solve_value_finite_horizon(const SystemMatrices& sys, const ControlMatrix& ctrl,
                                       const MfgPenalties& pen, const Vector& rho, double horizon,
                                       double dt);

/// v* = -R^{-1} B'(Phi' x + H).
Vector optimal_control(const ValueCoeffs& coeffs, const ControlMatrix& ctrl,
                       const MfgPenalties& pen, const Vector& x);

/// One Euler step of m' = [A - G Phi] m - G H + C.
Vector mean_state_step(const SystemMatrices& sys, const ControlMatrix& ctrl,
                       const MfgPenalties& pen, const ValueCoeffs& coeffs, const Vector& mean,
                       double dt);

/// v'Rv/2 + (rho - x)'Q(rho - x)/2 + p'(A x + B v + C), evaluated at the given v.
double hamiltonian(const Vector& x, const Vector& costate, const Vector& rho, const Vector& v,
                   const SystemMatrices& sys, const ControlMatrix& ctrl, const MfgPenalties& pen);

}  // namespace capmfg

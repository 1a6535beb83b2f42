#include <string>

#include "capmfg/error.hpp"
#include "capmfg/mfg.hpp"

namespace capmfg {

ControlMatrix make_control_matrix(const StateLayout& layout, ControlMode mode) {
  ControlMatrix ctrl;
  ctrl.mode = mode;
  if (mode == ControlMode::ScalarOnCapacity) {
    ctrl.B = Matrix::Zero(layout.dim(), 1);
    ctrl.B.block(layout.c_offset(), 0, layout.m, 1).setOnes();
  } else {
    ctrl.B = Matrix::Zero(layout.dim(), layout.m);
    ctrl.B.block(layout.c_offset(), 0, layout.m, layout.m).setIdentity();
  }
  return ctrl;
}

MfgPenalties build_penalties(const StateLayout& layout, double q_weight, double r_weight,
                             double s_weight, ControlMode mode) {
  if (q_weight < 0.0 || s_weight < 0.0 || !(r_weight > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "penalty weights need q, s >= 0 and r > 0");
  }
  const Index d = layout.dim();
  const Index q = mode == ControlMode::ScalarOnCapacity ? 1 : layout.m;
  MfgPenalties pen;
  pen.Q = Matrix::Zero(d, d);
  pen.S = Matrix::Zero(d, d);
  pen.Q.diagonal().segment(layout.c_offset(), layout.m).setConstant(q_weight);
  pen.S.diagonal().segment(layout.c_offset(), layout.m).setConstant(s_weight);
  pen.R = r_weight * Matrix::Identity(q, q);
  return pen;
}

StationarySolver::StationarySolver(const SystemMatrices& sys, const ControlMatrix& ctrl,
                                   const MfgPenalties& pen, const numerics::CareConfig& care_cfg)
    : Q_(pen.Q), gram_(numerics::control_gram(ctrl.B, pen.R)) {
  care_ = numerics::solve_care(sys.A, ctrl.B, pen.Q, pen.R, care_cfg);
  const Matrix affine = sys.A.transpose() - 2.0 * care_.phi * gram_;
  affine_lu_ = std::make_shared<const numerics::LuFactorization>(affine);
}

Vector StationarySolver::solve_h(const Vector& rho, const Vector& C) const {
  return affine_lu_->solve(Vector(Q_ * rho - care_.phi.transpose() * C));
}

ValueCoeffs StationarySolver::coeffs(const Vector& rho, const Vector& C) const {
  ValueCoeffs out;
  out.phi = care_.phi;
  out.h = solve_h(rho, C);
  out.chi = 0.0;
  out.stationary = true;
  out.chi_residual = out.h.dot(gram_ * out.h) + out.h.dot(C) + 0.5 * rho.dot(Q_ * rho);
  return out;
}

Matrix StationarySolver::z_tilde() const {
  return affine_lu_->solve(Matrix(Matrix::Identity(gram_.rows(), gram_.cols())));
}

ValueCoeffs solve_value_stationary(const SystemMatrices& sys, const ControlMatrix& ctrl,
                                   const MfgPenalties& pen, const Vector& rho,
                                   const numerics::CareConfig& care_cfg) {
  return StationarySolver(sys, ctrl, pen, care_cfg).coeffs(rho, sys.C);
}

ValueCoeffs solve_value_finite_horizon(const SystemMatrices& sys, const ControlMatrix& ctrl,
                                       const MfgPenalties& pen, const Vector& rho, double horizon,
                                       double dt) {
  numerics::RiccatiOdeOptions opts;
  opts.record_stride = static_cast<std::size_t>(-1);
  const auto traj = numerics::integrate_riccati_backward(sys.A, ctrl.B, pen.Q, pen.R, pen.S,
                                                         numerics::constant_path(rho), sys.C,
                                                         horizon, dt, opts);
  ValueCoeffs out;
  out.phi = traj.phi.front();
  out.h = traj.h.front();
  out.chi = traj.chi.front();
  out.stationary = false;
  return out;
}

Vector optimal_control(const ValueCoeffs& coeffs, const ControlMatrix& ctrl,
                       const MfgPenalties& pen, const Vector& x) {
  const Vector grad = coeffs.phi.transpose() * x + coeffs.h;
  return -pen.R.llt().solve(ctrl.B.transpose() * grad);
}

Vector mean_state_step(const SystemMatrices& sys, const ControlMatrix& ctrl,
                       const MfgPenalties& pen, const ValueCoeffs& coeffs, const Vector& mean,
                       double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParams, "dt must be positive");
  const Matrix G = numerics::control_gram(ctrl.B, pen.R);
  const Vector drift = (sys.A - G * coeffs.phi) * mean - G * coeffs.h + sys.C;
  return mean + dt * drift;
}

double hamiltonian(const Vector& x, const Vector& costate, const Vector& rho, const Vector& v,
                   const SystemMatrices& sys, const ControlMatrix& ctrl, const MfgPenalties& pen) {
  const Vector dev = rho - x;
  return 0.5 * v.dot(pen.R * v) + 0.5 * dev.dot(pen.Q * dev) +
         costate.dot(sys.A * x + ctrl.B * v + sys.C);
}

}  // namespace capmfg

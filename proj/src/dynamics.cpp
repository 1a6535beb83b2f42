#include <cmath>
#include <string>

#include "capmfg/dynamics.hpp"
#include "capmfg/error.hpp"

namespace capmfg {

SystemMatrices assemble_system(const MicroNetwork& net, const CostParams& costs,
                               const Vector& omega) {
  validate_costs(net, costs);
  if (omega.size() != net.n) {
    throw Error(ErrorKind::DimensionMismatch, "demand must have n entries");
  }
  const StateLayout L = StateLayout::of(net);
  const Index m = L.m;
  const Index n = L.n;
  const Matrix I = Matrix::Identity(m, m);

  SystemMatrices sys;
  sys.layout = L;
  sys.A = Matrix::Zero(L.dim(), L.dim());
  // u rows: -Q2 u - B' lambda - mu
  sys.A.block(L.u_offset(), L.u_offset(), m, m) = -costs.Q2;
  sys.A.block(L.u_offset(), L.lambda_offset(), m, n) = -net.incidence.transpose();
  sys.A.block(L.u_offset(), L.mu_offset(), m, m) = -I;
  // c rows: -Q1 c + mu
  sys.A.block(L.c_offset(), L.c_offset(), m, m) = -costs.Q1;
  sys.A.block(L.c_offset(), L.mu_offset(), m, m) = I;
  // lambda rows: B u
  sys.A.block(L.lambda_offset(), L.u_offset(), n, m) = net.incidence;
  // mu rows: u - c
  sys.A.block(L.mu_offset(), L.u_offset(), m, m) = I;
  sys.A.block(L.mu_offset(), L.c_offset(), m, m) = -I;

  sys.C = Vector::Zero(L.dim());
  sys.C.segment(L.u_offset(), m) = -costs.f2;
  sys.C.segment(L.c_offset(), m) = -costs.f1;
  sys.demand_slice = {L.lambda_offset(), n};
  sys.write_demand(sys.C, omega);
  return sys;
}

SystemMatrices SystemMatrices::with_demand(const Vector& omega) const {
  SystemMatrices out = *this;
  write_demand(out.C, omega);
  return out;
}

void SystemMatrices::write_demand(Vector& offset, const Vector& omega) const {
  if (omega.size() != demand_slice.size) {
    throw Error(ErrorKind::DimensionMismatch, "demand must have n entries");
  }
  offset.segment(demand_slice.offset, demand_slice.size) = -omega;
}

void project_state(const StateLayout& layout, Eigen::Ref<Vector> x) {
  x.segment(layout.u_offset(), layout.m) = x.segment(layout.u_offset(), layout.m).cwiseMax(0.0);
  x.segment(layout.c_offset(), layout.m) = x.segment(layout.c_offset(), layout.m).cwiseMax(0.0);
  x.segment(layout.mu_offset(), layout.m) = x.segment(layout.mu_offset(), layout.m).cwiseMax(0.0);
}

StackedState pd_step(const SystemMatrices& sys, const StackedState& x, double dt, bool projected) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidParams, "dt must be positive");
  Vector v = x.to_vector();
  v += dt * (sys.A * v + sys.C);
  if (projected) project_state(sys.layout, v);
  return StackedState::from_vector(v, sys.layout.m, sys.layout.n);
}

PdRunResult pd_run(const SystemMatrices& sys, const StackedState& x0, const PdRunOptions& opts) {
  if (!(opts.dt > 0.0)) throw Error(ErrorKind::InvalidParams, "dt must be positive");
  const StateLayout& L = sys.layout;
  Vector x = x0.to_vector();
  if (x.size() != L.dim()) throw Error(ErrorKind::DimensionMismatch, "initial state dimension");
  if (opts.projected) project_state(L, x);

  PdRunResult out;
  auto record = [&](std::size_t step, const Vector& v) {
    out.times.push_back(static_cast<double>(step) * opts.dt);
    out.trajectory.push_back(StackedState::from_vector(v, L.m, L.n));
  };
  record(0, x);

  Vector next(x.size());
  std::size_t step = 0;
  while (step < opts.max_steps) {
    next = x + opts.dt * (sys.A * x + sys.C);
    if (opts.projected) project_state(L, next);
    ++step;
    out.final_increment = (next - x).lpNorm<Eigen::Infinity>() / opts.dt;
    x.swap(next);
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
      throw Error(ErrorKind::Diverged,
                  "primal-dual state left the bound at step " + std::to_string(step));
    }
    if (opts.record_every && step % opts.record_every == 0) record(step, x);
    if (out.final_increment <= opts.stop_tol) {
      out.converged = true;
      break;
    }
  }
  if (out.times.back() != static_cast<double>(step) * opts.dt || out.trajectory.size() == 1) {
    if (step > 0) record(step, x);
  }
  out.steps = step;
  out.final_state = StackedState::from_vector(x, L.m, L.n);
  return out;
}

PdFixedPointReport pd_run(const MicroNetwork& net, const CostParams& costs, const Vector& omega,
                          const StackedState& x0, const PdRunOptions& opts) {
  const SystemMatrices sys = assemble_system(net, costs, omega);
  PdFixedPointReport report;
  report.run = pd_run(sys, x0, opts);
  report.kkt = kkt_residual(net, costs, report.run.final_state, omega);
  return report;
}

double lagrangian(const MicroNetwork& net, const CostParams& costs, const StackedState& x,
                  const Vector& omega) {
  return costs.capacity_cost(x.c) + costs.flow_cost(x.u) +
         x.lambda.dot(net.incidence * x.u - omega) + x.mu.dot(x.u - x.c);
}

}  // namespace capmfg

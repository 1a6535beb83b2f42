#pragma once

#include <vector>

#include "capmfg/micro.hpp"

namespace capmfg {

/// Offsets of the (u, c, lambda, mu) blocks inside a stacked state vector.
struct StateLayout {
  Index m = 0;
  Index n = 0;

  Index dim() const { return 3 * m + n; }
  Index u_offset() const { return 0; }
  Index c_offset() const { return m; }
  Index lambda_offset() const { return 2 * m; }
  Index mu_offset() const { return 2 * m + n; }

  static StateLayout of(const MicroNetwork& net) { return {net.m, net.n}; }
};

struct IndexRange {
  Index offset = 0;
  Index size = 0;
};

/// Linear primal-dual drift x' = A x + C.
struct SystemMatrices {
  StateLayout layout;
  Matrix A;
  Vector C;
  IndexRange demand_slice;  // location of -omega inside C

  /// Same drift matrix, C rebuilt for a new demand.
  SystemMatrices with_demand(const Vector& omega) const;
  /// Writes -omega into the demand slice of an existing offset vector.
  void write_demand(Vector& offset, const Vector& omega) const;
};

SystemMatrices assemble_system(const MicroNetwork& net, const CostParams& costs,
                               const Vector& omega);

/// Clamps u, c and mu at zero.
void project_state(const StateLayout& layout, Eigen::Ref<Vector> x);

StackedState pd_step(const SystemMatrices& sys, const StackedState& x, double dt, bool projected);

struct PdRunOptions {
  double dt = 1e-3;
  std::size_t max_steps = 1'000'000;
  double stop_tol = 1e-7;  // on ||x' - x||_inf / dt
  bool projected = true;
  double divergence_bound = 1e9;
  std::size_t record_every = 0;  // 0 records only the endpoints
};

struct PdRunResult {
  std::vector<double> times;
  std::vector<StackedState> trajectory;
  StackedState final_state;
  std::size_t steps = 0;
  bool converged = false;
  double final_increment = 0.0;  // ||x' - x||_inf / dt at the last step
};

/// Iterates pd_step until the increment test passes or max_steps runs out.
/// A run that hits max_steps returns with converged = false and the last
/// iterate; divergence past the bound throws Diverged.
PdRunResult pd_run(const SystemMatrices& sys, const StackedState& x0, const PdRunOptions& opts = {});

struct PdFixedPointReport {
  PdRunResult run;
  KktResidual kkt;
};

PdFixedPointReport pd_run(const MicroNetwork& net, const CostParams& costs, const Vector& omega,
                          const StackedState& x0, const PdRunOptions& opts = {});

/// Lagrangian L(u, c, lambda, mu) = f1(c) + f2(u) + lambda'(B u - omega) + mu'(u - c).
double lagrangian(const MicroNetwork& net, const CostParams& costs, const StackedState& x,
                  const Vector& omega);

}  // namespace capmfg

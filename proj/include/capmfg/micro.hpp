#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "capmfg/numerics.hpp"

namespace capmfg {

/// Physical flow network. Incidence convention: +1 where an edge delivers
/// into a node, -1 where it draws from one. Columns with a single +1 are
/// source edges fed from outside the network.
struct MicroNetwork {
  Index n = 0;  // nodes
  Index m = 0;  // edges
  Matrix incidence;
  std::vector<Index> sink_nodes;  // nodes where external demand is exchanged
  std::vector<std::string> edge_labels;

  bool is_sink(Index node) const;
  /// Columns with both a +1 and a -1.
  std::vector<Index> internal_edges() const;
};

MicroNetwork build_micro_network(const Matrix& incidence, std::vector<Index> sink_nodes,
                                 std::vector<std::string> edge_labels = {});

/// Quadratic capacity and flow costs: f1(c) = c'Q1c/2 + f1'c, f2(u) = u'Q2u/2 + f2'u.
struct CostParams {
  Matrix Q1;
  Matrix Q2;
  Vector f1;
  Vector f2;

  double capacity_cost(const Vector& c) const;
  double flow_cost(const Vector& u) const;
};

void validate_costs(const MicroNetwork& net, const CostParams& costs);

/// Checks that demand is zero away from sinks and has dimension n.
void validate_demand(const MicroNetwork& net, const Vector& omega);

/// B u - omega.
Vector flow_balance_residual(const MicroNetwork& net, const Vector& u, const Vector& omega);

/// Flow, capacity and multipliers (u, c, lambda, mu) in the stacked layout.
struct StackedState {
  Vector u;
  Vector c;
  Vector lambda;
  Vector mu;

  static StackedState zeros(Index m, Index n);
  static StackedState from_vector(const Vector& x, Index m, Index n);
  Vector to_vector() const;
};

struct KktResidual {
  // Stationarity blocks are projected onto the closed orthant u, c >= 0: a
  // coordinate sitting on its bound only counts the part of the gradient that
  // would push it further into the infeasible side.
  Vector stationarity_u;
  Vector stationarity_c;
  Vector primal_eq;
  Vector primal_ineq_violation;
  Vector complementarity;
  Vector dual_sign_violation;

  double max_abs() const;
};

KktResidual kkt_residual(const MicroNetwork& net, const CostParams& costs, const StackedState& x,
                         const Vector& omega, double bound_tol = 1e-9);

enum class ActiveKind { Interior, CapacityBinding, FlowZero, BothZero };

struct QpSolution {
  Vector u;
  Vector c;
  Vector lambda;
  Vector mu;
  double objective = 0.0;
  std::vector<ActiveKind> active_set;  // per edge
  std::size_t patterns_examined = 0;

  StackedState state() const { return {u, c, lambda, mu}; }
};

struct QpOracleOptions {
  std::size_t max_edges = 20;
  double feas_tol = 1e-9;
};

/// Exact minimizer of f1(c) + f2(u) s.t. B u = omega, u <= c, u, c >= 0 by
/// active-set enumeration.
QpSolution solve_deterministic_qp(const MicroNetwork& net, const CostParams& costs,
                                  const Vector& omega, const QpOracleOptions& opts = {});

/// f1(c) + f2(u) - oracle.objective for a feasible heuristic point.
double suboptimality_gap(const MicroNetwork& net, const CostParams& costs, const Vector& omega,
                         const Vector& u, const Vector& c, const QpSolution& oracle,
                         double feas_tol = 1e-6);

}  // namespace capmfg

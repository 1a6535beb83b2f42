#include <algorithm>
#include <cmath>
#include <string>

#include "capmfg/error.hpp"
#include "capmfg/micro.hpp"

namespace capmfg {

bool MicroNetwork::is_sink(Index node) const {
  return std::find(sink_nodes.begin(), sink_nodes.end(), node) != sink_nodes.end();
}

std::vector<Index> MicroNetwork::internal_edges() const {
  std::vector<Index> out;
  for (Index j = 0; j < m; ++j) {
    if (incidence.col(j).maxCoeff() > 0.5 && incidence.col(j).minCoeff() < -0.5) out.push_back(j);
  }
  return out;
}

MicroNetwork build_micro_network(const Matrix& incidence, std::vector<Index> sink_nodes,
                                 std::vector<std::string> edge_labels) {
  const Index n = incidence.rows();
  const Index m = incidence.cols();
  if (n < 2 || m < 1) {
    throw Error(ErrorKind::InvalidIncidence, "network needs n >= 2 nodes and m >= 1 edges");
  }
  for (Index j = 0; j < m; ++j) {
    int heads = 0;
    int tails = 0;
    for (Index i = 0; i < n; ++i) {
      const double v = incidence(i, j);
      if (v == 1.0) {
        ++heads;
      } else if (v == -1.0) {
        ++tails;
      } else if (v != 0.0) {
        throw Error(ErrorKind::InvalidIncidence, "entry (" + std::to_string(i) + "," +
                                                     std::to_string(j) +
                                                     ") is not in {-1, 0, +1}");
      }
    }
    if (heads > 1 || tails > 1) {
      throw Error(ErrorKind::InvalidIncidence,
                  "column " + std::to_string(j) + " has duplicate signs");
    }
    if (heads + tails == 0) {
      throw Error(ErrorKind::InvalidIncidence, "column " + std::to_string(j) + " is all zero");
    }
  }
  std::sort(sink_nodes.begin(), sink_nodes.end());
  sink_nodes.erase(std::unique(sink_nodes.begin(), sink_nodes.end()), sink_nodes.end());
  for (Index s : sink_nodes) {
    if (s < 0 || s >= n) {
      throw Error(ErrorKind::InvalidIncidence, "sink node " + std::to_string(s) + " out of range");
    }
  }
  if (edge_labels.empty()) {
    for (Index j = 0; j < m; ++j) edge_labels.push_back("e" + std::to_string(j + 1));
  } else if (static_cast<Index>(edge_labels.size()) != m) {
    throw Error(ErrorKind::InvalidIncidence, "edge label count does not match edge count");
  }
  return MicroNetwork{n, m, incidence, std::move(sink_nodes), std::move(edge_labels)};
}

double CostParams::capacity_cost(const Vector& c) const { return 0.5 * c.dot(Q1 * c) + f1.dot(c); }

double CostParams::flow_cost(const Vector& u) const { return 0.5 * u.dot(Q2 * u) + f2.dot(u); }

void validate_costs(const MicroNetwork& net, const CostParams& costs) {
  auto check_diag = [&](const Matrix& q, const char* name) {
    if (q.rows() != net.m || q.cols() != net.m) {
      throw Error(ErrorKind::DimensionMismatch, std::string(name) + " must be m x m");
    }
    require_finite(q, name);
    const Matrix off = q - Matrix(q.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() != 0.0) {
      throw Error(ErrorKind::ValidationError, std::string(name) + " must be diagonal");
    }
    if (q.diagonal().minCoeff() < 0.0) {
      throw Error(ErrorKind::ValidationError, std::string(name) + " must have nonnegative diagonal");
    }
  };
  check_diag(costs.Q1, "Q1");
  check_diag(costs.Q2, "Q2");
  if (costs.f1.size() != net.m || costs.f2.size() != net.m) {
    throw Error(ErrorKind::DimensionMismatch, "f1 and f2 must have m entries");
  }
  require_finite(costs.f1, "f1");
  require_finite(costs.f2, "f2");
}

void validate_demand(const MicroNetwork& net, const Vector& omega) {
  if (omega.size() != net.n) {
    throw Error(ErrorKind::DimensionMismatch, "demand must have n entries");
  }
  require_finite(omega, "demand");
  for (Index i = 0; i < net.n; ++i) {
    if (!net.is_sink(i) && omega(i) != 0.0) {
      throw Error(ErrorKind::ValidationError,
                  "demand is nonzero on non-sink node " + std::to_string(i));
    }
  }
}

Vector flow_balance_residual(const MicroNetwork& net, const Vector& u, const Vector& omega) {
  if (u.size() != net.m || omega.size() != net.n) {
    throw Error(ErrorKind::DimensionMismatch, "flow balance operands have wrong dimension");
  }
  return net.incidence * u - omega;
}

StackedState StackedState::zeros(Index m, Index n) {
  return {Vector::Zero(m), Vector::Zero(m), Vector::Zero(n), Vector::Zero(m)};
}

StackedState StackedState::from_vector(const Vector& x, Index m, Index n) {
  if (x.size() != 3 * m + n) {
    throw Error(ErrorKind::DimensionMismatch, "stacked vector must have 3m+n entries");
  }
  return {x.segment(0, m), x.segment(m, m), x.segment(2 * m, n), x.segment(2 * m + n, m)};
}

Vector StackedState::to_vector() const {
  Vector x(u.size() + c.size() + lambda.size() + mu.size());
  x << u, c, lambda, mu;
  return x;
}

double KktResidual::max_abs() const {
  double r = 0.0;
  for (const Vector* v : {&stationarity_u, &stationarity_c, &primal_eq, &primal_ineq_violation,
                          &complementarity, &dual_sign_violation}) {
    if (v->size()) r = std::max(r, v->cwiseAbs().maxCoeff());
  }
  return r;
}

KktResidual kkt_residual(const MicroNetwork& net, const CostParams& costs, const StackedState& x,
                         const Vector& omega, double bound_tol) {
  const Index m = net.m;
  if (x.u.size() != m || x.c.size() != m || x.mu.size() != m || x.lambda.size() != net.n) {
    throw Error(ErrorKind::DimensionMismatch, "state does not match the network");
  }
  KktResidual r;
  const Vector grad_u = x.mu + net.incidence.transpose() * x.lambda + costs.Q2 * x.u + costs.f2;
  const Vector grad_c = costs.Q1 * x.c + costs.f1 - x.mu;
  r.stationarity_u = grad_u;
  r.stationarity_c = grad_c;
  for (Index i = 0; i < m; ++i) {
    if (x.u(i) <= bound_tol) r.stationarity_u(i) = std::min(grad_u(i), 0.0);
    if (x.c(i) <= bound_tol) r.stationarity_c(i) = std::min(grad_c(i), 0.0);
  }
  r.primal_eq = flow_balance_residual(net, x.u, omega);
  r.primal_ineq_violation.resize(m);
  for (Index i = 0; i < m; ++i) {
    r.primal_ineq_violation(i) =
        std::max({x.u(i) - x.c(i), -x.u(i), -x.c(i), 0.0});
  }
  r.complementarity = x.mu.cwiseProduct(x.u - x.c);
  r.dual_sign_violation = (-x.mu).cwiseMax(0.0);
  return r;
}

}  // namespace capmfg

#include <Eigen/QR>

#include <algorithm>
#include <bit>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "capmfg/error.hpp"
#include "capmfg/micro.hpp"

namespace capmfg {
namespace {

// min z'Hz/2 + g'z  s.t.  E z = e, by the null-space method. Returns nullopt
// when the constraints are inconsistent or the reduced Hessian is not PD.
std::optional<Vector> solve_equality_qp(const Matrix& H, const Vector& g, const Matrix& E,
                                        const Vector& e, double tol) {
  const Index nz = H.rows();
  Vector z_p = Vector::Zero(nz);
  Matrix N;
  if (E.rows() == 0) {
    N = Matrix::Identity(nz, nz);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E);
    z_p = cod.solve(e);
    if ((E * z_p - e).lpNorm<Eigen::Infinity>() > tol * (1.0 + e.lpNorm<Eigen::Infinity>())) {
      return std::nullopt;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(E.transpose());
    const Index rank = qr.rank();
    const Matrix q_full = qr.householderQ() * Matrix::Identity(nz, nz);
    N = q_full.rightCols(nz - rank);
  }

  Vector z = z_p;
  if (N.cols() > 0) {
    const Matrix reduced = N.transpose() * H * N;
    Eigen::LDLT<Matrix> ldlt(reduced);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * (1.0 + H.cwiseAbs().maxCoeff())) {
      return std::nullopt;
    }
    z += N * (-ldlt.solve(N.transpose() * (H * z_p + g)));
  }
  return z;
}

// Lawson-Hanson active-set NNLS: min ||A x - b|| s.t. x >= 0.
Vector nnls(const Matrix& A, const Vector& b) {
  const Index k = A.cols();
  Vector x = Vector::Zero(k);
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  const double tol = 1e-13 * (1.0 + A.cwiseAbs().maxCoeff()) * (1.0 + b.cwiseAbs().maxCoeff());

  auto solve_passive = [&]() {
    std::vector<Index> idx;
    for (Index j = 0; j < k; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    Matrix Ap(A.rows(), static_cast<Index>(idx.size()));
    for (std::size_t t = 0; t < idx.size(); ++t) Ap.col(static_cast<Index>(t)) = A.col(idx[t]);
    const Vector zp = Ap.completeOrthogonalDecomposition().solve(b);
    Vector z = Vector::Zero(k);
    for (std::size_t t = 0; t < idx.size(); ++t) z(idx[t]) = zp(static_cast<Index>(t));
    return z;
  };

  for (int outer = 0; outer < 3 * static_cast<int>(k) + 10; ++outer) {
    const Vector w = A.transpose() * (b - A * x);
    Index best = -1;
    double best_w = tol;
    for (Index j = 0; j < k; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    for (int inner = 0; inner < 3 * static_cast<int>(k) + 10; ++inner) {
      const Vector z = solve_passive();
      bool feasible = true;
      double alpha = 1.0;
      for (Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, x(j) / (x(j) - z(j)));
        }
      }
      if (feasible) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Index j = 0; j < k; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

struct Multipliers {
  Vector equality;    // free, one per row of E
  Vector inequality;  // >= 0, one per column of the active normal matrix
};

// Recovers multipliers for grad + E' nu_eq + N nu_in = 0 with nu_in >= 0,
// where N holds outward normals of the active inequalities. The free
// equality multipliers are eliminated by projecting onto range(E')^perp.
Multipliers recover_multipliers(const Vector& grad, const Matrix& E, const Matrix& normals) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod_t(E.transpose());
  const Matrix pinv = cod_t.pseudoInverse();
  const Matrix proj = Matrix::Identity(grad.size(), grad.size()) - E.transpose() * pinv;
  Multipliers out;
  out.inequality = normals.cols() ? nnls(proj * normals, -(proj * grad)) : Vector();
  Vector rhs = -grad;
  if (normals.cols()) rhs -= normals * out.inequality;
  out.equality = pinv * rhs;
  return out;
}

bool diagonal(const Matrix& m) {
  return (m - Matrix(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

struct Best {
  Vector z;
  std::vector<ActiveKind> pattern;
  double objective = std::numeric_limits<double>::infinity();
  bool valid = false;
};

// With f1 > 0 and diagonal Q1 the cheapest capacity for any flow is c = u,
// leaving a flow-only problem enumerated over the set of zero flows.
QpSolution enumerate_flow_only(const MicroNetwork& net, const CostParams& costs,
                               const Vector& omega, const QpOracleOptions& opts) {
  const Index m = net.m;
  const Index n = net.n;
  const Matrix H = Matrix((costs.Q1.diagonal() + costs.Q2.diagonal()).asDiagonal());
  const Vector g = costs.f1 + costs.f2;
  Best best;
  const std::size_t patterns = std::size_t{1} << m;
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    const Index zeros = std::popcount(mask);
    Matrix E = Matrix::Zero(n + zeros, m);
    Vector e = Vector::Zero(n + zeros);
    E.topRows(n) = net.incidence;
    e.head(n) = omega;
    Index row = n;
    for (Index i = 0; i < m; ++i) {
      if (mask & (std::size_t{1} << i)) E(row++, i) = 1.0;
    }
    auto z = solve_equality_qp(H, g, E, e, opts.feas_tol);
    if (!z || z->minCoeff() < -opts.feas_tol) continue;
    Vector u = z->cwiseMax(0.0);
    const double obj = 0.5 * u.dot(H * u) + g.dot(u);
    if (obj < best.objective) {
      best.z = u;
      best.objective = obj;
      best.valid = true;
      best.pattern.assign(static_cast<std::size_t>(m), ActiveKind::CapacityBinding);
      for (Index i = 0; i < m; ++i) {
        if (mask & (std::size_t{1} << i)) {
          best.pattern[static_cast<std::size_t>(i)] = ActiveKind::BothZero;
        }
      }
    }
  }
  if (!best.valid) {
    throw Error(ErrorKind::Infeasible, "no flow u >= 0 satisfies the balance B u = omega");
  }

  QpSolution sol;
  sol.u = best.z;
  sol.c = sol.u;
  std::vector<Index> bound;
  for (Index i = 0; i < m; ++i) {
    if (sol.u(i) <= opts.feas_tol) bound.push_back(i);
  }
  Matrix normals = Matrix::Zero(m, static_cast<Index>(bound.size()));
  for (std::size_t t = 0; t < bound.size(); ++t) normals(bound[t], static_cast<Index>(t)) = -1.0;
  const Multipliers mult = recover_multipliers(H * sol.u + g, net.incidence, normals);
  sol.lambda = mult.equality;
  sol.mu = costs.Q1 * sol.c + costs.f1;
  sol.objective = costs.capacity_cost(sol.c) + costs.flow_cost(sol.u);
  sol.active_set = best.pattern;
  sol.patterns_examined = patterns;
  return sol;
}

// Per edge the consistent active patterns are: none, u = c, u = 0 < c, u = c = 0.
QpSolution enumerate_general(const MicroNetwork& net, const CostParams& costs, const Vector& omega,
                             const QpOracleOptions& opts) {
  const Index m = net.m;
  const Index n = net.n;
  Matrix H = Matrix::Zero(2 * m, 2 * m);
  H.topLeftCorner(m, m) = costs.Q2;
  H.bottomRightCorner(m, m) = costs.Q1;
  Vector g(2 * m);
  g << costs.f2, costs.f1;

  Best best;
  std::vector<ActiveKind> pattern(static_cast<std::size_t>(m), ActiveKind::Interior);
  const std::size_t total = std::size_t{1} << (2 * m);
  for (std::size_t code = 0; code < total; ++code) {
    Index rows = n;
    for (Index i = 0; i < m; ++i) {
      const auto kind = static_cast<ActiveKind>((code >> (2 * i)) & 3u);
      pattern[static_cast<std::size_t>(i)] = kind;
      rows += kind == ActiveKind::Interior ? 0 : (kind == ActiveKind::BothZero ? 2 : 1);
    }
    Matrix E = Matrix::Zero(rows, 2 * m);
    Vector e = Vector::Zero(rows);
    E.topLeftCorner(n, m) = net.incidence;
    e.head(n) = omega;
    Index row = n;
    for (Index i = 0; i < m; ++i) {
      switch (pattern[static_cast<std::size_t>(i)]) {
        case ActiveKind::Interior: break;
        case ActiveKind::CapacityBinding:
          E(row, i) = 1.0;
          E(row++, m + i) = -1.0;
          break;
        case ActiveKind::FlowZero: E(row++, i) = 1.0; break;
        case ActiveKind::BothZero:
          E(row++, i) = 1.0;
          E(row++, m + i) = 1.0;
          break;
      }
    }
    auto z = solve_equality_qp(H, g, E, e, opts.feas_tol);
    if (!z) continue;
    const Vector u = z->head(m);
    const Vector c = z->tail(m);
    if (u.minCoeff() < -opts.feas_tol || c.minCoeff() < -opts.feas_tol ||
        (u - c).maxCoeff() > opts.feas_tol) {
      continue;
    }
    const double obj = 0.5 * z->dot(H * *z) + g.dot(*z);
    if (obj < best.objective) {
      best.z = *z;
      best.objective = obj;
      best.pattern = pattern;
      best.valid = true;
    }
  }
  if (!best.valid) {
    throw Error(ErrorKind::Infeasible, "no flow u >= 0 satisfies the balance B u = omega");
  }

  QpSolution sol;
  sol.u = best.z.head(m).cwiseMax(0.0);
  sol.c = best.z.tail(m).cwiseMax(sol.u);
  Vector z(2 * m);
  z << sol.u, sol.c;

  // Active inequalities in outward-normal form: u - c <= 0, -u <= 0, -c <= 0.
  std::vector<Vector> cols;
  std::vector<Index> capacity_col(static_cast<std::size_t>(m), -1);
  for (Index i = 0; i < m; ++i) {
    if (sol.u(i) - sol.c(i) >= -opts.feas_tol) {
      Vector a = Vector::Zero(2 * m);
      a(i) = 1.0;
      a(m + i) = -1.0;
      capacity_col[static_cast<std::size_t>(i)] = static_cast<Index>(cols.size());
      cols.push_back(a);
    }
    if (sol.u(i) <= opts.feas_tol) {
      Vector a = Vector::Zero(2 * m);
      a(i) = -1.0;
      cols.push_back(a);
    }
    if (sol.c(i) <= opts.feas_tol) {
      Vector a = Vector::Zero(2 * m);
      a(m + i) = -1.0;
      cols.push_back(a);
    }
  }
  Matrix normals(2 * m, static_cast<Index>(cols.size()));
  for (std::size_t t = 0; t < cols.size(); ++t) normals.col(static_cast<Index>(t)) = cols[t];
  Matrix E = Matrix::Zero(n, 2 * m);
  E.leftCols(m) = net.incidence;
  const Multipliers mult = recover_multipliers(H * z + g, E, normals);

  sol.lambda = mult.equality;
  sol.mu = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    const Index col = capacity_col[static_cast<std::size_t>(i)];
    if (col >= 0) sol.mu(i) = mult.inequality(col);
  }
  sol.objective = costs.capacity_cost(sol.c) + costs.flow_cost(sol.u);
  sol.active_set = best.pattern;
  sol.patterns_examined = total;
  return sol;
}

}  // namespace

QpSolution solve_deterministic_qp(const MicroNetwork& net, const CostParams& costs,
                                  const Vector& omega, const QpOracleOptions& opts) {
  validate_costs(net, costs);
  if (omega.size() != net.n) throw Error(ErrorKind::DimensionMismatch, "demand must have n entries");
  if (static_cast<std::size_t>(net.m) > opts.max_edges) {
    throw Error(ErrorKind::EnumerationGuard,
                "m = " + std::to_string(net.m) + " exceeds the enumeration limit of " +
                    std::to_string(opts.max_edges));
  }
  if (diagonal(costs.Q1) && costs.f1.minCoeff() > 0.0) {
    return enumerate_flow_only(net, costs, omega, opts);
  }
  if (net.m > 8) {
    throw Error(ErrorKind::EnumerationGuard,
                "joint flow/capacity enumeration is limited to m <= 8 unless f1 > 0");
  }
  return enumerate_general(net, costs, omega, opts);
}

double suboptimality_gap(const MicroNetwork& net, const CostParams& costs, const Vector& omega,
                         const Vector& u, const Vector& c, const QpSolution& oracle,
                         double feas_tol) {
  const double balance = flow_balance_residual(net, u, omega).lpNorm<Eigen::Infinity>();
  const double bounds = std::max({(u - c).maxCoeff(), (-u).maxCoeff(), (-c).maxCoeff(), 0.0});
  const double violation = std::max(balance, bounds);
  if (violation > feas_tol) {
    throw Error(ErrorKind::NotComparable,
                "heuristic point violates feasibility by " + std::to_string(violation) +
                    " (balance " + std::to_string(balance) + ", bounds " + std::to_string(bounds) +
                    ")");
  }
  return costs.capacity_cost(c) + costs.flow_cost(u) - oracle.objective;
}

}  // namespace capmfg

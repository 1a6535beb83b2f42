#pragma once

#include <cmath>

#include "capmfg/dynamics.hpp"
#include "capmfg/micro.hpp"

namespace capmfg::testing {

// The six-node, nine-edge network written out by hand, independent of the
// bundled configuration file.
inline Matrix six_node_incidence() {
  Matrix B(6, 9);
  B << 1, 0, -1, -1, 0, 0, 0, 0, 0,  //
      0, 1, 0, 0, -1, -1, 0, 0, 0,   //
      0, 0, 0, 0, 0, 1, 1, 0, 0,     //
      0, 0, 1, 0, 0, 0, 0, 0, 1,     //
      0, 0, 0, 1, 1, 0, 0, -1, 0,    //
      0, 0, 0, 0, 0, 0, -1, 1, -1;
  return B;
}

inline MicroNetwork six_node_network() { return build_micro_network(six_node_incidence(), {2, 3}); }

inline CostParams six_node_costs(bool doubled_edge8 = true) {
  CostParams c;
  c.Q1 = Matrix::Identity(9, 9);
  c.Q2 = Matrix::Identity(9, 9);
  c.f1 = Vector::Ones(9);
  c.f2 = Vector::Ones(9);
  if (doubled_edge8) c.f2[7] = 2.0;
  return c;
}

inline Vector six_node_demand() {
  Vector w = Vector::Zero(6);
  w[2] = 23.0;
  w[3] = 7.0;
  return w;
}

// Two nodes joined by one edge that carries d from node 0 to node 1.
inline MicroNetwork two_node_network() {
  Matrix B(2, 1);
  B << -1, 1;
  return build_micro_network(B, {0, 1});
}

inline Vector two_node_demand(double d) {
  Vector w(2);
  w << -d, d;
  return w;
}

inline CostParams uniform_costs(Index m, double q1, double q2, double f1, double f2) {
  CostParams c;
  c.Q1 = q1 * Matrix::Identity(m, m);
  c.Q2 = q2 * Matrix::Identity(m, m);
  c.f1 = Vector::Constant(m, f1);
  c.f2 = Vector::Constant(m, f2);
  return c;
}

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// KKT certificate computed from scratch: returns the largest violation of
// stationarity (with sign conditions on bound multipliers), feasibility and
// complementarity for min f1(c)+f2(u), B u = w, u <= c, u >= 0, c >= 0.
// Bound multipliers for u >= 0 and c >= 0 are implied by the stationarity
// residuals.
inline double independent_kkt_violation(const MicroNetwork& net, const CostParams& k,
                                        const Vector& u, const Vector& c, const Vector& lambda,
                                        const Vector& mu, const Vector& w) {
  double worst = 0.0;
  auto take = [&](double v) { worst = std::max(worst, std::abs(v)); };
  const Vector gu = k.Q2 * u + k.f2 + net.incidence.transpose() * lambda + mu;
  const Vector gc = k.Q1 * c + k.f1 - mu;
  for (Index i = 0; i < u.size(); ++i) {
    // gu = nu_u >= 0 with nu_u * u = 0
    take(std::min(gu[i], 0.0));
    take(gu[i] * u[i]);
    take(std::min(gc[i], 0.0));
    take(gc[i] * c[i]);
    take(std::min(u[i], 0.0));
    take(std::min(c[i], 0.0));
    take(std::max(u[i] - c[i], 0.0));
    take(std::min(mu[i], 0.0));
    take(mu[i] * (u[i] - c[i]));
  }
  const Vector bal = net.incidence * u - w;
  for (Index j = 0; j < bal.size(); ++j) take(bal[j]);
  return worst;
}

}  // namespace capmfg::testing

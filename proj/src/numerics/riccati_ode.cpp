#include <algorithm>
#include <cmath>
#include <string>

#include "capmfg/error.hpp"
#include "capmfg/numerics.hpp"

namespace capmfg::numerics {

RhoPath interpolate_path(std::vector<Vector> samples, double horizon) {
  if (samples.empty()) throw Error(ErrorKind::InvalidParams, "empty path");
  if (samples.size() == 1) return constant_path(samples.front());
  const double spacing = horizon / static_cast<double>(samples.size() - 1);
  return [samples = std::move(samples), spacing](double t) -> Vector {
    const double pos = std::clamp(t / spacing, 0.0, static_cast<double>(samples.size() - 1));
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= samples.size()) return samples.back();
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * samples[lo] + w * samples[lo + 1];
  };
}

RhoPath constant_path(Vector value) {
  return [value = std::move(value)](double) { return value; };
}

namespace {

struct Coeffs {
  Matrix phi;
  Vector h;
  double chi = 0.0;
};

struct OdeTerms {
  const Matrix& A;
  const Matrix& G;
  const Matrix& Q;
  const Vector& C;

  // Derivatives with respect to reversed time s = T - t.
  Coeffs rate(const Coeffs& x, const Vector& rho) const {
    Coeffs d;
    d.phi = A.transpose() * x.phi + x.phi * A - x.phi * G * x.phi + Q;
    d.h = A.transpose() * x.h - 2.0 * (x.phi * (G * x.h)) + x.phi * C - Q * rho;
    d.chi = x.h.dot(G * x.h) + x.h.dot(C) + 0.5 * rho.dot(Q * rho);
    return d;
  }
};

Coeffs axpy(const Coeffs& x, double a, const Coeffs& d) {
  return {x.phi + a * d.phi, x.h + a * d.h, x.chi + a * d.chi};
}

}  // namespace

RiccatiTrajectory integrate_riccati_backward(const Matrix& A, const Matrix& B, const Matrix& Q,
                                             const Matrix& R, const Matrix& S, const RhoPath& rho,
                                             const Vector& C, double horizon, double dt,
                                             const RiccatiOdeOptions& opts) {
  require_square(A, "A");
  const Index n = A.rows();
  if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon) {
    throw Error(ErrorKind::InvalidParams, "need T > 0 and 0 < dt <= T");
  }
  if (Q.rows() != n || S.rows() != n || C.size() != n || B.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "Riccati ODE operands disagree on dimension");
  }
  const Matrix G = control_gram(B, R);
  const OdeTerms terms{A, G, Q, C};

  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  const double h = horizon / static_cast<double>(steps);
  const std::size_t stride = std::max<std::size_t>(1, opts.record_stride);

  const Vector rho_T = rho(horizon);
  Coeffs x;
  x.phi = opts.terminal.phi ? *opts.terminal.phi : S;
  x.h = opts.terminal.h ? *opts.terminal.h : Vector(-(S * rho_T));
  x.chi = opts.terminal.chi ? *opts.terminal.chi : 0.5 * rho_T.dot(S * rho_T);

  // Recorded in reverse (t = T first) and flipped at the end.
  RiccatiTrajectory out;
  out.step = h;
  auto record = [&](double t) {
    out.times.push_back(t);
    out.phi.push_back(x.phi);
    out.h.push_back(x.h);
    out.chi.push_back(x.chi);
  };
  record(horizon);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = horizon - static_cast<double>(k) * h;
    const Vector r0 = rho(t);
    const Vector r_mid = rho(t - 0.5 * h);
    const Vector r1 = rho(t - h);
    const Coeffs k1 = terms.rate(x, r0);
    const Coeffs k2 = terms.rate(axpy(x, 0.5 * h, k1), r_mid);
    const Coeffs k3 = terms.rate(axpy(x, 0.5 * h, k2), r_mid);
    const Coeffs k4 = terms.rate(axpy(x, h, k3), r1);
    x.phi += (h / 6.0) * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
    x.h += (h / 6.0) * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
    x.chi += (h / 6.0) * (k1.chi + 2.0 * k2.chi + 2.0 * k3.chi + k4.chi);

    if (!x.phi.allFinite() || x.phi.cwiseAbs().maxCoeff() > opts.divergence_bound) {
      throw Error(ErrorKind::StepSizeTooLarge,
                  "Riccati coefficient exceeded bound at t = " + std::to_string(t - h));
    }
    const bool last = k + 1 == steps;
    if (last || (k + 1) % stride == 0) record(last ? 0.0 : t - h);
  }

  std::reverse(out.times.begin(), out.times.end());
  std::reverse(out.phi.begin(), out.phi.end());
  std::reverse(out.h.begin(), out.h.end());
  std::reverse(out.chi.begin(), out.chi.end());
  return out;
}

}  // namespace capmfg::numerics

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "capmfg/consensus.hpp"
#include "capmfg/error.hpp"

namespace capmfg {
namespace {

Matrix extract(const Matrix& full, Index offset, Index size) {
  return full.block(offset, offset, size, size);
}

bool block_constant(const Vector& b, std::size_t p, Index d) {
  for (std::size_t k = 1; k < p; ++k) {
    if (b.segment(static_cast<Index>(k) * d, d) != b.head(d)) return false;
  }
  return true;
}

}  // namespace

ConsensusSystem ConsensusSystem::from_dense(Matrix M, Vector b) {
  require_square(M, "consensus matrix");
  if (b.size() != M.rows()) throw Error(ErrorKind::DimensionMismatch, "offset dimension");
  ConsensusSystem cs;
  cs.p = 1;
  cs.d = M.rows();
  cs.diag_block = M;
  cs.coupling_block = Matrix::Zero(M.rows(), M.cols());
  cs.offset = std::move(b);
  cs.dense_override = std::move(M);
  return cs;
}

Matrix ConsensusSystem::dense() const {
  if (dense_override) return *dense_override;
  const Index n = dim();
  Matrix M = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < p; ++k) {
    const Index row = static_cast<Index>(k) * d;
    M.block(row, row, d, d) += diag_block;
    const double w = 1.0 / static_cast<double>(topology->degree(k));
    for (std::size_t j : topology->neighbors(k)) {
      M.block(row, static_cast<Index>(j) * d, d, d) += w * coupling_block;
    }
  }
  return M;
}

Vector ConsensusSystem::drift(const Vector& state) const {
  if (state.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "consensus state dimension");
  if (dense_override) return *dense_override * state + offset;
  const Eigen::Map<const Matrix> blocks(state.data(), d, static_cast<Index>(p));
  const Matrix rho = aggregate_rho(*topology, blocks);
  Matrix out = diag_block * blocks + coupling_block * rho;
  return Eigen::Map<const Vector>(out.data(), out.size()) + offset;
}

Matrix ConsensusSystem::laplacian() const {
  if (form != ConsensusForm::IsolatedCapacity || !topology) {
    throw Error(ErrorKind::InvalidParams, "Laplacian is defined for the isolated capacity form");
  }
  const Index n = dim();
  Matrix L = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < p; ++k) {
    const Index row = static_cast<Index>(k) * d;
    L.block(row, row, d, d) = laplacian_block;
    const double w = 1.0 / static_cast<double>(topology->degree(k));
    for (std::size_t j : topology->neighbors(k)) {
      L.block(row, static_cast<Index>(j) * d, d, d) -= w * laplacian_block;
    }
  }
  return L;
}

ConsensusSystem build_consensus_system(const MacroTopology& topo, const SystemMatrices& sys,
                                       const ControlMatrix& ctrl, const MfgPenalties& pen,
                                       const StationarySolver& solver,
                                       const ConsensusOptions& opts) {
  const StateLayout& L = sys.layout;
  const Matrix& phi = solver.phi();
  const Matrix& G = solver.gram();
  const Matrix Z = solver.z_tilde();
  if (ctrl.B.rows() != L.dim() || G.rows() != L.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "control matrix does not match the stacked state");
  }

  ConsensusSystem cs;
  cs.form = opts.form;
  cs.p = topo.size();
  cs.topology = topo;

  if (opts.form == ConsensusForm::FullStacked) {
    cs.d = L.dim();
    cs.diag_block = sys.A - G * phi;
    cs.coupling_block = -(G * Z * pen.Q);
    const Vector b0 = sys.C + G * Z * phi.transpose() * sys.C;
    cs.offset = b0.replicate(static_cast<Index>(cs.p), 1);
    return cs;
  }

  const Index m = L.m;
  const Index c0 = L.c_offset();
  const bool exact = opts.state_freeze.size() > 0;
  if (exact && opts.state_freeze.size() != L.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "state_freeze must be a full stacked state");
  }
  if (exact && !opts.fold_rho) {
    throw Error(ErrorKind::InvalidParams, "state_freeze needs fold_rho");
  }
  if (!exact && opts.mu_freeze.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "mu_freeze must have m entries");
  }
  const Matrix phi_c = extract(phi, c0, m);
  const Matrix z_c = extract(Z, c0, m);
  const Matrix q_c = extract(pen.Q, c0, m);
  // G_c plays the role of R_c^{-1}: it is R^{-1} I for per-edge control and
  // the all-ones block / R for the scalar control.
  const Matrix g_c = extract(G, c0, m);
  const Matrix q1 = -extract(sys.A, c0, m);
  const Vector f1 = -sys.C.segment(c0, m);
  const Vector mu = exact ? Vector(opts.state_freeze.segment(L.mu_offset(), m)) : opts.mu_freeze;

  cs.d = m;
  cs.q1_block = q1;
  cs.laplacian_block = g_c * phi_c.transpose();
  cs.diag_block = -(q1 + cs.laplacian_block);
  Vector b0 = g_c * (z_c * phi_c.transpose() * mu) + (mu - f1);
  if (opts.fold_rho) {
    // Laplacian coupling + rho-dependence of the offset.
    cs.coupling_block = -(g_c * z_c * q_c);
    if (exact) {
      // Capacity rows of the full-stacked drift with everything else frozen.
      Vector others = opts.state_freeze;
      others.segment(c0, m).setZero();
      const Vector full_offset = sys.C + G * (Z * (phi.transpose() * sys.C));
      const Vector exact_b0 = (sys.A - G * phi).middleRows(c0, m) * others +
                              full_offset.segment(c0, m);
      cs.closed_loop_correction = exact_b0 - b0;
      b0 = exact_b0;
    }
  } else {
    if (opts.rho_freeze.size() != m) {
      throw Error(ErrorKind::DimensionMismatch, "rho_freeze must have m entries");
    }
    cs.coupling_block = cs.laplacian_block;
    b0 += g_c * ((-(z_c * q_c) - phi_c.transpose()) * opts.rho_freeze);
  }
  cs.offset = b0.replicate(static_cast<Index>(cs.p), 1);
  return cs;
}

EquilibriumResult consensus_equilibrium(const ConsensusSystem& cs) {
  EquilibriumResult out;
  if (!cs.dense_override && cs.topology && block_constant(cs.offset, cs.p, cs.d)) {
    // P is row-stochastic, so a block-constant offset gives a block-constant
    // equilibrium solving (D + K) m0 = -b0.
    const Matrix reduced = cs.diag_block + cs.coupling_block;
    const Vector m0 = numerics::solve_linear(reduced, Vector(-cs.offset.head(cs.d)));
    out.state = m0.replicate(static_cast<Index>(cs.p), 1);
  } else {
    constexpr Index kDenseLimit = 6000;
    if (cs.dim() > kDenseLimit) {
      throw Error(ErrorKind::InvalidParams, "non-uniform offset too large for a dense solve");
    }
    out.state = numerics::solve_linear(cs.dense(), Vector(-cs.offset));
  }
  out.residual = cs.drift(out.state).lpNorm<Eigen::Infinity>();
  return out;
}

ConvergenceReport verify_convergence(const ConsensusSystem& cs) {
  ConvergenceReport report;
  if (cs.dense_override || !cs.topology) {
    const auto h = numerics::is_hurwitz(cs.dense());
    report.hurwitz = h.hurwitz;
    report.abscissa = h.abscissa;
  } else {
    // P = D^{-1} Adj is similar to the symmetric D^{-1/2} Adj D^{-1/2}; M is
    // block-similar to diag(D + theta_i K) over the eigenvalues theta_i of P.
    const MacroTopology& topo = *cs.topology;
    const auto p = static_cast<Index>(topo.size());
    Matrix sym = Matrix::Zero(p, p);
    for (std::size_t k = 0; k < topo.size(); ++k) {
      for (std::size_t j : topo.neighbors(k)) {
        sym(static_cast<Index>(k), static_cast<Index>(j)) =
            1.0 / std::sqrt(static_cast<double>(topo.degree(k) * topo.degree(j)));
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
      throw Error(ErrorKind::EigenFailure, "aggregation spectrum did not converge");
    }
    std::vector<double> thetas(eig.eigenvalues().data(), eig.eigenvalues().data() + p);
    std::sort(thetas.begin(), thetas.end());
    double abscissa = -std::numeric_limits<double>::infinity();
    double last = std::numeric_limits<double>::quiet_NaN();
    for (double theta : thetas) {
      if (std::abs(theta - last) <= 1e-10) continue;
      last = theta;
      const auto h = numerics::is_hurwitz(cs.diag_block + theta * cs.coupling_block);
      abscissa = std::max(abscissa, h.abscissa);
    }
    report.abscissa = abscissa;
    report.hurwitz = abscissa < 0.0;
  }
  report.predicted_rate = -report.abscissa;
  report.time_constant = report.hurwitz ? 1.0 / report.predicted_rate
                                        : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace capmfg

#pragma once

#include <optional>

#include "capmfg/macro_net.hpp"
#include "capmfg/mfg.hpp"

namespace capmfg {

enum class ConsensusForm {
  IsolatedCapacity,  // block dimension m, capacity coordinates only
  FullStacked,       // block dimension 3m + n
};

struct ConsensusOptions {
  ConsensusForm form = ConsensusForm::FullStacked;
  /// Isolated form: fold the rho-dependence of the offset into the drift
  /// matrix. When false the offset is evaluated at `rho_freeze` instead.
  bool fold_rho = true;
  Vector mu_freeze;   // m entries, isolated form
  Vector rho_freeze;  // m entries, isolated form with fold_rho = false
  /// Isolated form: a full stacked state whose non-capacity part is held
  /// fixed. The offset then carries the cross-block terms the reduced form
  /// drops, and mu_freeze is taken from it.
  Vector state_freeze;
};

/// Affine population dynamics m' = M m + b over p blocks of size d. Systems
/// built from a topology keep the Kronecker structure M = I (x) D + P (x) K.
struct ConsensusSystem {
  ConsensusForm form = ConsensusForm::FullStacked;
  std::size_t p = 0;
  Index d = 0;

  Matrix diag_block;      // D
  Matrix coupling_block;  // K, multiplies the neighbor average
  Vector offset;          // b, p * d entries
  std::optional<MacroTopology> topology;

  // Isolated form only.
  Matrix q1_block;         // Q1 restricted to capacities
  Matrix laplacian_block;  // G_c Phi_c', the per-neighbor Laplacian weight
  Vector closed_loop_correction;  // exact minus reduced offset, empty unless state_freeze is set

  std::optional<Matrix> dense_override;  // set by from_dense

  static ConsensusSystem from_dense(Matrix M, Vector b);

  Index dim() const { return static_cast<Index>(p) * d; }
  Matrix dense() const;
  /// M m + b.
  Vector drift(const Vector& state) const;
  /// Laplacian L = I (x) l - P (x) l of the isolated form.
  Matrix laplacian() const;
};

ConsensusSystem build_consensus_system(const MacroTopology& topo, const SystemMatrices& sys,
                                       const ControlMatrix& ctrl, const MfgPenalties& pen,
                                       const StationarySolver& solver,
                                       const ConsensusOptions& opts = {});

struct EquilibriumResult {
  Vector state;  // p * d entries
  double residual = 0.0;
};

/// m* = -M^{-1} b.
EquilibriumResult consensus_equilibrium(const ConsensusSystem& cs);

struct ConvergenceReport {
  bool hurwitz = false;
  double abscissa = 0.0;
  double predicted_rate = 0.0;  // -abscissa
  double time_constant = 0.0;   // 1 / predicted_rate, infinite when not Hurwitz
};

ConvergenceReport verify_convergence(const ConsensusSystem& cs);

}  // namespace capmfg

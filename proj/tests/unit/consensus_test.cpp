#include <gtest/gtest.h>

#include "capmfg/consensus.hpp"
#include "capmfg/error.hpp"
#include "fixtures.hpp"

namespace capmfg {
namespace {

struct SixNodeLq {
  MicroNetwork net = testing::six_node_network();
  SystemMatrices sys = assemble_system(net, testing::six_node_costs(), testing::six_node_demand());
  ControlMatrix ctrl = make_control_matrix(sys.layout, ControlMode::ScalarOnCapacity);
  MfgPenalties pen = build_penalties(sys.layout, 1, 1, 1, ControlMode::ScalarOnCapacity);
  StationarySolver solver{sys, ctrl, pen};
};

TEST(Consensus, StructuredSpectrumMatchesDenseEigenvalues) {
  SixNodeLq s;
  for (const auto& topo : {make_ring(5), make_star(6), generate_scale_free(12, 2, 4)}) {
    const auto cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver);
    const auto structured = verify_convergence(cs);
    const auto dense = numerics::is_hurwitz(cs.dense());
    EXPECT_TRUE(structured.hurwitz);
    EXPECT_NEAR(structured.abscissa, dense.abscissa, 1e-8);
    EXPECT_NEAR(structured.time_constant, 1.0 / -dense.abscissa, 1e-6);
  }
}

TEST(Consensus, DriftMatchesDenseOperator) {
  SixNodeLq s;
  const auto topo = generate_scale_free(8, 2, 2);
  const auto cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver);
  const Vector x = Vector::LinSpaced(cs.dim(), -3.0, 4.0);
  EXPECT_LT(testing::inf_norm(cs.drift(x) - (cs.dense() * x + cs.offset)), 1e-10);
}

TEST(Consensus, EquilibriumIsAConsensusAndAFixedPointOfTheMeanDynamics) {
  SixNodeLq s;
  const auto topo = make_ring(10);
  const auto cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver);
  const auto eq = consensus_equilibrium(cs);
  EXPECT_LT(eq.residual, 1e-8);
  const Index d = cs.d;
  for (std::size_t k = 1; k < cs.p; ++k) {
    EXPECT_LT(testing::inf_norm(eq.state.segment(static_cast<Index>(k) * d, d) - eq.state.head(d)),
              1e-10);
  }
  // With every agent at x the neighbor average is x; the mean step must not move it.
  const Vector x = eq.state.head(d);
  const auto coeffs = s.solver.coeffs(x, s.sys.C);
  const Vector next = mean_state_step(s.sys, s.ctrl, s.pen, coeffs, x, 0.1);
  EXPECT_LT(testing::inf_norm(next - x), 1e-9);
}

TEST(Consensus, ReducedAndDenseEquilibriumAgree) {
  SixNodeLq s;
  const auto topo = generate_scale_free(6, 2, 8);
  const auto cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver);
  const auto eq = consensus_equilibrium(cs);
  const Vector dense = numerics::solve_linear(cs.dense(), Vector(-cs.offset));
  EXPECT_LT(testing::inf_norm(eq.state - dense), 1e-8);
}

TEST(Consensus, IsolatedFormStructure) {
  SixNodeLq s;
  const auto topo = make_ring(7);
  const auto oracle = solve_deterministic_qp(s.net, testing::six_node_costs(), testing::six_node_demand());
  ConsensusOptions opts;
  opts.form = ConsensusForm::IsolatedCapacity;
  opts.mu_freeze = oracle.mu;
  const auto cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver, opts);
  EXPECT_EQ(cs.d, 9);
  EXPECT_LT((cs.q1_block - Matrix::Identity(9, 9)).norm(), 1e-15);
  const Matrix L = cs.laplacian();
  EXPECT_LT(testing::inf_norm(L * Vector::Ones(cs.dim())), 1e-12);
  const auto rep = verify_convergence(cs);
  EXPECT_NEAR(rep.abscissa, numerics::is_hurwitz(cs.dense()).abscissa, 1e-8);

  opts.fold_rho = false;
  EXPECT_THROW(build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver, opts), Error);
  opts.rho_freeze = oracle.c;
  const auto frozen = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver, opts);
  EXPECT_LT((frozen.coupling_block - frozen.laplacian_block).norm(), 1e-15);
}

TEST(Consensus, TwoAgentLaplacianBlocks) {
  SixNodeLq s;
  ConsensusOptions opts;
  opts.form = ConsensusForm::IsolatedCapacity;
  opts.mu_freeze = Vector::Ones(9);
  const auto cs = build_consensus_system(make_complete(2), s.sys, s.ctrl, s.pen, s.solver, opts);
  const Matrix ell = cs.laplacian_block;
  const Matrix G = s.ctrl.B * s.pen.R.inverse() * s.ctrl.B.transpose();
  EXPECT_LT((ell - G.block(9, 9, 9, 9) * s.solver.phi().block(9, 9, 9, 9).transpose()).norm(),
            1e-12);
  const Matrix L = cs.laplacian();
  EXPECT_LT((L.block(0, 0, 9, 9) - ell).norm(), 1e-15);
  EXPECT_LT((L.block(0, 9, 9, 9) + ell).norm(), 1e-15);
  EXPECT_LT((L.block(9, 0, 9, 9) + ell).norm(), 1e-15);
  EXPECT_LT((L.block(9, 9, 9, 9) - ell).norm(), 1e-15);
  EXPECT_LT((cs.diag_block + cs.q1_block + ell).norm(), 1e-15);
}

TEST(Consensus, TrivialEquilibria) {
  auto cs = ConsensusSystem::from_dense(-Matrix::Identity(3, 3), Vector::Zero(3));
  EXPECT_LT(testing::inf_norm(consensus_equilibrium(cs).state), 1e-15);
  cs = ConsensusSystem::from_dense(-Matrix::Identity(3, 3), Vector::Ones(3));
  EXPECT_LT(testing::inf_norm(consensus_equilibrium(cs).state - Vector::Ones(3)), 1e-15);
  const auto rep = verify_convergence(cs);
  EXPECT_TRUE(rep.hurwitz);
  EXPECT_NEAR(rep.abscissa, -1.0, 1e-12);
  Matrix M = -Matrix::Identity(3, 3);
  M.row(1).setZero();
  EXPECT_FALSE(verify_convergence(ConsensusSystem::from_dense(M, Vector::Ones(3))).hurwitz);
}

TEST(Consensus, AffineFlowConvergesToEquilibrium) {
  SixNodeLq s;
  for (std::size_t p : {2u, 5u, 10u}) {
    const auto topo = p == 2 ? make_complete(2) : make_ring(p);
    const auto cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver);
    ASSERT_TRUE(verify_convergence(cs).hurwitz);
    const auto eq = consensus_equilibrium(cs);
    Vector m = Vector::LinSpaced(cs.dim(), 0.0, 50.0);
    for (int step = 0; step < 4000; ++step) m += 0.1 * cs.drift(m);
    EXPECT_LT(testing::inf_norm(m - eq.state), 1e-6 * (1.0 + testing::inf_norm(eq.state))) << p;
  }
}

TEST(Consensus, IsolatedFormAgainstFullStackedEquilibrium) {
  SixNodeLq s;
  const auto topo = make_ring(10);
  const auto full_cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver);
  const auto full = consensus_equilibrium(full_cs);
  const auto& L = s.sys.layout;
  const Vector full_c = full.state.segment(L.c_offset(), L.m);

  ConsensusOptions opts;
  opts.form = ConsensusForm::IsolatedCapacity;
  opts.state_freeze = full.state.head(L.dim());
  const auto iso_cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver, opts);
  const auto iso = consensus_equilibrium(iso_cs);
  EXPECT_LT(testing::inf_norm(full_c - iso.state.head(L.m)), 1e-9 * (1.0 + testing::inf_norm(full_c)));
  // Capacity rows of the full system carry the same drift and coupling blocks.
  EXPECT_LT((iso_cs.diag_block - full_cs.diag_block.block(L.c_offset(), L.c_offset(), L.m, L.m)).norm(),
            1e-12);
  EXPECT_LT((iso_cs.coupling_block -
             full_cs.coupling_block.block(L.c_offset(), L.c_offset(), L.m, L.m)).norm(),
            1e-12);

  // The reduced offset differs from the exact one by exactly the recorded correction.
  ConsensusOptions reduced;
  reduced.form = ConsensusForm::IsolatedCapacity;
  reduced.mu_freeze = full.state.segment(L.mu_offset(), L.m);
  const auto reduced_cs = build_consensus_system(topo, s.sys, s.ctrl, s.pen, s.solver, reduced);
  EXPECT_EQ(reduced_cs.closed_loop_correction.size(), 0);
  EXPECT_LT(testing::inf_norm(reduced_cs.offset.head(L.m) + iso_cs.closed_loop_correction -
                              iso_cs.offset.head(L.m)),
            1e-9);
}

TEST(Consensus, DenseSystemPath) {
  Matrix M(2, 2);
  M << -1, 0.5, 0, -2;
  Vector b(2);
  b << 1, 2;
  const auto cs = ConsensusSystem::from_dense(M, b);
  const auto rep = verify_convergence(cs);
  EXPECT_TRUE(rep.hurwitz);
  EXPECT_NEAR(rep.abscissa, -1.0, 1e-12);
  const auto eq = consensus_equilibrium(cs);
  EXPECT_LT(testing::inf_norm(M * eq.state + b), 1e-12);

  M(0, 0) = 0.5;
  EXPECT_FALSE(verify_convergence(ConsensusSystem::from_dense(M, b)).hurwitz);
}

}  // namespace
}  // namespace capmfg

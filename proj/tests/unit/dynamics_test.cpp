#include <gtest/gtest.h>

#include "capmfg/dynamics.hpp"
#include "capmfg/error.hpp"
#include "fixtures.hpp"

namespace capmfg {
namespace {

TEST(Assemble, BlockStructure) {
  const auto net = testing::six_node_network();
  const auto costs = testing::six_node_costs();
  const auto sys = assemble_system(net, costs, testing::six_node_demand());
  const auto& L = sys.layout;
  ASSERT_EQ(L.dim(), 33);
  ASSERT_EQ(sys.A.rows(), 33);

  // Drift written out entry by entry from the Lagrangian gradient.
  Vector x = Vector::LinSpaced(33, -2.0, 3.0);
  const Vector u = x.segment(0, 9), c = x.segment(9, 9), lam = x.segment(18, 6),
               mu = x.segment(24, 9);
  Vector expected(33);
  expected.segment(0, 9) = -(costs.Q2 * u + costs.f2 + net.incidence.transpose() * lam + mu);
  expected.segment(9, 9) = -(costs.Q1 * c + costs.f1 - mu);
  expected.segment(18, 6) = net.incidence * u - testing::six_node_demand();
  expected.segment(24, 9) = u - c;
  EXPECT_LT(testing::inf_norm(sys.A * x + sys.C - expected), 1e-13);
}

TEST(Assemble, SystemMatrixIsHurwitz) {
  const auto sys = assemble_system(testing::six_node_network(), testing::six_node_costs(),
                                   testing::six_node_demand());
  const auto rep = numerics::is_hurwitz(sys.A);
  EXPECT_TRUE(rep.hurwitz);
}

TEST(Assemble, DemandRewriteOnlyTouchesItsSlice) {
  const auto sys = assemble_system(testing::six_node_network(), testing::six_node_costs(),
                                   testing::six_node_demand());
  Vector w = Vector::Zero(6);
  w[2] = 5.0;
  const auto other = sys.with_demand(w);
  const Vector diff = other.C - sys.C;
  EXPECT_NEAR(diff[sys.demand_slice.offset + 2], 18.0, 1e-15);
  EXPECT_NEAR(diff[sys.demand_slice.offset + 3], 7.0, 1e-15);
  EXPECT_NEAR(diff.cwiseAbs().sum(), 25.0, 1e-12);
}

TEST(PdStep, ProjectionClampsPrimalAndCapacityMultipliers) {
  const auto sys = assemble_system(testing::six_node_network(), testing::six_node_costs(),
                                   testing::six_node_demand());
  StackedState x = StackedState::zeros(9, 6);
  x.lambda.setConstant(-100.0);  // pushes flows up, stays free
  const auto next = pd_step(sys, x, 0.1, true);
  EXPECT_GE(next.u.minCoeff(), 0.0);
  EXPECT_GE(next.c.minCoeff(), 0.0);
  EXPECT_GE(next.mu.minCoeff(), 0.0);
  EXPECT_LT(next.lambda.minCoeff(), -99.0);
  const auto free = pd_step(sys, StackedState::zeros(9, 6), 0.1, false);
  EXPECT_LT(free.c.minCoeff(), 0.0);  // -f1 drift without projection
}

TEST(PdRun, TwoNodeFixedPoint) {
  const auto net = testing::two_node_network();
  const auto costs = testing::uniform_costs(1, 1, 1, 1, 1);
  const double d = 2.0;
  PdRunOptions opts;
  opts.dt = 1e-2;
  opts.stop_tol = 1e-10;
  const auto rep = pd_run(net, costs, testing::two_node_demand(d), StackedState::zeros(1, 2), opts);
  EXPECT_TRUE(rep.run.converged);
  EXPECT_NEAR(rep.run.final_state.u[0], d, 1e-6);
  EXPECT_NEAR(rep.run.final_state.c[0], d, 1e-6);
  EXPECT_LT(rep.kkt.max_abs(), 1e-6);
}

TEST(PdRun, StepLimitReturnsUnconverged) {
  PdRunOptions opts;
  opts.max_steps = 10;
  const auto rep = pd_run(testing::six_node_network(), testing::six_node_costs(), testing::six_node_demand(),
                          StackedState::zeros(9, 6), opts);
  EXPECT_FALSE(rep.run.converged);
  EXPECT_EQ(rep.run.steps, 10u);
  EXPECT_EQ(rep.run.trajectory.size(), 2u);
}

TEST(PdRun, LargeStepDiverges) {
  PdRunOptions opts;
  opts.dt = 5.0;
  opts.projected = false;
  try {
    pd_run(testing::six_node_network(), testing::six_node_costs(), testing::six_node_demand(),
           StackedState::zeros(9, 6), opts);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Diverged);
  }
}

TEST(Lagrangian, EqualsObjectiveAtFeasibleComplementaryPoint) {
  const auto net = testing::two_node_network();
  const auto costs = testing::uniform_costs(1, 1, 1, 1, 1);
  StackedState x = StackedState::zeros(1, 2);
  x.u[0] = 2.0;
  x.c[0] = 2.0;
  x.mu[0] = 3.0;
  x.lambda << 7.0, -1.0;
  const double obj = costs.capacity_cost(x.c) + costs.flow_cost(x.u);
  EXPECT_NEAR(lagrangian(net, costs, x, testing::two_node_demand(2.0)), obj, 1e-14);
}

TEST(StackedState, RoundTrip) {
  Vector v = Vector::LinSpaced(33, 0, 32);
  const auto s = StackedState::from_vector(v, 9, 6);
  EXPECT_EQ(s.lambda[0], 18.0);
  EXPECT_EQ(s.mu[0], 24.0);
  EXPECT_TRUE(s.to_vector() == v);
}

}  // namespace
}  // namespace capmfg

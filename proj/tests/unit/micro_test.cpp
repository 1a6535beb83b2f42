#include <random>

#include <gtest/gtest.h>

#include "capmfg/error.hpp"
#include "capmfg/micro.hpp"
#include "fixtures.hpp"

namespace capmfg {
namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::IoError;
}

TEST(MicroNetwork, SixNodeNetworkShape) {
  const auto net = testing::six_node_network();
  EXPECT_EQ(net.n, 6);
  EXPECT_EQ(net.m, 9);
  EXPECT_TRUE(net.is_sink(2));
  EXPECT_TRUE(net.is_sink(3));
  EXPECT_FALSE(net.is_sink(0));
  EXPECT_EQ(net.edge_labels.front(), "e1");
  // edges 1 and 2 only feed into the network
  const auto internal = net.internal_edges();
  EXPECT_EQ(internal.size(), 7u);
  EXPECT_EQ(internal.front(), 2);
}

TEST(MicroNetwork, RejectsDoubleHeadColumn) {
  Matrix B(3, 2);
  B << 1, 1, 1, 0, 0, -1;
  EXPECT_EQ(kind_of([&] { build_micro_network(B, {2}); }), ErrorKind::InvalidIncidence);
}

TEST(MicroNetwork, RejectsNonUnitEntriesAndEmptyColumns) {
  Matrix B(2, 2);
  B << 2, 0, -1, 0;
  EXPECT_EQ(kind_of([&] { build_micro_network(B, {1}); }), ErrorKind::InvalidIncidence);
  Matrix C(2, 1);
  C << -1, 1;
  EXPECT_EQ(kind_of([&] { build_micro_network(C, {5}); }), ErrorKind::InvalidIncidence);
}

TEST(MicroNetwork, DemandAwayFromSinksIsRejected) {
  const auto net = testing::six_node_network();
  Vector w = testing::six_node_demand();
  EXPECT_NO_THROW(validate_demand(net, w));
  w[0] = 1.0;
  EXPECT_EQ(kind_of([&] { validate_demand(net, w); }), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of([&] { validate_demand(net, Vector::Zero(4)); }), ErrorKind::DimensionMismatch);
}

TEST(MicroNetwork, CostValidation) {
  const auto net = testing::six_node_network();
  auto costs = testing::six_node_costs();
  EXPECT_NO_THROW(validate_costs(net, costs));
  costs.Q1(0, 1) = 0.5;
  EXPECT_EQ(kind_of([&] { validate_costs(net, costs); }), ErrorKind::ValidationError);
  costs = testing::six_node_costs();
  costs.f1 = Vector::Ones(3);
  EXPECT_EQ(kind_of([&] { validate_costs(net, costs); }), ErrorKind::DimensionMismatch);
}

TEST(QpOracle, TwoNodeClosedForm) {
  const auto net = testing::two_node_network();
  const auto costs = testing::uniform_costs(1, 1, 1, 1, 1);
  const double d = 3.0;
  const auto sol = solve_deterministic_qp(net, costs, testing::two_node_demand(d));
  EXPECT_NEAR(sol.u[0], d, 1e-12);
  EXPECT_NEAR(sol.c[0], d, 1e-12);
  EXPECT_NEAR(sol.objective, d * d + 2 * d, 1e-12);
  EXPECT_NEAR(sol.mu[0], d + 1, 1e-12);  // Q1 c + f1
  EXPECT_EQ(sol.active_set[0], ActiveKind::CapacityBinding);
}

TEST(QpOracle, SixNodeInstanceSatisfiesIndependentKkt) {
  const auto net = testing::six_node_network();
  const auto costs = testing::six_node_costs();
  const Vector w = testing::six_node_demand();
  const auto sol = solve_deterministic_qp(net, costs, w);
  EXPECT_LT(testing::independent_kkt_violation(net, costs, sol.u, sol.c, sol.lambda, sol.mu, w),
            1e-9);
  EXPECT_LT(kkt_residual(net, costs, sol.state(), w).max_abs(), 1e-8);
  EXPECT_LT(testing::inf_norm(sol.u - sol.c), 1e-12);
  // the edge feeding node 3 directly from node 5 carries nothing
  EXPECT_NEAR(sol.u[8], 0.0, 1e-12);
  EXPECT_NEAR(sol.objective, costs.capacity_cost(sol.c) + costs.flow_cost(sol.u), 1e-9);
}

TEST(QpOracle, ZeroDemandGivesZeroFlows) {
  const auto net = testing::six_node_network();
  const auto costs = testing::six_node_costs();
  const auto sol = solve_deterministic_qp(net, costs, Vector::Zero(6));
  EXPECT_LT(testing::inf_norm(sol.u), 1e-12);
  EXPECT_LT(testing::inf_norm(sol.c), 1e-12);
  EXPECT_LT(testing::independent_kkt_violation(net, costs, sol.u, sol.c, sol.lambda, sol.mu,
                                               Vector::Zero(6)),
            1e-9);
}

TEST(QpOracle, RandomInstancesSatisfyIndependentKkt) {
  const auto net = testing::six_node_network();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.2, 3.0), dem(0.0, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    CostParams k = testing::uniform_costs(9, 1, 1, 1, 1);
    for (Index i = 0; i < 9; ++i) {
      k.Q1(i, i) = pos(rng);
      k.Q2(i, i) = pos(rng);
      k.f1[i] = pos(rng);
      k.f2[i] = pos(rng);
    }
    Vector w = Vector::Zero(6);
    w[2] = dem(rng);
    w[3] = dem(rng);
    const auto sol = solve_deterministic_qp(net, k, w);
    EXPECT_LT(testing::independent_kkt_violation(net, k, sol.u, sol.c, sol.lambda, sol.mu, w),
              1e-8)
        << trial;
  }
}

TEST(QpOracle, GeneralPathWithZeroCapacityPriceAgrees) {
  // f1 = 0 forces the joint flow/capacity enumeration.
  Matrix B(3, 4);
  B << 1, 0, -1, 0,  //
      0, 1, 0, -1,   //
      0, 0, 1, 1;
  const auto net = build_micro_network(B, {2});
  auto costs = testing::uniform_costs(4, 1, 1, 0, 1);
  costs.f2[2] = 3.0;
  Vector w = Vector::Zero(3);
  w[2] = 5.0;
  const auto sol = solve_deterministic_qp(net, costs, w);
  EXPECT_LT(testing::independent_kkt_violation(net, costs, sol.u, sol.c, sol.lambda, sol.mu, w),
            1e-9);
  EXPECT_EQ(sol.patterns_examined, 256u);
  EXPECT_THROW(solve_deterministic_qp(testing::six_node_network(),
                                      testing::uniform_costs(9, 1, 1, 0, 1),
                                      testing::six_node_demand()),
               Error);
}

TEST(QpOracle, InfeasibleDemandIsReported) {
  Matrix B(2, 1);
  B << -1, 1;
  const auto net = build_micro_network(B, {0, 1});
  const auto costs = testing::uniform_costs(1, 1, 1, 1, 1);
  Vector w(2);
  w << 1, -1;  // asks for negative flow
  EXPECT_EQ(kind_of([&] { solve_deterministic_qp(net, costs, w); }), ErrorKind::Infeasible);
}

TEST(QpOracle, GapIsZeroAtTheOptimumAndPositiveElsewhere) {
  const auto net = testing::six_node_network();
  const auto costs = testing::six_node_costs();
  const Vector w = testing::six_node_demand();
  const auto sol = solve_deterministic_qp(net, costs, w);
  EXPECT_NEAR(suboptimality_gap(net, costs, w, sol.u, sol.c, sol), 0.0, 1e-9);
  EXPECT_GT(suboptimality_gap(net, costs, w, sol.u, sol.c + Vector::Ones(9), sol), 0.0);
  EXPECT_EQ(kind_of([&] {
              suboptimality_gap(net, costs, w, sol.u + Vector::Ones(9), sol.c, sol);
            }),
            ErrorKind::NotComparable);
}

TEST(KktResidual, DetectsViolations) {
  const auto net = testing::two_node_network();
  const auto costs = testing::uniform_costs(1, 1, 1, 1, 1);
  StackedState x = StackedState::zeros(1, 2);
  x.u[0] = 1.0;
  x.c[0] = 0.5;
  const auto r = kkt_residual(net, costs, x, testing::two_node_demand(1.0));
  EXPECT_GT(r.primal_ineq_violation.maxCoeff(), 0.4);
  EXPECT_GT(r.max_abs(), 0.4);
}

}  // namespace
}  // namespace capmfg

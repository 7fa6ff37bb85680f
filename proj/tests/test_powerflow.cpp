#include <gtest/gtest.h>

#include <cmath>

#include "oltc/powerflow.hpp"
#include "test_util.hpp"

using namespace oltc;
using oltc::testing::data_case;

namespace {

// Receiving-end voltage of a single line feeding P + jQ, from the quartic
// U^2 + (2(rP + xQ) - V0^2) U + (r^2 + x^2)(P^2 + Q^2) = 0.
double two_bus_voltage_sq(double r, double x, double p, double q, double u0) {
  const double b = 2.0 * (r * p + x * q) - u0;
  const double c = (r * r + x * x) * (p * p + q * q);
  return (-b + std::sqrt(b * b - 4.0 * c)) / 2.0;
}

}  // namespace

TEST(PowerFlow, TwoBusMatchesClosedForm) {
  const NetworkCase c = data_case("two_bus.json");
  const PowerFlowSolution s = solve_powerflow(c, {});
  ASSERT_TRUE(s.converged);
  // 1 MVA, 1 kV base: r = x = 0.1 p.u., load 0.1 p.u.
  const double u1 = two_bus_voltage_sq(0.1, 0.1, 0.1, 0.0, 1.0);
  EXPECT_NEAR(s.u[1], u1, 1e-10);
  const double losses_kw = 0.1 * (0.1 * 0.1) / u1 * 1000.0;
  EXPECT_NEAR(s.losses_kw, losses_kw, 1e-8);
  EXPECT_NEAR(s.losses_kw, 1.020621, 1e-6);
}

TEST(PowerFlow, IdealRatioScalesTheTapNode) {
  // A lone transformer with ratio t on an unloaded branch gives t^2 U_child = U_slack.
  const NetworkCase c = parse_case(R"({"schema": "opf-case/1", "name": "tx", "base": {"mva": 1, "kv": 1},
    "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "load"}],
    "branches": [{"from": 1, "to": 2, "r_ohm": 0.01, "x_ohm": 0.01,
                  "transformer": {"t_min": 0.9, "t_max": 1.1, "k_taps": 4}}], "generators": []})");
  for (int tap = 0; tap <= 4; ++tap) {
    const PowerFlowSolution s = solve_powerflow(c, {{tap}});
    const double t = 0.9 + 0.05 * tap;
    EXPECT_NEAR(s.u[1], 1.0 / (t * t), 1e-12);
    EXPECT_NEAR(s.losses_kw, 0.0, 1e-12);
  }
}

TEST(PowerFlow, SolutionSatisfiesBranchEquations) {
  const NetworkCase c = data_case("case33.json");
  const PowerFlowSolution s = solve_powerflow(c, {{2, 2, 2, 2}});
  ASSERT_TRUE(s.converged);
  EXPECT_LE(branch_equation_residual(to_per_unit(c), s), 1e-9);
  for (std::size_t e = 0; e < c.branches.size(); ++e) {
    const int i = c.bus_index(c.branches[e].from);
    const double lhs = s.l[e] * s.u[i];
    const double rhs = s.p_flow[e] * s.p_flow[e] + s.q_flow[e] * s.q_flow[e];
    EXPECT_NEAR(lhs, rhs, 1e-10) << c.branches[e].label();
  }
}

TEST(PowerFlow, RejectsBadTapVectors) {
  const NetworkCase c = data_case("case33.json");
  EXPECT_THROW(solve_powerflow(c, {{1, 2, 3}}), InputError);
  EXPECT_THROW(solve_powerflow(c, {{1, 2, 3, 6}}), InputError);
  EXPECT_THROW(solve_powerflow(c, {{-1, 0, 0, 0}}), InputError);
}

TEST(PowerFlow, HeavyLoadReportsCollapse) {
  const NetworkCase c = parse_case(R"({"schema": "opf-case/1", "name": "heavy", "base": {"mva": 1, "kv": 1},
    "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "load", "p_load_kw": 5000, "q_load_kvar": 5000}],
    "branches": [{"from": 1, "to": 2, "r_ohm": 0.1, "x_ohm": 0.1}], "generators": []})");
  const PowerFlowSolution s = solve_powerflow(c, {});
  EXPECT_FALSE(s.converged);
  EXPECT_NE(s.status, PowerFlowStatus::kConverged);
}

TEST(Enumeration, ParallelMatchesSerial) {
  const NetworkCase c = data_case("case33.json");
  ASSERT_EQ(tap_grid_size(c), 6u * 6u * 6u * 6u);
  const EnumerationResult a = enumerate_taps_serial(c);
  const EnumerationResult b = enumerate_taps(c);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best_losses_kw, b.best_losses_kw);
  ASSERT_EQ(a.table.size(), b.table.size());
  for (std::size_t k = 0; k < a.table.size(); ++k) {
    EXPECT_EQ(a.table[k].taps, b.table[k].taps);
    EXPECT_EQ(a.table[k].outcome, b.table[k].outcome);
    EXPECT_EQ(a.table[k].losses_kw, b.table[k].losses_kw);
  }
}

TEST(Enumeration, BestIsTheTableMinimum) {
  const NetworkCase c = data_case("feeder6_tx.json");
  const EnumerationResult r = enumerate_taps_serial(c);
  ASSERT_EQ(r.table.size(), 6u);
  double best = 1e300;
  for (const auto& t : r.table) {
    if (t.outcome == TapOutcome::kFeasible) best = std::min(best, t.losses_kw);
  }
  EXPECT_EQ(r.best_losses_kw, best);
  EXPECT_EQ(tap_at(c, 3).positions, std::vector<int>{3});
}

TEST(Enumeration, CapIsEnforced) {
  const NetworkCase c = data_case("case33.json");
  EnumerationSettings s;
  s.cap = 100;
  EXPECT_THROW(enumerate_taps(c, s), InputError);
}

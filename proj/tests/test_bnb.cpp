#include <gtest/gtest.h>

#include <cmath>

#include "oltc/bnb.hpp"
#include "oltc/scenario.hpp"
#include "test_util.hpp"

using namespace oltc;
using oltc::testing::data_case;

namespace {

std::vector<TapGroup> groups_of(std::vector<std::vector<int>> bits) {
  std::vector<TapGroup> g;
  for (auto& b : bits) g.push_back({b, (1 << b.size()) - 1});
  return g;
}

}  // namespace

TEST(Branching, MostFractionalWins) {
  const auto g = groups_of({{0, 1}});
  EXPECT_EQ(branching_rule(g, {0.5, 0.1}, 1e-6), 0);
}

TEST(Branching, TiesGoToTheHeavierBit) {
  const auto g = groups_of({{0, 1, 2, 3, 4}});
  EXPECT_EQ(branching_rule(g, {0.5, 0.0, 1.0, 0.0, 0.5}, 1e-6), 4);
}

TEST(Branching, TiesAcrossGroupsGoToTheFirstTransformer) {
  const auto g = groups_of({{0, 1}, {2, 3}});
  EXPECT_EQ(branching_rule(g, {0.0, 0.5, 0.0, 0.5}, 1e-6), 1);
}

TEST(Branching, IntegralPointHasNoCandidate) {
  const auto g = groups_of({{0, 1}});
  EXPECT_EQ(branching_rule(g, {1.0, 1e-9}, 1e-6), -1);
}

TEST(Branching, RoundingUsesThePositionNotTheBits) {
  std::vector<TapGroup> g{{{0, 1, 2}, 5}};
  // Bits rounded one by one would give 7 > K; the position rounds to 5.
  EXPECT_EQ(round_positions(g, {0.6, 0.6, 0.6}), std::vector<int>{4});
  EXPECT_EQ(round_positions(g, {1.0, 1.0, 1.0}), std::vector<int>{5});
  EXPECT_EQ(round_positions(g, {0.2, 0.0, 0.0}), std::vector<int>{0});
}

TEST(Branching, RelativeGap) {
  EXPECT_EQ(relative_gap(10.0, 10.0), 0.0);
  EXPECT_EQ(relative_gap(10.0, 11.0), 0.0);
  EXPECT_NEAR(relative_gap(10.0, 9.0), 0.1, 1e-15);
}

TEST(BranchAndBound, NoBinariesIsOneSolve) {
  const OpfModel m = build_opf(data_case("two_bus.json"));
  const BnbResult r = branch_and_bound(m.program, tap_groups(m));
  EXPECT_EQ(r.status, OpfStatus::kOptimal);
  EXPECT_EQ(r.stats.nodes, 1);
  EXPECT_NEAR(r.objective * 1000.0, 1.020621, 1e-5);
}

TEST(BranchAndBound, SingleTransformerMatchesEnumeration) {
  const NetworkCase c = data_case("feeder6_tx.json");
  const EnumerationResult e = enumerate_taps_serial(c);
  const OpfSolution s = solve_opf(build_opf(c));
  ASSERT_EQ(s.status, OpfStatus::kOptimal);
  EXPECT_EQ(s.taps, e.best);
  EXPECT_NEAR(s.losses_kw, e.best_losses_kw, 1e-3 * e.best_losses_kw);
}

TEST(BranchAndBound, NodeLimitReportsGap) {
  BnbSettings s;
  s.node_limit = 3;
  const OpfSolution sol = solve_opf(build_opf(data_case("case33.json")), s);
  EXPECT_TRUE(sol.status == OpfStatus::kGapLimit || sol.status == OpfStatus::kNoIncumbent);
  EXPECT_LE(sol.nodes, 3);
}

TEST(BranchAndBound, ParallelBatchesMatchSerial) {
  const OpfModel m = build_opf(data_case("case33.json"));
  BnbSettings serial;
  BnbSettings parallel;
  parallel.threads = 4;
  const BnbResult a = branch_and_bound(m.program, tap_groups(m), serial);
  const BnbResult b = branch_and_bound(m.program, tap_groups(m), parallel);
  ASSERT_EQ(a.status, OpfStatus::kOptimal);
  ASSERT_EQ(b.status, OpfStatus::kOptimal);
  EXPECT_LE(std::abs(a.objective - b.objective), serial.rel_gap * std::abs(a.objective));
  EXPECT_EQ(a.taps, b.taps);
}

TEST(BranchAndBound, UnreachableVoltageBoxIsInfeasible) {
  NetworkCase c = data_case("two_bus.json");
  c.buses[1].v_min = 0.999;  // the line drop alone is larger
  const OpfModel m = build_opf(c);
  const RelaxationResult r = solve_relaxation(m.program);
  ASSERT_EQ(r.status, SocpStatus::kInfeasible);
  EXPECT_LE(r.raw.certificate_residual, 1e-7);
  EXPECT_EQ(solve_opf(m).status, OpfStatus::kInfeasible);
}

#include <gtest/gtest.h>

#include <string>

#include "oltc/network.hpp"
#include "test_util.hpp"

using namespace oltc;
using oltc::testing::data_case;

namespace {

std::string three_bus(const std::string& branches) {
  return R"({"schema": "opf-case/1", "name": "t", "base": {"mva": 1.0, "kv": 1.0},
    "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "load", "p_load_kw": 10},
              {"id": 3, "kind": "load", "p_load_kw": 20}],
    "branches": [)" + branches + R"(], "generators": []})";
}

}  // namespace

TEST(Network, ShippedFeederHasFourTransformers) {
  const NetworkCase c = data_case("case33.json");
  EXPECT_EQ(c.buses.size(), 33u);
  EXPECT_EQ(c.branches.size(), 32u);
  const auto tx = c.transformer_indices();
  ASSERT_EQ(tx.size(), 4u);
  std::vector<std::string> labels;
  for (int e : tx) labels.push_back(c.branches[e].label());
  EXPECT_EQ(labels, (std::vector<std::string>{"1-2", "2-19", "3-23", "6-26"}));
}

TEST(Network, SingleBusIsValid) {
  const NetworkCase c = data_case("single_bus.json");
  EXPECT_EQ(c.buses.size(), 1u);
  EXPECT_TRUE(c.branches.empty());
  EXPECT_TRUE(c.transformer_indices().empty());
}

TEST(Network, RejectsDanglingBus) {
  EXPECT_THROW(parse_case(three_bus(R"({"from": 1, "to": 2, "r_ohm": 1, "x_ohm": 1},
                                       {"from": 2, "to": 9, "r_ohm": 1, "x_ohm": 1})")),
               InputError);
}

TEST(Network, RejectsLoop) {
  EXPECT_THROW(parse_case(three_bus(R"({"from": 1, "to": 2, "r_ohm": 1, "x_ohm": 1},
                                       {"from": 2, "to": 3, "r_ohm": 1, "x_ohm": 1},
                                       {"from": 3, "to": 1, "r_ohm": 1, "x_ohm": 1})")),
               TopologyError);
}

TEST(Network, RejectsDisconnectedAndDuplicate) {
  EXPECT_THROW(parse_case(three_bus(R"({"from": 1, "to": 2, "r_ohm": 1, "x_ohm": 1})")), TopologyError);
  EXPECT_THROW(parse_case(three_bus(R"({"from": 1, "to": 2, "r_ohm": 1, "x_ohm": 1},
                                       {"from": 2, "to": 1, "r_ohm": 1, "x_ohm": 1})")),
               InputError);
}

TEST(Network, RejectsMalformedDocument) {
  EXPECT_THROW(parse_case("{ not json"), InputError);
  EXPECT_THROW(parse_case(R"({"schema": "opf-case/1"})"), InputError);
}

TEST(Network, OrientsBranchesFromTheSlack) {
  const NetworkCase c = parse_case(three_bus(R"({"from": 2, "to": 1, "r_ohm": 1, "x_ohm": 1},
                                               {"from": 3, "to": 2, "r_ohm": 1, "x_ohm": 1})"));
  for (const auto& br : c.branches) EXPECT_LT(br.from, br.to);
  const Topology topo = validate_radial(c);
  EXPECT_EQ(topo.root, c.slack_index());
  EXPECT_EQ(topo.parent[c.bus_index(3)], c.bus_index(2));
}

TEST(Network, FindBranchEitherOrientation) {
  const NetworkCase c = data_case("case33.json");
  EXPECT_EQ(c.find_branch("2-19"), c.find_branch("19-2"));
  EXPECT_EQ(c.find_branch("0"), 0);
  EXPECT_THROW(c.find_branch("40-41"), InputError);
  EXPECT_THROW(c.find_branch("x"), InputError);
}

TEST(Network, PerUnitRoundTrip) {
  const NetworkCase c = data_case("case33.json");
  const NetworkCase pu = to_per_unit(c);
  // Z_base = kV^2 / MVA, computed here independently.
  const double zb = c.base_kv * c.base_kv / c.base_mva;
  EXPECT_NEAR(impedance_base(c), zb, 1e-12);
  EXPECT_NEAR(pu.branches[0].r, c.branches[0].r / zb, 1e-15);
  EXPECT_NEAR(pu.buses[1].p_load, c.buses[1].p_load / (1000.0 * c.base_mva), 1e-15);
  const NetworkCase back = from_per_unit(pu);
  for (std::size_t e = 0; e < c.branches.size(); ++e) {
    EXPECT_NEAR(back.branches[e].r, c.branches[e].r, 1e-12);
    EXPECT_NEAR(back.branches[e].x, c.branches[e].x, 1e-12);
  }
}

TEST(Network, TapChangerRatios) {
  TapChanger t{0.95, 1.05, 20};
  EXPECT_EQ(t.exact_step(), Rational(1, 200));
  EXPECT_DOUBLE_EQ(t.ratio(0), 0.95);
  EXPECT_NEAR(t.ratio(20), 1.05, 1e-15);
  EXPECT_NEAR(t.ratio(7), 0.95 + 7 * 0.005, 1e-15);
}

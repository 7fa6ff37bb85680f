#include "oltc/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace oltc {

using nlohmann::json;

Rational TapChanger::exact_step() const {
  if (k_taps < 1) throw InputError("tap changer needs k_taps >= 1");
  return (Rational::from_double(t_max) - Rational::from_double(t_min)) / Rational(k_taps, 1);
}

double TapChanger::ratio(int tap) const {
  const Rational t = Rational::from_double(t_min) + exact_step() * Rational(tap, 1);
  return t.to_double();
}

int NetworkCase::bus_index(int id) const {
  auto it = id_to_index_.find(id);
  if (it == id_to_index_.end()) throw InputError("unknown bus id " + std::to_string(id));
  return it->second;
}

int NetworkCase::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].kind == BusKind::kSlack) return static_cast<int>(i);
  }
  throw TopologyError("case has no slack bus");
}

std::vector<int> NetworkCase::transformer_indices() const {
  std::vector<int> out;
  for (std::size_t e = 0; e < branches.size(); ++e) {
    if (branches[e].is_transformer()) out.push_back(static_cast<int>(e));
  }
  return out;
}

int NetworkCase::find_branch(const std::string& key) const {
  const auto dash = key.find('-');
  if (dash == std::string::npos) {
    std::size_t used = 0;
    int pos = -1;
    try {
      pos = std::stoi(key, &used);
    } catch (const std::exception&) {
      throw InputError("bad branch key '" + key + "'");
    }
    if (used != key.size() || pos < 0 || pos >= static_cast<int>(branches.size())) {
      throw InputError("bad branch key '" + key + "'");
    }
    return pos;
  }
  int a = 0;
  int b = 0;
  try {
    a = std::stoi(key.substr(0, dash));
    b = std::stoi(key.substr(dash + 1));
  } catch (const std::exception&) {
    throw InputError("bad branch key '" + key + "'");
  }
  for (std::size_t e = 0; e < branches.size(); ++e) {
    const auto& br = branches[e];
    if ((br.from == a && br.to == b) || (br.from == b && br.to == a)) return static_cast<int>(e);
  }
  throw InputError("no branch " + key);
}

void NetworkCase::index() {
  id_to_index_.clear();
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!id_to_index_.emplace(buses[i].id, static_cast<int>(i)).second) {
      throw InputError("duplicate bus id " + std::to_string(buses[i].id));
    }
  }
  adjacency.assign(buses.size(), {});
  for (const auto& br : branches) {
    const int a = bus_index(br.from);
    const int b = bus_index(br.to);
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }
}

std::vector<int> Topology::leaves_to_root() const {
  return {root_to_leaves.rbegin(), root_to_leaves.rend()};
}

Topology validate_radial(const NetworkCase& c) {
  const int n = static_cast<int>(c.buses.size());
  int slack_count = 0;
  Topology topo;
  for (int i = 0; i < n; ++i) {
    if (c.buses[i].kind == BusKind::kSlack) {
      ++slack_count;
      topo.root = i;
    }
  }
  if (slack_count == 0) throw TopologyError("case has no slack bus");
  if (slack_count > 1) throw TopologyError("case has multiple slack buses");

  // Incidence by branch so parallel branches show up as cycles.
  std::vector<std::vector<std::pair<int, int>>> incident(n);
  for (std::size_t e = 0; e < c.branches.size(); ++e) {
    const int a = c.bus_index(c.branches[e].from);
    const int b = c.bus_index(c.branches[e].to);
    if (a == b) throw TopologyError("branch " + c.branches[e].label() + " is a self-loop");
    incident[a].emplace_back(b, static_cast<int>(e));
    incident[b].emplace_back(a, static_cast<int>(e));
  }

  topo.parent.assign(n, -1);
  topo.parent_branch.assign(n, -1);
  topo.children.assign(n, {});
  topo.depth.assign(n, -1);
  std::deque<int> queue{topo.root};
  topo.depth[topo.root] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    topo.root_to_leaves.push_back(u);
    for (const auto& [v, e] : incident[u]) {
      if (e == topo.parent_branch[u]) continue;
      if (topo.depth[v] >= 0) {
        throw TopologyError("cycle detected through branch " + c.branches[e].label());
      }
      topo.depth[v] = topo.depth[u] + 1;
      topo.parent[v] = u;
      topo.parent_branch[v] = e;
      topo.children[u].push_back(e);
      queue.push_back(v);
    }
  }
  if (static_cast<int>(topo.root_to_leaves.size()) != n) {
    for (int i = 0; i < n; ++i) {
      if (topo.depth[i] < 0) {
        throw TopologyError("bus " + std::to_string(c.buses[i].id) +
                            " is disconnected from the slack bus");
      }
    }
  }
  return topo;
}

void orient_branches(NetworkCase& c, const Topology& topo) {
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const int e = topo.parent_branch[i];
    if (e < 0) continue;
    auto& br = c.branches[e];
    if (br.to != c.buses[i].id) std::swap(br.from, br.to);
  }
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw InputError(where + ": field '" + key + "': " + ex.what());
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return required<T>(obj, key, where);
}

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw InputError(what + " is not finite");
}

void validate_case(const NetworkCase& c) {
  if (!(c.base_mva > 0.0) || !(c.base_kv > 0.0)) throw InputError("base mva and kv must be positive");
  if (!(c.slack_voltage > 0.0)) throw InputError("slack voltage setpoint must be positive");
  for (const auto& b : c.buses) {
    const std::string where = "bus " + std::to_string(b.id);
    check_finite(b.p_load, where + " p_load");
    check_finite(b.q_load, where + " q_load");
    if (!(b.v_min < b.v_max)) throw InputError(where + ": v_min must be below v_max");
    if (!(b.v_min > 0.0)) throw InputError(where + ": v_min must be positive");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& br : c.branches) {
    const std::string where = "branch " + br.label();
    c.bus_index(br.from);
    c.bus_index(br.to);
    if (!seen.emplace(std::minmax(br.from, br.to)).second) throw InputError("duplicate " + where);
    if (br.r < 0.0 || br.x < 0.0) throw InputError(where + ": negative impedance");
    if (!br.is_transformer() && br.r == 0.0 && br.x == 0.0) {
      throw InputError(where + ": line with zero impedance");
    }
    if (br.i_max && !(*br.i_max > 0.0)) throw InputError(where + ": i_max must be positive");
    if (br.tap) {
      const auto& t = *br.tap;
      if (!(t.t_min > 0.0 && t.t_min < t.t_max)) throw InputError(where + ": need 0 < t_min < t_max");
      if (t.k_taps < 1) throw InputError(where + ": k_taps must be >= 1");
    }
  }
  const int slack = c.slack_index();
  for (const auto& g : c.generators) {
    const std::string where = "generator at bus " + std::to_string(g.bus);
    if (c.bus_index(g.bus) == slack) {
      throw InputError(where + ": the slack injection is implicit, remove this generator");
    }
    if (g.p_min > g.p_max || g.q_min > g.q_max) throw InputError(where + ": min above max");
  }
}

}  // namespace

NetworkCase parse_case(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw InputError(std::string("case parse error: ") + ex.what());
  }
  if (!doc.is_object()) throw InputError("case document must be an object");
  const auto schema = optional_field<std::string>(doc, "schema", "", "case");
  if (schema != "opf-case/1") throw InputError("unsupported case schema '" + schema + "'");

  NetworkCase c;
  c.name = optional_field<std::string>(doc, "name", "", "case");
  const json base = doc.value("base", json::object());
  c.base_mva = required<double>(base, "mva", "base");
  c.base_kv = required<double>(base, "kv", "base");

  for (const auto& jb : doc.value("buses", json::array())) {
    Bus b;
    b.id = required<int>(jb, "id", "bus");
    const std::string where = "bus " + std::to_string(b.id);
    const auto kind = required<std::string>(jb, "kind", where);
    if (kind == "slack") {
      b.kind = BusKind::kSlack;
      c.slack_voltage = optional_field<double>(jb, "v_set_pu", 1.0, where);
    } else if (kind == "load") {
      b.kind = BusKind::kLoad;
    } else {
      throw InputError(where + ": unknown kind '" + kind + "'");
    }
    b.p_load = optional_field<double>(jb, "p_load_kw", 0.0, where);
    b.q_load = optional_field<double>(jb, "q_load_kvar", 0.0, where);
    b.v_min = optional_field<double>(jb, "v_min_pu", 0.95, where);
    b.v_max = optional_field<double>(jb, "v_max_pu", 1.05, where);
    c.buses.push_back(b);
  }

  for (const auto& jl : doc.value("branches", json::array())) {
    Branch br;
    br.from = required<int>(jl, "from", "branch");
    br.to = required<int>(jl, "to", "branch");
    const std::string where = "branch " + br.label();
    br.r = required<double>(jl, "r_ohm", where);
    br.x = required<double>(jl, "x_ohm", where);
    if (jl.contains("i_max_a") && !jl.at("i_max_a").is_null()) br.i_max = required<double>(jl, "i_max_a", where);
    if (jl.contains("transformer") && !jl.at("transformer").is_null()) {
      const auto& jt = jl.at("transformer");
      TapChanger t;
      t.t_min = required<double>(jt, "t_min", where);
      t.t_max = required<double>(jt, "t_max", where);
      t.k_taps = required<int>(jt, "k_taps", where);
      br.tap = t;
    }
    c.branches.push_back(br);
  }

  for (const auto& jg : doc.value("generators", json::array())) {
    Generator g;
    g.bus = required<int>(jg, "bus", "generator");
    const std::string where = "generator at bus " + std::to_string(g.bus);
    g.p_min = required<double>(jg, "p_min_kw", where);
    g.p_max = required<double>(jg, "p_max_kw", where);
    g.q_min = required<double>(jg, "q_min_kvar", where);
    g.q_max = required<double>(jg, "q_max_kvar", where);
    c.generators.push_back(g);
  }

  if (c.buses.empty()) throw InputError("case has no buses");
  c.index();
  validate_case(c);
  const Topology topo = validate_radial(c);
  orient_branches(c, topo);
  c.index();
  return c;
}

NetworkCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open case file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  NetworkCase c = parse_case(buf.str());
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

double impedance_base(const NetworkCase& c) {
  if (!(c.base_mva > 0.0) || !(c.base_kv > 0.0)) throw InputError("per-unit bases must be positive");
  return c.base_kv * c.base_kv / c.base_mva;
}

double current_base_amps(const NetworkCase& c) {
  if (!(c.base_mva > 0.0) || !(c.base_kv > 0.0)) throw InputError("per-unit bases must be positive");
  return c.base_mva * 1e6 / (std::sqrt(3.0) * c.base_kv * 1e3);
}

namespace {

// Scales every unit-bearing field: impedances by z, powers by s, currents by a.
NetworkCase rescale(const NetworkCase& c, double z, double s, double a, Units target) {
  NetworkCase out = c;
  out.units = target;
  for (auto& b : out.buses) {
    b.p_load *= s;
    b.q_load *= s;
  }
  for (auto& br : out.branches) {
    br.r *= z;
    br.x *= z;
    if (br.i_max) *br.i_max *= a;
  }
  for (auto& g : out.generators) {
    g.p_min *= s;
    g.p_max *= s;
    g.q_min *= s;
    g.q_max *= s;
  }
  return out;
}

}  // namespace

NetworkCase to_per_unit(const NetworkCase& c) {
  if (c.units == Units::kPerUnit) return c;
  const double zb = impedance_base(c);
  // kW -> MW -> p.u.
  const double sb = 1.0 / (1000.0 * c.base_mva);
  return rescale(c, 1.0 / zb, sb, 1.0 / current_base_amps(c), Units::kPerUnit);
}

NetworkCase from_per_unit(const NetworkCase& c) {
  if (c.units == Units::kPhysical) return c;
  return rescale(c, impedance_base(c), 1000.0 * c.base_mva, current_base_amps(c), Units::kPhysical);
}

}  // namespace oltc

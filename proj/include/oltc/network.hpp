#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "oltc/rational.hpp"

namespace oltc {

/// Malformed or inconsistent input (case files, scenario specs, tap vectors).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TopologyError : public InputError {
 public:
  using InputError::InputError;
};

enum class BusKind { kSlack, kLoad };
enum class Units { kPhysical, kPerUnit };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::kLoad;
  double p_load = 0.0;  // kW, or p.u. after to_per_unit
  double q_load = 0.0;  // kvar, or p.u.
  double v_min = 0.95;  // p.u.
  double v_max = 1.05;  // p.u.
};

/// Discrete tap-changer: ratio t = t_min + T * delta_t(), T in [0, k_taps].
struct TapChanger {
  double t_min = 1.0;
  double t_max = 1.0;
  int k_taps = 1;

  Rational exact_step() const;
  double delta_t() const { return exact_step().to_double(); }
  double ratio(int tap) const;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;  // ohm, or p.u.
  double x = 0.0;
  std::optional<double> i_max;  // A, or p.u.
  std::optional<TapChanger> tap;

  bool is_transformer() const { return tap.has_value(); }
  std::string label() const { return std::to_string(from) + "-" + std::to_string(to); }
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;  // kW, or p.u.
  double p_max = 0.0;
  double q_min = 0.0;  // kvar, or p.u.
  double q_max = 0.0;

  bool is_fixed() const { return p_min == p_max && q_min == q_max; }
};

/// Radial distribution feeder. After load_case the branch list is oriented
/// parent -> child and every cross-reference has been checked.
struct NetworkCase {
  std::string name;
  double base_mva = 1.0;
  double base_kv = 1.0;
  double slack_voltage = 1.0;  // p.u. magnitude at the substation
  Units units = Units::kPhysical;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;

  /// Per-bus neighbor lists (bus indices), K(j).
  std::vector<std::vector<int>> adjacency;

  int bus_index(int id) const;
  int slack_index() const;
  std::vector<int> transformer_indices() const;
  /// Branch by "from-to" label in either orientation, or by decimal position.
  int find_branch(const std::string& key) const;

  /// Rebuilds the id lookup and adjacency; called by the loaders.
  void index();

 private:
  std::unordered_map<int, int> id_to_index_;
};

/// Parent map and traversal orders rooted at the slack bus.
struct Topology {
  int root = 0;
  std::vector<int> parent;         // bus index -> parent bus index, -1 at root
  std::vector<int> parent_branch;  // bus index -> branch index, -1 at root
  std::vector<std::vector<int>> children;  // bus index -> child branch indices
  std::vector<int> depth;
  std::vector<int> root_to_leaves;  // bus indices, BFS order
  std::vector<int> leaves_to_root() const;
};

NetworkCase load_case(const std::filesystem::path& path);
NetworkCase parse_case(const std::string& text);

/// Validates radiality, connectivity and the single-slack rule.
Topology validate_radial(const NetworkCase& c);

/// Orients every branch parent -> child in place (input files may list either).
void orient_branches(NetworkCase& c, const Topology& topo);

/// Impedances / Z_base, powers / base_mva, currents / I_base.
NetworkCase to_per_unit(const NetworkCase& c);
NetworkCase from_per_unit(const NetworkCase& c);

double impedance_base(const NetworkCase& c);
double current_base_amps(const NetworkCase& c);

}  // namespace oltc

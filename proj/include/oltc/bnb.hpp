#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "oltc/opf.hpp"
#include "oltc/presolve.hpp"
#include "oltc/program.hpp"
#include "oltc/socp.hpp"

namespace oltc {

/// Bit variables of one tap changer, least significant first, and its K.
struct TapGroup {
  std::vector<int> bits;
  int k_taps = 0;
};

struct BnbSettings {
  double rel_gap = 1e-6;
  long node_limit = 100000;
  /// Wall-clock budget in seconds; the search stops with a gap report when exceeded.
  double time_limit_s = std::numeric_limits<double>::infinity();
  /// Nodes evaluated per batch. 1 is the single-threaded reference.
  int threads = 1;
  double int_tol = 1e-6;
  SocpSettings socp;
};

/// Open subproblem: bounds on the bit variables plus bookkeeping.
struct BnbNode {
  long id = 0;
  int depth = 0;
  double parent_bound = 0.0;
  std::vector<double> lb;  // per bit, in group order
  std::vector<double> ub;
};

struct BnbStats {
  long nodes = 0;
  long pruned_by_bound = 0;
  long pruned_infeasible = 0;
  long integral_nodes = 0;
  long heuristic_solves = 0;
  long numerical_failures = 0;
  long max_depth = 0;
  /// Interior-point iterations over all node and heuristic solves.
  long socp_iterations = 0;
};

struct BnbResult {
  OpfStatus status = OpfStatus::kSolverFailure;
  bool has_incumbent = false;
  std::vector<double> x;   // incumbent point, original variable space
  std::vector<int> taps;   // incumbent T per group
  double objective = 0.0;  // incumbent objective
  double best_bound = 0.0;
  double gap = 0.0;        // relative incumbent-bound gap
  BnbStats stats;
  std::string message;
};

/// Most fractional free bit; ties go to the higher bit weight, then the lower
/// group index. Returns -1 when every free bit is within int_tol of {0, 1}.
int branching_rule(const std::vector<TapGroup>& groups, const std::vector<double>& x, double int_tol);

/// Nearest integer T = sum 2^n x_n per group, clamped to [0, K].
std::vector<int> round_positions(const std::vector<TapGroup>& groups, const std::vector<double>& x);

/// Relative gap with an absolute floor, 0 when bound >= incumbent.
double relative_gap(double incumbent, double bound);

/// Branch and bound over the tap bits of a mixed-integer SOCP.
BnbResult branch_and_bound(const MixedIntegerConicProgram& prog, const std::vector<TapGroup>& groups,
                           const BnbSettings& settings = {});

std::vector<TapGroup> tap_groups(const OpfModel& model);

/// Solves an assembled OPF model and maps the incumbent back to the network.
OpfSolution solve_opf(const OpfModel& model, const BnbSettings& settings = {});

}  // namespace oltc

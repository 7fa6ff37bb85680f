#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oltc/network.hpp"

namespace oltc {

/// One integer tap position per transformer, in NetworkCase::transformer_indices() order.
struct TapAssignment {
  std::vector<int> positions;

  auto operator<=>(const TapAssignment&) const = default;
  std::string str() const;
};

/// Checks 0 <= T <= K for every transformer; throws InputError otherwise.
void check_taps(const NetworkCase& c, const TapAssignment& taps);

/// Per-generator active / reactive output in p.u.
struct Dispatch {
  std::vector<double> p;
  std::vector<double> q;
};

struct PowerFlowSettings {
  double tol = 1e-10;
  int max_iter = 100;
};

enum class PowerFlowStatus { kConverged, kNotConverged, kVoltageCollapse };

const char* to_string(PowerFlowStatus s);

/// DistFlow state in p.u.: squared voltages, squared currents, sending-end flows.
struct PowerFlowSolution {
  PowerFlowStatus status = PowerFlowStatus::kNotConverged;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> u;       // per bus
  std::vector<double> l;       // per branch
  std::vector<double> p_flow;  // per branch
  std::vector<double> q_flow;  // per branch
  std::vector<double> u_tap;   // per branch: squared voltage at the internal tap node (== u_parent drop for lines)
  std::vector<double> ratio;   // per branch turns ratio (1 for lines)
  double slack_p = 0.0;        // substation injection, p.u.
  double slack_q = 0.0;
  double losses_pu = 0.0;
  double losses_kw = 0.0;
};

/// Backward/forward sweep for fixed taps. Non-slack generators must be fixed
/// unless an explicit dispatch is supplied.
PowerFlowSolution solve_powerflow(const NetworkCase& c, const TapAssignment& taps,
                                  const PowerFlowSettings& settings = {},
                                  const std::optional<Dispatch>& dispatch = std::nullopt);

/// Max mismatch of the branch equations (balance, voltage drop, current) at a state.
double branch_equation_residual(const NetworkCase& pu_case, const PowerFlowSolution& s,
                                const std::optional<Dispatch>& dispatch = std::nullopt);

/// True when every non-slack squared voltage lies in [v_min^2, v_max^2] (slack tol 1e-9).
bool within_voltage_bounds(const NetworkCase& c, const PowerFlowSolution& s, double tol = 1e-9);

enum class TapOutcome { kFeasible, kVoltageViolation, kNotConverged, kVoltageCollapse };

const char* to_string(TapOutcome o);

struct TapEvaluation {
  TapAssignment taps;
  TapOutcome outcome = TapOutcome::kNotConverged;
  double losses_kw = 0.0;
  int iterations = 0;
};

struct EnumerationSettings {
  PowerFlowSettings powerflow;
  std::uint64_t cap = 1'000'000;
};

struct EnumerationResult {
  TapAssignment best;
  double best_losses_kw = 0.0;
  std::vector<TapEvaluation> table;  // lexicographic tap order
  std::size_t feasible = 0;
  std::size_t voltage_violations = 0;
  std::size_t not_converged = 0;
};

/// Number of points on the full tap grid, prod(K_ij + 1).
std::uint64_t tap_grid_size(const NetworkCase& c);

/// Exhaustive loss minimization over the tap grid, OpenMP-parallel over grid points.
/// Ties go to the lexicographically smallest tap vector. Throws InputError when
/// the grid exceeds the cap or nothing is feasible.
EnumerationResult enumerate_taps(const NetworkCase& c, const EnumerationSettings& settings = {});

/// Single-threaded reference for enumerate_taps.
EnumerationResult enumerate_taps_serial(const NetworkCase& c, const EnumerationSettings& settings = {});

/// Grid point by lexicographic index.
TapAssignment tap_at(const NetworkCase& c, std::uint64_t index);

}  // namespace oltc

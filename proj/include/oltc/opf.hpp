#pragma once

#include <string>
#include <vector>

#include "oltc/linearization.hpp"
#include "oltc/network.hpp"
#include "oltc/powerflow.hpp"
#include "oltc/program.hpp"

namespace oltc {

enum class TapModel { kExact, kApproximate };

struct OpfOptions {
  LinearizationConfig linearization;
  TapModel tap_model = TapModel::kExact;
  ApproximateForm approximate_form = ApproximateForm::kSlopeTwo;
  /// Squared-current cap (p.u.^2) for branches without i_max.
  double default_current_cap = 10.0;
};

/// Assembled OPF program plus the map from network elements to variables.
struct OpfModel {
  MixedIntegerConicProgram program;
  NetworkCase pu_case;
  Topology topology;
  OpfOptions options;
  std::vector<VarId> u;   // per bus
  std::vector<VarId> p;   // per branch
  std::vector<VarId> q;   // per branch
  std::vector<VarId> l;   // per branch
  std::vector<VarId> pg;  // per generator
  std::vector<VarId> qg;  // per generator
  std::vector<TapEncoding> taps;  // per transformer, transformer_indices() order

  /// Groups of bit variable indices, one per transformer.
  std::vector<std::vector<int>> bit_groups() const;
  std::vector<int> tap_limits() const;
};

/// Builds the loss-minimizing mixed-integer SOCP for a validated radial case.
OpfModel build_opf(const NetworkCase& c, const OpfOptions& options = {});

enum class OpfStatus { kOptimal, kInfeasible, kGapLimit, kNoIncumbent, kSolverFailure };

const char* to_string(OpfStatus s);

struct OpfSolution {
  OpfStatus status = OpfStatus::kSolverFailure;
  TapAssignment taps;
  std::vector<double> ratios;            // decoded t = t_min + T dt
  std::vector<double> effective_ratios;  // sqrt(U_jt / U_j) as modeled
  std::vector<double> u;                 // per bus
  std::vector<double> p, q, l;           // per branch
  std::vector<double> u_tap;             // per transformer
  Dispatch dispatch;
  double objective_pu = 0.0;
  double losses_kw = 0.0;
  std::vector<double> cone_gaps;   // per branch l u_i - (p^2 + q^2)
  std::vector<double> bigm_gaps;   // per transformer |U_jt - t^2 U_j|
  double bound_gap = 0.0;
  double best_bound_pu = 0.0;
  long nodes = 0;
  std::size_t binaries = 0;
  double max_cone_gap() const;
  double max_bigm_gap() const;
};

/// Maps a solver point back to network quantities. Throws InputError when a
/// binary is not within int_tol of {0, 1} or the point has the wrong size.
OpfSolution extract_solution(const OpfModel& model, const std::vector<double>& x, double int_tol = 1e-6);

/// Copy of the model with every tap bit fixed to the canonical encoding of T.
OpfModel fix_taps(const OpfModel& model, const TapAssignment& taps);

/// Bit bounds pinning a tap vector, for use as node bounds.
void pin_taps(const OpfModel& model, const TapAssignment& taps, std::vector<double>& lb, std::vector<double>& ub);

/// Sum of net bus injections (generation minus load, slack included) at a point.
double net_injection_sum(const OpfModel& model, const std::vector<double>& x);

}  // namespace oltc

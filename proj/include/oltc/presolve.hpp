#pragma once

#include <string>
#include <vector>

#include "oltc/program.hpp"
#include "oltc/socp.hpp"

namespace oltc {

/// Continuous relaxation of a MixedIntegerConicProgram under (possibly tightened)
/// variable bounds, after substituting fixed variables, turning single-variable
/// rows into bounds and merging opposite inequality pairs into equalities.
struct ReducedProgram {
  SocpProblem problem;
  std::vector<int> column;        // original variable -> reduced column, -1 when fixed
  std::vector<double> fixed_value;
  bool infeasible = false;  // proven during reduction
  std::string reason;

  std::vector<double> expand(const Eigen::VectorXd& reduced) const;
};

ReducedProgram reduce_program(const MixedIntegerConicProgram& prog, std::vector<double> lb,
                              std::vector<double> ub);

/// Relaxation value and point in original variable space.
struct RelaxationResult {
  SocpStatus status = SocpStatus::kNumericalFailure;
  double objective = 0.0;    // primal objective
  double lower_bound = 0.0;  // valid bound: min(primal, dual)
  std::vector<double> x;
  SocpResult raw;
};

RelaxationResult solve_relaxation(const MixedIntegerConicProgram& prog, const std::vector<double>& lb,
                                  const std::vector<double>& ub, const SocpSettings& settings);

/// Relaxation with the program's own bounds.
RelaxationResult solve_relaxation(const MixedIntegerConicProgram& prog, const SocpSettings& settings = {});

}  // namespace oltc

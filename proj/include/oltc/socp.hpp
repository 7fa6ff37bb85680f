#pragma once

#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "oltc/cone.hpp"

namespace oltc {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Continuous conic program in standard form:
///   minimize c'x  subject to  A x = b,  G x + s = h,  s in K.
struct SocpProblem {
  Eigen::VectorXd c;
  SparseMatrix A;
  Eigen::VectorXd b;
  SparseMatrix G;
  Eigen::VectorXd h;
  cone::ConeDims cones;
  double objective_offset = 0.0;
  /// Optional bound on |x_j| over the feasible set; enables certified early
  /// termination against SocpSettings::cutoff. Empty when unknown.
  Eigen::VectorXd x_bound;

  int num_vars() const { return static_cast<int>(c.size()); }
};

enum class SocpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kNumericalFailure, kCutoff };

const char* to_string(SocpStatus s);

enum class SolverMode { kInteriorPoint, kSplitting };

/// Default tolerances (see README for the full table).
struct SocpSettings {
  SolverMode mode = SolverMode::kInteriorPoint;
  double feastol = 1e-9;
  double abstol = 1e-11;
  double reltol = 1e-9;
  double feastol_inaccurate = 1e-6;
  double abstol_inaccurate = 1e-8;
  double reltol_inaccurate = 1e-6;
  int max_iter = 100;
  double static_regularization = 1e-9;
  int refinement_steps = 8;
  double step_fraction = 0.99;
  /// Stop with kCutoff once a certified lower bound on the optimal value
  /// exceeds this (needs SocpProblem::x_bound).
  double cutoff = std::numeric_limits<double>::infinity();
  /// Per-iteration trace on stderr.
  bool verbose = false;
  // splitting mode
  int splitting_max_iter = 50000;
  double splitting_rho = 1.0;
  double splitting_eps = 1e-7;
};

struct SocpResult {
  SocpStatus status = SocpStatus::kNumericalFailure;
  /// Optimal at the reduced tolerances only.
  bool reduced_accuracy = false;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  Eigen::VectorXd s;
  double primal_objective = 0.0;  // includes objective_offset
  double dual_objective = 0.0;
  /// Lower bound valid despite residual dual infeasibility (needs
  /// SocpProblem::x_bound; -inf otherwise).
  double certified_bound = -std::numeric_limits<double>::infinity();
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  /// For kCutoff, dual_objective holds the certified bound.
  /// For kInfeasible, (y, z) is a Farkas ray scaled so b'y + h'z = -1 and
  /// certificate_residual = ||A'y + G'z||. For kUnbounded, x is a ray with c'x = -1.
  double certificate_residual = 0.0;
  std::string message;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra correction. Deterministic.
SocpResult solve_socp_ipm(const SocpProblem& prob, const SocpSettings& settings = {});

/// Operator-splitting (ADMM) fallback. Lower accuracy; no certificates.
SocpResult solve_socp_splitting(const SocpProblem& prob, const SocpSettings& settings = {});

/// Dispatches on settings.mode.
SocpResult solve_socp(const SocpProblem& prob, const SocpSettings& settings = {});

}  // namespace oltc

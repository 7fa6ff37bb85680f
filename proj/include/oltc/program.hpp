#pragma once

#include <string>
#include <utility>
#include <vector>

namespace oltc {

/// Handle to a program variable (index into MixedIntegerConicProgram::variables).
struct VarId {
  int index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(VarId, VarId) = default;
};

/// Network element a variable belongs to.
enum class VarRole {
  kVoltageSq,   // U_i
  kFlowP,       // P_ij
  kFlowQ,       // Q_ij
  kCurrentSq,   // L_ij
  kGenP,
  kGenQ,
  kTapBit,      // lambda_n
  kTapM,        // m = t U_j
  kTapX,        // x_n = lambda_n U_j
  kTapY,        // y_n = lambda_n m
  kTapNodeSq,   // U_jt
  kOther,
};

struct VarTag {
  VarRole role = VarRole::kOther;
  int element = -1;  // bus, branch or generator index
  int bit = -1;      // bit position for tap variables
};

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
  bool binary = false;
  VarTag tag;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

enum class RowSense { kEqual, kLessEqual };

struct LinearRow {
  std::vector<Term> terms;
  RowSense sense = RowSense::kEqual;
  double rhs = 0.0;
  std::string label;
};

/// Rotated cone lhs_a * lhs_b >= sum(rest_i^2), lhs_a, lhs_b >= 0.
struct RotatedCone {
  int lhs_a = 0;
  int lhs_b = 0;
  std::vector<int> rest;
  std::string label;
};

/// Solver-independent mixed-integer SOCP: minimize objective . x subject to
/// linear rows, rotated cones, bounds, and integrality of binary variables.
struct MixedIntegerConicProgram {
  std::vector<Variable> variables;
  std::vector<Term> objective;
  std::vector<LinearRow> eq_rows;
  std::vector<LinearRow> ineq_rows;  // all of the form a.x <= rhs
  std::vector<RotatedCone> cones;

  VarId add_variable(std::string name, double lb, double ub, VarTag tag = {}, bool binary = false);
  void add_equality(std::vector<Term> terms, double rhs, std::string label);
  void add_less_equal(std::vector<Term> terms, double rhs, std::string label);
  void add_rotated_cone(VarId a, VarId b, std::vector<VarId> rest, std::string label);

  std::size_t num_binaries() const;
  std::vector<int> binary_indices() const;
  double objective_value(const std::vector<double>& x) const;

  /// Throws std::logic_error on dangling references, non-finite big-M bounds, or
  /// binary flags on non-bit variables.
  void check() const;
};

/// Row value a.x.
double row_activity(const LinearRow& row, const std::vector<double>& x);

/// Largest violation of rows, cones and bounds at x (0 when feasible).
double max_violation(const MixedIntegerConicProgram& prog, const std::vector<double>& x);

/// Human-auditable listing, format documented in docs/model-format.md.
std::string dump_program(const MixedIntegerConicProgram& prog);

/// Pretty-prints a single row with variable names.
std::string format_row(const MixedIntegerConicProgram& prog, const LinearRow& row);

}  // namespace oltc

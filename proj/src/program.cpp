#include "oltc/program.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace oltc {

VarId MixedIntegerConicProgram::add_variable(std::string name, double lb, double ub, VarTag tag, bool binary) {
  variables.push_back(Variable{std::move(name), lb, ub, binary, tag});
  return VarId{static_cast<int>(variables.size()) - 1};
}

void MixedIntegerConicProgram::add_equality(std::vector<Term> terms, double rhs, std::string label) {
  eq_rows.push_back(LinearRow{std::move(terms), RowSense::kEqual, rhs, std::move(label)});
}

void MixedIntegerConicProgram::add_less_equal(std::vector<Term> terms, double rhs, std::string label) {
  ineq_rows.push_back(LinearRow{std::move(terms), RowSense::kLessEqual, rhs, std::move(label)});
}

void MixedIntegerConicProgram::add_rotated_cone(VarId a, VarId b, std::vector<VarId> rest, std::string label) {
  RotatedCone cone{a.index, b.index, {}, std::move(label)};
  for (VarId v : rest) cone.rest.push_back(v.index);
  cones.push_back(std::move(cone));
}

std::size_t MixedIntegerConicProgram::num_binaries() const {
  return static_cast<std::size_t>(std::count_if(variables.begin(), variables.end(),
                                                [](const Variable& v) { return v.binary; }));
}

std::vector<int> MixedIntegerConicProgram::binary_indices() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < variables.size(); ++j) {
    if (variables[j].binary) out.push_back(static_cast<int>(j));
  }
  return out;
}

double MixedIntegerConicProgram::objective_value(const std::vector<double>& x) const {
  double v = 0.0;
  for (const auto& t : objective) v += t.coef * x[t.var];
  return v;
}

void MixedIntegerConicProgram::check() const {
  const int n = static_cast<int>(variables.size());
  auto ref = [n](int j, const std::string& where) {
    if (j < 0 || j >= n) throw std::logic_error(where + " references missing variable " + std::to_string(j));
  };
  for (const auto& t : objective) ref(t.var, "objective");
  for (const auto* rows : {&eq_rows, &ineq_rows}) {
    for (const auto& r : *rows) {
      for (const auto& t : r.terms) ref(t.var, "row " + r.label);
    }
  }
  for (const auto& c : cones) {
    ref(c.lhs_a, "cone " + c.label);
    ref(c.lhs_b, "cone " + c.label);
    for (int j : c.rest) ref(j, "cone " + c.label);
  }
  for (const auto& v : variables) {
    if (v.binary && v.tag.role != VarRole::kTapBit) {
      throw std::logic_error("binary flag on non-bit variable " + v.name);
    }
    const bool big_m = v.tag.role == VarRole::kTapX || v.tag.role == VarRole::kTapY ||
                       v.tag.role == VarRole::kTapM || v.tag.role == VarRole::kTapNodeSq;
    if (big_m && !(std::isfinite(v.lb) && std::isfinite(v.ub))) {
      throw std::logic_error("big-M variable " + v.name + " has infinite bounds");
    }
  }
}

double row_activity(const LinearRow& row, const std::vector<double>& x) {
  double a = 0.0;
  for (const auto& t : row.terms) a += t.coef * x[t.var];
  return a;
}

double max_violation(const MixedIntegerConicProgram& prog, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& r : prog.eq_rows) worst = std::max(worst, std::abs(row_activity(r, x) - r.rhs));
  for (const auto& r : prog.ineq_rows) worst = std::max(worst, row_activity(r, x) - r.rhs);
  for (std::size_t j = 0; j < prog.variables.size(); ++j) {
    worst = std::max({worst, prog.variables[j].lb - x[j], x[j] - prog.variables[j].ub});
  }
  for (const auto& c : prog.cones) {
    double rest = 0.0;
    for (int j : c.rest) rest += x[j] * x[j];
    worst = std::max({worst, rest - x[c.lhs_a] * x[c.lhs_b], -x[c.lhs_a], -x[c.lhs_b]});
  }
  return worst;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string format_row(const MixedIntegerConicProgram& prog, const LinearRow& row) {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : row.terms) {
    const double c = t.coef;
    if (first) {
      os << (c < 0 ? "-" : "");
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    if (std::abs(c) != 1.0) os << fmt(std::abs(c)) << " ";
    os << prog.variables[t.var].name;
  }
  if (first) os << "0";
  os << (row.sense == RowSense::kEqual ? " = " : " <= ") << fmt(row.rhs);
  return os.str();
}

std::string dump_program(const MixedIntegerConicProgram& prog) {
  std::ostringstream os;
  os << "# opf-model/1\n";
  os << "variables " << prog.variables.size() << " binaries " << prog.num_binaries() << " eq "
     << prog.eq_rows.size() << " ineq " << prog.ineq_rows.size() << " cones " << prog.cones.size() << "\n";
  os << "\n[variables]\n";
  for (std::size_t j = 0; j < prog.variables.size(); ++j) {
    const auto& v = prog.variables[j];
    os << j << " " << v.name << " " << (v.binary ? "bin" : "cont") << " [" << fmt(v.lb) << ", " << fmt(v.ub)
       << "]\n";
  }
  os << "\n[objective]\nmin";
  for (const auto& t : prog.objective) os << " " << (t.coef < 0 ? "-" : "+") << " " << fmt(std::abs(t.coef)) << " " << prog.variables[t.var].name;
  os << "\n\n[equalities]\n";
  for (const auto& r : prog.eq_rows) os << r.label << ": " << format_row(prog, r) << "\n";
  os << "\n[inequalities]\n";
  for (const auto& r : prog.ineq_rows) os << r.label << ": " << format_row(prog, r) << "\n";
  os << "\n[cones]\n";
  for (const auto& c : prog.cones) {
    os << c.label << ": " << prog.variables[c.lhs_a].name << " * " << prog.variables[c.lhs_b].name << " >=";
    for (std::size_t k = 0; k < c.rest.size(); ++k) {
      os << (k ? " +" : "") << " " << prog.variables[c.rest[k]].name << "^2";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace oltc

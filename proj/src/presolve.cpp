#include "oltc/presolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace oltc {

namespace {

constexpr double kFixTol = 1e-12;
constexpr double kFeasTol = 1e-9;

struct WorkRow {
  std::vector<Term> terms;  // non-fixed variables only
  double rhs = 0.0;
  bool equality = false;
  bool active = true;
};

// Sign-normalized term list used to spot duplicate and opposite rows.
using RowKey = std::vector<std::pair<int, double>>;

RowKey normalized_key(const std::vector<Term>& terms, double& sign) {
  RowKey key;
  key.reserve(terms.size());
  for (const auto& t : terms) key.emplace_back(t.var, t.coef);
  std::sort(key.begin(), key.end());
  sign = key.front().second > 0.0 ? 1.0 : -1.0;
  for (auto& [v, c] : key) c *= sign;
  return key;
}

}  // namespace

std::vector<double> ReducedProgram::expand(const Eigen::VectorXd& reduced) const {
  std::vector<double> x(column.size());
  for (std::size_t j = 0; j < column.size(); ++j) x[j] = column[j] >= 0 ? reduced(column[j]) : fixed_value[j];
  return x;
}

ReducedProgram reduce_program(const MixedIntegerConicProgram& prog, std::vector<double> lb, std::vector<double> ub) {
  const std::size_t nv = prog.variables.size();
  ReducedProgram out;
  out.column.assign(nv, -1);
  out.fixed_value.assign(nv, 0.0);
  std::vector<bool> fixed(nv, false);

  std::vector<WorkRow> rows;
  rows.reserve(prog.eq_rows.size() + prog.ineq_rows.size());
  for (const auto& r : prog.eq_rows) rows.push_back({r.terms, r.rhs, true, true});
  for (const auto& r : prog.ineq_rows) rows.push_back({r.terms, r.rhs, false, true});

  auto fail = [&](const std::string& why) {
    if (!out.infeasible) {
      out.infeasible = true;
      out.reason = why;
    }
  };

  // Activity bounds of a row: proves infeasibility, and tightens binaries
  // (rounded to 0/1) that the rest of the row cannot accommodate.
  auto propagate_row = [&](const WorkRow& row) {
    double min_act = 0.0;
    double max_act = 0.0;
    for (const auto& t : row.terms) {
      min_act += t.coef > 0.0 ? t.coef * lb[t.var] : t.coef * ub[t.var];
      max_act += t.coef > 0.0 ? t.coef * ub[t.var] : t.coef * lb[t.var];
    }
    const double tol = kFeasTol * (1.0 + std::abs(row.rhs));
    if (std::isfinite(min_act) && min_act > row.rhs + tol) {
      fail("row activity cannot reach its right-hand side");
      return false;
    }
    if (row.equality && std::isfinite(max_act) && max_act < row.rhs - tol) {
      fail("row activity cannot reach its right-hand side");
      return false;
    }
    bool tightened = false;
    for (const auto& t : row.terms) {
      if (!prog.variables[t.var].binary || lb[t.var] == ub[t.var]) continue;
      const double own_min = t.coef > 0.0 ? t.coef * lb[t.var] : t.coef * ub[t.var];
      const double rest_min = min_act - own_min;
      if (!std::isfinite(rest_min)) continue;
      // coef * x <= rhs - rest_min
      const double limit = (row.rhs - rest_min + tol) / t.coef;
      if (t.coef > 0.0 && limit < 1.0 - kFeasTol && ub[t.var] > 0.0) {
        ub[t.var] = 0.0;
        tightened = true;
      } else if (t.coef < 0.0 && limit > kFeasTol && lb[t.var] < 1.0) {
        lb[t.var] = 1.0;
        tightened = true;
      }
    }
    return tightened;
  };

  bool changed = true;
  for (int pass = 0; changed && !out.infeasible && pass < 50; ++pass) {
    changed = false;
    for (std::size_t j = 0; j < nv; ++j) {
      if (!fixed[j] && lb[j] > ub[j] + kFeasTol * (1.0 + std::abs(ub[j]))) {
        fail("empty bounds on " + prog.variables[j].name);
      }
      if (!fixed[j] && lb[j] <= ub[j] && ub[j] - lb[j] <= kFixTol) {
        fixed[j] = true;
        out.fixed_value[j] = lb[j];
        changed = true;
      }
    }
    for (std::size_t ri = 0; ri < rows.size(); ++ri) {
      WorkRow& row = rows[ri];
      if (!row.active) continue;
      std::vector<Term> kept;
      for (const auto& t : row.terms) {
        if (fixed[t.var]) {
          row.rhs -= t.coef * out.fixed_value[t.var];
        } else if (t.coef != 0.0) {
          kept.push_back(t);
        }
      }
      row.terms = std::move(kept);
      if (row.terms.empty()) {
        row.active = false;
        const double tol = kFeasTol * (1.0 + std::abs(row.rhs));
        if (row.equality ? std::abs(row.rhs) > tol : row.rhs < -tol) {
          fail("row " + std::to_string(ri) + " violated after fixing variables");
        }
        continue;
      }
      if (row.terms.size() > 1 && propagate_row(row)) changed = true;
      if (row.terms.size() == 1) {
        const Term t = row.terms.front();
        const double v = row.rhs / t.coef;
        row.active = false;
        changed = true;
        if (row.equality) {
          if (v < lb[t.var] - kFeasTol * (1.0 + std::abs(v)) || v > ub[t.var] + kFeasTol * (1.0 + std::abs(v))) {
            fail("equality fixes " + prog.variables[t.var].name + " outside its bounds");
          }
          lb[t.var] = ub[t.var] = v;
        } else if (t.coef > 0.0) {
          ub[t.var] = std::min(ub[t.var], v);
        } else {
          lb[t.var] = std::max(lb[t.var], v);
        }
      }
    }
  }

  if (out.infeasible) return out;

  // Reduced columns.
  int ncols = 0;
  for (std::size_t j = 0; j < nv; ++j) {
    if (!fixed[j]) out.column[j] = ncols++;
  }

  // Merge duplicate / opposite inequality rows.
  std::map<RowKey, std::pair<std::size_t, double>> seen;  // key -> (row, sign)
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    WorkRow& row = rows[ri];
    if (!row.active || row.equality) continue;
    double sign = 1.0;
    RowKey key = normalized_key(row.terms, sign);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(std::move(key), std::make_pair(ri, sign));
      continue;
    }
    WorkRow& other = rows[it->second.first];
    const double other_sign = it->second.second;
    if (other_sign == sign) {
      // Same orientation: keep the tighter right-hand side.
      other.rhs = std::min(other.rhs, row.rhs);
      row.active = false;
    } else {
      // sign*a.x <= rhs and -sign*a.x <= other.rhs: a.x is pinned when both sides meet.
      const double upper = sign > 0 ? row.rhs : other.rhs;   // a.x <= upper
      const double lower = sign > 0 ? -other.rhs : -row.rhs;  // a.x >= lower
      if (upper - lower <= kFeasTol * (1.0 + std::abs(upper))) {
        if (upper < lower - kFeasTol * (1.0 + std::abs(upper))) fail("opposite rows cross");
        other.terms = sign > 0 ? row.terms : other.terms;
        other.rhs = 0.5 * (upper + lower);
        other.equality = true;
        row.active = false;
      }
    }
  }

  std::vector<Eigen::Triplet<double>> a_trip;
  std::vector<Eigen::Triplet<double>> g_trip;
  std::vector<double> b;
  std::vector<double> h;
  for (const auto& row : rows) {
    if (!row.active) continue;
    auto& trip = row.equality ? a_trip : g_trip;
    auto& rhs = row.equality ? b : h;
    const int r = static_cast<int>(rhs.size());
    for (const auto& t : row.terms) trip.emplace_back(r, out.column[t.var], t.coef);
    rhs.push_back(row.rhs);
  }
  for (std::size_t j = 0; j < nv; ++j) {
    if (fixed[j]) continue;
    const int col = out.column[j];
    if (std::isfinite(ub[j])) {
      g_trip.emplace_back(static_cast<int>(h.size()), col, 1.0);
      h.push_back(ub[j]);
    }
    if (std::isfinite(lb[j])) {
      g_trip.emplace_back(static_cast<int>(h.size()), col, -1.0);
      h.push_back(-lb[j]);
    }
  }
  const int n_lp = static_cast<int>(h.size());

  // Rotated cone a*b >= sum r_i^2  <=>  (a + b, a - b, 2 r_1, ...) in Q.
  std::vector<int> soc_dims;
  for (const auto& c : prog.cones) {
    const int d = 2 + static_cast<int>(c.rest.size());
    const int base = static_cast<int>(h.size());
    std::vector<std::vector<std::pair<int, double>>> comps(d);
    comps[0] = {{c.lhs_a, 1.0}, {c.lhs_b, 1.0}};
    comps[1] = {{c.lhs_a, 1.0}, {c.lhs_b, -1.0}};
    for (std::size_t k = 0; k < c.rest.size(); ++k) comps[2 + k] = {{c.rest[k], 2.0}};
    for (int k = 0; k < d; ++k) {
      double constant = 0.0;
      for (const auto& [var, coef] : comps[k]) {
        if (fixed[var]) {
          constant += coef * out.fixed_value[var];
        } else {
          g_trip.emplace_back(base + k, out.column[var], -coef);
        }
      }
      h.push_back(constant);
    }
    soc_dims.push_back(d);
  }

  SocpProblem& p = out.problem;
  p.c = Eigen::VectorXd::Zero(ncols);
  for (const auto& t : prog.objective) {
    if (fixed[t.var]) {
      p.objective_offset += t.coef * out.fixed_value[t.var];
    } else {
      p.c(out.column[t.var]) += t.coef;
    }
  }
  p.A.resize(static_cast<int>(b.size()), ncols);
  p.A.setFromTriplets(a_trip.begin(), a_trip.end());
  p.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int>(b.size()));
  p.G.resize(static_cast<int>(h.size()), ncols);
  p.G.setFromTriplets(g_trip.begin(), g_trip.end());
  p.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<int>(h.size()));
  p.cones.n_lp = n_lp;
  p.cones.soc = std::move(soc_dims);
  p.x_bound.resize(ncols);
  for (std::size_t j = 0; j < nv; ++j) {
    if (!fixed[j]) p.x_bound(out.column[j]) = std::max(std::abs(lb[j]), std::abs(ub[j]));
  }
  if (!p.x_bound.allFinite()) p.x_bound.resize(0);
  return out;
}

RelaxationResult solve_relaxation(const MixedIntegerConicProgram& prog, const std::vector<double>& lb,
                                  const std::vector<double>& ub, const SocpSettings& settings) {
  RelaxationResult res;
  const ReducedProgram reduced = reduce_program(prog, lb, ub);
  if (reduced.infeasible) {
    res.status = SocpStatus::kInfeasible;
    res.objective = res.lower_bound = std::numeric_limits<double>::infinity();
    res.raw.status = SocpStatus::kInfeasible;
    res.raw.message = "presolve: " + reduced.reason;
    return res;
  }
  res.raw = solve_socp(reduced.problem, settings);
  res.status = res.raw.status;
  if (res.status == SocpStatus::kOptimal) {
    res.x = reduced.expand(res.raw.x);
    res.objective = res.raw.primal_objective;
    res.lower_bound = std::min(res.raw.primal_objective, res.raw.dual_objective);
  } else if (res.status == SocpStatus::kInfeasible) {
    res.objective = res.lower_bound = std::numeric_limits<double>::infinity();
  } else if (res.status == SocpStatus::kCutoff) {
    res.objective = res.lower_bound = res.raw.dual_objective;
  }
  return res;
}

RelaxationResult solve_relaxation(const MixedIntegerConicProgram& prog, const SocpSettings& settings) {
  std::vector<double> lb;
  std::vector<double> ub;
  for (const auto& v : prog.variables) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  return solve_relaxation(prog, lb, ub, settings);
}

}  // namespace oltc

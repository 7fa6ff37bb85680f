#include "oltc/opf.hpp"

#include <algorithm>
#include <cmath>

namespace oltc {

const char* to_string(OpfStatus s) {
  switch (s) {
    case OpfStatus::kOptimal: return "optimal";
    case OpfStatus::kInfeasible: return "infeasible";
    case OpfStatus::kGapLimit: return "gap-limit";
    case OpfStatus::kNoIncumbent: return "no-incumbent";
    case OpfStatus::kSolverFailure: return "solver-failure";
  }
  return "?";
}

std::vector<std::vector<int>> OpfModel::bit_groups() const {
  std::vector<std::vector<int>> groups;
  for (const auto& enc : taps) {
    std::vector<int> g;
    for (VarId b : enc.bits) g.push_back(b.index);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<int> OpfModel::tap_limits() const {
  std::vector<int> k;
  for (const auto& enc : taps) k.push_back(enc.k_taps);
  return k;
}

OpfModel build_opf(const NetworkCase& c, const OpfOptions& options) {
  OpfModel model;
  model.options = options;
  model.pu_case = to_per_unit(c);
  const NetworkCase& pu = model.pu_case;
  model.topology = validate_radial(pu);
  const Topology& topo = model.topology;
  auto& prog = model.program;
  const std::size_t nb = pu.buses.size();
  const std::size_t ne = pu.branches.size();

  const int slack = topo.root;
  const double u0 = pu.slack_voltage * pu.slack_voltage;
  model.u.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& b = pu.buses[i];
    const std::string name = "U[" + std::to_string(b.id) + "]";
    const VarTag tag{VarRole::kVoltageSq, static_cast<int>(i), -1};
    model.u[i] = static_cast<int>(i) == slack ? prog.add_variable(name, u0, u0, tag)
                                             : prog.add_variable(name, b.v_min * b.v_min, b.v_max * b.v_max, tag);
  }

  model.p.resize(ne);
  model.q.resize(ne);
  model.l.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& br = pu.branches[e];
    const std::string lbl = br.label();
    const double l_max = br.i_max ? (*br.i_max) * (*br.i_max) : options.default_current_cap;
    const double u_hi = prog.variables[model.u[pu.bus_index(br.from)].index].ub;
    const double flow_cap = std::sqrt(l_max * u_hi);
    const int ei = static_cast<int>(e);
    model.p[e] = prog.add_variable("P[" + lbl + "]", -flow_cap, flow_cap, VarTag{VarRole::kFlowP, ei, -1});
    model.q[e] = prog.add_variable("Q[" + lbl + "]", -flow_cap, flow_cap, VarTag{VarRole::kFlowQ, ei, -1});
    model.l[e] = prog.add_variable("L[" + lbl + "]", 0.0, l_max, VarTag{VarRole::kCurrentSq, ei, -1});
  }

  for (std::size_t g = 0; g < pu.generators.size(); ++g) {
    const auto& gen = pu.generators[g];
    const std::string sfx = "[" + std::to_string(g) + "@" + std::to_string(gen.bus) + "]";
    const int gi = static_cast<int>(g);
    model.pg.push_back(prog.add_variable("pg" + sfx, gen.p_min, gen.p_max, VarTag{VarRole::kGenP, gi, -1}));
    model.qg.push_back(prog.add_variable("qg" + sfx, gen.q_min, gen.q_max, VarTag{VarRole::kGenQ, gi, -1}));
  }

  // Power balance at every non-slack bus j with parent branch ij:
  //   P_ij - r L_ij + sum pg - p_load = sum_k P_jk  (same for Q with x).
  for (std::size_t j = 0; j < nb; ++j) {
    const int e = topo.parent_branch[j];
    if (e < 0) continue;
    const auto& br = pu.branches[e];
    const std::string tag = std::to_string(pu.buses[j].id);
    std::vector<Term> pt{{model.p[e].index, 1.0}, {model.l[e].index, -br.r}};
    std::vector<Term> qt{{model.q[e].index, 1.0}, {model.l[e].index, -br.x}};
    for (int ch : topo.children[j]) {
      pt.push_back({model.p[ch].index, -1.0});
      qt.push_back({model.q[ch].index, -1.0});
    }
    for (std::size_t g = 0; g < pu.generators.size(); ++g) {
      if (pu.bus_index(pu.generators[g].bus) != static_cast<int>(j)) continue;
      pt.push_back({model.pg[g].index, 1.0});
      qt.push_back({model.qg[g].index, 1.0});
    }
    prog.add_equality(std::move(pt), pu.buses[j].p_load, "p_balance[" + tag + "]");
    prog.add_equality(std::move(qt), pu.buses[j].q_load, "q_balance[" + tag + "]");
  }

  // Voltage drop, tap encoding and current cone per branch.
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& br = pu.branches[e];
    const int i = pu.bus_index(br.from);
    const int j = pu.bus_index(br.to);
    const double z2 = br.r * br.r + br.x * br.x;
    VarId downstream = model.u[j];
    if (br.is_transformer()) {
      const std::string name = br.label();
      TapEncoding enc = options.tap_model == TapModel::kExact
                            ? encode_tap(prog, *br.tap, model.u[j], options.linearization, name, static_cast<int>(e))
                            : encode_tap_approximate(prog, *br.tap, model.u[j], options.linearization,
                                                     options.approximate_form, name, static_cast<int>(e));
      downstream = enc.u_tap;
      model.taps.push_back(std::move(enc));
    }
    prog.add_equality({{model.u[i].index, 1.0},
                       {downstream.index, -1.0},
                       {model.p[e].index, -2.0 * br.r},
                       {model.q[e].index, -2.0 * br.x},
                       {model.l[e].index, z2}},
                      0.0, "v_drop[" + br.label() + "]");
    prog.add_rotated_cone(model.l[e], model.u[i], {model.p[e], model.q[e]}, "current[" + br.label() + "]");
  }

  for (std::size_t e = 0; e < ne; ++e) prog.objective.push_back({model.l[e].index, pu.branches[e].r});
  prog.check();
  return model;
}

double OpfSolution::max_cone_gap() const {
  double m = 0.0;
  for (double g : cone_gaps) m = std::max(m, std::abs(g));
  return m;
}

double OpfSolution::max_bigm_gap() const {
  double m = 0.0;
  for (double g : bigm_gaps) m = std::max(m, g);
  return m;
}

OpfSolution extract_solution(const OpfModel& model, const std::vector<double>& x, double int_tol) {
  if (x.size() != model.program.variables.size()) {
    throw InputError("solver point has " + std::to_string(x.size()) + " entries, program has " +
                     std::to_string(model.program.variables.size()));
  }
  const NetworkCase& pu = model.pu_case;
  OpfSolution sol;
  sol.binaries = model.program.num_binaries();
  for (VarId v : model.u) sol.u.push_back(x[v.index]);
  for (std::size_t e = 0; e < pu.branches.size(); ++e) {
    sol.p.push_back(x[model.p[e].index]);
    sol.q.push_back(x[model.q[e].index]);
    sol.l.push_back(x[model.l[e].index]);
    const int i = pu.bus_index(pu.branches[e].from);
    sol.cone_gaps.push_back(sol.l[e] * sol.u[i] - (sol.p[e] * sol.p[e] + sol.q[e] * sol.q[e]));
  }
  for (std::size_t g = 0; g < model.pg.size(); ++g) {
    sol.dispatch.p.push_back(x[model.pg[g].index]);
    sol.dispatch.q.push_back(x[model.qg[g].index]);
  }
  for (const auto& enc : model.taps) {
    std::vector<double> vals;
    for (VarId b : enc.bits) vals.push_back(x[b.index]);
    const DecodedTap d = decode_tap(enc, round_bits(vals, int_tol));
    sol.taps.positions.push_back(d.position);
    sol.ratios.push_back(d.ratio);
    const double uj = x[enc.u.index];
    const double ujt = x[enc.u_tap.index];
    sol.u_tap.push_back(ujt);
    sol.effective_ratios.push_back(uj > 0.0 ? std::sqrt(ujt / uj) : 0.0);
    sol.bigm_gaps.push_back(std::abs(ujt - d.ratio * d.ratio * uj));
  }
  sol.objective_pu = model.program.objective_value(x);
  sol.losses_kw = sol.objective_pu * pu.base_mva * 1000.0;
  return sol;
}

void pin_taps(const OpfModel& model, const TapAssignment& taps, std::vector<double>& lb, std::vector<double>& ub) {
  if (taps.positions.size() != model.taps.size()) {
    throw InputError("expected " + std::to_string(model.taps.size()) + " tap positions, got " +
                     std::to_string(taps.positions.size()));
  }
  for (std::size_t k = 0; k < model.taps.size(); ++k) {
    const auto& enc = model.taps[k];
    const int t = taps.positions[k];
    if (t < 0 || t > enc.k_taps) {
      throw InputError("tap " + std::to_string(t) + " out of range [0, " + std::to_string(enc.k_taps) +
                       "] on transformer " + enc.name);
    }
    const auto bits = canonical_bits(t, enc.n_bits);
    for (int n = 0; n < enc.n_bits; ++n) {
      lb[enc.bits[n].index] = ub[enc.bits[n].index] = bits[n];
    }
  }
}

OpfModel fix_taps(const OpfModel& model, const TapAssignment& taps) {
  OpfModel fixed = model;
  std::vector<double> lb;
  std::vector<double> ub;
  for (const auto& v : fixed.program.variables) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  pin_taps(model, taps, lb, ub);
  for (std::size_t j = 0; j < lb.size(); ++j) {
    fixed.program.variables[j].lb = lb[j];
    fixed.program.variables[j].ub = ub[j];
  }
  return fixed;
}

double net_injection_sum(const OpfModel& model, const std::vector<double>& x) {
  const NetworkCase& pu = model.pu_case;
  const Topology& topo = model.topology;
  double total = 0.0;
  for (const auto& b : pu.buses) total -= b.p_load;
  for (VarId g : model.pg) total += x[g.index];
  // Slack injection is whatever leaves the root plus the root load.
  double slack = pu.buses[topo.root].p_load;
  for (int ch : topo.children[topo.root]) slack += x[model.p[ch].index];
  return total + slack;
}

}  // namespace oltc

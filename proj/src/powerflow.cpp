#include "oltc/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <omp.h>

namespace oltc {

std::string TapAssignment::str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < positions.size(); ++i) os << (i ? "," : "") << positions[i];
  return os.str();
}

void check_taps(const NetworkCase& c, const TapAssignment& taps) {
  const auto tx = c.transformer_indices();
  if (taps.positions.size() != tx.size()) {
    throw InputError("expected " + std::to_string(tx.size()) + " tap positions, got " +
                     std::to_string(taps.positions.size()));
  }
  for (std::size_t k = 0; k < tx.size(); ++k) {
    const int K = c.branches[tx[k]].tap->k_taps;
    if (taps.positions[k] < 0 || taps.positions[k] > K) {
      throw InputError("tap " + std::to_string(taps.positions[k]) + " out of range [0, " +
                       std::to_string(K) + "] on branch " + c.branches[tx[k]].label());
    }
  }
}

const char* to_string(PowerFlowStatus s) {
  switch (s) {
    case PowerFlowStatus::kConverged: return "converged";
    case PowerFlowStatus::kNotConverged: return "not-converged";
    case PowerFlowStatus::kVoltageCollapse: return "voltage-collapse";
  }
  return "?";
}

const char* to_string(TapOutcome o) {
  switch (o) {
    case TapOutcome::kFeasible: return "feasible";
    case TapOutcome::kVoltageViolation: return "voltage-violation";
    case TapOutcome::kNotConverged: return "not-converged";
    case TapOutcome::kVoltageCollapse: return "voltage-collapse";
  }
  return "?";
}

namespace {

struct Injections {
  std::vector<double> p;
  std::vector<double> q;
};

Injections net_injections(const NetworkCase& pu, const std::optional<Dispatch>& dispatch) {
  Injections inj;
  inj.p.resize(pu.buses.size());
  inj.q.resize(pu.buses.size());
  for (std::size_t i = 0; i < pu.buses.size(); ++i) {
    inj.p[i] = -pu.buses[i].p_load;
    inj.q[i] = -pu.buses[i].q_load;
  }
  if (dispatch && (dispatch->p.size() != pu.generators.size() || dispatch->q.size() != pu.generators.size())) {
    throw InputError("dispatch size does not match generator count");
  }
  for (std::size_t g = 0; g < pu.generators.size(); ++g) {
    const auto& gen = pu.generators[g];
    double pg = gen.p_max;
    double qg = gen.q_max;
    if (dispatch) {
      pg = dispatch->p[g];
      qg = dispatch->q[g];
    } else if (!gen.is_fixed()) {
      throw InputError("generator at bus " + std::to_string(gen.bus) +
                       " is dispatchable; the power flow needs an explicit dispatch");
    }
    const int b = pu.bus_index(gen.bus);
    inj.p[b] += pg;
    inj.q[b] += qg;
  }
  return inj;
}

std::vector<double> branch_ratios(const NetworkCase& c, const TapAssignment& taps) {
  std::vector<double> ratio(c.branches.size(), 1.0);
  const auto tx = c.transformer_indices();
  for (std::size_t k = 0; k < tx.size(); ++k) {
    ratio[tx[k]] = c.branches[tx[k]].tap->ratio(taps.positions[k]);
  }
  return ratio;
}

double residual_with(const NetworkCase& pu, const Topology& topo, const Injections& inj,
                     const PowerFlowSolution& s) {
  double worst = 0.0;
  for (std::size_t j = 0; j < pu.buses.size(); ++j) {
    const int e = topo.parent_branch[j];
    if (e < 0) continue;
    const auto& br = pu.branches[e];
    double p_out = 0.0;
    double q_out = 0.0;
    for (int ch : topo.children[j]) {
      p_out += s.p_flow[ch];
      q_out += s.q_flow[ch];
    }
    const double bal_p = s.p_flow[e] - br.r * s.l[e] + inj.p[j] - p_out;
    const double bal_q = s.q_flow[e] - br.x * s.l[e] + inj.q[j] - q_out;
    const int i = topo.parent[j];
    const double z2 = br.r * br.r + br.x * br.x;
    const double drop = s.u[i] - s.u_tap[e] - 2.0 * (br.r * s.p_flow[e] + br.x * s.q_flow[e]) + z2 * s.l[e];
    const double tap = s.u_tap[e] - s.ratio[e] * s.ratio[e] * s.u[j];
    const double cur = s.l[e] * s.u[i] - (s.p_flow[e] * s.p_flow[e] + s.q_flow[e] * s.q_flow[e]);
    worst = std::max({worst, std::abs(bal_p), std::abs(bal_q), std::abs(drop), std::abs(tap), std::abs(cur)});
  }
  return worst;
}

}  // namespace

double branch_equation_residual(const NetworkCase& c, const PowerFlowSolution& s,
                                const std::optional<Dispatch>& dispatch) {
  const NetworkCase pu = to_per_unit(c);
  const Topology topo = validate_radial(pu);
  return residual_with(pu, topo, net_injections(pu, dispatch), s);
}

PowerFlowSolution solve_powerflow(const NetworkCase& c, const TapAssignment& taps,
                                  const PowerFlowSettings& settings,
                                  const std::optional<Dispatch>& dispatch) {
  check_taps(c, taps);
  const NetworkCase pu = to_per_unit(c);
  const Topology topo = validate_radial(pu);
  const Injections inj = net_injections(pu, dispatch);
  const std::size_t nb = pu.buses.size();
  const std::size_t ne = pu.branches.size();

  PowerFlowSolution s;
  s.ratio = branch_ratios(pu, taps);
  const double u0 = pu.slack_voltage * pu.slack_voltage;
  s.u.assign(nb, u0);
  s.l.assign(ne, 0.0);
  s.p_flow.assign(ne, 0.0);
  s.q_flow.assign(ne, 0.0);
  s.u_tap.assign(ne, u0);

  const std::vector<int> up = topo.leaves_to_root();
  for (int it = 1; it <= settings.max_iter; ++it) {
    s.iterations = it;
    // Backward: accumulate flows from the leaves with the current current estimate.
    for (int j : up) {
      const int e = topo.parent_branch[j];
      if (e < 0) continue;
      double p = -inj.p[j] + pu.branches[e].r * s.l[e];
      double q = -inj.q[j] + pu.branches[e].x * s.l[e];
      for (int ch : topo.children[j]) {
        p += s.p_flow[ch];
        q += s.q_flow[ch];
      }
      s.p_flow[e] = p;
      s.q_flow[e] = q;
    }
    // Forward: voltage drop on the impedance, then the ideal ratio at the child side.
    double delta = 0.0;
    for (int j : topo.root_to_leaves) {
      const int e = topo.parent_branch[j];
      if (e < 0) continue;
      const auto& br = pu.branches[e];
      const int i = topo.parent[j];
      const double z2 = br.r * br.r + br.x * br.x;
      s.u_tap[e] = s.u[i] - 2.0 * (br.r * s.p_flow[e] + br.x * s.q_flow[e]) + z2 * s.l[e];
      const double u_new = s.u_tap[e] / (s.ratio[e] * s.ratio[e]);
      if (!(u_new > 0.0)) {
        s.status = PowerFlowStatus::kVoltageCollapse;
        s.converged = false;
        s.residual = std::numeric_limits<double>::infinity();
        return s;
      }
      delta = std::max(delta, std::abs(u_new - s.u[j]));
      s.u[j] = u_new;
    }
    for (int j : topo.root_to_leaves) {
      const int e = topo.parent_branch[j];
      if (e < 0) continue;
      const int i = topo.parent[j];
      const double l_new = (s.p_flow[e] * s.p_flow[e] + s.q_flow[e] * s.q_flow[e]) / s.u[i];
      delta = std::max(delta, std::abs(l_new - s.l[e]));
      s.l[e] = l_new;
    }
    if (delta <= settings.tol) {
      s.residual = residual_with(pu, topo, inj, s);
      if (s.residual <= settings.tol) {
        s.converged = true;
        s.status = PowerFlowStatus::kConverged;
        break;
      }
    }
  }
  if (!s.converged) s.residual = residual_with(pu, topo, inj, s);

  s.losses_pu = 0.0;
  for (std::size_t e = 0; e < ne; ++e) s.losses_pu += s.l[e] * pu.branches[e].r;
  s.losses_kw = s.losses_pu * pu.base_mva * 1000.0;
  const int root = topo.root;
  s.slack_p = -inj.p[root];
  s.slack_q = -inj.q[root];
  for (int ch : topo.children[root]) {
    s.slack_p += s.p_flow[ch];
    s.slack_q += s.q_flow[ch];
  }
  return s;
}

bool within_voltage_bounds(const NetworkCase& c, const PowerFlowSolution& s, double tol) {
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const auto& b = c.buses[i];
    if (b.kind == BusKind::kSlack) continue;
    if (s.u[i] < b.v_min * b.v_min - tol || s.u[i] > b.v_max * b.v_max + tol) return false;
  }
  return true;
}

std::uint64_t tap_grid_size(const NetworkCase& c) {
  std::uint64_t n = 1;
  for (int e : c.transformer_indices()) {
    const auto k = static_cast<std::uint64_t>(c.branches[e].tap->k_taps) + 1;
    if (n > std::numeric_limits<std::uint64_t>::max() / k) return std::numeric_limits<std::uint64_t>::max();
    n *= k;
  }
  return n;
}

TapAssignment tap_at(const NetworkCase& c, std::uint64_t index) {
  const auto tx = c.transformer_indices();
  TapAssignment t;
  t.positions.assign(tx.size(), 0);
  for (std::size_t k = tx.size(); k-- > 0;) {
    const auto radix = static_cast<std::uint64_t>(c.branches[tx[k]].tap->k_taps) + 1;
    t.positions[k] = static_cast<int>(index % radix);
    index /= radix;
  }
  return t;
}

namespace {

TapEvaluation evaluate_point(const NetworkCase& c, const TapAssignment& taps, const PowerFlowSettings& pf) {
  TapEvaluation ev;
  ev.taps = taps;
  const PowerFlowSolution s = solve_powerflow(c, taps, pf);
  ev.iterations = s.iterations;
  ev.losses_kw = s.losses_kw;
  switch (s.status) {
    case PowerFlowStatus::kVoltageCollapse: ev.outcome = TapOutcome::kVoltageCollapse; break;
    case PowerFlowStatus::kNotConverged: ev.outcome = TapOutcome::kNotConverged; break;
    case PowerFlowStatus::kConverged:
      ev.outcome = within_voltage_bounds(c, s) ? TapOutcome::kFeasible : TapOutcome::kVoltageViolation;
      break;
  }
  return ev;
}

void check_cap(const NetworkCase& c, const EnumerationSettings& settings) {
  const std::uint64_t n = tap_grid_size(c);
  if (n > settings.cap) {
    throw InputError("tap grid has " + std::to_string(n) + " points, above the enumeration cap " +
                     std::to_string(settings.cap));
  }
}

// Table is in lexicographic order, so a strict '<' scan keeps the smallest tap vector on ties.
EnumerationResult summarize(std::vector<TapEvaluation> table) {
  EnumerationResult out;
  std::ptrdiff_t best = -1;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& ev = table[k];
    switch (ev.outcome) {
      case TapOutcome::kFeasible:
        ++out.feasible;
        if (best < 0 || ev.losses_kw < table[best].losses_kw) best = static_cast<std::ptrdiff_t>(k);
        break;
      case TapOutcome::kVoltageViolation: ++out.voltage_violations; break;
      default: ++out.not_converged; break;
    }
  }
  if (best < 0) throw InputError("no feasible tap assignment on the grid");
  out.best = table[best].taps;
  out.best_losses_kw = table[best].losses_kw;
  out.table = std::move(table);
  return out;
}

}  // namespace

EnumerationResult enumerate_taps_serial(const NetworkCase& c, const EnumerationSettings& settings) {
  check_cap(c, settings);
  const std::uint64_t n = tap_grid_size(c);
  std::vector<TapEvaluation> table(n);
  for (std::uint64_t k = 0; k < n; ++k) table[k] = evaluate_point(c, tap_at(c, k), settings.powerflow);
  return summarize(std::move(table));
}

EnumerationResult enumerate_taps(const NetworkCase& c, const EnumerationSettings& settings) {
  check_cap(c, settings);
  const auto n = static_cast<std::int64_t>(tap_grid_size(c));
  std::vector<TapEvaluation> table(n);
  bool failed = false;
  std::string failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      table[k] = evaluate_point(c, tap_at(c, static_cast<std::uint64_t>(k)), settings.powerflow);
    } catch (const std::exception& ex) {
#pragma omp critical(oltc_enumerate_failure)
      {
        failed = true;
        failure = ex.what();
      }
    }
  }
  if (failed) throw InputError(failure);
  return summarize(std::move(table));
}

}  // namespace oltc

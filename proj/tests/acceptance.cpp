// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
#include <omp.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oltc/bnb.hpp"
#include "oltc/linearization.hpp"
#include "oltc/opf.hpp"
#include "oltc/powerflow.hpp"
#include "oltc/presolve.hpp"
#include "oltc/scenario.hpp"

using namespace oltc;

namespace {

// Pinned tolerances.
constexpr double kBigMGapTol = 1e-6;         // p.u.^2, |U_jt - t^2 U_j|
constexpr double kOracleRelTol = 1e-3;       // fixed-tap objective vs sweep losses
constexpr double kConeGapTol = 1e-5;         // p.u.^2, l u - (p^2 + q^2)
constexpr double kEnumerationRelTol = 1e-3;  // B&B incumbent vs enumeration minimum
constexpr double kRelGap = 1e-6;             // B&B target
constexpr double kIdentityTol = 1e-9;        // exact - approximate tap-node identity
constexpr double kZeroLoadTol = 1e-9;        // objective, p.u.
constexpr double kCertificateTol = 1e-7;     // Farkas residual
constexpr double kBruteForceBudget = 300.0;  // s
constexpr double kScaleBudget = 600.0;       // s
constexpr double kOracleBudget = 60.0;       // s
constexpr int kRandomTapSamples = 20;
constexpr int kIdentitySamples = 1000;
constexpr std::uint64_t kSeed = 20240611;

std::string data(const char* name) { return std::string(OLTC_DATA_DIR) + "/" + name; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

NetworkCase with_step(const NetworkCase& c, const char* step) {
  ScenarioSpec s;
  s.delta_t = parse_step(step);
  return apply_tap_grid(c, s);
}

BnbSettings reference_settings() {
  BnbSettings s;
  s.rel_gap = kRelGap;
  s.threads = 1;
  return s;
}

struct Timed {
  OpfSolution solution;
  double seconds = 0.0;
};

// Timing covers model assembly and search, not case parsing.
Timed solve_timed(const NetworkCase& c, const BnbSettings& settings, const OpfOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  Timed t;
  t.solution = solve_opf(build_opf(c, opts), settings);
  t.seconds = seconds_since(t0);
  return t;
}

std::string taps_str(const TapAssignment& t) { return "[" + t.str() + "]"; }

int failures = 0;

void verdict(int id, bool pass, const std::string& summary) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", summary.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void detail(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// Optimal runs of the shipped feeder shared by several criteria.
struct GridRuns {
  std::vector<std::string> steps{"0.02", "0.01", "0.005"};
  std::vector<Timed> runs;
};

void criterion_1(const GridRuns& g, const Timed& k100) {
  double worst = 0.0;
  int optimal = 0;
  auto take = [&](const std::string& label, const OpfSolution& s) {
    if (s.status != OpfStatus::kOptimal) return;
    ++optimal;
    worst = std::max(worst, s.max_bigm_gap());
    detail(fmt("dt %-6s max |U_jt - t^2 U_j| = %.3e", label.c_str(), s.max_bigm_gap()));
  };
  for (std::size_t k = 0; k < g.runs.size(); ++k) take(g.steps[k], g.runs[k].solution);
  take("0.001", k100.solution);
  verdict(1, optimal >= 3 && worst <= kBigMGapTol,
          fmt("%d optimal MISOCP runs, worst big-M gap %.3e (tol %.0e)", optimal, worst, kBigMGapTol));
}

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkCase c = load_case(data("case33.json"));
  const OpfModel model = build_opf(c);
  std::mt19937_64 rng(kSeed);
  std::vector<std::uniform_int_distribution<int>> pick;
  for (int e : c.transformer_indices()) pick.emplace_back(0, c.branches[e].tap->k_taps);

  std::set<TapAssignment> seen;
  int accepted = 0;
  int rejected = 0;
  double worst_rel = 0.0;
  double worst_cone = 0.0;
  bool all_optimal = true;
  while (accepted < kRandomTapSamples && accepted + rejected < 100 * kRandomTapSamples) {
    TapAssignment taps;
    for (auto& d : pick) taps.positions.push_back(d(rng));
    if (!seen.insert(taps).second) continue;
    const PowerFlowSolution pf = solve_powerflow(c, taps);
    // Voltage-infeasible assignments have no fixed-tap optimum to compare.
    if (!pf.converged || !within_voltage_bounds(to_per_unit(c), pf)) {
      ++rejected;
      continue;
    }
    ++accepted;
    const OpfSolution s = solve_opf(fix_taps(model, taps));
    if (s.status != OpfStatus::kOptimal) {
      all_optimal = false;
      detail("taps " + taps_str(taps) + " fixed-tap solve " + to_string(s.status));
      continue;
    }
    const double rel = std::abs(s.losses_kw - pf.losses_kw) / pf.losses_kw;
    worst_rel = std::max(worst_rel, rel);
    worst_cone = std::max(worst_cone, s.max_cone_gap());
  }
  const double elapsed = seconds_since(t0);
  detail(fmt("%d samples accepted, %d voltage-infeasible rejected, seed %llu", accepted, rejected,
             static_cast<unsigned long long>(kSeed)));
  verdict(2,
          accepted == kRandomTapSamples && all_optimal && worst_rel <= kOracleRelTol && worst_cone <= kConeGapTol &&
              elapsed < kOracleBudget,
          fmt("worst relative loss difference %.3e (tol %.0e), worst cone gap %.3e (tol %.0e), %.1f s", worst_rel,
              kOracleRelTol, worst_cone, kConeGapTol, elapsed));
}

bool matches_enumeration(const char* label, const NetworkCase& c, const Timed& bnb, double& enum_seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  const EnumerationResult e = enumerate_taps_serial(c);
  enum_seconds = seconds_since(t0);
  const OpfSolution& s = bnb.solution;
  const double rel = std::abs(s.losses_kw - e.best_losses_kw) / e.best_losses_kw;
  detail(fmt("%s: %zu grid points, enumeration %s %.6f kW; B&B %s %.6f kW (%s, %ld nodes, %.1f s)", label,
             e.table.size(), taps_str(e.best).c_str(), e.best_losses_kw, taps_str(s.taps).c_str(), s.losses_kw,
             to_string(s.status), s.nodes, bnb.seconds));
  return s.status == OpfStatus::kOptimal && s.taps == e.best && rel <= kEnumerationRelTol;
}

void criterion_3(const Timed& case33_k5) {
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkCase single = load_case(data("feeder6_tx.json"));
  const Timed single_bnb = solve_timed(single, reference_settings());
  double t_single = 0.0;
  double t_case33 = 0.0;
  const bool a = matches_enumeration("one transformer, K=5", single, single_bnb, t_single);
  const bool b = matches_enumeration("33-bus, four transformers, K=5", load_case(data("case33.json")), case33_k5, t_case33);
  const double elapsed = seconds_since(t0) + case33_k5.seconds;
  verdict(3, a && b && elapsed < kBruteForceBudget,
          fmt("incumbents equal enumeration minima and tap vectors: %s / %s, %.1f s total", a ? "yes" : "no",
              b ? "yes" : "no", elapsed));
}

void criterion_4(const GridRuns& g, const NetworkCase& c) {
  bool ok = true;
  std::vector<int> want_bits{3, 4, 5};
  for (std::size_t k = 0; k < g.runs.size(); ++k) {
    const OpfSolution& s = g.runs[k].solution;
    const NetworkCase grid = with_step(c, g.steps[k].c_str());
    const OpfModel m = build_opf(grid);
    bool bits_ok = true;
    for (const auto& enc : m.taps) bits_ok = bits_ok && enc.n_bits == want_bits[k];
    ok = ok && bits_ok && s.status == OpfStatus::kOptimal;
    detail(fmt("dt %-6s K %3d  bits/transformer %d  losses %.6f kW  taps %s  %s", g.steps[k].c_str(), m.taps[0].k_taps,
               m.taps[0].n_bits, s.losses_kw, taps_str(s.taps).c_str(), to_string(s.status)));
  }
  for (std::size_t k = 1; k < g.runs.size(); ++k) {
    const double prev = g.runs[k - 1].solution.losses_kw;
    ok = ok && g.runs[k].solution.losses_kw <= prev + kRelGap * std::abs(prev);
  }
  verdict(4, ok, "losses non-increasing over nested grids 0.02 -> 0.01 -> 0.005; bit counts 3, 4, 5");
}

void criterion_5(const NetworkCase& c, const OpfSolution& exact) {
  const NetworkCase grid = with_step(c, "0.005");
  // The loss inequality and the identity have to hold for one and the same model, and the identity
  // only holds for the first-order form. The slope-2 form is solved and reported but does not gate.
  bool ok = exact.status == OpfStatus::kOptimal;
  for (ApproximateForm form : {ApproximateForm::kSlopeTwo, ApproximateForm::kFirstOrder}) {
    const bool gated = form == ApproximateForm::kFirstOrder;
    OpfOptions opts;
    opts.tap_model = TapModel::kApproximate;
    opts.approximate_form = form;
    const Timed approx = solve_timed(grid, reference_settings(), opts);
    const char* name = form == ApproximateForm::kSlopeTwo ? "slope-2 form" : "first-order form";
    if (approx.solution.status != OpfStatus::kOptimal) {
      if (gated) ok = false;
      detail(fmt("%s: %s", name, to_string(approx.solution.status)));
      continue;
    }
    const PowerFlowSolution pf = solve_powerflow(grid, approx.solution.taps);
    const bool within = pf.converged && within_voltage_bounds(to_per_unit(grid), pf);
    const bool not_better = pf.converged && pf.losses_kw >= exact.losses_kw * (1.0 - kRelGap);
    if (gated) ok = ok && not_better;
    std::string ratios;
    for (double r : approx.solution.ratios) ratios += fmt(" %.3f", r);
    detail(fmt("%s: taps %s ratios%s, oracle losses %.6f kW vs exact optimum %.6f kW%s%s", name,
               taps_str(approx.solution.taps).c_str(), ratios.c_str(), pf.losses_kw, exact.losses_kw,
               within ? "" : " (oracle voltages outside bounds)", gated ? "" : " [reported only]"));
  }

  std::mt19937_64 rng(kSeed + 1);
  std::uniform_int_distribution<int> tap(0, 20);
  std::uniform_real_distribution<double> u(0.95 * 0.95, 1.05 * 1.05);
  double worst = 0.0;
  for (int k = 0; k < kIdentitySamples; ++k) {
    const int t = tap(rng);
    const double v = u(rng);
    const double dt = 0.005;
    const double gap = exact_tap_node(0.95, dt, t, v) - approximate_tap_node(0.95, dt, t, v, ApproximateForm::kFirstOrder);
    worst = std::max(worst, std::abs(gap - (t * dt) * (t * dt) * v));
  }
  detail(fmt("identity exact - approximate = (T dt)^2 U on %d samples: worst error %.3e", kIdentitySamples, worst));
  verdict(5, ok && worst <= kIdentityTol,
          fmt("first-order approximate taps do not beat the exact optimum under the oracle; identity error %.1e (tol %.0e)", worst,
              kIdentityTol));
}

void criterion_6(const Timed& k5, const Timed& k20, const Timed& k100) {
  const OpfSolution& s = k100.solution;
  detail(fmt("K=5   %.1f s  %ld nodes", k5.seconds, k5.solution.nodes));
  detail(fmt("K=20  %.1f s  %ld nodes", k20.seconds, k20.solution.nodes));
  detail(fmt("K=100 %.1f s  %ld nodes  %zu binaries  status %s  gap %.2e", k100.seconds, s.nodes, s.binaries,
             to_string(s.status), s.bound_gap));
  const bool solved = s.status == OpfStatus::kOptimal && s.bound_gap <= kRelGap && s.binaries == 28;
  const bool trend = k5.seconds < k20.seconds && k20.seconds < k100.seconds;
  verdict(6, solved && k100.seconds < kScaleBudget && trend,
          fmt("K=100 single-threaded: %s in %.1f s (budget %.0f s); time grows with K: %s", to_string(s.status),
              k100.seconds, kScaleBudget, trend ? "yes" : "no"));
}

void criterion_7(const OpfSolution& serial_k5) {
  const OpfSolution zero = solve_opf(build_opf(load_case(data("zero_load.json"))), reference_settings());
  const bool zero_ok = zero.status == OpfStatus::kOptimal && std::abs(zero.objective_pu) <= kZeroLoadTol;
  detail(fmt("zero load: %s, objective %.3e p.u.", to_string(zero.status), zero.objective_pu));

  NetworkCase tight = load_case(data("two_bus.json"));
  tight.buses[1].v_min = 0.999;
  const OpfModel tm = build_opf(tight);
  const RelaxationResult root = solve_relaxation(tm.program);
  const OpfSolution tight_sol = solve_opf(tm, reference_settings());
  const bool cert_ok = root.status == SocpStatus::kInfeasible && root.raw.certificate_residual <= kCertificateTol &&
                       tight_sol.status == OpfStatus::kInfeasible;
  detail(fmt("unreachable voltage box: relaxation %s, certificate residual %.2e, MISOCP %s", to_string(root.status),
             root.raw.certificate_residual, to_string(tight_sol.status)));

  BnbSettings par = reference_settings();
  par.threads = std::max(4, omp_get_max_threads());
  const OpfSolution parallel = solve_opf(build_opf(load_case(data("case33.json"))), par);
  const double diff = std::abs(parallel.objective_pu - serial_k5.objective_pu);
  const bool par_ok = parallel.status == OpfStatus::kOptimal && diff <= kRelGap * std::abs(serial_k5.objective_pu);
  detail(fmt("33-bus K=5: serial %.9f p.u. %s, %d-wide parallel %.9f p.u. %s", serial_k5.objective_pu,
             taps_str(serial_k5.taps).c_str(), par.threads, parallel.objective_pu, taps_str(parallel.taps).c_str()));
  verdict(7, zero_ok && cert_ok && par_ok,
          fmt("zero-load objective, infeasibility certificate, serial vs parallel within rel_gap: %s / %s / %s",
              zero_ok ? "ok" : "bad", cert_ok ? "ok" : "bad", par_ok ? "ok" : "bad"));
}

}  // namespace

int main(int argc, char** argv) {
  // --skip-scale leaves out the K=100 run (criterion 6 is then reported FAIL as not run).
  bool skip_scale = false;
  for (int k = 1; k < argc; ++k) {
    if (std::strcmp(argv[k], "--skip-scale") == 0) skip_scale = true;
  }
  try {
    const NetworkCase c = load_case(data("case33.json"));
    GridRuns grid;
    for (const auto& step : grid.steps) grid.runs.push_back(solve_timed(with_step(c, step.c_str()), reference_settings()));

    Timed k100;
    if (!skip_scale) {
      BnbSettings s = reference_settings();
      s.node_limit = 10'000'000;
      s.time_limit_s = kScaleBudget;
      k100 = solve_timed(with_step(c, "0.001"), s);
    }

    criterion_1(grid, k100);
    criterion_2();
    criterion_3(grid.runs[0]);
    criterion_4(grid, c);
    criterion_5(c, grid.runs[2].solution);
    if (skip_scale) {
      verdict(6, false, "not run (--skip-scale)");
    } else {
      criterion_6(grid.runs[0], grid.runs[2], k100);
    }
    criterion_7(grid.runs[0].solution);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

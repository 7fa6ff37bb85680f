// Command-line front end for the tap-optimizing OPF toolkit.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oltc/bnb.hpp"
#include "oltc/linearization.hpp"
#include "oltc/network.hpp"
#include "oltc/opf.hpp"
#include "oltc/powerflow.hpp"
#include "oltc/program.hpp"
#include "oltc/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oltc;

namespace {

enum Exit { kSuccess = 0, kInfeasibleExit = 1, kInputExit = 2, kSolverExit = 3 };

// Solver flags; each option remembers whether it was given on the command line.
struct SolverFlags {
  std::string config;
  double rel_gap = 0.0;
  double socp_tol = 0.0;
  int max_iter = 0;
  long node_limit = 0;
  int threads = 0;
  std::string mode;
  CLI::Option* rel_gap_opt = nullptr;
  CLI::Option* socp_tol_opt = nullptr;
  CLI::Option* max_iter_opt = nullptr;
  CLI::Option* node_limit_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* mode_opt = nullptr;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "JSON config file with a \"solver\" block");
    rel_gap_opt = app->add_option("--rel-gap", rel_gap, "relative optimality gap");
    socp_tol_opt = app->add_option("--socp-tol", socp_tol, "conic solver feasibility / gap tolerance");
    max_iter_opt = app->add_option("--max-iter", max_iter, "conic solver iteration cap");
    node_limit_opt = app->add_option("--node-limit", node_limit, "branch-and-bound node cap");
    threads_opt = app->add_option("--threads", threads, "parallel node evaluations (1 = reference)");
    mode_opt = app->add_option("--solver", mode, "ipm | splitting");
  }
};

void set_tolerance(SocpSettings& s, double tol) {
  if (!(tol > 0.0)) throw InputError("socp_tol must be positive");
  s.feastol = tol;
  s.reltol = tol;
  s.abstol = tol * 1e-2;
}

SolverMode parse_solver_mode(const std::string& m) {
  if (m == "ipm") return SolverMode::kInteriorPoint;
  if (m == "splitting") return SolverMode::kSplitting;
  throw InputError("solver mode must be ipm or splitting, got '" + m + "'");
}

// Config values first, then any flag given explicitly on the command line.
BnbSettings solver_settings(const SolverFlags& f) {
  BnbSettings s;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw InputError("cannot open config " + f.config);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError("config " + f.config + ": " + e.what());
    }
    const json block = doc.contains("solver") ? doc["solver"] : doc;
    try {
      if (block.contains("rel_gap")) s.rel_gap = block["rel_gap"].get<double>();
      if (block.contains("socp_tol")) set_tolerance(s.socp, block["socp_tol"].get<double>());
      if (block.contains("max_iter")) s.socp.max_iter = block["max_iter"].get<int>();
      if (block.contains("node_limit")) s.node_limit = block["node_limit"].get<long>();
      if (block.contains("threads")) s.threads = block["threads"].get<int>();
      if (block.contains("mode")) s.socp.mode = parse_solver_mode(block["mode"].get<std::string>());
    } catch (const json::exception& e) {
      throw InputError("config " + f.config + ": " + e.what());
    }
  }
  if (f.rel_gap_opt && f.rel_gap_opt->count()) s.rel_gap = f.rel_gap;
  if (f.socp_tol_opt && f.socp_tol_opt->count()) set_tolerance(s.socp, f.socp_tol);
  if (f.max_iter_opt && f.max_iter_opt->count()) s.socp.max_iter = f.max_iter;
  if (f.node_limit_opt && f.node_limit_opt->count()) s.node_limit = f.node_limit;
  if (f.threads_opt && f.threads_opt->count()) s.threads = f.threads;
  if (f.mode_opt && f.mode_opt->count()) s.socp.mode = parse_solver_mode(f.mode);
  if (s.rel_gap < 0.0) throw InputError("rel_gap must be non-negative");
  if (s.socp.max_iter < 1) throw InputError("max_iter must be at least 1");
  if (s.node_limit < 1) throw InputError("node_limit must be at least 1");
  if (s.threads < 1) throw InputError("threads must be at least 1");
  return s;
}

TapAssignment parse_taps(const std::string& text) {
  TapAssignment t;
  std::string cleaned = text;
  for (char& ch : cleaned) {
    if (ch == ',' || ch == ';') ch = ' ';
  }
  std::istringstream in(cleaned);
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw InputError("bad tap position '" + token + "'");
    t.positions.push_back(v);
  }
  return t;
}

NetworkCase load_with_grid(const std::string& path, const std::string& dt) {
  NetworkCase c = load_case(path);
  if (dt.empty()) return c;
  ScenarioSpec spec;
  spec.delta_t = parse_step(dt);
  return apply_tap_grid(c, spec);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// Writes report.json and report.txt into a directory, or one JSON file when
// the target has a .json extension.
void write_outputs(const std::string& out, const json& doc, const std::string& text) {
  if (out.empty()) return;
  const fs::path target(out);
  if (target.extension() == ".json") {
    write_file(target, doc.dump(2) + "\n");
    return;
  }
  fs::create_directories(target);
  write_file(target / "report.json", doc.dump(2) + "\n");
  write_file(target / "report.txt", text);
}

int exit_for_status(const std::string& status) {
  if (status == "optimal" || status == "gap-limit") return kSuccess;
  if (status == "infeasible") return kInfeasibleExit;
  return kSolverExit;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---- pf ----

json powerflow_json(const NetworkCase& c, const TapAssignment& taps, const PowerFlowSolution& s) {
  json doc;
  doc["schema"] = "opf-powerflow/1";
  doc["case"] = c.name;
  doc["taps"] = taps.positions;
  doc["status"] = to_string(s.status);
  doc["iterations"] = s.iterations;
  doc["residual"] = s.residual;
  doc["losses_kw"] = s.losses_kw;
  json buses = json::array();
  for (std::size_t i = 0; i < c.buses.size() && i < s.u.size(); ++i) {
    buses.push_back({{"id", c.buses[i].id}, {"u", s.u[i]}, {"v", std::sqrt(std::max(0.0, s.u[i]))}});
  }
  doc["buses"] = std::move(buses);
  json branches = json::array();
  const double kw = c.base_mva * 1000.0;
  for (std::size_t e = 0; e < c.branches.size() && e < s.l.size(); ++e) {
    branches.push_back({{"branch", c.branches[e].label()},
                        {"p_kw", s.p_flow[e] * kw},
                        {"q_kvar", s.q_flow[e] * kw},
                        {"l", s.l[e]},
                        {"ratio", s.ratio[e]}});
  }
  doc["branches"] = std::move(branches);
  return doc;
}

std::string powerflow_text(const NetworkCase& c, const TapAssignment& taps, const PowerFlowSolution& s) {
  std::ostringstream os;
  os << "power flow " << c.name << "  taps [" << taps.str() << "]  status " << to_string(s.status) << "  iterations "
     << s.iterations << "\n";
  os << "losses " << fmt("%.6f", s.losses_kw) << " kW\n\n";
  os << "  bus        V p.u.       U p.u.^2\n";
  for (std::size_t i = 0; i < c.buses.size() && i < s.u.size(); ++i) {
    char line[96];
    std::snprintf(line, sizeof(line), "%5d  %12.6f  %13.6f\n", c.buses[i].id, std::sqrt(std::max(0.0, s.u[i])), s.u[i]);
    os << line;
  }
  os << "\n  branch         P kW        Q kvar      l p.u.^2    ratio\n";
  const double kw = c.base_mva * 1000.0;
  for (std::size_t e = 0; e < c.branches.size() && e < s.l.size(); ++e) {
    char line[128];
    std::snprintf(line, sizeof(line), "%8s  %12.4f  %12.4f  %12.6g  %7.4f\n", c.branches[e].label().c_str(),
                  s.p_flow[e] * kw, s.q_flow[e] * kw, s.l[e], s.ratio[e]);
    os << line;
  }
  return os.str();
}

// ---- enumerate ----

json enumeration_json(const NetworkCase& c, const EnumerationResult& r, bool table) {
  json doc;
  doc["schema"] = "opf-enumeration/1";
  doc["case"] = c.name;
  json k = json::array();
  for (int e : c.transformer_indices()) k.push_back(c.branches[e].tap->k_taps);
  doc["k_taps"] = std::move(k);
  doc["grid_points"] = r.table.size();
  doc["feasible"] = r.feasible;
  doc["voltage_violations"] = r.voltage_violations;
  doc["not_converged"] = r.not_converged;
  doc["best_taps"] = r.best.positions;
  doc["best_losses_kw"] = r.best_losses_kw;
  if (table) {
    json rows = json::array();
    for (const auto& t : r.table) {
      rows.push_back({{"taps", t.taps.positions}, {"outcome", to_string(t.outcome)}, {"losses_kw", t.losses_kw}});
    }
    doc["table"] = std::move(rows);
  }
  return doc;
}

std::string enumeration_text(const NetworkCase& c, const EnumerationResult& r) {
  std::ostringstream os;
  os << "enumeration " << c.name << "  grid points " << r.table.size() << "  feasible " << r.feasible
     << "  voltage violations " << r.voltage_violations << "  not converged " << r.not_converged << "\n";
  os << "best taps [" << r.best.str() << "]  losses " << fmt("%.6f", r.best_losses_kw) << " kW\n";
  const auto tx = c.transformer_indices();
  for (std::size_t k = 0; k < tx.size(); ++k) {
    os << "  " << c.branches[tx[k]].label() << "  T " << r.best.positions[k] << "  ratio "
       << fmt("%.6f", c.branches[tx[k]].tap->ratio(r.best.positions[k])) << "\n";
  }
  return os.str();
}

// ---- lin-audit ----

// Places the exact product point for tap T at voltage u and measures how far
// the emitted rows are from holding there.
double encoding_residual(const MixedIntegerConicProgram& prog, const TapEncoding& enc, int tap, double u) {
  std::vector<double> x(prog.variables.size(), 0.0);
  const double t = enc.t_min + tap * enc.delta_t;
  const std::vector<int> bits = canonical_bits(tap, enc.n_bits);
  x[enc.u.index] = u;
  x[enc.u_tap.index] = t * t * u;
  if (enc.m.valid()) x[enc.m.index] = t * u;
  for (int n = 0; n < enc.n_bits; ++n) {
    x[enc.bits[n].index] = bits[n];
    if (n < static_cast<int>(enc.x_vars.size())) x[enc.x_vars[n].index] = bits[n] * u;
    if (n < static_cast<int>(enc.y_vars.size())) x[enc.y_vars[n].index] = bits[n] * t * u;
  }
  double worst = 0.0;
  for (std::size_t r = enc.eq_rows.first; r < enc.eq_rows.second; ++r) {
    const auto& row = prog.eq_rows[r];
    worst = std::max(worst, std::abs(row_activity(row, x) - row.rhs));
  }
  for (std::size_t r = enc.ineq_rows.first; r < enc.ineq_rows.second; ++r) {
    const auto& row = prog.ineq_rows[r];
    worst = std::max(worst, row_activity(row, x) - row.rhs);
  }
  return worst;
}

std::string lin_audit(const OpfModel& model, const NetworkCase& c, int branch) {
  const TapEncoding* enc = nullptr;
  for (const auto& e : model.taps) {
    if (e.branch == branch) enc = &e;
  }
  if (!enc) throw InputError("branch " + c.branches[branch].label() + " has no tap changer");
  const auto& prog = model.program;
  std::ostringstream os;
  os << describe_encoding(prog, *enc) << "\n";
  const auto& uvar = prog.variables[enc->u.index];
  os << "row check at the exact product point, U at its bounds and midpoint\n";
  os << "    T      ratio    max row residual\n";
  double worst = 0.0;
  for (int tap = 0; tap <= enc->k_taps; ++tap) {
    double r = 0.0;
    for (double u : {uvar.lb, 0.5 * (uvar.lb + uvar.ub), uvar.ub}) r = std::max(r, encoding_residual(prog, *enc, tap, u));
    worst = std::max(worst, r);
    char line[96];
    std::snprintf(line, sizeof(line), "%5d  %9.5f  %18.3e\n", tap, enc->t_min + tap * enc->delta_t, r);
    os << line;
  }
  os << "worst residual " << fmt("%.3e", worst) << "\n";
  return os.str();
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputExit;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputExit;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverExit;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal power flow with exact on-load tap-changer modeling"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "solve the tap-optimizing OPF on one case");
  std::string run_case, run_dt, run_fixed, run_out, run_k;
  bool run_approx = false;
  bool run_json = false;
  SolverFlags run_flags;
  run->add_option("--case", run_case, "case file")->required();
  run->add_option("--dt", run_dt, "uniform tap step, e.g. 0.005 or 1/200");
  run->add_option("--k", run_k, "tap counts per transformer, e.g. 20,20,20,20");
  auto* approx_opt = run->add_flag("--approx", run_approx, "use the approximate tap model");
  run->add_option("--fixed", run_fixed, "fixed tap positions, e.g. 3,1,2,4")->excludes(approx_opt);
  run->add_option("--out", run_out, "output directory (or .json file)");
  run->add_flag("--json", run_json, "print the JSON report instead of the table");
  run_flags.add_to(run);

  // pf
  auto* pf = app.add_subcommand("pf", "fixed-tap power flow");
  std::string pf_case, pf_taps, pf_dt, pf_out;
  bool pf_json = false;
  pf->add_option("--case", pf_case, "case file")->required();
  pf->add_option("--taps", pf_taps, "tap positions, e.g. 2,2,2,2")->required();
  pf->add_option("--dt", pf_dt, "uniform tap step");
  pf->add_option("--out", pf_out, "output directory (or .json file)");
  pf->add_flag("--json", pf_json, "print JSON");

  // enumerate
  auto* en = app.add_subcommand("enumerate", "brute-force search over the tap grid");
  std::string en_case, en_dt, en_out;
  bool en_json = false;
  bool en_table = false;
  int en_threads = 0;
  en->add_option("--case", en_case, "case file")->required();
  en->add_option("--dt", en_dt, "uniform tap step");
  en->add_option("--out", en_out, "output directory (or .json file)");
  en->add_option("--threads", en_threads, "worker threads (1 = serial reference, 0 = OpenMP default)");
  en->add_flag("--json", en_json, "print JSON");
  en->add_flag("--table", en_table, "include every grid point in the JSON");

  // lin-audit
  auto* la = app.add_subcommand("lin-audit", "list and check the tap rows of one transformer");
  std::string la_case, la_branch, la_dt;
  bool la_approx = false;
  la->add_option("--case", la_case, "case file")->required();
  la->add_option("--branch", la_branch, "branch as from-to label or position")->required();
  la->add_option("--dt", la_dt, "uniform tap step");
  la->add_flag("--approx", la_approx, "audit the approximate encoding");

  // dump-model
  auto* dm = app.add_subcommand("dump-model", "print the assembled mixed-integer program");
  std::string dm_case, dm_dt, dm_out;
  bool dm_approx = false;
  dm->add_option("--case", dm_case, "case file")->required();
  dm->add_option("--dt", dm_dt, "uniform tap step");
  dm->add_option("--out", dm_out, "write to a file instead of stdout");
  dm->add_flag("--approx", dm_approx, "use the approximate tap model");

  // scenarios
  auto* sc = app.add_subcommand("scenarios", "run the step-size battery on one case");
  std::string sc_case, sc_out;
  int sc_max_k = 200;
  bool sc_parallel = false;
  bool sc_json = false;
  SolverFlags sc_flags;
  sc->add_option("--case", sc_case, "case file")->required();
  sc->add_option("--max-k", sc_max_k, "skip steps with more tap positions than this");
  sc->add_option("--out", sc_out, "output directory (or .json file)");
  sc->add_flag("--parallel", sc_parallel, "run scenarios concurrently (timings informational)");
  sc->add_flag("--json", sc_json, "print the JSON report instead of the table");
  sc_flags.add_to(sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kInputExit;
  }

  if (*run) {
    return run_guarded([&] {
      ScenarioSpec spec;
      spec.name = "run";
      spec.case_path = run_case;
      spec.solver = solver_settings(run_flags);
      if (!run_dt.empty()) spec.delta_t = parse_step(run_dt);
      if (!run_k.empty()) spec.k_taps = parse_taps(run_k).positions;
      if (run_approx) spec.mode = ScenarioMode::kApproximate;
      if (!run_fixed.empty()) {
        spec.mode = ScenarioMode::kFixed;
        spec.fixed_taps = parse_taps(run_fixed);
      }
      // Surface input problems as input errors before any solving.
      const NetworkCase c = apply_tap_grid(load_case(spec.case_path), spec);
      if (spec.fixed_taps) check_taps(c, *spec.fixed_taps);

      const RunReport report = run_scenarios({spec});
      const json doc = report_to_json(report);
      const std::string text = report_to_text(report);
      std::cout << (run_json ? doc.dump(2) + "\n" : text);
      write_outputs(run_out, doc, text);
      const ScenarioRow& row = report.rows.front();
      if (row.status == "error") std::cerr << "error: " << row.error << "\n";
      return exit_for_status(row.status);
    });
  }
  if (*pf) {
    return run_guarded([&] {
      const NetworkCase c = load_with_grid(pf_case, pf_dt);
      const TapAssignment taps = parse_taps(pf_taps);
      check_taps(c, taps);
      const PowerFlowSolution s = solve_powerflow(c, taps);
      const NetworkCase pu = to_per_unit(c);
      const json doc = powerflow_json(c, taps, s);
      const std::string text = powerflow_text(c, taps, s);
      std::cout << (pf_json ? doc.dump(2) + "\n" : text);
      write_outputs(pf_out, doc, text);
      if (!s.converged) return static_cast<int>(kSolverExit);
      return within_voltage_bounds(pu, s) ? static_cast<int>(kSuccess) : static_cast<int>(kInfeasibleExit);
    });
  }
  if (*en) {
    return run_guarded([&] {
      const NetworkCase c = load_with_grid(en_case, en_dt);
      EnumerationResult r;
      try {
        r = en_threads == 1 ? enumerate_taps_serial(c) : enumerate_taps(c);
      } catch (const InputError& e) {
        // No feasible grid point is an infeasible outcome, not bad input.
        if (std::string(e.what()).find("feasible") != std::string::npos) {
          std::cerr << "infeasible: " << e.what() << "\n";
          return static_cast<int>(kInfeasibleExit);
        }
        throw;
      }
      const json doc = enumeration_json(c, r, en_table);
      const std::string text = enumeration_text(c, r);
      std::cout << (en_json ? doc.dump(2) + "\n" : text);
      write_outputs(en_out, doc, text);
      return static_cast<int>(kSuccess);
    });
  }
  if (*la) {
    return run_guarded([&] {
      const NetworkCase c = load_with_grid(la_case, la_dt);
      const int branch = c.find_branch(la_branch);
      OpfOptions opts;
      if (la_approx) opts.tap_model = TapModel::kApproximate;
      const OpfModel model = build_opf(c, opts);
      if (la_approx) {
        for (const auto& e : model.taps) {
          if (e.branch == branch) std::cout << describe_encoding(model.program, e);
        }
      } else {
        std::cout << lin_audit(model, c, branch);
      }
      return static_cast<int>(kSuccess);
    });
  }
  if (*dm) {
    return run_guarded([&] {
      const NetworkCase c = load_with_grid(dm_case, dm_dt);
      OpfOptions opts;
      if (dm_approx) opts.tap_model = TapModel::kApproximate;
      const OpfModel model = build_opf(c, opts);
      const std::string text = dump_program(model.program);
      if (dm_out.empty()) {
        std::cout << text;
      } else {
        write_file(dm_out, text);
      }
      return static_cast<int>(kSuccess);
    });
  }
  if (*sc) {
    return run_guarded([&] {
      load_case(sc_case);
      const BnbSettings solver = solver_settings(sc_flags);
      RunOptions options;
      options.parallel = sc_parallel;
      const RunReport report = run_scenarios(default_battery(sc_case, solver, sc_max_k), options);
      const json doc = report_to_json(report);
      const std::string text = report_to_text(report);
      std::cout << (sc_json ? doc.dump(2) + "\n" : text);
      write_outputs(sc_out, doc, text);
      for (const auto& row : report.rows) {
        if (row.status == "error") return static_cast<int>(kSolverExit);
      }
      return static_cast<int>(kSuccess);
    });
  }
  return kInputExit;
}

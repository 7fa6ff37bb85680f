#include "oltc/scenario.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>

namespace oltc {

const char* to_string(ScenarioMode m) {
  switch (m) {
    case ScenarioMode::kExact: return "exact";
    case ScenarioMode::kApproximate: return "approximate";
    case ScenarioMode::kFixed: return "fixed";
    case ScenarioMode::kEnumerate: return "enumerate";
  }
  return "?";
}

ScenarioMode parse_scenario_mode(const std::string& text) {
  if (text == "exact") return ScenarioMode::kExact;
  if (text == "approximate" || text == "approx") return ScenarioMode::kApproximate;
  if (text == "fixed") return ScenarioMode::kFixed;
  if (text == "enumerate") return ScenarioMode::kEnumerate;
  throw InputError("unknown scenario mode '" + text + "'");
}

Rational parse_step(const std::string& text) {
  try {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
      const Rational num = Rational::parse_decimal(text.substr(0, slash));
      const Rational den = Rational::parse_decimal(text.substr(slash + 1));
      return num / den;
    }
    return Rational::parse_decimal(text);
  } catch (const std::exception& e) {
    throw InputError("bad tap step '" + text + "': " + e.what());
  }
}

int taps_for_step(const TapChanger& tap, const Rational& dt) {
  if (!(Rational(0, 1) < dt)) throw InputError("tap step must be positive");
  const Rational range = Rational::from_double(tap.t_max) - Rational::from_double(tap.t_min);
  const Rational k = range / dt;
  if (!k.is_integer() || k.num() < 1) {
    throw InputError("tap step " + dt.str() + " does not divide the ratio range " + range.str());
  }
  if (k.num() > (1 << 20)) throw InputError("tap step gives too many positions");
  return static_cast<int>(k.num());
}

NetworkCase apply_tap_grid(const NetworkCase& c, const ScenarioSpec& spec) {
  NetworkCase out = c;
  const auto tx = out.transformer_indices();
  if (!spec.k_taps.empty()) {
    if (spec.k_taps.size() != tx.size()) {
      throw InputError("expected " + std::to_string(tx.size()) + " tap counts, got " +
                       std::to_string(spec.k_taps.size()));
    }
    for (std::size_t k = 0; k < tx.size(); ++k) {
      if (spec.k_taps[k] < 1) throw InputError("tap count must be at least 1");
      out.branches[tx[k]].tap->k_taps = spec.k_taps[k];
    }
  }
  if (spec.delta_t) {
    for (int e : tx) out.branches[e].tap->k_taps = taps_for_step(*out.branches[e].tap, *spec.delta_t);
  }
  return out;
}

namespace {

double voltage_slack(const NetworkCase& pu, const std::vector<double>& u) {
  double slack = std::numeric_limits<double>::infinity();
  const int root = pu.slack_index();
  for (std::size_t i = 0; i < pu.buses.size(); ++i) {
    if (static_cast<int>(i) == root) continue;
    const Bus& b = pu.buses[i];
    slack = std::min({slack, u[i] - b.v_min * b.v_min, b.v_max * b.v_max - u[i]});
  }
  return std::isfinite(slack) ? slack : 0.0;
}

std::string format_step(const Rational& dt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", dt.to_double());
  return buf;
}

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

std::size_t free_binaries(const MixedIntegerConicProgram& prog) {
  std::size_t n = 0;
  for (const auto& v : prog.variables) n += v.binary && v.ub > v.lb;
  return n;
}

}  // namespace

Diagnostics diagnose(const OpfSolution& solution, const NetworkCase& c, const DiagnosticThresholds& thresholds) {
  Diagnostics d;
  d.max_cone_gap = solution.max_cone_gap();
  d.max_bigm_gap = solution.max_bigm_gap();
  d.model_losses_kw = solution.losses_kw;
  const NetworkCase pu = to_per_unit(c);
  d.model_voltage_slack = solution.u.empty() ? 0.0 : voltage_slack(pu, solution.u);
  const PowerFlowSolution pf = solve_powerflow(c, solution.taps, {}, solution.dispatch);
  d.oracle_status = pf.status;
  if (pf.converged) {
    d.oracle_losses_kw = pf.losses_kw;
    d.oracle_voltage_slack = voltage_slack(pu, pf.u);
    const double scale = std::max(std::abs(solution.losses_kw), 1e-9);
    d.relative_loss_difference = std::abs(pf.losses_kw - solution.losses_kw) / scale;
    if (std::abs(pf.losses_kw - solution.losses_kw) <= 1e-9) d.relative_loss_difference = 0.0;
  } else {
    d.flags.push_back(std::string("oracle ") + to_string(pf.status));
  }
  if (d.max_cone_gap > thresholds.cone_gap) d.flags.push_back("cone gap above threshold");
  if (d.max_bigm_gap > thresholds.bigm_gap) d.flags.push_back("big-M gap above threshold");
  if (pf.converged && d.relative_loss_difference > thresholds.oracle_rel_diff) {
    d.flags.push_back("oracle losses differ from the model");
  }
  if (pf.converged && d.oracle_voltage_slack < -1e-6) d.flags.push_back("oracle voltage outside bounds");
  return d;
}

namespace {

ScenarioRow run_one(const ScenarioSpec& spec, const std::map<std::string, TapAssignment>& solved,
                    const DiagnosticThresholds& thresholds) {
  ScenarioRow row;
  row.name = spec.name;
  row.mode = spec.mode;
  if (spec.delta_t) row.delta_t = format_step(*spec.delta_t);
  try {
    const NetworkCase loaded = load_case(spec.case_path);
    const auto start = std::chrono::steady_clock::now();
    const NetworkCase c = apply_tap_grid(loaded, spec);
    for (int e : c.transformer_indices()) row.k_taps.push_back(c.branches[e].tap->k_taps);
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    if (spec.mode == ScenarioMode::kEnumerate) {
      EnumerationSettings es;
      const EnumerationResult er = spec.solver.threads > 1 ? enumerate_taps(c, es) : enumerate_taps_serial(c, es);
      row.wall_time_s = elapsed();
      row.status = "optimal";
      row.taps = er.best;
      row.losses_kw = er.best_losses_kw;
      row.nodes = static_cast<long>(er.table.size());
      const auto tx = c.transformer_indices();
      for (std::size_t k = 0; k < tx.size(); ++k) row.ratios.push_back(c.branches[tx[k]].tap->ratio(er.best.positions[k]));
      return row;
    }

    OpfOptions opts = spec.opf;
    if (spec.mode == ScenarioMode::kApproximate) opts.tap_model = TapModel::kApproximate;
    OpfModel model = build_opf(c, opts);
    if (spec.mode == ScenarioMode::kFixed) {
      TapAssignment taps;
      if (spec.fixed_taps) {
        taps = *spec.fixed_taps;
      } else {
        const auto it = solved.find(spec.fixed_from);
        if (it == solved.end()) throw InputError("no solved taps from scenario '" + spec.fixed_from + "'");
        taps = it->second;
      }
      check_taps(c, taps);
      model = fix_taps(model, taps);
    }
    const OpfSolution sol = solve_opf(model, spec.solver);
    row.wall_time_s = elapsed();
    row.status = to_string(sol.status);
    row.binaries = free_binaries(model.program);
    row.nodes = sol.nodes;
    row.bound_gap = sol.bound_gap;
    if (sol.status == OpfStatus::kOptimal || sol.status == OpfStatus::kGapLimit) {
      row.taps = sol.taps;
      row.ratios = sol.ratios;
      row.losses_kw = sol.losses_kw;
      Diagnostics d = diagnose(sol, c, thresholds);
      if (spec.mode == ScenarioMode::kApproximate) {
        // The approximate model is expected to miss both checks; keep the numbers, drop the flags.
        std::erase_if(d.flags, [](const std::string& f) {
          return f == "big-M gap above threshold" || f == "oracle losses differ from the model";
        });
      }
      row.flagged = !d.flags.empty() || sol.status == OpfStatus::kGapLimit;
      row.diagnostics = std::move(d);
    } else {
      row.flagged = true;
    }
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
    row.flagged = true;
  }
  return row;
}

}  // namespace

RunReport run_scenarios(const std::vector<ScenarioSpec>& specs, const RunOptions& options) {
  RunReport report;
  report.timestamp = iso_timestamp();
  report.compiler = compiler_id();
  report.max_threads = omp_get_max_threads();
  report.rows.resize(specs.size());
  std::map<std::string, TapAssignment> solved;
  auto record = [&](std::size_t i) {
    const ScenarioRow& r = report.rows[i];
    if (r.status == "optimal" || r.status == "gap-limit") solved[r.name] = r.taps;
  };

  std::vector<std::size_t> independent;
  std::vector<std::size_t> dependent;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const bool deps = specs[i].mode == ScenarioMode::kFixed && !specs[i].fixed_taps;
    (options.parallel && deps ? dependent : independent).push_back(i);
  }
  if (options.parallel) {
    const std::map<std::string, TapAssignment> none;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t k = 0; k < independent.size(); ++k) {
      report.rows[independent[k]] = run_one(specs[independent[k]], none, options.thresholds);
    }
    for (std::size_t i : independent) record(i);
    for (std::size_t i : dependent) {
      report.rows[i] = run_one(specs[i], solved, options.thresholds);
      record(i);
    }
  } else {
    for (std::size_t i : independent) {
      report.rows[i] = run_one(specs[i], solved, options.thresholds);
      record(i);
    }
  }

  // Exact versus approximate at the same step.
  for (std::size_t a = 0; a < specs.size(); ++a) {
    if (specs[a].mode != ScenarioMode::kApproximate) continue;
    const ScenarioRow& ra = report.rows[a];
    for (std::size_t e = 0; e < specs.size(); ++e) {
      if (specs[e].mode != ScenarioMode::kExact) continue;
      const ScenarioRow& re = report.rows[e];
      if (re.k_taps != ra.k_taps || specs[e].case_path != specs[a].case_path) continue;
      if (!re.diagnostics || !ra.diagnostics) continue;
      ComparisonRow cmp;
      cmp.exact = re.name;
      cmp.approximate = ra.name;
      cmp.delta_t = re.delta_t;
      cmp.exact_ratios = re.ratios;
      cmp.approximate_ratios = ra.ratios;
      cmp.exact_losses_kw = re.losses_kw;
      cmp.approximate_oracle_losses_kw = ra.diagnostics->oracle_losses_kw;
      const double tol = specs[e].solver.rel_gap * std::abs(re.losses_kw) + 1e-9;
      cmp.approximate_not_better = cmp.approximate_oracle_losses_kw >= re.losses_kw - tol;
      report.comparisons.push_back(std::move(cmp));
      break;
    }
  }
  return report;
}

std::vector<ScenarioSpec> default_battery(const std::filesystem::path& case_path, const BnbSettings& solver,
                                          int max_k) {
  std::vector<ScenarioSpec> specs;
  const NetworkCase c = load_case(case_path);
  auto fits = [&](const Rational& dt) {
    for (int e : c.transformer_indices()) {
      if (taps_for_step(*c.branches[e].tap, dt) > max_k) return false;
    }
    return true;
  };
  auto add = [&](std::string name, const std::string& step, ScenarioMode mode) {
    const Rational dt = parse_step(step);
    if (!fits(dt)) return;
    ScenarioSpec s;
    s.name = std::move(name);
    s.case_path = case_path;
    s.delta_t = dt;
    s.mode = mode;
    s.solver = solver;
    specs.push_back(std::move(s));
  };
  add("1", "0.02", ScenarioMode::kExact);
  add("2", "0.01", ScenarioMode::kExact);
  add("3", "0.005", ScenarioMode::kExact);
  add("4", "0.002", ScenarioMode::kExact);
  add("5", "0.001", ScenarioMode::kExact);
  if (fits(parse_step("0.005"))) {
    ScenarioSpec s;
    s.name = "6-fixed";
    s.case_path = case_path;
    s.delta_t = parse_step("0.005");
    s.mode = ScenarioMode::kFixed;
    s.fixed_from = "3";
    s.solver = solver;
    specs.push_back(std::move(s));
  }
  add("6-k200", "0.0005", ScenarioMode::kExact);
  add("3-approx", "0.005", ScenarioMode::kApproximate);
  return specs;
}

namespace {

nlohmann::json diagnostics_json(const Diagnostics& d) {
  return {{"max_cone_gap", d.max_cone_gap},
          {"max_bigm_gap", d.max_bigm_gap},
          {"oracle_status", to_string(d.oracle_status)},
          {"oracle_losses_kw", d.oracle_losses_kw},
          {"model_losses_kw", d.model_losses_kw},
          {"relative_loss_difference", d.relative_loss_difference},
          {"model_voltage_slack", d.model_voltage_slack},
          {"oracle_voltage_slack", d.oracle_voltage_slack},
          {"flags", d.flags}};
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json doc;
  doc["schema"] = "opf-report/1";
  doc["environment"] = {{"timestamp", report.timestamp}, {"compiler", report.compiler},
                        {"max_threads", report.max_threads}};
  nlohmann::json rows = nlohmann::json::array();
  for (const ScenarioRow& r : report.rows) {
    nlohmann::json j = {{"name", r.name},
                        {"mode", to_string(r.mode)},
                        {"status", r.status},
                        {"delta_t", r.delta_t},
                        {"k_taps", r.k_taps},
                        {"taps", r.taps.positions},
                        {"ratios", r.ratios},
                        {"losses_kw", r.losses_kw},
                        {"wall_time_s", r.wall_time_s},
                        {"binaries", r.binaries},
                        {"nodes", r.nodes},
                        {"bound_gap", r.bound_gap},
                        {"flagged", r.flagged}};
    if (!r.error.empty()) j["error"] = r.error;
    if (r.diagnostics) j["diagnostics"] = diagnostics_json(*r.diagnostics);
    rows.push_back(std::move(j));
  }
  doc["scenarios"] = std::move(rows);
  nlohmann::json cmps = nlohmann::json::array();
  for (const ComparisonRow& c : report.comparisons) {
    cmps.push_back({{"exact", c.exact},
                    {"approximate", c.approximate},
                    {"delta_t", c.delta_t},
                    {"exact_ratios", c.exact_ratios},
                    {"approximate_ratios", c.approximate_ratios},
                    {"exact_losses_kw", c.exact_losses_kw},
                    {"approximate_oracle_losses_kw", c.approximate_oracle_losses_kw},
                    {"approximate_not_better", c.approximate_not_better}});
  }
  doc["comparisons"] = std::move(cmps);
  return doc;
}

nlohmann::json strip_volatile(nlohmann::json doc) {
  doc.erase("environment");
  if (doc.contains("scenarios")) {
    for (auto& row : doc["scenarios"]) row.erase("wall_time_s");
  }
  return doc;
}

namespace {

std::string join(const std::vector<double>& v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::string join(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1e", v);
  return buf;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : body) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    os << "\n";
  };
  line(header);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.push_back(std::string(w, '-'));
  line(rule);
  for (const auto& r : body) line(r);
  return os.str();
}

}  // namespace

std::string report_to_text(const RunReport& report) {
  std::vector<std::vector<std::string>> body;
  for (const ScenarioRow& r : report.rows) {
    char losses[32];
    char wall[32];
    std::snprintf(losses, sizeof(losses), "%.3f", r.losses_kw);
    std::snprintf(wall, sizeof(wall), "%.2f", r.wall_time_s);
    body.push_back({r.name, to_string(r.mode), r.delta_t, join(r.k_taps), std::to_string(r.binaries),
                    r.status, r.status == "error" ? "-" : losses, std::to_string(r.nodes), wall,
                    r.diagnostics ? sci(r.diagnostics->max_cone_gap) : "-",
                    r.diagnostics ? sci(r.diagnostics->max_bigm_gap) : "-", join(r.ratios, 4),
                    r.flagged ? (r.error.empty() ? "FLAG" : "FLAG: " + r.error) : ""});
  }
  std::string out = table({"scenario", "mode", "dt", "taps K", "binaries", "status", "losses kW", "nodes",
                           "time s", "cone gap", "bigM gap", "ratios", ""},
                          body);
  if (!report.comparisons.empty()) {
    std::vector<std::vector<std::string>> cmp;
    for (const ComparisonRow& c : report.comparisons) {
      char el[32];
      char al[32];
      std::snprintf(el, sizeof(el), "%.3f", c.exact_losses_kw);
      std::snprintf(al, sizeof(al), "%.3f", c.approximate_oracle_losses_kw);
      cmp.push_back({c.delta_t, join(c.exact_ratios, 4), el, join(c.approximate_ratios, 4), al,
                     c.approximate_not_better ? "yes" : "NO"});
    }
    out += "\n";
    out += table({"dt", "exact ratios", "exact kW", "approx ratios", "approx kW (oracle)", "approx >= exact"}, cmp);
  }
  return out;
}

}  // namespace oltc

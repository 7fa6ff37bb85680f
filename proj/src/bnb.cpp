#include "oltc/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>

namespace oltc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-9;
constexpr double kAbsGapFloor = 1e-10;

struct Evaluated {
  BnbNode node;
  RelaxationResult relax;
  bool fractional = false;
  int branch_var = -1;
  std::vector<int> rounded;
};

struct FixedSolve {
  bool feasible = false;
  double objective = kInf;
  std::vector<double> x;
  int iterations = 0;
};

class Search {
 public:
  Search(const MixedIntegerConicProgram& prog, const std::vector<TapGroup>& groups, const BnbSettings& s)
      : prog_(prog), groups_(groups), settings_(s) {
    for (const auto& v : prog_.variables) {
      lb_.push_back(v.lb);
      ub_.push_back(v.ub);
    }
    for (const auto& g : groups_) {
      for (int b : g.bits) bit_vars_.push_back(b);
    }
  }

  BnbResult run() {
    BnbNode root;
    root.parent_bound = -kInf;
    for (int v : bit_vars_) {
      root.lb.push_back(std::max(0.0, lb_[v]));
      root.ub.push_back(std::min(1.0, ub_[v]));
    }
    push(std::move(root));

    const auto start = std::chrono::steady_clock::now();
    bool root_done = false;
    while (!open_.empty()) {
      if (result_.stats.nodes >= settings_.node_limit) break;
      if (std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > settings_.time_limit_s) {
        time_limited_ = true;
        break;
      }
      if (has_incumbent_ && relative_gap(incumbent_obj_, global_bound()) <= settings_.rel_gap) break;

      std::vector<BnbNode> batch = select_batch();
      std::vector<Evaluated> evaluated(batch.size());
      const int n = static_cast<int>(batch.size());
      const double cutoff = prune_threshold();
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, settings_.threads)) if (n > 1)
      for (int k = 0; k < n; ++k) evaluated[k] = evaluate(std::move(batch[k]), cutoff);
      result_.stats.nodes += n;
      for (const auto& ev : evaluated) result_.stats.socp_iterations += ev.relax.raw.iterations;

      solve_heuristics(evaluated);

      for (auto& ev : evaluated) {
        if (!root_done) {
          root_done = true;
          if (ev.relax.status == SocpStatus::kInfeasible) {
            result_.status = OpfStatus::kInfeasible;
            result_.message = "root relaxation infeasible: " + ev.relax.raw.message;
            return finish(true);
          }
          if (ev.relax.status != SocpStatus::kOptimal) {
            result_.status = OpfStatus::kSolverFailure;
            result_.message = std::string("root relaxation failed: ") + to_string(ev.relax.status);
            return finish(true);
          }
        }
        process(ev);
      }
    }
    return finish(false);
  }

 private:
  void push(BnbNode node) {
    node.id = next_id_++;
    by_bound_.insert({node.parent_bound, node.id});
    open_.emplace(node.id, std::move(node));
  }

  BnbNode pop(long id) {
    auto it = open_.find(id);
    BnbNode node = std::move(it->second);
    open_.erase(it);
    by_bound_.erase({node.parent_bound, node.id});
    return node;
  }

  // Best bound once an incumbent exists; newest node (depth-first plunge) before.
  std::vector<BnbNode> select_batch() {
    std::vector<BnbNode> batch;
    const int want = std::max(1, settings_.threads);
    while (static_cast<int>(batch.size()) < want && !open_.empty()) {
      const long id = has_incumbent_ ? by_bound_.begin()->second : open_.rbegin()->first;
      batch.push_back(pop(id));
    }
    return batch;
  }

  double global_bound() const {
    double b = has_incumbent_ ? incumbent_obj_ : kInf;
    if (!by_bound_.empty()) b = std::min(b, by_bound_.begin()->first);
    return std::min(b, unresolved_bound_);
  }

  void apply_node_bounds(const BnbNode& node, std::vector<double>& lb, std::vector<double>& ub) const {
    lb = lb_;
    ub = ub_;
    for (std::size_t k = 0; k < bit_vars_.size(); ++k) {
      lb[bit_vars_[k]] = node.lb[k];
      ub[bit_vars_[k]] = node.ub[k];
    }
  }

  // Relaxations stop early once their certified bound passes the prune threshold.
  Evaluated evaluate(BnbNode node, double cutoff) const {
    Evaluated ev;
    std::vector<double> lb;
    std::vector<double> ub;
    apply_node_bounds(node, lb, ub);
    SocpSettings socp = settings_.socp;
    socp.cutoff = cutoff;
    ev.relax = solve_relaxation(prog_, lb, ub, socp);
    ev.node = std::move(node);
    if (ev.relax.status == SocpStatus::kOptimal) {
      ev.branch_var = branching_rule(groups_, ev.relax.x, settings_.int_tol);
      ev.fractional = ev.branch_var >= 0;
      ev.rounded = round_positions(groups_, ev.relax.x);
    }
    return ev;
  }

  std::vector<double> pinned_lb(const std::vector<int>& taps, std::vector<double>& ub) const {
    std::vector<double> lb = lb_;
    ub = ub_;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto& bits = groups_[g].bits;
      for (std::size_t n = 0; n < bits.size(); ++n) {
        const double v = static_cast<double>((taps[g] >> n) & 1);
        lb[bits[n]] = ub[bits[n]] = v;
      }
    }
    return lb;
  }

  FixedSolve solve_fixed(const std::vector<int>& taps, double cutoff) const {
    std::vector<double> ub;
    const std::vector<double> lb = pinned_lb(taps, ub);
    SocpSettings socp = settings_.socp;
    socp.cutoff = cutoff;
    const RelaxationResult r = solve_relaxation(prog_, lb, ub, socp);
    FixedSolve f;
    f.iterations = r.raw.iterations;
    if (r.status == SocpStatus::kOptimal) {
      f.feasible = true;
      f.objective = r.objective;
      f.x = r.x;
    }
    return f;
  }

  // Fixed-tap solves for every rounded vector not seen before, in parallel.
  void solve_heuristics(const std::vector<Evaluated>& evaluated) {
    std::vector<std::vector<int>> todo;
    for (const auto& ev : evaluated) {
      if (ev.relax.status != SocpStatus::kOptimal) continue;
      if (cache_.count(ev.rounded) || std::find(todo.begin(), todo.end(), ev.rounded) != todo.end()) continue;
      todo.push_back(ev.rounded);
    }
    std::vector<FixedSolve> solved(todo.size());
    const int n = static_cast<int>(todo.size());
    // A vector whose bound passes the incumbent cannot replace it, even on a tie.
    const double cutoff = has_incumbent_ ? incumbent_obj_ + 2.0 * kTieTol * std::max(1.0, std::abs(incumbent_obj_)) : kInf;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, settings_.threads)) if (n > 1)
    for (int k = 0; k < n; ++k) solved[k] = solve_fixed(todo[k], cutoff);
    result_.stats.heuristic_solves += n;
    for (int k = 0; k < n; ++k) {
      result_.stats.socp_iterations += solved[k].iterations;
      cache_.emplace(todo[k], solved[k]);
      if (solved[k].feasible) offer(solved[k].objective, todo[k], solved[k].x);
    }
  }

  void offer(double obj, const std::vector<int>& taps, const std::vector<double>& x) {
    const double tol = kTieTol * std::max(1.0, std::abs(obj));
    bool better = !has_incumbent_ || obj < incumbent_obj_ - tol;
    if (has_incumbent_ && !better && std::abs(obj - incumbent_obj_) <= tol && taps < incumbent_taps_) better = true;
    if (!better) return;
    has_incumbent_ = true;
    incumbent_obj_ = obj;
    incumbent_taps_ = taps;
    incumbent_x_ = x;
    prune_open();
  }

  double prune_threshold() const {
    return has_incumbent_ ? incumbent_obj_ - settings_.rel_gap * std::abs(incumbent_obj_) - kAbsGapFloor : kInf;
  }

  bool can_prune(double bound) const { return has_incumbent_ && bound >= prune_threshold(); }

  void prune_open() {
    while (!by_bound_.empty() && can_prune(std::prev(by_bound_.end())->first)) {
      pop(std::prev(by_bound_.end())->second);
      ++result_.stats.pruned_by_bound;
    }
  }

  void process(Evaluated& ev) {
    result_.stats.max_depth = std::max<long>(result_.stats.max_depth, ev.node.depth);
    const SocpStatus st = ev.relax.status;
    if (st == SocpStatus::kInfeasible) {
      ++result_.stats.pruned_infeasible;
      return;
    }
    if (st == SocpStatus::kCutoff) {
      ++result_.stats.pruned_by_bound;
      return;
    }
    if (st != SocpStatus::kOptimal) {
      ++result_.stats.numerical_failures;
      // Without a point we cannot prune; split on the heaviest free bit.
      const int k = first_free_bit(ev.node);
      if (k < 0) {
        unresolved_bound_ = std::min(unresolved_bound_, ev.node.parent_bound);
        return;
      }
      branch(ev.node, k, ev.node.parent_bound, true);
      return;
    }
    const double bound = std::max(ev.node.parent_bound, ev.relax.lower_bound);
    if (can_prune(bound)) {
      ++result_.stats.pruned_by_bound;
      return;
    }
    if (!ev.fractional) {
      ++result_.stats.integral_nodes;
      if (groups_.empty()) offer(ev.relax.objective, {}, ev.relax.x);
      return;
    }
    const int k = position_of(ev.branch_var);
    branch(ev.node, k, bound, ev.relax.x[ev.branch_var] >= 0.5);
  }

  int position_of(int var) const {
    return static_cast<int>(std::find(bit_vars_.begin(), bit_vars_.end(), var) - bit_vars_.begin());
  }

  int first_free_bit(const BnbNode& node) const {
    int best = -1;
    int best_bit = -1;
    int k = 0;
    for (const auto& g : groups_) {
      for (std::size_t n = 0; n < g.bits.size(); ++n, ++k) {
        if (node.lb[k] == node.ub[k]) continue;
        if (static_cast<int>(n) > best_bit) {
          best = k;
          best_bit = static_cast<int>(n);
        }
      }
    }
    return best;
  }

  // The preferred child is pushed last so the depth-first plunge visits it first.
  void branch(const BnbNode& node, int k, double bound, bool prefer_up) {
    BnbNode down = node;
    BnbNode up = node;
    down.ub[k] = 0.0;
    up.lb[k] = 1.0;
    for (BnbNode* child : {&down, &up}) {
      child->depth = node.depth + 1;
      child->parent_bound = bound;
    }
    if (prefer_up) {
      push(std::move(down));
      push(std::move(up));
    } else {
      push(std::move(up));
      push(std::move(down));
    }
  }

  BnbResult finish(bool root_failed) {
    BnbResult& r = result_;
    r.has_incumbent = has_incumbent_;
    if (root_failed) {
      r.best_bound = r.status == OpfStatus::kInfeasible ? kInf : -kInf;
      return r;
    }
    r.best_bound = global_bound();
    if (has_incumbent_) {
      r.x = incumbent_x_;
      r.taps = incumbent_taps_;
      r.objective = incumbent_obj_;
      r.best_bound = std::min(r.best_bound, incumbent_obj_);
      r.gap = relative_gap(incumbent_obj_, r.best_bound);
      r.status = r.gap <= settings_.rel_gap ? OpfStatus::kOptimal : OpfStatus::kGapLimit;
      if (r.status == OpfStatus::kGapLimit) r.message = time_limited_ ? "time limit reached" : "node limit reached";
    } else if (open_.empty() && unresolved_bound_ == kInf) {
      r.status = OpfStatus::kInfeasible;
      r.message = "every subproblem infeasible";
      r.best_bound = kInf;
    } else {
      r.status = open_.empty() ? OpfStatus::kSolverFailure : OpfStatus::kNoIncumbent;
      r.message = open_.empty() ? "subproblems failed numerically"
                  : time_limited_ ? "time limit reached without incumbent"
                                  : "node limit reached without incumbent";
      r.gap = kInf;
    }
    return r;
  }

  const MixedIntegerConicProgram& prog_;
  const std::vector<TapGroup>& groups_;
  BnbSettings settings_;
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<int> bit_vars_;

  std::map<long, BnbNode> open_;
  std::set<std::pair<double, long>> by_bound_;
  long next_id_ = 0;
  double unresolved_bound_ = kInf;
  bool time_limited_ = false;

  std::map<std::vector<int>, FixedSolve> cache_;
  bool has_incumbent_ = false;
  double incumbent_obj_ = kInf;
  std::vector<int> incumbent_taps_;
  std::vector<double> incumbent_x_;
  BnbResult result_;
};

}  // namespace

int branching_rule(const std::vector<TapGroup>& groups, const std::vector<double>& x, double int_tol) {
  int best = -1;
  double best_score = 0.0;
  int best_bit = -1;
  for (const auto& g : groups) {
    for (std::size_t n = 0; n < g.bits.size(); ++n) {
      const double v = x[g.bits[n]];
      const double score = std::min(std::abs(v), std::abs(1.0 - v));
      if (score <= int_tol) continue;
      const int bit = static_cast<int>(n);
      if (best < 0 || score > best_score + kTieTol || (std::abs(score - best_score) <= kTieTol && bit > best_bit)) {
        best = g.bits[n];
        best_score = score;
        best_bit = bit;
      }
    }
  }
  return best;
}

std::vector<int> round_positions(const std::vector<TapGroup>& groups, const std::vector<double>& x) {
  std::vector<int> out;
  for (const auto& g : groups) {
    double t = 0.0;
    for (std::size_t n = 0; n < g.bits.size(); ++n) t += std::ldexp(x[g.bits[n]], static_cast<int>(n));
    out.push_back(std::clamp(static_cast<int>(std::lround(t)), 0, g.k_taps));
  }
  return out;
}

double relative_gap(double incumbent, double bound) {
  if (bound >= incumbent) return 0.0;
  const double diff = incumbent - bound;
  if (diff <= kAbsGapFloor) return 0.0;
  return diff / std::max(std::abs(incumbent), kAbsGapFloor);
}

BnbResult branch_and_bound(const MixedIntegerConicProgram& prog, const std::vector<TapGroup>& groups,
                           const BnbSettings& settings) {
  for (const auto& g : groups) {
    for (int b : g.bits) {
      const auto& v = prog.variables.at(b);
      if (!v.binary || v.lb < 0.0 || v.ub > 1.0) throw InputError("bit variable " + v.name + " is not a [0,1] binary");
    }
  }
  return Search(prog, groups, settings).run();
}

std::vector<TapGroup> tap_groups(const OpfModel& model) {
  std::vector<TapGroup> groups;
  for (const auto& enc : model.taps) {
    TapGroup g;
    for (VarId b : enc.bits) g.bits.push_back(b.index);
    g.k_taps = enc.k_taps;
    groups.push_back(std::move(g));
  }
  return groups;
}

OpfSolution solve_opf(const OpfModel& model, const BnbSettings& settings) {
  const BnbResult r = branch_and_bound(model.program, tap_groups(model), settings);
  OpfSolution sol;
  if (r.has_incumbent) sol = extract_solution(model, r.x, settings.int_tol);
  sol.status = r.status;
  sol.bound_gap = r.gap;
  sol.best_bound_pu = r.best_bound;
  sol.nodes = r.stats.nodes;
  sol.binaries = model.program.num_binaries();
  return sol;
}

}  // namespace oltc

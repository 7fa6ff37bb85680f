#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/OrderingMethods>

#include "oltc/socp.hpp"
#include "oltc/sparse_ldl.hpp"

namespace oltc {

const char* to_string(SocpStatus s) {
  switch (s) {
    case SocpStatus::kOptimal: return "optimal";
    case SocpStatus::kInfeasible: return "infeasible";
    case SocpStatus::kUnbounded: return "unbounded";
    case SocpStatus::kIterationLimit: return "iteration-limit";
    case SocpStatus::kNumericalFailure: return "numerical-failure";
    case SocpStatus::kCutoff: return "cutoff";
  }
  return "?";
}

SocpResult solve_socp(const SocpProblem& prob, const SocpSettings& settings) {
  return settings.mode == SolverMode::kSplitting ? solve_socp_splitting(prob, settings)
                                                 : solve_socp_ipm(prob, settings);
}

namespace {

using Vec = Eigen::VectorXd;
using cone::ConeDims;
using cone::NtScaling;

// Newton system in Nesterov-Todd scaled form. With Gs = W^{-1} G and
// u = W dz, the system
//   [ 0   A'  Gs' ] [dx]   [r1]
//   [ A   0   0   ] [dy] = [r2]
//   [ Gs  0  -I   ] [u ]   [r3]
// is reduced to the quasi-definite
//   [ Gs'Gs + d I   A'  ]
//   [ A            -d I ]
// and solved with iterative refinement against the unregularized system.
class KktSystem {
 public:
  struct Solution {
    Vec x, y, u;
  };

  KktSystem(const SocpProblem& prob, double reg)
      : n_(prob.num_vars()), p_(prob.A.rows()), m_(prob.G.rows()), a_(prob.A), g_(prob.G),
        at_(prob.A.transpose()), gt_(prob.G.transpose()), dims_(prob.cones), reg_(reg) {
    build_pattern();
    gx_.resize(m_);
    wv_.resize(m_);
    tn_.resize(n_);
    tm_.resize(m_);
    work_.resize(n_ + p_);
  }

  void update(const NtScaling& w) { w_ = &w; }
  void use_identity_scaling() { w_ = nullptr; }

  bool factor() {
    std::fill(val_.begin(), val_.end(), 0.0);
    for (int j = 0; j < n_; ++j) val_[x_diag_[j]] += reg_;
    for (int i = 0; i < p_; ++i) val_[y_diag_[i]] -= reg_;
    for (const auto& [idx, v] : a_entries_) val_[idx] += v;
    for (int i = 0; i < dims_.n_lp; ++i) {
      const double sc = w_ ? 1.0 / (w_->lp_scale(i) * w_->lp_scale(i)) : 1.0;
      for (const auto& [idx, coef] : lp_contrib_[i]) val_[idx] += coef * sc;
    }
    for (std::size_t k = 0; k < dims_.soc.size(); ++k) {
      const int cone = static_cast<int>(k);
      for (const auto& c : soc_contrib_[k]) {
        const double b = w_ ? w_->soc_inverse_squared(cone, c.r, c.c) : (c.r == c.c ? 1.0 : 0.0);
        val_[c.index] += c.coef * b;
      }
    }
    return ldl_.factor(val_);
  }

  Solution solve(const Vec& r1, const Vec& r2, const Vec& r3, int refine) const {
    Solution sol;
    solve_reduced(r1, r2, r3, sol);
    const double target = refine_target_ * (1.0 + std::max({r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>(),
                                                            r3.lpNorm<Eigen::Infinity>()}));
    if (refine <= 0) return sol;
    double err = residual(sol, r1, r2, r3, err_);
    for (int k = 0; k < refine && err > target; ++k) {
      solve_reduced(err_.x, err_.y, err_.u, corr_);
      next_.x = sol.x + corr_.x;
      next_.y = sol.y + corr_.y;
      next_.u = sol.u + corr_.u;
      const double next_err = residual(next_, r1, r2, r3, next_err_);
      if (!(next_err < err)) break;
      std::swap(sol, next_);
      std::swap(err_, next_err_);
      err = next_err;
    }
    return sol;
  }

  int n() const { return n_; }
  int p() const { return p_; }
  int m() const { return m_; }

 private:
  struct SocContribution {
    int index;
    int r;
    int c;
    double coef;
  };

  // out = Gs x and out = Gs' v.
  void gs_times(const Vec& x, Vec& out) const {
    const int* ptr = gt_.outerIndexPtr();
    const int* ind = gt_.innerIndexPtr();
    const double* val = gt_.valuePtr();
    for (int i = 0; i < m_; ++i) {
      double acc = 0.0;
      for (int q = ptr[i]; q < ptr[i + 1]; ++q) acc += val[q] * x[ind[q]];
      gx_[i] = acc;
    }
    if (w_) {
      w_->apply_inverse_to(gx_, out);
    } else {
      out = gx_;
    }
  }
  void gs_transpose_times(const Vec& v, Vec& out) const {
    const double* src = v.data();
    if (w_) {
      w_->apply_inverse_to(v, wv_);
      src = wv_.data();
    }
    const int* ptr = g_.outerIndexPtr();
    const int* ind = g_.innerIndexPtr();
    const double* val = g_.valuePtr();
    out.resize(n_);
    for (int j = 0; j < n_; ++j) {
      double acc = 0.0;
      for (int q = ptr[j]; q < ptr[j + 1]; ++q) acc += val[q] * src[ind[q]];
      out[j] = acc;
    }
  }

  // Upper triangle of the permuted reduced matrix, and for every scaling entry
  // the list of value slots it feeds. Primal block first, then the equality
  // block: eliminating a -d pivot before the columns it couples to would put
  // A'A / d into the primal block.
  void build_pattern() {
    std::vector<std::vector<int>> row_cols(m_);
    for (int k = 0; k < g_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(g_, k); it; ++it) row_cols[it.row()].push_back(it.col());
    }
    auto row_value = [&](int r, int c) { return g_.coeff(r, c); };

    std::vector<Eigen::Triplet<double>> hpat;
    for (int j = 0; j < n_; ++j) hpat.emplace_back(j, j, 1.0);
    std::vector<std::vector<int>> block_cols;
    for (int i = 0; i < dims_.n_lp; ++i) {
      for (int a : row_cols[i]) {
        for (int b : row_cols[i]) hpat.emplace_back(a, b, 1.0);
      }
    }
    int start = dims_.n_lp;
    for (int d : dims_.soc) {
      std::vector<int> cols;
      for (int r = start; r < start + d; ++r) cols.insert(cols.end(), row_cols[r].begin(), row_cols[r].end());
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      for (int a : cols) {
        for (int b : cols) hpat.emplace_back(a, b, 1.0);
      }
      block_cols.push_back(std::move(cols));
      start += d;
    }
    SparseMatrix h(n_, n_);
    h.setFromTriplets(hpat.begin(), hpat.end());

    pos_.assign(n_ + p_, 0);
    Eigen::AMDOrdering<int> amd;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
    amd(h, perm);
    for (int k = 0; k < n_; ++k) pos_[perm.indices()(k)] = k;
    if (p_ > 0) {
      SparseMatrix aat = SparseMatrix(a_ * at_);
      for (int i = 0; i < p_; ++i) aat.coeffRef(i, i) += 1.0;
      amd(aat, perm);
      for (int k = 0; k < p_; ++k) pos_[n_ + perm.indices()(k)] = n_ + k;
    }

    // (row, col) with row <= col in permuted coordinates.
    auto upper = [&](int a, int b) {
      const int pa = pos_[a];
      const int pb = pos_[b];
      return pa <= pb ? std::pair<int, int>{pa, pb} : std::pair<int, int>{pb, pa};
    };
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < h.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
        const auto [r, c] = upper(static_cast<int>(it.row()), static_cast<int>(it.col()));
        trip.emplace_back(r, c, 0.0);
      }
    }
    for (int k = 0; k < a_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(a_, k); it; ++it) {
        const auto [r, c] = upper(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()));
        trip.emplace_back(r, c, 0.0);
      }
    }
    for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, 0.0);
    SparseMatrix mat(n_ + p_, n_ + p_);
    mat.setFromTriplets(trip.begin(), trip.end());
    mat.makeCompressed();
    std::vector<int> col_ptr(mat.outerIndexPtr(), mat.outerIndexPtr() + n_ + p_ + 1);
    std::vector<int> row_ind(mat.innerIndexPtr(), mat.innerIndexPtr() + mat.nonZeros());
    val_.assign(row_ind.size(), 0.0);

    auto slot = [&](int a, int b) {
      const auto [r, c] = upper(a, b);
      const auto begin = row_ind.begin() + col_ptr[c];
      const auto end = row_ind.begin() + col_ptr[c + 1];
      return static_cast<int>(std::lower_bound(begin, end, r) - row_ind.begin());
    };

    x_diag_.resize(n_);
    for (int j = 0; j < n_; ++j) x_diag_[j] = slot(j, j);
    y_diag_.resize(p_);
    for (int i = 0; i < p_; ++i) y_diag_[i] = slot(n_ + i, n_ + i);
    for (int k = 0; k < a_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(a_, k); it; ++it) {
        a_entries_.emplace_back(slot(n_ + static_cast<int>(it.row()), static_cast<int>(it.col())), it.value());
      }
    }
    lp_contrib_.resize(dims_.n_lp);
    for (int i = 0; i < dims_.n_lp; ++i) {
      for (int a : row_cols[i]) {
        for (int b : row_cols[i]) {
          if (pos_[a] > pos_[b]) continue;
          lp_contrib_[i].emplace_back(slot(a, b), row_value(i, a) * row_value(i, b));
        }
      }
    }
    soc_contrib_.resize(dims_.soc.size());
    start = dims_.n_lp;
    for (std::size_t k = 0; k < dims_.soc.size(); ++k) {
      const int d = dims_.soc[k];
      for (int a : block_cols[k]) {
        for (int b : block_cols[k]) {
          if (pos_[a] > pos_[b]) continue;
          const int idx = slot(a, b);
          for (int r = 0; r < d; ++r) {
            const double gra = row_value(start + r, a);
            if (gra == 0.0) continue;
            for (int c = 0; c < d; ++c) {
              const double gcb = row_value(start + c, b);
              if (gcb != 0.0) soc_contrib_[k].push_back({idx, r, c, gra * gcb});
            }
          }
        }
      }
      start += d;
    }
    ldl_.analyze(n_ + p_, col_ptr, row_ind);
  }

  double residual(const Solution& s, const Vec& r1, const Vec& r2, const Vec& r3, Solution& e) const {
    gs_transpose_times(s.u, tn_);
    e.x = r1 - tn_;
    e.x.noalias() -= at_ * s.y;
    e.y = r2;
    e.y.noalias() -= a_ * s.x;
    gs_times(s.x, tm_);
    e.u = r3 - tm_ + s.u;
    return std::max({e.x.lpNorm<Eigen::Infinity>(), e.y.lpNorm<Eigen::Infinity>(), e.u.lpNorm<Eigen::Infinity>()});
  }

  void solve_reduced(const Vec& r1, const Vec& r2, const Vec& r3, Solution& out) const {
    gs_transpose_times(r3, tn_);
    for (int i = 0; i < n_; ++i) work_[pos_[i]] = tn_[i] + r1[i];
    for (int i = 0; i < p_; ++i) work_[pos_[n_ + i]] = r2[i];
    ldl_.solve(work_.data());
    out.x.resize(n_);
    out.y.resize(p_);
    for (int i = 0; i < n_; ++i) out.x[i] = work_[pos_[i]];
    for (int i = 0; i < p_; ++i) out.y[i] = work_[pos_[n_ + i]];
    gs_times(out.x, out.u);
    out.u -= r3;
  }

  int n_;
  int p_;
  int m_;
  const SparseMatrix& a_;
  const SparseMatrix& g_;
  SparseMatrix at_;
  SparseMatrix gt_;
  ConeDims dims_;
  double reg_;
  const NtScaling* w_ = nullptr;

  std::vector<double> val_;
  std::vector<int> pos_;
  std::vector<int> x_diag_;
  std::vector<int> y_diag_;
  std::vector<std::pair<int, double>> a_entries_;
  std::vector<std::vector<std::pair<int, double>>> lp_contrib_;
  std::vector<std::vector<SocContribution>> soc_contrib_;
  SparseLdl ldl_;
  double refine_target_ = 1e-12;
  mutable Vec gx_, wv_, tn_, tm_;
  mutable std::vector<double> work_;
  mutable Solution err_, next_err_, corr_, next_;
};

struct Iterate {
  Vec x, y, z, s;
  double tau = 1.0;
  double kappa = 1.0;
};

struct Stats {
  double pcost = 0.0;
  double dcost = 0.0;
  double gap = 0.0;
  double relgap = std::numeric_limits<double>::infinity();
  double pres = 0.0;
  double dres = 0.0;
  double pinfres = std::numeric_limits<double>::infinity();
  double dinfres = std::numeric_limits<double>::infinity();
  double mu = 0.0;
  double kap_over_tau = 0.0;
  bool pinf_candidate = false;
  bool dinf_candidate = false;
};

struct Residuals {
  Vec rx, ry, rz;
  double rtau = 0.0;
};

enum class Exit { kContinue, kOptimal, kInfeasible, kUnbounded };

class InteriorPoint {
 public:
  InteriorPoint(const SocpProblem& prob, const SocpSettings& settings)
      : prob_(prob), settings_(settings), kkt_(prob, settings.static_regularization),
        at_(prob.A.transpose()), gt_(prob.G.transpose()) {
    cnorm_ = std::max(1.0, prob.c.norm());
    bnorm_ = std::max(1.0, prob.b.norm());
    hnorm_ = std::max(1.0, prob.h.norm());
  }

  SocpResult run() {
    SocpResult result;
    const int n = prob_.num_vars();
    const int p = static_cast<int>(prob_.A.rows());
    const int m = static_cast<int>(prob_.G.rows());
    if (prob_.cones.total() != m) {
      result.message = "cone dimensions do not match G";
      return result;
    }

    kkt_.use_identity_scaling();
    if (!kkt_.factor()) {
      result.message = "initial KKT factorization failed";
      return result;
    }
    // Primal start: min ||G x - h|| s.t. A x = b. Dual start: min ||z|| s.t. A'y + G'z + c = 0.
    Iterate it;
    {
      const auto sol = kkt_.solve(Vec::Zero(n), prob_.b, prob_.h, settings_.refinement_steps);
      it.x = sol.x;
      it.s = cone::push_into_interior(prob_.cones, -sol.u);
    }
    {
      const auto sol = kkt_.solve(-prob_.c, Vec::Zero(p), Vec::Zero(m), settings_.refinement_steps);
      it.y = sol.y;
      it.z = cone::push_into_interior(prob_.cones, sol.u);
    }

    std::optional<Iterate> best;
    Stats best_stats;
    Exit exit = Exit::kContinue;
    int iter = 0;
    for (; iter <= settings_.max_iter; ++iter) {
      const Residuals res = residuals(it);
      const Stats st = statistics(it, res);
      if (settings_.verbose) {
        std::fprintf(stderr, "%3d pcost %+.6e dcost %+.6e gap %.2e pres %.2e dres %.2e k/t %.2e mu %.2e\n", iter,
                     st.pcost, st.dcost, st.gap, st.pres, st.dres, st.kap_over_tau, st.mu);
      }
      exit = check_exit(it, st, settings_.feastol, settings_.abstol, settings_.reltol);
      if (exit != Exit::kContinue) {
        finish(result, it, st, exit, false);
        result.iterations = iter;
        return result;
      }
      if (!std::isfinite(st.pcost) || !std::isfinite(st.mu)) break;
      if (std::isfinite(settings_.cutoff) && prob_.x_bound.size() == n) {
        const double bound = certified_bound(it, res);
        if (bound > settings_.cutoff) {
          result.status = SocpStatus::kCutoff;
          result.iterations = iter;
          result.primal_objective = st.pcost;
          result.dual_objective = bound;
          result.primal_residual = st.pres;
          result.dual_residual = st.dres;
          result.gap = st.gap;
          result.message = "lower bound above cutoff";
          return result;
        }
      }
      if (!best || better(st, best_stats)) {
        best = it;
        best_stats = st;
      }
      if (iter == settings_.max_iter) break;

      if (!step(it, res, st)) break;
    }
    result.iterations = iter;
    // Fall back to the best iterate at reduced accuracy.
    const Iterate& fallback = best ? *best : it;
    const Stats st = statistics(fallback, residuals(fallback));
    exit = check_exit(fallback, st, settings_.feastol_inaccurate, settings_.abstol_inaccurate,
                      settings_.reltol_inaccurate);
    if (exit != Exit::kContinue) {
      finish(result, fallback, st, exit, true);
      return result;
    }
    finish(result, fallback, st, Exit::kOptimal, true);
    result.status = iter >= settings_.max_iter ? SocpStatus::kIterationLimit : SocpStatus::kNumericalFailure;
    result.message = iter >= settings_.max_iter ? "iteration limit reached" : "search direction became unreliable";
    return result;
  }

 private:
  Residuals residuals(const Iterate& it) const {
    Residuals r;
    r.rx = at_ * it.y + gt_ * it.z + it.tau * prob_.c;
    r.ry = it.tau * prob_.b - prob_.A * it.x;
    r.rz = it.s + prob_.G * it.x - it.tau * prob_.h;
    r.rtau = it.kappa + prob_.c.dot(it.x) + prob_.b.dot(it.y) + prob_.h.dot(it.z);
    return r;
  }

  // For feasible x: c'x = r'x - b'y - h'z + z's >= -b'y - h'z - sum |r_j| max|x_j|,
  // with (y, z, r) the iterate's dual point and residual divided by tau.
  double certified_bound(const Iterate& it, const Residuals& r) const {
    const double slack = r.rx.cwiseAbs().dot(prob_.x_bound) / it.tau;
    const double dual = -(prob_.b.dot(it.y) + prob_.h.dot(it.z)) / it.tau;
    const double bound = dual - slack + prob_.objective_offset;
    return bound - 1e-12 * (1.0 + std::abs(bound));
  }

  Stats statistics(const Iterate& it, const Residuals& r) const {
    Stats st;
    const double cx = prob_.c.dot(it.x);
    const double by_hz = prob_.b.dot(it.y) + prob_.h.dot(it.z);
    st.pcost = cx / it.tau + prob_.objective_offset;
    st.dcost = -by_hz / it.tau + prob_.objective_offset;
    st.gap = it.s.dot(it.z) / (it.tau * it.tau);
    const double scale = std::max(std::abs(st.pcost), std::abs(st.dcost));
    if (scale > 0.0) st.relgap = st.gap / scale;
    const double nx = it.x.norm() / it.tau;
    const double ns = it.s.norm() / it.tau;
    const double nyz = (it.y.norm() + it.z.norm()) / it.tau;
    st.pres = std::max(r.ry.norm() / it.tau / std::max(1.0, bnorm_ + nx),
                       r.rz.norm() / it.tau / std::max(1.0, hnorm_ + nx + ns));
    st.dres = r.rx.norm() / it.tau / std::max(1.0, cnorm_ + nyz);
    st.mu = (it.s.dot(it.z) + it.tau * it.kappa) / (prob_.cones.degree() + 1);
    st.kap_over_tau = it.kappa / it.tau;
    if (by_hz < 0.0) {
      st.pinf_candidate = true;
      st.pinfres = (at_ * it.y + gt_ * it.z).norm() / -by_hz;
    }
    if (cx < 0.0) {
      st.dinf_candidate = true;
      st.dinfres = std::max((prob_.A * it.x).norm(), (prob_.G * it.x + it.s).norm()) / -cx;
    }
    return st;
  }

  Exit check_exit(const Iterate& it, const Stats& st, double feastol, double abstol, double reltol) const {
    if (st.pres < feastol && st.dres < feastol && (st.gap < abstol || st.relgap < reltol) &&
        st.kap_over_tau < 1.0) {
      return Exit::kOptimal;
    }
    if (st.pinf_candidate && st.pinfres < feastol && it.tau < it.kappa) return Exit::kInfeasible;
    if (st.dinf_candidate && st.dinfres < feastol && it.tau < it.kappa) return Exit::kUnbounded;
    return Exit::kContinue;
  }

  static bool better(const Stats& a, const Stats& b) {
    return std::max({a.pres, a.dres, std::min(a.gap, a.relgap)}) <
           std::max({b.pres, b.dres, std::min(b.gap, b.relgap)});
  }

  void finish(SocpResult& out, const Iterate& it, const Stats& st, Exit exit, bool reduced) const {
    out.reduced_accuracy = reduced;
    out.primal_residual = st.pres;
    out.dual_residual = st.dres;
    out.gap = st.gap;
    switch (exit) {
      case Exit::kInfeasible: {
        const double scale = -(prob_.b.dot(it.y) + prob_.h.dot(it.z));
        out.status = SocpStatus::kInfeasible;
        out.y = it.y / scale;
        out.z = it.z / scale;
        out.x = Vec::Zero(it.x.size());
        out.s = Vec::Zero(it.s.size());
        out.certificate_residual = (at_ * out.y + gt_ * out.z).norm();
        out.primal_objective = std::numeric_limits<double>::infinity();
        out.dual_objective = std::numeric_limits<double>::infinity();
        out.message = "primal infeasible";
        return;
      }
      case Exit::kUnbounded: {
        const double scale = -prob_.c.dot(it.x);
        out.status = SocpStatus::kUnbounded;
        out.x = it.x / scale;
        out.s = it.s / scale;
        out.y = Vec::Zero(it.y.size());
        out.z = Vec::Zero(it.z.size());
        out.certificate_residual = std::max((prob_.A * out.x).norm(), (prob_.G * out.x + out.s).norm());
        out.primal_objective = -std::numeric_limits<double>::infinity();
        out.dual_objective = -std::numeric_limits<double>::infinity();
        out.message = "dual infeasible (unbounded)";
        return;
      }
      default:
        out.status = SocpStatus::kOptimal;
        out.x = it.x / it.tau;
        out.y = it.y / it.tau;
        out.z = it.z / it.tau;
        out.s = it.s / it.tau;
        out.primal_objective = st.pcost;
        out.dual_objective = st.dcost;
        if (prob_.x_bound.size() == prob_.num_vars()) out.certified_bound = certified_bound(it, residuals(it));
        out.message = reduced ? "optimal (reduced accuracy)" : "optimal";
        return;
    }
  }

  // One Mehrotra predictor-corrector step on the embedding, with every cone
  // quantity kept in the scaled space: u = W dz, s_hat = W^{-1} ds. Returns false
  // when the direction cannot be computed or no progress is possible.
  bool step(Iterate& it, const Residuals& res, const Stats& st) {
    const ConeDims& dims = prob_.cones;
    std::optional<NtScaling> w;
    try {
      w.emplace(dims, it.s, it.z);
    } catch (const std::exception&) {
      return false;
    }
    kkt_.update(*w);
    if (!kkt_.factor()) return false;
    const Vec& lambda = w->lambda();

    const auto d1 = kkt_.solve(-prob_.c, prob_.b, w->apply_inverse(prob_.h), settings_.refinement_steps);
    // c'x1 + b'y1 + h'z1 = -|W z1|^2, used directly so the sign is exact.
    const double denom = -d1.u.squaredNorm() - it.kappa / it.tau;
    const Vec rz_scaled = w->apply_inverse(res.rz);

    struct Direction {
      Vec dx, dy, u;
      double dtau = 0.0;
      double dkappa = 0.0;
    };
    auto direction = [&](double eta, const Vec& ds_scaled, double dk) {
      const auto d2 = kkt_.solve(-eta * res.rx, eta * res.ry, -eta * rz_scaled - ds_scaled, settings_.refinement_steps);
      const double num = -eta * res.rtau - dk / it.tau - prob_.c.dot(d2.x) - prob_.b.dot(d2.y) -
                         prob_.h.dot(w->apply_inverse(d2.u));
      Direction d;
      d.dtau = num / denom;
      d.dx = d2.x + d.dtau * d1.x;
      d.dy = d2.y + d.dtau * d1.y;
      d.u = d2.u + d.dtau * d1.u;
      d.dkappa = (dk - it.kappa * d.dtau) / it.tau;
      return d;
    };

    auto step_length = [&](const Vec& s_hat, const Vec& z_hat, double dtau, double dkappa) {
      double a = std::min(cone::max_step(dims, lambda, s_hat), cone::max_step(dims, lambda, z_hat));
      if (dtau < 0.0) a = std::min(a, -it.tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -it.kappa / dkappa);
      return a;
    };

    // Affine predictor.
    const Vec ds_aff_scaled = -lambda;
    const Direction aff = direction(1.0, ds_aff_scaled, -it.tau * it.kappa);
    const Vec s_hat_a = ds_aff_scaled - aff.u;
    const double alpha_a = std::min(1.0, step_length(s_hat_a, aff.u, aff.dtau, aff.dkappa));
    const double sigma = std::clamp(std::pow(1.0 - alpha_a, 3), 1e-4, 1.0);

    // Combined corrector.
    const Vec target = -cone::product(dims, lambda, lambda) - cone::product(dims, s_hat_a, aff.u) +
                       sigma * st.mu * cone::identity(dims);
    const Vec ds_scaled = cone::divide(dims, lambda, target);
    const double dk = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * st.mu;
    const Direction d = direction(1.0 - sigma, ds_scaled, dk);
    const Vec s_hat = ds_scaled - d.u;
    const double alpha_max = step_length(s_hat, d.u, d.dtau, d.dkappa);
    const double alpha = std::min(settings_.step_fraction * alpha_max, 1.0);
    if (settings_.verbose) std::fprintf(stderr, "    sigma %.3e alpha %.3e\n", sigma, alpha);
    if (!(alpha > 1e-10) || !std::isfinite(alpha)) return false;

    it.x += alpha * d.dx;
    it.y += alpha * d.dy;
    it.z += alpha * w->apply_inverse(d.u);
    it.s += alpha * w->apply(s_hat);
    it.tau += alpha * d.dtau;
    it.kappa += alpha * d.dkappa;
    return it.tau > 0.0 && it.kappa > 0.0;
  }

  const SocpProblem& prob_;
  const SocpSettings& settings_;
  KktSystem kkt_;
  SparseMatrix at_;
  SparseMatrix gt_;
  double cnorm_ = 1.0;
  double bnorm_ = 1.0;
  double hnorm_ = 1.0;
};

}  // namespace

SocpResult solve_socp_ipm(const SocpProblem& prob, const SocpSettings& settings) {
  InteriorPoint ipm(prob, settings);
  return ipm.run();
}

}  // namespace oltc

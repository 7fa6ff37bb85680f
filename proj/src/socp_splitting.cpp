#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SparseCholesky>

#include "oltc/socp.hpp"

namespace oltc {

// ADMM on  min c'x + I{Ax = b}(x) + I_K(s)  s.t.  G x + s = h, with a proximal
// term on x so the x-update matrix is quasi-definite for any G.
SocpResult solve_socp_splitting(const SocpProblem& prob, const SocpSettings& settings) {
  using Vec = Eigen::VectorXd;
  const int n = prob.num_vars();
  const int p = static_cast<int>(prob.A.rows());
  const int m = static_cast<int>(prob.G.rows());
  const double rho = settings.splitting_rho;
  const double sigma = 1e-6;
  const double eps_reg = 1e-9;

  SparseMatrix gtg = (prob.G.transpose() * prob.G).pruned();
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < gtg.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(gtg, k); it; ++it) trip.emplace_back(it.row(), it.col(), rho * it.value());
  }
  for (int j = 0; j < n; ++j) trip.emplace_back(j, j, sigma);
  for (int k = 0; k < prob.A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(prob.A, k); it; ++it) {
      trip.emplace_back(n + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), n + it.row(), it.value());
    }
  }
  for (int i = 0; i < p; ++i) trip.emplace_back(n + i, n + i, -eps_reg);
  SparseMatrix kkt(n + p, n + p);
  kkt.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt(kkt);

  SocpResult out;
  if (ldlt.info() != Eigen::Success) {
    out.status = SocpStatus::kNumericalFailure;
    out.message = "splitting factorization failed";
    return out;
  }

  const SparseMatrix gt = prob.G.transpose();
  Vec x = Vec::Zero(n);
  Vec s = cone::project(prob.cones, prob.h);
  Vec u = Vec::Zero(m);
  Vec nu = Vec::Zero(p);
  const double hnorm = std::max(1.0, prob.h.norm());
  const double cnorm = std::max(1.0, prob.c.norm());
  Vec rhs(n + p);
  int iter = 0;
  double pres = 0.0;
  double dres = 0.0;
  for (iter = 1; iter <= settings.splitting_max_iter; ++iter) {
    rhs.head(n) = sigma * x - prob.c - rho * (gt * (s - prob.h + u));
    rhs.tail(p) = prob.b;
    Vec sol = ldlt.solve(rhs);
    for (int r = 0; r < 2; ++r) sol += ldlt.solve(rhs - kkt * sol);
    x = sol.head(n);
    nu = sol.tail(p);
    const Vec gx = prob.G * x;
    const Vec s_prev = s;
    s = cone::project(prob.cones, prob.h - gx - u);
    u += gx + s - prob.h;
    pres = std::max((gx + s - prob.h).norm() / hnorm, p > 0 ? (prob.A * x - prob.b).norm() / std::max(1.0, prob.b.norm()) : 0.0);
    dres = rho * (gt * (s - s_prev)).norm() / cnorm;
    if (pres < settings.splitting_eps && dres < settings.splitting_eps) break;
  }
  out.iterations = std::min(iter, settings.splitting_max_iter);
  out.x = x;
  out.s = s;
  out.z = rho * u;
  out.y = nu;
  out.primal_objective = prob.c.dot(x) + prob.objective_offset;
  out.dual_objective = -prob.b.dot(out.y) - prob.h.dot(out.z) + prob.objective_offset;
  out.primal_residual = pres;
  out.dual_residual = dres;
  out.gap = std::abs(out.primal_objective - out.dual_objective);
  out.reduced_accuracy = true;
  if (pres < settings.splitting_eps && dres < settings.splitting_eps) {
    out.status = SocpStatus::kOptimal;
    out.message = "optimal (splitting)";
  } else {
    out.status = SocpStatus::kIterationLimit;
    out.message = "splitting iteration limit";
  }
  return out;
}

}  // namespace oltc

#include <gtest/gtest.h>

#include <cmath>

#include "oltc/socp.hpp"

using namespace oltc;

namespace {

SparseMatrix sparse(int rows, int cols, std::initializer_list<std::tuple<int, int, double>> entries) {
  std::vector<Eigen::Triplet<double>> t;
  for (auto [r, c, v] : entries) t.emplace_back(r, c, v);
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  int k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

// min x1 + x2  s.t. x1 + 2 x2 = 2, x >= 0. Optimum 1 at (0, 1).
SocpProblem small_lp() {
  SocpProblem p;
  p.c = vec({1.0, 1.0});
  p.A = sparse(1, 2, {{0, 0, 1.0}, {0, 1, 2.0}});
  p.b = vec({2.0});
  p.G = sparse(2, 2, {{0, 0, -1.0}, {1, 1, -1.0}});
  p.h = vec({0.0, 0.0});
  p.cones.n_lp = 2;
  return p;
}

// min t  s.t. (t, x1, x2) in Q3, x1 = 3, x2 = 4. Optimum 5.
SocpProblem small_soc() {
  SocpProblem p;
  p.c = vec({1.0, 0.0, 0.0});
  p.A = sparse(2, 3, {{0, 1, 1.0}, {1, 2, 1.0}});
  p.b = vec({3.0, 4.0});
  p.G = sparse(3, 3, {{0, 0, -1.0}, {1, 1, -1.0}, {2, 2, -1.0}});
  p.h = vec({0.0, 0.0, 0.0});
  p.cones.soc = {3};
  return p;
}

}  // namespace

TEST(Socp, LinearProgram) {
  const SocpResult r = solve_socp(small_lp());
  ASSERT_EQ(r.status, SocpStatus::kOptimal);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-8);
  EXPECT_NEAR(r.x(0), 0.0, 1e-7);
  EXPECT_NEAR(r.x(1), 1.0, 1e-7);
  EXPECT_LE(r.primal_residual, 1e-9);
  EXPECT_LE(r.dual_residual, 1e-9);
}

TEST(Socp, SecondOrderCone) {
  const SocpResult r = solve_socp(small_soc());
  ASSERT_EQ(r.status, SocpStatus::kOptimal);
  EXPECT_NEAR(r.primal_objective, 5.0, 1e-8);
  EXPECT_NEAR(r.dual_objective, 5.0, 1e-8);
}

TEST(Socp, InfeasibleCarriesCertificate) {
  // x >= 1 and x <= 0.
  SocpProblem p;
  p.c = vec({1.0});
  p.A = SparseMatrix(0, 1);
  p.b = Eigen::VectorXd(0);
  p.G = sparse(2, 1, {{0, 0, -1.0}, {1, 0, 1.0}});
  p.h = vec({-1.0, 0.0});
  p.cones.n_lp = 2;
  const SocpResult r = solve_socp(p);
  ASSERT_EQ(r.status, SocpStatus::kInfeasible);
  // Farkas: G'z = 0, z >= 0, h'z < 0 (normalized to -1).
  EXPECT_LE(r.certificate_residual, 1e-8);
  EXPECT_NEAR((p.G.transpose() * r.z).norm(), 0.0, 1e-8);
  EXPECT_GE(r.z.minCoeff(), -1e-12);
  EXPECT_NEAR(p.h.dot(r.z), -1.0, 1e-8);
}

TEST(Socp, UnboundedCarriesRay) {
  SocpProblem p;
  p.c = vec({-1.0});
  p.A = SparseMatrix(0, 1);
  p.b = Eigen::VectorXd(0);
  p.G = sparse(1, 1, {{0, 0, -1.0}});
  p.h = vec({0.0});
  p.cones.n_lp = 1;
  const SocpResult r = solve_socp(p);
  ASSERT_EQ(r.status, SocpStatus::kUnbounded);
  EXPECT_NEAR(p.c.dot(r.x), -1.0, 1e-8);
}

TEST(Socp, CertifiedBoundAndCutoff) {
  SocpProblem p = small_soc();
  p.x_bound = vec({10.0, 10.0, 10.0});
  const SocpResult full = solve_socp(p);
  ASSERT_EQ(full.status, SocpStatus::kOptimal);
  EXPECT_LE(full.certified_bound, 5.0);
  EXPECT_NEAR(full.certified_bound, 5.0, 1e-6);

  SocpSettings s;
  s.cutoff = 4.0;
  const SocpResult cut = solve_socp(p, s);
  ASSERT_EQ(cut.status, SocpStatus::kCutoff);
  EXPECT_GT(cut.dual_objective, 4.0);
  EXPECT_LE(cut.dual_objective, 5.0);
  EXPECT_LT(cut.iterations, full.iterations);

  s.cutoff = 6.0;
  EXPECT_EQ(solve_socp(p, s).status, SocpStatus::kOptimal);
}

TEST(Socp, Deterministic) {
  const SocpResult a = solve_socp(small_soc());
  const SocpResult b = solve_socp(small_soc());
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.primal_objective, b.primal_objective);
  EXPECT_EQ((a.x - b.x).norm(), 0.0);
}

TEST(Socp, SplittingModeApproximates) {
  SocpSettings s;
  s.mode = SolverMode::kSplitting;
  const SocpResult lp = solve_socp(small_lp(), s);
  ASSERT_EQ(lp.status, SocpStatus::kOptimal);
  EXPECT_NEAR(lp.primal_objective, 1.0, 1e-4);
  const SocpResult soc = solve_socp(small_soc(), s);
  ASSERT_EQ(soc.status, SocpStatus::kOptimal);
  EXPECT_NEAR(soc.primal_objective, 5.0, 1e-4);
}

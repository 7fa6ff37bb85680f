#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "oltc/cone.hpp"
#include "oltc/sparse_ldl.hpp"

using namespace oltc;
using namespace oltc::cone;

namespace {

// Random quasi-definite matrix [H, A'; A, -D] with about 30% density.
Eigen::MatrixXd quasi_definite(int n1, int n2, std::mt19937& rng) {
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::bernoulli_distribution keep(0.3);
  const int n = n1 + n2;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n1, n1);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n1; ++j) b(i, j) = keep(rng) ? val(rng) : 0.0;
  }
  k.topLeftCorner(n1, n1) = b.transpose() * b + Eigen::MatrixXd::Identity(n1, n1);
  for (int i = 0; i < n2; ++i) {
    for (int j = 0; j < n1; ++j) {
      if (keep(rng)) k(n1 + i, j) = k(j, n1 + i) = val(rng);
    }
    k(n1 + i, n1 + i) = -0.5 - std::abs(val(rng));
  }
  return k;
}

}  // namespace

TEST(SparseLdl, MatchesDenseSolve) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd k = quasi_definite(12, 7, rng);
    const int n = static_cast<int>(k.rows());
    std::vector<int> ptr{0};
    std::vector<int> ind;
    std::vector<double> val;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i <= j; ++i) {
        if (k(i, j) != 0.0 || i == j) {
          ind.push_back(i);
          val.push_back(k(i, j));
        }
      }
      ptr.push_back(static_cast<int>(ind.size()));
    }
    SparseLdl ldl;
    ldl.analyze(n, ptr, ind);
    ASSERT_TRUE(ldl.factor(val));
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
    Eigen::VectorXd x = b;
    ldl.solve(x.data());
    const Eigen::VectorXd ref = k.fullPivLu().solve(b);
    EXPECT_LE((x - ref).norm(), 1e-10 * (1.0 + ref.norm()));
    // Refactor with scaled values reuses the analysis.
    for (double& v : val) v *= 2.0;
    ASSERT_TRUE(ldl.factor(val));
    x = b;
    ldl.solve(x.data());
    EXPECT_LE((x - 0.5 * ref).norm(), 1e-10 * (1.0 + ref.norm()));
  }
}

TEST(SparseLdl, ReportsZeroPivot) {
  SparseLdl ldl;
  ldl.analyze(2, {0, 1, 3}, {0, 0, 1});
  EXPECT_FALSE(ldl.factor({1.0, 1.0, 1.0}));  // [[1,1],[1,1]] is singular
}

TEST(Cone, JordanAlgebra) {
  ConeDims dims{2, {3}};
  const Vec e = identity(dims);
  Vec u(5);
  u << 1.0, 2.0, 3.0, 0.5, -1.0;
  EXPECT_LE((product(dims, e, u) - u).norm(), 1e-15);
  const Vec x = divide(dims, u, product(dims, u, e));
  EXPECT_LE((x - e).norm(), 1e-12);
  EXPECT_GT(interior_margin(dims, u), 0.0);
}

TEST(Cone, MaxStepLandsOnTheBoundary) {
  ConeDims dims{1, {3}};
  Vec x(4);
  x << 1.0, 2.0, 0.0, 0.0;
  Vec d(4);
  d << 0.0, -1.0, 1.0, 0.0;
  const double a = max_step(dims, x, d);
  // (2 - a)^2 = a^2 gives a = 1 on the cone; the orthant never binds.
  EXPECT_NEAR(a, 1.0, 1e-12);
  EXPECT_NEAR(interior_margin(dims, x + a * d), 0.0, 1e-12);
}

TEST(Cone, ProjectionIsIdempotent) {
  ConeDims dims{2, {3}};
  Vec v(5);
  v << -1.0, 2.0, 0.5, 3.0, 0.0;
  const Vec p = project(dims, v);
  EXPECT_LE((project(dims, p) - p).norm(), 1e-14);
  EXPECT_DOUBLE_EQ(p(0), 0.0);
  EXPECT_DOUBLE_EQ(p(1), 2.0);
  // (t, x) = (0.5, 3) projects to ((0.5 + 3) / 2) (1, 1).
  EXPECT_NEAR(p(2), 1.75, 1e-14);
  EXPECT_NEAR(p(3), 1.75, 1e-14);
}

TEST(Cone, NesterovToddScalingIdentities) {
  ConeDims dims{2, {3, 4}};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Vec s(9);
  Vec z(9);
  for (int i = 0; i < 9; ++i) {
    s(i) = val(rng);
    z(i) = val(rng);
  }
  s = push_into_interior(dims, s);
  z = push_into_interior(dims, z);
  const NtScaling w(dims, s, z);
  EXPECT_LE((w.apply(z) - w.lambda()).norm(), 1e-12);
  EXPECT_LE((w.apply_inverse(s) - w.lambda()).norm(), 1e-12);
  const Vec v = Vec::LinSpaced(9, -1.0, 1.0);
  EXPECT_LE((w.apply(w.apply_inverse(v)) - v).norm(), 1e-12);
  for (int k = 0; k < 2; ++k) {
    const Eigen::MatrixXd inv = w.soc_block_inverse(k);
    const Eigen::MatrixXd sq = inv * inv;
    for (int r = 0; r < sq.rows(); ++r) {
      for (int c = 0; c < sq.cols(); ++c) EXPECT_NEAR(w.soc_inverse_squared(k, r, c), sq(r, c), 1e-10);
    }
  }
}

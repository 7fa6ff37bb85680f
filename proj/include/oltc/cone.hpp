#pragma once

#include <vector>

#include <Eigen/Dense>

namespace oltc::cone {

/// Product cone R+^n_lp x Q^{d_1} x ... x Q^{d_k}, laid out in that order.
struct ConeDims {
  int n_lp = 0;
  std::vector<int> soc;

  int total() const;
  /// Barrier degree: one per orthant coordinate and one per second-order cone.
  int degree() const { return n_lp + static_cast<int>(soc.size()); }
};

using Vec = Eigen::VectorXd;

/// Identity element e of the cone.
Vec identity(const ConeDims& dims);

/// Jordan product u o v.
Vec product(const ConeDims& dims, const Vec& u, const Vec& v);

/// Solves lambda o x = v for x (lambda in the interior).
Vec divide(const ConeDims& dims, const Vec& lambda, const Vec& v);

/// Min over blocks of (x0 - ||x1||) and the orthant entries; > 0 means interior.
double interior_margin(const ConeDims& dims, const Vec& x);

/// Largest alpha >= 0 with x + alpha d in the cone (x interior); may be +inf.
double max_step(const ConeDims& dims, const Vec& x, const Vec& d);

/// Euclidean projection onto the cone.
Vec project(const ConeDims& dims, const Vec& x);

/// Shifts r by (1 + max violation) e so the result is strictly interior.
Vec push_into_interior(const ConeDims& dims, const Vec& r);

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda. W is symmetric.
class NtScaling {
 public:
  NtScaling(const ConeDims& dims, const Vec& s, const Vec& z);

  const Vec& lambda() const { return lambda_; }
  Vec apply(const Vec& v) const;          // W v
  Vec apply_inverse(const Vec& v) const;  // W^{-1} v
  /// W^{-1} v into out; out must not alias v.
  void apply_inverse_to(const Vec& v, Vec& out) const;
  /// Dense W^2 block for SOC k (d x d).
  Eigen::MatrixXd soc_block_squared(int k) const;
  /// Dense W^{-1} block for SOC k.
  Eigen::MatrixXd soc_block_inverse(int k) const;
  /// Entry (r, c) of the squared inverse block for SOC k.
  double soc_inverse_squared(int k, int r, int c) const;
  double lp_squared(int i) const { return lp_w_[i] * lp_w_[i]; }
  double lp_scale(int i) const { return lp_w_[i]; }

 private:
  ConeDims dims_;
  Vec lp_w_;
  std::vector<double> eta_;
  std::vector<Vec> wbar_;
  Vec lambda_;
};

}  // namespace oltc::cone

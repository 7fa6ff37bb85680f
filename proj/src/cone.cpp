#include "oltc/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oltc::cone {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// x0^2 - ||x1||^2 evaluated as a product to limit cancellation.
double soc_residual(double x0, double x1_norm) { return (x0 - x1_norm) * (x0 + x1_norm); }

template <typename F>
void for_each_soc(const ConeDims& dims, F&& f) {
  int start = dims.n_lp;
  for (std::size_t k = 0; k < dims.soc.size(); ++k) {
    f(static_cast<int>(k), start, dims.soc[k]);
    start += dims.soc[k];
  }
}

// Smallest positive root of a t^2 + 2 b t + c with c > 0, or +inf.
double first_positive_root(double a, double b, double c) {
  if (a == 0.0) return b < 0.0 ? -c / (2.0 * b) : kInf;
  const double disc = b * b - a * c;
  if (disc < 0.0) return kInf;
  const double sq = std::sqrt(disc);
  const double q = -(b + std::copysign(sq, b));
  double best = kInf;
  if (q != 0.0) {
    const double r1 = q / a;
    const double r2 = c / q;
    if (r1 > 0.0) best = std::min(best, r1);
    if (r2 > 0.0) best = std::min(best, r2);
  }
  return best;
}

}  // namespace

int ConeDims::total() const {
  int n = n_lp;
  for (int d : soc) n += d;
  return n;
}

Vec identity(const ConeDims& dims) {
  Vec e = Vec::Zero(dims.total());
  e.head(dims.n_lp).setOnes();
  for_each_soc(dims, [&](int, int start, int) { e(start) = 1.0; });
  return e;
}

Vec product(const ConeDims& dims, const Vec& u, const Vec& v) {
  Vec out(u.size());
  out.head(dims.n_lp) = u.head(dims.n_lp).cwiseProduct(v.head(dims.n_lp));
  for_each_soc(dims, [&](int, int start, int d) {
    const auto u1 = u.segment(start + 1, d - 1);
    const auto v1 = v.segment(start + 1, d - 1);
    out(start) = u.segment(start, d).dot(v.segment(start, d));
    out.segment(start + 1, d - 1) = u(start) * v1 + v(start) * u1;
  });
  return out;
}

Vec divide(const ConeDims& dims, const Vec& lambda, const Vec& v) {
  Vec out(v.size());
  out.head(dims.n_lp) = v.head(dims.n_lp).cwiseQuotient(lambda.head(dims.n_lp));
  for_each_soc(dims, [&](int, int start, int d) {
    const double l0 = lambda(start);
    const auto l1 = lambda.segment(start + 1, d - 1);
    const double det = soc_residual(l0, l1.norm());
    const double x0 = (l0 * v(start) - l1.dot(v.segment(start + 1, d - 1))) / det;
    out(start) = x0;
    out.segment(start + 1, d - 1) = (v.segment(start + 1, d - 1) - x0 * l1) / l0;
  });
  return out;
}

double interior_margin(const ConeDims& dims, const Vec& x) {
  double m = kInf;
  if (dims.n_lp > 0) m = x.head(dims.n_lp).minCoeff();
  for_each_soc(dims, [&](int, int start, int d) {
    m = std::min(m, x(start) - x.segment(start + 1, d - 1).norm());
  });
  return m;
}

double max_step(const ConeDims& dims, const Vec& x, const Vec& d) {
  double alpha = kInf;
  for (int i = 0; i < dims.n_lp; ++i) {
    if (d(i) < 0.0) alpha = std::min(alpha, -x(i) / d(i));
  }
  for_each_soc(dims, [&](int, int start, int n) {
    const double x0 = x(start);
    const double d0 = d(start);
    const auto x1 = x.segment(start + 1, n - 1);
    const auto d1 = d.segment(start + 1, n - 1);
    const double a = soc_residual(d0, d1.norm());
    const double b = x0 * d0 - x1.dot(d1);
    const double c = soc_residual(x0, x1.norm());
    if (c <= 0.0) {
      alpha = 0.0;
      return;
    }
    alpha = std::min(alpha, first_positive_root(a, b, c));
  });
  return alpha;
}

Vec project(const ConeDims& dims, const Vec& x) {
  Vec out = x;
  out.head(dims.n_lp) = x.head(dims.n_lp).cwiseMax(0.0);
  for_each_soc(dims, [&](int, int start, int d) {
    const double t = x(start);
    const double nrm = x.segment(start + 1, d - 1).norm();
    if (nrm <= t) return;
    if (nrm <= -t) {
      out.segment(start, d).setZero();
      return;
    }
    const double a = 0.5 * (t + nrm);
    out(start) = a;
    out.segment(start + 1, d - 1) = (a / nrm) * x.segment(start + 1, d - 1);
  });
  return out;
}

Vec push_into_interior(const ConeDims& dims, const Vec& r) {
  double violation = 0.0;
  bool any = false;
  for (int i = 0; i < dims.n_lp; ++i) {
    if (r(i) <= 0.0) {
      violation = std::max(violation, -r(i));
      any = true;
    }
  }
  for_each_soc(dims, [&](int, int start, int d) {
    const double res = r(start) - r.segment(start + 1, d - 1).norm();
    if (res <= 0.0) {
      violation = std::max(violation, -res);
      any = true;
    }
  });
  // Interior points get a small shift only.
  const double shift = any ? 1.0 + violation : 0.01;
  return r + shift * identity(dims);
}

NtScaling::NtScaling(const ConeDims& dims, const Vec& s, const Vec& z)
    : dims_(dims), lp_w_(dims.n_lp), lambda_(s.size()) {
  for (int i = 0; i < dims.n_lp; ++i) {
    lp_w_(i) = std::sqrt(s(i) / z(i));
    lambda_(i) = std::sqrt(s(i) * z(i));
  }
  eta_.resize(dims.soc.size());
  wbar_.resize(dims.soc.size());
  for_each_soc(dims, [&](int k, int start, int d) {
    const Vec sk = s.segment(start, d);
    const Vec zk = z.segment(start, d);
    const double s_res = soc_residual(sk(0), sk.tail(d - 1).norm());
    const double z_res = soc_residual(zk(0), zk.tail(d - 1).norm());
    if (!(s_res > 0.0) || !(z_res > 0.0)) throw std::runtime_error("scaling point left the cone interior");
    const Vec sb = sk / std::sqrt(s_res);
    const Vec zb = zk / std::sqrt(z_res);
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    Vec w(d);
    w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
    w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
    eta_[k] = std::pow(s_res / z_res, 0.25);
    wbar_[k] = w;
  });
  // lambda = W z
  const Vec wz = apply(z);
  lambda_.tail(lambda_.size() - dims.n_lp) = wz.tail(wz.size() - dims.n_lp);
}

Vec NtScaling::apply(const Vec& v) const {
  Vec out(v.size());
  out.head(dims_.n_lp) = lp_w_.cwiseProduct(v.head(dims_.n_lp));
  for_each_soc(dims_, [&](int k, int start, int d) {
    const Vec& w = wbar_[k];
    const auto w1 = w.tail(d - 1);
    const auto v1 = v.segment(start + 1, d - 1);
    const double w1v1 = w1.dot(v1);
    out(start) = eta_[k] * (w(0) * v(start) + w1v1);
    out.segment(start + 1, d - 1) = eta_[k] * (v1 + (v(start) + w1v1 / (1.0 + w(0))) * w1);
  });
  return out;
}

Vec NtScaling::apply_inverse(const Vec& v) const {
  Vec out(v.size());
  apply_inverse_to(v, out);
  return out;
}

void NtScaling::apply_inverse_to(const Vec& v, Vec& out) const {
  out.resize(v.size());
  out.head(dims_.n_lp) = v.head(dims_.n_lp).cwiseQuotient(lp_w_);
  for_each_soc(dims_, [&](int k, int start, int d) {
    const Vec& w = wbar_[k];
    const auto w1 = w.tail(d - 1);
    const auto v1 = v.segment(start + 1, d - 1);
    const double w1v1 = w1.dot(v1);
    const double v0 = v(start);
    out(start) = (w(0) * v0 - w1v1) / eta_[k];
    out.segment(start + 1, d - 1) = (v1 + (-v0 + w1v1 / (1.0 + w(0))) * w1) / eta_[k];
  });
}

Eigen::MatrixXd NtScaling::soc_block_squared(int k) const {
  const Vec& w = wbar_[k];
  const int d = static_cast<int>(w.size());
  const auto w1 = w.tail(d - 1);
  Eigen::MatrixXd m(d, d);
  m(0, 0) = w(0) * w(0) + w1.squaredNorm();
  m.block(0, 1, 1, d - 1) = 2.0 * w(0) * w1.transpose();
  m.block(1, 0, d - 1, 1) = 2.0 * w(0) * w1;
  m.block(1, 1, d - 1, d - 1) = Eigen::MatrixXd::Identity(d - 1, d - 1) + 2.0 * w1 * w1.transpose();
  return eta_[k] * eta_[k] * m;
}

Eigen::MatrixXd NtScaling::soc_block_inverse(int k) const {
  const Vec& w = wbar_[k];
  const int d = static_cast<int>(w.size());
  const auto w1 = w.tail(d - 1);
  Eigen::MatrixXd m(d, d);
  m(0, 0) = w(0);
  m.block(0, 1, 1, d - 1) = -w1.transpose();
  m.block(1, 0, d - 1, 1) = -w1;
  m.block(1, 1, d - 1, d - 1) = Eigen::MatrixXd::Identity(d - 1, d - 1) + w1 * w1.transpose() / (1.0 + w(0));
  return m / eta_[k];
}

double NtScaling::soc_inverse_squared(int k, int r, int c) const {
  const Vec& w = wbar_[k];
  const double inv = 1.0 / (eta_[k] * eta_[k]);
  if (r == 0 && c == 0) return (w(0) * w(0) + w.tail(w.size() - 1).squaredNorm()) * inv;
  if (r == 0) return -2.0 * w(0) * w(c) * inv;
  if (c == 0) return -2.0 * w(0) * w(r) * inv;
  return ((r == c ? 1.0 : 0.0) + 2.0 * w(r) * w(c)) * inv;
}

}  // namespace oltc::cone

#include "oltc/linearization.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace oltc {

int bit_length(int k_taps, BitLengthMode mode) {
  if (k_taps < 1) throw InputError("k_taps must be >= 1");
  int bits = 0;
  while (((1LL << bits) - 1) < k_taps) ++bits;
  return mode == BitLengthMode::kExtraBit ? bits + 1 : bits;
}

BigM tight_big_m(double u_lo, double u_hi, const TapChanger& tap) {
  if (!std::isfinite(u_hi) || !(u_hi > 0.0)) {
    throw InputError("tight big-M needs a finite positive upper bound on the voltage variable");
  }
  if (u_lo < 0.0) throw InputError("squared-voltage lower bound must be non-negative");
  return BigM{u_hi, tap.t_max * u_hi};
}

BigM select_big_m(const LinearizationConfig& config, double u_lo, double u_hi, const TapChanger& tap) {
  const BigM tight = tight_big_m(u_lo, u_hi, tap);
  if (config.big_m_mode == BigMMode::kTight) return tight;
  const double m = config.uniform_big_m;
  if (!(m > 0.0)) throw InputError("uniform big-M must be positive");
  if (m < tight.x || m < tight.y) {
    throw InputError("uniform big-M " + std::to_string(m) + " is below the tight value " +
                     std::to_string(std::max(tight.x, tight.y)) + " and would cut feasible points");
  }
  return BigM{m, m};
}

namespace {

TapEncoding prepare(MixedIntegerConicProgram& prog, const TapChanger& tap, VarId u,
                    const LinearizationConfig& config, const std::string& name, int branch) {
  if (!u.valid() || u.index >= static_cast<int>(prog.variables.size())) {
    throw std::logic_error("encode_tap: invalid voltage variable");
  }
  const Variable& uv = prog.variables[u.index];
  if (!std::isfinite(uv.lb) || !std::isfinite(uv.ub)) {
    throw InputError("transformer " + name + ": voltage variable " + uv.name +
                     " has no finite bounds, big-M cannot be derived");
  }
  TapEncoding enc;
  enc.branch = branch;
  enc.name = name;
  enc.t_min = tap.t_min;
  enc.t_max = tap.t_max;
  enc.k_taps = tap.k_taps;
  enc.delta_t = tap.delta_t();
  enc.n_bits = bit_length(tap.k_taps, config.bit_length_mode);
  enc.u = u;
  const BigM big_m = select_big_m(config, uv.lb, uv.ub, tap);
  enc.big_m_x = big_m.x;
  enc.big_m_y = big_m.y;
  enc.eq_rows.first = prog.eq_rows.size();
  enc.ineq_rows.first = prog.ineq_rows.size();
  return enc;
}

std::string idx(const std::string& name, int n) { return name + "," + std::to_string(n); }

// lambda_n bits plus the range row sum 2^n lambda_n <= K.
void add_bits(MixedIntegerConicProgram& prog, TapEncoding& enc) {
  std::vector<Term> range;
  for (int n = 0; n < enc.n_bits; ++n) {
    const VarId b = prog.add_variable("lambda[" + idx(enc.name, n) + "]", 0.0, 1.0,
                                      VarTag{VarRole::kTapBit, enc.branch, n}, true);
    enc.bits.push_back(b);
    range.push_back({b.index, enc.weight(n)});
  }
  prog.add_less_equal(std::move(range), static_cast<double>(enc.k_taps), "tap_range[" + enc.name + "]");
}

// w_n = lambda_n * v with 0 <= v - w_n <= (1 - lambda_n) M and 0 <= w_n <= lambda_n M.
void add_product_rows(MixedIntegerConicProgram& prog, VarId v, VarId w, VarId bit, double big_m,
                      const std::string& tag) {
  prog.add_less_equal({{v.index, -1.0}, {w.index, 1.0}}, 0.0, tag + "_lo_gap");
  prog.add_less_equal({{v.index, 1.0}, {w.index, -1.0}, {bit.index, big_m}}, big_m, tag + "_hi_gap");
  prog.add_less_equal({{w.index, -1.0}}, 0.0, tag + "_lo");
  prog.add_less_equal({{w.index, 1.0}, {bit.index, -big_m}}, 0.0, tag + "_hi");
}

}  // namespace

TapEncoding encode_tap(MixedIntegerConicProgram& prog, const TapChanger& tap, VarId u,
                       const LinearizationConfig& config, const std::string& name, int branch) {
  TapEncoding enc = prepare(prog, tap, u, config, name, branch);
  const double u_lo = prog.variables[u.index].lb;
  const double u_hi = prog.variables[u.index].ub;
  const double m_lo = tap.t_min * std::max(u_lo, 0.0);
  const double m_hi = config.big_m_mode == BigMMode::kTight ? tap.t_max * u_hi : tap.t_max * enc.big_m_x;
  add_bits(prog, enc);

  enc.m = prog.add_variable("m[" + name + "]", m_lo, m_hi, VarTag{VarRole::kTapM, enc.branch, -1});
  enc.u_tap = prog.add_variable("Ujt[" + name + "]", tap.t_min * m_lo, tap.t_max * m_hi,
                                VarTag{VarRole::kTapNodeSq, enc.branch, -1});
  for (int n = 0; n < enc.n_bits; ++n) {
    enc.x_vars.push_back(prog.add_variable("x[" + idx(name, n) + "]", 0.0, enc.big_m_x,
                                           VarTag{VarRole::kTapX, enc.branch, n}));
  }
  for (int n = 0; n < enc.n_bits; ++n) {
    enc.y_vars.push_back(prog.add_variable("y[" + idx(name, n) + "]", 0.0, enc.big_m_y,
                                           VarTag{VarRole::kTapY, enc.branch, n}));
  }

  // m = t_min U + dt sum 2^n x_n
  std::vector<Term> m_row{{enc.m.index, 1.0}, {u.index, -tap.t_min}};
  for (int n = 0; n < enc.n_bits; ++n) m_row.push_back({enc.x_vars[n].index, -enc.delta_t * enc.weight(n)});
  prog.add_equality(std::move(m_row), 0.0, "m_def[" + name + "]");
  for (int n = 0; n < enc.n_bits; ++n) {
    add_product_rows(prog, u, enc.x_vars[n], enc.bits[n], enc.big_m_x, "x[" + idx(name, n) + "]");
  }

  // U_jt = t_min m + dt sum 2^n y_n
  std::vector<Term> ujt_row{{enc.u_tap.index, 1.0}, {enc.m.index, -tap.t_min}};
  for (int n = 0; n < enc.n_bits; ++n) ujt_row.push_back({enc.y_vars[n].index, -enc.delta_t * enc.weight(n)});
  prog.add_equality(std::move(ujt_row), 0.0, "ujt_def[" + name + "]");
  for (int n = 0; n < enc.n_bits; ++n) {
    add_product_rows(prog, enc.m, enc.y_vars[n], enc.bits[n], enc.big_m_y, "y[" + idx(name, n) + "]");
  }

  enc.eq_rows.second = prog.eq_rows.size();
  enc.ineq_rows.second = prog.ineq_rows.size();
  return enc;
}

TapEncoding encode_tap_approximate(MixedIntegerConicProgram& prog, const TapChanger& tap, VarId u,
                                   const LinearizationConfig& config, ApproximateForm form,
                                   const std::string& name, int branch) {
  TapEncoding enc = prepare(prog, tap, u, config, name, branch);
  enc.approximate = true;
  enc.approximate_form = form;
  const double u_lo = std::max(prog.variables[u.index].lb, 0.0);
  const double u_hi = prog.variables[u.index].ub;
  add_bits(prog, enc);

  const double slope = form == ApproximateForm::kSlopeTwo ? 2.0 * enc.delta_t : 2.0 * tap.t_min * enc.delta_t;
  const double t0sq = tap.t_min * tap.t_min;
  enc.u_tap = prog.add_variable("Ujt[" + name + "]", t0sq * u_lo, (t0sq + slope * tap.k_taps) * u_hi,
                                VarTag{VarRole::kTapNodeSq, enc.branch, -1});
  for (int n = 0; n < enc.n_bits; ++n) {
    enc.x_vars.push_back(prog.add_variable("x[" + idx(name, n) + "]", 0.0, enc.big_m_x,
                                           VarTag{VarRole::kTapX, enc.branch, n}));
  }
  // U_jt = t_min^2 U + slope * sum 2^n x_n
  std::vector<Term> row{{enc.u_tap.index, 1.0}, {u.index, -t0sq}};
  for (int n = 0; n < enc.n_bits; ++n) row.push_back({enc.x_vars[n].index, -slope * enc.weight(n)});
  prog.add_equality(std::move(row), 0.0, "ujt_approx[" + name + "]");
  for (int n = 0; n < enc.n_bits; ++n) {
    add_product_rows(prog, u, enc.x_vars[n], enc.bits[n], enc.big_m_x, "x[" + idx(name, n) + "]");
  }
  enc.eq_rows.second = prog.eq_rows.size();
  enc.ineq_rows.second = prog.ineq_rows.size();
  return enc;
}

DecodedTap decode_tap(const TapEncoding& enc, const std::vector<int>& bits) {
  if (static_cast<int>(bits.size()) != enc.n_bits) {
    throw InputError("bit vector has " + std::to_string(bits.size()) + " entries, encoding uses " +
                     std::to_string(enc.n_bits));
  }
  long long position = 0;
  for (int n = 0; n < enc.n_bits; ++n) {
    if (bits[n] != 0 && bits[n] != 1) throw InputError("bit values must be 0 or 1");
    position += static_cast<long long>(bits[n]) << n;
  }
  if (position > enc.k_taps) {
    throw InputError("encoded tap " + std::to_string(position) + " exceeds K = " + std::to_string(enc.k_taps));
  }
  const TapChanger tap{enc.t_min, enc.t_max, enc.k_taps};
  return DecodedTap{static_cast<int>(position), tap.ratio(static_cast<int>(position))};
}

std::vector<int> round_bits(const std::vector<double>& values, double int_tol) {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) {
    const double r = std::round(v);
    if ((r != 0.0 && r != 1.0) || std::abs(v - r) > int_tol) {
      throw InputError("binary value " + std::to_string(v) + " is not within " + std::to_string(int_tol) +
                       " of {0,1}");
    }
    out.push_back(static_cast<int>(r));
  }
  return out;
}

std::vector<int> canonical_bits(int position, int n_bits) {
  if (position < 0 || (n_bits < 31 && position >= (1 << n_bits))) {
    throw InputError("tap " + std::to_string(position) + " not representable in " + std::to_string(n_bits) +
                     " bits");
  }
  std::vector<int> bits(n_bits);
  for (int n = 0; n < n_bits; ++n) bits[n] = (position >> n) & 1;
  return bits;
}

double exact_tap_node(double t_min, double delta_t, int position, double u) {
  const double t = t_min + position * delta_t;
  return t * t * u;
}

double approximate_tap_node(double t_min, double delta_t, int position, double u, ApproximateForm form) {
  const double slope = form == ApproximateForm::kSlopeTwo ? 2.0 * delta_t : 2.0 * t_min * delta_t;
  return t_min * t_min * u + slope * position * u;
}

std::string describe_encoding(const MixedIntegerConicProgram& prog, const TapEncoding& enc) {
  std::ostringstream os;
  os << "transformer " << enc.name << (enc.approximate ? " (approximate model)" : " (exact model)") << "\n";
  os << "  t_min = " << enc.t_min << ", t_max = " << enc.t_max << ", K = " << enc.k_taps
     << ", dt = " << enc.delta_t << ", bits = " << enc.n_bits << "\n";
  os << "  M_x = " << enc.big_m_x;
  if (!enc.approximate) os << ", M_y = " << enc.big_m_y;
  os << "\n  variables:\n";
  auto show = [&](VarId v) {
    const auto& var = prog.variables[v.index];
    os << "    " << var.name << " in [" << var.lb << ", " << var.ub << "]" << (var.binary ? " binary" : "") << "\n";
  };
  show(enc.u);
  for (VarId b : enc.bits) show(b);
  if (enc.m.valid()) show(enc.m);
  show(enc.u_tap);
  for (VarId v : enc.x_vars) show(v);
  for (VarId v : enc.y_vars) show(v);
  os << "  equalities:\n";
  for (std::size_t r = enc.eq_rows.first; r < enc.eq_rows.second; ++r) {
    os << "    " << prog.eq_rows[r].label << ": " << format_row(prog, prog.eq_rows[r]) << "\n";
  }
  os << "  inequalities:\n";
  for (std::size_t r = enc.ineq_rows.first; r < enc.ineq_rows.second; ++r) {
    os << "    " << prog.ineq_rows[r].label << ": " << format_row(prog, prog.ineq_rows[r]) << "\n";
  }
  return os.str();
}

}  // namespace oltc

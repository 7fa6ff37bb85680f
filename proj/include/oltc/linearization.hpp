#pragma once

#include <string>
#include <utility>
#include <vector>

#include "oltc/network.hpp"
#include "oltc/program.hpp"

namespace oltc {

enum class BigMMode { kTight, kUniform };

/// kMinimal: smallest b with 2^b - 1 >= K. kExtraBit: one more bit, reading the
/// expansion index as running 0..N where N is the binary length of K.
enum class BitLengthMode { kMinimal, kExtraBit };

/// Approximate baseline variants. kSlopeTwo is
/// U_jt = t_min^2 U + 2 T dt U; kFirstOrder uses 2 t_min T dt U, so the only
/// dropped term is (T dt)^2 U.
enum class ApproximateForm { kSlopeTwo, kFirstOrder };

struct LinearizationConfig {
  BigMMode big_m_mode = BigMMode::kTight;
  double uniform_big_m = 10.0;
  BitLengthMode bit_length_mode = BitLengthMode::kMinimal;
};

struct BigM {
  double x = 0.0;  // bounds lambda_n * U_j
  double y = 0.0;  // bounds lambda_n * m
};

int bit_length(int k_taps, BitLengthMode mode = BitLengthMode::kMinimal);

/// M_x = u_hi, M_y = t_max * u_hi.
BigM tight_big_m(double u_lo, double u_hi, const TapChanger& tap);

/// Big-M values under a config; a uniform value below the tight one is rejected.
BigM select_big_m(const LinearizationConfig& config, double u_lo, double u_hi, const TapChanger& tap);

/// Variables and row ranges created for one transformer.
struct TapEncoding {
  int branch = -1;
  std::string name;
  double t_min = 1.0;
  double t_max = 1.0;
  int k_taps = 1;
  double delta_t = 0.0;
  int n_bits = 0;
  bool approximate = false;
  ApproximateForm approximate_form = ApproximateForm::kSlopeTwo;
  VarId u;                    // child-bus squared voltage U_j
  VarId u_tap;                // U_jt
  VarId m;                    // t * U_j (exact encoding only)
  std::vector<VarId> bits;    // lambda_n
  std::vector<VarId> x_vars;  // lambda_n * U_j
  std::vector<VarId> y_vars;  // lambda_n * m (exact encoding only)
  double big_m_x = 0.0;
  double big_m_y = 0.0;
  std::pair<std::size_t, std::size_t> eq_rows;    // [first, last) into eq_rows
  std::pair<std::size_t, std::size_t> ineq_rows;  // [first, last) into ineq_rows

  double weight(int bit) const { return static_cast<double>(1LL << bit); }
};

/// Emits the exact binary-expansion / big-M rows for U_jt = t^2 U_j into prog.
/// Requires finite bounds on u in tight mode.
TapEncoding encode_tap(MixedIntegerConicProgram& prog, const TapChanger& tap, VarId u,
                       const LinearizationConfig& config, const std::string& name = "tx",
                       int branch = -1);

/// Emits the approximate baseline rows (binary-expanded T, big-M linearized T*U).
TapEncoding encode_tap_approximate(MixedIntegerConicProgram& prog, const TapChanger& tap, VarId u,
                                   const LinearizationConfig& config, ApproximateForm form,
                                   const std::string& name = "tx", int branch = -1);

struct DecodedTap {
  int position = 0;
  double ratio = 1.0;
};

/// T = sum 2^n lambda_n, t = t_min + T dt. Throws InputError when T > K or the
/// vector length differs from n_bits.
DecodedTap decode_tap(const TapEncoding& enc, const std::vector<int>& bits);

/// Rounds bit values within int_tol of {0,1}; throws InputError otherwise.
std::vector<int> round_bits(const std::vector<double>& values, double int_tol);

/// Standard binary representation of T over n_bits (least significant first).
std::vector<int> canonical_bits(int position, int n_bits);

/// Squared tap-node voltage from each model for a given position.
double exact_tap_node(double t_min, double delta_t, int position, double u);
double approximate_tap_node(double t_min, double delta_t, int position, double u, ApproximateForm form);

/// Listing of the rows created for one encoding.
std::string describe_encoding(const MixedIntegerConicProgram& prog, const TapEncoding& enc);

}  // namespace oltc

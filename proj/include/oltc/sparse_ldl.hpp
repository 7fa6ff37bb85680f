#pragma once

#include <vector>

namespace oltc {

/// Up-looking sparse LDL' factorization without pivoting, for symmetric
/// matrices given by their upper triangle in compressed-column form (row
/// indices sorted within each column, diagonal present). The symbolic phase
/// runs once per pattern; factor() can be repeated with new values.
class SparseLdl {
 public:
  /// Builds the elimination tree and column counts of L.
  void analyze(int n, const std::vector<int>& col_ptr, const std::vector<int>& row_ind);

  /// Numeric factorization. Returns false on a zero or non-finite pivot.
  bool factor(const std::vector<double>& values);

  /// Solves L D L' x = b in place.
  void solve(double* x) const;

  int size() const { return n_; }
  long factor_nonzeros() const { return static_cast<long>(l_ind_.size()); }
  const std::vector<double>& diagonal() const { return d_; }

 private:
  int n_ = 0;
  std::vector<int> col_ptr_;
  std::vector<int> row_ind_;
  std::vector<int> parent_;
  std::vector<int> l_ptr_;
  std::vector<int> l_ind_;
  std::vector<double> l_val_;
  std::vector<double> d_;
  // scratch
  std::vector<int> l_len_;
  std::vector<int> flag_;
  std::vector<int> pattern_;
  std::vector<double> y_;
};

}  // namespace oltc

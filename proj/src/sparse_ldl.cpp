#include "oltc/sparse_ldl.hpp"

#include <cmath>

namespace oltc {

void SparseLdl::analyze(int n, const std::vector<int>& col_ptr, const std::vector<int>& row_ind) {
  n_ = n;
  col_ptr_ = col_ptr;
  row_ind_ = row_ind;
  parent_.assign(n, -1);
  flag_.assign(n, -1);
  std::vector<int> count(n, 0);
  // Row k of L is the set of tree nodes reached from the entries of column k.
  for (int k = 0; k < n; ++k) {
    flag_[k] = k;
    for (int p = col_ptr_[k]; p < col_ptr_[k + 1]; ++p) {
      for (int i = row_ind_[p]; i < k && flag_[i] != k; i = parent_[i]) {
        if (parent_[i] == -1) parent_[i] = k;
        ++count[i];
        flag_[i] = k;
      }
    }
  }
  l_ptr_.assign(n + 1, 0);
  for (int k = 0; k < n; ++k) l_ptr_[k + 1] = l_ptr_[k] + count[k];
  l_ind_.assign(l_ptr_[n], 0);
  l_val_.assign(l_ptr_[n], 0.0);
  d_.assign(n, 0.0);
  l_len_.assign(n, 0);
  pattern_.assign(n, 0);
  y_.assign(n, 0.0);
}

bool SparseLdl::factor(const std::vector<double>& values) {
  for (int k = 0; k < n_; ++k) {
    y_[k] = 0.0;
    int top = n_;
    flag_[k] = k;
    l_len_[k] = 0;
    for (int p = col_ptr_[k]; p < col_ptr_[k + 1]; ++p) {
      int i = row_ind_[p];
      y_[i] += values[p];
      int len = 0;
      for (; flag_[i] != k; i = parent_[i]) {
        pattern_[len++] = i;
        flag_[i] = k;
      }
      while (len > 0) pattern_[--top] = pattern_[--len];
    }
    double dk = y_[k];
    y_[k] = 0.0;
    for (; top < n_; ++top) {
      const int i = pattern_[top];
      const double yi = y_[i];
      y_[i] = 0.0;
      const int end = l_ptr_[i] + l_len_[i];
      for (int p = l_ptr_[i]; p < end; ++p) y_[l_ind_[p]] -= l_val_[p] * yi;
      const double lki = yi / d_[i];
      dk -= lki * yi;
      l_ind_[end] = k;
      l_val_[end] = lki;
      ++l_len_[i];
    }
    if (dk == 0.0 || !std::isfinite(dk)) return false;
    d_[k] = dk;
  }
  return true;
}

void SparseLdl::solve(double* x) const {
  for (int j = 0; j < n_; ++j) {
    const double xj = x[j];
    for (int p = l_ptr_[j]; p < l_ptr_[j + 1]; ++p) x[l_ind_[p]] -= l_val_[p] * xj;
  }
  for (int j = 0; j < n_; ++j) x[j] /= d_[j];
  for (int j = n_ - 1; j >= 0; --j) {
    double xj = x[j];
    for (int p = l_ptr_[j]; p < l_ptr_[j + 1]; ++p) xj -= l_val_[p] * x[l_ind_[p]];
    x[j] = xj;
  }
}

}  // namespace oltc

#pragma once

// Exact elimination: row echelon forms, rank, linear solves.

#include <cstddef>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include <gmpxx.h>

#include "rigidity/matrix.hpp"

namespace rigidity {

/// Gaussian elimination in place.  Returns the pivot column of each pivot
/// row (rows 0..rank-1 after the call).  With `reduced`, the result is the
/// reduced row echelon form with unit pivots.
template <ExactField F>
std::vector<std::size_t> echelon(DenseMatrix<F>& m, bool reduced) {
  const F& f = m.field();
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && f.is_zero(m(p, c))) ++p;
    if (p == m.rows()) continue;
    m.swap_rows(p, r);
    if (reduced) {
      const auto inv = f.inv(m(r, c));
      for (std::size_t j = c; j < m.cols(); ++j) m(r, j) = f.mul(m(r, j), inv);
    }
    const std::size_t first = reduced ? 0 : r + 1;
    const auto pivot_inv = reduced ? f.one() : f.inv(m(r, c));
    for (std::size_t i = first; i < m.rows(); ++i) {
      if (i == r || f.is_zero(m(i, c))) continue;
      const auto factor = f.mul(m(i, c), pivot_inv);
      for (std::size_t j = c; j < m.cols(); ++j)
        if (!f.is_zero(m(r, j))) m(i, j) = f.sub(m(i, j), f.mul(factor, m(r, j)));
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

namespace detail {

/// Fraction-free (Bareiss) rank of an integer matrix, destroying `a`.
inline std::size_t bareiss_rank(std::vector<std::vector<mpz_class>>& a, std::size_t cols) {
  const std::size_t rows = a.size();
  mpz_class prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && sgn(a[p][c]) == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        mpz_class t = a[r][c] * a[i][j] - a[i][c] * a[r][j];
        mpz_divexact(a[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      a[i][c] = 0;
    }
    prev = a[r][c];
    ++r;
  }
  return r;
}

}  // namespace detail

/// Rank over the matrix's field.  F_p uses plain elimination; Q clears
/// denominators row by row and runs Bareiss on the integer matrix.
template <ExactField F>
std::size_t exact_rank(const DenseMatrix<F>& a) {
  if constexpr (std::is_same_v<F, RationalField>) {
    std::vector<std::vector<mpz_class>> ints(a.rows(), std::vector<mpz_class>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
      mpz_class l = 1;
      for (std::size_t j = 0; j < a.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), a(i, j).get_den_mpz_t());
      for (std::size_t j = 0; j < a.cols(); ++j)
        ints[i][j] = a(i, j).get_num() * (l / a(i, j).get_den());
    }
    return detail::bareiss_rank(ints, a.cols());
  } else {
    DenseMatrix<F> m = a;
    return echelon(m, false).size();
  }
}

template <ExactField F>
std::size_t exact_rank(const SparseMatrix<F>& a, const Limits& limits = default_limits()) {
  return exact_rank(a.to_dense(limits));
}

/// One solution of A x = b with every free variable set to zero, or nullopt
/// when the system is inconsistent.
template <ExactField F>
std::optional<std::vector<typename F::Element>> solve(const DenseMatrix<F>& a,
                                                      std::span<const typename F::Element> b) {
  if (b.size() != a.rows()) throw DimensionMismatch("solve right-hand side");
  const F& f = a.field();
  DenseMatrix<F> aug(f, a.rows(), a.cols() + 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) aug(i, j) = a(i, j);
    aug(i, a.cols()) = b[i];
  }
  const auto pivots = echelon(aug, true);
  std::vector<typename F::Element> x(a.cols(), f.zero());
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    if (pivots[r] == a.cols()) return std::nullopt;
    x[pivots[r]] = aug(r, a.cols());
  }
  return x;
}

/// Indices j such that column j of A lies in the span of the other columns,
/// in increasing order.
template <ExactField F>
std::vector<std::size_t> dependent_columns(const DenseMatrix<F>& a) {
  DenseMatrix<F> m = a;
  const auto pivots = echelon(m, true);
  const F& f = a.field();
  std::vector<bool> is_pivot(a.cols(), false);
  for (auto p : pivots) is_pivot[p] = true;
  std::vector<bool> dependent(a.cols(), false);
  // Null vectors are indexed by free columns; column j is dependent iff
  // some null vector has a nonzero j-th coordinate.
  for (std::size_t c = 0; c < a.cols(); ++c) {
    if (is_pivot[c]) continue;
    dependent[c] = true;
    for (std::size_t r = 0; r < pivots.size(); ++r)
      if (!f.is_zero(m(r, c))) dependent[pivots[r]] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < a.cols(); ++c)
    if (dependent[c]) out.push_back(c);
  return out;
}

}  // namespace rigidity

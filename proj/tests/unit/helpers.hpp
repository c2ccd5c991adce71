#pragma once

#include <cstdint>
#include <vector>

#include "rigidity/field.hpp"
#include "rigidity/matrix.hpp"

namespace testing_helpers {

using rigidity::DenseMatrix;
using rigidity::PrimeField;
using rigidity::RationalField;

inline const PrimeField F2{2};
inline const PrimeField F3{3};
inline const PrimeField F5{5};
inline const PrimeField F7{7};
inline const RationalField Q{};

template <class F>
DenseMatrix<F> mat(const F& f, const std::vector<std::vector<std::int64_t>>& rows) {
  return DenseMatrix<F>::from_ints(f, rows);
}

/// Schoolbook product used as an independent reference.
template <class F>
DenseMatrix<F> naive_mul(const DenseMatrix<F>& a, const DenseMatrix<F>& b) {
  const F& f = a.field();
  DenseMatrix<F> c(f, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      auto s = f.zero();
      for (std::size_t l = 0; l < a.cols(); ++l) s = f.add(s, f.mul(a(i, l), b(l, j)));
      c(i, j) = s;
    }
  return c;
}

}  // namespace testing_helpers

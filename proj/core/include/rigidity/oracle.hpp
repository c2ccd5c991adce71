#pragma once

// Exhaustive rigidity on tiny matrices.
//
//   R(A, r)    = min nnz(Z) with rank(A - Z) <= r
//   R^rc(A, r) = min t such that some Z with at most t nonzeros in every row
//                and column has rank(A - Z) <= r
//
// Over F_p (p <= 5, sides <= 4) every r-dimensional column space is
// enumerated.  Over Q (sides <= 3) supports are enumerated and each is
// decided exactly: rank <= 1 completions through the zero pattern of u v^T,
// rank <= n - 1 of a nonsingular n x n matrix through one cofactor.

#include <cstddef>

#include "rigidity/field.hpp"
#include "rigidity/matrix.hpp"

namespace rigidity {

template <ExactField F>
struct OracleResult {
  std::size_t target_rank = 0;
  /// Number of changes for R, per-row/column bound for R^rc.
  std::size_t value = 0;
  /// rank(A - witness) <= target_rank.
  DenseMatrix<F> witness;
};

inline constexpr std::size_t kOracleMaxSidePrime = 4;
inline constexpr std::uint64_t kOracleMaxPrime = 5;
inline constexpr std::size_t kOracleMaxSideRational = 3;

OracleResult<PrimeField> brute_rigidity(const DenseMatrix<PrimeField>& a, std::size_t r);
OracleResult<PrimeField> brute_rc_rigidity(const DenseMatrix<PrimeField>& a, std::size_t r);
OracleResult<RationalField> brute_rigidity(const DenseMatrix<RationalField>& a, std::size_t r);
OracleResult<RationalField> brute_rc_rigidity(const DenseMatrix<RationalField>& a, std::size_t r);

}  // namespace rigidity

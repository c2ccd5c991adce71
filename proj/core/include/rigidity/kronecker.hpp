#pragma once

// Kronecker-structured matrices M_1 (x) ... (x) M_k.  Index tuples map to
// [0, n) in mixed radix with factor 1 most significant.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rigidity/matrix.hpp"

namespace rigidity {

/// Mixed-radix bijection between tuples in [d_1] x ... x [d_k] and [0, n).
class MixedRadix {
 public:
  MixedRadix() = default;
  explicit MixedRadix(std::vector<std::size_t> dims) : dims_(std::move(dims)), strides_(dims_.size()) {
    std::size_t s = 1;
    for (std::size_t i = dims_.size(); i-- > 0;) {
      strides_[i] = s;
      s *= dims_[i];
    }
    order_ = s;
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t order() const { return order_; }
  std::size_t stride(std::size_t i) const { return strides_[i]; }

  std::size_t encode(std::span<const std::size_t> digits) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) idx += digits[i] * strides_[i];
    return idx;
  }
  std::vector<std::size_t> decode(std::size_t idx) const {
    std::vector<std::size_t> digits(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) digits[i] = (idx / strides_[i]) % dims_[i];
    return digits;
  }
  std::size_t digit(std::size_t idx, std::size_t i) const { return (idx / strides_[i]) % dims_[i]; }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t order_ = 1;
};

/// Index map for regrouping Kronecker factors: the product taken in the
/// order `order` (a permutation of factor positions) equals
/// P * (product in original order) * P^T where P sends original index
/// `i` to `map[i]`.
inline std::vector<std::size_t> regroup_index_map(const std::vector<std::size_t>& dims,
                                                  const std::vector<std::size_t>& order) {
  const MixedRadix original(dims);
  std::vector<std::size_t> permuted_dims(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) permuted_dims[j] = dims[order[j]];
  const MixedRadix permuted(permuted_dims);
  std::vector<std::size_t> map(original.order());
  std::vector<std::size_t> digits(dims.size());
  for (std::size_t idx = 0; idx < original.order(); ++idx) {
    for (std::size_t j = 0; j < order.size(); ++j) digits[j] = original.digit(idx, order[j]);
    map[idx] = permuted.encode(digits);
  }
  return map;
}

template <ExactField F>
class KroneckerSpec {
 public:
  using Element = typename F::Element;

  KroneckerSpec(F field, std::vector<DenseMatrix<F>> factors, const Limits& limits = default_limits())
      : field_(std::move(field)), factors_(std::move(factors)) {
    if (factors_.empty()) throw InvalidArgument("Kronecker product needs at least one factor");
    std::vector<std::size_t> dims;
    std::size_t n = 1;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const auto& m = factors_[i];
      check_same_field(field_, m.field());
      if (!m.is_square()) throw DimensionMismatch("factor " + std::to_string(i + 1) + " is not square");
      if (m.rows() < 2)
        throw InvalidArgument("factor " + std::to_string(i + 1) + " has dimension < 2");
      dims.push_back(m.rows());
      if (n > limits.max_order / m.rows())
        throw SizeCapExceeded("Kronecker order exceeds " + std::to_string(limits.max_order));
      n *= m.rows();
    }
    radix_ = MixedRadix(std::move(dims));
  }

  const F& field() const { return field_; }
  const std::vector<DenseMatrix<F>>& factors() const { return factors_; }
  const std::vector<std::size_t>& dims() const { return radix_.dims(); }
  const MixedRadix& radix() const { return radix_; }
  std::size_t order() const { return radix_.order(); }
  std::size_t size() const { return factors_.size(); }

  Element entry(std::size_t row, std::size_t col) const {
    Element v = field_.one();
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      v = field_.mul(v, factors_[i](radix_.digit(row, i), radix_.digit(col, i)));
      if (field_.is_zero(v)) break;
    }
    return v;
  }

  SparseMatrix<F> materialize() const {
    SparseMatrix<F> acc = SparseMatrix<F>::from_dense(factors_[0]);
    for (std::size_t i = 1; i < factors_.size(); ++i) acc = kron(acc, SparseMatrix<F>::from_dense(factors_[i]));
    return acc;
  }

  /// out = v^T (M_1 (x) ... (x) M_k), by one mode product per factor.
  std::vector<Element> left_apply(std::span<const Element> v) const {
    if (v.size() != order()) throw DimensionMismatch("KroneckerSpec::left_apply");
    std::vector<Element> cur(v.begin(), v.end());
    std::vector<Element> next(order(), field_.zero());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const auto& m = factors_[i];
      const std::size_t d = m.rows();
      const std::size_t inner = radix_.stride(i);
      const std::size_t outer = order() / (inner * d);
      for (auto& e : next) e = field_.zero();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t t = 0; t < inner; ++t) {
            const auto& va = cur[(o * d + a) * inner + t];
            if (field_.is_zero(va)) continue;
            for (std::size_t b = 0; b < d; ++b)
              if (!field_.is_zero(m(a, b))) {
                auto& dst = next[(o * d + b) * inner + t];
                dst = field_.add(dst, field_.mul(va, m(a, b)));
              }
          }
      std::swap(cur, next);
    }
    return cur;
  }

  /// Same factors, same order, transposed.
  KroneckerSpec transpose() const {
    std::vector<DenseMatrix<F>> t;
    for (const auto& m : factors_) t.push_back(m.transpose());
    return KroneckerSpec(field_, std::move(t));
  }

 private:
  F field_;
  std::vector<DenseMatrix<F>> factors_;
  MixedRadix radix_;
};

/// Rows of a sparse matrix times a Kronecker product: V * (M_1 (x) ... (x) M_k).
/// Each row is either scattered through the nonzero pattern of the rows of
/// the product it touches, or swept densely by mode products, whichever is
/// cheaper by an operation count estimate.
template <ExactField F>
SparseMatrix<F> mat_mul(const SparseMatrix<F>& v, const KroneckerSpec<F>& b) {
  if (v.cols() != b.order()) throw DimensionMismatch("sparse * Kronecker");
  const F& f = b.field();
  const std::size_t n = b.order();
  double row_nnz = 1, sweep = 0;
  for (const auto& m : b.factors()) {
    row_nnz *= static_cast<double>(row_col_nnz(m).max_row);
    sweep += static_cast<double>(n) * static_cast<double>(m.rows());
  }
  typename SparseMatrix<F>::RowBuilder out(f, v.rows(), n);
  detail::RowAccumulator<F> acc(f, n);
  std::vector<typename F::Element> row;
  std::vector<std::pair<std::size_t, typename F::Element>> cur, next;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    if (static_cast<double>(v.row_nnz(i)) * row_nnz <= sweep) {
      for (std::size_t k = v.row_begin(i); k < v.row_end(i); ++k) {
        // expand row col_at(k) of the product, scaled by the entry
        const std::size_t r = v.col_at(k);
        cur.assign(1, {0, v.value_at(k)});
        for (std::size_t t = 0; t < b.size(); ++t) {
          const auto& m = b.factors()[t];
          const std::size_t a = b.radix().digit(r, t);
          next.clear();
          for (const auto& [c, x] : cur)
            for (std::size_t j = 0; j < m.cols(); ++j)
              if (!f.is_zero(m(a, j))) next.emplace_back(c * m.cols() + j, f.mul(x, m(a, j)));
          std::swap(cur, next);
        }
        for (const auto& [c, x] : cur) acc.add(c, x);
      }
      acc.flush(out);
      continue;
    }
    row.assign(n, f.zero());
    for (std::size_t k = v.row_begin(i); k < v.row_end(i); ++k) row[v.col_at(k)] = v.value_at(k);
    const auto prod = b.left_apply(row);
    for (std::size_t j = 0; j < prod.size(); ++j) out.push(j, prod[j]);
    out.end_row();
  }
  return out.finish();
}

}  // namespace rigidity

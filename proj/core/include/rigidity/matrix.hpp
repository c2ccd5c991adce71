#pragma once

// Dense, sparse (CSR) and monomial matrices over an exact field.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rigidity/errors.hpp"
#include "rigidity/field.hpp"

namespace rigidity {

/// Size guards shared by every module.
struct Limits {
  /// Largest matrix order any kron/materialization may produce.
  std::size_t max_order = 65536;
  /// Largest number of stored entries for a dense materialization.
  std::size_t max_dense_entries = std::size_t{1} << 26;
};

inline const Limits& default_limits() {
  static const Limits limits{};
  return limits;
}

struct NnzProfile {
  std::size_t max_row = 0;
  std::size_t max_col = 0;
  std::size_t max() const { return std::max(max_row, max_col); }
  bool operator==(const NnzProfile&) const = default;
};

inline void check_dense_size(std::size_t rows, std::size_t cols, const Limits& limits) {
  if (rows > limits.max_order || cols > limits.max_order ||
      (cols != 0 && rows > limits.max_dense_entries / cols))
    throw SizeCapExceeded("dense " + std::to_string(rows) + "x" + std::to_string(cols));
}

template <ExactField F>
void check_same_field(const F& a, const F& b) {
  if (!(a == b)) throw FieldMismatch(a.name() + " vs " + b.name());
}

// ---------------------------------------------------------------------------
// DenseMatrix

template <ExactField F>
class DenseMatrix {
 public:
  using Field = F;
  using Element = typename F::Element;

  DenseMatrix(F field, std::size_t rows, std::size_t cols)
      : field_(std::move(field)), rows_(rows), cols_(cols), data_(rows * cols, field_.zero()) {}

  static DenseMatrix identity(const F& field, std::size_t n) {
    DenseMatrix m(field, n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = field.one();
    return m;
  }

  /// Convenience constructor from small integers, row-major.
  static DenseMatrix from_ints(const F& field, const std::vector<std::vector<std::int64_t>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    DenseMatrix m(field, r, c);
    for (std::size_t i = 0; i < r; ++i) {
      if (rows[i].size() != c) throw DimensionMismatch("ragged rows");
      for (std::size_t j = 0; j < c; ++j) m(i, j) = field.from_int(rows[i][j]);
    }
    return m;
  }

  const F& field() const { return field_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  Element& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Element& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<Element> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const Element> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
  }
  void swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
  }

  DenseMatrix transpose() const {
    DenseMatrix t(field_, cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  /// Rows [r0, r0+nr) x cols [c0, c0+nc).
  DenseMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    DenseMatrix b(field_, nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [&](const Element& e) { return field_.is_zero(e); });
  }

  bool operator==(const DenseMatrix& o) const {
    return field_ == o.field_ && rows_ == o.rows_ && cols_ == o.cols_ &&
           std::equal(data_.begin(), data_.end(), o.data_.begin(),
                      [&](const Element& a, const Element& b) { return field_.equal(a, b); });
  }

 private:
  F field_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Element> data_;
};

template <ExactField F>
DenseMatrix<F> mat_mul(const DenseMatrix<F>& a, const DenseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.cols() != b.rows())
    throw DimensionMismatch(std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                            std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  const F& f = a.field();
  DenseMatrix<F> c(f, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const auto& ail = a(i, l);
      if (f.is_zero(ail)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j)
        if (!f.is_zero(b(l, j))) c(i, j) = f.add(c(i, j), f.mul(ail, b(l, j)));
    }
  return c;
}

template <ExactField F>
DenseMatrix<F> mat_add(const DenseMatrix<F>& a, const DenseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("mat_add");
  DenseMatrix<F> c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a.field().add(a(i, j), b(i, j));
  return c;
}

template <ExactField F>
DenseMatrix<F> mat_sub(const DenseMatrix<F>& a, const DenseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("mat_sub");
  DenseMatrix<F> c = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a.field().sub(a(i, j), b(i, j));
  return c;
}

/// (A (x) B)[(i,j),(k,l)] = A[i,k] * B[j,l], row index i*B.rows + j.
template <ExactField F>
DenseMatrix<F> kron(const DenseMatrix<F>& a, const DenseMatrix<F>& b, const Limits& limits = default_limits()) {
  check_same_field(a.field(), b.field());
  const std::size_t rows = a.rows() * b.rows();
  const std::size_t cols = a.cols() * b.cols();
  check_dense_size(rows, cols, limits);
  const F& f = a.field();
  DenseMatrix<F> c(f, rows, cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (f.is_zero(a(i, k))) continue;
      for (std::size_t j = 0; j < b.rows(); ++j)
        for (std::size_t l = 0; l < b.cols(); ++l)
          c(i * b.rows() + j, k * b.cols() + l) = f.mul(a(i, k), b(j, l));
    }
  return c;
}

template <ExactField F>
NnzProfile row_col_nnz(const DenseMatrix<F>& a) {
  NnzProfile p;
  std::vector<std::size_t> col_counts(a.cols(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t row_count = 0;
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!a.field().is_zero(a(i, j))) {
        ++row_count;
        ++col_counts[j];
      }
    p.max_row = std::max(p.max_row, row_count);
  }
  for (auto c : col_counts) p.max_col = std::max(p.max_col, c);
  return p;
}

// ---------------------------------------------------------------------------
// SparseMatrix (compressed sparse rows; entries sorted, unique, nonzero)

template <ExactField F>
struct Triplet {
  std::size_t row;
  std::size_t col;
  typename F::Element value;
};

template <ExactField F>
class SparseMatrix {
 public:
  using Field = F;
  using Element = typename F::Element;
  using Index = std::uint32_t;

  SparseMatrix(F field, std::size_t rows, std::size_t cols)
      : field_(std::move(field)), rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {
    if (cols > std::numeric_limits<Index>::max()) throw SizeCapExceeded("sparse column count");
  }

  /// Sorts, sums duplicates and drops zeros.
  static SparseMatrix from_triplets(const F& field, std::size_t rows, std::size_t cols,
                                    std::vector<Triplet<F>> entries) {
    for (const auto& t : entries)
      if (t.row >= rows || t.col >= cols)
        throw DimensionMismatch("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    SparseMatrix m(field, rows, cols);
    m.col_idx_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      while (k < entries.size() && entries[k].row == i) {
        Element sum = entries[k].value;
        const std::size_t col = entries[k].col;
        ++k;
        while (k < entries.size() && entries[k].row == i && entries[k].col == col)
          sum = field.add(sum, entries[k++].value);
        if (!field.is_zero(sum)) {
          m.col_idx_.push_back(static_cast<Index>(col));
          m.values_.push_back(std::move(sum));
        }
      }
      m.row_ptr_[i + 1] = m.col_idx_.size();
    }
    return m;
  }

  static SparseMatrix identity(const F& field, std::size_t n) {
    SparseMatrix m(field, n, n);
    m.col_idx_.resize(n);
    m.values_.assign(n, field.one());
    for (std::size_t i = 0; i < n; ++i) {
      m.col_idx_[i] = static_cast<Index>(i);
      m.row_ptr_[i + 1] = i + 1;
    }
    return m;
  }

  static SparseMatrix from_dense(const DenseMatrix<F>& d) {
    SparseMatrix m(d.field(), d.rows(), d.cols());
    for (std::size_t i = 0; i < d.rows(); ++i) {
      for (std::size_t j = 0; j < d.cols(); ++j)
        if (!d.field().is_zero(d(i, j))) {
          m.col_idx_.push_back(static_cast<Index>(j));
          m.values_.push_back(d(i, j));
        }
      m.row_ptr_[i + 1] = m.col_idx_.size();
    }
    return m;
  }

  /// Appends rows one at a time.  Each row's columns must be strictly
  /// increasing; zero values are skipped.
  class RowBuilder {
   public:
    RowBuilder(const F& field, std::size_t rows, std::size_t cols) : m_(field, rows, cols) {}
    void push(std::size_t col, Element value) {
      if (m_.field_.is_zero(value)) return;
      m_.col_idx_.push_back(static_cast<Index>(col));
      m_.values_.push_back(std::move(value));
    }
    void end_row() {
      if (next_row_ >= m_.rows_) throw DimensionMismatch("too many rows in RowBuilder");
      m_.row_ptr_[++next_row_] = m_.col_idx_.size();
    }
    SparseMatrix finish() {
      while (next_row_ < m_.rows_) end_row();
      return std::move(m_);
    }

   private:
    SparseMatrix m_;
    std::size_t next_row_ = 0;
  };

  const F& field() const { return field_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::size_t row_begin(std::size_t i) const { return row_ptr_[i]; }
  std::size_t row_end(std::size_t i) const { return row_ptr_[i + 1]; }
  std::size_t row_nnz(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  std::size_t col_at(std::size_t k) const { return col_idx_[k]; }
  const Element& value_at(std::size_t k) const { return values_[k]; }

  Element at(std::size_t i, std::size_t j) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<Index>(j));
    if (it == last || *it != j) return field_.zero();
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
  }

  std::vector<Triplet<F>> triplets() const {
    std::vector<Triplet<F>> out;
    out.reserve(nnz());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out.push_back({i, col_idx_[k], values_[k]});
    return out;
  }

  DenseMatrix<F> to_dense(const Limits& limits = default_limits()) const {
    check_dense_size(rows_, cols_, limits);
    DenseMatrix<F> d(field_, rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
    return d;
  }

  SparseMatrix transpose() const {
    SparseMatrix t(field_, cols_, rows_);
    std::vector<std::size_t> counts(cols_ + 1, 0);
    for (auto c : col_idx_) ++counts[c + 1];
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    t.row_ptr_ = counts;
    t.col_idx_.resize(nnz());
    t.values_.resize(nnz(), field_.zero());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const std::size_t slot = counts[col_idx_[k]]++;
        t.col_idx_[slot] = static_cast<Index>(i);
        t.values_[slot] = values_[k];
      }
    return t;
  }

  bool is_zero() const { return nnz() == 0; }

  bool operator==(const SparseMatrix& o) const {
    return field_ == o.field_ && rows_ == o.rows_ && cols_ == o.cols_ && row_ptr_ == o.row_ptr_ &&
           col_idx_ == o.col_idx_ &&
           std::equal(values_.begin(), values_.end(), o.values_.begin(),
                      [&](const Element& a, const Element& b) { return field_.equal(a, b); });
  }

 private:
  F field_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::size_t> row_ptr_;
  std::vector<Index> col_idx_;
  std::vector<Element> values_;
};

template <ExactField F>
NnzProfile row_col_nnz(const SparseMatrix<F>& a) {
  NnzProfile p;
  std::vector<std::size_t> col_counts(a.cols(), 0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    p.max_row = std::max(p.max_row, a.row_nnz(i));
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) ++col_counts[a.col_at(k)];
  }
  for (auto c : col_counts) p.max_col = std::max(p.max_col, c);
  return p;
}

namespace detail {

/// Dense scatter accumulator reused across the rows of a sparse product.
template <ExactField F>
class RowAccumulator {
 public:
  using Element = typename F::Element;
  RowAccumulator(const F& field, std::size_t width)
      : field_(field), values_(width, field.zero()), used_(width, false) {}

  void add(std::size_t col, const Element& v) {
    if (!used_[col]) {
      used_[col] = true;
      touched_.push_back(col);
      values_[col] = v;
    } else {
      values_[col] = field_.add(values_[col], v);
    }
  }

  template <class Builder>
  void flush(Builder& out) {
    std::sort(touched_.begin(), touched_.end());
    for (auto c : touched_) {
      out.push(c, std::move(values_[c]));
      values_[c] = field_.zero();
      used_[c] = false;
    }
    touched_.clear();
    out.end_row();
  }

 private:
  const F& field_;
  std::vector<Element> values_;
  std::vector<bool> used_;
  std::vector<std::size_t> touched_;
};

}  // namespace detail

template <ExactField F>
SparseMatrix<F> mat_mul(const SparseMatrix<F>& a, const SparseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.cols() != b.rows())
    throw DimensionMismatch(std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                            std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  const F& f = a.field();
  typename SparseMatrix<F>::RowBuilder out(f, a.rows(), b.cols());
  detail::RowAccumulator<F> acc(f, b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t ka = a.row_begin(i); ka < a.row_end(i); ++ka) {
      const std::size_t l = a.col_at(ka);
      for (std::size_t kb = b.row_begin(l); kb < b.row_end(l); ++kb)
        acc.add(b.col_at(kb), f.mul(a.value_at(ka), b.value_at(kb)));
    }
    acc.flush(out);
  }
  return out.finish();
}

template <ExactField F>
SparseMatrix<F> mat_add(const SparseMatrix<F>& a, const SparseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("mat_add");
  const F& f = a.field();
  typename SparseMatrix<F>::RowBuilder out(f, a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t ka = a.row_begin(i), kb = b.row_begin(i);
    while (ka < a.row_end(i) || kb < b.row_end(i)) {
      if (kb == b.row_end(i) || (ka < a.row_end(i) && a.col_at(ka) < b.col_at(kb))) {
        out.push(a.col_at(ka), a.value_at(ka));
        ++ka;
      } else if (ka == a.row_end(i) || b.col_at(kb) < a.col_at(ka)) {
        out.push(b.col_at(kb), b.value_at(kb));
        ++kb;
      } else {
        out.push(a.col_at(ka), f.add(a.value_at(ka), b.value_at(kb)));
        ++ka;
        ++kb;
      }
    }
    out.end_row();
  }
  return out.finish();
}

template <ExactField F>
SparseMatrix<F> mat_neg(const SparseMatrix<F>& a) {
  typename SparseMatrix<F>::RowBuilder out(a.field(), a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) out.push(a.col_at(k), a.field().neg(a.value_at(k)));
    out.end_row();
  }
  return out.finish();
}

template <ExactField F>
SparseMatrix<F> mat_sub(const SparseMatrix<F>& a, const SparseMatrix<F>& b) {
  return mat_add(a, mat_neg(b));
}

template <ExactField F>
SparseMatrix<F> kron(const SparseMatrix<F>& a, const SparseMatrix<F>& b, const Limits& limits = default_limits()) {
  check_same_field(a.field(), b.field());
  const std::size_t rows = a.rows() * b.rows();
  const std::size_t cols = a.cols() * b.cols();
  if (rows > limits.max_order || cols > limits.max_order)
    throw SizeCapExceeded("kron output " + std::to_string(rows) + "x" + std::to_string(cols));
  const F& f = a.field();
  typename SparseMatrix<F>::RowBuilder out(f, rows, cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      for (std::size_t ka = a.row_begin(i); ka < a.row_end(i); ++ka)
        for (std::size_t kb = b.row_begin(j); kb < b.row_end(j); ++kb)
          out.push(a.col_at(ka) * b.cols() + b.col_at(kb), f.mul(a.value_at(ka), b.value_at(kb)));
      out.end_row();
    }
  return out.finish();
}

/// [A | B]
template <ExactField F>
SparseMatrix<F> hconcat(const SparseMatrix<F>& a, const SparseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.rows() != b.rows()) throw DimensionMismatch("hconcat row counts");
  typename SparseMatrix<F>::RowBuilder out(a.field(), a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) out.push(a.col_at(k), a.value_at(k));
    for (std::size_t k = b.row_begin(i); k < b.row_end(i); ++k) out.push(a.cols() + b.col_at(k), b.value_at(k));
    out.end_row();
  }
  return out.finish();
}

/// [A ; B]
template <ExactField F>
SparseMatrix<F> vconcat(const SparseMatrix<F>& a, const SparseMatrix<F>& b) {
  check_same_field(a.field(), b.field());
  if (a.cols() != b.cols()) throw DimensionMismatch("vconcat column counts");
  typename SparseMatrix<F>::RowBuilder out(a.field(), a.rows() + b.rows(), a.cols());
  for (const auto* m : {&a, &b})
    for (std::size_t i = 0; i < m->rows(); ++i) {
      for (std::size_t k = m->row_begin(i); k < m->row_end(i); ++k) out.push(m->col_at(k), m->value_at(k));
      out.end_row();
    }
  return out.finish();
}

/// Selects columns `cols` (in the given order) of A.
template <ExactField F>
SparseMatrix<F> select_columns(const SparseMatrix<F>& a, const std::vector<std::size_t>& cols) {
  std::vector<std::ptrdiff_t> where(a.cols(), -1);
  for (std::size_t c = 0; c < cols.size(); ++c) where[cols[c]] = static_cast<std::ptrdiff_t>(c);
  std::vector<Triplet<F>> t;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k)
      if (where[a.col_at(k)] >= 0) t.push_back({i, static_cast<std::size_t>(where[a.col_at(k)]), a.value_at(k)});
  return SparseMatrix<F>::from_triplets(a.field(), a.rows(), cols.size(), std::move(t));
}

/// Selects rows `rows` (in the given order) of A.
template <ExactField F>
SparseMatrix<F> select_rows(const SparseMatrix<F>& a, const std::vector<std::size_t>& rows) {
  typename SparseMatrix<F>::RowBuilder out(a.field(), rows.size(), a.cols());
  for (auto i : rows) {
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) out.push(a.col_at(k), a.value_at(k));
    out.end_row();
  }
  return out.finish();
}

/// out = v^T A (dense row vector times sparse matrix).
template <ExactField F>
std::vector<typename F::Element> left_apply(std::span<const typename F::Element> v, const SparseMatrix<F>& a) {
  if (v.size() != a.rows()) throw DimensionMismatch("left_apply");
  const F& f = a.field();
  std::vector<typename F::Element> out(a.cols(), f.zero());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (f.is_zero(v[i])) continue;
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k)
      out[a.col_at(k)] = f.add(out[a.col_at(k)], f.mul(v[i], a.value_at(k)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// MonomialMatrix: row i holds `scale[i]` in column `perm[i]`.

template <ExactField F>
class MonomialMatrix {
 public:
  using Element = typename F::Element;

  MonomialMatrix(F field, std::vector<std::size_t> perm, std::vector<Element> scale)
      : field_(std::move(field)), perm_(std::move(perm)), scale_(std::move(scale)) {
    if (perm_.size() != scale_.size()) throw DimensionMismatch("monomial perm/scale sizes");
    std::vector<bool> seen(perm_.size(), false);
    for (auto p : perm_) {
      if (p >= perm_.size() || seen[p]) throw InvalidArgument("monomial permutation is not a bijection");
      seen[p] = true;
    }
  }

  static MonomialMatrix identity(const F& field, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    return {field, std::move(perm), std::vector<Element>(n, field.one())};
  }
  static MonomialMatrix permutation(const F& field, std::vector<std::size_t> perm) {
    const std::size_t n = perm.size();
    return {field, std::move(perm), std::vector<Element>(n, field.one())};
  }
  static MonomialMatrix diagonal(const F& field, std::vector<Element> scale) {
    std::vector<std::size_t> perm(scale.size());
    std::iota(perm.begin(), perm.end(), 0);
    return {field, std::move(perm), std::move(scale)};
  }
  /// Permutation matrix exchanging indices a and b.
  static MonomialMatrix transposition(const F& field, std::size_t n, std::size_t a, std::size_t b) {
    auto m = identity(field, n);
    std::swap(m.perm_[a], m.perm_[b]);
    return m;
  }

  const F& field() const { return field_; }
  std::size_t size() const { return perm_.size(); }
  const std::vector<std::size_t>& perm() const { return perm_; }
  const std::vector<Element>& scale() const { return scale_; }

  bool is_diagonal() const {
    for (std::size_t i = 0; i < perm_.size(); ++i)
      if (perm_[i] != i && !field_.is_zero(scale_[i])) return false;
    return true;
  }

  SparseMatrix<F> to_sparse() const {
    typename SparseMatrix<F>::RowBuilder out(field_, size(), size());
    for (std::size_t i = 0; i < size(); ++i) {
      out.push(perm_[i], scale_[i]);
      out.end_row();
    }
    return out.finish();
  }
  DenseMatrix<F> to_dense() const { return to_sparse().to_dense(); }

  MonomialMatrix transpose() const {
    std::vector<std::size_t> perm(size());
    std::vector<Element> scale(size(), field_.zero());
    for (std::size_t i = 0; i < size(); ++i) {
      perm[perm_[i]] = i;
      scale[perm_[i]] = scale_[i];
    }
    return {field_, std::move(perm), std::move(scale)};
  }

  friend MonomialMatrix operator*(const MonomialMatrix& a, const MonomialMatrix& b) {
    check_same_field(a.field_, b.field_);
    if (a.size() != b.size()) throw DimensionMismatch("monomial product");
    std::vector<std::size_t> perm(a.size());
    std::vector<Element> scale(a.size(), a.field_.zero());
    for (std::size_t i = 0; i < a.size(); ++i) {
      perm[i] = b.perm_[a.perm_[i]];
      scale[i] = a.field_.mul(a.scale_[i], b.scale_[a.perm_[i]]);
    }
    return {a.field_, std::move(perm), std::move(scale)};
  }

  friend MonomialMatrix kron(const MonomialMatrix& a, const MonomialMatrix& b) {
    check_same_field(a.field_, b.field_);
    const std::size_t m = b.size();
    std::vector<std::size_t> perm(a.size() * m);
    std::vector<Element> scale(a.size() * m, a.field_.zero());
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) {
        perm[i * m + j] = a.perm_[i] * m + b.perm_[j];
        scale[i * m + j] = a.field_.mul(a.scale_[i], b.scale_[j]);
      }
    return {a.field_, std::move(perm), std::move(scale)};
  }

 private:
  F field_;
  std::vector<std::size_t> perm_;
  std::vector<Element> scale_;
};

/// Returns the monomial form of `m` if every row and column has at most one
/// nonzero entry (and the pattern extends to a bijection).
template <ExactField F>
std::optional<MonomialMatrix<F>> as_monomial(const DenseMatrix<F>& m) {
  if (!m.is_square()) return std::nullopt;
  const std::size_t n = m.rows();
  const F& f = m.field();
  std::vector<std::size_t> perm(n, n);
  std::vector<typename F::Element> scale(n, f.zero());
  std::vector<bool> col_used(n, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (f.is_zero(m(i, j))) continue;
      if (perm[i] != n || col_used[j]) return std::nullopt;
      perm[i] = j;
      scale[i] = m(i, j);
      col_used[j] = true;
    }
  // Zero rows are matched with unused columns (scale stays zero).
  std::size_t free_col = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] != n) continue;
    while (col_used[free_col]) ++free_col;
    perm[i] = free_col;
    col_used[free_col] = true;
  }
  return MonomialMatrix<F>(f, std::move(perm), std::move(scale));
}

}  // namespace rigidity

#pragma once

// Low-rank-plus-sparse certificates  target = E + Z  with rank(E) <= r and
// at most t nonzeros in every row and column of Z.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rigidity/kronecker.hpp"
#include "rigidity/linalg.hpp"
#include "rigidity/matrix.hpp"

namespace rigidity {

// ---------------------------------------------------------------------------
// Target: a Kronecker product kept in factored form, or an explicit sparse matrix.

template <ExactField F>
class Target {
 public:
  using Element = typename F::Element;
  using Row = std::vector<std::pair<std::size_t, Element>>;

  explicit Target(KroneckerSpec<F> spec) : v_(std::move(spec)) {}
  explicit Target(SparseMatrix<F> m) : v_(std::move(m)) {}

  bool is_kronecker() const { return std::holds_alternative<KroneckerSpec<F>>(v_); }
  const KroneckerSpec<F>& kronecker() const { return std::get<KroneckerSpec<F>>(v_); }
  const SparseMatrix<F>& sparse() const { return std::get<SparseMatrix<F>>(v_); }

  const F& field() const {
    return std::visit([](const auto& m) -> const F& { return m.field(); }, v_);
  }
  std::size_t rows() const { return is_kronecker() ? kronecker().order() : sparse().rows(); }
  std::size_t cols() const { return is_kronecker() ? kronecker().order() : sparse().cols(); }

  /// Row i as increasing (column, nonzero value) pairs.
  void row(std::size_t i, Row& out) const {
    out.clear();
    if (!is_kronecker()) {
      const auto& m = sparse();
      for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k) out.emplace_back(m.col_at(k), m.value_at(k));
      return;
    }
    const auto& spec = kronecker();
    const F& f = spec.field();
    out.emplace_back(0, f.one());
    Row next;
    for (std::size_t t = 0; t < spec.size(); ++t) {
      const auto& m = spec.factors()[t];
      const std::size_t a = spec.radix().digit(i, t);
      next.clear();
      for (const auto& [c, v] : out)
        for (std::size_t b = 0; b < m.cols(); ++b)
          if (!f.is_zero(m(a, b))) next.emplace_back(c * m.cols() + b, f.mul(v, m(a, b)));
      std::swap(out, next);
    }
  }

  SparseMatrix<F> materialize(const Limits& limits = default_limits()) const {
    if (!is_kronecker()) return sparse();
    if (rows() > limits.max_order) throw SizeCapExceeded("target order " + std::to_string(rows()));
    return kronecker().materialize();
  }

  Target transpose() const {
    if (is_kronecker()) return Target(kronecker().transpose());
    return Target(sparse().transpose());
  }

  /// v * target.
  SparseMatrix<F> left_multiply(const SparseMatrix<F>& v) const {
    if (is_kronecker()) return mat_mul(v, kronecker());
    return mat_mul(v, sparse());
  }

  /// A * B, kept factored when both are Kronecker products of equal shape.
  static Target product(const Target& a, const Target& b, const Limits& limits = default_limits()) {
    if (a.cols() != b.rows()) throw DimensionMismatch("target product");
    if (a.is_kronecker() && b.is_kronecker() && a.kronecker().dims() == b.kronecker().dims()) {
      std::vector<DenseMatrix<F>> fs;
      for (std::size_t t = 0; t < a.kronecker().size(); ++t)
        fs.push_back(mat_mul(a.kronecker().factors()[t], b.kronecker().factors()[t]));
      return Target(KroneckerSpec<F>(a.field(), std::move(fs), limits));
    }
    return Target(mat_mul(a.materialize(limits), b.materialize(limits)));
  }

  static Target kron(const Target& a, const Target& b, const Limits& limits = default_limits()) {
    if (a.is_kronecker() && b.is_kronecker()) {
      auto fs = a.kronecker().factors();
      for (const auto& m : b.kronecker().factors()) fs.push_back(m);
      return Target(KroneckerSpec<F>(a.field(), std::move(fs), limits));
    }
    return Target(rigidity::kron(a.materialize(limits), b.materialize(limits), limits));
  }

 private:
  std::variant<KroneckerSpec<F>, SparseMatrix<F>> v_;
};

// ---------------------------------------------------------------------------
// Low-rank part kinds

/// E = 0.
struct ZeroPart {};
/// E = the target restricted to rows `rows` and columns `cols`; rank <= |rows| + |cols|.
struct SupportPart {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
};
/// E = U * V; rank <= inner dimension.
template <ExactField F>
struct FactoredPart {
  SparseMatrix<F> u;
  SparseMatrix<F> v;
};
/// E given entry by entry.
template <ExactField F>
struct ExplicitPart {
  SparseMatrix<F> e;
};
/// E = target - Z; the rank bound is the trivial one.
struct ResidualPart {};

template <ExactField F>
using LowRankPart = std::variant<ZeroPart, SupportPart, FactoredPart<F>, ExplicitPart<F>, ResidualPart>;

inline const char* lowrank_kind_name(std::size_t index) {
  static const char* names[] = {"zero", "support", "factored", "explicit", "residual"};
  return names[index];
}

template <ExactField F>
struct Cert {
  F field;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::shared_ptr<const Target<F>> target;  // may be null for a parsed certificate
  LowRankPart<F> low = ZeroPart{};
  SparseMatrix<F> z;
  std::size_t claimed_rank = 0;
  std::size_t claimed_sparsity = 0;

  const char* kind() const { return lowrank_kind_name(low.index()); }
};

/// Rank bound that follows from the shape of the low-rank part alone.
template <ExactField F>
std::size_t structural_rank(const Cert<F>& c) {
  const std::size_t full = std::min(c.rows, c.cols);
  return std::visit(
      [&](const auto& p) -> std::size_t {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ZeroPart>) return 0;
        else if constexpr (std::is_same_v<P, SupportPart>) return std::min(full, p.rows.size() + p.cols.size());
        else if constexpr (std::is_same_v<P, FactoredPart<F>>) return std::min(full, p.u.cols());
        else return full;
      },
      c.low);
}

template <ExactField F>
std::shared_ptr<const Target<F>> share(Target<F> t) {
  return std::make_shared<const Target<F>>(std::move(t));
}

// ---------------------------------------------------------------------------
// Simple certificates

/// (0, 0) certificate of a zero target.
template <ExactField F>
Cert<F> zero_cert(std::shared_ptr<const Target<F>> target) {
  const F& f = target->field();
  Cert<F> c{f, target->rows(), target->cols(), target, ZeroPart{}, SparseMatrix<F>(f, target->rows(), target->cols()), 0, 0};
  return c;
}

/// (0, t) certificate with Z = target.
template <ExactField F>
Cert<F> sparse_cert(std::shared_ptr<const Target<F>> target, const Limits& limits = default_limits()) {
  auto z = target->materialize(limits);
  const std::size_t t = row_col_nnz(z).max();
  Cert<F> c{target->field(), target->rows(), target->cols(), target, ZeroPart{}, std::move(z), 0, t};
  return c;
}

/// (0, 1) certificate of a monomial target.
template <ExactField F>
Cert<F> monomial_cert(std::shared_ptr<const Target<F>> target, const Limits& limits = default_limits()) {
  auto c = sparse_cert(std::move(target), limits);
  if (c.claimed_sparsity > 1) throw InvalidArgument("monomial_cert: target is not monomial");
  c.claimed_sparsity = 1;
  return c;
}

/// (min(n,m), 0) style certificate with E = target - Z, Z given.
template <ExactField F>
Cert<F> residual_cert(std::shared_ptr<const Target<F>> target, SparseMatrix<F> z, std::size_t claimed_rank,
                      std::size_t claimed_sparsity) {
  Cert<F> c{target->field(), target->rows(), target->cols(), std::move(target), ResidualPart{}, std::move(z),
            claimed_rank, claimed_sparsity};
  return c;
}

// ---------------------------------------------------------------------------
// Conversions

namespace detail {

template <ExactField F>
SparseMatrix<F> unit_rows(const F& f, const std::vector<std::size_t>& idx, std::size_t width) {
  typename SparseMatrix<F>::RowBuilder b(f, idx.size(), width);
  for (auto i : idx) {
    b.push(i, f.one());
    b.end_row();
  }
  return b.finish();
}

template <ExactField F>
SparseMatrix<F> target_rows(const Target<F>& t, const std::vector<std::size_t>& idx) {
  typename SparseMatrix<F>::RowBuilder b(t.field(), idx.size(), t.cols());
  typename Target<F>::Row row;
  for (auto i : idx) {
    t.row(i, row);
    for (auto& [c, v] : row) b.push(c, std::move(v));
    b.end_row();
  }
  return b.finish();
}

}  // namespace detail

/// The low-rank part as U * V.  Residual parts cannot be factored.
template <ExactField F>
FactoredPart<F> to_factored(const Cert<F>& c) {
  const F& f = c.field;
  return std::visit(
      [&](const auto& p) -> FactoredPart<F> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ZeroPart>) {
          return {SparseMatrix<F>(f, c.rows, 0), SparseMatrix<F>(f, 0, c.cols)};
        } else if constexpr (std::is_same_v<P, SupportPart>) {
          if (!c.target) throw InvalidArgument("support certificate needs its target");
          // E = P_R T + (I - P_R) T P_C.
          const std::size_t nr = p.rows.size(), nc = p.cols.size();
          std::vector<bool> in_r(c.rows, false);
          for (auto i : p.rows) in_r[i] = true;
          std::vector<Triplet<F>> ut;
          for (std::size_t l = 0; l < nr; ++l) ut.push_back({p.rows[l], l, f.one()});
          const auto tt = c.target->transpose();
          typename Target<F>::Row col;
          for (std::size_t l = 0; l < nc; ++l) {
            tt.row(p.cols[l], col);
            for (auto& [i, v] : col)
              if (!in_r[i]) ut.push_back({i, nr + l, std::move(v)});
          }
          auto u = SparseMatrix<F>::from_triplets(f, c.rows, nr + nc, std::move(ut));
          auto v = vconcat(detail::target_rows(*c.target, p.rows), detail::unit_rows(f, p.cols, c.cols));
          return {std::move(u), std::move(v)};
        } else if constexpr (std::is_same_v<P, FactoredPart<F>>) {
          return p;
        } else if constexpr (std::is_same_v<P, ExplicitPart<F>>) {
          return {SparseMatrix<F>::identity(f, c.rows), p.e};
        } else {
          throw InvalidArgument("residual low-rank part has no factorization");
        }
      },
      c.low);
}

/// The low-rank part as an explicit sparse matrix.
template <ExactField F>
SparseMatrix<F> materialize_lowrank(const Cert<F>& c, const Limits& limits = default_limits()) {
  if (std::holds_alternative<ResidualPart>(c.low)) {
    if (!c.target) throw InvalidArgument("residual certificate needs its target");
    return mat_sub(c.target->materialize(limits), c.z);
  }
  if (const auto* e = std::get_if<ExplicitPart<F>>(&c.low)) return e->e;
  const auto fp = to_factored(c);
  return mat_mul(fp.u, fp.v);
}

// ---------------------------------------------------------------------------
// Combiners

namespace detail {

template <ExactField F>
void collapse_if_trivial(Cert<F>& c) {
  const std::size_t full = std::min(c.rows, c.cols);
  if (std::holds_alternative<ResidualPart>(c.low)) return;
  const auto* fp = std::get_if<FactoredPart<F>>(&c.low);
  if (c.claimed_rank >= full || (fp && fp->u.cols() >= full)) c.low = ResidualPart{};
  else if (fp && fp->u.cols() == 0) c.low = ZeroPart{};
}

}  // namespace detail

template <ExactField F>
Cert<F> transpose_cert(const Cert<F>& c) {
  Cert<F> t{c.field, c.cols, c.rows, c.target ? share(c.target->transpose()) : nullptr, ZeroPart{}, c.z.transpose(),
            c.claimed_rank, c.claimed_sparsity};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SupportPart>) t.low = SupportPart{p.cols, p.rows};
        else if constexpr (std::is_same_v<P, FactoredPart<F>>) t.low = FactoredPart<F>{p.v.transpose(), p.u.transpose()};
        else if constexpr (std::is_same_v<P, ExplicitPart<F>>) t.low = ExplicitPart<F>{p.e.transpose()};
        else t.low = p;
      },
      c.low);
  return t;
}

/// Certificate for A * B:
///   A B = (E_a + Z_a)(E_b + Z_b) = [U_a | Z_a U_b] [V_a B ; V_b] + Z_a Z_b,
/// claims (r_a + r_b, t_a t_b).  `product_target`, when given, is used as the
/// target instead of forming A * B.
template <ExactField F>
Cert<F> compose_product(const Cert<F>& a, const Cert<F>& b,
                        std::shared_ptr<const Target<F>> product_target = nullptr,
                        const Limits& limits = default_limits()) {
  check_same_field(a.field, b.field);
  if (a.cols != b.rows)
    throw DimensionMismatch("compose_product: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " * " +
                            std::to_string(b.rows) + "x" + std::to_string(b.cols));
  if (!a.target || !b.target) throw InvalidArgument("compose_product needs both targets");
  if (!product_target) product_target = share(Target<F>::product(*a.target, *b.target, limits));

  Cert<F> c{a.field, a.rows, b.cols, product_target, ZeroPart{}, mat_mul(a.z, b.z), a.claimed_rank + b.claimed_rank,
            a.claimed_sparsity * b.claimed_sparsity};
  if (std::holds_alternative<ResidualPart>(a.low) || std::holds_alternative<ResidualPart>(b.low) ||
      c.claimed_rank >= std::min(c.rows, c.cols)) {
    c.low = ResidualPart{};
    return c;
  }
  const auto fa = to_factored(a);
  const auto fb = to_factored(b);
  auto u = hconcat(fa.u, mat_mul(a.z, fb.u));
  auto v = vconcat(b.target->left_multiply(fa.v), fb.v);
  c.low = FactoredPart<F>{std::move(u), std::move(v)};
  detail::collapse_if_trivial(c);
  return c;
}

/// Certificate for A (x) B (A is n x n, B is m x m):
///   A (x) B = (U_a (x) I)(V_a (x) B) + (Z_a (x) U_b)(I (x) V_b) + Z_a (x) Z_b,
/// claims (r_a m + r_b n, t_a t_b).
template <ExactField F>
Cert<F> compose_kron(const Cert<F>& a, const Cert<F>& b, const Limits& limits = default_limits()) {
  check_same_field(a.field, b.field);
  if (!a.target || !b.target) throw InvalidArgument("compose_kron needs both targets");
  if (a.rows != a.cols || b.rows != b.cols) throw DimensionMismatch("compose_kron needs square targets");
  const std::size_t n = a.rows, m = b.rows;
  if (n * m > limits.max_order) throw SizeCapExceeded("compose_kron order " + std::to_string(n * m));
  const F& f = a.field;
  Cert<F> c{f, n * m, n * m, share(Target<F>::kron(*a.target, *b.target, limits)), ZeroPart{},
            kron(a.z, b.z, limits), a.claimed_rank * m + b.claimed_rank * n, a.claimed_sparsity * b.claimed_sparsity};
  if (std::holds_alternative<ResidualPart>(a.low) || std::holds_alternative<ResidualPart>(b.low) ||
      c.claimed_rank >= n * m) {
    c.low = ResidualPart{};
    return c;
  }
  const auto fa = to_factored(a);
  const auto fb = to_factored(b);
  const auto in = SparseMatrix<F>::identity(f, n), im = SparseMatrix<F>::identity(f, m);
  auto u = hconcat(kron(fa.u, im, limits), kron(a.z, fb.u, limits));
  auto v = vconcat(kron(fa.v, b.target->materialize(limits), limits), kron(in, fb.v, limits));
  c.low = FactoredPart<F>{std::move(u), std::move(v)};
  detail::collapse_if_trivial(c);
  return c;
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyOptions {
  /// Exact rank of E is computed when the order is at most this.
  std::size_t exact_rank_max_prime = 512;
  std::size_t exact_rank_max_rational = 96;
};

struct VerificationReport {
  bool dimensions_ok = true;
  bool reconstruction_ok = false;
  std::string first_mismatch;  // "row i col j: expected a, got b"
  std::size_t structural_rank = 0;
  bool exact_rank_computed = false;
  std::size_t exact_rank = 0;
  std::size_t rank_bound = 0;  // exact rank when computed, else structural
  bool rank_ok = false;
  NnzProfile z_nnz;
  bool sparsity_ok = false;
  std::size_t claimed_rank = 0;
  std::size_t claimed_sparsity = 0;

  bool ok() const { return dimensions_ok && reconstruction_ok && rank_ok && sparsity_ok; }
  std::string to_text() const;
};

template <ExactField F>
VerificationReport verify_cert(const Cert<F>& c, const Target<F>& target, const VerifyOptions& opts = {}) {
  VerificationReport r;
  r.claimed_rank = c.claimed_rank;
  r.claimed_sparsity = c.claimed_sparsity;
  if (!(c.field == target.field()) || c.rows != target.rows() || c.cols != target.cols() || c.z.rows() != c.rows ||
      c.z.cols() != c.cols) {
    r.dimensions_ok = false;
    r.first_mismatch = "certificate is " + std::to_string(c.rows) + "x" + std::to_string(c.cols) + " over " +
                       c.field.name() + ", target is " + std::to_string(target.rows()) + "x" +
                       std::to_string(target.cols()) + " over " + target.field().name();
    return r;
  }
  const F& f = c.field;
  const std::size_t n = c.rows, m = c.cols;

  // Reconstruction, one row at a time: E_row + Z_row == T_row.
  std::vector<typename F::Element> acc(m, f.zero());
  std::vector<bool> used(m, false);
  std::vector<std::size_t> touched;
  auto add = [&](std::size_t j, const typename F::Element& v) {
    if (!used[j]) {
      used[j] = true;
      touched.push_back(j);
      acc[j] = v;
    } else {
      acc[j] = f.add(acc[j], v);
    }
  };

  const auto* support = std::get_if<SupportPart>(&c.low);
  std::vector<bool> in_r, in_c;
  if (support) {
    in_r.assign(n, false);
    in_c.assign(m, false);
    for (auto i : support->rows) {
      if (i >= n) throw DimensionMismatch("support row out of range");
      in_r[i] = true;
    }
    for (auto j : support->cols) {
      if (j >= m) throw DimensionMismatch("support column out of range");
      in_c[j] = true;
    }
  }
  const auto* fp = std::get_if<FactoredPart<F>>(&c.low);
  const auto* ep = std::get_if<ExplicitPart<F>>(&c.low);
  const bool residual = std::holds_alternative<ResidualPart>(c.low);
  if (fp && (fp->u.rows() != n || fp->v.cols() != m || fp->u.cols() != fp->v.rows())) {
    r.dimensions_ok = false;
    r.first_mismatch = "factor shapes do not match";
    return r;
  }
  if (ep && (ep->e.rows() != n || ep->e.cols() != m)) {
    r.dimensions_ok = false;
    r.first_mismatch = "explicit E has the wrong shape";
    return r;
  }

  r.reconstruction_ok = true;
  typename Target<F>::Row trow;
  for (std::size_t i = 0; i < n && r.reconstruction_ok && !residual; ++i) {
    target.row(i, trow);
    if (support) {
      for (const auto& [j, v] : trow)
        if (in_r[i] || in_c[j]) add(j, v);
    } else if (fp) {
      for (std::size_t k = fp->u.row_begin(i); k < fp->u.row_end(i); ++k) {
        const std::size_t l = fp->u.col_at(k);
        const auto& ul = fp->u.value_at(k);
        for (std::size_t q = fp->v.row_begin(l); q < fp->v.row_end(l); ++q)
          add(fp->v.col_at(q), f.mul(ul, fp->v.value_at(q)));
      }
    } else if (ep) {
      for (std::size_t k = ep->e.row_begin(i); k < ep->e.row_end(i); ++k) add(ep->e.col_at(k), ep->e.value_at(k));
    }
    for (std::size_t k = c.z.row_begin(i); k < c.z.row_end(i); ++k) add(c.z.col_at(k), c.z.value_at(k));
    // Subtract the target row; everything must cancel.
    for (const auto& [j, v] : trow) add(j, f.neg(v));
    std::sort(touched.begin(), touched.end());
    for (auto j : touched) {
      if (r.reconstruction_ok && !f.is_zero(acc[j])) {
        r.reconstruction_ok = false;
        auto expected = f.zero();
        for (const auto& [tj, tv] : trow)
          if (tj == j) expected = tv;
        r.first_mismatch = "row " + std::to_string(i) + " col " + std::to_string(j) + ": expected " +
                           f.to_string(expected) + ", got " + f.to_string(f.add(expected, acc[j]));
      }
      used[j] = false;
      acc[j] = f.zero();
    }
    touched.clear();
  }

  r.structural_rank = structural_rank(c);
  r.rank_bound = r.structural_rank;
  const std::size_t cap =
      std::is_same_v<F, RationalField> ? opts.exact_rank_max_rational : opts.exact_rank_max_prime;
  if (std::max(n, m) <= cap && r.reconstruction_ok) {
    SparseMatrix<F> e(f, n, m);
    if (residual) e = mat_sub(target.materialize(), c.z);
    else if (support) {
      std::vector<Triplet<F>> t;
      for (std::size_t i = 0; i < n; ++i) {
        target.row(i, trow);
        for (const auto& [j, v] : trow)
          if (in_r[i] || in_c[j]) t.push_back({i, j, v});
      }
      e = SparseMatrix<F>::from_triplets(f, n, m, std::move(t));
    } else if (fp) e = mat_mul(fp->u, fp->v);
    else if (ep) e = ep->e;
    r.exact_rank = exact_rank(e.to_dense());
    r.exact_rank_computed = true;
    r.rank_bound = r.exact_rank;
  }
  r.rank_ok = r.rank_bound <= c.claimed_rank;
  r.z_nnz = row_col_nnz(c.z);
  r.sparsity_ok = r.z_nnz.max() <= c.claimed_sparsity;
  return r;
}

template <ExactField F>
VerificationReport verify_cert(const Cert<F>& c, const VerifyOptions& opts = {}) {
  if (!c.target) throw InvalidArgument("certificate carries no target; pass one explicitly");
  return verify_cert(c, *c.target, opts);
}

}  // namespace rigidity

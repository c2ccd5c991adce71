#pragma once

// Factorization of a square matrix into V-matrices G_d(x) = (I_{d-1} 0 | x),
// their transposes, monomial matrices and one diagonal matrix.
//
// v_factor_full(A) returns 4d-3 factors laid out as
//   M, V^T, M, V^T, ..., M, V^T, W, V, M, V, M, ..., V, M
// whose product in list order equals A.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rigidity/linalg.hpp"
#include "rigidity/matrix.hpp"

namespace rigidity {

enum class FactorKind { monomial, v, v_transposed, diagonal };

inline const char* to_string(FactorKind k) {
  switch (k) {
    case FactorKind::monomial: return "monomial";
    case FactorKind::v: return "v";
    case FactorKind::v_transposed: return "v-transposed";
    case FactorKind::diagonal: return "diagonal";
  }
  return "?";
}

inline bool is_v_kind(FactorKind k) { return k == FactorKind::v || k == FactorKind::v_transposed; }

template <ExactField F>
DenseMatrix<F> make_v_matrix(const F& field, std::span<const typename F::Element> x, bool transposed = false) {
  const std::size_t d = x.size();
  if (d == 0) throw InvalidArgument("V-matrix needs d >= 1");
  DenseMatrix<F> g = DenseMatrix<F>::identity(field, d);
  for (std::size_t i = 0; i < d; ++i) g(i, d - 1) = x[i];
  return transposed ? g.transpose() : g;
}

template <ExactField F>
std::vector<typename F::Element> unit_vector(const F& field, std::size_t d, std::size_t i) {
  std::vector<typename F::Element> e(d, field.zero());
  e[i] = field.one();
  return e;
}

template <ExactField F>
struct Factor {
  using Element = typename F::Element;

  FactorKind kind;
  std::optional<MonomialMatrix<F>> mono;  // monomial, diagonal
  std::vector<Element> x;                 // v, v_transposed

  static Factor monomial(MonomialMatrix<F> m) { return {FactorKind::monomial, std::move(m), {}}; }
  static Factor diagonal(MonomialMatrix<F> m) { return {FactorKind::diagonal, std::move(m), {}}; }
  static Factor v(std::vector<Element> x) { return {FactorKind::v, std::nullopt, std::move(x)}; }
  static Factor vt(std::vector<Element> x) { return {FactorKind::v_transposed, std::nullopt, std::move(x)}; }

  std::size_t dim() const { return mono ? mono->size() : x.size(); }

  DenseMatrix<F> to_dense(const F& field) const {
    if (mono) return mono->to_dense();
    return make_v_matrix<F>(field, x, kind == FactorKind::v_transposed);
  }
};

template <ExactField F>
struct VFactorization {
  F field;
  std::size_t dim;
  std::vector<Factor<F>> factors;

  DenseMatrix<F> product() const {
    DenseMatrix<F> acc = DenseMatrix<F>::identity(field, dim);
    for (const auto& f : factors) acc = mat_mul(acc, f.to_dense(field));
    return acc;
  }
};

/// A = P1 * G_d(y)^T * diag(B, lambda) * G_d(x) * P2.
template <ExactField F>
struct VStep {
  MonomialMatrix<F> p1;
  std::vector<typename F::Element> y;
  DenseMatrix<F> b;
  typename F::Element lambda;
  std::vector<typename F::Element> x;
  MonomialMatrix<F> p2;

  DenseMatrix<F> product() const {
    const F& f = b.field();
    const std::size_t d = x.size();
    DenseMatrix<F> mid(f, d, d);
    for (std::size_t i = 0; i + 1 < d; ++i)
      for (std::size_t j = 0; j + 1 < d; ++j) mid(i, j) = b(i, j);
    mid(d - 1, d - 1) = lambda;
    auto out = mat_mul(p1.to_dense(), make_v_matrix<F>(f, y, true));
    out = mat_mul(out, mid);
    out = mat_mul(out, make_v_matrix<F>(f, x, false));
    return mat_mul(out, p2.to_dense());
  }
};

template <ExactField F>
VStep<F> v_factor_step(const DenseMatrix<F>& a) {
  if (!a.is_square()) throw DimensionMismatch("v_factor_step needs a square matrix");
  const std::size_t d = a.rows();
  if (d < 2) throw InvalidArgument("v_factor_step: d = 1 is handled as a diagonal factor");
  const F& f = a.field();
  const std::size_t last = d - 1;

  if (exact_rank(a) == d) {
    const auto e = unit_vector(f, d, last);
    auto mu = *solve(a, std::span<const typename F::Element>(e));
    std::size_t j = last;
    while (f.is_zero(mu[j])) --j;  // mu != 0 since A is invertible
    auto q = MonomialMatrix<F>::transposition(f, d, j, last);
    DenseMatrix<F> aq = a;
    aq.swap_cols(j, last);
    std::swap(mu[j], mu[last]);

    const auto inv_last = f.inv(mu[last]);
    std::vector<typename F::Element> x(d, f.zero());
    for (std::size_t i = 0; i < last; ++i) x[i] = f.neg(f.mul(mu[i], inv_last));
    x[last] = inv_last;

    DenseMatrix<F> b = aq.block(0, 0, last, last);
    std::vector<typename F::Element> row(aq.row(last).begin(), aq.row(last).begin() + static_cast<std::ptrdiff_t>(last));
    auto y = *solve(b.transpose(), std::span<const typename F::Element>(row));
    y.push_back(f.one());
    return {MonomialMatrix<F>::identity(f, d), std::move(y), std::move(b), f.one(), std::move(x), std::move(q)};
  }

  const std::size_t c = dependent_columns(a).back();
  auto pc = MonomialMatrix<F>::transposition(f, d, c, last);
  DenseMatrix<F> a1 = a;
  a1.swap_cols(c, last);
  std::vector<typename F::Element> col(d, f.zero());
  for (std::size_t i = 0; i < d; ++i) col[i] = a1(i, last);
  auto alpha = *solve(a1.block(0, 0, d, last), std::span<const typename F::Element>(col));

  const std::size_t r = dependent_columns(a1.transpose()).back();
  auto pr = MonomialMatrix<F>::transposition(f, d, r, last);
  DenseMatrix<F> a2 = a1;
  a2.swap_rows(r, last);
  std::vector<typename F::Element> row(a2.row(last).begin(), a2.row(last).end());
  auto beta = *solve(a2.block(0, 0, last, d).transpose(), std::span<const typename F::Element>(row));

  alpha.push_back(f.one());
  beta.push_back(f.one());
  return {std::move(pr), std::move(beta), a2.block(0, 0, last, last), f.zero(), std::move(alpha), std::move(pc)};
}

/// diag(G_s(x), I_{d-s}) = P1 * G_d(y) * P2 with s = |x|.
template <ExactField F>
struct EmbeddedV {
  MonomialMatrix<F> p1;
  std::vector<typename F::Element> y;
  MonomialMatrix<F> p2;
};

template <ExactField F>
EmbeddedV<F> embed_small_v(const F& field, std::span<const typename F::Element> x, std::size_t d) {
  const std::size_t s = x.size();
  if (s == 0 || s > d) throw InvalidArgument("embed_small_v needs 1 <= |x| <= d");
  // y = (x_1, ..., x_{s-1}, 0, ..., 0, x_s); P swaps coordinates s and d.
  std::vector<typename F::Element> y(d, field.zero());
  for (std::size_t i = 0; i + 1 < s; ++i) y[i] = x[i];
  y[d - 1] = x[s - 1];
  auto t = MonomialMatrix<F>::transposition(field, d, s - 1, d - 1);
  return {t, std::move(y), t};
}

namespace detail {

template <ExactField F>
MonomialMatrix<F> extend_monomial(const MonomialMatrix<F>& m, typename F::Element corner) {
  auto perm = m.perm();
  auto scale = m.scale();
  perm.push_back(perm.size());
  scale.push_back(std::move(corner));
  return MonomialMatrix<F>(m.field(), std::move(perm), std::move(scale));
}

/// Collapses every run of consecutive monomial/diagonal factors into one.
template <ExactField F>
std::vector<Factor<F>> merge_monomial_runs(std::vector<Factor<F>> in) {
  std::vector<Factor<F>> out;
  for (auto& f : in) {
    if (!is_v_kind(f.kind) && !out.empty() && !is_v_kind(out.back().kind)) {
      auto& prev = out.back();
      const bool diag = prev.kind == FactorKind::diagonal || f.kind == FactorKind::diagonal;
      prev.mono = *prev.mono * *f.mono;
      prev.kind = diag ? FactorKind::diagonal : FactorKind::monomial;
    } else {
      out.push_back(std::move(f));
    }
  }
  for (const auto& f : out)
    if (f.kind == FactorKind::diagonal && !f.mono->is_diagonal())
      throw std::logic_error("diagonal run merged to a non-diagonal");
  return out;
}

}  // namespace detail

template <ExactField F>
VFactorization<F> v_factor_full(const DenseMatrix<F>& a) {
  if (!a.is_square()) throw DimensionMismatch("v_factor_full needs a square matrix");
  const F& f = a.field();
  const std::size_t d = a.rows();
  if (d == 0) throw InvalidArgument("v_factor_full needs d >= 1");
  if (d == 1) return {f, 1, {Factor<F>::diagonal(MonomialMatrix<F>::diagonal(f, {a(0, 0)}))}};

  auto step = v_factor_step(a);
  auto sub = v_factor_full(step.b);

  std::vector<Factor<F>> items;
  items.push_back(Factor<F>::monomial(std::move(step.p1)));
  items.push_back(Factor<F>::vt(std::move(step.y)));
  for (auto& g : sub.factors) {
    switch (g.kind) {
      case FactorKind::monomial:
        items.push_back(Factor<F>::monomial(detail::extend_monomial(*g.mono, f.one())));
        break;
      case FactorKind::diagonal:
        items.push_back(Factor<F>::diagonal(detail::extend_monomial(*g.mono, step.lambda)));
        break;
      case FactorKind::v:
      case FactorKind::v_transposed: {
        auto e = embed_small_v(f, std::span<const typename F::Element>(g.x), d);
        items.push_back(Factor<F>::monomial(std::move(e.p1)));
        items.push_back(g.kind == FactorKind::v ? Factor<F>::v(std::move(e.y)) : Factor<F>::vt(std::move(e.y)));
        items.push_back(Factor<F>::monomial(std::move(e.p2)));
        break;
      }
    }
  }
  items.push_back(Factor<F>::v(std::move(step.x)));
  items.push_back(Factor<F>::monomial(std::move(step.p2)));
  return {f, d, detail::merge_monomial_runs(std::move(items))};
}

/// Inserts identity factors at both ends until there are 4*target_d - 3.
template <ExactField F>
VFactorization<F> pad_factorization(VFactorization<F> fz, std::size_t target_d) {
  if (target_d < fz.dim)
    throw InvalidArgument("pad_factorization: target " + std::to_string(target_d) + " < dimension " +
                          std::to_string(fz.dim));
  const F& f = fz.field;
  const std::size_t d = fz.dim;
  const std::size_t extra = target_d - d;
  const auto e = unit_vector(f, d, d - 1);
  std::vector<Factor<F>> out;
  out.reserve(fz.factors.size() + 4 * extra);
  for (std::size_t i = 0; i < extra; ++i) {
    out.push_back(Factor<F>::monomial(MonomialMatrix<F>::identity(f, d)));
    out.push_back(Factor<F>::vt(e));
  }
  for (auto& g : fz.factors) out.push_back(std::move(g));
  for (std::size_t i = 0; i < extra; ++i) {
    out.push_back(Factor<F>::v(e));
    out.push_back(Factor<F>::monomial(MonomialMatrix<F>::identity(f, d)));
  }
  fz.factors = std::move(out);
  return fz;
}

}  // namespace rigidity

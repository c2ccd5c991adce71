#include "rigidity/oracle.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "rigidity/linalg.hpp"

namespace rigidity {

namespace {

template <ExactField F>
NnzProfile profile_of(const DenseMatrix<F>& z) {
  return row_col_nnz(z);
}

// ---------------------------------------------------------------------------
// F_p: enumeration of column spaces

void check_prime_caps(const DenseMatrix<PrimeField>& a) {
  if (a.rows() > kOracleMaxSidePrime || a.cols() > kOracleMaxSidePrime || a.field().modulus() > kOracleMaxPrime)
    throw SizeCapExceeded("oracle over F_p needs sides <= " + std::to_string(kOracleMaxSidePrime) +
                          " and p <= " + std::to_string(kOracleMaxPrime) + "; got " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()) + " over " + a.field().name());
}

using Vec = std::vector<std::uint64_t>;

/// Calls `fn` with the element list of every r-dimensional subspace of F_p^m.
void for_each_subspace(std::size_t m, std::size_t r, std::uint64_t p, const std::function<void(const std::vector<Vec>&)>& fn) {
  const PrimeField f(p);
  std::vector<std::size_t> piv(r);
  std::function<void(std::size_t, std::size_t)> choose_pivots;
  auto with_pivots = [&] {
    // Free entries: row i, column c > piv[i] with c not a pivot.
    std::vector<std::pair<std::size_t, std::size_t>> free;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t c = piv[i] + 1; c < m; ++c)
        if (std::find(piv.begin(), piv.end(), c) == piv.end()) free.emplace_back(i, c);
    std::vector<std::uint64_t> fill(free.size(), 0);
    std::vector<Vec> basis(r, Vec(m, 0));
    std::vector<Vec> span;
    for (;;) {
      for (auto& b : basis) std::fill(b.begin(), b.end(), 0);
      for (std::size_t i = 0; i < r; ++i) basis[i][piv[i]] = 1;
      for (std::size_t e = 0; e < free.size(); ++e) basis[free[e].first][free[e].second] = fill[e];
      span.assign(1, Vec(m, 0));
      for (std::size_t i = 0; i < r; ++i) {
        const std::size_t cur = span.size();
        for (std::uint64_t c = 1; c < p; ++c)
          for (std::size_t s = 0; s < cur; ++s) {
            Vec v = span[s];
            for (std::size_t t = 0; t < m; ++t) v[t] = f.add(v[t], f.mul(c, basis[i][t]));
            span.push_back(std::move(v));
          }
      }
      fn(span);
      std::size_t e = 0;
      while (e < fill.size() && ++fill[e] == p) fill[e++] = 0;
      if (e == fill.size()) break;
    }
  };
  choose_pivots = [&](std::size_t i, std::size_t from) {
    if (i == r) {
      with_pivots();
      return;
    }
    for (std::size_t c = from; c < m; ++c) {
      piv[i] = c;
      choose_pivots(i + 1, c + 1);
    }
  };
  choose_pivots(0, 0);
}

std::uint32_t diff_mask(const DenseMatrix<PrimeField>& a, std::size_t col, const Vec& u) {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    if (a(i, col) != u[i]) m |= 1u << i;
  return m;
}

/// Witness Z = A - B where column j of B is cols[j].
DenseMatrix<PrimeField> witness_from(const DenseMatrix<PrimeField>& a, const std::vector<Vec>& cols) {
  const PrimeField& f = a.field();
  DenseMatrix<PrimeField> z(f, a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) z(i, j) = f.sub(a(i, j), cols[j][i]);
  return z;
}

template <ExactField F>
std::optional<OracleResult<F>> trivial_case(const DenseMatrix<F>& a, std::size_t r, bool rc) {
  const F& f = a.field();
  if (r >= exact_rank(a)) return OracleResult<F>{r, 0, DenseMatrix<F>(f, a.rows(), a.cols())};
  if (r == 0) {
    const auto p = profile_of(a);
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) nnz += !f.is_zero(a(i, j));
    return OracleResult<F>{0, rc ? p.max() : nnz, a};
  }
  return std::nullopt;
}

OracleResult<PrimeField> prime_search(const DenseMatrix<PrimeField>& a, std::size_t r, bool rc) {
  check_prime_caps(a);
  if (auto t = trivial_case(a, r, rc)) return *t;
  const std::size_t m = a.rows(), n = a.cols();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::vector<Vec> best_cols;

  for_each_subspace(m, r, a.field().modulus(), [&](const std::vector<Vec>& span) {
    if (!rc) {
      std::size_t total = 0;
      std::vector<Vec> cols(n);
      for (std::size_t j = 0; j < n && total < best; ++j) {
        std::size_t bd = m + 1;
        for (const auto& u : span) {
          const auto d = static_cast<std::size_t>(std::popcount(diff_mask(a, j, u)));
          if (d < bd) {
            bd = d;
            cols[j] = u;
          }
        }
        total += bd;
      }
      if (total < best) {
        best = total;
        best_cols = cols;
      }
      return;
    }
    // Per column: change masks that are minimal under inclusion.
    std::vector<std::vector<std::pair<std::uint32_t, const Vec*>>> cand(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (const auto& u : span) {
        const auto mk = diff_mask(a, j, u);
        bool dominated = false;
        for (const auto& c : cand[j])
          if ((c.first & mk) == c.first) dominated = true;
        if (dominated) continue;
        std::erase_if(cand[j], [&](const auto& c) { return (mk & c.first) == mk; });
        cand[j].emplace_back(mk, &u);
      }
    }
    std::vector<std::size_t> rows(m, 0);
    std::vector<const Vec*> pick(n);
    std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t j, std::size_t cur) {
      if (cur >= best) return;
      if (j == n) {
        best = cur;
        best_cols.clear();
        for (auto* v : pick) best_cols.push_back(*v);
        return;
      }
      for (const auto& [mk, v] : cand[j]) {
        std::size_t c = std::max<std::size_t>(cur, static_cast<std::size_t>(std::popcount(mk)));
        for (std::size_t i = 0; i < m; ++i)
          if (mk >> i & 1u) c = std::max(c, rows[i] + 1);
        if (c >= best) continue;
        for (std::size_t i = 0; i < m; ++i) rows[i] += mk >> i & 1u;
        pick[j] = v;
        dfs(j + 1, c);
        for (std::size_t i = 0; i < m; ++i) rows[i] -= mk >> i & 1u;
      }
    };
    dfs(0, 0);
  });
  return {r, best, witness_from(a, best_cols)};
}

// ---------------------------------------------------------------------------
// Q: support enumeration with exact completion deciders

void check_rational_caps(const DenseMatrix<RationalField>& a) {
  if (a.rows() > kOracleMaxSideRational || a.cols() > kOracleMaxSideRational)
    throw SizeCapExceeded("oracle over Q needs sides <= " + std::to_string(kOracleMaxSideRational) + "; got " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

/// Rank <= 1 matrix B agreeing with A outside the support mask, if any.
std::optional<DenseMatrix<RationalField>> rank_one_completion(const DenseMatrix<RationalField>& a, std::uint32_t support) {
  const RationalField& f = a.field();
  const std::size_t m = a.rows(), n = a.cols();
  auto fixed = [&](std::size_t i, std::size_t j) { return !(support >> (i * n + j) & 1u); };

  bool all_zero = true;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (fixed(i, j) && !f.is_zero(a(i, j))) all_zero = false;
  if (all_zero) return DenseMatrix<RationalField>(f, m, n);

  for (std::uint32_t rk = 1; rk < (1u << m); ++rk)
    for (std::uint32_t cl = 1; cl < (1u << n); ++cl) {
      // B_ij != 0 exactly on K x L.
      bool ok = true;
      for (std::size_t i = 0; i < m && ok; ++i)
        for (std::size_t j = 0; j < n && ok; ++j)
          if (fixed(i, j) && ((rk >> i & 1u) && (cl >> j & 1u)) == f.is_zero(a(i, j))) ok = false;
      if (!ok) continue;
      // u_i v_j = A_ij on fixed entries of K x L, propagated per component.
      std::vector<std::optional<mpq_class>> u(m), v(n);
      for (std::size_t root = 0; root < m + n && ok; ++root) {
        const bool is_row = root < m;
        const std::size_t idx = is_row ? root : root - m;
        if (is_row ? (!(rk >> idx & 1u) || u[idx]) : (!(cl >> idx & 1u) || v[idx])) continue;
        (is_row ? u[idx] : v[idx]) = mpq_class(1);
        std::vector<std::size_t> stack{root};
        while (!stack.empty() && ok) {
          const std::size_t node = stack.back();
          stack.pop_back();
          if (node < m) {
            for (std::size_t j = 0; j < n && ok; ++j)
              if ((cl >> j & 1u) && fixed(node, j)) {
                const mpq_class want = a(node, j) / *u[node];
                if (!v[j]) {
                  v[j] = want;
                  stack.push_back(m + j);
                } else if (*v[j] != want) ok = false;
              }
          } else {
            const std::size_t j = node - m;
            for (std::size_t i = 0; i < m && ok; ++i)
              if ((rk >> i & 1u) && fixed(i, j)) {
                const mpq_class want = a(i, j) / *v[j];
                if (!u[i]) {
                  u[i] = want;
                  stack.push_back(i);
                } else if (*u[i] != want) ok = false;
              }
          }
        }
      }
      if (!ok) continue;
      DenseMatrix<RationalField> b(f, m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if ((rk >> i & 1u) && (cl >> j & 1u)) b(i, j) = *u[i] * *v[j];
      return b;
    }
  return std::nullopt;
}

mpq_class determinant(const DenseMatrix<RationalField>& a) {
  const std::size_t n = a.rows();
  if (n == 1) return a(0, 0);
  mpq_class d = 0;
  for (std::size_t j = 0; j < n; ++j) {
    DenseMatrix<RationalField> minor(a.field(), n - 1, n - 1);
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t c = 0, k = 0; c < n; ++c)
        if (c != j) minor(i - 1, k++) = a(i, c);
    const mpq_class term = a(0, j) * determinant(minor);
    d += (j % 2 ? -term : term);
  }
  return d;
}

/// Nonsingular n x n: one entry with a nonzero cofactor makes it singular.
DenseMatrix<RationalField> singular_by_one_change(const DenseMatrix<RationalField>& a) {
  const RationalField& f = a.field();
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // det is affine in a_ij: det(t) = det(A) + (t - a_ij) * cof.
      DenseMatrix<RationalField> probe = a;
      probe(i, j) = f.add(a(i, j), f.one());
      const auto d0 = determinant(a), d1 = determinant(probe);
      const auto cof = f.sub(d1, d0);
      if (f.is_zero(cof)) continue;
      DenseMatrix<RationalField> z(f, n, n);
      z(i, j) = f.div(d0, cof);  // A - Z has entry a_ij - det/cof
      return z;
    }
  throw std::logic_error("nonsingular matrix without a nonzero cofactor");
}

template <class Accept>
std::optional<DenseMatrix<RationalField>> first_support(const DenseMatrix<RationalField>& a, std::size_t size,
                                                        Accept accept) {
  const std::size_t cells = a.rows() * a.cols();
  for (std::uint32_t s = 0; s < (1u << cells); ++s) {
    if (static_cast<std::size_t>(std::popcount(s)) != size || !accept(s)) continue;
    if (auto b = rank_one_completion(a, s)) return mat_sub(a, *b);
  }
  return std::nullopt;
}

OracleResult<RationalField> rational_search(const DenseMatrix<RationalField>& a, std::size_t r, bool rc) {
  check_rational_caps(a);
  if (auto t = trivial_case(a, r, rc)) return *t;
  const std::size_t m = a.rows(), n = a.cols();
  if (r >= 2) {
    // Only a nonsingular 3x3 reaches here with r = 2.
    return {r, 1, singular_by_one_change(a)};
  }
  const std::size_t cells = m * n;
  if (!rc) {
    for (std::size_t s = 1; s <= cells; ++s)
      if (auto z = first_support(a, s, [](std::uint32_t) { return true; })) return {r, s, *z};
  } else {
    for (std::size_t t = 1; t <= std::max(m, n); ++t) {
      auto within = [&](std::uint32_t s) {
        for (std::size_t i = 0; i < m; ++i) {
          std::size_t c = 0;
          for (std::size_t j = 0; j < n; ++j) c += s >> (i * n + j) & 1u;
          if (c > t) return false;
        }
        for (std::size_t j = 0; j < n; ++j) {
          std::size_t c = 0;
          for (std::size_t i = 0; i < m; ++i) c += s >> (i * n + j) & 1u;
          if (c > t) return false;
        }
        return true;
      };
      for (std::size_t s = 1; s <= cells; ++s)
        if (auto z = first_support(a, s, within)) return {r, t, *z};
    }
  }
  throw std::logic_error("rank-one completion search exhausted");
}

}  // namespace

OracleResult<PrimeField> brute_rigidity(const DenseMatrix<PrimeField>& a, std::size_t r) {
  return prime_search(a, r, false);
}
OracleResult<PrimeField> brute_rc_rigidity(const DenseMatrix<PrimeField>& a, std::size_t r) {
  return prime_search(a, r, true);
}
OracleResult<RationalField> brute_rigidity(const DenseMatrix<RationalField>& a, std::size_t r) {
  return rational_search(a, r, false);
}
OracleResult<RationalField> brute_rc_rigidity(const DenseMatrix<RationalField>& a, std::size_t r) {
  return rational_search(a, r, true);
}

}  // namespace rigidity

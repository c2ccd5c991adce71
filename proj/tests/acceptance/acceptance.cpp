// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   acceptance [--only N]... [--cli <path to rigidity binary>]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "rigidity/decomp.hpp"
#include "rigidity/hadamard.hpp"
#include "rigidity/io.hpp"
#include "rigidity/oracle.hpp"
#include "rigidity/random.hpp"

using namespace rigidity;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void fail(const std::string& what) {
    pass = false;
    if (failures.size() < 10) failures.push_back(what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits = 1) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

// ---------------------------------------------------------------------------
// Independent dense references

template <class F>
DenseMatrix<F> naive_kron(const std::vector<DenseMatrix<F>>& ms) {
  DenseMatrix<F> acc = ms[0];
  for (std::size_t t = 1; t < ms.size(); ++t) {
    const auto& b = ms[t];
    DenseMatrix<F> c(acc.field(), acc.rows() * b.rows(), acc.cols() * b.cols());
    for (std::size_t i = 0; i < acc.rows(); ++i)
      for (std::size_t j = 0; j < acc.cols(); ++j)
        for (std::size_t p = 0; p < b.rows(); ++p)
          for (std::size_t q = 0; q < b.cols(); ++q)
            c(i * b.rows() + p, j * b.cols() + q) = acc.field().mul(acc(i, j), b(p, q));
    acc = std::move(c);
  }
  return acc;
}

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

/// Gaussian elimination written out here so the check does not share code
/// with the library's rank routines.
template <class F>
std::size_t naive_rank(DenseMatrix<F> a) {
  const F& f = a.field();
  std::size_t rank = 0;
  for (std::size_t col = 0; col < a.cols() && rank < a.rows(); ++col) {
    std::size_t piv = rank;
    while (piv < a.rows() && f.is_zero(a(piv, col))) ++piv;
    if (piv == a.rows()) continue;
    a.swap_rows(piv, rank);
    const auto inv = f.inv(a(rank, col));
    for (std::size_t r = rank + 1; r < a.rows(); ++r) {
      if (f.is_zero(a(r, col))) continue;
      const auto factor = f.mul(a(r, col), inv);
      for (std::size_t c = col; c < a.cols(); ++c) a(r, c) = f.sub(a(r, c), f.mul(factor, a(rank, c)));
    }
    ++rank;
  }
  return rank;
}

template <class F>
std::size_t max_line_nnz(const DenseMatrix<F>& z) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < z.cols(); ++j) c += !z.field().is_zero(z(i, j));
    best = std::max(best, c);
  }
  for (std::size_t j = 0; j < z.cols(); ++j) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) c += !z.field().is_zero(z(i, j));
    best = std::max(best, c);
  }
  return best;
}

/// "" when E + Z == expected, rank(E) <= r and every line of Z has <= t nonzeros.
template <class F>
std::string dense_check(const Cert<F>& c, const DenseMatrix<F>& expected) {
  const auto e = materialize_lowrank(c).to_dense();
  const auto z = c.z.to_dense();
  if (e.rows() != expected.rows() || e.cols() != expected.cols()) return "shape";
  if (!(mat_add(e, z) == expected)) return "E + Z differs from the target";
  if (naive_rank(e) > c.claimed_rank) return "rank(E) above the claim";
  if (max_line_nnz(z) > c.claimed_sparsity) return "Z line count above the claim";
  return "";
}

// ---------------------------------------------------------------------------
// 1. Reconstruction master suite

template <class F>
std::string run_pipeline(const F& f, Rng& rng, int mode, std::size_t n_max, std::string& label, std::string& kind) {
  static const std::vector<double> eps_choices{0.3, 0.5, 0.7, 0.9};
  DecomposeOptions opt;
  opt.epsilon = eps_choices[rng.below(eps_choices.size())];
  std::vector<DenseMatrix<F>> factors;
  std::vector<std::size_t> dims;
  auto add = [&](DenseMatrix<F> m) {
    dims.push_back(m.rows());
    factors.push_back(std::move(m));
  };
  std::size_t n = 1;
  if (mode == 0) {
    const std::size_t d = 2 + rng.below(4);
    std::size_t k_max = 0;
    for (std::size_t p = d; p <= n_max; p *= d) ++k_max;
    const std::size_t k = 1 + rng.below(k_max);
    for (std::size_t i = 0; i < k; ++i) add(rng.matrix(f, d, d));
  } else {
    const std::size_t k_target = 2 + rng.below(8);
    while (factors.size() < k_target) {
      // Hadamard factors of order 2 and 4 mixed in for the hadamard mode
      std::optional<DenseMatrix<F>> m;
      const auto pick = rng.below(mode == 2 ? 6 : 4);
      if (pick == 4) m = walsh(1 + rng.below(2)).to_field(f);
      else if (pick == 5) m = paley1(3).to_field(f);
      else m = rng.matrix(f, 2 + pick, 2 + pick);
      if (n * m->rows() > n_max) break;
      n *= m->rows();
      add(std::move(*m));
    }
    if (factors.empty()) add(rng.matrix(f, 2, 2));
  }
  if (mode == 1) {
    static const std::vector<std::size_t> caps{0, 6, 10, 25};
    opt.bin_cap = std::max(caps[rng.below(caps.size())], *std::max_element(dims.begin(), dims.end()));
  }
  if (mode == 2) opt.bound = 2 + static_cast<double>(rng.below(3));

  std::ostringstream l;
  l << f.name() << " " << (mode == 0 ? "equal" : mode == 1 ? "binpack" : "hadamard") << " eps=" << opt.epsilon
    << " dims=";
  for (std::size_t i = 0; i < dims.size(); ++i) l << (i ? "," : "") << dims[i];
  label = l.str();

  PipelineReport rep;
  Cert<F> cert = mode == 0   ? decompose_kron_product(KroneckerSpec<F>(f, factors), opt, &rep)
                 : mode == 1 ? decompose_unequal(factors, opt, UnequalMode::binpack, &rep)
                             : hadamard_family_pipeline(factors, opt, &rep);
  kind = cert.kind();
  const auto ver = verify_cert(cert);
  if (!ver.ok()) return "verify_cert: " + ver.to_text();
  if (rep.final_rank != cert.claimed_rank || rep.final_sparsity != cert.claimed_sparsity)
    return "report ledger differs from the certificate claims";
  if (cert.rows <= 128) {
    const auto why = dense_check(cert, naive_kron(factors));
    if (!why.empty()) return "dense check: " + why;
  }
  return "";
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const PrimeField f5(5), f7(7);
  const RationalField q;
  std::size_t count = 0, largest = 0;
  std::set<std::string> kinds;
  std::map<std::string, std::size_t> cert_kinds;
  for (std::uint64_t i = 0; i < 200; ++i) {
    Rng rng(1000 + i);
    const int field = static_cast<int>(i % 3), mode = static_cast<int>((i / 3) % 3);
    std::string label, why, kind;
    try {
      if (field == 0) why = run_pipeline(f5, rng, mode, 4096, label, kind);
      else if (field == 1) why = run_pipeline(f7, rng, mode, 4096, label, kind);
      else why = run_pipeline(q, rng, mode, 256, label, kind);
      ++cert_kinds[kind];
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (!why.empty()) o.fail("pipeline " + std::to_string(i) + " (" + label + "): " + why);
    const auto pos = label.find("dims=");
    std::size_t n = 1;
    std::stringstream ds(label.substr(pos + 5));
    for (std::string d; std::getline(ds, d, ',');) n *= std::stoul(d);
    largest = std::max(largest, n);
    kinds.insert(label.substr(0, label.find(" eps")));
    ++count;
  }
  const double secs = seconds_since(t0);
  if (secs > 600) o.fail("runtime " + fixed(secs) + " s exceeds 10 min");
  o.detail = std::to_string(count) + " pipelines, " + std::to_string(kinds.size()) + " field/mode combinations, n <= " +
             std::to_string(largest) + ", kinds";
  for (const auto& [k, c] : cert_kinds) o.detail += " " + k + "=" + std::to_string(c);
  o.detail += ", " + fixed(secs) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2 and 7. Exact G-split counts on d = 2, and monotonicity along the grid

struct SplitOracle {
  std::set<std::size_t> c, r;
  std::size_t m_c = 0, m_r = 0;
};

/// Tuples x in {0,1}^k as bitmasks (bit k-1-i is coordinate i); score =
/// popcount.  Row x meets column y iff x is a submask of y.
SplitOracle enumerate_split(std::size_t k, const mpq_class& offset) {
  SplitOracle o;
  const std::size_t n = std::size_t{1} << k;
  const mpq_class m(static_cast<long>(k), 2);
  std::vector<bool> in_c(n), in_r(n);
  for (std::size_t x = 0; x < n; ++x) {
    const mpq_class s(static_cast<long>(std::popcount(x)));
    in_c[x] = s >= m + offset;
    in_r[x] = s <= m - offset;
    if (in_c[x]) o.c.insert(x);
    if (in_r[x]) o.r.insert(x);
  }
  for (std::size_t y = 0; y < n; ++y) {
    if (in_c[y]) continue;
    std::size_t cnt = 0;
    for (std::size_t x = y;; x = (x - 1) & y) {
      cnt += !in_r[x];
      if (x == 0) break;
    }
    o.m_c = std::max(o.m_c, cnt);
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (in_r[x]) continue;
    std::size_t cnt = 0;
    const std::size_t free = (n - 1) & ~x;
    for (std::size_t add = free;; add = (add - 1) & free) {
      cnt += !in_c[x | add];
      if (add == 0) break;
    }
    o.m_r = std::max(o.m_r, cnt);
  }
  return o;
}

Outcome criteria2and7(Outcome& mono) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const PrimeField f(5);
  Rng rng(77);
  std::size_t cases = 0, mono_pairs = 0;
  for (std::size_t k = 2; k <= 12; ++k) {
    const ScoreProfile profile(std::vector<std::size_t>(k, 2));
    // nonzero x: the pattern of G is the full submask relation
    std::vector<std::vector<PrimeField::Element>> xs(k, std::vector<PrimeField::Element>(2));
    for (auto& x : xs)
      for (auto& v : x) v = rng.nonzero_element(f);
    const auto grid = delta_grid(0.5, 2);
    std::size_t prev_rank = 0, prev_sparsity = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto offset = offset_for_delta(profile, grid[g]);
      const auto res = split_g_kron(f, xs, profile, offset);
      const auto want = enumerate_split(k, offset);
      const std::string at = "k=" + std::to_string(k) + " grid " + std::to_string(g);
      ++cases;
      const auto& sp = std::get<SupportPart>(res.cert.low);
      // library tuples are most-significant-first, which is the bitmask order
      const std::set<std::size_t> lib_r(sp.rows.begin(), sp.rows.end()), lib_c(sp.cols.begin(), sp.cols.end());
      if (res.cert.claimed_rank != want.c.size() + want.r.size())
        o.fail(at + ": claimed rank " + std::to_string(res.cert.claimed_rank) + ", enumeration |C|+|R| = " +
               std::to_string(want.c.size() + want.r.size()));
      if (res.cert.claimed_sparsity != std::max(want.m_c, want.m_r))
        o.fail(at + ": claimed sparsity " + std::to_string(res.cert.claimed_sparsity) + ", enumeration " +
               std::to_string(std::max(want.m_c, want.m_r)));
      if (lib_r != want.r || lib_c != want.c) o.fail(at + ": support sets differ from enumeration");
      const auto nnz = row_col_nnz(res.cert.z);
      if (nnz.max_row != want.m_r || nnz.max_col != want.m_c) o.fail(at + ": Z line counts differ from (M_r, M_c)");
      if (!verify_cert(res.cert).ok()) o.fail(at + ": verify_cert failed");
      if (g > 0) {
        ++mono_pairs;
        if (res.cert.claimed_rank > prev_rank)
          mono.fail(at + ": rank rose from " + std::to_string(prev_rank) + " to " + std::to_string(res.cert.claimed_rank));
        if (res.cert.claimed_sparsity < prev_sparsity)
          mono.fail(at + ": sparsity fell from " + std::to_string(prev_sparsity) + " to " +
                    std::to_string(res.cert.claimed_sparsity));
      }
      prev_rank = res.cert.claimed_rank;
      prev_sparsity = res.cert.claimed_sparsity;
    }
  }
  const double secs = seconds_since(t0);
  if (secs > 120) o.fail("runtime " + fixed(secs) + " s exceeds 2 min");
  o.detail = std::to_string(cases) + " (k, offset) cases against full enumeration, " + fixed(secs) + " s";
  mono.detail = std::to_string(mono_pairs) + " consecutive grid pairs";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Composition ledgers

template <class F>
std::shared_ptr<const Target<F>> dense_target(const DenseMatrix<F>& m) {
  return share(Target<F>(SparseMatrix<F>::from_dense(m)));
}

/// A small pool of certificates of every kind on n x n targets.
template <class F>
std::vector<std::pair<Cert<F>, DenseMatrix<F>>> cert_pool(const F& f, Rng& rng, std::size_t n) {
  std::vector<std::pair<Cert<F>, DenseMatrix<F>>> pool;
  // (0, t): Z is everything
  auto a = rng.matrix(f, n, n);
  pool.emplace_back(sparse_cert(dense_target(a)), a);
  // monomial (0, 1)
  DenseMatrix<F> mono(f, n, n);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.below(i + 1)]);
  for (std::size_t i = 0; i < n; ++i) mono(i, perm[i]) = rng.nonzero_element(f);
  pool.emplace_back(monomial_cert(dense_target(mono)), mono);
  // explicit: random rank-r part plus a random sparse part
  const std::size_t r = 1 + rng.below(2);
  const auto e = naive_mul(rng.matrix(f, n, r), rng.matrix(f, r, n));
  DenseMatrix<F> z(f, n, n);
  for (std::size_t i = 0; i < n; ++i) z(i, (i + 1) % n) = rng.element(f);
  const auto target = mat_add(e, z);
  auto ce = sparse_cert(dense_target(target));
  ce.low = ExplicitPart<F>{SparseMatrix<F>::from_dense(e)};
  ce.z = SparseMatrix<F>::from_dense(z);
  ce.claimed_rank = r;
  ce.claimed_sparsity = 1;
  pool.emplace_back(std::move(ce), target);
  // pipeline certificates on Kronecker targets
  if (n == 4 || n == 8 || n == 16) {
    std::vector<DenseMatrix<F>> fs;
    for (std::size_t m = n; m > 1; m /= 2) fs.push_back(rng.matrix(f, 2, 2));
    DecomposeOptions opt;
    opt.epsilon = 0.5;
    pool.emplace_back(decompose_kron_product(KroneckerSpec<F>(f, fs), opt), naive_kron(fs));
    std::vector<std::vector<typename F::Element>> xs;
    for (std::size_t i = 0; i < fs.size(); ++i) xs.push_back({rng.element(f), rng.element(f)});
    const ScoreProfile profile(std::vector<std::size_t>(fs.size(), 2));
    auto split = split_g_kron(f, xs, profile, mpq_class(1, 2)).cert;
    std::vector<DenseMatrix<F>> gs;
    for (const auto& x : xs) gs.push_back(make_v_matrix<F>(f, x));
    pool.emplace_back(std::move(split), naive_kron(gs));
  }
  return pool;
}

template <class F>
void check_compositions(const F& f, Rng& rng, Outcome& o, std::size_t& products, std::size_t& krons,
                        std::size_t& symbolic) {
  for (std::size_t n : {4, 8, 16}) {
    const auto pa = cert_pool(f, rng, n);
    const auto pb = cert_pool(f, rng, n);
    for (const auto& [a, am] : pa)
      for (const auto& [b, bm] : pb) {
        const auto c = compose_product(a, b);
        ++products;
        const std::string at = f.name() + " n=" + std::to_string(n) + " " + a.kind() + "*" + b.kind();
        if (c.claimed_rank != a.claimed_rank + b.claimed_rank || c.claimed_sparsity != a.claimed_sparsity * b.claimed_sparsity)
          o.fail(at + ": product claims off the ledger");
        const auto why = dense_check(c, naive_mul(am, bm));
        if (!why.empty()) o.fail(at + ": " + why);
        if (!verify_cert(c).ok()) o.fail(at + ": verify_cert failed");
      }
  }
  for (std::size_t n : {4, 8})
    for (std::size_t m : {4, 8, 16}) {
      if (n * m > 256) continue;
      const auto pa = cert_pool(f, rng, n);
      const auto pb = cert_pool(f, rng, m);
      for (const auto& [a, am] : pa)
        for (const auto& [b, bm] : pb) {
          const auto c = compose_kron(a, b);
          ++krons;
          const std::string at = f.name() + " " + std::to_string(n) + "x" + std::to_string(m) + " " + a.kind() + "(x)" + b.kind();
          if (c.claimed_rank != a.claimed_rank * m + b.claimed_rank * n ||
              c.claimed_sparsity != a.claimed_sparsity * b.claimed_sparsity)
            o.fail(at + ": Kronecker claims off the ledger");
          const auto why = dense_check(c, naive_kron(std::vector<DenseMatrix<F>>{am, bm}));
          if (!why.empty()) o.fail(at + ": " + why);
        }
    }
  // Symbolic sweep: the claims are plain arithmetic in (r_a, t_a, r_b, t_b),
  // whatever values the inputs carry (inflated claims stay valid bounds).
  const auto pa = cert_pool(f, rng, 4);
  for (std::size_t ra = 0; ra < 5; ++ra)
    for (std::size_t ta = 0; ta < 4; ++ta)
      for (std::size_t rb = 0; rb < 5; ++rb)
        for (std::size_t tb = 0; tb < 4; ++tb) {
          auto a = pa[0].first, b = pa[2].first;
          a.claimed_rank += ra;
          a.claimed_sparsity += ta;
          b.claimed_rank += rb;
          b.claimed_sparsity += tb;
          const auto p = compose_product(a, b);
          const auto k = compose_kron(a, b);
          ++symbolic;
          if (p.claimed_rank != a.claimed_rank + b.claimed_rank || p.claimed_sparsity != a.claimed_sparsity * b.claimed_sparsity ||
              k.claimed_rank != a.claimed_rank * 4 + b.claimed_rank * 4 || k.claimed_sparsity != a.claimed_sparsity * b.claimed_sparsity)
            o.fail("symbolic sweep at (" + std::to_string(a.claimed_rank) + "," + std::to_string(a.claimed_sparsity) + ") (" +
                   std::to_string(b.claimed_rank) + "," + std::to_string(b.claimed_sparsity) + ")");
        }
}

Outcome criterion3() {
  Outcome o;
  Rng rng(303);
  std::size_t products = 0, krons = 0, symbolic = 0;
  check_compositions(PrimeField(5), rng, o, products, krons, symbolic);
  check_compositions(PrimeField(7), rng, o, products, krons, symbolic);
  check_compositions(RationalField{}, rng, o, products, krons, symbolic);
  o.detail = std::to_string(products) + " products and " + std::to_string(krons) +
             " Kronecker compositions materialized (n <= 256), " + std::to_string(symbolic) + " symbolic claim points";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Tail bounds

Outcome criterion4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t checks = 0;
  double tightest = 1e300;
  for (std::size_t d = 2; d <= 5; ++d)
    for (std::size_t k = 1; k <= 20; ++k) {
      // binomial DP: count[s] = #tuples with s coordinates equal to d - 1
      std::vector<mpz_class> count(k + 1, 0);
      count[0] = 1;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t s = i + 1;; --s) {
          count[s] *= static_cast<unsigned long>(d - 1);
          if (s == 0) break;
          count[s] += count[s - 1];
        }
      const ScoreProfile profile(std::vector<std::size_t>(k, d));
      const mpq_class mean(static_cast<long>(k), static_cast<long>(d));
      for (std::size_t j = 1; j <= 10; ++j) {
        const double delta = static_cast<double>(j) / (11.0 * static_cast<double>(d));  // delta < 1/d
        const mpq_class offset = mpq_class(delta) * static_cast<long>(k);
        mpz_class c_exact = 0, r_exact = 0;
        for (std::size_t s = 0; s <= k; ++s) {
          const mpq_class sv(static_cast<long>(s));
          if (sv >= mean + offset) c_exact += count[s];
          if (sv <= mean - offset) r_exact += count[s];
        }
        const auto lib = threshold_sets(profile, offset);
        const std::string at = "d=" + std::to_string(d) + " k=" + std::to_string(k) + " j=" + std::to_string(j);
        if (lib.c_count != c_exact || lib.r_count != r_exact) o.fail(at + ": library counts differ from the DP");
        // exp((ln d - delta^2 d / 3) k), compared in log space
        const long double log_bound =
            (std::log(static_cast<long double>(d)) - static_cast<long double>(delta) * delta * d / 3.0L) * k;
        for (const auto* v : {&c_exact, &r_exact}) {
          ++checks;
          if (*v == 0) continue;
          const long double lv = std::log(static_cast<long double>(v->get_d()));
          tightest = std::min(tightest, static_cast<double>(log_bound - lv));
          if (lv > log_bound) o.fail(at + ": exact count " + v->get_str() + " exceeds the bound");
        }
      }
    }
  // Partial binomial sums against (e n / k)^k
  std::size_t sums = 0;
  for (std::size_t n = 0; n <= 30; ++n) {
    std::vector<mpz_class> row(n + 1);
    for (std::size_t i = 0; i <= n; ++i) mpz_bin_uiui(row[i].get_mpz_t(), n, i);
    mpz_class partial = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      partial += row[k];
      ++sums;
      if (binom_partial_sum(n, k) != partial) o.fail("binom_partial_sum(" + std::to_string(n) + "," + std::to_string(k) + ")");
      const long double bound =
          k == 0 ? 1.0L : std::pow(std::exp(1.0L) * static_cast<long double>(n) / static_cast<long double>(k), static_cast<long double>(k));
      if (static_cast<long double>(partial.get_d()) > bound)
        o.fail("sum C(" + std::to_string(n) + ", i<=" + std::to_string(k) + ") = " + partial.get_str() + " above (en/k)^k");
    }
  }
  const double secs = seconds_since(t0);
  if (secs > 60) o.fail("runtime " + fixed(secs) + " s exceeds 1 min");
  o.detail = std::to_string(checks) + " tail counts (smallest log margin " + fixed(tightest, 4) + "), " +
             std::to_string(sums) + " partial sums, " + fixed(secs, 2) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Oracle consistency

template <class F>
std::vector<Cert<F>> pipeline_certs(const std::vector<DenseMatrix<F>>& factors) {
  DecomposeOptions opt;
  opt.epsilon = 0.5;
  std::vector<Cert<F>> out;
  out.push_back(decompose_kron_product(KroneckerSpec<F>(factors[0].field(), factors), opt));
  out.push_back(decompose_unequal(factors, opt, UnequalMode::binpack));
  out.push_back(hadamard_family_pipeline(factors, opt));
  return out;
}

template <class F>
void oracle_instance(const std::vector<DenseMatrix<F>>& factors, Outcome& o, std::size_t& certs, std::size_t& ineq) {
  const auto a = naive_kron(factors);
  const std::size_t n = a.rows();
  std::vector<std::size_t> rc(n + 1), total(n + 1);
  for (std::size_t r = 0; r <= n; ++r) {
    rc[r] = brute_rc_rigidity(a, r).value;
    total[r] = brute_rigidity(a, r).value;
    ++ineq;
    if (total[r] > n * rc[r])
      o.fail(a.field().name() + " R > n R^rc at r=" + std::to_string(r));
  }
  for (const auto& c : pipeline_certs(factors)) {
    ++certs;
    if (!verify_cert(c).ok()) o.fail(a.field().name() + ": pipeline certificate does not verify");
    const std::size_t r = std::min(c.claimed_rank, n);
    if (rc[r] > c.claimed_sparsity)
      o.fail(a.field().name() + ": oracle R^rc " + std::to_string(rc[r]) + " > claimed " +
             std::to_string(c.claimed_sparsity) + " at rank " + std::to_string(r));
  }
}

template <class F>
std::vector<DenseMatrix<F>> all_2x2(const F& f, std::uint64_t p) {
  std::vector<DenseMatrix<F>> out;
  for (std::uint64_t code = 0; code < p * p * p * p; ++code) {
    DenseMatrix<F> m(f, 2, 2);
    std::uint64_t c = code;
    for (std::size_t i = 0; i < 4; ++i, c /= p) m(i / 2, i % 2) = f.from_int(static_cast<std::int64_t>(c % p));
    out.push_back(m);
  }
  return out;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t instances = 0, certs = 0, ineq = 0;
  for (std::uint64_t p : {2, 3}) {
    const PrimeField f(p);
    for (const auto& m : all_2x2(f, p)) {
      oracle_instance<PrimeField>({m}, o, certs, ineq);
      ++instances;
    }
  }
  // 4 x 4 Kronecker products of 2 x 2 matrices over F2, all pairs
  {
    const PrimeField f(2);
    const auto ms = all_2x2(f, 2);
    for (const auto& a : ms)
      for (const auto& b : ms) {
        oracle_instance<PrimeField>({a, b}, o, certs, ineq);
        ++instances;
      }
  }
  const RationalField q;
  oracle_instance<RationalField>({walsh(1).to_field(q)}, o, certs, ineq);
  ++instances;
  const double secs = seconds_since(t0);
  if (secs > 300) o.fail("runtime " + fixed(secs) + " s exceeds 5 min");
  o.detail = std::to_string(instances) + " oracle instances (all 2x2 over F2, F3; all F2 2x2 (x) 2x2; H2 over Q), " +
             std::to_string(certs) + " certificates, " + std::to_string(ineq) + " R <= n R^rc checks, " + fixed(secs) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Hadamard generators

std::string hadamard_defect(const HadamardMatrix& h) {
  const std::size_t n = h.order();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (h(i, j) != 1 && h(i, j) != -1) return "entry not +-1";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long long dot = 0;
      for (std::size_t l = 0; l < n; ++l) dot += h(i, l) * h(j, l);
      if (dot != (i == j ? static_cast<long long>(n) : 0))
        return "H H^T differs from n I at (" + std::to_string(i) + "," + std::to_string(j) + ")";
    }
  return "";
}

Outcome criterion6() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<HadamardMatrix> hs;
  for (std::size_t k = 0; k <= 6; ++k) hs.push_back(walsh(k));
  for (std::size_t q : {3, 7, 11, 19, 23}) hs.push_back(paley1(q));
  for (std::size_t q : {5, 13}) hs.push_back(paley2(q));
  hs.push_back(hadamard_kron({walsh(1), paley1(3)}));
  hs.push_back(hadamard_kron({paley2(5), walsh(2)}));
  hs.push_back(hadamard_kron({paley1(7), paley1(3), walsh(1)}));
  std::vector<std::string> names;
  for (const auto& h : hs) {
    const auto why = hadamard_defect(h);
    if (!why.empty()) o.fail(h.provenance().to_string() + ": " + why);
    names.push_back(h.provenance().to_string() + "=" + std::to_string(h.order()));
  }
  o.detail = std::to_string(hs.size()) + " matrices (" + names[0];
  for (std::size_t i = 1; i < names.size(); ++i) o.detail += " " + names[i];
  o.detail += "), " + fixed(seconds_since(t0), 2) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 8. Parameter checks

/// Conditions (i) and (ii) with w = 1, evaluated from scratch.
bool cond_i(const std::vector<std::size_t>& d, double K) {
  double m = 0, s = 0;
  const double dk = static_cast<double>(*std::max_element(d.begin(), d.end()));
  for (auto x : d) {
    m += 1.0 / static_cast<double>(x);
    s += std::log(static_cast<double>(x)) / std::log(dk);
  }
  return m <= K * s / dk * (1 + 1e-12);
}

bool cond_ii(const std::vector<std::size_t>& d, double L) {
  double m = 0, s = 0;
  const double dk = static_cast<double>(*std::max_element(d.begin(), d.end()));
  for (auto x : d) {
    m += 1.0 / static_cast<double>(x);
    s += std::log(static_cast<double>(x)) / std::log(dk);
  }
  return m * (1 + 1e-12) >= L * s / dk;
}

Outcome criterion8() {
  Outcome o;
  std::size_t equal = 0, two_valued = 0, bounded = 0;
  // equal sizes: K = L = 1
  for (std::size_t d = 2; d <= 9; ++d)
    for (std::size_t k = 1; k <= 16; ++k) {
      const std::vector<std::size_t> dims(k, d);
      const ScoreProfile profile(dims);
      const auto rep = predict_parameters(profile, 0.5);
      ++equal;
      if (rep.K != 1.0 || rep.L != 1.0)
        o.fail("equal d=" + std::to_string(d) + " k=" + std::to_string(k) + ": K=" + std::to_string(rep.K) +
               " L=" + std::to_string(rep.L));
      if (!cond_i(dims, 1.0) || !cond_ii(dims, 1.0) || !condition_i(profile, 1.0) || !condition_ii(profile, 1.0))
        o.fail("equal d=" + std::to_string(d) + ": conditions fail at K = L = 1");
    }
  // two values c d <= d_i <= d inside the regime log d >= log^2(1/c) / (log(1/c) - 1), logs base 2
  struct Regime {
    std::size_t small, large;
  };
  for (const auto& [small, large] : {Regime{4, 16}, Regime{4, 32}, Regime{8, 64}, Regime{4, 64}, Regime{16, 64}}) {
    const double c = static_cast<double>(small) / static_cast<double>(large);
    const double lc = std::log2(1 / c);
    if (std::log2(static_cast<double>(large)) < lc * lc / (lc - 1)) {
      o.fail("regime table entry outside the regime");
      continue;
    }
    const double bound = lc / c;
    for (std::size_t a = 0; a <= 12; ++a)
      for (std::size_t b = 1; b <= 12; ++b) {
        std::vector<std::size_t> dims(a, small);
        dims.insert(dims.end(), b, large);
        const ScoreProfile profile(dims);
        const double K = smallest_k(profile), L = largest_l(profile);
        ++two_valued;
        const std::string at = "two-valued " + std::to_string(small) + "^" + std::to_string(a) + "," +
                               std::to_string(large) + "^" + std::to_string(b);
        if (K > bound) o.fail(at + ": K=" + std::to_string(K) + " above (1/c)log(1/c)=" + std::to_string(bound));
        if (L < 1.0) o.fail(at + ": L=" + std::to_string(L) + " below 1");
        if (!cond_i(dims, bound) || !cond_ii(dims, 1.0)) o.fail(at + ": direct evaluation fails");
      }
  }
  // all but one d_i in [sqrt d, d], k > d: K <= 4 sqrt d
  Rng rng(808);
  for (std::size_t d : {4, 9, 16, 25, 36}) {
    const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    for (std::size_t k = d + 1; k <= d + 6; ++k)
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::size_t> dims{2 + rng.below(d - 1)};
        for (std::size_t i = 1; i < k; ++i) dims.push_back(root + rng.below(d - root + 1));
        const ScoreProfile profile(dims);
        const double K = smallest_k(profile), L = largest_l(profile);
        const double bound = 4 * std::sqrt(static_cast<double>(d));
        ++bounded;
        const std::string at = "d=" + std::to_string(d) + " k=" + std::to_string(k);
        if (K > bound) o.fail(at + ": K=" + std::to_string(K) + " above 4 sqrt d");
        if (L < 1.0) o.fail(at + ": L=" + std::to_string(L) + " below 1");
        if (!cond_i(dims, bound) || !cond_ii(dims, 1.0) || !condition_i(profile, bound) || !condition_ii(profile, 1.0))
          o.fail(at + ": direct evaluation fails");
      }
  }
  o.detail = std::to_string(equal) + " equal-size profiles (K = L = 1), " + std::to_string(two_valued) +
             " two-valued (K <= (1/c)log(1/c), L >= 1), " + std::to_string(bounded) + " sqrt-d regime (K <= 4 sqrt d, L >= 1)";
  return o;
}

// ---------------------------------------------------------------------------
// 9. Determinism of the command-line tool

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') out += "'\\''";
    else out += ch;
  }
  return out + "'";
}

Outcome criterion9(const std::string& binary) {
  Outcome o;
  const std::vector<std::vector<std::string>> commands{
      {"generate", "--walsh", "1", "--out", "h2.txt"},
      {"decompose", "--walsh", "1", "--walsh", "1", "--epsilon", "0.5", "--mode", "equal", "--out", "c1.txt", "--json", "c1.json"},
      {"decompose", "--random", "2", "--random", "3", "--random", "2", "--random", "5", "--field", "Fp 5", "--seed", "7",
       "--epsilon", "0.5", "--mode", "binpack", "--bin-cap", "10", "--out", "c2.txt", "--report", "r2.txt"},
      {"decompose", "--paley1", "3", "--walsh", "2", "--mode", "hadamard", "--epsilon", "0.4", "--out", "c3.txt"},
      {"decompose", "--random", "3", "--random", "3", "--random", "3", "--field", "Q", "--seed", "11", "--epsilon", "0.7",
       "--out", "c4.txt"},
      {"decompose", "--random", "4", "--random", "4", "--random", "4", "--random", "4", "--random", "4", "--field", "Fp 7",
       "--seed", "3", "--epsilon", "0.6", "--mode", "hadamard", "--bound", "3", "--out", "c5.txt"},
      {"verify", "--cert", "c1.txt", "--walsh", "1", "--walsh", "1"},
      {"verify", "--cert", "c2.txt", "--random", "2", "--random", "3", "--random", "2", "--random", "5", "--field", "Fp 5",
       "--seed", "7"},
      {"predict", "--dims", "2^10", "--epsilon", "0.5"},
      {"predict", "--dims", "2^3,1000", "--epsilon", "0.3"},
      {"oracle", "--rank", "1", "--file", "h2.txt", "--rc"},
      {"oracle", "--rank", "0", "--file", "h2.txt"},
      {"generate", "--random", "4", "--random", "2", "--seed", "3", "--field", "Fp 7", "--format", "sparse"},
  };
  const auto base = std::filesystem::temp_directory_path() / "rigidity_acceptance_determinism";
  std::filesystem::remove_all(base);
  std::vector<std::filesystem::path> runs{base / "run0", base / "run1"};
  const auto cwd = std::filesystem::current_path();
  for (const auto& dir : runs) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const auto out = dir / ("stdout." + std::to_string(i)), err = dir / ("stderr." + std::to_string(i));
      int code = 0;
      if (!binary.empty()) {
        std::string cmd = "cd " + shell_quote(dir.string()) + " && " + shell_quote(binary);
        for (const auto& a : commands[i]) cmd += " " + shell_quote(a);
        cmd += " > " + shell_quote(out.string()) + " 2> " + shell_quote(err.string());
        code = std::system(cmd.c_str());
      } else {
        std::filesystem::current_path(dir);
        std::ofstream fo(out, std::ios::binary), fe(err, std::ios::binary);
        code = cli::run(commands[i], fo, fe);
        std::filesystem::current_path(cwd);
      }
      if (code != 0) o.fail("command " + std::to_string(i) + " (" + commands[i][0] + ") exited with " + std::to_string(code));
    }
  }
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(runs[0])) {
    const auto other = runs[1] / entry.path().filename();
    ++files;
    if (!std::filesystem::exists(other) || slurp(entry.path()) != slurp(other))
      o.fail(entry.path().filename().string() + " differs between runs");
  }
  o.detail = std::to_string(commands.size()) + " commands run twice " +
             (binary.empty() ? std::string("in process") : std::string("as separate processes")) + ", " +
             std::to_string(files) + " output files compared byte for byte";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::string binary;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
    else if (a == "--cli" && i + 1 < argc) binary = argv[++i];
    else {
      std::cerr << "usage: acceptance [--only N]... [--cli <binary>]\n";
      return 1;
    }
  }
  auto wanted = [&](int n) { return only.empty() || only.count(n); };

  struct Line {
    int id;
    std::string name;
    Outcome outcome;
  };
  std::vector<Line> lines;
  auto guarded = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    lines.push_back({id, name, std::move(o)});
  };

  guarded(1, "reconstruction master suite", criterion1);
  if (wanted(2) || wanted(7)) {
    Outcome mono, exact;
    try {
      exact = criteria2and7(mono);
    } catch (const std::exception& e) {
      exact.fail(std::string("exception: ") + e.what());
      mono.fail("not run");
    }
    if (wanted(2)) lines.push_back({2, "G-split exactness (d=2, k=2..12, all grid offsets)", exact});
    if (wanted(7)) lines.push_back({7, "trade-off monotonicity along the offset grid", mono});
  }
  guarded(3, "composition ledgers", criterion3);
  guarded(4, "tail-bound dominance", criterion4);
  guarded(5, "oracle consistency", criterion5);
  guarded(6, "Hadamard generators", criterion6);
  guarded(8, "parameter checks K and L", criterion8);
  guarded(9, "CLI determinism", [&] { return criterion9(binary); });

  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  bool all = true;
  for (const auto& l : lines) {
    all = all && l.outcome.pass;
    std::cout << "criterion " << l.id << " [" << l.name << "]: " << (l.outcome.pass ? "PASS" : "FAIL") << " ("
              << l.outcome.detail << ")\n";
    for (const auto& f : l.outcome.failures) std::cout << "    " << f << "\n";
  }
  return all ? 0 : 1;
}

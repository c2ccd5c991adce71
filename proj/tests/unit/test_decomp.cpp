#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "score_oracle.hpp"

#include "rigidity/decomp.hpp"
#include "rigidity/random.hpp"

using namespace rigidity;
using namespace testing_helpers;

namespace {

/// Kronecker product straight from the definition.
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

/// Independent check: E + Z equals `expected`, rank(E) <= r, nnz(Z) <= t.
template <class F>
void check_cert_dense(const Cert<F>& c, const DenseMatrix<F>& expected) {
  const auto e = materialize_lowrank(c).to_dense();
  const auto z = c.z.to_dense();
  REQUIRE(e.rows() == expected.rows());
  CHECK(mat_add(e, z) == expected);
  CHECK(exact_rank(e) <= c.claimed_rank);
  CHECK(row_col_nnz(z).max() <= c.claimed_sparsity);
}

template <class F>
std::vector<DenseMatrix<F>> random_factors(Rng& rng, const F& f, const std::vector<std::size_t>& dims) {
  std::vector<DenseMatrix<F>> ms;
  for (auto d : dims) ms.push_back(rng.matrix(f, d, d));
  return ms;
}

template <class F>
std::vector<std::vector<typename F::Element>> random_xs(Rng& rng, const F& f, const std::vector<std::size_t>& dims) {
  std::vector<std::vector<typename F::Element>> xs;
  for (auto d : dims) {
    std::vector<typename F::Element> x(d);
    for (auto& v : x) v = rng.element(f);
    xs.push_back(std::move(x));
  }
  return xs;
}

template <class F>
std::shared_ptr<const Target<F>> kron_target(const F& f, std::vector<DenseMatrix<F>> ms) {
  return share(Target<F>(KroneckerSpec<F>(f, std::move(ms))));
}

template <class F>
Cert<F> random_split(Rng& rng, const F& f, const std::vector<std::size_t>& dims, const mpq_class& off) {
  return split_g_kron(f, random_xs(rng, f, dims), ScoreProfile(dims), off).cert;
}

DenseMatrix<PrimeField> sylvester(const PrimeField& f, std::size_t k) {
  auto h2 = mat(f, {{1, 1}, {1, -1}});
  DenseMatrix<PrimeField> acc = h2;
  for (std::size_t i = 1; i < k; ++i) acc = kron(acc, h2);
  return acc;
}

}  // namespace

TEST_CASE("split of G_2(1,1) (x) G_2(1,1)") {
  std::vector<std::vector<std::uint64_t>> xs{{1, 1}, {1, 1}};
  auto s = split_g_kron(F5, xs, ScoreProfile({2, 2}), 1);
  CHECK(s.cert.claimed_rank == 2);
  CHECK(s.cert.claimed_sparsity == 1);
  const auto g = mat(F5, {{1, 1, 1, 1}, {0, 1, 0, 1}, {0, 0, 1, 1}, {0, 0, 0, 1}});
  CHECK(s.cert.target->materialize().to_dense() == g);
  const auto& sup = std::get<SupportPart>(s.cert.low);
  CHECK(sup.rows == std::vector<std::size_t>{0});
  CHECK(sup.cols == std::vector<std::size_t>{3});
  check_cert_dense(s.cert, g);
  CHECK(verify_cert(s.cert).ok());
}

TEST_CASE("split claims agree with pattern enumeration") {
  Rng rng(41);
  for (int t = 0; t < 60; ++t) {
    const std::size_t k = 1 + rng.below(4);
    std::vector<std::size_t> dims(k);
    for (auto& d : dims) d = 2 + rng.below(3);
    ScoreProfile p(dims);
    const mpq_class off(static_cast<long>(1 + rng.below(12)), 8);
    auto xs = random_xs(rng, F7, dims);
    auto s = split_g_kron(F7, xs, p, off);
    oracle::ScoreEnumerator e(dims, p.weights());
    auto o = e.counts(off);
    CHECK(s.c_count == o.c);
    CHECK(s.r_count == o.r);
    CHECK(s.cert.claimed_sparsity == std::max(o.m_c, o.m_r));
    std::vector<DenseMatrix<PrimeField>> gs;
    for (auto& x : xs) gs.push_back(make_v_matrix<PrimeField>(F7, x));
    check_cert_dense(s.cert, naive_kron(gs));
    CHECK(verify_cert(s.cert).ok());
  }
}

TEST_CASE("transpose_cert") {
  Rng rng(42);
  auto c = random_split(rng, F5, {2, 3, 2}, mpq_class(1, 4));
  auto t = transpose_cert(c);
  CHECK(t.claimed_rank == c.claimed_rank);
  CHECK(t.claimed_sparsity == c.claimed_sparsity);
  const auto pc = row_col_nnz(c.z), pt = row_col_nnz(t.z);
  CHECK(pt.max_row == pc.max_col);
  CHECK(pt.max_col == pc.max_row);
  check_cert_dense(t, c.target->materialize().to_dense().transpose());
  CHECK(verify_cert(t).ok());
  auto tt = transpose_cert(t);
  CHECK(materialize_lowrank(tt) == materialize_lowrank(c));
}

TEST_CASE("compose_product adds ranks and multiplies sparsities") {
  Rng rng(43);
  for (int t = 0; t < 20; ++t) {
    const std::vector<std::size_t> dims{2, 2, 3};
    auto a = random_split(rng, F7, dims, mpq_class(1 + static_cast<long>(rng.below(4)), 4));
    auto b = transpose_cert(random_split(rng, F7, dims, mpq_class(1 + static_cast<long>(rng.below(4)), 4)));
    auto c = compose_product(a, b);
    CHECK(c.claimed_rank == a.claimed_rank + b.claimed_rank);
    CHECK(c.claimed_sparsity == a.claimed_sparsity * b.claimed_sparsity);
    const auto expected = naive_mul(a.target->materialize().to_dense(), b.target->materialize().to_dense());
    check_cert_dense(c, expected);
    CHECK(verify_cert(c).ok());
  }
}

TEST_CASE("compose_product collapses at full rank") {
  Rng rng(44);
  auto a = random_split(rng, Q, {2, 2}, mpq_class(1, 8));
  auto b = random_split(rng, Q, {2, 2}, mpq_class(1, 8));
  REQUIRE(a.claimed_rank + b.claimed_rank >= 4);
  auto c = compose_product(a, b);
  CHECK(std::holds_alternative<ResidualPart>(c.low));
  CHECK(verify_cert(c).ok());
}

TEST_CASE("compose_kron") {
  Rng rng(45);
  auto a = random_split(rng, F5, {2, 2}, 1);
  auto b = transpose_cert(random_split(rng, F5, {3}, mpq_class(1, 2)));
  b = compose_product(monomial_cert(kron_target(F5, {mat(F5, {{0, 2, 0}, {0, 0, 1}, {3, 0, 0}})})), b);
  auto c = compose_kron(a, b);
  CHECK(c.claimed_rank == a.claimed_rank * 3 + b.claimed_rank * 4);
  CHECK(c.claimed_sparsity == a.claimed_sparsity * b.claimed_sparsity);
  check_cert_dense(c, naive_kron<PrimeField>({a.target->materialize().to_dense(), b.target->materialize().to_dense()}));
  CHECK(verify_cert(c).ok());
}

TEST_CASE("verification detects tampering") {
  Rng rng(46);
  auto c = random_split(rng, F7, {2, 2, 2, 2}, mpq_class(1, 2));
  REQUIRE(verify_cert(c).ok());
  REQUIRE(row_col_nnz(c.z).max() > 0);

  auto bad = c;
  auto trip = bad.z.triplets();
  trip.push_back({0, 15, 1});
  bad.z = SparseMatrix<PrimeField>::from_triplets(F7, 16, 16, trip);
  auto r = verify_cert(bad);
  CHECK_FALSE(r.reconstruction_ok);
  CHECK(r.first_mismatch.rfind("row 0 col 15", 0) == 0);

  auto low = c;
  low.claimed_rank = verify_cert(c).exact_rank - 1;
  auto rr = verify_cert(low);
  CHECK(rr.reconstruction_ok);
  CHECK_FALSE(rr.rank_ok);
  CHECK_FALSE(rr.ok());

  auto sparse = c;
  sparse.claimed_sparsity = row_col_nnz(c.z).max() - 1;
  CHECK_FALSE(verify_cert(sparse).sparsity_ok);

  auto other = kron_target(F7, {mat(F7, {{1, 0}, {0, 1}}), mat(F7, {{1, 0}, {0, 1}})});
  CHECK_FALSE(verify_cert(c, *other).dimensions_ok);
}

TEST_CASE("decompose_kron_product, equal sizes") {
  Rng rng(47);
  for (int t = 0; t < 12; ++t) {
    const std::size_t d = 2 + rng.below(2);
    const std::size_t k = 2 + rng.below(d == 2 ? 4 : 2);
    std::vector<std::size_t> dims(k, d);
    auto ms = random_factors(rng, F7, dims);
    DecomposeOptions opt;
    opt.epsilon = 0.5;
    PipelineReport rep;
    auto c = decompose_kron_product(KroneckerSpec<PrimeField>(F7, ms), opt, &rep);
    CHECK(rep.layers.size() == 4 * d - 3);
    std::size_t rank = 0, sparsity = 1, split = 0;
    for (const auto& l : rep.layers) {
      rank += l.rank;
      sparsity *= l.sparsity;
      split += l.kind == "v" || l.kind == "v-transposed";
    }
    CHECK(c.claimed_rank == rank);
    CHECK(c.claimed_sparsity == sparsity);
    if (split == 2 * d - 2) CHECK(c.claimed_rank == (2 * d - 2) * std::stoul(*rep.get("layer_rank")));
    check_cert_dense(c, naive_kron(ms));
    CHECK(verify_cert(c).ok());
  }
}

TEST_CASE("decompose_kron_product over Q with a fixed delta") {
  Rng rng(48);
  auto ms = random_factors(rng, Q, {2, 2, 2, 2});
  DecomposeOptions opt;
  opt.delta = 0.2;
  auto c = decompose_kron_product(KroneckerSpec<RationalField>(Q, ms), opt);
  check_cert_dense(c, naive_kron(ms));
}

TEST_CASE("zero factor gives the (0,0) certificate") {
  auto c = decompose_kron_product(KroneckerSpec<PrimeField>(F5, {mat(F5, {{1, 2}, {3, 4}}), mat(F5, {{0, 0}, {0, 0}})}),
                                  DecomposeOptions{});
  CHECK(c.claimed_rank == 0);
  CHECK(c.claimed_sparsity == 0);
  CHECK(verify_cert(c).ok());
}

TEST_CASE("bin_pack") {
  CHECK(bin_pack({2, 2, 2}, 4) == std::vector<std::vector<std::size_t>>{{0, 1}, {2}});
  CHECK(bin_pack({3, 3, 3, 3}, 10) == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}});
  auto b = bin_pack({2, 3, 2}, 6);
  REQUIRE(b.size() == 2);
  CHECK(b[0] == std::vector<std::size_t>{0, 1});
  CHECK(b[1] == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(bin_pack({2, 7}, 6), InvalidArgument);

  Rng rng(49);
  for (int t = 0; t < 300; ++t) {
    const std::size_t cap = 4 + rng.below(60);
    std::vector<std::size_t> dims(1 + rng.below(10));
    for (auto& d : dims) d = 2 + rng.below(std::min<std::size_t>(cap - 1, 12));
    auto bins = bin_pack(dims, cap);
    std::set<std::size_t> seen;
    std::size_t light = 0;
    for (const auto& bin : bins) {
      std::size_t prod = 1;
      for (auto i : bin) {
        prod *= dims[i];
        CHECK(seen.insert(i).second);
      }
      CHECK(prod <= cap);
      if (prod * prod <= cap) ++light;
    }
    CHECK(seen.size() == dims.size());
    CHECK(light <= 1);
  }
}

TEST_CASE("decompose_unequal") {
  Rng rng(50);
  for (auto mode : {UnequalMode::direct, UnequalMode::binpack}) {
    auto ms = random_factors(rng, F5, {2, 3, 2});
    DecomposeOptions opt;
    opt.bin_cap = 6;
    PipelineReport rep;
    auto c = decompose_unequal(ms, opt, mode, &rep);
    check_cert_dense(c, naive_kron(ms));
    CHECK(verify_cert(c).ok());
    if (mode == UnequalMode::binpack) CHECK(*rep.get("bins") == "{0,1} {2}");
  }
}

TEST_CASE("permute_cert matches regrouped factors") {
  Rng rng(51);
  auto ms = random_factors(rng, F7, {2, 3, 2});
  const std::vector<std::size_t> order{2, 0, 1};
  std::vector<DenseMatrix<PrimeField>> re;
  for (auto i : order) re.push_back(ms[i]);
  auto c = decompose_kron_product(KroneckerSpec<PrimeField>(F7, re), DecomposeOptions{});
  auto p = permute_cert(c, regroup_index_map({2, 3, 2}, order), kron_target(F7, ms));
  CHECK(p.claimed_rank == c.claimed_rank);
  check_cert_dense(p, naive_kron(ms));
}

TEST_CASE("subset_expand_combine") {
  Rng rng(52);
  auto a = random_split(rng, F7, {2, 2}, 1);
  DecomposeOptions opt;
  opt.epsilon = 0.5;
  auto one = subset_expand_combine<PrimeField>({a}, opt);
  CHECK(one.claimed_rank == a.claimed_rank);
  CHECK(one.z == a.z);

  for (int t = 0; t < 8; ++t) {
    std::vector<Cert<PrimeField>> certs;
    std::vector<DenseMatrix<PrimeField>> ts;
    const std::size_t k = 2 + rng.below(2);
    for (std::size_t i = 0; i < k; ++i) {
      certs.push_back(random_split(rng, F7, {2, 2}, mpq_class(1 + static_cast<long>(rng.below(3)), 2)));
      ts.push_back(certs.back().target->materialize().to_dense());
    }
    opt.epsilon = 0.4 + 0.1 * static_cast<double>(t % 4);
    PipelineReport rep;
    auto c = subset_expand_combine(certs, opt, &rep);
    check_cert_dense(c, naive_kron(ts));
    CHECK(verify_cert(c).ok());
  }
}

TEST_CASE("buckets") {
  CHECK(bucket_index(4, 4) == 1);
  CHECK(bucket_index(16, 4) == 1);
  CHECK(bucket_index(17, 4) == 2);
  CHECK(bucket_index(256, 4) == 2);
  CHECK(bucket_index(257, 4) == 3);

  Rng rng(53);
  auto ms = random_factors(rng, F5, {4, 4, 5});
  std::vector<Cert<PrimeField>> certs;
  DecomposeOptions opt;
  opt.epsilon = 0.75;
  for (auto& m : ms) certs.push_back(factor_cert(m, opt));
  PipelineReport rep;
  auto c = bucket_pipeline(certs, opt, 4, &rep);
  check_cert_dense(c, naive_kron(ms));
  CHECK(verify_cert(c).ok());
  CHECK(rep.get("buckets")->find("1:large{0,1,2}") == 0);
  CHECK(*rep.get("psi") != "n/a");

  CHECK_THROWS_AS(bucket_pipeline(certs, opt, 3, &rep), InvalidArgument);

  DecomposeOptions wide = opt;
  wide.epsilon = 2;
  PipelineReport deg;
  auto d = bucket_pipeline(certs, wide, 4, &deg);
  CHECK(deg.has_flag("degenerate"));
  CHECK(d.claimed_rank == 0);
  CHECK(d.claimed_sparsity == 80);
  CHECK(verify_cert(d).ok());
}

TEST_CASE("hadamard case split") {
  CHECK(classify_hadamard_case(1, 10, 1e6, 5) == HadamardCase::f_trivial);
  CHECK(classify_hadamard_case(10, 1, 1e6, 5) == HadamardCase::bounded_n);
  CHECK(classify_hadamard_case(1e7, 10, 1e6, 5) == HadamardCase::product);
  CHECK(classify_hadamard_case(1e7, 1, 1e6, 5) == HadamardCase::h_trivial);
  CHECK(hadamard_log2_nb(6, 0.5, 0.5) > 1e4);
  CHECK(!bucket_psi(0.5, 0.3, 2, 10));
  CHECK(bucket_psi(0.5, 0.3, 16, 10).has_value());
}

TEST_CASE("hadamard family pipeline") {
  const PrimeField f(7);
  DecomposeOptions opt;
  opt.epsilon = 0.5;
  opt.bound = 2;
  std::vector<DenseMatrix<PrimeField>> ms{sylvester(f, 1), sylvester(f, 1), sylvester(f, 3)};
  PipelineReport rep;
  auto c = hadamard_family_pipeline(ms, opt, &rep);
  check_cert_dense(c, naive_kron(ms));
  CHECK(verify_cert(c).ok());
  CHECK(*rep.get("b_star") == "6");
  CHECK(*rep.get("F_route") == "trivial");
  CHECK(*rep.get("H_route") == "buckets");

  std::vector<DenseMatrix<PrimeField>> small{sylvester(f, 1), sylvester(f, 1), sylvester(f, 1), sylvester(f, 1)};
  PipelineReport rs;
  auto s = hadamard_family_pipeline(small, opt, &rs);
  CHECK(*rs.get("case") == "bounded-n");
  CHECK(*rs.get("F_route") == "bin packing");
  CHECK(verify_cert(s).ok());

  opt.gate_asymptotic_cases = true;
  PipelineReport rg;
  auto g = hadamard_family_pipeline(small, opt, &rg);
  CHECK(rg.has_flag("gated"));
  CHECK(g.claimed_rank == 0);
  CHECK(verify_cert(g).ok());
}

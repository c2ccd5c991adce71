#include "doctest.h"
#include "helpers.hpp"

#include "rigidity/random.hpp"
#include "rigidity/vfactor.hpp"

using namespace rigidity;
using namespace testing_helpers;

namespace {

template <class F>
void check_layout(const VFactorization<F>& fz, std::size_t d) {
  REQUIRE(fz.factors.size() == 4 * d - 3);
  for (std::size_t i = 0; i < fz.factors.size(); ++i) {
    const auto& g = fz.factors[i];
    CHECK(g.dim() == fz.dim);
    if (i == 2 * d - 2) {
      CHECK(g.kind == FactorKind::diagonal);
    } else if (i % 2 == 0) {
      CHECK(g.kind == FactorKind::monomial);
      CHECK(row_col_nnz(g.to_dense(fz.field)) == NnzProfile{1, 1});
    } else {
      CHECK(g.kind == (i < 2 * d - 2 ? FactorKind::v_transposed : FactorKind::v));
      auto p = row_col_nnz(g.to_dense(fz.field));
      CHECK(std::min(p.max_row, p.max_col) <= 2);
      CHECK(std::max(p.max_row, p.max_col) <= fz.dim);
    }
  }
}

}  // namespace

TEST_CASE("make_v_matrix") {
  std::vector<RationalField::Element> x{Q.parse("2"), Q.parse("3"), Q.parse("5")};
  CHECK(make_v_matrix<RationalField>(Q, x) == mat(Q, {{1, 0, 2}, {0, 1, 3}, {0, 0, 5}}));
  CHECK(make_v_matrix<RationalField>(Q, x, true) == mat(Q, {{1, 0, 0}, {0, 1, 0}, {2, 3, 5}}));
  std::vector<RationalField::Element> e{0, 1};
  CHECK(make_v_matrix<RationalField>(Q, e) == DenseMatrix<RationalField>::identity(Q, 2));
  std::vector<RationalField::Element> ones{1, 1};
  CHECK(make_v_matrix<RationalField>(Q, ones) == mat(Q, {{1, 1}, {0, 1}}));
}

TEST_CASE("v_factor_step on the identity") {
  for (std::size_t d = 2; d <= 5; ++d) {
    auto step = v_factor_step(DenseMatrix<RationalField>::identity(Q, d));
    CHECK(step.lambda == 1);
    CHECK(step.x == unit_vector(Q, d, d - 1));
    CHECK(step.y == unit_vector(Q, d, d - 1));
    CHECK(step.b == DenseMatrix<RationalField>::identity(Q, d - 1));
    CHECK(step.p1.to_dense() == DenseMatrix<RationalField>::identity(Q, d));
    CHECK(step.p2.to_dense() == DenseMatrix<RationalField>::identity(Q, d));
  }
}

TEST_CASE("v_factor_step reconstructs") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 2 + rng.below(4);
    auto a = rng.matrix(F5, d, d);
    auto step = v_factor_step(a);
    CHECK(step.product() == a);
    CHECK((exact_rank(a) == d ? step.lambda == 1 : step.lambda == 0));
  }
  auto zero = DenseMatrix<PrimeField>(F5, 2, 2);
  auto step = v_factor_step(zero);
  CHECK(step.lambda == 0);
  CHECK(step.product() == zero);
  CHECK_THROWS_AS(v_factor_step(DenseMatrix<PrimeField>::identity(F5, 1)), InvalidArgument);
}

TEST_CASE("embed_small_v") {
  Rng rng(22);
  for (std::size_t d = 1; d <= 6; ++d)
    for (std::size_t s = 1; s <= d; ++s) {
      std::vector<PrimeField::Element> x(s);
      for (auto& e : x) e = rng.element(F5);
      auto emb = embed_small_v(F5, std::span<const PrimeField::Element>(x), d);
      DenseMatrix<PrimeField> expected = DenseMatrix<PrimeField>::identity(F5, d);
      for (std::size_t i = 0; i < s; ++i) expected(i, s - 1) = x[i];
      auto got = mat_mul(mat_mul(emb.p1.to_dense(), make_v_matrix<PrimeField>(F5, emb.y)), emb.p2.to_dense());
      CHECK(got == expected);
      if (s == d) {
        CHECK(emb.y == x);
        CHECK(emb.p1.to_dense() == DenseMatrix<PrimeField>::identity(F5, d));
      }
    }
}

TEST_CASE("v_factor_full layouts and reconstruction") {
  auto h2 = mat(Q, {{1, 1}, {1, -1}});
  auto fz = v_factor_full(h2);
  CHECK(fz.factors.size() == 5);
  CHECK(fz.product() == h2);
  check_layout(fz, 2);

  auto diag = mat(Q, {{2, 0, 0}, {0, 3, 0}, {0, 0, 5}});
  auto fd = v_factor_full(diag);
  CHECK(fd.product() == diag);
  // Every V-factor of a diagonal input is itself diagonal: x = c * e_d.
  for (const auto& g : fd.factors)
    if (is_v_kind(g.kind)) {
      CHECK(g.x[0] == 0);
      CHECK(g.x[1] == 0);
      CHECK(g.x[2] != 0);
    }
  auto fi = v_factor_full(DenseMatrix<RationalField>::identity(Q, 4));
  for (const auto& g : fi.factors)
    if (is_v_kind(g.kind)) CHECK(g.x == unit_vector(Q, 4, 3));

  Rng rng(23);
  auto a4 = rng.matrix(F7, 4, 4);
  auto f4 = v_factor_full(a4);
  CHECK(f4.factors.size() == 13);
  CHECK(f4.product() == a4);

  for (int t = 0; t < 120; ++t) {
    const std::size_t d = 2 + rng.below(7);
    if (t % 3 == 0) {
      auto a = rng.matrix(Q, d, d);
      if (t % 2 == 0)  // force rank deficiency
        for (std::size_t j = 0; j < d; ++j) a(d - 1, j) = a(0, j) + a(1 % d, j);
      auto f = v_factor_full(a);
      CHECK(f.product() == a);
      check_layout(f, d);
    } else {
      const PrimeField& field = t % 3 == 1 ? F5 : F2;
      auto a = rng.matrix(field, d, d);
      auto f = v_factor_full(a);
      CHECK(f.product() == a);
      check_layout(f, d);
    }
  }
  auto one = v_factor_full(mat(Q, {{7}}));
  CHECK(one.factors.size() == 1);
  CHECK(one.factors[0].kind == FactorKind::diagonal);
}

TEST_CASE("pad_factorization") {
  Rng rng(24);
  auto a = rng.matrix(F5, 2, 2);
  auto f = v_factor_full(a);
  auto p3 = pad_factorization(f, 3);
  CHECK(p3.factors.size() == 9);
  CHECK(p3.product() == a);
  check_layout(p3, 3);
  CHECK(pad_factorization(f, 2).factors.size() == 5);
  auto p4 = pad_factorization(f, 4);
  CHECK(p4.factors.size() == 13);
  CHECK(p4.product() == a);
  CHECK_THROWS_AS(pad_factorization(v_factor_full(rng.matrix(F5, 3, 3)), 2), InvalidArgument);
}

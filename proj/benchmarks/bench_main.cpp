#include <benchmark/benchmark.h>

#include "rigidity/decomp.hpp"
#include "rigidity/hadamard.hpp"
#include "rigidity/oracle.hpp"
#include "rigidity/random.hpp"

using namespace rigidity;

namespace {

template <class F>
F make_field();
template <>
PrimeField make_field<PrimeField>() { return PrimeField(7); }
template <>
RationalField make_field<RationalField>() { return RationalField{}; }

// Sparse matrix times a Walsh-type Kronecker product of 2 x 2 factors.
template <class F>
void BM_SparseTimesKronecker(benchmark::State& state) {
  const auto f = make_field<F>();
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t n = std::size_t{1} << k;
  Rng rng(1);
  std::vector<DenseMatrix<F>> factors;
  for (std::size_t i = 0; i < k; ++i) factors.push_back(rng.matrix(f, 2, 2));
  const KroneckerSpec<F> spec(f, factors);
  DenseMatrix<F> v(f, n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, rng.below(n)) = rng.nonzero_element(f);
  const auto sv = SparseMatrix<F>::from_dense(v);
  for (auto _ : state) benchmark::DoNotOptimize(mat_mul(sv, spec));
}
BENCHMARK(BM_SparseTimesKronecker<PrimeField>)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SparseTimesKronecker<RationalField>)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);

void BM_ThresholdCounts(benchmark::State& state) {
  const ScoreProfile profile(std::vector<std::size_t>(static_cast<std::size_t>(state.range(0)), 3));
  const auto offset = offset_for_delta(profile, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(threshold_sets(profile, offset));
    benchmark::DoNotOptimize(neighborhood_counts(profile, offset));
  }
}
BENCHMARK(BM_ThresholdCounts)->Arg(20)->Arg(80)->Arg(320);

void BM_SplitGKron(benchmark::State& state) {
  const PrimeField f(5);
  const auto k = static_cast<std::size_t>(state.range(0));
  const ScoreProfile profile(std::vector<std::size_t>(k, 2));
  Rng rng(2);
  std::vector<std::vector<PrimeField::Element>> xs(k, std::vector<PrimeField::Element>(2));
  for (auto& x : xs)
    for (auto& e : x) e = rng.nonzero_element(f);
  const auto offset = offset_for_delta(profile, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(split_g_kron(f, xs, profile, offset));
}
BENCHMARK(BM_SplitGKron)->DenseRange(6, 12, 3)->Unit(benchmark::kMillisecond);

template <class F>
void BM_WalshPipeline(benchmark::State& state) {
  const auto f = make_field<F>();
  const auto k = static_cast<std::size_t>(state.range(0));
  std::vector<DenseMatrix<F>> factors(k, walsh(1).to_field(f));
  DecomposeOptions opt;
  opt.epsilon = 0.9;
  for (auto _ : state) {
    auto cert = decompose_kron_product(KroneckerSpec<F>(f, factors), opt);
    benchmark::DoNotOptimize(verify_cert(cert));
  }
}
BENCHMARK(BM_WalshPipeline<PrimeField>)->DenseRange(4, 10, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WalshPipeline<RationalField>)->DenseRange(4, 7, 3)->Unit(benchmark::kMillisecond);

void BM_HadamardFamily(benchmark::State& state) {
  const PrimeField f(7);
  std::vector<DenseMatrix<PrimeField>> factors{paley1(3).to_field(f), walsh(2).to_field(f), paley1(7).to_field(f)};
  DecomposeOptions opt;
  opt.epsilon = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(hadamard_family_pipeline(factors, opt));
}
BENCHMARK(BM_HadamardFamily)->Unit(benchmark::kMillisecond);

void BM_BruteRcRigidity(benchmark::State& state) {
  const PrimeField f(2);
  Rng rng(3);
  const auto a = rng.matrix(f, 4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(brute_rc_rigidity(a, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_BruteRcRigidity)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#pragma once

// Scores of index tuples, the high/low score sets C and R, neighbourhood
// counts M_c and M_r, and the analytic tail bounds used to predict them.
//
// Tuples are 0-based: coordinate i is "maximal" when x_i = d_i - 1.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace rigidity {

/// Weight function w: d -> rational >= 1, non-decreasing in d.
class WeightFunction {
 public:
  /// w == 1.
  WeightFunction() = default;
  /// Explicit table; every dimension used later must be listed.
  explicit WeightFunction(std::map<std::size_t, mpq_class> table);

  static WeightFunction uniform() { return {}; }
  /// Parses "d w" lines ('#' comments allowed).
  static WeightFunction parse(const std::string& text);

  bool is_uniform() const { return table_.empty(); }
  mpq_class operator()(std::size_t d) const;
  std::string to_string() const;

 private:
  std::map<std::size_t, mpq_class> table_;
};

class ScoreProfile {
 public:
  ScoreProfile(std::vector<std::size_t> dims, WeightFunction w = {});

  const std::vector<std::size_t>& dims() const { return dims_; }
  const WeightFunction& weight_function() const { return w_; }
  const std::vector<mpq_class>& weights() const { return weights_; }
  std::size_t size() const { return dims_.size(); }
  std::size_t max_dim() const { return max_dim_; }
  std::size_t min_dim() const { return min_dim_; }

  /// m = sum w(d_i)/d_i.
  const mpq_class& mean() const { return mean_; }
  /// sum w(d_i)^2 (d_i - 1)/d_i^2.
  const mpq_class& variance() const { return variance_; }
  /// log2 of n = prod d_i.
  double log2_order() const;

  /// s(x) = sum w(d_i) [x_i = d_i - 1].
  mpq_class score(std::span<const std::size_t> x) const;

 private:
  std::vector<std::size_t> dims_;
  WeightFunction w_;
  std::vector<mpq_class> weights_;
  mpq_class mean_;
  mpq_class variance_;
  std::size_t max_dim_ = 0;
  std::size_t min_dim_ = 0;
};

/// Exact counting engine for one (profile, offset) pair.  Coordinates are
/// grouped into classes of equal (d, w); all counts are exact integers.
///
///   C = {x : s(x) >= m + offset},  R = {x : s(x) <= m - offset}
///   M_c = max over y not in C of #{x not in R : y_i in {x_i, d_i} for all i}
///   M_r = max over x not in R of #{y not in C : y_i in {x_i, d_i} for all i}
class ScoreCounter {
 public:
  ScoreCounter(const ScoreProfile& profile, const mpq_class& offset);

  const mpq_class& offset() const { return offset_; }
  bool in_c(std::span<const std::size_t> x) const;
  bool in_r(std::span<const std::size_t> x) const;
  /// Integer-scaled score of a tuple (exact; see in_c/in_r).
  std::int64_t scaled_score(std::span<const std::size_t> x) const;
  /// Membership through a precomputed scaled score.
  bool scaled_in_c(std::int64_t s) const { return s >= c_min_; }
  bool scaled_in_r(std::int64_t s) const { return s <= r_max_; }
  /// Scaled weight of coordinate i.
  std::int64_t scaled_weight(std::size_t i) const { return scaled_[i]; }

  mpz_class count_c() const;
  mpz_class count_r() const;
  mpz_class max_tc() const;  // M_c
  mpz_class max_tr() const;  // M_r

 private:
  struct Class {
    std::size_t d;
    std::int64_t w;  // scaled weight
    std::size_t count;
  };

  std::vector<mpz_class> score_distribution() const;

  const ScoreProfile* profile_;
  mpq_class offset_;
  std::vector<std::int64_t> scaled_;  // per coordinate
  std::vector<Class> classes_;
  std::int64_t total_ = 0;  // sum of scaled weights
  std::int64_t c_min_ = 0;  // s in C iff scaled >= c_min_
  std::int64_t r_max_ = 0;  // s in R iff scaled <= r_max_
};

struct ThresholdSets {
  mpq_class offset;
  mpz_class c_count;
  mpz_class r_count;
  /// Explicit members (mixed-radix indices, increasing) when requested.
  std::vector<std::size_t> c_members;
  std::vector<std::size_t> r_members;
  bool explicit_lists = false;
};

/// Exact |C|, |R|; lists members explicitly when `with_lists` (n must fit
/// the enumeration cap).
ThresholdSets threshold_sets(const ScoreProfile& profile, const mpq_class& offset, bool with_lists = false);

struct NeighborhoodCounts {
  mpz_class m_c;
  mpz_class m_r;
  mpz_class max() const { return m_c > m_r ? m_c : m_r; }
};

NeighborhoodCounts neighborhood_counts(const ScoreProfile& profile, const mpq_class& offset);

/// Largest n for which explicit tuple enumeration is allowed.
inline constexpr std::size_t kEnumerationCap = std::size_t{1} << 22;

// ---------------------------------------------------------------------------
// Analytic bounds

/// exp(-delta^2 n / (3d)); requires d > 1 and 0 < delta < 1/d.
double bernstein_tail(double n, double d, double delta);

/// (e n / k)^k, and 1 for k = 0; requires 0 <= k <= n.
double binom_sum_bound(std::size_t n, std::size_t k);

/// Exact sum_{i <= k} C(n, i).
mpz_class binom_partial_sum(std::size_t n, std::size_t k);

/// Geometric grid of `points` relative thresholds spanning
/// [eps/(100 d), 1/d), d = largest dimension.
std::vector<double> delta_grid(double eps, std::size_t d_max, std::size_t points = 64);

/// offset = delta * d_max * m, computed exactly from the double delta.
mpq_class offset_for_delta(const ScoreProfile& profile, double delta);

struct ParameterReport {
  std::vector<std::size_t> dims;
  double epsilon = 0;
  double c = 0;
  double K = 0;
  double L = 0;
  double mean = 0;
  double variance = 0;
  double log2_n = 0;
  std::size_t layers = 0;           // number of V-layers, 2(d_k - 1)
  double layer_sparsity_budget = 0;  // n^{eps / layers}
  bool feasible = false;
  double delta = 0;                  // chosen grid value
  double relative_delta = 0;         // delta * d_k, the offset in units of m
  double predicted_layer_rank = 0;   // bound on |C| + |R|
  double predicted_layer_sparsity = 0;  // bound on max(M_c, M_r)
  double predicted_rank = 0;         // layers * layer rank
  double predicted_sparsity = 0;     // layer sparsity ^ layers
  mpz_class exact_layer_rank;        // |C| + |R| at the chosen delta
  mpz_class exact_layer_sparsity;    // max(M_c, M_r) at the chosen delta
  double gamma = 0;                  // c L eps^2 / (d_k log d_k K^2 log^2(K/eps))

  std::string to_text() const;
};

/// Smallest K with condition (i): m <= K (sum log d_i / log d_k) w(d_1)/d_k.
double smallest_k(const ScoreProfile& profile);
/// Largest L with condition (ii): m >= L (sum log d_i / log d_k) w(d_k)/d_k.
double largest_l(const ScoreProfile& profile);
bool condition_i(const ScoreProfile& profile, double K);
bool condition_ii(const ScoreProfile& profile, double L);

ParameterReport predict_parameters(const ScoreProfile& profile, double eps, double c = 1.0);

}  // namespace rigidity

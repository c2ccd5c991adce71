#include "rigidity/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rigidity/errors.hpp"

namespace rigidity {

namespace {

constexpr std::int64_t kMaxScaledTotal = 50'000'000;
constexpr std::size_t kMaxClassVectors = 4'000'000;

mpq_class parse_rational(const std::string& text) {
  const auto dot = text.find('.');
  if (dot == std::string::npos) {
    mpq_class q;
    if (q.set_str(text, 10) != 0) throw ParseError("bad rational '" + text + "'");
    q.canonicalize();
    return q;
  }
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  const std::size_t frac = text.size() - dot - 1;
  mpz_class num;
  if (digits.empty() || digits == "-" || num.set_str(digits, 10) != 0) throw ParseError("bad decimal '" + text + "'");
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac);
  mpq_class q(num, den);
  q.canonicalize();
  return q;
}

std::int64_t to_int64_clamped(const mpz_class& v, std::int64_t lo, std::int64_t hi) {
  if (v < lo) return lo;
  if (v > hi) return hi;
  return v.get_si();
}

mpz_class floor_q(const mpq_class& q) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

mpz_class ceil_q(const mpq_class& q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

mpz_class binomial(std::size_t n, std::size_t k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

/// Multiplies poly (indexed by weight, truncated to `limit`) by
/// sum_b C(n, b) * scale^b * z^(b*w).
void convolve_class(std::vector<mpz_class>& poly, std::size_t n, std::int64_t w, const mpz_class& scale,
                    std::int64_t limit) {
  std::vector<mpz_class> out(poly.size(), 0);
  mpz_class coeff = 1;  // C(n, b) * scale^b
  for (std::size_t b = 0; b <= n; ++b) {
    const std::int64_t shift = static_cast<std::int64_t>(b) * w;
    if (shift > limit) break;
    if (b > 0) coeff = coeff * scale * static_cast<unsigned long>(n - b + 1) / static_cast<unsigned long>(b);
    for (std::int64_t e = 0; e + shift <= limit; ++e)
      if (sgn(poly[e]) != 0) out[e + shift] += coeff * poly[e];
  }
  poly = std::move(out);
}

template <class Fn>
void for_each_class_vector(const std::vector<std::size_t>& limits, Fn&& fn) {
  std::size_t combos = 1;
  for (auto l : limits) {
    if (combos > kMaxClassVectors / (l + 1)) throw SizeCapExceeded("too many score classes to maximize over");
    combos *= l + 1;
  }
  std::vector<std::size_t> a(limits.size(), 0);
  for (;;) {
    fn(a);
    std::size_t i = 0;
    while (i < a.size() && a[i] == limits[i]) a[i++] = 0;
    if (i == a.size()) return;
    ++a[i];
  }
}

}  // namespace

// ---------------------------------------------------------------------------

WeightFunction::WeightFunction(std::map<std::size_t, mpq_class> table) : table_(std::move(table)) {
  const mpq_class* prev = nullptr;
  for (const auto& [d, w] : table_) {
    if (w < 1) throw InvalidArgument("weight w(" + std::to_string(d) + ") = " + w.get_str() + " < 1");
    if (prev && w < *prev) throw InvalidArgument("weights must be non-decreasing in d (at d = " + std::to_string(d) + ")");
    prev = &w;
  }
}

WeightFunction WeightFunction::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::size_t, mpq_class> table;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string d_text, w_text, extra;
    if (!(ls >> d_text)) continue;
    if (!(ls >> w_text) || (ls >> extra))
      throw ParseError("weights line " + std::to_string(lineno) + ": expected 'd w'");
    std::size_t d = 0;
    try {
      d = std::stoul(d_text);
    } catch (const std::exception&) {
      throw ParseError("weights line " + std::to_string(lineno) + ": bad dimension '" + d_text + "'");
    }
    table[d] = parse_rational(w_text);
  }
  if (table.empty()) throw ParseError("weights file has no entries");
  return WeightFunction(std::move(table));
}

mpq_class WeightFunction::operator()(std::size_t d) const {
  if (table_.empty()) return 1;
  const auto it = table_.find(d);
  if (it == table_.end()) throw InvalidArgument("no weight given for dimension " + std::to_string(d));
  return it->second;
}

std::string WeightFunction::to_string() const {
  if (table_.empty()) return "uniform";
  std::string out;
  for (const auto& [d, w] : table_) {
    if (!out.empty()) out += ",";
    out += std::to_string(d) + ":" + w.get_str();
  }
  return out;
}

// ---------------------------------------------------------------------------

ScoreProfile::ScoreProfile(std::vector<std::size_t> dims, WeightFunction w) : dims_(std::move(dims)), w_(std::move(w)) {
  if (dims_.empty()) throw InvalidArgument("score profile needs at least one dimension");
  min_dim_ = dims_.front();
  for (auto d : dims_) {
    if (d < 2) throw InvalidArgument("dimensions must be >= 2");
    max_dim_ = std::max(max_dim_, d);
    min_dim_ = std::min(min_dim_, d);
    const mpq_class wd = w_(d);
    weights_.push_back(wd);
    mean_ += wd / d;
    variance_ += wd * wd * (d - 1) / (d * d);
  }
}

double ScoreProfile::log2_order() const {
  double s = 0;
  for (auto d : dims_) s += std::log2(static_cast<double>(d));
  return s;
}

mpq_class ScoreProfile::score(std::span<const std::size_t> x) const {
  if (x.size() != dims_.size()) throw DimensionMismatch("tuple length");
  mpq_class s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= dims_[i])
      throw InvalidArgument("coordinate " + std::to_string(i + 1) + " = " + std::to_string(x[i] + 1) + " outside [" +
                            std::to_string(dims_[i]) + "]");
    if (x[i] == dims_[i] - 1) s += weights_[i];
  }
  return s;
}

// ---------------------------------------------------------------------------

ScoreCounter::ScoreCounter(const ScoreProfile& profile, const mpq_class& offset) : profile_(&profile), offset_(offset) {
  if (offset <= 0) throw InvalidArgument("offset must be positive");
  mpz_class scale = 1;
  for (const auto& w : profile.weights()) mpz_lcm(scale.get_mpz_t(), scale.get_mpz_t(), w.get_den_mpz_t());
  mpz_class total = 0;
  for (const auto& w : profile.weights()) {
    mpz_class s = w.get_num() * (scale / w.get_den());
    total += s;
    if (total > kMaxScaledTotal) throw SizeCapExceeded("scaled score range exceeds " + std::to_string(kMaxScaledTotal));
    scaled_.push_back(s.get_si());
  }
  total_ = total.get_si();

  const mpq_class m_scaled = profile.mean() * scale;
  const mpq_class off_scaled = offset * scale;
  c_min_ = to_int64_clamped(ceil_q(m_scaled + off_scaled), 0, total_ + 1);
  r_max_ = to_int64_clamped(floor_q(m_scaled - off_scaled), -1, total_);

  std::map<std::pair<std::size_t, std::int64_t>, std::size_t> groups;
  for (std::size_t i = 0; i < scaled_.size(); ++i) ++groups[{profile.dims()[i], scaled_[i]}];
  for (const auto& [key, count] : groups) classes_.push_back({key.first, key.second, count});
}

std::int64_t ScoreCounter::scaled_score(std::span<const std::size_t> x) const {
  const auto& dims = profile_->dims();
  if (x.size() != dims.size()) throw DimensionMismatch("tuple length");
  std::int64_t s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= dims[i]) throw InvalidArgument("coordinate out of range");
    if (x[i] == dims[i] - 1) s += scaled_[i];
  }
  return s;
}

bool ScoreCounter::in_c(std::span<const std::size_t> x) const { return scaled_in_c(scaled_score(x)); }
bool ScoreCounter::in_r(std::span<const std::size_t> x) const { return scaled_in_r(scaled_score(x)); }

std::vector<mpz_class> ScoreCounter::score_distribution() const {
  std::vector<mpz_class> poly(static_cast<std::size_t>(total_) + 1, 0);
  poly[0] = 1;
  for (const auto& c : classes_) {
    // Each coordinate contributes (d - 1) + z^w.
    std::vector<mpz_class> out(poly.size(), 0);
    mpz_class coeff;
    for (std::size_t b = 0; b <= c.count; ++b) {
      mpz_class nonmax;
      mpz_ui_pow_ui(nonmax.get_mpz_t(), c.d - 1, c.count - b);
      coeff = binomial(c.count, b) * nonmax;
      const std::int64_t shift = static_cast<std::int64_t>(b) * c.w;
      for (std::int64_t e = 0; e + shift <= total_; ++e)
        if (sgn(poly[e]) != 0) out[e + shift] += coeff * poly[e];
    }
    poly = std::move(out);
  }
  return poly;
}

mpz_class ScoreCounter::count_c() const {
  const auto dist = score_distribution();
  mpz_class s = 0;
  for (std::int64_t e = c_min_; e <= total_; ++e) s += dist[e];
  return s;
}

mpz_class ScoreCounter::count_r() const {
  const auto dist = score_distribution();
  mpz_class s = 0;
  for (std::int64_t e = 0; e <= r_max_; ++e) s += dist[e];
  return s;
}

mpz_class ScoreCounter::max_tr() const {
  // x not in R has a_c maximal coordinates in class c; y is x with a further
  // b_c maximal coordinates per class, and must stay below the C threshold.
  std::vector<std::size_t> limits;
  for (const auto& c : classes_) limits.push_back(c.count);
  mpz_class best = 0;
  for_each_class_vector(limits, [&](const std::vector<std::size_t>& a) {
    std::int64_t base = 0;
    for (std::size_t c = 0; c < a.size(); ++c) base += static_cast<std::int64_t>(a[c]) * classes_[c].w;
    if (base <= r_max_) return;
    const std::int64_t limit = c_min_ - 1 - base;
    if (limit < 0) return;
    std::vector<mpz_class> poly(static_cast<std::size_t>(limit) + 1, 0);
    poly[0] = 1;
    for (std::size_t c = 0; c < a.size(); ++c) convolve_class(poly, classes_[c].count - a[c], classes_[c].w, 1, limit);
    mpz_class total = 0;
    for (const auto& v : poly) total += v;
    if (total > best) best = total;
  });
  return best;
}

mpz_class ScoreCounter::max_tc() const {
  // y not in C has a_c maximal coordinates in class c; x drops b_c of them
  // (each to one of d_c - 1 values) and must stay above the R threshold.
  std::vector<std::size_t> limits;
  for (const auto& c : classes_) limits.push_back(c.count);
  mpz_class best = 0;
  for_each_class_vector(limits, [&](const std::vector<std::size_t>& a) {
    std::int64_t base = 0;
    for (std::size_t c = 0; c < a.size(); ++c) base += static_cast<std::int64_t>(a[c]) * classes_[c].w;
    if (base >= c_min_) return;
    const std::int64_t limit = base - r_max_ - 1;
    if (limit < 0) return;
    std::vector<mpz_class> poly(static_cast<std::size_t>(limit) + 1, 0);
    poly[0] = 1;
    for (std::size_t c = 0; c < a.size(); ++c)
      convolve_class(poly, a[c], classes_[c].w, mpz_class(static_cast<unsigned long>(classes_[c].d - 1)), limit);
    mpz_class total = 0;
    for (const auto& v : poly) total += v;
    if (total > best) best = total;
  });
  return best;
}

ThresholdSets threshold_sets(const ScoreProfile& profile, const mpq_class& offset, bool with_lists) {
  ScoreCounter counter(profile, offset);
  ThresholdSets out;
  out.offset = offset;
  out.c_count = counter.count_c();
  out.r_count = counter.count_r();
  if (!with_lists) return out;

  const auto& dims = profile.dims();
  std::size_t n = 1;
  for (auto d : dims) {
    if (n > kEnumerationCap / d) throw SizeCapExceeded("explicit threshold sets need n <= " + std::to_string(kEnumerationCap));
    n *= d;
  }
  std::vector<std::size_t> x(dims.size(), 0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto s = counter.scaled_score(x);
    if (counter.scaled_in_c(s)) out.c_members.push_back(idx);
    if (counter.scaled_in_r(s)) out.r_members.push_back(idx);
    for (std::size_t i = dims.size(); i-- > 0;) {
      if (++x[i] < dims[i]) break;
      x[i] = 0;
    }
  }
  out.explicit_lists = true;
  return out;
}

NeighborhoodCounts neighborhood_counts(const ScoreProfile& profile, const mpq_class& offset) {
  ScoreCounter counter(profile, offset);
  return {counter.max_tc(), counter.max_tr()};
}

// ---------------------------------------------------------------------------

double bernstein_tail(double n, double d, double delta) {
  if (!(d > 1)) throw InvalidArgument("bernstein_tail needs d > 1");
  if (!(delta > 0) || !(delta < 1 / d))
    throw InvalidArgument("bernstein_tail needs 0 < delta < 1/d (got delta = " + std::to_string(delta) + ")");
  return std::exp(-delta * delta * n / (3 * d));
}

double binom_sum_bound(std::size_t n, std::size_t k) {
  if (k > n) throw InvalidArgument("binom_sum_bound needs k <= n");
  if (k == 0) return 1;
  const double kd = static_cast<double>(k);
  return std::pow(std::exp(1.0) * static_cast<double>(n) / kd, kd);
}

mpz_class binom_partial_sum(std::size_t n, std::size_t k) {
  mpz_class s = 0;
  for (std::size_t i = 0; i <= std::min(n, k); ++i) s += binomial(n, i);
  return s;
}

std::vector<double> delta_grid(double eps, std::size_t d_max, std::size_t points) {
  if (!(eps > 0) || !(eps < 100)) throw InvalidArgument("delta grid needs 0 < eps < 100");
  if (d_max < 2 || points == 0) throw InvalidArgument("delta grid needs d >= 2 and at least one point");
  const double lo = eps / (100.0 * static_cast<double>(d_max));
  const double hi = 1.0 / static_cast<double>(d_max);
  std::vector<double> grid(points);
  for (std::size_t j = 0; j < points; ++j)
    grid[j] = lo * std::pow(hi / lo, static_cast<double>(j) / static_cast<double>(points));
  return grid;
}

mpq_class offset_for_delta(const ScoreProfile& profile, double delta) {
  if (!(delta > 0)) throw InvalidArgument("delta must be positive");
  mpq_class q(delta);
  return q * static_cast<unsigned long>(profile.max_dim()) * profile.mean();
}

// ---------------------------------------------------------------------------

namespace {

double log_ratio_sum(const ScoreProfile& p) {
  const double lk = std::log2(static_cast<double>(p.max_dim()));
  double s = 0;
  for (auto d : p.dims()) s += std::log2(static_cast<double>(d)) / lk;
  return s;
}

// m * d_k / w(d): exact rational, converted once.
double scaled_mean(const ScoreProfile& p, std::size_t d) {
  mpq_class q = p.mean() * static_cast<unsigned long>(p.max_dim()) / p.weight_function()(d);
  return q.get_d();
}

}  // namespace

bool condition_i(const ScoreProfile& p, double K) { return scaled_mean(p, p.min_dim()) <= K * log_ratio_sum(p); }
bool condition_ii(const ScoreProfile& p, double L) { return scaled_mean(p, p.max_dim()) >= L * log_ratio_sum(p); }

double smallest_k(const ScoreProfile& p) {
  double K = scaled_mean(p, p.min_dim()) / log_ratio_sum(p);
  while (!condition_i(p, K)) K = std::nextafter(K, std::numeric_limits<double>::infinity());
  return K;
}

double largest_l(const ScoreProfile& p) {
  double L = scaled_mean(p, p.max_dim()) / log_ratio_sum(p);
  while (!condition_ii(p, L)) L = std::nextafter(L, 0.0);
  return L;
}

ParameterReport predict_parameters(const ScoreProfile& profile, double eps, double c) {
  if (!(eps > 0) || !(eps < 1)) throw InvalidArgument("predict_parameters needs 0 < eps < 1");
  if (!(c > 0)) throw InvalidArgument("constant c must be positive");
  ParameterReport r;
  r.dims = profile.dims();
  r.epsilon = eps;
  r.c = c;
  r.K = smallest_k(profile);
  r.L = largest_l(profile);
  r.mean = profile.mean().get_d();
  r.variance = profile.variance().get_d();
  r.log2_n = profile.log2_order();

  const std::size_t dk = profile.max_dim();
  const std::size_t k = profile.size();
  const double n = std::exp2(r.log2_n);
  const double w1 = profile.weight_function()(profile.min_dim()).get_d();
  const double wk = profile.weight_function()(dk).get_d();
  r.layers = 2 * (dk - 1);
  r.layer_sparsity_budget = std::exp2(r.log2_n * eps / static_cast<double>(r.layers));

  const auto grid = delta_grid(eps, dk);
  bool have = false;
  for (double delta : grid) {
    const double rel = delta * static_cast<double>(dk);
    const double tail = n * std::exp(-rel * rel * r.mean / (3 * wk));
    const double layer_rank = std::min(2 * tail, n);

    const auto t_max = static_cast<std::size_t>(std::floor(2 * rel * r.mean / w1));
    const double mr = t_max >= k ? std::exp2(static_cast<double>(k))
                                 : std::min(binom_sum_bound(k, t_max), std::exp2(static_cast<double>(k)));
    const auto s_max = std::min(k, static_cast<std::size_t>(std::floor(2 * r.mean / w1)));
    const std::size_t t_c = std::min(t_max, s_max);
    const double mc = std::pow(static_cast<double>(dk - 1), static_cast<double>(t_c)) *
                      std::min(binom_sum_bound(s_max, t_c), std::exp2(static_cast<double>(s_max)));
    const double layer_t = std::max(mc, mr);

    const bool ok = layer_t <= r.layer_sparsity_budget && static_cast<double>(r.layers) * layer_rank < n;
    const bool better = !have || (ok && !r.feasible) || (ok == r.feasible && layer_rank < r.predicted_layer_rank);
    if (better) {
      have = true;
      r.feasible = ok;
      r.delta = delta;
      r.relative_delta = rel;
      r.predicted_layer_rank = layer_rank;
      r.predicted_layer_sparsity = layer_t;
    }
  }
  r.predicted_rank = static_cast<double>(r.layers) * r.predicted_layer_rank;
  r.predicted_sparsity = std::pow(r.predicted_layer_sparsity, static_cast<double>(r.layers));

  try {
    ScoreCounter counter(profile, offset_for_delta(profile, r.delta));
    r.exact_layer_rank = counter.count_c() + counter.count_r();
    const mpz_class mc = counter.max_tc(), mr = counter.max_tr();
    r.exact_layer_sparsity = mc > mr ? mc : mr;
  } catch (const SizeCapExceeded&) {
    r.exact_layer_rank = -1;
    r.exact_layer_sparsity = -1;
  }

  const double lk = std::log2(static_cast<double>(dk));
  const double lke = std::log2(r.K / eps);
  r.gamma = c * r.L * eps * eps / (static_cast<double>(dk) * lk * r.K * r.K * lke * lke);
  return r;
}

std::string ParameterReport::to_text() const {
  std::ostringstream o;
  o.precision(17);
  o << "dims: ";
  for (std::size_t i = 0; i < dims.size(); ++i) o << (i ? "," : "") << dims[i];
  o << "\n";
  o << "epsilon: " << epsilon << "\n";
  o << "K: " << K << "\n";
  o << "L: " << L << "\n";
  o << "mean: " << mean << "\n";
  o << "variance: " << variance << "\n";
  o << "log2_n: " << log2_n << "\n";
  o << "v_layers: " << layers << "\n";
  o << "layer_sparsity_budget: " << layer_sparsity_budget << "\n";
  o << "verdict: " << (feasible ? "feasible" : "infeasible") << "\n";
  o << "delta: " << delta << "\n";
  o << "relative_delta: " << relative_delta << "\n";
  o << "predicted_layer_rank: " << predicted_layer_rank << "\n";
  o << "predicted_layer_sparsity: " << predicted_layer_sparsity << "\n";
  o << "predicted_rank: " << predicted_rank << "\n";
  o << "predicted_sparsity: " << predicted_sparsity << "\n";
  o << "exact_layer_rank: " << (sgn(exact_layer_rank) < 0 ? std::string("n/a") : exact_layer_rank.get_str()) << "\n";
  o << "exact_layer_sparsity: " << (sgn(exact_layer_sparsity) < 0 ? std::string("n/a") : exact_layer_sparsity.get_str())
    << "\n";
  o << "gamma_c: " << c << "\n";
  o << "gamma: " << gamma << " (asymptotic only)\n";
  return o.str();
}

}  // namespace rigidity

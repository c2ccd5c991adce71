#pragma once

// Rigidity decompositions of Kronecker products: split of one G-layer,
// layer-by-layer composition along V-factorizations, bin packing of unequal
// factors, subset expansion, buckets and the Hadamard-family pipeline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rigidity/cert.hpp"
#include "rigidity/kronecker.hpp"
#include "rigidity/score.hpp"
#include "rigidity/vfactor.hpp"

namespace rigidity {

struct DecomposeOptions {
  double epsilon = 0.5;
  /// Relative threshold delta; chosen from the grid when empty.
  std::optional<double> delta;
  WeightFunction weights;
  Limits limits;
  /// Bin capacity for bin packing; 0 means the largest dimension.
  std::size_t bin_cap = 0;
  /// Size bound b of the Hadamard-family pipeline.
  double bound = 2;
  /// Constant c0 in gamma_b.
  double c0 = 0.5;
  /// Replace the constructive certificate by the trivial one in the
  /// bounded-n case of the Hadamard-family pipeline.
  bool gate_asymptotic_cases = false;
  /// Subset expansion over more factors falls back to plain Kronecker composition.
  std::size_t subset_cap = 16;
};

struct LayerEntry {
  std::string label;
  std::string kind;
  std::size_t rank = 0;
  std::size_t sparsity = 0;
};

/// Ledger of how a certificate was assembled.
struct PipelineReport {
  std::string mode;
  std::string field;
  std::vector<std::size_t> dims;
  double epsilon = 0;
  std::vector<LayerEntry> layers;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::string> flags;
  std::size_t order = 0;
  std::size_t final_rank = 0;
  std::size_t final_sparsity = 0;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  std::optional<std::string> get(const std::string& key) const;
  bool has_flag(const std::string& prefix) const;
  /// Copies layers, params and flags of a sub-pipeline under a prefix.
  void absorb(const PipelineReport& sub, const std::string& prefix);
  /// log_n r and log_n t (0 when r or t is 0).
  double rank_exponent() const;
  double sparsity_exponent() const;
  std::string to_text() const;
};

/// First-fit decreasing: groups factor positions into bins whose dimension
/// product is at most `cap`.  Members of each bin are in increasing position.
std::vector<std::vector<std::size_t>> bin_pack(const std::vector<std::size_t>& dims, std::size_t cap);

/// Bucket index of dimension d for base b: 1 for d in [b, b^2], t for d in
/// (b^{2^{t-1}}, b^{2^t}].
std::size_t bucket_index(std::size_t d, double b);

enum class HadamardCase { product, f_trivial, h_trivial, bounded_n };
const char* to_string(HadamardCase c);
/// Case split on log2 sizes: N_F, N_H, N_b and the threshold eps * log2 n.
HadamardCase classify_hadamard_case(double log2_nf, double log2_nh, double log2_nb, double log2_threshold);

/// gamma_b = c0 / (b^{3/2} log^3 b) * eps^2 / log^2(1/eps), logs base 2.
double hadamard_gamma(double b_star, double eps, double c0);
/// log2 N_b = 24 / (eps gamma_b) * log2 b.
double hadamard_log2_nb(double b_star, double eps, double c0);

/// eps^2 min gamma / (4 loglog d_k) - logloglog d_k / log n, logs base 2;
/// empty when loglog d_k <= 0.
std::optional<double> bucket_psi(double eps, double min_gamma, std::size_t d_max, double log2_n);

namespace detail {

std::string fmt(double v);

template <ExactField F>
SparseMatrix<F> hconcat_all(const F& f, std::size_t rows, const std::vector<SparseMatrix<F>>& parts) {
  std::size_t cols = 0;
  for (const auto& p : parts) cols += p.cols();
  typename SparseMatrix<F>::RowBuilder b(f, rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      for (std::size_t k = p.row_begin(i); k < p.row_end(i); ++k) b.push(off + p.col_at(k), p.value_at(k));
      off += p.cols();
    }
    b.end_row();
  }
  return b.finish();
}

template <ExactField F>
SparseMatrix<F> vconcat_all(const F& f, std::size_t cols, const std::vector<SparseMatrix<F>>& parts) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  typename SparseMatrix<F>::RowBuilder b(f, rows, cols);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.rows(); ++i) {
      for (std::size_t k = p.row_begin(i); k < p.row_end(i); ++k) b.push(p.col_at(k), p.value_at(k));
      b.end_row();
    }
  return b.finish();
}

inline std::size_t to_size(const mpz_class& v) {
  if (!v.fits_ulong_p()) throw SizeCapExceeded("count does not fit a machine word");
  return v.get_ui();
}

/// x supported on the last coordinate only: G_d(x) is then diagonal.
template <ExactField F>
bool diagonal_shaped(const F& f, const std::vector<typename F::Element>& x) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (!f.is_zero(x[i])) return false;
  return true;
}

inline double log2_size(std::size_t v) { return v == 0 ? 0.0 : std::log2(static_cast<double>(v)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// One G-layer

template <ExactField F>
struct SplitResult {
  Cert<F> cert;
  std::size_t c_count = 0;
  std::size_t r_count = 0;
  std::size_t m_c = 0;
  std::size_t m_r = 0;
};

/// Splits G = G_{d_1}(x_1) (x) ... (x) G_{d_k}(x_k): E is G on the rows R
/// and columns C of the score threshold sets, Z is the rest.
/// Claims (|C| + |R|, max(M_c, M_r)).
template <ExactField F>
SplitResult<F> split_g_kron(const F& f, const std::vector<std::vector<typename F::Element>>& xs,
                            const ScoreProfile& profile, const mpq_class& offset,
                            const Limits& limits = default_limits()) {
  const auto& dims = profile.dims();
  if (xs.size() != dims.size()) throw DimensionMismatch("split_g_kron: one vector per factor");
  std::vector<DenseMatrix<F>> gs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != dims[i]) throw DimensionMismatch("split_g_kron: vector " + std::to_string(i + 1));
    gs.push_back(make_v_matrix<F>(f, xs[i]));
  }
  auto target = share(Target<F>(KroneckerSpec<F>(f, std::move(gs), limits)));
  const std::size_t n = target->rows();

  ScoreCounter counter(profile, offset);
  const auto sets = threshold_sets(profile, offset, true);
  const auto nb = neighborhood_counts(profile, offset);

  std::vector<bool> in_r(n, false);
  for (auto i : sets.r_members) in_r[i] = true;

  // Row x of G has pattern y_i in {x_i, d_i - 1}; emit the entries with x not
  // in R and y not in C, in increasing y.
  const MixedRadix radix(dims);
  const std::size_t k = dims.size();
  typename SparseMatrix<F>::RowBuilder zb(f, n, n);
  std::vector<std::size_t> x(k);
  struct Frame {
    std::size_t col;
    std::int64_t score;
    typename F::Element value;
  };
  std::vector<Frame> cur, next;
  for (std::size_t row = 0; row < n; ++row) {
    if (!in_r[row]) {
      for (std::size_t i = 0; i < k; ++i) x[i] = radix.digit(row, i);
      cur.assign(1, Frame{0, 0, f.one()});
      for (std::size_t i = 0; i < k && !cur.empty(); ++i) {
        const std::size_t d = dims[i], last = d - 1;
        next.clear();
        for (const auto& fr : cur) {
          if (x[i] != last) next.push_back({fr.col * d + x[i], fr.score, fr.value});
          const auto& g = xs[i][x[i]];
          if (!f.is_zero(g)) next.push_back({fr.col * d + last, fr.score + counter.scaled_weight(i), f.mul(fr.value, g)});
        }
        std::swap(cur, next);
      }
      for (auto& fr : cur)
        if (!counter.scaled_in_c(fr.score)) zb.push(fr.col, std::move(fr.value));
    }
    zb.end_row();
  }

  SplitResult<F> out{Cert<F>{f, n, n, target, SupportPart{sets.r_members, sets.c_members}, zb.finish(), 0, 0},
                     detail::to_size(sets.c_count), detail::to_size(sets.r_count), detail::to_size(nb.m_c),
                     detail::to_size(nb.m_r)};
  out.cert.claimed_rank = out.c_count + out.r_count;
  out.cert.claimed_sparsity = std::max(out.m_c, out.m_r);
  return out;
}

// ---------------------------------------------------------------------------
// Regrouping

/// Certificate for M from one for M' where M'[map[i], map[j]] = M[i, j].
/// Equivalent to composing with the permutation (0, 1)-certificates on both sides.
template <ExactField F>
Cert<F> permute_cert(const Cert<F>& c, const std::vector<std::size_t>& map, std::shared_ptr<const Target<F>> target) {
  const std::size_t n = c.rows;
  if (map.size() != n || c.rows != c.cols) throw DimensionMismatch("permute_cert");
  std::vector<std::size_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[map[i]] = i;
  const F& f = c.field;
  auto perm_both = [&](const SparseMatrix<F>& m, bool rows, bool cols) {
    std::vector<Triplet<F>> t;
    t.reserve(m.nnz());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t k = m.row_begin(i); k < m.row_end(i); ++k)
        t.push_back({rows ? inv[i] : i, cols ? inv[m.col_at(k)] : m.col_at(k), m.value_at(k)});
    return SparseMatrix<F>::from_triplets(f, m.rows(), m.cols(), std::move(t));
  };
  Cert<F> out{f, n, n, std::move(target), ZeroPart{}, perm_both(c.z, true, true), c.claimed_rank, c.claimed_sparsity};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SupportPart>) {
          SupportPart s;
          for (auto i : p.rows) s.rows.push_back(inv[i]);
          for (auto j : p.cols) s.cols.push_back(inv[j]);
          std::sort(s.rows.begin(), s.rows.end());
          std::sort(s.cols.begin(), s.cols.end());
          out.low = std::move(s);
        } else if constexpr (std::is_same_v<P, FactoredPart<F>>) {
          out.low = FactoredPart<F>{perm_both(p.u, true, false), perm_both(p.v, false, true)};
        } else if constexpr (std::is_same_v<P, ExplicitPart<F>>) {
          out.low = ExplicitPart<F>{perm_both(p.e, true, true)};
        } else {
          out.low = p;
        }
      },
      c.low);
  return out;
}

// ---------------------------------------------------------------------------
// Equal-shape pipeline along V-factorizations

namespace detail {

/// Chooses the offset: the largest grid delta whose layer sparsity t meets
/// t^{layers} <= n^eps, else the one with the smallest t.
inline std::pair<double, bool> auto_delta(const ScoreProfile& profile, double eps, std::size_t v_layers) {
  const auto grid = delta_grid(eps, profile.max_dim());
  const double budget = eps * profile.log2_order();
  std::optional<double> best;
  double fallback = grid.front();
  mpz_class fallback_t = -1;
  for (double delta : grid) {
    const auto t = neighborhood_counts(profile, offset_for_delta(profile, delta)).max();
    const double lt = t <= 1 ? 0.0 : std::log2(t.get_d());
    if (static_cast<double>(v_layers) * lt <= budget + 1e-9) best = delta;
    if (fallback_t < 0 || t < fallback_t) {
      fallback_t = t;
      fallback = delta;
    }
  }
  if (best) return {*best, true};
  return {fallback, false};
}

}  // namespace detail

/// Certificate for M_1 (x) ... (x) M_k via V-factorizations padded to the
/// largest dimension D.  Each of the 4D - 3 layers is a Kronecker product of
/// monomial, diagonal or G factors; G-layers are split, the others give
/// (0, 1)-certificates, and the layers are composed right to left.
template <ExactField F>
Cert<F> decompose_kron_product(const KroneckerSpec<F>& spec, const DecomposeOptions& opt,
                               PipelineReport* report = nullptr) {
  const F& f = spec.field();
  const auto& dims = spec.dims();
  auto target = share(Target<F>(spec));
  PipelineReport local;
  PipelineReport& rep = report ? *report : local;
  rep.field = f.name();
  rep.dims = dims;
  rep.order = spec.order();
  rep.epsilon = opt.epsilon;
  if (rep.mode.empty()) rep.mode = "kronecker";
  if (!(opt.epsilon > 0)) throw InvalidArgument("epsilon must be positive");

  for (const auto& m : spec.factors())
    if (m.is_zero()) {
      rep.flags.push_back("zero target");
      rep.final_rank = rep.final_sparsity = 0;
      return zero_cert(target);
    }

  const ScoreProfile profile(dims, opt.weights);
  const std::size_t D = profile.max_dim();
  const std::size_t v_layers = 2 * (D - 1);

  double delta;
  if (opt.delta) {
    delta = *opt.delta;
    rep.set("delta_source", "given");
  } else {
    auto [d, met] = detail::auto_delta(profile, opt.epsilon, v_layers);
    delta = d;
    rep.set("delta_source", "grid");
    if (!met) rep.flags.push_back("sparsity budget not met at any grid delta; smallest layer sparsity used");
  }
  const mpq_class offset = offset_for_delta(profile, delta);
  rep.set("delta", delta);
  rep.set("offset", offset.get_str());
  rep.set("weights", opt.weights.to_string());
  rep.set("padded_dimension", std::to_string(D));
  rep.set("v_layers", std::to_string(v_layers));

  std::vector<VFactorization<F>> fzs;
  for (const auto& m : spec.factors()) fzs.push_back(pad_factorization(v_factor_full(m), D));
  const std::size_t layers = 4 * D - 3;
  for (const auto& fz : fzs)
    if (fz.factors.size() != layers) throw std::logic_error("padded factorization has the wrong length");

  auto layer_cert = [&](std::size_t l) -> Cert<F> {
    const FactorKind kind = fzs[0].factors[l].kind;
    bool all_diag = true;
    std::vector<std::vector<typename F::Element>> xs;
    std::vector<DenseMatrix<F>> mats;
    for (const auto& fz : fzs) {
      const auto& fac = fz.factors[l];
      if (is_v_kind(fac.kind) != is_v_kind(kind)) throw std::logic_error("misaligned layer kinds");
      if (is_v_kind(kind)) {
        xs.push_back(fac.x);
        all_diag = all_diag && detail::diagonal_shaped(f, fac.x);
      }
      mats.push_back(fac.to_dense(f));
    }
    LayerEntry e;
    e.label = "layer " + std::to_string(l);
    if (!is_v_kind(kind) || all_diag) {
      e.kind = is_v_kind(kind) ? std::string(to_string(kind)) + " (diagonal)" : to_string(kind);
      auto c = monomial_cert(share(Target<F>(KroneckerSpec<F>(f, std::move(mats), opt.limits))), opt.limits);
      e.rank = c.claimed_rank;
      e.sparsity = c.claimed_sparsity;
      rep.layers.push_back(e);
      return c;
    }
    auto s = split_g_kron(f, xs, profile, offset, opt.limits);
    e.kind = to_string(kind);
    e.rank = s.cert.claimed_rank;
    e.sparsity = s.cert.claimed_sparsity;
    rep.layers.push_back(e);
    if (!rep.get("layer_rank")) {
      rep.set("layer_rank", std::to_string(e.rank));
      rep.set("layer_sparsity", std::to_string(e.sparsity));
      rep.set("c_count", std::to_string(s.c_count));
      rep.set("r_count", std::to_string(s.r_count));
    }
    return kind == FactorKind::v_transposed ? transpose_cert(s.cert) : std::move(s.cert);
  };

  const std::size_t first_entry = rep.layers.size();
  Cert<F> acc = layer_cert(layers - 1);
  for (std::size_t l = layers - 1; l-- > 0;) {
    auto c = layer_cert(l);
    acc = compose_product(c, acc, std::shared_ptr<const Target<F>>{}, opt.limits);
  }
  std::reverse(rep.layers.begin() + static_cast<std::ptrdiff_t>(first_entry), rep.layers.end());

  // The layer product is M itself; the certificate is checked against M.
  acc.target = target;
  rep.final_rank = acc.claimed_rank;
  rep.final_sparsity = acc.claimed_sparsity;
  const double budget = opt.epsilon * profile.log2_order();
  rep.set("sparsity_budget_met",
          (acc.claimed_sparsity <= 1 || std::log2(static_cast<double>(acc.claimed_sparsity)) <= budget + 1e-9)
              ? "yes"
              : "no");
  return acc;
}

// ---------------------------------------------------------------------------
// Unequal sizes

enum class UnequalMode { direct, binpack };

template <ExactField F>
Cert<F> decompose_unequal(const std::vector<DenseMatrix<F>>& factors, const DecomposeOptions& opt, UnequalMode mode,
                          PipelineReport* report = nullptr) {
  if (factors.empty()) throw InvalidArgument("no factors");
  const F& f = factors[0].field();
  PipelineReport local;
  PipelineReport& rep = report ? *report : local;
  KroneckerSpec<F> spec(f, factors, opt.limits);
  if (mode == UnequalMode::direct) {
    rep.mode = "unequal-direct";
    return decompose_kron_product(spec, opt, &rep);
  }
  rep.mode = "unequal-binpack";
  const auto& dims = spec.dims();
  const std::size_t cap = opt.bin_cap ? opt.bin_cap : *std::max_element(dims.begin(), dims.end());
  const auto bins = bin_pack(dims, cap);
  std::vector<std::size_t> order;
  std::vector<DenseMatrix<F>> grouped;
  std::string text;
  for (const auto& bin : bins) {
    DenseMatrix<F> g = factors[bin[0]];
    for (std::size_t j = 1; j < bin.size(); ++j) g = kron(g, factors[bin[j]], opt.limits);
    grouped.push_back(std::move(g));
    text += text.empty() ? "{" : " {";
    for (std::size_t j = 0; j < bin.size(); ++j) {
      text += (j ? "," : "") + std::to_string(bin[j]);
      order.push_back(bin[j]);
    }
    text += "}";
  }
  rep.set("bin_cap", std::to_string(cap));
  rep.set("bins", text);
  KroneckerSpec<F> packed(f, std::move(grouped), opt.limits);
  PipelineReport sub;
  auto c = decompose_kron_product(packed, opt, &sub);
  for (auto& kv : sub.params) rep.set(kv.first, kv.second);
  for (auto& l : sub.layers) rep.layers.push_back(l);
  for (auto& fl : sub.flags) rep.flags.push_back(fl);
  rep.field = sub.field;
  rep.dims = dims;
  rep.order = spec.order();
  rep.epsilon = opt.epsilon;
  auto out = permute_cert(c, regroup_index_map(dims, order), share(Target<F>(spec)));
  rep.final_rank = out.claimed_rank;
  rep.final_sparsity = out.claimed_sparsity;
  return out;
}

// ---------------------------------------------------------------------------
// Subset expansion

/// From certificates M_i = A_i + Z_i, expands (x)(A_i + Z_i) over subsets S
/// of the factors where A is taken.  Terms with |S| >= ceil(eps k) form the
/// low-rank part (rank <= prod_{S} r_i prod_{not S} d_i each), the others
/// are added into Z.
template <ExactField F>
Cert<F> subset_expand_combine(const std::vector<Cert<F>>& certs, const DecomposeOptions& opt,
                              PipelineReport* report = nullptr) {
  if (certs.empty()) throw InvalidArgument("subset_expand_combine needs a certificate");
  PipelineReport local;
  PipelineReport& rep = report ? *report : local;
  const std::size_t k = certs.size();
  if (k == 1) return certs[0];
  if (k > opt.subset_cap) {
    rep.flags.push_back("subset expansion over " + std::to_string(k) + " factors exceeds cap " +
                        std::to_string(opt.subset_cap) + "; Kronecker composition used");
    Cert<F> acc = certs[0];
    for (std::size_t i = 1; i < k; ++i) acc = compose_kron(acc, certs[i], opt.limits);
    return acc;
  }
  const F& f = certs[0].field;
  std::size_t n = 1;
  for (const auto& c : certs) {
    check_same_field(f, c.field);
    if (!c.target || c.rows != c.cols) throw InvalidArgument("subset expansion needs square targets");
    if (n > opt.limits.max_order / c.rows) throw SizeCapExceeded("subset expansion order");
    n *= c.rows;
  }
  const auto q = static_cast<std::size_t>(std::ceil(opt.epsilon * static_cast<double>(k) - 1e-9));

  struct Parts {
    SparseMatrix<F> a, u, v, z, id;
    std::size_t rank_claim, a_nnz, d;
  };
  std::vector<Parts> ps;
  for (const auto& c : certs) {
    const std::size_t d = c.rows;
    Parts p{materialize_lowrank(c, opt.limits), SparseMatrix<F>(f, d, 0), SparseMatrix<F>(f, 0, d), c.z,
            SparseMatrix<F>::identity(f, d), std::min(c.claimed_rank, d), 0, d};
    if (std::holds_alternative<ResidualPart>(c.low)) {
      p.u = SparseMatrix<F>::identity(f, d);
      p.v = p.a;
    } else {
      auto fp = to_factored(c);
      p.u = std::move(fp.u);
      p.v = std::move(fp.v);
    }
    p.a_nnz = row_col_nnz(p.a).max();
    ps.push_back(std::move(p));
  }

  std::vector<SparseMatrix<F>> us, vs;
  SparseMatrix<F> z(f, n, n);
  std::size_t rank = 0, sparsity = 0, low_terms = 0, sparse_terms = 0;
  for (std::uint32_t s = 0; s < (std::uint32_t{1} << k); ++s) {
    bool zero = false;
    std::size_t size = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const bool in = (s >> i) & 1u;
      if (in ? ps[i].a.nnz() == 0 : ps[i].z.nnz() == 0) zero = true;
      size += in;
    }
    if (zero) continue;
    auto pick = [&](auto get) {
      SparseMatrix<F> m = get(0);
      for (std::size_t i = 1; i < k; ++i) m = kron(m, get(i), opt.limits);
      return m;
    };
    const auto in = [&](std::size_t i) { return ((s >> i) & 1u) != 0; };
    if (size >= q) {
      std::size_t r = 1;
      for (std::size_t i = 0; i < k; ++i) r *= in(i) ? ps[i].rank_claim : ps[i].d;
      rank += r;
      ++low_terms;
      us.push_back(pick([&](std::size_t i) { return in(i) ? ps[i].u : ps[i].z; }));
      vs.push_back(pick([&](std::size_t i) { return in(i) ? ps[i].v : ps[i].id; }));
    } else {
      std::size_t t = 1;
      for (std::size_t i = 0; i < k; ++i) t *= in(i) ? ps[i].a_nnz : certs[i].claimed_sparsity;
      sparsity += t;
      ++sparse_terms;
      z = mat_add(z, pick([&](std::size_t i) { return in(i) ? ps[i].a : ps[i].z; }));
    }
  }

  std::shared_ptr<const Target<F>> target = certs[0].target;
  for (std::size_t i = 1; i < k; ++i) target = share(Target<F>::kron(*target, *certs[i].target, opt.limits));
  Cert<F> out{f, n, n, target, ZeroPart{}, std::move(z), rank, sparsity};
  if (rank >= n) out.low = ResidualPart{};
  else if (!us.empty()) out.low = FactoredPart<F>{detail::hconcat_all(f, n, us), detail::vconcat_all(f, n, vs)};
  detail::collapse_if_trivial(out);

  rep.set("subset_threshold", std::to_string(q));
  rep.set("low_rank_terms", std::to_string(low_terms));
  rep.set("sparse_terms", std::to_string(sparse_terms));
  return out;
}

// ---------------------------------------------------------------------------
// Buckets

/// Kronecker product of factors of size >= b >= 3/eps.  Factors are grouped
/// into buckets by size; buckets whose product is at least n^{eps/L} are
/// combined by subset expansion, the rest is kept as a sparse residue.
template <ExactField F>
Cert<F> bucket_pipeline(const std::vector<Cert<F>>& certs, const DecomposeOptions& opt, double b,
                        PipelineReport* report = nullptr) {
  if (certs.empty()) throw InvalidArgument("bucket_pipeline needs a factor");
  const double eps = opt.epsilon;
  if (!(eps > 0)) throw InvalidArgument("epsilon must be positive");
  if (b * eps < 3 - 1e-12) throw InvalidArgument("bucket_pipeline needs b >= 3/eps");
  PipelineReport local;
  PipelineReport& rep = report ? *report : local;
  const std::size_t k = certs.size();
  std::vector<std::size_t> dims;
  for (const auto& c : certs) {
    if (c.rows < b) throw InvalidArgument("factor of size " + std::to_string(c.rows) + " below b");
    dims.push_back(c.rows);
  }
  std::size_t L = 1, n = 1;
  std::vector<std::size_t> bucket(k);
  for (std::size_t i = 0; i < k; ++i) {
    bucket[i] = bucket_index(dims[i], b);
    L = std::max(L, bucket[i]);
    n *= dims[i];
  }
  const double log2_n = std::log2(static_cast<double>(n));

  std::shared_ptr<const Target<F>> full = certs[0].target;
  for (std::size_t i = 1; i < k; ++i) full = share(Target<F>::kron(*full, *certs[i].target, opt.limits));

  std::vector<std::size_t> order, small;
  std::vector<Cert<F>> parts;
  std::string text;
  for (std::size_t t = 1; t <= L; ++t) {
    std::vector<std::size_t> members;
    double log2_nt = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (bucket[i] == t) {
        members.push_back(i);
        log2_nt += std::log2(static_cast<double>(dims[i]));
      }
    if (members.empty()) continue;
    const bool large = log2_nt >= eps / static_cast<double>(L) * log2_n - 1e-9;
    text += (text.empty() ? "" : " ") + std::to_string(t) + (large ? ":large{" : ":small{");
    for (std::size_t j = 0; j < members.size(); ++j) text += (j ? "," : "") + std::to_string(members[j]);
    text += "}";
    if (!large) {
      small.insert(small.end(), members.begin(), members.end());
      continue;
    }
    std::vector<Cert<F>> bc;
    for (auto i : members) bc.push_back(certs[i]);
    PipelineReport sub;
    parts.push_back(subset_expand_combine(bc, opt, &sub));
    for (auto& fl : sub.flags) rep.flags.push_back(fl);
    order.insert(order.end(), members.begin(), members.end());
  }
  rep.set("buckets", text);
  rep.set("bucket_levels", std::to_string(L));

  double min_gamma = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = static_cast<double>(std::max<std::size_t>(1, std::min(certs[i].claimed_rank, dims[i])));
    min_gamma = std::min(min_gamma, 1 - std::log2(r) / std::log2(static_cast<double>(dims[i])));
  }
  const auto psi = bucket_psi(eps, min_gamma, *std::max_element(dims.begin(), dims.end()), log2_n);
  rep.set("min_gamma", min_gamma);
  rep.set("psi", psi ? detail::fmt(*psi) : "n/a");

  if (parts.empty()) {
    rep.flags.push_back("degenerate: no bucket reaches n^{eps/L}");
    auto c = sparse_cert(full, opt.limits);
    c.claimed_sparsity = n;
    rep.final_rank = 0;
    rep.final_sparsity = n;
    return c;
  }
  if (!small.empty()) {
    std::shared_ptr<const Target<F>> st = certs[small[0]].target;
    for (std::size_t j = 1; j < small.size(); ++j) st = share(Target<F>::kron(*st, *certs[small[j]].target, opt.limits));
    parts.push_back(sparse_cert(st, opt.limits));
    order.insert(order.end(), small.begin(), small.end());
  }
  Cert<F> acc = parts[0];
  for (std::size_t j = 1; j < parts.size(); ++j) acc = compose_kron(acc, parts[j], opt.limits);
  auto out = permute_cert(acc, regroup_index_map(dims, order), full);
  rep.final_rank = out.claimed_rank;
  rep.final_sparsity = out.claimed_sparsity;
  return out;
}

// ---------------------------------------------------------------------------
// Single factors and the Hadamard family

/// Certificate for one matrix: the layer pipeline when it is non-trivial
/// (rank below d and sparsity within d^eps), else (0, t) with Z = M.
template <ExactField F>
Cert<F> factor_cert(const DenseMatrix<F>& m, const DecomposeOptions& opt) {
  auto target = share(Target<F>(KroneckerSpec<F>(m.field(), {m}, opt.limits)));
  if (m.is_zero()) return zero_cert(target);
  DecomposeOptions o = opt;
  o.delta.reset();
  auto c = decompose_kron_product(target->kronecker(), o);
  const double d = static_cast<double>(m.rows());
  if (c.claimed_rank < m.rows() && static_cast<double>(c.claimed_sparsity) <= std::pow(d, opt.epsilon)) return c;
  return sparse_cert(target, opt.limits);
}

/// Kronecker product of matrices of any sizes (intended: Hadamard matrices).
/// Factors of size <= b_* = max(b, 3/eps) go through bin packing and the
/// layer pipeline, larger ones through buckets; the case split on the two
/// partial products is recorded.
template <ExactField F>
Cert<F> hadamard_family_pipeline(const std::vector<DenseMatrix<F>>& factors, const DecomposeOptions& opt,
                                 PipelineReport* report = nullptr) {
  if (factors.empty()) throw InvalidArgument("no factors");
  const double eps = opt.epsilon;
  if (!(eps > 0 && eps < 1)) throw InvalidArgument("hadamard pipeline needs 0 < eps < 1");
  PipelineReport local;
  PipelineReport& rep = report ? *report : local;
  rep.mode = "hadamard";
  const F& f = factors[0].field();
  KroneckerSpec<F> spec(f, factors, opt.limits);
  auto full = share(Target<F>(spec));
  const auto& dims = spec.dims();
  rep.field = f.name();
  rep.dims = dims;
  rep.order = spec.order();
  rep.epsilon = eps;

  const double b_star = std::max(opt.bound, 3 / eps);
  std::vector<std::size_t> fs, hs;
  double log2_nf = 0, log2_nh = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (static_cast<double>(dims[i]) <= b_star) {
      fs.push_back(i);
      log2_nf += std::log2(static_cast<double>(dims[i]));
    } else {
      hs.push_back(i);
      log2_nh += std::log2(static_cast<double>(dims[i]));
    }
  }
  const double log2_n = log2_nf + log2_nh;
  const double log2_nb = hadamard_log2_nb(b_star, eps, opt.c0);
  const auto which = classify_hadamard_case(log2_nf, log2_nh, log2_nb, eps * log2_n);
  rep.set("b_star", b_star);
  rep.set("gamma_b", hadamard_gamma(b_star, eps, opt.c0));
  rep.set("log2_N_b", log2_nb);
  rep.set("log2_N_F", log2_nf);
  rep.set("log2_N_H", log2_nh);
  rep.set("case", to_string(which));

  if (which == HadamardCase::bounded_n && opt.gate_asymptotic_cases) {
    rep.flags.push_back("gated: bounded-n case, trivial certificate");
    auto c = sparse_cert(full, opt.limits);
    rep.final_rank = c.claimed_rank;
    rep.final_sparsity = c.claimed_sparsity;
    return c;
  }

  auto sub_spec = [&](const std::vector<std::size_t>& idx) {
    std::vector<DenseMatrix<F>> ms;
    for (auto i : idx) ms.push_back(factors[i]);
    return ms;
  };
  std::vector<Cert<F>> parts;
  std::vector<std::size_t> order;
  if (!fs.empty()) {
    auto ms = sub_spec(fs);
    if (which == HadamardCase::f_trivial) {
      parts.push_back(sparse_cert(share(Target<F>(KroneckerSpec<F>(f, ms, opt.limits))), opt.limits));
      rep.set("F_route", "trivial");
    } else {
      DecomposeOptions o = opt;
      o.bin_cap = static_cast<std::size_t>(std::floor(b_star));
      PipelineReport sub;
      parts.push_back(decompose_unequal(ms, o, UnequalMode::binpack, &sub));
      rep.absorb(sub, "F.");
      rep.set("F_route", "bin packing");
    }
    order.insert(order.end(), fs.begin(), fs.end());
  }
  if (!hs.empty()) {
    auto ms = sub_spec(hs);
    if (which == HadamardCase::h_trivial) {
      parts.push_back(sparse_cert(share(Target<F>(KroneckerSpec<F>(f, ms, opt.limits))), opt.limits));
      rep.set("H_route", "trivial");
    } else {
      std::vector<Cert<F>> certs;
      for (const auto& m : ms) certs.push_back(factor_cert(m, opt));
      PipelineReport sub;
      parts.push_back(bucket_pipeline(certs, opt, b_star, &sub));
      rep.absorb(sub, "H.");
      rep.set("H_route", "buckets");
    }
    order.insert(order.end(), hs.begin(), hs.end());
  }
  Cert<F> acc = parts[0];
  for (std::size_t j = 1; j < parts.size(); ++j) acc = compose_kron(acc, parts[j], opt.limits);
  auto out = permute_cert(acc, regroup_index_map(dims, order), full);
  rep.final_rank = out.claimed_rank;
  rep.final_sparsity = out.claimed_sparsity;
  return out;
}

}  // namespace rigidity

#include "rigidity/decomp.hpp"

#include <cstdio>
#include <sstream>

namespace rigidity {

namespace detail {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

void PipelineReport::set(const std::string& key, const std::string& value) {
  for (auto& kv : params)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  params.emplace_back(key, value);
}

void PipelineReport::set(const std::string& key, double value) { set(key, detail::fmt(value)); }

std::optional<std::string> PipelineReport::get(const std::string& key) const {
  for (const auto& kv : params)
    if (kv.first == key) return kv.second;
  return std::nullopt;
}

bool PipelineReport::has_flag(const std::string& prefix) const {
  for (const auto& f : flags)
    if (f.rfind(prefix, 0) == 0) return true;
  return false;
}

void PipelineReport::absorb(const PipelineReport& sub, const std::string& prefix) {
  for (const auto& l : sub.layers) layers.push_back({prefix + l.label, l.kind, l.rank, l.sparsity});
  for (const auto& kv : sub.params) set(prefix + kv.first, kv.second);
  for (const auto& f : sub.flags) flags.push_back(prefix + f);
  set(prefix + "rank", std::to_string(sub.final_rank));
  set(prefix + "sparsity", std::to_string(sub.final_sparsity));
}

double PipelineReport::rank_exponent() const {
  if (final_rank == 0 || order < 2) return 0;
  return std::log2(static_cast<double>(final_rank)) / std::log2(static_cast<double>(order));
}

double PipelineReport::sparsity_exponent() const {
  if (final_sparsity == 0 || order < 2) return 0;
  return std::log2(static_cast<double>(final_sparsity)) / std::log2(static_cast<double>(order));
}

std::string PipelineReport::to_text() const {
  std::ostringstream o;
  o << "mode: " << mode << "\n";
  o << "field: " << field << "\n";
  o << "dims:";
  for (auto d : dims) o << ' ' << d;
  o << "\n";
  o << "order: " << order << "\n";
  o << "epsilon: " << detail::fmt(epsilon) << "\n";
  for (const auto& kv : params) o << kv.first << ": " << kv.second << "\n";
  for (const auto& l : layers)
    o << "layer: " << l.label << " kind=" << l.kind << " rank=" << l.rank << " sparsity=" << l.sparsity << "\n";
  for (const auto& f : flags) o << "flag: " << f << "\n";
  o << "rank: " << final_rank << "\n";
  o << "sparsity: " << final_sparsity << "\n";
  o << "rank_exponent: " << detail::fmt(rank_exponent()) << "\n";
  o << "sparsity_exponent: " << detail::fmt(sparsity_exponent()) << "\n";
  return o.str();
}

std::vector<std::vector<std::size_t>> bin_pack(const std::vector<std::size_t>& dims, std::size_t cap) {
  std::vector<std::size_t> idx(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 2) throw InvalidArgument("bin_pack: dimension below 2");
    if (dims[i] > cap)
      throw InvalidArgument("bin_pack: dimension " + std::to_string(dims[i]) + " exceeds cap " + std::to_string(cap));
    idx[i] = i;
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dims[a] > dims[b]; });
  std::vector<std::vector<std::size_t>> bins;
  std::vector<std::size_t> load;
  for (auto i : idx) {
    bool placed = false;
    for (std::size_t b = 0; b < bins.size() && !placed; ++b)
      if (load[b] <= cap / dims[i]) {
        load[b] *= dims[i];
        bins[b].push_back(i);
        placed = true;
      }
    if (!placed) {
      bins.push_back({i});
      load.push_back(dims[i]);
    }
  }
  for (auto& b : bins) std::sort(b.begin(), b.end());
  return bins;
}

std::size_t bucket_index(std::size_t d, double b) {
  if (!(b > 1)) throw InvalidArgument("bucket base must exceed 1");
  const long double x = static_cast<long double>(d);
  long double top = static_cast<long double>(b) * b;
  std::size_t t = 1;
  while (x > top * (1 + 1e-15L)) {
    top *= top;
    ++t;
  }
  return t;
}

const char* to_string(HadamardCase c) {
  switch (c) {
    case HadamardCase::product: return "product";
    case HadamardCase::f_trivial: return "F-trivial";
    case HadamardCase::h_trivial: return "H-trivial";
    case HadamardCase::bounded_n: return "bounded-n";
  }
  return "?";
}

HadamardCase classify_hadamard_case(double log2_nf, double log2_nh, double log2_nb, double log2_threshold) {
  if (log2_nf <= log2_threshold) return HadamardCase::f_trivial;
  if (log2_nf < log2_nb) return HadamardCase::bounded_n;
  if (log2_nh >= log2_threshold) return HadamardCase::product;
  return HadamardCase::h_trivial;
}

double hadamard_gamma(double b_star, double eps, double c0) {
  if (!(eps > 0 && eps < 1) || !(b_star > 1)) throw InvalidArgument("hadamard_gamma domain");
  const double lb = std::log2(b_star), le = std::log2(1 / eps);
  return c0 / (std::pow(b_star, 1.5) * lb * lb * lb) * eps * eps / (le * le);
}

double hadamard_log2_nb(double b_star, double eps, double c0) {
  return 24 / (eps * hadamard_gamma(b_star, eps, c0)) * std::log2(b_star);
}

std::optional<double> bucket_psi(double eps, double min_gamma, std::size_t d_max, double log2_n) {
  if (d_max < 2 || !(log2_n > 0)) return std::nullopt;
  const double ll = std::log2(std::log2(static_cast<double>(d_max)));
  if (!(ll > 0)) return std::nullopt;
  return eps * eps * min_gamma / (4 * ll) - std::log2(ll) / log2_n;
}

}  // namespace rigidity

#include "rigidity/hadamard.hpp"

#include <cstdint>

namespace rigidity {

std::string HadamardProvenance::to_string() const {
  switch (kind) {
    case Kind::walsh: return "walsh(" + std::to_string(param) + ")";
    case Kind::paley1: return "paley1(" + std::to_string(param) + ")";
    case Kind::paley2: return "paley2(" + std::to_string(param) + ")";
    case Kind::kron: {
      std::string s = "kron(";
      for (std::size_t i = 0; i < children.size(); ++i) s += (i ? "," : "") + children[i].to_string();
      return s + ")";
    }
  }
  return "?";
}

HadamardMatrix::HadamardMatrix(std::size_t order, std::vector<std::int8_t> entries, HadamardProvenance provenance)
    : n_(order), e_(std::move(entries)), prov_(std::move(provenance)) {
  if (e_.size() != n_ * n_) throw DimensionMismatch("Hadamard entries");
  for (auto v : e_)
    if (v != 1 && v != -1) throw InvalidArgument("Hadamard entries must be +1 or -1");
}

bool HadamardMatrix::is_orthogonal() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      std::int64_t s = 0;
      for (std::size_t l = 0; l < n_; ++l) s += e_[i * n_ + l] * e_[j * n_ + l];
      if (s != (i == j ? static_cast<std::int64_t>(n_) : 0)) return false;
    }
  return true;
}

namespace {

/// Negates rows, then columns, so that the first column and row are all +1.
void normalize(std::size_t n, std::vector<std::int8_t>& e) {
  for (std::size_t i = 0; i < n; ++i)
    if (e[i * n] < 0)
      for (std::size_t j = 0; j < n; ++j) e[i * n + j] = static_cast<std::int8_t>(-e[i * n + j]);
  for (std::size_t j = 0; j < n; ++j)
    if (e[j] < 0)
      for (std::size_t i = 0; i < n; ++i) e[i * n + j] = static_cast<std::int8_t>(-e[i * n + j]);
}

/// Quadratic character mod q by enumerating squares.
std::vector<int> character(std::size_t q) {
  std::vector<int> chi(q, -1);
  chi[0] = 0;
  for (std::size_t a = 1; a < q; ++a) chi[(a * a) % q] = 1;
  return chi;
}

void check_paley_prime(std::size_t q, std::size_t residue, const char* name) {
  if (!is_prime(q) || q >= kPaleyPrimeLimit)
    throw InvalidArgument(std::string(name) + ": q must be a prime below " + std::to_string(kPaleyPrimeLimit));
  if (q % 4 != residue)
    throw InvalidArgument(std::string(name) + ": q = " + std::to_string(q) + " is not " + std::to_string(residue) +
                          " mod 4");
}

/// Core matrix S of order q + 1: S[0][0] = 0, S[0][j] = 1, S[i][0] = sign,
/// S[i][j] = chi(j - i).
std::vector<int> paley_core(std::size_t q, int sign) {
  const auto chi = character(q);
  const std::size_t m = q + 1;
  std::vector<int> s(m * m, 0);
  for (std::size_t j = 1; j < m; ++j) {
    s[j] = 1;
    s[j * m] = sign;
  }
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < q; ++j) s[(i + 1) * m + (j + 1)] = chi[(j + q - i) % q];
  return s;
}

}  // namespace

HadamardMatrix walsh(std::size_t k, const Limits& limits) {
  if (k >= 64 || (std::size_t{1} << k) > limits.max_order)
    throw SizeCapExceeded("walsh(" + std::to_string(k) + ") exceeds order cap");
  const std::size_t n = std::size_t{1} << k;
  check_dense_size(n, n, limits);
  std::vector<std::int8_t> e(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e[i * n + j] = (__builtin_popcountll(i & j) & 1) ? -1 : 1;
  return {n, std::move(e), {HadamardProvenance::Kind::walsh, k, {}}};
}

HadamardMatrix paley1(std::size_t q) {
  check_paley_prime(q, 3, "paley1");
  // H = I + S with S skew: first column -1.
  const std::size_t m = q + 1;
  auto s = paley_core(q, -1);
  std::vector<std::int8_t> e(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) e[i * m + j] = static_cast<std::int8_t>(s[i * m + j] + (i == j ? 1 : 0));
  normalize(m, e);
  return {m, std::move(e), {HadamardProvenance::Kind::paley1, q, {}}};
}

HadamardMatrix paley2(std::size_t q) {
  check_paley_prime(q, 1, "paley2");
  // S symmetric; 0 -> [[1,-1],[-1,-1]], +-1 -> +-[[1,1],[1,-1]].
  const std::size_t m = q + 1, n = 2 * m;
  auto s = paley_core(q, 1);
  static const int zero_block[2][2] = {{1, -1}, {-1, -1}};
  static const int unit_block[2][2] = {{1, 1}, {1, -1}};
  std::vector<std::int8_t> e(n * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const int v = s[i * m + j];
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          e[(2 * i + a) * n + 2 * j + b] = static_cast<std::int8_t>(v == 0 ? zero_block[a][b] : v * unit_block[a][b]);
    }
  normalize(n, e);
  return {n, std::move(e), {HadamardProvenance::Kind::paley2, q, {}}};
}

HadamardMatrix hadamard_kron(const std::vector<HadamardMatrix>& hs, const Limits& limits) {
  if (hs.empty()) throw InvalidArgument("hadamard_kron needs at least one matrix");
  if (hs.size() == 1) return hs[0];
  std::size_t n = 1;
  HadamardProvenance prov{HadamardProvenance::Kind::kron, 0, {}};
  for (const auto& h : hs) {
    if (n > limits.max_order / h.order()) throw SizeCapExceeded("hadamard_kron order");
    n *= h.order();
    prov.children.push_back(h.provenance());
  }
  check_dense_size(n, n, limits);
  std::vector<std::int8_t> e(1, 1);
  std::size_t cur = 1;
  for (const auto& h : hs) {
    const std::size_t d = h.order(), next = cur * d;
    std::vector<std::int8_t> out(next * next);
    for (std::size_t i = 0; i < cur; ++i)
      for (std::size_t j = 0; j < cur; ++j)
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b)
            out[(i * d + a) * next + j * d + b] = static_cast<std::int8_t>(e[i * cur + j] * h(a, b));
    e = std::move(out);
    cur = next;
  }
  return {n, std::move(e), std::move(prov)};
}

}  // namespace rigidity

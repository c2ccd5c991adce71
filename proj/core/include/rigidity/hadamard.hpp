#pragma once

// Hadamard matrices: Walsh (Sylvester), Paley I and II, Kronecker closures.
// Entries are stored as +-1 integers and converted to a field on demand.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rigidity/field.hpp"
#include "rigidity/matrix.hpp"

namespace rigidity {

struct HadamardProvenance {
  enum class Kind { walsh, paley1, paley2, kron };
  Kind kind = Kind::walsh;
  std::size_t param = 0;  // k for walsh, q for paley
  std::vector<HadamardProvenance> children;

  std::string to_string() const;
};

class HadamardMatrix {
 public:
  HadamardMatrix(std::size_t order, std::vector<std::int8_t> entries, HadamardProvenance provenance);

  std::size_t order() const { return n_; }
  int operator()(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }
  const HadamardProvenance& provenance() const { return prov_; }

  /// H * H^T == n * I over the integers.
  bool is_orthogonal() const;

  /// Over F_p this needs p > 2.
  template <ExactField F>
  DenseMatrix<F> to_field(const F& field) const {
    if (field.is_zero(field.add(field.one(), field.one())))
      throw InvalidArgument("Hadamard matrices need characteristic other than 2");
    DenseMatrix<F> m(field, n_, n_);
    const auto one = field.one(), minus = field.neg(field.one());
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m(i, j) = e_[i * n_ + j] > 0 ? one : minus;
    return m;
  }

 private:
  std::size_t n_;
  std::vector<std::int8_t> e_;
  HadamardProvenance prov_;
};

/// Largest prime accepted by the Paley constructions.
inline constexpr std::size_t kPaleyPrimeLimit = 10000;

HadamardMatrix walsh(std::size_t k, const Limits& limits = default_limits());
/// Order q + 1; q prime, q = 3 mod 4.
HadamardMatrix paley1(std::size_t q);
/// Order 2(q + 1); q prime, q = 1 mod 4.
HadamardMatrix paley2(std::size_t q);
HadamardMatrix hadamard_kron(const std::vector<HadamardMatrix>& hs, const Limits& limits = default_limits());

}  // namespace rigidity

#pragma once

// Seeded, versioned randomness.  The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; values are reduced with `%` only, so
// results do not depend on the standard library's distributions.

#include <cstdint>
#include <random>
#include <type_traits>

#include "rigidity/matrix.hpp"

namespace rigidity {

class Rng {
 public:
  static constexpr const char* kName = "mt19937_64/v1";
  /// Rational entries are drawn from [-kRationalSpan, kRationalSpan].
  static constexpr std::int64_t kRationalSpan = 3;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

  template <ExactField F>
  typename F::Element element(const F& field) {
    if constexpr (std::is_same_v<F, PrimeField>) {
      return below(field.modulus());
    } else {
      return field.from_int(static_cast<std::int64_t>(below(2 * kRationalSpan + 1)) - kRationalSpan);
    }
  }

  template <ExactField F>
  typename F::Element nonzero_element(const F& field) {
    for (;;) {
      auto e = element(field);
      if (!field.is_zero(e)) return e;
    }
  }

  template <ExactField F>
  DenseMatrix<F> matrix(const F& field, std::size_t rows, std::size_t cols) {
    DenseMatrix<F> m(field, rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = element(field);
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rigidity

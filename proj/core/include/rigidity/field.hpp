#pragma once

// Exact scalar arithmetic over prime fields F_p (p < 2^61) and over Q.
//
// A field is a small value object (`PrimeField`, `RationalField`); elements
// are plain values (`std::uint64_t` residues, `mpq_class` fractions) and all
// arithmetic goes through the field object.  Matrices store raw elements and
// carry their field, so mixed-field mistakes are caught at the matrix level.
// `FieldElement<F>` bundles a value with its field for scalar-level code.

#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include <gmpxx.h>

#include "rigidity/errors.hpp"

namespace rigidity {

__extension__ typedef unsigned __int128 uint128;

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime(std::uint64_t n);

class PrimeField {
 public:
  using Element = std::uint64_t;
  static constexpr std::uint64_t kMaxModulus = (std::uint64_t{1} << 61);

  /// Throws InvalidArgument unless p is a prime below 2^61.
  explicit PrimeField(std::uint64_t p);

  std::uint64_t modulus() const { return p_; }
  std::string name() const { return "Fp " + std::to_string(p_); }

  Element zero() const { return 0; }
  Element one() const { return 1 % p_; }
  Element from_int(std::int64_t v) const;
  Element from_mpz(const mpz_class& v) const;

  bool is_zero(Element a) const { return a == 0; }
  bool equal(Element a, Element b) const { return a == b; }

  Element add(Element a, Element b) const {
    Element s = a + b;  // a, b < 2^61: no overflow
    return s >= p_ ? s - p_ : s;
  }
  Element sub(Element a, Element b) const { return a >= b ? a - b : a + p_ - b; }
  Element neg(Element a) const { return a == 0 ? 0 : p_ - a; }
  Element mul(Element a, Element b) const {
    if (small_) return (a * b) % p_;
    return static_cast<Element>((static_cast<uint128>(a) * b) % p_);
  }
  Element inv(Element a) const;
  Element div(Element a, Element b) const { return mul(a, inv(b)); }

  std::string to_string(Element a) const { return std::to_string(a); }
  Element parse(std::string_view text) const;

  bool operator==(const PrimeField& o) const { return p_ == o.p_; }

 private:
  std::uint64_t p_;
  bool small_;
};

class RationalField {
 public:
  using Element = mpq_class;

  std::string name() const { return "Q"; }

  Element zero() const { return Element(0); }
  Element one() const { return Element(1); }
  Element from_int(std::int64_t v) const { return Element(mpz_class(static_cast<long>(v))); }
  Element from_mpz(const mpz_class& v) const { return Element(v); }

  bool is_zero(const Element& a) const { return sgn(a) == 0; }
  bool equal(const Element& a, const Element& b) const { return a == b; }

  Element add(const Element& a, const Element& b) const { return a + b; }
  Element sub(const Element& a, const Element& b) const { return a - b; }
  Element neg(const Element& a) const { return -a; }
  Element mul(const Element& a, const Element& b) const { return a * b; }
  Element inv(const Element& a) const {
    if (sgn(a) == 0) throw DivisionByZero();
    return 1 / a;
  }
  Element div(const Element& a, const Element& b) const {
    if (sgn(b) == 0) throw DivisionByZero();
    return a / b;
  }

  std::string to_string(const Element& a) const { return a.get_str(); }
  Element parse(std::string_view text) const;

  bool operator==(const RationalField&) const { return true; }
};

template <class F>
concept ExactField = requires(const F f, const typename F::Element a) {
  { f.add(a, a) } -> std::convertible_to<typename F::Element>;
  { f.mul(a, a) } -> std::convertible_to<typename F::Element>;
  { f.inv(a) } -> std::convertible_to<typename F::Element>;
  { f.is_zero(a) } -> std::convertible_to<bool>;
  { f.name() } -> std::convertible_to<std::string>;
};

/// Runtime description of a field, as written in file headers ("Fp 5", "Q").
struct FieldSpec {
  enum class Kind { prime, rational };
  Kind kind = Kind::rational;
  std::uint64_t modulus = 0;

  static FieldSpec prime(std::uint64_t p) { return {Kind::prime, p}; }
  static FieldSpec rationals() { return {Kind::rational, 0}; }

  /// Parses "Fp <p>" or "Q".  Validates primality.
  static FieldSpec parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const FieldSpec&) const = default;
};

inline FieldSpec spec_of(const PrimeField& f) { return FieldSpec::prime(f.modulus()); }
inline FieldSpec spec_of(const RationalField&) { return FieldSpec::rationals(); }

/// Calls `fn(field)` with the concrete field object named by `spec`.
template <class Fn>
decltype(auto) with_field(const FieldSpec& spec, Fn&& fn) {
  if (spec.kind == FieldSpec::Kind::prime) return std::forward<Fn>(fn)(PrimeField(spec.modulus));
  return std::forward<Fn>(fn)(RationalField{});
}

/// A value tagged with its field.  Arithmetic between elements of different
/// fields throws FieldMismatch.
template <ExactField F>
class FieldElement {
 public:
  using Element = typename F::Element;

  FieldElement(F field, Element value) : field_(std::move(field)), value_(std::move(value)) {}
  static FieldElement of(const F& field, std::int64_t v) { return {field, field.from_int(v)}; }

  const F& field() const { return field_; }
  const Element& value() const { return value_; }
  bool is_zero() const { return field_.is_zero(value_); }

  FieldElement operator+(const FieldElement& o) const { return {check(o), field_.add(value_, o.value_)}; }
  FieldElement operator-(const FieldElement& o) const { return {check(o), field_.sub(value_, o.value_)}; }
  FieldElement operator*(const FieldElement& o) const { return {check(o), field_.mul(value_, o.value_)}; }
  FieldElement operator/(const FieldElement& o) const { return {check(o), field_.div(value_, o.value_)}; }
  FieldElement operator-() const { return {field_, field_.neg(value_)}; }
  FieldElement inverse() const { return {field_, field_.inv(value_)}; }

  bool operator==(const FieldElement& o) const {
    return field_ == o.field_ && field_.equal(value_, o.value_);
  }

  std::string to_string() const { return field_.to_string(value_); }

 private:
  const F& check(const FieldElement& o) const {
    if (!(field_ == o.field_)) throw FieldMismatch(field_.name() + " vs " + o.field_.name());
    return field_;
  }

  F field_;
  Element value_;
};

}  // namespace rigidity

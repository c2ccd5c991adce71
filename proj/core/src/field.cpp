#include "rigidity/field.hpp"

#include <cctype>

namespace rigidity {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<uint128>(a) * b) % m);
}

std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_integer_literal(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

mpz_class parse_integer(std::string_view s) {
  if (!is_integer_literal(s)) throw ParseError("not an integer: '" + std::string(s) + "'");
  if (s[0] == '+') s.remove_prefix(1);
  return mpz_class(std::string(s), 10);
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t small : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % small == 0) return n == small;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This base set is a deterministic witness set for all n < 2^64.
  for (std::uint64_t a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 0 || x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint64_t p) : p_(p), small_(p < (std::uint64_t{1} << 32)) {
  if (p >= kMaxModulus) throw InvalidArgument("modulus must be below 2^61: " + std::to_string(p));
  if (!is_prime(p)) throw InvalidArgument("modulus is not prime: " + std::to_string(p));
}

PrimeField::Element PrimeField::from_int(std::int64_t v) const {
  const auto p = static_cast<std::int64_t>(p_);
  std::int64_t r = v % p;
  if (r < 0) r += p;
  return static_cast<Element>(r);
}

PrimeField::Element PrimeField::from_mpz(const mpz_class& v) const {
  mpz_class r;
  mpz_fdiv_r_ui(r.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(p_));
  return static_cast<Element>(r.get_ui());
}

PrimeField::Element PrimeField::inv(Element a) const {
  if (a % p_ == 0) throw DivisionByZero();
  return powmod(a, p_ - 2, p_);
}

PrimeField::Element PrimeField::parse(std::string_view text) const {
  return from_mpz(parse_integer(trim(text)));
}

RationalField::Element RationalField::parse(std::string_view text) const {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Element(parse_integer(text));
  mpz_class num = parse_integer(trim(text.substr(0, slash)));
  mpz_class den = parse_integer(trim(text.substr(slash + 1)));
  if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
  Element q(num, den);
  q.canonicalize();
  return q;
}

FieldSpec FieldSpec::parse(std::string_view text) {
  text = trim(text);
  if (text == "Q") return rationals();
  if (text.size() > 2 && text.substr(0, 2) == "Fp") {
    auto rest = trim(text.substr(2));
    mpz_class p = parse_integer(rest);
    if (p < 2 || p >= mpz_class(std::to_string(PrimeField::kMaxModulus)))
      throw ParseError("modulus out of range: " + std::string(rest));
    const auto value = static_cast<std::uint64_t>(std::stoull(p.get_str()));
    if (!is_prime(value)) throw ParseError("modulus is not prime: " + std::string(rest));
    return prime(value);
  }
  throw ParseError("unknown field '" + std::string(text) + "' (expected 'Fp <p>' or 'Q')");
}

std::string FieldSpec::to_string() const {
  return kind == Kind::prime ? "Fp " + std::to_string(modulus) : "Q";
}

}  // namespace rigidity

#include "bdc/rational.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace bdc {
namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

bool fits64(__int128 v) {
  return v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max();
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  *this = from_wide(num, den);
}

Rational Rational::from_wide(__int128 num, __int128 den) {
  if (den == 0) throw std::domain_error("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num == 0) den = 1;
  if (!fits64(num) || !fits64(den)) throw std::overflow_error("Rational: 64-bit overflow");
  Rational r;
  r.num_ = static_cast<std::int64_t>(num);
  r.den_ = static_cast<std::int64_t>(den);
  return r;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const { return from_wide(-static_cast<__int128>(num_), den_); }

Rational operator+(const Rational& a, const Rational& b) {
  const __int128 g = gcd128(a.den_, b.den_);
  const __int128 bd = b.den_ / g;
  return Rational::from_wide(static_cast<__int128>(a.num_) * bd + static_cast<__int128>(b.num_) * (a.den_ / g),
                             static_cast<__int128>(a.den_) * bd);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  // Cross-reduce first to keep intermediates small.
  const __int128 g1 = gcd128(a.num_, b.den_);
  const __int128 g2 = gcd128(b.num_, a.den_);
  const __int128 n1 = g1 ? a.num_ / g1 : a.num_;
  const __int128 d2 = g1 ? b.den_ / g1 : b.den_;
  const __int128 n2 = g2 ? b.num_ / g2 : b.num_;
  const __int128 d1 = g2 ? a.den_ / g2 : a.den_;
  return Rational::from_wide(n1 * n2, d1 * d2);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
  return a * Rational::from_wide(b.den_, b.num_);
}

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  __int128 r = 1;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  if (!fits64(r)) throw std::overflow_error("binomial overflow");
  return static_cast<std::int64_t>(r);
}

std::int64_t factorial(int n) {
  __int128 r = 1;
  for (int j = 2; j <= n; ++j) {
    r *= j;
    if (!fits64(r)) throw std::overflow_error("factorial overflow");
  }
  return static_cast<std::int64_t>(r);
}

std::int64_t ipow(std::int64_t base, int exp) {
  __int128 r = 1;
  for (int j = 0; j < exp; ++j) {
    r *= base;
    if (!fits64(r)) throw std::overflow_error("ipow overflow");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace bdc

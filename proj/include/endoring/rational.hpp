#pragma once

// Exact integer/rational helpers shared by every module: q-adic valuations,
// reduction of q-integral rationals modulo q^k, and the "num/den" text form.

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace endoring {

using Int = mpz_class;
using Rat = mpq_class;

using Vec4 = std::array<Rat, 4>;
using IVec4 = std::array<Int, 4>;
/// Row-major 4x4 rational matrix.
using Mat4 = std::array<std::array<Rat, 4>, 4>;
using IMat4 = std::array<std::array<Int, 4>, 4>;

/// Raised when input text cannot be parsed (maps to CLI exit code 2).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an algebraic invariant that must hold does not
/// (maps to CLI exit code 3).
class MathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Rat make_rat(const Int& num, const Int& den = 1) {
  Rat r(num, den);
  r.canonicalize();
  return r;
}

inline bool is_integer(const Rat& x) { return x.get_den() == 1; }

inline Int abs_int(const Int& x) { return x < 0 ? Int(-x) : x; }

inline Int gcd(const Int& a, const Int& b) {
  Int g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

inline Int lcm(const Int& a, const Int& b) {
  Int l;
  mpz_lcm(l.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return l;
}

/// Extended gcd: returns g = gcd(a,b) >= 0 with s*a + t*b = g.
inline Int gcdext(const Int& a, const Int& b, Int& s, Int& t) {
  Int g;
  mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), a.get_mpz_t(),
             b.get_mpz_t());
  return g;
}

inline Int pow_int(const Int& base, unsigned long e) {
  Int r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

inline Int isqrt(const Int& x) {
  if (x < 0) throw std::domain_error("isqrt of negative integer");
  Int r;
  mpz_sqrt(r.get_mpz_t(), x.get_mpz_t());
  return r;
}

inline bool is_square(const Int& x) {
  return x >= 0 && mpz_perfect_square_p(x.get_mpz_t()) != 0;
}

inline bool is_prime(const Int& x) {
  return x >= 2 && mpz_probab_prime_p(x.get_mpz_t(), 40) != 0;
}

/// Floor modulus into [0, m).
inline Int mod(const Int& a, const Int& m) {
  Int r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

inline Int floor_div(const Int& a, const Int& b) {
  Int r;
  mpz_fdiv_q(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

/// Inverse of a modulo m; throws if not invertible.
inline Int inverse_mod(const Int& a, const Int& m) {
  Int r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) {
    throw MathError("element not invertible modulo " + m.get_str());
  }
  return mod(r, m);
}

inline Int powmod(const Int& b, const Int& e, const Int& m) {
  Int r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

constexpr int kInfiniteValuation = std::numeric_limits<int>::max();

/// q-adic valuation of an integer; kInfiniteValuation for zero.
inline int valuation(const Int& x, const Int& q) {
  if (x == 0) return kInfiniteValuation;
  Int t = abs_int(x);
  int v = 0;
  if (q == 2) return static_cast<int>(mpz_scan1(t.get_mpz_t(), 0));
  Int r;
  while (true) {
    mpz_tdiv_qr(t.get_mpz_t(), r.get_mpz_t(), t.get_mpz_t(), q.get_mpz_t());
    if (r != 0) break;
    ++v;
  }
  return v;
}

inline int valuation(const Rat& x, const Int& q) {
  if (x == 0) return kInfiniteValuation;
  return valuation(x.get_num(), q) - valuation(x.get_den(), q);
}

/// Reduces a q-integral rational modulo m = q^k into [0, m).
inline Int reduce_mod(const Rat& x, const Int& m) {
  if (x.get_den() == 1) return mod(x.get_num(), m);
  return mod(x.get_num() * inverse_mod(x.get_den(), m), m);
}

/// Largest divisor of x coprime to q (x != 0), sign dropped.
inline Int prime_to_part(Int x, const Int& q) {
  x = abs_int(x);
  while (x != 0 && mod(x, q) == 0) x /= q;
  return x;
}

inline std::string to_string(const Rat& x) {
  if (x.get_den() == 1) return x.get_num().get_str();
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

inline Int parse_int(std::string_view s) {
  std::string str(s);
  while (!str.empty() && str.front() == ' ') str.erase(str.begin());
  while (!str.empty() && str.back() == ' ') str.pop_back();
  if (!str.empty() && str.front() == '+') str.erase(str.begin());
  Int out;
  if (str.empty() || out.set_str(str, 10) != 0) {
    throw ParseError("not an integer: '" + std::string(s) + "'");
  }
  return out;
}

/// Parses "num", "num/den" (den > 0 after normalisation).
inline Rat parse_rat(std::string_view s) {
  auto slash = s.find('/');
  if (slash == std::string_view::npos) return Rat(parse_int(s));
  Int num = parse_int(s.substr(0, slash));
  Int den = parse_int(s.substr(slash + 1));
  if (den == 0) throw ParseError("zero denominator: '" + std::string(s) + "'");
  return make_rat(num, den);
}

/// Trial-division factorisation; fine for the small integers that parametrise
/// quaternion algebras. Returns (prime, exponent) pairs in increasing order.
inline std::vector<std::pair<Int, int>> factor_small(Int n) {
  std::vector<std::pair<Int, int>> out;
  n = abs_int(n);
  if (n <= 1) return out;
  for (Int d = 2; d * d <= n; ++d) {
    int e = 0;
    while (mod(n, d) == 0) {
      n /= d;
      ++e;
    }
    if (e > 0) out.emplace_back(d, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

inline Vec4 operator+(const Vec4& x, const Vec4& y) {
  return {x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]};
}
inline Vec4 operator-(const Vec4& x, const Vec4& y) {
  return {x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]};
}
inline Vec4 operator*(const Rat& c, const Vec4& x) {
  return {c * x[0], c * x[1], c * x[2], c * x[3]};
}

inline Vec4 to_rat(const IVec4& v) {
  return {Rat(v[0]), Rat(v[1]), Rat(v[2]), Rat(v[3])};
}

}  // namespace endoring

#pragma once

// Division test: the oracle interface answering "is beta/n integral in End(E)",
// a hidden-order reference implementation, and the number-theoretic parameter
// planner of the isogeny-based division algorithm.

#include <endoring/order.hpp>

#include <cmath>
#include <functional>

namespace endoring {

/// beta was not in the hidden order (maps to CLI exit code 4).
class OraclePreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivisionOracle {
 public:
  virtual ~DivisionOracle() = default;
  /// True iff beta/n lies in End(E); beta itself must lie in End(E).
  virtual bool is_divisible(const QuatElement& beta, const Int& n) = 0;
  virtual long calls() const = 0;
};

/// Answers by exact membership in a hidden maximal order.
class HiddenOrderOracle : public DivisionOracle {
 public:
  using Hook = std::function<void(const QuatElement&, const Int&, bool, long)>;

  explicit HiddenOrderOracle(Order hidden, Hook hook = {})
      : hidden_(std::move(hidden)), hook_(std::move(hook)) {}

  bool is_divisible(const QuatElement& beta, const Int& n) override {
    if (n <= 0) throw OraclePreconditionError("divisor must be positive");
    if (!hidden_.contains(beta)) {
      throw OraclePreconditionError("query element " + beta.str() + " is not in End(E)");
    }
    ++calls_;
    bool ans = hidden_.contains(Rat(1, 1) / Rat(n) * beta);
    if (hook_) hook_(beta, n, ans, calls_);
    return ans;
  }

  long calls() const override { return calls_; }
  const Order& hidden() const { return hidden_; }

 private:
  Order hidden_;
  Hook hook_;
  long calls_ = 0;
};

/// N = deg / n^2, or nullopt when n^2 does not divide deg.
inline std::optional<Int> degree_precheck(const Int& deg_beta, const Int& n) {
  if (deg_beta < 1 || n < 1) throw MathError("degree and divisor must be positive");
  Int n2 = n * n;
  if (mod(deg_beta, n2) != 0) return std::nullopt;
  return deg_beta / n2;
}

struct PowersmoothOffset {
  Int a;
  Int bound;  // largest prime used
  Int n_plus_a;
  std::vector<Int> primes;
};

/// N + a as a product of the smallest primes coprime to pNn exceeding N.
inline PowersmoothOffset powersmooth_offset(const Int& big_n, const Int& p, const Int& n) {
  if (big_n < 1) throw MathError("N must be positive");
  Int avoid = p * big_n * n;
  PowersmoothOffset out;
  Int prod = 1;
  Int ell = 2;
  while (prod <= big_n) {
    if (mod(avoid, ell) != 0) {
      prod *= ell;
      out.primes.push_back(ell);
      out.bound = ell;
    }
    mpz_nextprime(ell.get_mpz_t(), ell.get_mpz_t());
  }
  out.n_plus_a = prod;
  out.a = prod - big_n;
  return out;
}

/// a = a1^2 + a2^2 + a3^2 + a4^2 with a1 >= a2 >= a3 >= a4 >= 0; the search
/// tries the largest a1 first, then the largest a2, and so on.
inline std::array<Int, 4> four_squares(const Int& a) {
  if (a < 0) throw MathError("four_squares of a negative integer");
  for (Int a1 = isqrt(a); a1 >= 0; --a1) {
    Int r1 = a - a1 * a1;
    Int top2 = isqrt(r1);
    if (top2 > a1) top2 = a1;
    for (Int a2 = top2; a2 >= 0; --a2) {
      Int r2 = r1 - a2 * a2;
      Int top3 = isqrt(r2);
      if (top3 > a2) top3 = a2;
      for (Int a3 = top3; a3 >= 0; --a3) {
        Int r3 = r2 - a3 * a3;
        if (r3 > a3 * a3) break;
        if (is_square(r3)) return {a1, a2, a3, isqrt(r3)};
      }
    }
  }
  throw MathError("four_squares failed");
}

/// True iff m > sqrt(x) + sqrt(y), decided exactly.
inline bool exceeds_sqrt_sum(const Int& m, const Int& x, const Int& y) {
  if (m <= 0) return false;
  if (m * m <= x) return false;
  // m - sqrt(x) > sqrt(y)  <=>  m^2 + x - y > 2 m sqrt(x)
  Int lhs = m * m + x - y;
  if (lhs <= 0) return false;
  return lhs * lhs > 4 * m * m * x;
}

/// Smallest primorial exceeding `bound`.
inline Int primorial_above(const Rat& bound) {
  Int m = 1, ell = 2;
  while (Rat(m) <= bound) {
    m *= ell;
    mpz_nextprime(ell.get_mpz_t(), ell.get_mpz_t());
  }
  return m;
}

/// Smallest primorial M with M > sqrt(deg) + sqrt(n^2 (N + a)).
inline Int choose_M(const Int& deg_beta, const Int& n, const Int& n_plus_a) {
  Int y = n * n * n_plus_a;
  Int m = 1, ell = 2;
  while (!exceeds_sqrt_sum(m, deg_beta, y)) {
    m *= ell;
    mpz_nextprime(ell.get_mpz_t(), ell.get_mpz_t());
  }
  return m;
}

using IntMatrix = std::vector<std::vector<Int>>;

/// Every column sums to N with entries in [0, N].
inline bool degree_bound_check(const IntMatrix& degrees, const Int& big_n) {
  if (degrees.empty()) return false;
  std::size_t cols = degrees[0].size();
  for (const auto& row : degrees)
    if (row.size() != cols) return false;
  for (std::size_t c = 0; c < cols; ++c) {
    Int s = 0;
    for (const auto& row : degrees) {
      if (row[c] < 0 || row[c] > big_n) return false;
      s += row[c];
    }
    if (s != big_n) return false;
  }
  return true;
}

/// Left-multiplication matrix of a1 + a2 i + a3 j + a4 k in the Hamilton
/// quaternions.
inline IntMatrix alpha_matrix(const std::array<Int, 4>& s) {
  const Int &a1 = s[0], &a2 = s[1], &a3 = s[2], &a4 = s[3];
  return {{a1, -a2, -a3, -a4}, {a2, a1, a4, -a3}, {a3, -a4, a1, a2}, {a4, a3, -a2, a1}};
}

struct KaniPlan {
  Int deg_beta, n, p;
  Int big_n;
  Int a;
  Int n_plus_a;
  std::array<Int, 4> squares;
  Int bound;
  Int m;
  IntMatrix alpha;
};

/// Empirical constant C in B <= C * max(1, ln(N^2 n)).
constexpr double kPowersmoothConstant = 6.0;

inline double powersmooth_log_bound(const Int& big_n, const Int& n) {
  Int x = big_n * big_n * n;
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
  double ln = std::log(mant) + static_cast<double>(exp) * std::log(2.0);
  return std::max(1.0, ln);
}

/// Parameters for testing divisibility of beta (degree deg_beta) by n, or
/// nullopt when n^2 does not divide deg_beta.
inline std::optional<KaniPlan> plan_division(const Int& deg_beta, const Int& n, const Int& p) {
  auto big_n = degree_precheck(deg_beta, n);
  if (!big_n) return std::nullopt;
  KaniPlan k;
  k.deg_beta = deg_beta;
  k.n = n;
  k.p = p;
  k.big_n = *big_n;
  PowersmoothOffset off = powersmooth_offset(*big_n, p, n);
  k.a = off.a;
  k.n_plus_a = off.n_plus_a;
  k.bound = off.bound;
  k.squares = four_squares(off.a);
  k.m = choose_M(deg_beta, n, off.n_plus_a);
  k.alpha = alpha_matrix(k.squares);
  return k;
}

/// Checks every invariant of a plan; returns the name of the first violated
/// one, or an empty string.
inline std::string plan_violation(const KaniPlan& k) {
  const auto& s = k.squares;
  if (s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3] != k.a) return "four squares";
  if (k.big_n + k.a != k.n_plus_a || k.a < 1) return "offset";
  if (gcd(k.n_plus_a, k.p * k.big_n * k.n) != 1) return "gcd(N+a, pNn)";
  Int rest = k.n_plus_a;
  for (Int ell = 2; ell <= k.bound; mpz_nextprime(ell.get_mpz_t(), ell.get_mpz_t())) {
    if (mod(rest, ell) == 0) {
      rest /= ell;
      if (mod(rest, ell) == 0) return "powersmooth N+a";
    }
  }
  if (rest != 1) return "powersmooth N+a";
  if (!exceeds_sqrt_sum(k.m, k.deg_beta, k.n * k.n * k.n_plus_a)) return "M bound";
  Int mm = k.m;
  for (Int ell = 2; mm > 1; mpz_nextprime(ell.get_mpz_t(), ell.get_mpz_t())) {
    if (mod(mm, ell) == 0) {
      mm /= ell;
      if (mod(mm, ell) == 0) return "M squarefree";
    }
  }
  // alpha^T alpha = a Id.
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Int d = 0;
      for (int r = 0; r < 4; ++r) d += k.alpha[r][i] * k.alpha[r][j];
      if (d != (i == j ? k.a : Int(0))) return "alpha orthogonality";
    }
  IntMatrix sq(4, std::vector<Int>(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) sq[i][j] = k.alpha[i][j] * k.alpha[i][j];
  if (!degree_bound_check(sq, k.a)) return "alpha degrees";
  return "";
}

}  // namespace endoring

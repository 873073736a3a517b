#pragma once

// Rational quaternion algebras B = (a, b | Q) with basis 1, i, j, ij.

#include <endoring/rational.hpp>

#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>

namespace endoring {

/// Local Hilbert symbol (a, b)_v over Q_v. `place` is a prime, or
/// std::nullopt for the real place.
inline int hilbert_symbol(const Rat& a, const Rat& b,
                          const std::optional<Int>& place) {
  if (a == 0 || b == 0) throw std::domain_error("hilbert symbol of zero");
  if (!place) return (a < 0 && b < 0) ? -1 : 1;
  const Int& p = *place;
  // Square classes: multiply by den^2 to reach integers.
  Int x = a.get_num() * a.get_den();
  Int y = b.get_num() * b.get_den();
  int alpha = valuation(x, p), beta = valuation(y, p);
  Int pa = pow_int(p, alpha), pb = pow_int(p, beta);
  Int u = x / pa, v = y / pb;
  if (p == 2) {
    auto eps = [](const Int& t) { return mod((t - 1) / 2, Int(2)) == 0 ? 0 : 1; };
    auto omega = [](const Int& t) {
      return mod((t * t - 1) / 8, Int(2)) == 0 ? 0 : 1;
    };
    int e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
    return (e % 2 == 0) ? 1 : -1;
  }
  auto legendre = [&p](const Int& t) {
    return mpz_legendre(t.get_mpz_t(), p.get_mpz_t());
  };
  int sign = 1;
  Int eps_p = (p - 1) / 2;
  if ((alpha * beta) % 2 == 1 && mod(eps_p, Int(2)) == 1) sign = -sign;
  if (beta % 2 == 1) sign *= legendre(u);
  if (alpha % 2 == 1) sign *= legendre(v);
  return sign;
}

/// The algebra (a, b | Q) which must be ramified exactly at {p, infinity}.
class QuaternionAlgebra {
 public:
  /// Validates the ramification condition and returns a shared handle.
  static std::shared_ptr<const QuaternionAlgebra> create(const Rat& a,
                                                         const Rat& b,
                                                         const Int& p) {
    if (a == 0 || b == 0) throw MathError("quaternion algebra needs a, b != 0");
    if (!is_prime(p)) throw MathError("characteristic " + p.get_str() + " is not prime");
    if (hilbert_symbol(a, b, std::nullopt) != -1) {
      throw MathError("algebra is split at infinity");
    }
    if (hilbert_symbol(a, b, p) != -1) {
      throw MathError("algebra is not ramified at p = " + p.get_str());
    }
    Int bad = 2 * a.get_num() * a.get_den() * b.get_num() * b.get_den();
    for (const auto& [ell, e] : factor_small(bad)) {
      if (ell == p) continue;
      if (hilbert_symbol(a, b, ell) != 1) {
        throw MathError("algebra ramifies at extra prime " + ell.get_str());
      }
    }
    return std::shared_ptr<const QuaternionAlgebra>(new QuaternionAlgebra(a, b, p));
  }

  /// B_{p,inf} as (-1, -p) for p = 3 mod 4.
  static std::shared_ptr<const QuaternionAlgebra> standard(const Int& p) {
    if (mod(p, Int(4)) != 3) {
      throw MathError("standard presentation needs p = 3 mod 4; pass (a, b) explicitly");
    }
    return create(Rat(-1), Rat(-p), p);
  }

  const Rat& a() const { return a_; }
  const Rat& b() const { return b_; }
  const Int& p() const { return p_; }

  bool operator==(const QuaternionAlgebra& o) const {
    return a_ == o.a_ && b_ == o.b_ && p_ == o.p_;
  }

  /// Product in coordinates over 1, i, j, ij: i^2 = a, j^2 = b, ji = -ij.
  Vec4 mul(const Vec4& x, const Vec4& y) const {
    const Rat ab = a_ * b_;
    return {x[0] * y[0] + a_ * x[1] * y[1] + b_ * x[2] * y[2] - ab * x[3] * y[3],
            x[0] * y[1] + x[1] * y[0] - b_ * x[2] * y[3] + b_ * x[3] * y[2],
            x[0] * y[2] + x[2] * y[0] + a_ * x[1] * y[3] - a_ * x[3] * y[1],
            x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1]};
  }

  static Vec4 conj(const Vec4& x) { return {x[0], -x[1], -x[2], -x[3]}; }
  static Rat trd(const Vec4& x) { return 2 * x[0]; }
  Rat nrd(const Vec4& x) const {
    return x[0] * x[0] - a_ * x[1] * x[1] - b_ * x[2] * x[2] + a_ * b_ * x[3] * x[3];
  }
  /// trd(x * y) without forming the product.
  Rat trd_mul(const Vec4& x, const Vec4& y) const {
    return 2 * (x[0] * y[0] + a_ * x[1] * y[1] + b_ * x[2] * y[2] -
                a_ * b_ * x[3] * y[3]);
  }
  /// Inverse of a nonzero element.
  Vec4 inverse(const Vec4& x) const {
    Rat n = nrd(x);
    if (n == 0) throw MathError("inverse of zero quaternion");
    Rat s = 1 / n;
    return s * conj(x);
  }

 private:
  QuaternionAlgebra(Rat a, Rat b, Int p) : a_(std::move(a)), b_(std::move(b)), p_(std::move(p)) {}
  Rat a_, b_;
  Int p_;
};

using AlgebraPtr = std::shared_ptr<const QuaternionAlgebra>;

inline void require_same(const AlgebraPtr& x, const AlgebraPtr& y) {
  if (x != y && !(*x == *y)) throw MathError("quaternion algebras differ");
}

/// An element x0 + x1 i + x2 j + x3 ij of a QuaternionAlgebra.
class QuatElement {
 public:
  QuatElement(AlgebraPtr alg, Vec4 coeffs) : alg_(std::move(alg)), c_(std::move(coeffs)) {}
  static QuatElement scalar(AlgebraPtr alg, const Rat& s) {
    return QuatElement(std::move(alg), Vec4{s, 0, 0, 0});
  }

  const AlgebraPtr& algebra() const { return alg_; }
  const Vec4& coeffs() const { return c_; }
  const Rat& operator[](std::size_t k) const { return c_[k]; }

  QuatElement conj() const { return {alg_, QuaternionAlgebra::conj(c_)}; }
  Rat trd() const { return QuaternionAlgebra::trd(c_); }
  Rat nrd() const { return alg_->nrd(c_); }
  QuatElement inverse() const { return {alg_, alg_->inverse(c_)}; }

  friend QuatElement operator*(const QuatElement& x, const QuatElement& y) {
    require_same(x.alg_, y.alg_);
    return {x.alg_, x.alg_->mul(x.c_, y.c_)};
  }
  friend QuatElement operator+(const QuatElement& x, const QuatElement& y) {
    require_same(x.alg_, y.alg_);
    return {x.alg_, x.c_ + y.c_};
  }
  friend QuatElement operator-(const QuatElement& x, const QuatElement& y) {
    require_same(x.alg_, y.alg_);
    return {x.alg_, x.c_ - y.c_};
  }
  friend QuatElement operator*(const Rat& s, const QuatElement& x) {
    return {x.alg_, s * x.c_};
  }
  bool operator==(const QuatElement& o) const { return c_ == o.c_ && *alg_ == *o.alg_; }

  std::string str() const {
    static const char* names[4] = {"", "i", "j", "ij"};
    std::ostringstream os;
    bool first = true;
    for (int k = 0; k < 4; ++k) {
      if (c_[k] == 0) continue;
      Rat c = c_[k];
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << "-";
      if (c < 0) c = -c;
      if (k == 0 || c != 1) os << to_string(c);
      os << names[k];
      first = false;
    }
    if (first) os << "0";
    return os.str();
  }

 private:
  AlgebraPtr alg_;
  Vec4 c_;
};

inline std::ostream& operator<<(std::ostream& os, const QuatElement& x) { return os << x.str(); }

/// Trace-pairing Gram matrix: entry (k, l) = trd(b_k b_l).
inline Mat4 gram(const QuaternionAlgebra& alg, std::span<const Vec4, 4> basis) {
  Mat4 g;
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) g[k][l] = alg.trd_mul(basis[k], basis[l]);
  return g;
}

inline Mat4 gram(std::span<const QuatElement, 4> basis) {
  for (const auto& b : basis) require_same(b.algebra(), basis[0].algebra());
  std::array<Vec4, 4> v{basis[0].coeffs(), basis[1].coeffs(), basis[2].coeffs(),
                        basis[3].coeffs()};
  return gram(*basis[0].algebra(), v);
}

}  // namespace endoring

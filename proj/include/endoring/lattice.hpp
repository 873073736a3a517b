#pragma once

// Full-rank Z-lattices in Q^4 kept in a canonical Hermite normal form.

#include <endoring/rational.hpp>

#include <optional>
#include <span>

namespace endoring {

/// Inverse of a nonsingular rational 4x4 matrix (Gauss-Jordan).
inline Mat4 inverse(const Mat4& m) {
  Mat4 a = m;
  Mat4 inv{};
  for (int i = 0; i < 4; ++i) inv[i][i] = 1;
  for (int col = 0; col < 4; ++col) {
    int piv = -1;
    for (int r = col; r < 4; ++r)
      if (a[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) throw MathError("singular matrix");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    Rat s = 1 / a[col][col];
    for (int k = 0; k < 4; ++k) {
      a[col][k] *= s;
      inv[col][k] *= s;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rat f = a[r][col];
      for (int k = 0; k < 4; ++k) {
        a[r][k] -= f * a[col][k];
        inv[r][k] -= f * inv[col][k];
      }
    }
  }
  return inv;
}

inline Mat4 transpose(const Mat4& m) {
  Mat4 t;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t[i][j] = m[j][i];
  return t;
}

inline Mat4 operator*(const Mat4& x, const Mat4& y) {
  Mat4 z;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Rat s = 0;
      for (int k = 0; k < 4; ++k) s += x[i][k] * y[k][j];
      z[i][j] = s;
    }
  return z;
}

inline Vec4 operator*(const Mat4& m, const Vec4& v) {
  Vec4 out;
  for (int i = 0; i < 4; ++i) out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3];
  return out;
}

inline Rat det(const Mat4& m) {
  Mat4 a = m;
  Rat d = 1;
  for (int col = 0; col < 4; ++col) {
    int piv = -1;
    for (int r = col; r < 4; ++r)
      if (a[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) return 0;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      d = -d;
    }
    d *= a[col][col];
    for (int r = col + 1; r < 4; ++r) {
      if (a[r][col] == 0) continue;
      Rat f = a[r][col] / a[col][col];
      for (int k = col; k < 4; ++k) a[r][k] -= f * a[col][k];
    }
  }
  return d;
}

namespace detail {

// Incremental lower-triangular HNF over Z. slot[i], when present, has zeros in
// coordinates < i and a positive entry at i.
class HnfBuilder {
 public:
  void insert(IVec4 v) {
    for (int i = 0; i < 4; ++i) {
      if (v[i] == 0) continue;
      if (!slot_[i]) {
        if (v[i] < 0)
          for (auto& x : v) x = -x;
        slot_[i] = std::move(v);
        reduce();
        return;
      }
      IVec4& s = *slot_[i];
      Int u, w;
      Int g = gcdext(s[i], v[i], u, w);
      Int sg = s[i] / g, vg = v[i] / g;
      IVec4 ns, nv;
      for (int k = 0; k < 4; ++k) {
        ns[k] = u * s[k] + w * v[k];
        nv[k] = sg * v[k] - vg * s[k];
      }
      s = std::move(ns);
      v = std::move(nv);
    }
    reduce();
  }

  bool full() const {
    for (const auto& s : slot_)
      if (!s) return false;
    return true;
  }

  /// Row-major matrix whose column j is slot j.
  IMat4 matrix() const {
    IMat4 m;
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) m[i][j] = (*slot_[j])[i];
    return m;
  }

 private:
  void reduce() {
    for (int i = 0; i < 4; ++i) {
      if (!slot_[i]) continue;
      IVec4& p = *slot_[i];
      if (p[i] < 0)
        for (auto& x : p) x = -x;
      for (int j = 0; j < i; ++j) {
        if (!slot_[j]) continue;
        IVec4& c = *slot_[j];
        Int f = floor_div(c[i], p[i]);
        if (f == 0) continue;
        for (int k = i; k < 4; ++k) c[k] -= f * p[k];
      }
    }
  }

  std::array<std::optional<IVec4>, 4> slot_;
};

}  // namespace detail

/// A full-rank lattice in Q^4. Columns of basis() are the basis vectors.
class Lattice4 {
 public:
  /// Z-span of gens; throws MathError if the span has rank < 4.
  static Lattice4 from_generators(std::span<const Vec4> gens) {
    Int d = 1;
    for (const auto& g : gens)
      for (const auto& x : g) d = lcm(d, x.get_den());
    detail::HnfBuilder h;
    for (const auto& g : gens) {
      IVec4 v;
      for (int k = 0; k < 4; ++k) v[k] = g[k].get_num() * (d / g[k].get_den());
      h.insert(std::move(v));
    }
    if (!h.full()) throw MathError("degenerate lattice: generators have rank < 4");
    IMat4 m = h.matrix();
    Lattice4 out;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out.b_[i][j] = make_rat(m[i][j], d);
    return out;
  }

  static Lattice4 from_generators(std::initializer_list<Vec4> gens) {
    return from_generators(std::span<const Vec4>(gens.begin(), gens.size()));
  }

  /// Lattice spanned by the columns of m.
  static Lattice4 from_columns(const Mat4& m) {
    std::array<Vec4, 4> cols;
    for (int j = 0; j < 4; ++j) cols[j] = column_of(m, j);
    return from_generators(cols);
  }

  static Lattice4 standard() {
    Mat4 id{};
    for (int i = 0; i < 4; ++i) id[i][i] = 1;
    return from_columns(id);
  }

  const Mat4& basis() const { return b_; }
  Vec4 column(int j) const { return column_of(b_, j); }
  std::array<Vec4, 4> columns() const { return {column(0), column(1), column(2), column(3)}; }

  bool operator==(const Lattice4& o) const { return b_ == o.b_; }
  bool operator!=(const Lattice4& o) const { return !(*this == o); }

  /// Volume: product of the HNF pivots.
  Rat determinant() const { return b_[0][0] * b_[1][1] * b_[2][2] * b_[3][3]; }

  /// Coordinates x with basis * x = v.
  Vec4 coordinates(const Vec4& v) const {
    Vec4 x;
    for (int i = 0; i < 4; ++i) {
      Rat s = v[i];
      for (int j = 0; j < i; ++j) s -= b_[i][j] * x[j];
      x[i] = s / b_[i][i];
    }
    return x;
  }

  bool contains(const Vec4& v) const {
    Vec4 x = coordinates(v);
    for (const auto& c : x)
      if (!is_integer(c)) return false;
    return true;
  }

  Lattice4 scaled(const Rat& s) const {
    if (s == 0) throw MathError("scaling a lattice by zero");
    std::array<Vec4, 4> cols = columns();
    for (auto& c : cols) c = s * c;
    return from_generators(cols);
  }

 private:
  static Vec4 column_of(const Mat4& m, int j) { return {m[0][j], m[1][j], m[2][j], m[3][j]}; }
  Mat4 b_;
};

inline Lattice4 sum(const Lattice4& x, const Lattice4& y) {
  std::array<Vec4, 8> gens;
  for (int j = 0; j < 4; ++j) {
    gens[j] = x.column(j);
    gens[4 + j] = y.column(j);
  }
  return Lattice4::from_generators(gens);
}

/// Dual lattice {y : <x, y> in Z for all x in L}, basis (B^T)^{-1}.
inline Lattice4 dual(const Lattice4& l) {
  return Lattice4::from_columns(inverse(transpose(l.basis())));
}

inline Lattice4 intersect(const Lattice4& x, const Lattice4& y) {
  return dual(sum(dual(x), dual(y)));
}

inline bool is_sublattice(const Lattice4& sub, const Lattice4& sup) {
  for (int j = 0; j < 4; ++j)
    if (!sup.contains(sub.column(j))) return false;
  return true;
}

/// |det(sub) / det(sup)|; the group index when sub is contained in sup.
inline Rat index(const Lattice4& sup, const Lattice4& sub) {
  Rat r = sub.determinant() / sup.determinant();
  return r < 0 ? Rat(-r) : r;
}

/// True iff x (x) Z_q = y (x) Z_q.
inline bool equal_at(const Lattice4& x, const Lattice4& y, const Int& q) {
  Lattice4 s = sum(x, y);
  return valuation(index(s, x), q) == 0 && valuation(index(s, y), q) == 0;
}

}  // namespace endoring

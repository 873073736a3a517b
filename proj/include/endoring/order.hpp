#pragma once

// Quaternion orders: verification, discriminants, the ternary-form
// Gorenstein test, radical idealizers, Bass test and q-maximal enlargement.

#include <endoring/lattice.hpp>
#include <endoring/quat.hpp>

#include <functional>
#include <vector>

namespace endoring {

namespace detail {

// Integer matrix E with E*c = e_0 for primitive c; returns E^{-1}, whose
// first column is c.
inline IMat4 unimodular_with_first_column(const IVec4& c) {
  IVec4 w = c;
  Mat4 e{};
  for (int i = 0; i < 4; ++i) e[i][i] = 1;
  for (int k = 1; k < 4; ++k) {
    if (w[k] == 0) continue;
    Int s, t;
    Int g = gcdext(w[0], w[k], s, t);
    Int a = w[0] / g, b = w[k] / g;
    // [[s, t], [-b, a]] has determinant 1 and maps (w0, wk) to (g, 0).
    for (int j = 0; j < 4; ++j) {
      Rat r0 = s * e[0][j] + t * e[k][j];
      Rat rk = -b * e[0][j] + a * e[k][j];
      e[0][j] = r0;
      e[k][j] = rk;
    }
    w[0] = g;
    w[k] = 0;
  }
  if (abs_int(w[0]) != 1) throw MathError("coordinate vector is not primitive");
  if (w[0] < 0)
    for (int j = 0; j < 4; ++j) e[0][j] = -e[0][j];
  Mat4 inv = inverse(e);
  IMat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out[i][j] = inv[i][j].get_num();
  return out;
}

// Solutions z in Z^4 of rows * z = 0 mod q, as a lattice containing qZ^4.
inline std::vector<IVec4> kernel_mod(std::vector<IVec4> rows, const Int& q) {
  for (auto& r : rows)
    for (auto& x : r) x = mod(x, q);
  std::array<int, 4> pivot_col{-1, -1, -1, -1};
  int rank = 0;
  std::vector<int> piv_of_row;
  for (int col = 0; col < 4 && rank < static_cast<int>(rows.size()); ++col) {
    int piv = -1;
    for (int r = rank; r < static_cast<int>(rows.size()); ++r)
      if (rows[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(rows[piv], rows[rank]);
    Int inv = inverse_mod(rows[rank][col], q);
    for (auto& x : rows[rank]) x = mod(x * inv, q);
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
      if (r == rank || rows[r][col] == 0) continue;
      Int f = rows[r][col];
      for (int k = 0; k < 4; ++k) rows[r][k] = mod(rows[r][k] - f * rows[rank][k], q);
    }
    pivot_col[col] = rank;
    piv_of_row.push_back(col);
    ++rank;
  }
  std::vector<IVec4> out;
  for (int free = 0; free < 4; ++free) {
    if (pivot_col[free] >= 0) continue;
    IVec4 v{0, 0, 0, 0};
    v[free] = 1;
    for (int r = 0; r < rank; ++r) v[piv_of_row[r]] = mod(-rows[r][free], q);
    out.push_back(v);
  }
  for (int k = 0; k < 4; ++k) {
    IVec4 v{0, 0, 0, 0};
    v[k] = q;
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// A verified order: a lattice of B that contains 1 and is a ring.
class Order {
 public:
  const AlgebraPtr& algebra() const { return alg_; }
  const Lattice4& lattice() const { return lat_; }
  /// Basis {1, u1, u2, u3} of the same lattice.
  const std::array<Vec4, 4>& unit_basis() const { return unit_basis_; }
  std::array<Vec4, 4> basis() const { return lat_.columns(); }
  QuatElement element(int k) const { return {alg_, unit_basis_[k]}; }

  bool contains(const Vec4& v) const { return lat_.contains(v); }
  bool contains(const QuatElement& x) const { return lat_.contains(x.coeffs()); }
  bool operator==(const Order& o) const { return *alg_ == *o.alg_ && lat_ == o.lat_; }
  bool operator!=(const Order& o) const { return !(*this == o); }

  friend Order verify_order(const Lattice4& lat, const AlgebraPtr& alg);
  friend std::optional<Order> close_to_order(const AlgebraPtr& alg, std::vector<Vec4> gens);

 private:
  Order(AlgebraPtr alg, Lattice4 lat) : alg_(std::move(alg)), lat_(std::move(lat)) {
    Vec4 one{1, 0, 0, 0};
    Vec4 x = lat_.coordinates(one);
    IVec4 c;
    for (int k = 0; k < 4; ++k) c[k] = x[k].get_num();
    IMat4 u = detail::unimodular_with_first_column(c);
    for (int j = 0; j < 4; ++j) {
      Vec4 v{0, 0, 0, 0};
      for (int k = 0; k < 4; ++k) v = v + Rat(u[k][j]) * lat_.column(k);
      unit_basis_[j] = v;
    }
    unit_basis_[0] = one;
  }

  AlgebraPtr alg_;
  Lattice4 lat_;
  std::array<Vec4, 4> unit_basis_;
};

/// Checks 1 in lat and closure of basis products; throws MathError otherwise.
inline Order verify_order(const Lattice4& lat, const AlgebraPtr& alg) {
  if (!lat.contains(Vec4{1, 0, 0, 0})) throw MathError("not an order: 1 is not in the lattice");
  auto cols = lat.columns();
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) {
      Vec4 p = alg->mul(cols[k], cols[l]);
      if (!lat.contains(p)) {
        throw MathError("not a ring: product of basis elements " + std::to_string(k) + " and " +
                        std::to_string(l) + " = " + QuatElement(alg, p).str() +
                        " is not in the lattice");
      }
    }
  return Order(alg, lat);
}

inline Order verify_order(std::span<const Vec4> gens, const AlgebraPtr& alg) {
  return verify_order(Lattice4::from_generators(gens), alg);
}

/// Every basis element and pairwise product has integral trace and norm.
inline bool basis_is_integral(const QuaternionAlgebra& alg, const Lattice4& lat) {
  auto cols = lat.columns();
  for (int k = 0; k < 4; ++k) {
    if (!is_integer(alg.trd(cols[k])) || !is_integer(alg.nrd(cols[k]))) return false;
    for (int l = k + 1; l < 4; ++l)
      if (!is_integer(alg.trd_mul(cols[k], QuaternionAlgebra::conj(cols[l])))) return false;
  }
  return true;
}

/// Smallest order containing gens, or nullopt when the generated ring is not
/// integral (so no order contains it).
inline std::optional<Order> close_to_order(const AlgebraPtr& alg, std::vector<Vec4> gens) {
  gens.push_back(Vec4{1, 0, 0, 0});
  const std::size_t n = gens.size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) gens.push_back(alg->mul(gens[k], gens[l]));
  Lattice4 lat = Lattice4::from_generators(gens);
  while (true) {
    if (!basis_is_integral(*alg, lat)) return std::nullopt;
    auto cols = lat.columns();
    std::vector<Vec4> next(cols.begin(), cols.end());
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) next.push_back(alg->mul(cols[k], cols[l]));
    Lattice4 grown = Lattice4::from_generators(next);
    if (grown == lat) return Order(alg, lat);
    lat = std::move(grown);
  }
}

/// Positive square root of |det gram|.
inline Int discrd(const Order& o) {
  auto cols = o.lattice().columns();
  Rat d = det(gram(*o.algebra(), cols));
  if (d < 0) d = -d;
  if (!is_integer(d) || !is_square(d.get_num())) {
    throw MathError("order discriminant " + to_string(d) + " is not a square integer");
  }
  return isqrt(d.get_num());
}

/// Lattice spanned by all products x*y, x in l1, y in l2.
inline Lattice4 product(const QuaternionAlgebra& alg, const Lattice4& l1, const Lattice4& l2) {
  std::vector<Vec4> gens;
  auto a = l1.columns(), b = l2.columns();
  for (const auto& x : a)
    for (const auto& y : b) gens.push_back(alg.mul(x, y));
  return Lattice4::from_generators(gens);
}

/// Dual of O under the trace pairing: {y : trd(xy) in Z for x in O}.
inline Lattice4 codifferent(const Order& o) {
  const auto& alg = *o.algebra();
  Mat4 g{};
  g[0][0] = 2;
  g[1][1] = 2 * alg.a();
  g[2][2] = 2 * alg.b();
  g[3][3] = -2 * alg.a() * alg.b();
  Mat4 ginv{};
  for (int i = 0; i < 4; ++i) ginv[i][i] = 1 / g[i][i];
  return Lattice4::from_columns(ginv * inverse(transpose(o.lattice().basis())));
}

/// Coefficients (c11, c22, c33, c12, c13, c23) of the ternary form
/// discrd(O) * nrd restricted to the trace-zero part of the codifferent.
inline std::array<Rat, 6> ternary_form(const Order& o) {
  const auto& alg = *o.algebra();
  Lattice4 dual_lat = codifferent(o);
  std::array<Vec4, 3> v{dual_lat.column(1), dual_lat.column(2), dual_lat.column(3)};
  Rat d = Rat(discrd(o));
  std::array<Rat, 6> c;
  for (int k = 0; k < 3; ++k) c[k] = d * alg.nrd(v[k]);
  c[3] = d * alg.trd_mul(v[0], QuaternionAlgebra::conj(v[1]));
  c[4] = d * alg.trd_mul(v[0], QuaternionAlgebra::conj(v[2]));
  c[5] = d * alg.trd_mul(v[1], QuaternionAlgebra::conj(v[2]));
  return c;
}

/// Gorenstein at q iff q does not divide every coefficient of the ternary form.
inline bool ternary_gorenstein_test(const Order& o, const Int& q) {
  for (const auto& c : ternary_form(o))
    if (c != 0 && valuation(c, q) <= 0) return true;
  return false;
}

/// The ideal J of O whose image in O/qO is the Jacobson radical.
inline Lattice4 radical(const Order& o, const Int& q) {
  const auto& alg = *o.algebra();
  auto b = o.lattice().columns();
  std::vector<IVec4> rows;
  for (int k = 0; k < 4; ++k) {
    IVec4 row;
    for (int l = 0; l < 4; ++l) {
      Rat t = alg.trd_mul(b[k], b[l]);
      row[l] = reduce_mod(t, q);
    }
    rows.push_back(row);
  }
  std::vector<IVec4> ker = detail::kernel_mod(rows, q);
  std::vector<Vec4> gens;
  for (const auto& z : ker) {
    Vec4 v{0, 0, 0, 0};
    for (int k = 0; k < 4; ++k) v = v + Rat(z[k]) * b[k];
    gens.push_back(v);
  }
  if (q == 2) {
    // nrd mod 2 is additive on the trace-form kernel.
    Lattice4 k = Lattice4::from_generators(gens);
    auto kb = k.columns();
    int odd = -1;
    for (int i = 0; i < 4; ++i)
      if (reduce_mod(alg.nrd(kb[i]), Int(2)) == 1) {
        odd = i;
        break;
      }
    if (odd < 0) return k;
    gens.clear();
    for (int i = 0; i < 4; ++i) {
      if (i == odd) {
        gens.push_back(Rat(2) * kb[i]);
      } else if (reduce_mod(alg.nrd(kb[i]), Int(2)) == 1) {
        gens.push_back(kb[i] + kb[odd]);
      } else {
        gens.push_back(kb[i]);
      }
    }
  }
  return Lattice4::from_generators(gens);
}

/// {x : xJ in J and Jx in J} for the q-radical J.
inline Order radical_idealizer(const Order& o, const Int& q) {
  const auto& alg = *o.algebra();
  Lattice4 j = radical(o, q);
  std::optional<Lattice4> acc;
  for (const auto& jk : j.columns()) {
    Vec4 inv = alg.inverse(jk);
    std::array<Vec4, 4> l_gens, r_gens;
    auto jc = j.columns();
    for (int i = 0; i < 4; ++i) {
      l_gens[i] = alg.mul(jc[i], inv);
      r_gens[i] = alg.mul(inv, jc[i]);
    }
    Lattice4 both = intersect(Lattice4::from_generators(l_gens), Lattice4::from_generators(r_gens));
    acc = acc ? intersect(*acc, both) : both;
  }
  return verify_order(*acc, o.algebra());
}

inline bool is_bass_at(const Order& o, const Int& q) {
  if (!ternary_gorenstein_test(o, q)) return false;
  Order nat = radical_idealizer(o, q);
  if (nat == o) return true;
  return ternary_gorenstein_test(nat, q);
}

/// A superorder of O0 of q-power index that is maximal at q.
inline Order q_enlarge(const Order& o0, const Int& q) {
  const Int& p = o0.algebra()->p();
  const int target = (q == p) ? 1 : 0;
  Order o = o0;
  while (true) {
    Int d = discrd(o);
    int v = valuation(d, q);
    if (v <= target) return o;
    Order nat = radical_idealizer(o, q);
    if (nat != o) {
      o = nat;
      continue;
    }
    // Hereditary but not maximal: Eichler of level q. Adjoin x/q for a
    // suitable x in J.
    Lattice4 j = radical(o, q);
    auto jb = j.columns();
    std::optional<Order> next;
    const auto& alg = *o.algebra();
    Rat qinv = Rat(1) / Rat(q);
    std::function<bool(IVec4&, int)> search = [&](IVec4& z, int pos) -> bool {
      if (pos == 4) {
        bool nonzero = false;
        for (const auto& x : z) nonzero = nonzero || x != 0;
        if (!nonzero) return false;
        Vec4 x{0, 0, 0, 0};
        for (int k = 0; k < 4; ++k) x = x + Rat(z[k]) * jb[k];
        if (o.contains(qinv * x)) return false;
        if (valuation(alg.trd(x), q) < 1) return false;
        if (valuation(alg.nrd(x), q) < 2) return false;
        next = close_to_order(o.algebra(), {o.lattice().column(0), o.lattice().column(1),
                                            o.lattice().column(2), o.lattice().column(3), qinv * x});
        return next.has_value();
      }
      for (Int c = 0; c < q; ++c) {
        z[pos] = c;
        if (search(z, pos + 1)) return true;
      }
      z[pos] = 0;
      return false;
    };
    IVec4 z{0, 0, 0, 0};
    if (!search(z, 0)) {
      throw MathError("q-enlargement stalled at q = " + q.get_str());
    }
    o = *next;
  }
}

}  // namespace endoring

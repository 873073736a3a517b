#pragma once

// Local arithmetic at a split prime q: normalized norm-form bases, zero
// divisors modulo q^{r+1}, and an explicit isomorphism O (x) Z_q -> M_2(Z_q)
// known modulo q^{r+1}.

#include <endoring/order.hpp>

namespace endoring {

using Mat2 = std::array<std::array<Int, 2>, 2>;

inline Mat2 mat2(const Int& a, const Int& b, const Int& c, const Int& d) {
  return Mat2{{{a, b}, {c, d}}};
}

inline Mat2 mul(const Mat2& x, const Mat2& y) {
  Mat2 z;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
  return z;
}

inline Mat2 reduce(const Mat2& x, const Int& m) {
  Mat2 z;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) z[i][j] = mod(x[i][j], m);
  return z;
}

/// Working precision: congruences modulo q^{r+1}.
struct Precision {
  Int q;
  int r = 0;
  Int modulus() const { return pow_int(q, static_cast<unsigned long>(r + 1)); }
};

/// One atomic summand of a norm form: a x_i^2 when j < 0, otherwise
/// a x_i^2 + b x_i x_j + c x_j^2.
struct FormBlock {
  int i = 0;
  int j = -1;
  Rat a, b, c;
};

struct NormalizedBasis {
  std::array<Vec4, 4> basis;
  std::vector<FormBlock> blocks;
};

/// Basis of O (x) Z_(q) on which nrd splits into atomic forms.
inline NormalizedBasis normalized_basis_at(const Order& o, const Int& q) {
  const auto& alg = *o.algebra();
  std::array<Vec4, 4> f = o.lattice().columns();
  auto pair = [&](const Vec4& x, const Vec4& y) { return alg.trd_mul(x, QuaternionAlgebra::conj(y)); };
  auto val = [&](const Rat& x) { return valuation(x, q); };
  NormalizedBasis out;
  int s = 0;
  while (s < 4) {
    int best = kInfiniteValuation, bk = -1, bl = -1;
    for (int k = s; k < 4; ++k)
      for (int l = k; l < 4; ++l) {
        int v = val(pair(f[k], f[l]));
        if (v < best || (v == best && k == l && bk != bl)) {
          best = v;
          bk = k;
          bl = l;
        }
      }
    if (bk < 0) throw MathError("degenerate norm form");
    if (bk != bl && q != 2) {
      // Off-diagonal minimum: f_k + f_l has a diagonal entry of that valuation.
      f[bk] = f[bk] + f[bl];
      bl = bk;
    }
    if (bk == bl) {
      std::swap(f[s], f[bk]);
      Rat nss = pair(f[s], f[s]);
      for (int j = s + 1; j < 4; ++j) f[j] = f[j] - (pair(f[s], f[j]) / nss) * f[s];
      out.blocks.push_back(FormBlock{s, -1, alg.nrd(f[s]), 0, 0});
      s += 1;
      continue;
    }
    std::swap(f[s], f[bk]);
    std::swap(f[s + 1], f[bl == s ? bk : bl]);
    Rat n11 = pair(f[s], f[s]), n12 = pair(f[s], f[s + 1]), n22 = pair(f[s + 1], f[s + 1]);
    Rat dt = n11 * n22 - n12 * n12;
    for (int j = s + 2; j < 4; ++j) {
      Rat b1 = pair(f[s], f[j]), b2 = pair(f[s + 1], f[j]);
      Rat al = (n22 * b1 - n12 * b2) / dt;
      Rat be = (n11 * b2 - n12 * b1) / dt;
      f[j] = f[j] - al * f[s] - be * f[s + 1];
    }
    out.blocks.push_back(FormBlock{s, s + 1, alg.nrd(f[s]), n12, alg.nrd(f[s + 1])});
    s += 2;
  }
  out.basis = f;
  return out;
}

/// Integral element of O congruent to v modulo m*O (v must be q-integral in O).
inline Vec4 reduce_in_order(const Order& o, const Vec4& v, const Int& m) {
  Vec4 x = o.lattice().coordinates(v);
  Vec4 out{0, 0, 0, 0};
  for (int k = 0; k < 4; ++k) out = out + Rat(reduce_mod(x[k], m)) * o.lattice().column(k);
  return out;
}

/// Coordinates of v in the lattice basis of O reduced modulo m.
inline IVec4 order_coords_mod(const Order& o, const Vec4& v, const Int& m) {
  Vec4 x = o.lattice().coordinates(v);
  IVec4 out;
  for (int k = 0; k < 4; ++k) out[k] = reduce_mod(x[k], m);
  return out;
}

namespace detail {

// Hensel-lifts coordinate `var` of x so that nrd(sum x_k f_k) = 0 mod q^{r+1}.
inline void hensel_lift(const QuaternionAlgebra& alg, const std::array<Vec4, 4>& f,
                        std::array<Int, 4>& x, int var, const Int& q, int r) {
  auto elem = [&]() {
    Vec4 z{0, 0, 0, 0};
    for (int k = 0; k < 4; ++k) z = z + Rat(x[k]) * f[k];
    return z;
  };
  Vec4 z = elem();
  Rat deriv = alg.trd_mul(f[var], QuaternionAlgebra::conj(z));
  if (valuation(deriv, q) != 0) throw MathError("Hensel lift: derivative is not a unit");
  Int dinv = inverse_mod(reduce_mod(deriv, q), q);
  for (int k = 1; k <= r; ++k) {
    Rat n = alg.nrd(z);
    if (n != 0 && valuation(n, q) < k) throw MathError("Hensel lift lost precision");
    if (n == 0 || valuation(n, q) >= k + 1) continue;
    Int qk = pow_int(q, static_cast<unsigned long>(k));
    Int t = mod(-reduce_mod(n / Rat(qk), q) * dinv, q);
    x[var] += t * qk;
    z = elem();
    Rat n2 = alg.nrd(z);
    if (n2 != 0 && valuation(n2, q) < k + 1) throw MathError("Hensel step did not gain a digit");
  }
}

}  // namespace detail

/// Element x of O_q with nrd(x) = 0 mod q^{r+1} and x not in qO_q.
inline QuatElement zero_divisor_mod(const Order& oq, const Precision& prec) {
  const Int& q = prec.q;
  if (q == oq.algebra()->p()) throw MathError("no zero divisors at the ramified prime");
  const auto& alg = *oq.algebra();
  NormalizedBasis nb = normalized_basis_at(oq, q);
  std::array<Int, 4> x{0, 0, 0, 0};
  int var = -1;
  if (q != 2) {
    if (nb.blocks.size() != 4) throw MathError("norm form at odd q is not diagonal");
    std::array<Int, 3> a;
    for (int k = 0; k < 3; ++k) {
      if (valuation(nb.blocks[k].a, q) != 0) throw MathError("order is not maximal at q");
      a[k] = reduce_mod(nb.blocks[k].a, q);
    }
    bool found = false;
    for (Int x1 = 0; x1 < q && !found; ++x1)
      for (Int x2 = 0; x2 < q && !found; ++x2)
        for (Int x3 = 0; x3 < q && !found; ++x3) {
          if (x1 == 0 && x2 == 0 && x3 == 0) continue;
          if (mod(a[0] * x1 * x1 + a[1] * x2 * x2 + a[2] * x3 * x3, q) != 0) continue;
          x = {x1, x2, x3, 0};
          found = true;
        }
    if (!found) throw MathError("conic has no point mod q");
    for (int k = 0; k < 3; ++k)
      if (x[k] != 0) {
        var = k;
        break;
      }
  } else {
    if (nb.blocks.size() != 2 || nb.blocks[0].j < 0 || nb.blocks[1].j < 0) {
      throw MathError("norm form at 2 is not a sum of two binary blocks");
    }
    for (std::size_t bi = 0; bi < 2; ++bi) {
      const FormBlock& b = nb.blocks[bi];
      if (valuation(b.b, q) != 0) throw MathError("order is not maximal at 2");
      bool a_odd = reduce_mod(b.a, q) == 1, c_odd = reduce_mod(b.c, q) == 1;
      int lift;
      if (a_odd == c_odd) {
        x[b.i] = 1;
        x[b.j] = 1;
        lift = b.i;
      } else if (a_odd) {
        x[b.i] = 1;
        lift = b.j;
      } else {
        x[b.j] = 1;
        lift = b.i;
      }
      if (bi == 0) var = lift;
    }
  }
  detail::hensel_lift(alg, nb.basis, x, var, q, prec.r);
  Vec4 z{0, 0, 0, 0};
  for (int k = 0; k < 4; ++k) z = z + Rat(x[k]) * nb.basis[k];
  return QuatElement(oq.algebra(), reduce_in_order(oq, z, prec.modulus()));
}

/// An isomorphism f: O_q (x) Z_q -> M_2(Z_q) modulo q^{r+1}, held as the
/// preimages E_kl of the matrix units.
class SplittingMap {
 public:
  /// From matrix-unit preimages; E_kl must lie in O_q.
  SplittingMap(Order oq, Precision prec, std::array<Vec4, 4> units)
      : order_(std::move(oq)), prec_(std::move(prec)), units_(std::move(units)) {
    const Int m = prec_.modulus();
    for (auto& u : units_) u = reduce_in_order(order_, u, m);
    const auto& e = units_;
    if (prec_.q != 2) {
      i_rep_ = reduce_in_order(order_, e[0] - e[3], m);
    } else {
      i_rep_ = reduce_in_order(order_, e[1] + e[2] + e[3], m);
    }
    j_rep_ = reduce_in_order(order_, e[1] + e[2], m);
  }

  /// The map with prescribed images of the algebra generators i and j.
  static SplittingMap from_images(const Order& oq, const Precision& prec, const Mat2& img_i,
                                  const Mat2& img_j) {
    const Int m = prec.modulus();
    Mat2 img_ij = reduce(mul(img_i, img_j), m);
    std::array<Mat2, 4> img{mat2(1, 0, 0, 1), reduce(img_i, m), reduce(img_j, m), img_ij};
    std::array<Vec4, 4> units;
    for (int u = 0; u < 4; ++u) {
      // Solve sum_s x_s img[s] = E_u over Z/m.
      std::vector<std::array<Int, 5>> rows(4);
      for (int e = 0; e < 4; ++e) {
        for (int s = 0; s < 4; ++s) rows[e][s] = img[s][e / 2][e % 2];
        rows[e][4] = (e == u) ? 1 : 0;
      }
      for (int col = 0; col < 4; ++col) {
        int piv = -1;
        for (int rr = col; rr < 4; ++rr)
          if (valuation(rows[rr][col], prec.q) == 0) {
            piv = rr;
            break;
          }
        if (piv < 0) throw MathError("prescribed images do not span M_2 modulo q");
        std::swap(rows[piv], rows[col]);
        Int inv = inverse_mod(rows[col][col], m);
        for (auto& x : rows[col]) x = mod(x * inv, m);
        for (int rr = 0; rr < 4; ++rr) {
          if (rr == col || rows[rr][col] == 0) continue;
          Int f = rows[rr][col];
          for (int k = 0; k < 5; ++k) rows[rr][k] = mod(rows[rr][k] - f * rows[col][k], m);
        }
      }
      units[u] = Vec4{Rat(rows[0][4]), Rat(rows[1][4]), Rat(rows[2][4]), Rat(rows[3][4])};
      Vec4 c = oq.lattice().coordinates(units[u]);
      for (const auto& x : c)
        if (valuation(x, prec.q) < 0) throw MathError("1, i, j, ij do not lie in O_q locally");
    }
    return SplittingMap(oq, prec, units);
  }

  const Order& order() const { return order_; }
  const Precision& precision() const { return prec_; }
  const std::array<Vec4, 4>& units() const { return units_; }
  QuatElement i_rep() const { return {order_.algebra(), i_rep_}; }
  QuatElement j_rep() const { return {order_.algebra(), j_rep_}; }

  /// f(x) for x in O_q (x) Z_(q), entries reduced into [0, q^{r+1}).
  Mat2 image(const Vec4& x) const {
    const auto& alg = *order_.algebra();
    const Int m = prec_.modulus();
    // f(x)[r][c] = trd(x * E_cr).
    return mat2(reduce_mod(alg.trd_mul(x, units_[0]), m), reduce_mod(alg.trd_mul(x, units_[2]), m),
                reduce_mod(alg.trd_mul(x, units_[1]), m), reduce_mod(alg.trd_mul(x, units_[3]), m));
  }
  Mat2 image(const QuatElement& x) const { return image(x.coeffs()); }

  /// Element of O_q whose image is T modulo q^{r+1}.
  Vec4 preimage(const Mat2& t) const {
    Vec4 v = Rat(t[0][0]) * units_[0] + Rat(t[0][1]) * units_[1] + Rat(t[1][0]) * units_[2] +
             Rat(t[1][1]) * units_[3];
    return reduce_in_order(order_, v, prec_.modulus());
  }

 private:
  Order order_;
  Precision prec_;
  std::array<Vec4, 4> units_;  // E11, E12, E21, E22
  Vec4 i_rep_, j_rep_;
};

/// Splitting map built from a zero divisor.
inline SplittingMap splitting_map(const Order& oq, const Precision& prec) {
  const auto& alg = *oq.algebra();
  const Int& q = prec.q;
  const Int m = prec.modulus();
  Vec4 x = zero_divisor_mod(oq, prec).coeffs();
  Vec4 xbar = QuaternionAlgebra::conj(x);
  auto basis = oq.lattice().columns();
  auto primitive = [&](const Vec4& v) {
    for (const auto& c : order_coords_mod(oq, v, q))
      if (c != 0) return true;
    return false;
  };
  std::optional<Vec4> e;
  for (const auto& y : basis) {
    Vec4 cand = reduce_in_order(oq, alg.mul(alg.mul(x, y), xbar), m);
    if (primitive(cand)) {
      e = cand;
      break;
    }
  }
  if (!e) throw MathError("no nilpotent element found from the zero divisor");
  for (const auto& y : basis) {
    Rat s = alg.trd_mul(*e, y);
    if (valuation(s, q) != 0) continue;
    Rat minv = Rat(inverse_mod(reduce_mod(s, m), m));
    Vec4 one{1, 0, 0, 0};
    Vec4 eps = reduce_in_order(oq, minv * alg.mul(*e, y), m);
    Vec4 e21 = reduce_in_order(oq, minv * alg.mul(alg.mul(one - eps, y), eps), m);
    return SplittingMap(oq, prec, {eps, *e, e21, one - eps});
  }
  throw MathError("trace pairing with the nilpotent element is degenerate mod q");
}

/// t in O_q with f(t) = [[q^a, c], [0, q^b]] modulo q^{r+1}.
inline QuatElement lift_vertex_element(const SplittingMap& sm, int a, int b, const Int& c) {
  const Precision& prec = sm.precision();
  if (a + b > prec.r) {
    throw MathError("precision too low: vertex depth " + std::to_string(a + b) +
                    " exceeds r = " + std::to_string(prec.r));
  }
  const auto& alg = *sm.order().algebra();
  const Int& q = prec.q;
  const Int m = prec.modulus();
  Int qa = pow_int(q, a), qb = pow_int(q, b);
  Vec4 ip = sm.i_rep().coeffs(), jp = sm.j_rep().coeffs();
  Vec4 ij = alg.mul(ip, jp);
  Vec4 t;
  if (q != 2) {
    Int half = inverse_mod(Int(2), m);
    t = Vec4{Rat(half * (qa + qb)), 0, 0, 0} + Rat(half * (qa - qb)) * ip + Rat(half * c) * jp +
        Rat(half * c) * ij;
  } else {
    t = Vec4{Rat(qa + c), 0, 0, 0} + Rat(qb - qa) * ip + Rat(c - qb + qa) * jp + Rat(-c) * ij;
  }
  return QuatElement(sm.order().algebra(), reduce_in_order(sm.order(), t, m));
}

}  // namespace endoring

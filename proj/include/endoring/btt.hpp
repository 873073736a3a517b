#pragma once

// The Bruhat-Tits tree of GL_2(Q_q): vertices as nonbacktracking words in the
// generators gamma_0..gamma_{q-1}, gamma_inf, with cached Hermite form (a, b, c).

#include <endoring/padic.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace endoring {

/// Hermite representative [[q^a, c], [0, q^b]] of a vertex.
struct VertexForm {
  int a = 0;
  int b = 0;
  Int c = 0;
  bool operator==(const VertexForm&) const = default;
};

/// Generator gamma_s: s in [0, q) is [[1, s], [0, q]] and s == q is gamma_inf.
inline Mat2 generator(long q, long s) {
  if (s < 0 || s > q) throw MathError("generator index out of range");
  if (s == q) return mat2(q, 0, 0, 1);
  return mat2(1, s, 0, q);
}

inline Mat2 adjugate(const Mat2& m) { return mat2(m[1][1], -m[0][1], -m[1][0], m[0][0]); }

/// Steps allowed after `last` (-1 for the empty path), in increasing order.
inline std::vector<long> allowed_steps(long q, long last) {
  std::vector<long> out;
  for (long s = 0; s <= q; ++s) {
    if (last >= 0 && last < q && s == q) continue;
    if (last == q && s == 0) continue;
    out.push_back(s);
  }
  return out;
}

inline bool is_nonbacktracking(long q, const std::vector<long>& steps) {
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] < 0 || steps[k] > q) return false;
    if (k > 0) {
      Mat2 p = mul(generator(q, steps[k]), generator(q, steps[k - 1]));
      bool all = true;
      for (auto& row : p)
        for (auto& x : row) all = all && mod(x, Int(q)) == 0;
      if (all) return false;
    }
  }
  return true;
}

/// c_n ... c_1 for the path (c_1, ..., c_n).
inline Mat2 associated_matrix(long q, const std::vector<long>& steps) {
  Mat2 t = mat2(1, 0, 0, 1);
  for (long s : steps) t = mul(generator(q, s), t);
  return t;
}

/// Reduces T by left GL_2(Z_q) and scalars to its Hermite representative.
inline VertexForm canonical_vertex(long ql, const std::array<std::array<Rat, 2>, 2>& tin) {
  const Int q = ql;
  auto t = tin;
  if (t[0][0] * t[1][1] - t[0][1] * t[1][0] == 0) throw MathError("singular matrix has no vertex");
  int vmin = kInfiniteValuation;
  for (auto& row : t)
    for (auto& x : row)
      if (x != 0) vmin = std::min(vmin, valuation(x, q));
  Rat scale = vmin >= 0 ? Rat(1) / Rat(pow_int(q, vmin)) : Rat(pow_int(q, -vmin));
  for (auto& row : t)
    for (auto& x : row) x *= scale;
  auto v = [&](const Rat& x) { return valuation(x, q); };
  if (t[1][0] != 0 && (t[0][0] == 0 || v(t[1][0]) < v(t[0][0]))) std::swap(t[0], t[1]);
  if (t[1][0] != 0) {
    Rat f = t[1][0] / t[0][0];
    for (int k = 0; k < 2; ++k) t[1][k] -= f * t[0][k];
  }
  int a = v(t[0][0]), b = v(t[1][1]);
  Rat u0 = t[0][0] / Rat(pow_int(q, a));
  Rat c = t[0][1] / u0;
  Int qb = pow_int(q, b);
  Int ci = reduce_mod(c, qb);
  while (a > 0 && b > 0 && mod(ci, q) == 0) {
    --a;
    --b;
    ci /= q;
  }
  return VertexForm{a, b, ci};
}

inline VertexForm canonical_vertex(long q, const Mat2& t) {
  std::array<std::array<Rat, 2>, 2> r{{{Rat(t[0][0]), Rat(t[0][1])}, {Rat(t[1][0]), Rat(t[1][1])}}};
  return canonical_vertex(q, r);
}

inline Mat2 vertex_matrix(long q, const VertexForm& f) {
  return mat2(pow_int(Int(q), f.a), f.c, 0, pow_int(Int(q), f.b));
}

/// A vertex of the tree for a fixed q: the path from the root is the ground
/// truth, the Hermite form is cached.
class TreeVertex {
 public:
  static TreeVertex root(long q) { return from_path(q, {}); }

  static TreeVertex from_path(long q, std::vector<long> steps) {
    if (q < 2 || !is_prime(Int(q))) throw MathError("tree prime must be prime");
    if (!is_nonbacktracking(q, steps)) throw MathError("matrix path backtracks");
    TreeVertex v;
    v.q_ = q;
    v.form_ = canonical_vertex(q, associated_matrix(q, steps));
    v.steps_ = std::move(steps);
    return v;
  }

  /// Decodes the path of the vertex [[q^a, c], [0, q^b]].
  static TreeVertex from_form(long q, int a, int b, const Int& c) {
    if (a < 0 || b < 0) throw MathError("vertex exponents must be nonnegative");
    Int qb = pow_int(Int(q), b);
    if (c < 0 || c >= qb) throw MathError("vertex entry c must lie in [0, q^b)");
    VertexForm f = canonical_vertex(q, mat2(pow_int(Int(q), a), c, 0, qb));
    if (!(f == VertexForm{a, b, c})) throw MathError("(a, b, c) is not a standard vertex form");
    // Forms along the chain of parents, then descend from the root.
    std::vector<VertexForm> chain{f};
    while (chain.back().a + chain.back().b > 0) {
      const VertexForm& cur = chain.back();
      Mat2 t = vertex_matrix(q, cur);
      bool found = false;
      for (long s = 0; s <= q && !found; ++s) {
        VertexForm up = canonical_vertex(q, mul(generator(q, s), t));
        if (up.a + up.b == cur.a + cur.b - 1) {
          chain.push_back(up);
          found = true;
        }
      }
      if (!found) throw MathError("vertex decoding failed");
    }
    TreeVertex v = root(q);
    for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) {
      bool found = false;
      for (auto& w : v.children()) {
        if (w.form() == *it) {
          v = w;
          found = true;
          break;
        }
      }
      if (!found) throw MathError("vertex decoding failed");
    }
    return v;
  }

  long q() const { return q_; }
  const std::vector<long>& steps() const { return steps_; }
  const VertexForm& form() const { return form_; }
  int depth() const { return static_cast<int>(steps_.size()); }
  Mat2 matrix() const { return vertex_matrix(q_, form_); }

  std::string label() const {
    return "(" + std::to_string(form_.a) + "," + std::to_string(form_.b) + "," + form_.c.get_str() + ")";
  }

  std::string path_string() const {
    std::string s;
    for (std::size_t k = 0; k < steps_.size(); ++k) {
      if (k) s += ",";
      s += steps_[k] == q_ ? std::string("inf") : std::to_string(steps_[k]);
    }
    return s;
  }

  bool operator==(const TreeVertex& o) const { return q_ == o.q_ && steps_ == o.steps_; }
  bool operator!=(const TreeVertex& o) const { return !(*this == o); }
  bool operator<(const TreeVertex& o) const {
    return std::tie(q_, steps_) < std::tie(o.q_, o.steps_);
  }

  TreeVertex child(long s) const {
    auto st = steps_;
    st.push_back(s);
    return from_path(q_, std::move(st));
  }
  std::vector<TreeVertex> children() const {
    std::vector<TreeVertex> out;
    for (long s : allowed_steps(q_, steps_.empty() ? -1 : steps_.back())) out.push_back(child(s));
    return out;
  }
  TreeVertex parent() const {
    if (steps_.empty()) throw MathError("root has no parent");
    auto st = steps_;
    st.pop_back();
    return from_path(q_, std::move(st));
  }

 private:
  long q_ = 2;
  std::vector<long> steps_;
  VertexForm form_;
};

/// Length of the nonbacktracking path between two vertices.
inline int distance(const TreeVertex& x, const TreeVertex& y) {
  if (x.q() != y.q()) throw MathError("vertices belong to trees for different primes");
  const auto& s = x.steps();
  const auto& t = y.steps();
  std::size_t k = 0;
  while (k < s.size() && k < t.size() && s[k] == t[k]) ++k;
  return static_cast<int>((s.size() - k) + (t.size() - k));
}

/// Children in increasing step order, then the parent.
inline std::vector<TreeVertex> neighbors(const TreeVertex& v) {
  std::vector<TreeVertex> out = v.children();
  if (v.depth() > 0) out.push_back(v.parent());
  return out;
}

/// Vertices on the geodesic from x to y, both included.
inline std::vector<TreeVertex> geodesic(const TreeVertex& x, const TreeVertex& y) {
  const auto& s = x.steps();
  const auto& t = y.steps();
  std::size_t k = 0;
  while (k < s.size() && k < t.size() && s[k] == t[k]) ++k;
  std::vector<TreeVertex> out;
  for (std::size_t n = s.size(); n > k; --n)
    out.push_back(TreeVertex::from_path(x.q(), {s.begin(), s.begin() + static_cast<long>(n)}));
  for (std::size_t n = k; n <= t.size(); ++n)
    out.push_back(TreeVertex::from_path(x.q(), {t.begin(), t.begin() + static_cast<long>(n)}));
  return out;
}

/// All vertices within `radius` of `center`.
inline std::vector<TreeVertex> ball(const TreeVertex& center, int radius) {
  std::vector<TreeVertex> out{center};
  std::set<TreeVertex> seen{center};
  std::deque<std::pair<TreeVertex, int>> queue{{center, 0}};
  while (!queue.empty()) {
    auto [v, d] = queue.front();
    queue.pop_front();
    if (d == radius) continue;
    for (auto& w : neighbors(v)) {
      if (!seen.insert(w).second) continue;
      out.push_back(w);
      queue.emplace_back(w, d + 1);
    }
  }
  return out;
}

/// Vertices within distance r of some vertex of `path`.
inline std::vector<TreeVertex> neighborhood(const std::vector<TreeVertex>& path, int r) {
  std::set<TreeVertex> seen;
  std::vector<TreeVertex> out;
  for (const auto& p : path)
    for (auto& v : ball(p, r))
      if (seen.insert(v).second) out.push_back(v);
  return out;
}

inline int triple_sum(const TreeVertex& x, const TreeVertex& y, const TreeVertex& z) {
  return distance(x, y) + distance(y, z) + distance(x, z);
}

/// A triple of S maximizing the sum of pairwise distances.
inline std::array<TreeVertex, 3> tu_triple(const std::vector<TreeVertex>& s) {
  if (s.empty()) throw MathError("d3 of an empty set");
  std::array<TreeVertex, 3> best{s[0], s[0], s[0]};
  int bv = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i; j < s.size(); ++j)
      for (std::size_t k = j; k < s.size(); ++k) {
        int v = triple_sum(s[i], s[j], s[k]);
        if (v > bv) {
          bv = v;
          best = {s[i], s[j], s[k]};
        }
      }
  return best;
}

inline int d3(const std::vector<TreeVertex>& s) {
  auto t = tu_triple(s);
  return triple_sum(t[0], t[1], t[2]);
}

/// Three vertices whose maximal orders intersect to the intersection over
/// the radius-l neighbourhood of the path P.
inline std::array<TreeVertex, 3> ball_triple(const std::vector<TreeVertex>& path, int l) {
  if (path.empty()) throw MathError("ball_triple needs a nonempty path");
  for (std::size_t k = 1; k < path.size(); ++k)
    if (distance(path[k - 1], path[k]) != 1) throw MathError("ball_triple input is not a path");
  if (l == 0) return {path.front(), path.back(), path.front()};
  std::set<TreeVertex> used(path.begin(), path.end());
  auto arm = [&](const TreeVertex& start) {
    TreeVertex cur = start;
    for (int k = 0; k < l; ++k) {
      bool moved = false;
      for (auto& w : neighbors(cur)) {
        if (used.count(w)) continue;
        used.insert(w);
        cur = w;
        moved = true;
        break;
      }
      if (!moved) throw MathError("no free arm direction");
    }
    return cur;
  };
  TreeVertex x1 = arm(path.front());
  TreeVertex x2 = arm(path.back());
  TreeVertex x3 = arm(path.front());
  return {x1, x2, x3};
}

/// DOT graph of a set of vertices; edges join each vertex to its parent.
inline std::string to_dot(const std::vector<TreeVertex>& vs, const std::string& name = "btt") {
  std::set<TreeVertex> present(vs.begin(), vs.end());
  std::ostringstream os;
  os << "graph " << name << " {\n";
  for (const auto& v : present) {
    os << "  \"" << v.label() << "\" [label=\"" << v.label() << "\"];\n";
  }
  for (const auto& v : present) {
    if (v.depth() == 0) continue;
    TreeVertex p = v.parent();
    if (present.count(p)) os << "  \"" << p.label() << "\" -- \"" << v.label() << "\";\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace endoring

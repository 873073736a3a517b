#pragma once

// The local-global reconstruction of End(E) from a suborder O0: per prime q,
// enlarge to O_q, locate the vertex of End(E) in the tree with oracle queries,
// and glue the local answers back into one maximal order.

#include <endoring/btt.hpp>
#include <endoring/divide.hpp>

#include <mutex>
#include <thread>

namespace endoring {

/// One line of the pipeline trace.
struct TraceEvent {
  std::string kind;  // "oracle" or "tree"
  Int q;
  std::string stage;
  std::optional<QuatElement> beta;
  Int n = 0;
  bool answer = false;
  long count = 0;
  std::string vertex;
  int level = 0;
};

using TraceSink = std::function<void(const TraceEvent&)>;

/// Oracle access for one prime: serializes calls to a shared oracle and
/// buffers trace events.
class LocalContext {
 public:
  LocalContext(DivisionOracle& oracle, Int q, std::mutex* lock = nullptr)
      : oracle_(oracle), q_(std::move(q)), lock_(lock) {}

  bool query(const std::string& stage, const QuatElement& beta, const Int& n) {
    bool ans;
    if (lock_) {
      std::lock_guard<std::mutex> g(*lock_);
      ans = oracle_.is_divisible(beta, n);
    } else {
      ans = oracle_.is_divisible(beta, n);
    }
    ++calls_;
    ++stage_calls_[stage];
    TraceEvent ev{"oracle", q_, stage, beta, n, ans, calls_, "", 0};
    events_.push_back(std::move(ev));
    return ans;
  }

  void tree_step(const std::string& stage, const TreeVertex& v, bool accepted) {
    TraceEvent ev{"tree", q_, stage, std::nullopt, 0, accepted, calls_, v.label(), v.depth()};
    events_.push_back(std::move(ev));
    explored_.push_back(v);
  }

  void explored(const TreeVertex& v) { explored_.push_back(v); }
  const std::vector<TreeVertex>& explored() const { return explored_; }

  const Int& q() const { return q_; }
  long calls() const { return calls_; }
  long calls(const std::string& stage) const {
    auto it = stage_calls_.find(stage);
    return it == stage_calls_.end() ? 0 : it->second;
  }
  const std::vector<TraceEvent>& events() const { return events_; }

 private:
  DivisionOracle& oracle_;
  Int q_;
  std::mutex* lock_;
  long calls_ = 0;
  std::map<std::string, long> stage_calls_;
  std::vector<TraceEvent> events_;
  std::vector<TreeVertex> explored_;
};

namespace detail {

inline std::vector<QuatElement> nonunit_elements(const Order& o) {
  std::vector<QuatElement> out;
  for (int k = 1; k < 4; ++k) out.push_back(o.element(k));
  return out;
}

inline Rat qpow(const Int& q, int k) {
  return k >= 0 ? Rat(pow_int(q, static_cast<unsigned long>(k)))
                : Rat(1) / Rat(pow_int(q, static_cast<unsigned long>(-k)));
}

inline int ceil_log2(long x) {
  int k = 0;
  while ((1L << k) < x) ++k;
  return k;
}

}  // namespace detail

/// Distance r between the vertices of O_q and End(E) in the tree at q, given
/// that both contain O0 with v_q(discrd O0) = e.
inline int distance_to_end(const Order& oq, int e, LocalContext& ctx) {
  const Int& q = ctx.q();
  auto bs = detail::nonunit_elements(oq);
  for (int i = e - 1; i >= 0; --i) {
    Int qi1 = pow_int(q, static_cast<unsigned long>(i + 1));
    for (const auto& b : bs) {
      if (!ctx.query("distance", Rat(qi1) * b, q)) return i + 1;
    }
  }
  return 0;
}

/// Lifts of the generators gamma_0..gamma_q into O_q.
inline std::vector<QuatElement> generator_lifts(const SplittingMap& sm) {
  long q = sm.precision().q.get_si();
  std::vector<QuatElement> out;
  for (long s = 0; s <= q; ++s) {
    if (s == q) {
      out.push_back(lift_vertex_element(sm, 1, 0, 0));
    } else {
      out.push_back(lift_vertex_element(sm, 0, 1, s));
    }
  }
  return out;
}

/// The nonbacktracking path from the vertex of O_q to the vertex of End(E),
/// at distance r.
inline std::vector<long> find_path_to_end(const SplittingMap& sm, int r, LocalContext& ctx) {
  const Order& oq = sm.order();
  const Int& q = ctx.q();
  long ql = q.get_si();
  auto lifts = generator_lifts(sm);
  auto bs = detail::nonunit_elements(oq);
  Int q3 = q * q * q;
  QuatElement tprev = QuatElement::scalar(oq.algebra(), 1);
  std::vector<long> path;
  for (int k = 1; k <= r; ++k) {
    long last = path.empty() ? -1 : path.back();
    auto cands = allowed_steps(ql, last);
    bool found = false;
    for (std::size_t ci = 0; ci < cands.size() && !found; ++ci) {
      long s = cands[ci];
      QuatElement t = lifts[static_cast<std::size_t>(s)] * tprev;
      bool ok = true;
      if (ci + 1 < cands.size()) {
        Rat scale = detail::qpow(q, r + 3 - 2 * k);
        for (const auto& b : bs) {
          QuatElement bg = scale * (t.conj() * b * t);
          if (!ctx.query("path", bg, q3)) {
            ok = false;
            break;
          }
        }
      }
      auto st = path;
      st.push_back(s);
      ctx.tree_step("path", TreeVertex::from_path(ql, st), ok);
      if (ok) {
        path.push_back(s);
        tprev = t;
        found = true;
      }
    }
    if (!found) throw MathError("no neighbour passed the containment test");
  }
  return path;
}

/// Z + q^{-(a+b)} conj(t) O_q t for each vertex (lifted through sm),
/// intersected over the given vertices.
inline Order global_order_from_vertices(const SplittingMap& sm, const std::vector<TreeVertex>& vs) {
  if (vs.empty()) throw MathError("no vertices given");
  const Order& oq = sm.order();
  const Int& q = sm.precision().q;
  std::optional<Lattice4> acc;
  for (const auto& v : vs) {
    const VertexForm& f = v.form();
    Lattice4 lat = oq.lattice();
    if (f.a + f.b > 0) {
      QuatElement t = lift_vertex_element(sm, f.a, f.b, f.c);
      Rat scale = detail::qpow(q, -(f.a + f.b));
      std::vector<Vec4> gens{Vec4{1, 0, 0, 0}};
      for (const auto& b : oq.basis()) {
        QuatElement x(oq.algebra(), b);
        gens.push_back((scale * (t.conj() * x * t)).coeffs());
      }
      lat = Lattice4::from_generators(std::span<const Vec4>(gens));
    }
    acc = acc ? intersect(*acc, lat) : lat;
  }
  return verify_order(*acc, oq.algebra());
}

/// True iff the local order of vertex v contains every x with image f(x).
inline bool vertex_contains(const TreeVertex& v, const std::vector<Mat2>& images) {
  Mat2 t = v.matrix();
  Mat2 adj = adjugate(t);
  Int m = pow_int(Int(v.q()), static_cast<unsigned long>(v.form().a + v.form().b));
  for (const auto& x : images) {
    Mat2 y = mul(mul(t, x), adj);
    for (auto& row : y)
      for (auto& c : row)
        if (mod(c, m) != 0) return false;
  }
  return true;
}

/// The vertices containing the images, as a path listed from an endpoint.
inline std::vector<TreeVertex> containing_path(long q, const std::vector<Mat2>& images, int radius) {
  TreeVertex root = TreeVertex::root(q);
  std::set<TreeVertex> s{root};
  std::deque<TreeVertex> queue{root};
  while (!queue.empty()) {
    TreeVertex v = queue.front();
    queue.pop_front();
    if (distance(root, v) >= radius) continue;
    for (auto& w : neighbors(v)) {
      if (s.count(w) || !vertex_contains(w, images)) continue;
      s.insert(w);
      queue.push_back(w);
    }
  }
  auto degree = [&](const TreeVertex& v) {
    int d = 0;
    for (auto& w : neighbors(v)) d += static_cast<int>(s.count(w));
    return d;
  };
  std::optional<TreeVertex> start;
  if (degree(root) <= 1) start = root;
  for (const auto& v : s) {
    int d = degree(v);
    if (d > 2) throw MathError("containing set is not a path");
    if (!start && d <= 1) start = v;
  }
  if (!start) throw MathError("containing set is not a path");
  std::vector<TreeVertex> out{*start};
  std::set<TreeVertex> seen{*start};
  while (true) {
    std::optional<TreeVertex> nxt;
    for (auto& w : neighbors(out.back()))
      if (s.count(w) && !seen.count(w)) nxt = w;
    if (!nxt) break;
    seen.insert(*nxt);
    out.push_back(*nxt);
  }
  if (out.size() != s.size()) throw MathError("containing set is not a path");
  return out;
}

struct BassOutcome {
  Order oq;
  std::vector<TreeVertex> path;
  TreeVertex vertex;
  Order tilde;
};

/// Locates End(E) at q among the vertices containing a Bass order O0.
inline BassOutcome bass_search(const Order& o0, const Order& oq, int e, LocalContext& ctx,
                               std::optional<int> precision = std::nullopt) {
  const Int& q = ctx.q();
  long ql = q.get_si();
  if (e == 0) return BassOutcome{oq, {TreeVertex::root(ql)}, TreeVertex::root(ql), oq};
  SplittingMap sm = splitting_map(oq, Precision{q, precision.value_or(e)});
  std::vector<Mat2> images;
  for (const auto& x : o0.basis()) images.push_back(sm.image(x));
  std::vector<TreeVertex> path = containing_path(ql, images, e);
  for (const auto& v : path) ctx.explored(v);
  Int qe = pow_int(q, static_cast<unsigned long>(e));
  std::size_t lo = 0, hi = path.size() - 1;
  while (lo < hi) {
    std::size_t m = (lo + hi) / 2;
    Order cand = global_order_from_vertices(sm, {path[lo], path[m]});
    bool inside = true;
    for (const auto& b : detail::nonunit_elements(cand)) {
      if (!ctx.query("bass", Rat(qe) * b, qe)) {
        inside = false;
        break;
      }
    }
    ctx.tree_step("bass", path[m], inside);
    if (inside) {
      hi = m;
    } else {
      lo = m + 1;
    }
  }
  TreeVertex v = path[lo];
  Order tilde = v.depth() == 0 ? oq : global_order_from_vertices(sm, {v});
  return BassOutcome{oq, path, v, tilde};
}

/// Result of the local computation at one prime.
struct LocalSolution {
  Int q;
  int e = 0;
  bool bass = false;
  Order oq;
  int r = 0;
  std::vector<long> path;
  std::string vertex;
  Order tilde;
  long distance_calls = 0;
  long path_calls = 0;
  long bass_calls = 0;
  std::vector<TraceEvent> events;
  std::vector<TreeVertex> explored;
};

struct ComputeOptions {
  bool parallel = false;
  std::optional<int> precision_override;
  TraceSink trace;
  /// Enlargements to use in place of q_enlarge, keyed by q.
  std::map<Int, Order> enlargements;
};

struct ComputeResult {
  Order end;
  std::vector<LocalSolution> locals;
  long oracle_calls = 0;
};

inline long distance_budget(int e) { return 4L * e; }
inline long path_budget(int r, const Int& q) { return 4L * (r * q.get_si() + 1); }
inline long bass_budget(int e) { return 4L * detail::ceil_log2(e + 1); }

/// The maximal order at q containing O0 that End(E) agrees with locally.
/// Checks that oq contains O0 with q-power index and is maximal at q.
inline void check_enlargement(const Order& o0, const Order& oq, const Int& q) {
  if (!is_sublattice(o0.lattice(), oq.lattice())) throw MathError("enlargement does not contain O0");
  Rat idx = index(oq.lattice(), o0.lattice());
  if (prime_to_part(idx.get_num(), q) != 1) throw MathError("enlargement index is not a power of q");
  int target = q == o0.algebra()->p() ? 1 : 0;
  if (valuation(discrd(oq), q) != target) throw MathError("enlargement is not maximal at q");
}

inline LocalSolution solve_at(const Order& o0, const Int& q, int e, DivisionOracle& oracle,
                              std::mutex* lock, const ComputeOptions& opts = {}) {
  LocalContext ctx(oracle, q, lock);
  const Int& p = o0.algebra()->p();
  std::optional<int> precision = opts.precision_override;
  auto given = opts.enlargements.find(q);
  Order oq = given == opts.enlargements.end() ? q_enlarge(o0, q) : given->second;
  check_enlargement(o0, oq, q);
  if (q == p) return LocalSolution{q, e, false, oq, 0, {}, "", oq, 0, 0, 0, {}, {}};
  long ql = q.get_si();
  if (is_bass_at(o0, q)) {
    BassOutcome b = bass_search(o0, oq, e, ctx, precision);
    long calls = ctx.calls("bass");
    if (calls > bass_budget(e)) throw MathError("Bass search exceeded its oracle budget");
    return LocalSolution{q,           e,      true, b.oq, distance(TreeVertex::root(ql), b.vertex),
                         b.vertex.steps(), b.vertex.label(), b.tilde, 0, 0, calls, ctx.events(), ctx.explored()};
  }
  int r = distance_to_end(oq, e, ctx);
  std::vector<long> path;
  Order tilde = oq;
  std::string label = TreeVertex::root(ql).label();
  if (r > 0) {
    SplittingMap sm = splitting_map(oq, Precision{q, precision.value_or(r)});
    path = find_path_to_end(sm, r, ctx);
    TreeVertex v = TreeVertex::from_path(ql, path);
    label = v.label();
    tilde = global_order_from_vertices(sm, {v});
  }
  long dc = ctx.calls("distance"), pc = ctx.calls("path");
  if (dc > distance_budget(e)) throw MathError("distance search exceeded its oracle budget");
  if (pc > path_budget(r, q)) throw MathError("path search exceeded its oracle budget");
  std::vector<TreeVertex> explored = ctx.explored();
  explored.insert(explored.begin(), TreeVertex::root(ql));
  return LocalSolution{q, e, false, oq, r, path, label, tilde, dc, pc, 0, ctx.events(), explored};
}

/// Checks that the factorization is by primes and multiplies out to discrd(O0).
inline void check_factorization(const Order& o0, const std::vector<std::pair<Int, int>>& fac) {
  Int prod = 1;
  bool has_p = false;
  for (const auto& [q, e] : fac) {
    if (!is_prime(q) || e < 1) throw MathError("factorization entries must be prime powers");
    prod *= pow_int(q, static_cast<unsigned long>(e));
    has_p = has_p || q == o0.algebra()->p();
  }
  if (prod != discrd(o0)) {
    throw MathError("factorization multiplies to " + prod.get_str() + ", but discrd(O0) = " +
                    discrd(o0).get_str());
  }
  if (!has_p) throw MathError("p does not divide discrd(O0)");
}

/// End(E) from O0 contained in it, the factorization of discrd(O0), and a
/// division oracle for End(E).
inline ComputeResult compute_endomorphism_ring(const Order& o0,
                                               const std::vector<std::pair<Int, int>>& fac,
                                               DivisionOracle& oracle,
                                               const ComputeOptions& opts = {}) {
  check_factorization(o0, fac);
  const Int& p = o0.algebra()->p();
  std::vector<std::pair<Int, int>> work;
  for (const auto& [q, e] : fac) {
    if (q == p && e == 1) continue;
    work.emplace_back(q, q == p ? e - 1 : e);
  }
  std::vector<std::optional<LocalSolution>> sols(work.size());
  auto run = [&](std::size_t k, std::mutex* lock) {
    try {
      sols[k] = solve_at(o0, work[k].first, work[k].second, oracle, lock, opts);
    } catch (const MathError& err) {
      throw MathError("at q = " + work[k].first.get_str() + ": " + err.what());
    }
  };
  long before = oracle.calls();
  if (opts.parallel && work.size() > 1) {
    std::mutex lock;
    std::vector<std::exception_ptr> errors(work.size());
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < work.size(); ++k) {
      threads.emplace_back([&, k] {
        try {
          run(k, &lock);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t k = 0; k < work.size(); ++k) {
      run(k, nullptr);
    }
  }
  ComputeResult res{o0, {}, oracle.calls() - before};
  Lattice4 acc = o0.lattice();
  for (auto& s : sols) {
    if (opts.trace)
      for (const auto& ev : s->events) opts.trace(ev);
    acc = sum(acc, s->tilde.lattice());
    res.locals.push_back(std::move(*s));
  }
  Order end = verify_order(acc, o0.algebra());
  if (discrd(end) != p) {
    throw MathError("glued order has discrd " + discrd(end).get_str() + ", expected " + p.get_str());
  }
  res.end = end;
  return res;
}

/// Orders in M_2(Q) written in the coordinates (x11, x12, x21, x22).
namespace matrix_model {

inline Vec4 flatten(const std::array<std::array<Rat, 2>, 2>& m) { return {m[0][0], m[0][1], m[1][0], m[1][1]}; }

/// T^{-1} M_2(Z) T for the vertex T.
inline Lattice4 vertex_order(const TreeVertex& v) {
  Mat2 t = v.matrix();
  Mat2 adj = adjugate(t);
  Rat det = Rat(t[0][0] * t[1][1] - t[0][1] * t[1][0]);
  std::vector<Vec4> gens;
  for (int u = 0; u < 4; ++u) {
    Mat2 e = mat2(0, 0, 0, 0);
    e[u / 2][u % 2] = 1;
    Mat2 y = mul(mul(adj, e), t);
    std::array<std::array<Rat, 2>, 2> r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r[i][j] = Rat(y[i][j]) / det;
    gens.push_back(flatten(r));
  }
  return Lattice4::from_generators(std::span<const Vec4>(gens));
}

inline Lattice4 intersection(const std::vector<TreeVertex>& vs) {
  if (vs.empty()) throw MathError("no vertices given");
  Lattice4 acc = vertex_order(vs[0]);
  for (std::size_t k = 1; k < vs.size(); ++k) acc = intersect(acc, vertex_order(vs[k]));
  return acc;
}

/// Z + q^r L.
inline Lattice4 scalar_plus(const Lattice4& l, const Int& q, int r) {
  std::vector<Vec4> gens{Vec4{1, 0, 0, 1}};
  for (const auto& c : l.scaled(Rat(pow_int(q, static_cast<unsigned long>(r)))).columns()) gens.push_back(c);
  return Lattice4::from_generators(std::span<const Vec4>(gens));
}

/// Reduced discriminant of an order of M_2(Q), relative to M_2(Z).
inline Rat discrd(const Lattice4& l) { return abs(l.determinant()); }

inline bool contained_in_vertex(const Lattice4& l, const TreeVertex& v) {
  return is_sublattice(l, vertex_order(v));
}

}  // namespace matrix_model

}  // namespace endoring

// Acceptance suite: one PASS/FAIL line per criterion.

#include <endoring/endoring.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

#include "lattice_oracle.hpp"
#include "example103.hpp"
#include "planted.hpp"
#include "tree_oracle.hpp"

using namespace endoring;
namespace mm = endoring::matrix_model;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail << "failed: " << what << "; ";
    }
  }
};

int failures = 0;

void criterion(const std::string& id, const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome out;
  auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail << "exception: " << e.what() << "; ";
  }
  if (!out.ok) ++failures;
  std::cout << (out.ok ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << seconds_since(t0) << " s) "
            << out.detail.str() << std::endl;
}

bool within_budgets(const LocalSolution& s) {
  return s.distance_calls <= distance_budget(s.e) && s.path_calls <= path_budget(s.r, s.q) &&
         s.bass_calls <= bass_budget(s.e);
}

std::vector<std::pair<Int, int>> fac103() { return {{Int(7), 5}, {Int(13), 3}, {Int(103), 1}}; }

std::vector<LocalSolution> budget_log;

planted::Instance planted_instance(int k, std::mt19937_64& rng) {
  const Int ps[] = {Int(103), Int(179), Int(1019)};
  const long qs[] = {2, 3, 5, 7, 13};
  std::vector<long> primes{qs[k % 5]};
  if (k % 2) primes.push_back(qs[(k + 2) % 5]);
  return planted::make(ps[k % 3], primes, rng, 4);
}

}  // namespace

int main() {
  std::cout << std::fixed;
  std::cout.precision(2);

  criterion("1", "worked example p=103 reproduces End(E)", [](Outcome& o) {
    auto t0 = Clock::now();
    Order o0 = example103::order(example103::o0_basis());
    Order end = example103::order(example103::end_basis());
    HiddenOrderOracle oracle(end);
    ComputeResult res = compute_endomorphism_ring(o0, fac103(), oracle);
    o.require(res.end.lattice() == end.lattice(), "HNF equality with End(E)");
    o.require(discrd(res.end) == 103, "discrd 103");
    o.require(!is_bass_at(o0, Int(7)), "not Bass at 7");
    o.require(is_bass_at(o0, Int(13)), "Bass at 13");
    o.require(res.locals.size() == 2 && res.locals[0].r == 1 && !res.locals[0].bass, "r = 1 at 7");
    o.require(res.locals.size() == 2 && res.locals[1].bass, "Bass branch at 13");
    for (const auto& s : res.locals) budget_log.push_back(s);

    // With the displayed local enlargements End(E) sits at the identity
    // vertex at 13.
    HiddenOrderOracle oracle2(end);
    ComputeOptions opts;
    opts.enlargements.emplace(Int(7), example103::order(example103::o7_basis()));
    opts.enlargements.emplace(Int(13), example103::order(example103::o13_basis()));
    ComputeResult res2 = compute_endomorphism_ring(o0, fac103(), oracle2, opts);
    o.require(res2.end.lattice() == end.lattice(), "HNF equality with given enlargements");
    o.require(res2.locals[0].r == 1, "r = 1 at 7 from the displayed O_7");
    o.require(res2.locals[1].vertex == "(0,0,0)", "identity vertex at 13");
    for (const auto& s : res2.locals) budget_log.push_back(s);
    double t = seconds_since(t0);
    o.require(t < 10.0, "runtime under 10 s");
    o.detail << "calls " << res.oracle_calls << "/" << res2.oracle_calls << ", vertex at 13 "
             << res.locals[1].vertex << " (default) " << res2.locals[1].vertex << " (displayed O_13)";
  });

  criterion("2", "50 planted instances recovered exactly", [](Outcome& o) {
    auto t0 = Clock::now();
    std::mt19937_64 rng(12345);
    int recovered = 0;
    for (int k = 0; k < 50; ++k) {
      auto inst = planted_instance(k, rng);
      HiddenOrderOracle oracle(inst.hidden);
      ComputeResult res = compute_endomorphism_ring(inst.o0, inst.factorization, oracle);
      if (res.end.lattice() == inst.hidden.lattice()) ++recovered;
      for (const auto& s : res.locals) budget_log.push_back(s);
    }
    o.require(recovered == 50, "all instances recovered");
    o.require(seconds_since(t0) < 120.0, "runtime under 2 minutes");
    o.detail << recovered << "/50 recovered";
  });

  criterion("3", "oracle budgets in every run of 1 and 2", [](Outcome& o) {
    int bad = 0;
    for (const auto& s : budget_log) bad += !within_budgets(s);
    o.require(!budget_log.empty(), "runs recorded");
    o.require(bad == 0, "all local runs within budget");
    o.detail << budget_log.size() << " local runs, " << bad << " over budget";
  });

  std::vector<std::pair<long, std::vector<TreeVertex>>> sets;
  {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 240; ++k) {
      long q = k % 2 ? 3 : 2;
      sets.emplace_back(q, tree_oracle::random_set(q, rng, 3, 6));
    }
  }

  criterion("4", "2 v_q(discrd) = d3 on random vertex sets", [&](Outcome& o) {
    int agree = 0;
    for (const auto& [q, s] : sets) agree += 2 * tree_oracle::qval_discrd(mm::intersection(s), q) == d3(s);
    o.require(agree == static_cast<int>(sets.size()), "all sets agree");
    o.detail << agree << "/" << sets.size() << " sets";
  });

  criterion("5", "intersection over tu_triple and add-a-vertex dichotomy", [&](Outcome& o) {
    int triple_ok = 0, checked = 0, dichotomy_bad = 0;
    std::map<long, std::vector<TreeVertex>> balls{{2, ball(TreeVertex::root(2), 5)},
                                                  {3, ball(TreeVertex::root(3), 4)}};
    for (const auto& [q, s] : sets) {
      Lattice4 full = mm::intersection(s);
      auto t = tu_triple(s);
      triple_ok += mm::intersection({t[0], t[1], t[2]}) == full;
      int d = d3(s);
      for (const auto& v : balls[q]) {
        auto s2 = s;
        s2.push_back(v);
        int d2 = d3(s2);
        bool contains = mm::contained_in_vertex(full, v);
        dichotomy_bad += contains ? d2 != d : d2 <= d;
        ++checked;
      }
    }
    o.require(triple_ok == static_cast<int>(sets.size()), "triple intersection equals full intersection");
    o.require(dichotomy_bad == 0, "d3 unchanged exactly for containing vertices");
    o.detail << triple_ok << "/" << sets.size() << " triples, " << checked << " vertex additions";
  });

  criterion("6", "ball_triple intersections contain exactly N_l(P)", [](Outcome& o) {
    std::mt19937_64 rng(6);
    int cases = 0;
    for (long q : {2L, 3L})
      for (int l = 0; l <= 2; ++l)
        for (int card = 1; card <= 3; ++card) {
          auto path = tree_oracle::random_path(TreeVertex::root(q), card, rng);
          auto t = ball_triple(path, l);
          Lattice4 inter = mm::intersection({t[0], t[1], t[2]});
          auto found = tree_oracle::containing(inter, TreeVertex::root(q), 3 * l + card);
          std::ostringstream tag;
          tag << "q=" << q << " l=" << l << " card=" << card;
          o.require(found == tree_oracle::as_set(neighborhood(path, l)), "containing set " + tag.str());
          o.require(tree_oracle::qval_discrd(inter, q) == 3 * l + card - 1, "valuation " + tag.str());
          o.require(d3({t[0], t[1], t[2]}) == 6 * l + 2 * (card - 1), "d3 " + tag.str());
          ++cases;
        }
    o.detail << cases << " cases";
  });

  criterion("7", "Z + q^r Lambda has valuation 3r and contains N_r", [](Outcome& o) {
    int cases = 0;
    for (long q : {2L, 3L, 5L})
      for (int r = 1; r <= 3; ++r)
        for (const auto& v : {TreeVertex::root(q), TreeVertex::root(q).child(1)}) {
          Lattice4 l = mm::scalar_plus(mm::vertex_order(v), Int(q), r);
          std::ostringstream tag;
          tag << "q=" << q << " r=" << r << " v=" << v.label();
          o.require(tree_oracle::qval_discrd(l, q) == 3 * r, "valuation " + tag.str());
          auto found = tree_oracle::containing(l, TreeVertex::root(q), r + 2);
          o.require(found == tree_oracle::as_set(ball(v, r)), "containing set " + tag.str());
          ++cases;
        }
    o.detail << cases << " cases";
  });

  criterion("8", "splitting maps and zero divisors are sound", [](Outcome& o) {
    std::vector<Order> orders{example103::order(example103::end_basis()),
                              example103::order(example103::maximal_basis())};
    std::mt19937_64 rng(8);
    for (long p : {103L, 179L, 1019L}) {
      Order m = planted::standard_maximal(QuaternionAlgebra::standard(p));
      for (int k = 0; k < 2; ++k) orders.push_back(planted::conjugate(m, planted::random_element(m, rng, 2)));
    }
    int maps = 0;
    for (const auto& ord : orders)
      for (long q : {2L, 3L, 5L, 7L, 13L})
        for (int r = 0; r <= 4; ++r) {
          Precision prec{Int(q), r};
          Int md = prec.modulus();
          QuatElement z = zero_divisor_mod(ord, prec);
          o.require(valuation(z.nrd(), Int(q)) >= r + 1, "zero divisor norm valuation");
          SplittingMap sm = splitting_map(ord, prec);
          const auto& alg = *ord.algebra();
          auto b = ord.basis();
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
              o.require(reduce(sm.image(alg.mul(b[i], b[j])), md) == reduce(mul(sm.image(b[i]), sm.image(b[j])), md),
                        "multiplicativity");
          o.require(reduce(sm.image(sm.j_rep()), md) == reduce(mat2(0, 1, 1, 0), md), "image of j'");
          o.require(reduce(sm.image(sm.i_rep()), md) == reduce(q == 2 ? mat2(0, 1, 1, 1) : mat2(1, 0, 0, -1), md),
                    "image of i'");
          for (int t = 0; t < 4; ++t) {
            QuatElement x = planted::random_element(ord, rng, 40);
            Mat2 f = sm.image(x);
            o.require(mod(f[0][0] * f[1][1] - f[0][1] * f[1][0], md) == reduce_mod(x.nrd(), md), "det = nrd");
          }
          ++maps;
        }
    o.detail << maps << " maps";
  });

  criterion("9", "lattice duality and brute-force intersections", [](Outcome& o) {
    std::mt19937_64 rng(9);
    int dual_ok = 0, demorgan_ok = 0, brute_ok = 0;
    for (int k = 0; k < 200; ++k) {
      Lattice4 x = lattice_oracle::random_lattice(rng, 9), y = lattice_oracle::random_lattice(rng, 9);
      dual_ok += dual(dual(x)) == x;
      demorgan_ok += dual(intersect(x, y)) == sum(dual(x), dual(y)) && dual(sum(x, y)) == intersect(dual(x), dual(y));
    }
    for (int k = 0; k < 500; ++k) {
      auto x = lattice_oracle::random_sublattice(rng, 16), y = lattice_oracle::random_sublattice(rng, 16);
      brute_ok += lattice_oracle::agrees(x, y);
    }
    o.require(dual_ok == 200, "dual of dual");
    o.require(demorgan_ok == 200, "intersect/sum duality");
    o.require(brute_ok == 500, "brute-force intersection agreement");
    o.detail << dual_ok << "/200 dual, " << demorgan_ok << "/200 duality, " << brute_ok << "/500 brute force";
  });

  criterion("10", "division planner invariants on 500 random triples", [](Outcome& o) {
    std::mt19937_64 rng(10);
    const long ps[] = {103, 179, 1019, 2, 3, 5, 7, 11, 13, 1000003};
    std::uniform_int_distribution<unsigned long> nd(1, 1024);
    double worst = 0;
    int good = 0;
    for (int k = 0; k < 500; ++k) {
      Int n(nd(rng));
      Int cap = (Int(1) << 40) / (n * n);
      std::uniform_int_distribution<unsigned long> bd(1, std::max<unsigned long>(1, cap.get_ui()));
      Int big_n(bd(rng));
      auto plan = plan_division(big_n * n * n, n, Int(ps[k % 10]));
      if (!plan) continue;
      double ratio = plan->bound.get_d() / powersmooth_log_bound(big_n, n);
      worst = std::max(worst, ratio);
      good += plan_violation(*plan).empty() && ratio <= kPowersmoothConstant;
    }
    o.require(good == 500, "all plans valid with B <= C log(N^2 n)");
    o.detail << good << "/500 plans, C = " << kPowersmoothConstant << ", worst B/log(N^2 n) = " << worst;
  });

  criterion("smoke", "runtime grows with q at fixed e", [](Outcome& o) {
    std::mt19937_64 rng(11);
    std::vector<double> times;
    std::vector<long> calls;
    for (long q : {2L, 3L, 5L, 7L, 13L}) {
      auto alg = QuaternionAlgebra::standard(1019);
      Order std_max = planted::standard_maximal(alg);
      double total = 0;
      long worst_calls = 0;
      for (int rep = 0; rep < 4; ++rep) {
        Order hidden = planted::conjugate(std_max, planted::random_element(std_max, rng, 2));
        SplittingMap sm = splitting_map(hidden, Precision{Int(q), 3});
        // End(E) three steps from the enlargement: the path search scans up
        // to q + 1 candidates per level.
        TreeVertex v = tree_oracle::random_path(TreeVertex::root(q), 4, rng).back();
        Order oq = verify_order(planted::vertex_piece(sm, v), alg);
        Order o0 = verify_order(intersect(oq.lattice(), hidden.lattice()), alg);
        auto t0 = Clock::now();
        for (int it = 0; it < 3; ++it) {
          HiddenOrderOracle oracle(hidden);
          LocalContext ctx(oracle, Int(q));
          int r = distance_to_end(oq, 3, ctx);
          SplittingMap smq = splitting_map(oq, Precision{Int(q), r});
          auto path = find_path_to_end(smq, r, ctx);
          Order tilde = global_order_from_vertices(smq, {TreeVertex::from_path(q, path)});
          o.require(equal_at(tilde.lattice(), hidden.lattice(), Int(q)), "local answer");
          worst_calls = std::max(worst_calls, ctx.calls());
        }
        total += seconds_since(t0);
      }
      times.push_back(total);
      calls.push_back(worst_calls);
      o.detail << "q=" << q << ": " << total << " s, " << worst_calls << " calls; ";
    }
    o.require(times.back() > times.front(), "time at q=13 exceeds time at q=2");
    o.require(std::is_sorted(calls.begin(), calls.end()), "calls non-decreasing in q");
    o.require(calls.back() > calls.front(), "calls at q=13 exceed calls at q=2");
  });

  std::cout << (failures == 0 ? "ALL PASS" : "SOME FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}

#include <endoring/divide.hpp>

#include <gtest/gtest.h>

#include <random>

#include "example103.hpp"
#include "planted.hpp"

using namespace endoring;

namespace {

/// Trial-division factorization, kept separate from the library sieve.
std::vector<std::pair<Int, int>> trial_factor(Int x) {
  std::vector<std::pair<Int, int>> out;
  for (Int d = 2; d * d <= x; ++d) {
    int e = 0;
    while (x % d == 0) {
      x /= d;
      ++e;
    }
    if (e) out.emplace_back(d, e);
  }
  if (x > 1) out.emplace_back(x, 1);
  return out;
}

bool exceeds_by_float(const Int& m, const Int& x, const Int& y) {
  mpf_class mf(m, 512), xf(x, 512), yf(y, 512);
  return mf > sqrt(xf) + sqrt(yf);
}

}  // namespace

TEST(Divide, DegreePrecheck) {
  EXPECT_FALSE(degree_precheck(112, 7).has_value());
  EXPECT_EQ(degree_precheck(49, 7), Int(1));
  EXPECT_EQ(degree_precheck(60, 2), Int(15));
  EXPECT_THROW(degree_precheck(0, 1), MathError);
}

TEST(Divide, PowersmoothOffsetExamples) {
  auto o = powersmooth_offset(15, 103, 2);
  EXPECT_EQ(o.n_plus_a, 77);
  EXPECT_EQ(o.a, 62);
  EXPECT_EQ(o.bound, 11);
  auto t = powersmooth_offset(1, 103, 1);
  EXPECT_EQ(t.n_plus_a, 2);
  EXPECT_EQ(t.a, 1);
  EXPECT_EQ(t.bound, 2);
  // p among the small primes is skipped.
  auto s = powersmooth_offset(100, 3, 1);
  EXPECT_EQ(s.n_plus_a, 7 * 11 * 13);
}

TEST(Divide, FourSquaresExamples) {
  EXPECT_EQ(four_squares(0), (std::array<Int, 4>{0, 0, 0, 0}));
  EXPECT_EQ(four_squares(7), (std::array<Int, 4>{2, 1, 1, 1}));
  EXPECT_EQ(four_squares(103), (std::array<Int, 4>{10, 1, 1, 1}));
  EXPECT_THROW(four_squares(-1), MathError);
  for (long a = 0; a < 3000; ++a) {
    auto s = four_squares(a);
    EXPECT_EQ(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3], a);
    EXPECT_TRUE(s[0] >= s[1] && s[1] >= s[2] && s[2] >= s[3] && s[3] >= 0);
  }
}

TEST(Divide, ChooseM) {
  EXPECT_EQ(primorial_above(Rat(10)), 30);
  EXPECT_EQ(primorial_above(Rat(1)), 2);
  EXPECT_EQ(primorial_above(Rat(6)), 30);
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<unsigned long> d(1, 1ul << 40);
  for (int k = 0; k < 300; ++k) {
    Int deg(d(rng)), n(d(rng) % 1024 + 1), npa(d(rng) % 100000 + 1);
    Int m = choose_M(deg, n, npa);
    EXPECT_TRUE(exceeds_by_float(m, deg, n * n * npa));
    auto f = trial_factor(m);
    for (const auto& [ell, e] : f) EXPECT_EQ(e, 1);
    // Dropping the largest prime falls below the bound.
    EXPECT_FALSE(exceeds_by_float(m / f.back().first, deg, n * n * npa));
  }
}

TEST(Divide, ExactSqrtComparison) {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<unsigned long> d(1, 1ul << 40), mdist(1, 3000000);
  for (int k = 0; k < 2000; ++k) {
    Int x(d(rng)), y(d(rng)), m(mdist(rng));
    EXPECT_EQ(exceeds_sqrt_sum(m, x, y), exceeds_by_float(m, x, y)) << m << " " << x << " " << y;
  }
  // Equality is not "exceeds": 5 = sqrt(9) + sqrt(4).
  EXPECT_FALSE(exceeds_sqrt_sum(5, 9, 4));
  EXPECT_TRUE(exceeds_sqrt_sum(6, 9, 4));
}

TEST(Divide, DegreeBoundCheck) {
  EXPECT_TRUE(degree_bound_check({{5, 0}, {0, 5}}, 5));
  EXPECT_FALSE(degree_bound_check({{6, 0}, {-1, 5}}, 5));
  EXPECT_FALSE(degree_bound_check({{4, 0}, {0, 5}}, 5));
  auto s = four_squares(103);
  IntMatrix sq(4, std::vector<Int>(4));
  IntMatrix a = alpha_matrix(s);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) sq[i][j] = a[i][j] * a[i][j];
  EXPECT_TRUE(degree_bound_check(sq, 103));
}

TEST(Divide, PlanExamples) {
  auto k = plan_division(60, 2, 103);
  ASSERT_TRUE(k.has_value());
  EXPECT_EQ(k->big_n, 15);
  EXPECT_EQ(k->n_plus_a, 77);
  EXPECT_EQ(k->squares, (std::array<Int, 4>{7, 3, 2, 0}));
  EXPECT_EQ(plan_violation(*k), "");
  EXPECT_FALSE(plan_division(112, 7, 103).has_value());
}

TEST(Divide, RandomPlansSatisfyInvariants) {
  std::mt19937_64 rng(53);
  const long ps[] = {103, 179, 1019, 2, 3, 5, 7, 11, 13, 1000003};
  std::uniform_int_distribution<unsigned long> nd(1, 1024);
  double worst = 0;
  for (int k = 0; k < 500; ++k) {
    Int n(nd(rng));
    Int cap = (Int(1) << 40) / (n * n);
    if (cap < 1) cap = 1;
    std::uniform_int_distribution<unsigned long> bd(1, cap.get_ui());
    Int big_n(bd(rng));
    Int p(ps[k % 10]);
    auto plan = plan_division(big_n * n * n, n, p);
    ASSERT_TRUE(plan.has_value());
    EXPECT_EQ(plan_violation(*plan), "");
    const auto& s = plan->squares;
    EXPECT_EQ(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3], plan->a);
    EXPECT_EQ(gcd(plan->n_plus_a, p * big_n * n), 1);
    for (const auto& [ell, e] : trial_factor(plan->n_plus_a)) {
      EXPECT_EQ(e, 1);
      EXPECT_LE(ell, plan->bound);
    }
    EXPECT_TRUE(exceeds_by_float(plan->m, plan->deg_beta, n * n * plan->n_plus_a));
    double ratio = plan->bound.get_d() / powersmooth_log_bound(big_n, n);
    worst = std::max(worst, ratio);
    EXPECT_LE(ratio, kPowersmoothConstant);
  }
  RecordProperty("worst_bound_ratio", std::to_string(worst));
}

TEST(Divide, OracleExample) {
  Order end = example103::order(example103::end_basis());
  HiddenOrderOracle oracle(end);
  auto alg = end.algebra();
  QuatElement beta(alg, Vec4{0, Rat(-7, 2), -7, Rat(-7, 2)});
  ASSERT_TRUE(end.contains(beta));
  EXPECT_FALSE(oracle.is_divisible(beta, 7));
  EXPECT_EQ(oracle.calls(), 1);
  std::mt19937_64 rng(54);
  for (int k = 0; k < 20; ++k) {
    QuatElement x = planted::random_element(end, rng, 30);
    EXPECT_TRUE(oracle.is_divisible(Rat(7) * x, 7));
    EXPECT_TRUE(oracle.is_divisible(Rat(49) * x, 7));
    EXPECT_TRUE(oracle.is_divisible(x, 1));
  }
  EXPECT_EQ(oracle.calls(), 61);
}

TEST(Divide, OracleDeterminismAndCounter) {
  Order end = example103::order(example103::end_basis());
  long hooked = 0;
  HiddenOrderOracle oracle(end, [&](const QuatElement&, const Int&, bool, long c) { hooked = c; });
  QuatElement x(end.algebra(), end.basis()[1]);
  bool first = oracle.is_divisible(Rat(3) * x, 9);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(oracle.is_divisible(Rat(3) * x, 9), first);
  EXPECT_EQ(oracle.calls(), 11);
  EXPECT_EQ(hooked, 11);
}

TEST(Divide, OraclePreconditions) {
  Order end = example103::order(example103::end_basis());
  HiddenOrderOracle oracle(end);
  QuatElement outside(end.algebra(), Vec4{Rat(1, 3), 0, 0, 0});
  EXPECT_THROW(oracle.is_divisible(outside, 2), OraclePreconditionError);
  EXPECT_THROW(oracle.is_divisible(QuatElement::scalar(end.algebra(), 1), 0), OraclePreconditionError);
  EXPECT_EQ(oracle.calls(), 0);
}

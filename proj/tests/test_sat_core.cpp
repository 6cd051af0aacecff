#include "hiddensat/sat_core.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hsat;

TEST(Rational, ParseRoundTrip) {
  EXPECT_EQ(parse_rational("3/4"), Rational(3, 4));
  EXPECT_EQ(parse_rational("1"), Rational(1));
  EXPECT_EQ(to_string(Rational(2, 4)), "1/2");
}

TEST(Violation, ProductOfFalseProbabilities) {
  Clause c{1, {pos(1), neg(2)}};
  FractionalAssignment a(2);
  a[1] = Rational(1, 4);
  a[2] = Rational(1, 3);
  EXPECT_EQ(violation_probability(c, a), Rational(3, 4) * Rational(1, 3));
}

TEST(Violation, MissingVariableThrows) {
  Clause c{1, {pos(3)}};
  EXPECT_THROW(violation_probability(c, FractionalAssignment(2)), DomainError);
}

TEST(Violation, BooleanAgreesWithFractional) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    CnfFormula f = random_ksat(5, 3, 6, true, rng);
    for (std::uint64_t bits = 0; bits < 32; ++bits) {
      auto x = BoolAssignment::from_bits(5, bits);
      for (const auto &c : f.clauses)
        ASSERT_EQ(clause_violated(c, x), violation_probability(c, x.as_fractional()) == Rational(1));
    }
  }
}

TEST(Obscures, StrictSubsetOnly) {
  Clause a{1, {pos(1)}}, b{2, {pos(1), neg(2)}}, c{3, {neg(1), neg(2)}};
  EXPECT_TRUE(obscures(a, b));
  EXPECT_FALSE(obscures(b, a));
  EXPECT_FALSE(obscures(a, a));
  EXPECT_FALSE(obscures(a, c));
}

TEST(Formula, RejectsRepetitionWhenForbidden) {
  EXPECT_THROW(CnfFormula::make(2, 2, {{pos(1)}, {pos(1)}}, false), DomainError);
  EXPECT_NO_THROW(CnfFormula::make(2, 2, {{pos(1)}, {pos(1)}}, true));
  EXPECT_THROW(CnfFormula::make(2, 1, {{pos(1), pos(2)}}), DomainError);
}

TEST(TwoSat, AgreesWithBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    int n = 1 + trial % 9;
    int m = 1 + static_cast<int>(rng() % (3 * n));
    CnfFormula f = random_ksat(n, 2, m, true, rng);
    SolveResult fast = two_sat_solve(f), slow = brute_force_solve(f);
    ASSERT_EQ(fast.sat, slow.sat);
    if (fast.sat)
      ASSERT_TRUE(evaluate(f, fast.assignment));
  }
}

TEST(TwoSat, RejectsWideClauses) {
  EXPECT_THROW(two_sat_solve(CnfFormula::make(3, 3, {{pos(1), pos(2), pos(3)}})), DomainError);
}

TEST(Dimacs, RoundTrip) {
  std::mt19937_64 rng(3);
  CnfFormula f = random_ksat(6, 3, 10, true, rng);
  std::stringstream ss;
  write_dimacs(ss, f);
  CnfFormula g = parse_dimacs(ss, 3);
  ASSERT_EQ(g.m(), f.m());
  for (int id = 1; id <= f.m(); ++id)
    EXPECT_EQ(g.clause(id).literals, f.clause(id).literals);
}

TEST(Dimacs, CountMismatchThrows) {
  std::stringstream ss("p cnf 2 2\n1 0\n");
  EXPECT_THROW(parse_dimacs(ss), DomainError);
}

TEST(Equivalent, DetectsDifference) {
  auto a = CnfFormula::make(2, 2, {{pos(1), pos(2)}});
  auto b = CnfFormula::make(2, 2, {{pos(2), pos(1)}, {pos(1), pos(2)}});
  auto c = CnfFormula::make(2, 2, {{pos(1)}});
  EXPECT_TRUE(equivalent(a, b));
  EXPECT_FALSE(equivalent(a, c));
}

TEST(Generators, WidesatHasFullWidthDistinctClauses) {
  std::mt19937_64 rng(5);
  CnfFormula f = random_widesat(6, 3, rng);
  ASSERT_EQ(f.m(), 3);
  for (const auto &c : f.clauses)
    EXPECT_EQ(c.literals.size(), 6u);
  EXPECT_FALSE(f.clause(1).same_type(f.clause(2)));
}

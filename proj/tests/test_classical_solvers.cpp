#include "hiddensat/classical_solvers.hpp"

#include <gtest/gtest.h>

using namespace hsat;

namespace {

// ids whose type is exactly t, computed from the escrowed formula
std::vector<int> ids_of_type(const CnfFormula &f, const std::vector<Literal> &t) {
  std::vector<int> ids;
  for (const auto &c : f.clauses)
    if (c.literals == t)
      ids.push_back(c.id);
  return ids;
}

CnfFormula with_contradiction(CnfFormula f, int var) {
  std::vector<std::vector<Literal>> types;
  for (const auto &c : f.clauses)
    types.push_back(c.literals);
  types.push_back({pos(var)});
  types.push_back({neg(var)});
  return CnfFormula::make(f.n, f.k, types, true);
}

} // namespace

TEST(Catalog, CountsAndOrder) {
  EXPECT_EQ(ClauseTypeCatalog(8, 3).size(), 576u);
  EXPECT_EQ(ClauseTypeCatalog::count(8, 3), 576);
  ClauseTypeCatalog c(3, 2);
  EXPECT_EQ(c.types().front().size(), 1u);
  EXPECT_EQ(c.types().back().size(), 2u);
}

TEST(AllViolated, RecoversExactMapOnUnsatInstances) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    int k = 1 + trial % 3, n = 3 + trial % 6, m = 2 + trial % 18;
    CnfFormula f = with_contradiction(random_ksat(n, k, m - 2, true, rng), 1 + trial % n);
    HiddenFormula o(f, TieBreakPolicy::lowest());
    AllViolatedResult r = learn_all_violated(o, n, k, f.m());
    ASSERT_FALSE(r.sat);
    ASSERT_LE(r.queries, r.bound);
    int covered = 0;
    ClauseTypeCatalog catalog(n, k);
    for (const auto &t : catalog.types()) {
      auto expect = ids_of_type(f, t);
      auto it = r.type_ids.find(t);
      auto got = it == r.type_ids.end() ? std::vector<int>{} : it->second;
      ASSERT_EQ(got, expect);
      covered += got.size();
    }
    ASSERT_EQ(covered, f.m());
  }
}

TEST(AllViolated, SatAnswerIsGenuine) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 40; ++trial) {
    CnfFormula f = random_ksat(6, 3, 5, true, rng, true);
    HiddenFormula o(f, TieBreakPolicy::lowest());
    AllViolatedResult r = learn_all_violated(o, 6, 3, 5);
    if (r.sat)
      ASSERT_TRUE(evaluate(f, r.assignment));
    else
      ASSERT_FALSE(brute_force_solve(f).sat);
  }
}

TEST(Widesat, LearnsEquivalentFormulaWithinBound) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + trial % 6, m = 1 + trial % 3;
    CnfFormula f = random_widesat(n, m, rng);
    for (auto pol : {TieBreakPolicy::lowest(), TieBreakPolicy::highest()}) {
      HiddenFormula o(f, pol);
      WidesatResult r = learn_widesat(o, n, m);
      ASSERT_LE(r.queries, r.bound);
      ASSERT_TRUE(equivalent(r.formula.to_cnf(), f));
    }
  }
}

TEST(Hsat1, DecisionMatchesBruteForceUnderAllPolicies) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 1 + trial % 10, m = 1 + trial % 20;
    CnfFormula f = random_ksat(n, 1, m, true, rng);
    bool truth = brute_force_solve(f).sat;
    for (auto pol : {TieBreakPolicy::lowest(), TieBreakPolicy::highest(),
                     TieBreakPolicy::random(trial), TieBreakPolicy::hashed_script(trial)}) {
      HiddenFormula o(f, pol);
      Hsat1Result r = solve_hsat1(o, n, m);
      ASSERT_EQ(r.sat, truth);
      if (r.sat)
        ASSERT_TRUE(evaluate(f, r.assignment));
      ASSERT_LE(r.queries, r.bound);
      for (size_t i = 0; i + 1 < r.lists.size(); ++i)
        ASSERT_LE(static_cast<int>(r.lists[i].size()), m);
      ASSERT_LE(static_cast<int>(r.lists.back().size()), 2 * m);
      if (!truth)
        continue;
      for (const auto &list : r.lists) {
        bool good = std::any_of(list.begin(), list.end(), [&](const auto &y) {
          CnfFormula g = f;
          for (size_t v = 0; v < y.size(); ++v)
            g.clauses.push_back({g.m() + 1, {{static_cast<int>(v + 1), y[v] == 0}}});
          return brute_force_solve(g).sat;
        });
        ASSERT_TRUE(good);
      }
    }
  }
}

TEST(Hsat1, Prop5PairBothUnsat) {
  for (auto f : {prop5_phi1(), prop5_phi2()}) {
    HiddenFormula o(f, TieBreakPolicy::prop5());
    EXPECT_FALSE(solve_hsat1(o, 2, 4).sat);
  }
}

TEST(Hsat1, SingleUnit) {
  HiddenFormula o(CnfFormula::make(3, 1, {{pos(3)}}), TieBreakPolicy::lowest());
  Hsat1Result r = solve_hsat1(o, 3, 1);
  ASSERT_TRUE(r.sat);
  EXPECT_TRUE(r.assignment[3]);
}

TEST(Detect, PresentImpliesContainedType) {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 40; ++trial) {
    CnfFormula f = random_ksat(6, 2, 8, false, rng);
    HiddenFormula o(f, TieBreakPolicy::highest());
    ClauseTypeCatalog catalog(6, 2);
    for (const auto &t : catalog.types()) {
      Detection d = detect_clause(o, t, true);
      if (d.kind == Detection::Kind::Present) {
        const auto &lits = f.clause(d.id).literals;
        ASSERT_TRUE(std::includes(t.begin(), t.end(), lits.begin(), lits.end()));
      }
    }
  }
}

TEST(Hsat2, RepetitionFreeDecisionAndEquivalence) {
  std::mt19937_64 rng(26);
  for (int trial = 0; trial < 120; ++trial) {
    int n = 2 + trial % 8, m = 1 + static_cast<int>(rng() % (2 * n));
    CnfFormula f = random_ksat(n, 2, m, false, rng);
    bool truth = brute_force_solve(f).sat;
    for (auto pol : {TieBreakPolicy::lowest(), TieBreakPolicy::hashed_script(trial)}) {
      HiddenFormula o(f, pol);
      Learn2SatResult r = learn_equivalent_2sat(o, n);
      ASSERT_EQ(r.satisfiable, truth) << trial;
      ASSERT_TRUE(equivalent(r.formula.to_cnf(), f)) << trial;
    }
  }
}

TEST(Hsat2, ContradictoryCoreIsUnsat) {
  CnfFormula f = CnfFormula::make(4, 2, {{pos(1), pos(2)}, {neg(1), neg(2)}, {pos(3)}, {neg(3)}}, false);
  HiddenFormula o(f, TieBreakPolicy::lowest());
  Hsat2Result r = solve_hsat2_repfree(o, 4);
  EXPECT_FALSE(r.sat);
}

TEST(Hsat2, SidecarListsOracleIds) {
  CnfFormula f = CnfFormula::make(4, 2, {{pos(1), neg(2)}, {pos(3)}}, false);
  HiddenFormula o(f, TieBreakPolicy::lowest());
  Learn2SatResult r = learn_equivalent_2sat(o, 4);
  EXPECT_TRUE(r.satisfiable);
  EXPECT_NE(r.formula.sidecar_json().find("oracle_ids"), std::string::npos);
  EXPECT_TRUE(equivalent(r.formula.to_cnf(), f));
}

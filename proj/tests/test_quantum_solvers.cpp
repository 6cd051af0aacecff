#include "hiddensat/quantum_solvers.hpp"

#include <gtest/gtest.h>

using namespace hsat;

namespace {

QsatInstance one_local(int n, int m, std::uint64_t seed, bool satisfiable = true) {
  InstanceSpec spec;
  spec.n = n;
  spec.epsilon = 0.125;
  spec.satisfiable = satisfiable;
  for (int k = 0; k < m; ++k)
    spec.sites.push_back(1 + k % n);
  return generate_instance(spec, seed);
}

// every projector's forbidden state has overlap at most 1/2 with the proposed qubit state
bool good(const QsatInstance &inst, const std::vector<Vec2> &y) {
  for (const auto &p : inst.projectors)
    if (std::norm(p.basis()[0].dot(y[p.qubits()[0] - 1])) > 0.5 + 1e-12)
      return false;
  return true;
}

double escrow_distance(const QsatInstance &inst, const ApproxProjector &a) {
  return frobenius_distance(a.to_projector().matrix(), inst.projector(a.id).matrix());
}

} // namespace

TEST(Hqsat1List, EmptyInstanceShortCircuits) {
  QsatInstance inst;
  inst.n = 3;
  inst.epsilon = 0.125;
  HiddenQsat o(inst);
  auto list = build_list_hqsat1(o, std::vector<Vec2>(3, Vec2(1, 0)));
  ASSERT_TRUE(list.sat.has_value());
  EXPECT_EQ(o.transcript().total(), 1);
  EXPECT_TRUE(solve_hqsat1(o, 3, 0, 0.125).sat);
}

TEST(Hqsat1List, SingleProjectorOnZero) {
  QsatInstance inst;
  inst.n = 3;
  inst.epsilon = 0.125;
  inst.projectors.push_back(Projector::from_basis(1, {1}, {Eigen::VectorXcd::Unit(2, 0)}));
  HiddenQsat o(inst);
  auto list = build_list_hqsat1(o, std::vector<Vec2>(3, Vec2(1, 0)));
  if (list.sat) {
    EXPECT_NEAR(list.sat->reduce(1)(1, 1).real(), 1.0, 1e-12);
    return;
  }
  bool found = std::any_of(list.states.begin(), list.states.end(), [](const auto &y) { return std::abs(y[0](1)) > 1 - 1e-12; });
  EXPECT_TRUE(found);
}

TEST(Hqsat1List, ContainsGoodStateUnderEveryPolicy) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    int n = 1 + seed % 4, m = 1 + (seed / 4) % 4;
    auto inst = one_local(n, m, seed);
    std::vector<Vec2> basis;
    for (int q = 0; q < n; ++q)
      basis.push_back(random_state(2, rng));
    for (auto policy : {QTieBreak::lowest(), QTieBreak::highest(), QTieBreak::random(seed), QTieBreak::scripted(seed)}) {
      HiddenQsat o(inst, {policy});
      auto list = build_list_hqsat1(o, basis);
      if (list.sat)
        continue;
      EXPECT_LE(list.states.size(), static_cast<size_t>(2 * m * n));
      bool any = std::any_of(list.states.begin(), list.states.end(), [&](const auto &y) { return good(inst, y); });
      EXPECT_TRUE(any) << "seed " << seed << " policy " << policy.name();
    }
  }
}

TEST(Hqsat1, NoInstancesAreUnsatWithinBudget) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    QsatInstance inst;
    try {
      inst = one_local(1 + seed % 2, 2 + seed % 2, 100 + seed, false);
    } catch (const QuantumDomainError &) {
      continue;
    }
    HiddenQsat o(inst);
    auto r = solve_hqsat1(o, inst.n, inst.m(), 0.125);
    EXPECT_FALSE(r.sat);
    EXPECT_LE(r.trials, r.bound);
  }
}

TEST(Hqsat1, RegionsContainForbiddenStatesAlongGoodBranch) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = one_local(2, 2, seed);
    HiddenQsat o(inst);
    Hqsat1Options opts;
    opts.descend_filter = [&](const std::vector<Vec2> &y) { return good(inst, y); };
    auto r = solve_hqsat1(o, 2, 2, 0.125, opts);
    if (r.sat) {
      for (double e : escrow::energies(inst, r.state))
        EXPECT_LE(e, 2 * 0.125 * 0.125 + 1e-9);
      continue;
    }
    ASSERT_FALSE(r.first_leaf_constraints.empty());
    for (const auto &p : inst.projectors)
      for (const auto &c : r.first_leaf_constraints[p.qubits()[0] - 1])
        EXPECT_LE(std::norm(p.basis()[0].dot(c)), 0.5 + 1e-12);
  }
}

TEST(Test1, ExactAndOrthogonalCandidates) {
  InstanceSpec spec;
  spec.n = 4;
  spec.edges = {{1, 2}, {3, 4}};
  auto inst = generate_instance(spec, 21);
  HiddenQsat o(inst);
  Test1Schedule s;
  s.nu = 0.25;
  s.full = &full_two_qubit_net(0.5);
  s.full_pairs = {{3, 4}};
  Vec4 psi = inst.projector(1).basis()[0];
  auto yes = test1(o, {1, 2}, psi, 1.0 / 32, s);
  EXPECT_TRUE(yes.yes);
  EXPECT_EQ(yes.id, 1);
  auto no = test1(o, {1, 2}, orthogonal(psi), 1.0 / 32, s);
  EXPECT_FALSE(no.yes);
  Test1Schedule wide = s;
  wide.nu = 0.7;
  EXPECT_THROW(test1(o, {1, 2}, psi, 1.0 / 32, wide), QuantumDomainError);
}

TEST(Learner, PathInstanceWithinTarget) {
  InstanceSpec spec;
  spec.n = 5;
  spec.edges = {{1, 2}, {2, 3}, {3, 4}, {4, 5}};
  spec.require_non_star = true;
  auto inst = generate_instance(spec, 4);
  HiddenQsat o(inst);
  double delta0 = 1 / std::sqrt(8.0);
  LearnerParams params;
  long calls = 0;
  params.on_test1 = [&](const Test1Call &) { ++calls; };
  auto r = learn_hqsat2(o, params);
  ASSERT_EQ(r.status, LearnResult::Status::Learned) << r.reason;
  ASSERT_EQ(r.learned.size(), 4u);
  EXPECT_EQ(calls, r.test1_calls);
  for (const auto &a : r.learned) {
    EXPECT_LE(escrow_distance(inst, a), 0.05);
    for (const auto &h : a.history) {
      EXPECT_NEAR(h.radius, delta0 / std::pow(2.0, h.round), 1e-12);
      double d = frobenius_distance(Projector::from_basis(a.id, {a.pair.first, a.pair.second}, h.basis).matrix(),
                                    inst.projector(a.id).matrix());
      EXPECT_LE(d, h.radius);
    }
  }
  double e0 = ground_energy(inst), e1 = ground_energy(r.hamiltonian(inst.n, inst.epsilon));
  EXPECT_LE(std::abs(e0 - e1), inst.m() * 0.05);
  EXPECT_EQ(r.absent.size() + r.learned.size(), 10u);
}

TEST(Learner, StarLikeIsNotLearnable) {
  QsatInstance inst;
  inst.n = 4;
  inst.epsilon = 0.05;
  std::mt19937_64 rng(5);
  int id = 0;
  for (QubitPair p : {QubitPair{1, 2}, QubitPair{1, 3}, QubitPair{1, 4}})
    inst.projectors.push_back(Projector::from_basis(++id, {p.first, p.second}, {random_state(4, rng)}));
  HiddenQsat o(inst);
  auto r = learn_hqsat2(o);
  EXPECT_EQ(r.status, LearnResult::Status::NotLearnable);
  EXPECT_EQ(r.reason, "star-like");
}

TEST(Learner, EmptyInstance) {
  QsatInstance inst;
  inst.n = 4;
  inst.epsilon = 0.05;
  HiddenQsat o(inst);
  auto r = learn_hqsat2(o);
  EXPECT_EQ(r.status, LearnResult::Status::Learned);
  EXPECT_TRUE(r.learned.empty());
}

TEST(StarAdjacent, WrongShapeIsNotApplicable) {
  InstanceSpec spec;
  spec.n = 4;
  spec.edges = {{1, 2}, {3, 4}};
  spec.epsilon = 0.1;
  auto inst = generate_instance(spec, 8);
  HiddenQsat o(inst);
  LearnerParams p;
  auto r = solve_star_adjacent(o, 0.1, 0.01, p);
  EXPECT_EQ(r.status, StarAdjacentResult::Status::NotApplicable);
}

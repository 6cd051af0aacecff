#include "hiddensat/quantum_core.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace hsat;

namespace {

Projector rank1(int id, std::vector<int> qubits, const Eigen::VectorXcd &s) {
  return Projector::from_basis(id, std::move(qubits), {s});
}

} // namespace

TEST(States, OrthogonalSingleQubit) {
  PureState1Q zero(Vec2(1, 0));
  auto one = orthogonal_1q(zero);
  EXPECT_NEAR(std::abs(one.amp(1)), 1.0, 1e-15);

  auto s = orthogonal_1q(PureState1Q(Vec2(0.6, 0.8)));
  EXPECT_NEAR(s.amp(0).real(), 0.8, 1e-15);
  EXPECT_NEAR(s.amp(1).real(), -0.6, 1e-15);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    Vec2 a = random_state(2, rng);
    EXPECT_LT(std::abs(a.dot(orthogonal(a))), 1e-12);
  }
}

TEST(States, OrthogonalTwoQubit) {
  auto s = canonical_orthogonal_2q(PureState2Q(Vec4(1, 0, 0, 0)));
  EXPECT_NEAR(s.amp(1).real(), 1.0, 1e-15);
  EXPECT_EQ(s.amp.cwiseAbs().sum(), 1.0);

  std::mt19937_64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    Vec4 a = random_state(4, rng);
    Vec4 b = orthogonal(a), c = orthogonal(a);
    EXPECT_LT(std::abs(a.dot(b)), 1e-12);
    EXPECT_NEAR(b.norm(), 1.0, 1e-12);
    EXPECT_EQ(std::memcmp(b.data(), c.data(), sizeof(cd) * 4), 0);
  }
}

TEST(States, RejectsUnnormalised) {
  EXPECT_THROW(PureState1Q(Vec2(1, 1)), QuantumDomainError);
  EXPECT_THROW(PureState2Q(Vec4(0, 0, 0, 0)), QuantumDomainError);
}

TEST(Projectors, ValidationAndRank) {
  EXPECT_THROW(Projector::from_basis(1, {1, 2}, {}), QuantumDomainError);
  EXPECT_THROW(Projector::from_basis(1, {1}, {Eigen::VectorXcd::Unit(2, 0), Eigen::VectorXcd::Unit(2, 1)}),
               QuantumDomainError);
  auto p = Projector::from_basis(1, {1, 2}, {Eigen::VectorXcd::Unit(4, 0), Eigen::VectorXcd::Unit(4, 3)});
  EXPECT_EQ(p.rank(), 2);
  EXPECT_NEAR(p.matrix().trace().real(), 2.0, 1e-12);
  EXPECT_LT((p.matrix() * p.matrix() - p.matrix()).norm(), 1e-12);
}

TEST(Distance, FrobeniusBasics) {
  Eigen::VectorXcd a = Eigen::VectorXcd::Unit(4, 0), b = Eigen::VectorXcd::Unit(4, 2);
  EXPECT_NEAR(frobenius_distance(rank1(1, {1, 2}, a), rank1(2, {1, 2}, a)), 0.0, 1e-15);
  EXPECT_NEAR(frobenius_distance(rank1(1, {1, 2}, a), rank1(2, {1, 2}, b)), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(frobenius_distance(rank1(1, {1}, Eigen::VectorXcd::Unit(2, 0)), rank1(2, {1, 2}, a)),
               QuantumDomainError);
}

TEST(Distance, EnergyIdentityOnRandomPairs) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10000; ++k) {
    Vec4 psi = random_state(4, rng), alpha = random_state(4, rng);
    auto pi = rank1(1, {1, 2}, psi);
    ProductTrialState t = ProductTrialState::mixed(2);
    t.set_pure(1, 2, alpha);
    double d = frobenius_distance(pi, rank1(2, {1, 2}, alpha));
    EXPECT_NEAR(violation_energy(pi, t), 1 - 0.5 * d * d, 1e-10);
  }
}

TEST(Trials, ReduceTo) {
  ProductTrialState t = ProductTrialState::mixed(4);
  EXPECT_LT((t.reduce_to({2, 3}) - Eigen::MatrixXcd::Identity(4, 4) / 4.0).norm(), 1e-15);

  std::mt19937_64 rng(6);
  Vec4 psi = random_state(4, rng), alpha = random_state(4, rng);
  t.set_pure(1, 2, psi);
  Mat4 pp = psi * psi.adjoint();
  EXPECT_LT((t.reduce_to({1, 2}) - Eigen::MatrixXcd(pp)).norm(), 1e-15);

  Vec4 perp = orthogonal(alpha);
  Mat4 want = 0.9 * alpha * alpha.adjoint() + 0.1 * perp * perp.adjoint();
  t.set(3, 4, want);
  EXPECT_LT((t.reduce_to({3, 4}) - Eigen::MatrixXcd(want)).norm(), 1e-14);

  auto cross = t.reduce_to({2, 3});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cross);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_NEAR(cross.trace().real(), 1.0, 1e-10);
  EXPECT_THROW(t.set(2, 3, Mat4::Identity() / 4), QuantumDomainError);
  EXPECT_THROW(t.reduce_to({1, 2, 3}), QuantumDomainError);
}

TEST(Trials, ViolationEnergies) {
  std::mt19937_64 rng(7);
  Vec4 psi = random_state(4, rng);
  auto pi = rank1(1, {1, 2}, psi);
  ProductTrialState t = ProductTrialState::mixed(3);
  EXPECT_NEAR(violation_energy(pi, t), 0.25, 1e-15);
  t.set_pure(1, 2, psi);
  EXPECT_NEAR(violation_energy(pi, t), 1.0, 1e-12);
}

TEST(Nets, BlochCovering) {
  auto pts = bloch_points(0.5);
  EXPECT_LE(pts.size(), 130u);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100000; ++k) {
    Vec2 s = random_state(2, rng);
    double best = 9;
    for (const auto &p : pts)
      best = std::min(best, state_distance(s, p));
    ASSERT_LE(best, 0.5);
  }
}

TEST(Nets, BallPointsStayNearBall) {
  std::mt19937_64 rng(9);
  Vec4 c = random_state(4, rng);
  double radius = 1 / std::sqrt(8.0);
  auto net = build_net(NetSpace::TwoQubit, 0.25, Ball{c, radius});
  for (const auto &p : net.points)
    EXPECT_LE(state_distance(p, c), radius + 0.25 + 1e-12);
  EXPECT_LE(certify_covering(net, 20000, 10), 0.25);
  auto single = ball_net_points(c, 0.0, 0.25);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_NEAR(std::abs(single[0].dot(c)), 1.0, 1e-12);
}

TEST(Nets, ComplementStaysOrthogonal) {
  std::mt19937_64 rng(10);
  Eigen::VectorXcd b = random_state(4, rng);
  for (const auto &p : complement_net({b}, 0.5))
    EXPECT_LT(std::abs(b.dot(p)), 1e-10);
}

TEST(GroundEnergy, Examples) {
  QsatInstance empty;
  empty.n = 2;
  empty.epsilon = 0.1;
  EXPECT_NEAR(ground_energy(empty), 0.0, 1e-8);

  QsatInstance one;
  one.n = 1;
  one.epsilon = 0.1;
  one.projectors.push_back(rank1(1, {1}, Eigen::VectorXcd::Unit(2, 0)));
  EXPECT_NEAR(ground_energy(one), 0.0, 1e-8);

  // diagonal projectors encoding an unsatisfiable classical core: x2 and not x2
  QsatInstance core;
  core.n = 2;
  core.epsilon = 0.1;
  core.projectors.push_back(rank1(1, {1}, Eigen::VectorXcd::Unit(2, 0)));
  core.projectors.push_back(rank1(2, {1, 2}, Eigen::VectorXcd::Unit(4, 2)));
  core.projectors.push_back(rank1(3, {2}, Eigen::VectorXcd::Unit(2, 1)));
  core.projectors.push_back(rank1(4, {2}, Eigen::VectorXcd::Unit(2, 0)));
  core.allow_repetition = true;
  EXPECT_GE(ground_energy(core), 1.0 - 1e-8);
}

TEST(Generator, SatisfiablePath) {
  InstanceSpec spec;
  spec.n = 4;
  spec.edges = {{1, 2}, {2, 3}, {3, 4}};
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_LE(ground_energy(generate_instance(spec, seed)), 1e-9);
}

TEST(Generator, StarRejectedWhenFlagged) {
  InstanceSpec spec;
  spec.n = 4;
  spec.edges = {{1, 2}, {1, 3}, {1, 4}};
  spec.require_non_star = true;
  EXPECT_THROW(generate_instance(spec, 1), QuantumDomainError);
}

TEST(Generator, NoInstanceHasGap) {
  InstanceSpec spec;
  spec.n = 3;
  spec.edges = {{1, 2}, {2, 3}, {1, 3}};
  spec.ranks = {2, 2, 2};
  spec.epsilon = 0.1;
  spec.satisfiable = false;
  auto inst = generate_instance(spec, 2);
  EXPECT_GT(ground_energy(inst), 0.06);
}

TEST(Instances, JsonRoundTrip) {
  InstanceSpec spec;
  spec.n = 5;
  spec.edges = {{1, 2}, {3, 4}, {4, 5}};
  spec.ranks = {2, 1, 3};
  spec.sites = {2};
  auto inst = generate_instance(spec, 11);
  auto back = QsatInstance::from_json(inst.to_json());
  ASSERT_EQ(back.m(), inst.m());
  for (int k = 0; k < inst.m(); ++k) {
    EXPECT_EQ(back.projectors[k].id(), inst.projectors[k].id());
    EXPECT_EQ(back.projectors[k].qubits(), inst.projectors[k].qubits());
    EXPECT_LT((back.projectors[k].matrix() - inst.projectors[k].matrix()).norm(), 1e-12);
  }
  EXPECT_THROW(QsatInstance::from_json("{\"n\": 2}"), std::exception);
}

TEST(Tolerances, Profiles) {
  EXPECT_DOUBLE_EQ(tolerance_profile("").compare, 1e-9);
  EXPECT_DOUBLE_EQ(tolerance_profile("strict").construct, 1e-12);
  EXPECT_DOUBLE_EQ(tolerance_profile("loose").eigen, 1e-6);
  EXPECT_THROW(tolerance_profile("sloppy"), QuantumDomainError);
}

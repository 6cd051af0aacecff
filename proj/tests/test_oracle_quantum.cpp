#include "hiddensat/oracle_quantum.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <algorithm>
#include <set>

using namespace hsat;

namespace {

QsatInstance path_instance(std::uint64_t seed) {
  InstanceSpec spec;
  spec.n = 4;
  spec.edges = {{1, 2}, {2, 3}, {3, 4}};
  return generate_instance(spec, seed);
}

Vec4 kron_state(const Vec2 &a, const Vec2 &b) { return Vec4(a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1)); }

ProductTrialState random_trial(int n, std::mt19937_64 &rng) {
  ProductTrialState t = ProductTrialState::mixed(n);
  if (n >= 2 && rng() % 2)
    t.set_pure(1, 2, Vec4(random_state(4, rng)));
  for (int q = 3; q <= n; ++q)
    if (rng() % 2)
      t.set_pure(q, Vec2(random_state(2, rng)));
  return t;
}

} // namespace

TEST(QuantumOracle, GroundStateIsSat) {
  std::mt19937_64 rng(5);
  std::vector<Vec2> g;
  for (int q = 0; q < 3; ++q)
    g.push_back(random_state(2, rng));
  QsatInstance inst;
  inst.n = 3;
  inst.epsilon = 0.05;
  for (int e = 0; e < 2; ++e) {
    Vec4 bad = kron_state(orthogonal(g[e]), g[e + 1]) * 0.6 + kron_state(orthogonal(g[e]), orthogonal(g[e + 1])) * 0.8;
    inst.projectors.push_back(Projector::from_basis(e + 1, {e + 1, e + 2}, {Eigen::VectorXcd(bad)}));
  }
  ASSERT_LT(ground_energy(inst), 1e-9);
  ProductTrialState t = ProductTrialState::mixed(3);
  for (int q = 0; q < 3; ++q)
    t.set_pure(q + 1, g[q]);
  HiddenQsat o(inst);
  EXPECT_TRUE(o.qquery(t).sat);
}

TEST(QuantumOracle, ForbiddenStateHasEnergyOne) {
  std::mt19937_64 rng(2);
  Vec4 psi = random_state(4, rng);
  QsatInstance inst;
  inst.n = 2;
  inst.epsilon = 0.05;
  inst.projectors.push_back(Projector::from_basis(7, {1, 2}, {Eigen::VectorXcd(psi)}));
  HiddenQsat o(inst);
  ProductTrialState t = ProductTrialState::mixed(2);
  t.set_pure(1, 2, psi);
  auto r = o.qquery(t);
  EXPECT_FALSE(r.sat);
  EXPECT_EQ(r.id, 7);
  EXPECT_NEAR(escrow::energies(inst, t)[0], 1.0, 1e-12);
}

TEST(QuantumOracle, MixedTrialTiesAllRankOne) {
  auto inst = path_instance(3);
  ProductTrialState t = ProductTrialState::mixed(4);
  for (double e : escrow::energies(inst, t))
    EXPECT_NEAR(e, 0.25, 1e-12);
  HiddenQsat low(inst, {QTieBreak::lowest()});
  HiddenQsat high(inst, {QTieBreak::highest()});
  EXPECT_EQ(low.qquery(t).id, 1);
  EXPECT_EQ(high.qquery(t).id, 3);
  std::set<int> seen;
  for (std::uint64_t s = 0; s < 40; ++s) {
    HiddenQsat r(inst, {QTieBreak::random(s)});
    seen.insert(r.qquery(t).id);
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST(QuantumOracle, ReturnedIdIsWorstViolated) {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = path_instance(seed);
    for (auto policy : {QTieBreak::lowest(), QTieBreak::highest(), QTieBreak::random(seed), QTieBreak::scripted(seed)}) {
      HiddenQsat o(inst, {policy});
      for (int k = 0; k < 50; ++k) {
        auto t = random_trial(4, rng);
        auto r = o.qquery(t);
        auto e = escrow::energies(inst, t);
        double total = 0;
        for (double x : e)
          total += x;
        if (r.sat) {
          EXPECT_LE(total, inst.m() * inst.epsilon * inst.epsilon + inst.n * 1e-9);
          continue;
        }
        double mine = e[r.id - 1];
        EXPECT_GE(mine, *std::max_element(e.begin(), e.end()) - 1e-9);
      }
    }
  }
}

TEST(QuantumOracle, RejectsMalformedTrials) {
  auto inst = path_instance(1);
  HiddenQsat o(inst);
  EXPECT_THROW(o.qquery(ProductTrialState::mixed(3)), QuantumDomainError);
  ProductTrialState bad = ProductTrialState::mixed(4);
  bad.set(2, Mat2::Identity());
  EXPECT_THROW(o.qquery(bad), QuantumDomainError);
  ProductTrialState neg = ProductTrialState::mixed(4);
  Mat4 m = Mat4::Zero();
  m(0, 0) = 1.5;
  m(1, 1) = -0.5;
  neg.set(1, 2, m);
  EXPECT_THROW(o.qquery(neg), QuantumDomainError);
}

TEST(QuantumTranscript, JsonlAndDigestAreReproducible) {
  auto run = [] {
    auto inst = path_instance(8);
    QOracleOptions opts;
    opts.policy = QTieBreak::random(99);
    opts.keep_entries = true;
    HiddenQsat o(inst, opts);
    std::mt19937_64 rng(12);
    for (int k = 0; k < 30; ++k)
      o.qquery(random_trial(4, rng));
    return std::make_pair(o.transcript().to_jsonl(), o.transcript().digest_hex());
  };
  auto a = run(), b = run();
  EXPECT_EQ(a, b);
  auto first = a.first.substr(0, a.first.find('\n'));
  auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j["seq"], 1);
  EXPECT_TRUE(j["blocks"].is_array());
  EXPECT_TRUE(j.contains("response"));
  EXPECT_EQ(std::count(a.first.begin(), a.first.end(), '\n'), 30);
}

TEST(QuantumTranscript, PolicyNames) {
  EXPECT_EQ(QTieBreak::from_name("highest", 0).kind, QPolicyKind::Highest);
  EXPECT_EQ(QTieBreak::from_name("scripted", 3).name(), "scripted");
  EXPECT_THROW(QTieBreak::from_name("prop5", 0), QuantumDomainError);
}

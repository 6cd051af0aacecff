#include "hiddensat/quantum_solvers.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace hsat {

namespace {

std::atomic<long> schedule_serial{0};

bool disjoint(QubitPair a, QubitPair b) {
  return a.first != b.first && a.first != b.second && a.second != b.first && a.second != b.second;
}

std::vector<QubitPair> all_pairs(int n) {
  std::vector<QubitPair> out;
  for (int u = 1; u <= n; ++u)
    for (int v = u + 1; v <= n; ++v)
      out.emplace_back(u, v);
  return out;
}

std::vector<Vec4> to_vec4(const std::vector<Eigen::VectorXcd> &v) {
  std::vector<Vec4> out;
  out.reserve(v.size());
  for (const auto &x : v)
    out.emplace_back(x);
  return out;
}

// bisecting direction: the candidate axis whose equator splits the surviving points most evenly
Eigen::Vector3d bisect(const std::vector<Eigen::Vector3d> &net, const std::vector<int> &cands,
                       const std::vector<Eigen::Vector3d> &axes) {
  if (cands.empty())
    return Eigen::Vector3d(0, 0, 1);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int c : cands)
    mean += net[c];
  mean /= static_cast<double>(cands.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int c : cands)
    cov += (net[c] - mean) * (net[c] - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  std::vector<Eigen::Vector3d> dirs;
  for (int k = 2; k >= 0; --k)
    dirs.push_back(es.eigenvectors().col(k));
  dirs.insert(dirs.end(), axes.begin(), axes.end());
  double half = cands.size() / 2.0, best = std::numeric_limits<double>::infinity();
  Eigen::Vector3d pick = dirs.front();
  for (const auto &d : dirs) {
    long below = 0;
    for (int c : cands)
      below += net[c].dot(d) <= 0;
    double score = std::abs(below - half);
    if (score < best) {
      best = score;
      pick = d;
    }
  }
  return pick.normalized();
}

} // namespace

// ---- HQSAT1 ----

ListOutcome build_list_hqsat1(QuantumOracle &oracle, const std::vector<Vec2> &basis) {
  int n = oracle.n();
  ListOutcome out;
  std::set<std::vector<int>> seen;
  auto pick = [&](int q, int bit) { return bit ? orthogonal(basis[q]) : basis[q]; };
  for (int rot = 0; rot < std::max(n, 1); ++rot) {
    std::vector<int> order;
    for (int q = 0; q < n; ++q)
      if (q != rot)
        order.push_back(q);
    if (n > 0)
      order.push_back(rot);
    std::vector<std::vector<int>> list{{}};
    for (int stage = 0; stage + 1 < n; ++stage) {
      std::vector<std::vector<int>> next;
      std::set<int> ids;
      for (const auto &y : list) {
        for (int bit = 0; bit < 2; ++bit) {
          auto z = y;
          z.push_back(bit);
          ProductTrialState t = ProductTrialState::mixed(n);
          for (size_t k = 0; k < z.size(); ++k)
            t.set_pure(order[k] + 1, pick(order[k], z[k]));
          QOracleResponse r = oracle.qquery(t);
          ++out.trials;
          if (r.sat) {
            out.sat = t;
            return out;
          }
          if (ids.insert(r.id).second)
            next.push_back(z);
        }
      }
      list = std::move(next);
    }
    if (n == 0)
      break;
    for (const auto &y : list) {
      for (int bit = 0; bit < 2; ++bit) {
        std::vector<int> bits(n);
        for (size_t k = 0; k < y.size(); ++k)
          bits[order[k]] = y[k];
        bits[order.back()] = bit;
        if (!seen.insert(bits).second)
          continue;
        std::vector<Vec2> state(n);
        for (int q = 0; q < n; ++q)
          state[q] = pick(q, bits[q]);
        out.states.push_back(std::move(state));
      }
    }
  }
  return out;
}

Hqsat1Result solve_hqsat1(QuantumOracle &oracle, int n, int m, double epsilon, Hqsat1Options opts) {
  if (epsilon <= 0 || epsilon > 0.5)
    throw QuantumDomainError("epsilon must lie in (0, 1/2]");
  int depth = opts.depth >= 0 ? opts.depth : static_cast<int>(std::ceil(std::log2(1.0 / epsilon) - 1e-12));
  double pitch = opts.net_pitch > 0 ? opts.net_pitch : epsilon / 4;
  std::vector<Eigen::Vector3d> net;
  for (const auto &p : bloch_points(pitch))
    net.push_back(bloch_vector(Vec2(p)));
  std::vector<Eigen::Vector3d> axes;
  for (const auto &p : bloch_points(0.5))
    axes.push_back(bloch_vector(Vec2(p)));

  Hqsat1Result res;
  double width = 2.0 * m * n;
  res.bound = std::pow(width, depth) * (width + 1);
  long start = oracle.transcript().total();

  std::vector<BlochRegion> root(n);
  for (int q = 0; q < n; ++q) {
    root[q].qubit = q + 1;
    root[q].candidates.resize(net.size());
    for (size_t k = 0; k < net.size(); ++k)
      root[q].candidates[k] = static_cast<int>(k);
  }

  bool done = false;
  std::function<void(const std::vector<BlochRegion> &, int)> dfs = [&](const std::vector<BlochRegion> &regions,
                                                                      int level) {
    if (done)
      return;
    if (level == depth) {
      ++res.leaves;
      if (res.first_leaf_constraints.empty())
        for (const auto &r : regions)
          res.first_leaf_constraints.push_back(r.constraints);
      ProductTrialState t = ProductTrialState::mixed(n);
      for (int q = 0; q < n; ++q) {
        Eigen::Vector3d rep = Eigen::Vector3d::Zero();
        for (int c : regions[q].candidates)
          rep += net[c];
        if (rep.norm() < 1e-9)
          for (const auto &a : regions[q].constraints)
            rep -= bloch_vector(a);
        if (rep.norm() < 1e-9)
          rep = Eigen::Vector3d(0, 0, 1);
        t.set_pure(q + 1, from_bloch(-rep));
      }
      if (oracle.qquery(t).sat) {
        res.sat = true;
        res.state = t;
        done = true;
      }
      return;
    }
    std::vector<Vec2> basis(n);
    for (int q = 0; q < n; ++q)
      basis[q] = from_bloch(bisect(net, regions[q].candidates, axes));
    ListOutcome list = build_list_hqsat1(oracle, basis);
    ++res.lists;
    if (list.sat) {
      res.sat = true;
      res.state = *list.sat;
      done = true;
      return;
    }
    res.max_list = std::max(res.max_list, list.states.size());
    for (const auto &y : list.states) {
      if (done)
        return;
      if (opts.descend_filter && !opts.descend_filter(y))
        continue;
      std::vector<BlochRegion> child = regions;
      for (int q = 0; q < n; ++q) {
        Eigen::Vector3d d = bloch_vector(y[q]);
        child[q].constraints.push_back(y[q]);
        std::vector<int> keep;
        for (int c : child[q].candidates)
          if (net[c].dot(d) <= opts.slack)
            keep.push_back(c);
        child[q].candidates = std::move(keep);
      }
      dfs(child, level + 1);
    }
  };
  dfs(root, 0);
  res.trials = oracle.transcript().total() - start;
  return res;
}

// ---- Test-I ----

Mat4 test1_mixture(const Vec4 &alpha, double epsilon) {
  Vec4 perp = orthogonal(alpha);
  return (1 - epsilon) * alpha * alpha.adjoint() + epsilon * perp * perp.adjoint();
}

Test1Outcome test1(QuantumOracle &oracle, QubitPair ij, const Vec4 &psi, double epsilon,
                   const Test1Schedule &schedule, std::optional<int> expected) {
  if (epsilon + schedule.nu * schedule.nu / 2 >= 0.25)
    throw QuantumDomainError("Test-I needs epsilon + nu^2/2 < 1/4");
  ProductTrialState base = ProductTrialState::mixed(oracle.n());
  base.set_pure(ij.first, ij.second, psi);
  Test1Outcome out;
  int first = 0;
  auto probe = [&](QubitPair kl, const Vec4 &alpha) {
    ProductTrialState t = base;
    t.set(kl.first, kl.second, test1_mixture(alpha, epsilon));
    QOracleResponse r = oracle.qquery(t);
    ++out.trials;
    if (r.sat)
      return false;
    if (first == 0) {
      if (expected && r.id != *expected)
        return false;
      first = r.id;
      return true;
    }
    return r.id == first;
  };
  for (const auto &part : schedule.parts)
    for (const auto &alpha : part.points)
      if (!probe(part.pair, alpha))
        return out;
  if (schedule.full)
    for (const auto &kl : schedule.full_pairs)
      for (const auto &alpha : schedule.full->points())
        if (!probe(kl, Vec4(alpha)))
          return out;
  out.yes = first != 0;
  out.id = first;
  return out;
}

// ---- HQSAT2 learning ----

Projector ApproxProjector::to_projector() const { return Projector::from_basis(id, {pair.first, pair.second}, basis); }

const ApproxProjector *LearnResult::find(QubitPair p) const {
  for (const auto &a : learned)
    if (a.pair == p)
      return &a;
  return nullptr;
}

QsatInstance LearnResult::hamiltonian(int n, double epsilon) const {
  QsatInstance inst;
  inst.n = n;
  inst.epsilon = epsilon;
  for (const auto &a : learned)
    inst.projectors.push_back(a.to_projector());
  return inst;
}

std::string LearnResult::report_json() const {
  nlohmann::json j;
  j["status"] = status == Status::Learned ? "learned" : "not-learnable";
  if (!reason.empty())
    j["reason"] = reason;
  j["trials"] = trials;
  j["step1_trials"] = step1_trials;
  j["test1_calls"] = test1_calls;
  j["edges"] = nlohmann::json::array();
  for (const auto &a : learned) {
    nlohmann::json e;
    e["pair"] = {a.pair.first, a.pair.second};
    e["id"] = a.id;
    e["rank"] = a.basis.size();
    e["distance_bound"] = *std::max_element(a.radius.begin(), a.radius.end());
    e["rounds"] = nlohmann::json::array();
    for (const auto &r : a.history)
      e["rounds"].push_back({{"round", r.round}, {"radius", r.radius}, {"trials", r.trials}});
    j["edges"].push_back(e);
  }
  j["absent"] = nlohmann::json::array();
  for (auto p : absent)
    j["absent"].push_back({p.first, p.second});
  j["unresolved"] = nlohmann::json::array();
  for (auto p : unresolved)
    j["unresolved"].push_back({p.first, p.second});
  return j.dump();
}

namespace {

class Learner {
public:
  Learner(QuantumOracle &o, const LearnerParams &p)
      : o_(o), P_(p), n_(o.n()), screen_(to_vec4(full_two_qubit_net(p.screen_gamma).points())) {
    delta0_ = std::sqrt(2 * P_.eps0 + P_.nu0 * P_.nu0);
    rounds_ = 0;
    while (delta0_ / std::pow(2.0, rounds_) > P_.target + 1e-15)
      ++rounds_;
  }

  LearnResult run();

private:
  struct Found {
    Vec4 psi;
    int id;
  };

  long trials() const { return o_.transcript().total(); }

  Test1Outcome call_test1(QubitPair ij, const Vec4 &psi, double eps, const Test1Schedule &s,
                          std::optional<int> expected) {
    Test1Outcome out = test1(o_, ij, psi, eps, s, expected);
    ++res_.test1_calls;
    if (P_.on_test1)
      P_.on_test1({ij, psi, eps, &s, out});
    return out;
  }

  Mat4 reference_state(const ApproxProjector &r, double level) const {
    Vec4 e1 = r.basis[0];
    Mat4 rho = level * e1 * e1.adjoint();
    std::vector<Eigen::VectorXcd> basis = r.basis;
    std::vector<Eigen::VectorXcd> comp;
    for (int k = 0; k < 4; ++k) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(4);
      e(k) = 1;
      for (int pass = 0; pass < 2; ++pass)
        for (const auto &b : basis)
          e -= b.dot(e) * b;
      if (e.norm() < 1e-6)
        continue;
      e.normalize();
      basis.push_back(e);
      comp.push_back(e);
    }
    for (const auto &c : comp)
      rho += (1 - level) / comp.size() * Vec4(c) * Vec4(c).adjoint();
    return rho;
  }

  std::vector<int> screen(QubitPair p, const ApproxProjector *ref) {
    std::vector<int> ids(screen_.size());
    ProductTrialState base = ProductTrialState::mixed(n_);
    if (ref)
      base.set(ref->pair.first, ref->pair.second, reference_state(*ref, P_.screen_level));
    for (size_t k = 0; k < screen_.size(); ++k) {
      ProductTrialState t = base;
      t.set_pure(p.first, p.second, screen_[k]);
      QOracleResponse r = o_.qquery(t);
      ids[k] = r.sat ? 0 : r.id;
    }
    return ids;
  }

  const std::vector<int> &free_screen(QubitPair p) {
    auto it = free_cache_.find(p);
    if (it == free_cache_.end())
      it = free_cache_.emplace(p, screen(p, nullptr)).first;
    return it->second;
  }

  // groups of screen points by answer, largest first, skipping excluded ids
  std::vector<std::pair<int, std::vector<int>>> groups(const std::vector<int> &ids, const std::set<int> &exclude) {
    std::map<int, std::vector<int>> g;
    for (size_t k = 0; k < ids.size(); ++k)
      if (ids[k] != 0 && !exclude.count(ids[k]))
        g[ids[k]].push_back(static_cast<int>(k));
    std::vector<std::pair<int, std::vector<int>>> out(g.begin(), g.end());
    std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.second.size() > b.second.size(); });
    return out;
  }

  // deepest part of a screen group, summarised by the top eigenvector of its mean projector
  Vec4 center(const std::vector<int> &ids, const std::vector<int> &group) {
    std::vector<int> outside;
    for (size_t k = 0; k < ids.size(); ++k)
      if (ids[k] != ids[group.front()])
        outside.push_back(static_cast<int>(k));
    std::vector<double> depth(group.size(), 2.0);
    double deepest = 0;
    for (size_t a = 0; a < group.size(); ++a) {
      double best = 0;
      for (int b : outside)
        best = std::max(best, std::norm(screen_[group[a]].dot(screen_[b])));
      depth[a] = std::sqrt(std::max(0.0, 2 - 2 * best));
      deepest = std::max(deepest, depth[a]);
    }
    Mat4 acc = Mat4::Zero();
    for (size_t a = 0; a < group.size(); ++a)
      if (depth[a] >= 0.8 * deepest)
        acc += screen_[group[a]] * screen_[group[a]].adjoint();
    Eigen::SelfAdjointEigenSolver<Mat4> es(acc);
    return canonical_phase(Eigen::VectorXcd(es.eigenvectors().col(3)));
  }

  Test1Schedule reference_schedule(const ApproxProjector &r, double nu) {
    Test1Schedule s;
    s.serial = ++schedule_serial;
    s.nu = nu;
    auto comp = to_vec4(complement_net(r.basis, P_.complement_gamma));
    auto ball = to_vec4(ball_net_points(Vec4(r.basis[0]), r.radius[0], nu));
    Test1Schedule::Part part{r.pair, {}};
    part.points.reserve(comp.size() + ball.size());
    if (!comp.empty())
      part.points.push_back(comp[0]);
    part.points.insert(part.points.end(), ball.begin(), ball.end());
    if (comp.size() > 1)
      part.points.insert(part.points.end(), comp.begin() + 1, comp.end());
    s.parts.push_back(std::move(part));
    return s;
  }

  Test1Schedule full_schedule(QubitPair p) {
    Test1Schedule s;
    s.serial = ++schedule_serial;
    s.nu = P_.nu0;
    std::vector<Test1Schedule::Part> keys, balls;
    for (auto q : all_pairs(n_)) {
      if (!disjoint(p, q))
        continue;
      s.full_pairs.push_back(q);
      const auto &ids = free_screen(q);
      Test1Schedule::Part key{q, {}}, ball{q, {}};
      for (const auto &[id, group] : groups(ids, {})) {
        Vec4 c = center(ids, group);
        key.points.push_back(orthogonal(c));
        key.points.push_back(c);
        auto pts = to_vec4(ball_net_points(c, 0.5, P_.nu0));
        ball.points.insert(ball.points.end(), pts.begin(), pts.end());
      }
      keys.push_back(std::move(key));
      balls.push_back(std::move(ball));
    }
    s.parts = std::move(keys);
    s.parts.insert(s.parts.end(), balls.begin(), balls.end());
    s.full = &full_two_qubit_net(P_.nu0);
    return s;
  }

  std::optional<Found> search(QubitPair p, const Vec4 &c, int expected, const Test1Schedule &s) {
    auto cands = ball_net_points(c, P_.candidate_radius, P_.candidate_slack * P_.eta0);
    for (const auto &psi : cands) {
      Test1Outcome t = call_test1(p, Vec4(psi), P_.eps0, s, expected);
      if (t.yes)
        return Found{Vec4(psi), t.id};
    }
    return std::nullopt;
  }

  // share of answers still carrying `id` on states orthogonal to c, rest mixed
  double ping(QubitPair p, const Vec4 &c, int id) {
    auto pts = complement_net({Eigen::VectorXcd(c)}, P_.complement_gamma);
    if (pts.empty())
      return 0;
    ProductTrialState base = ProductTrialState::mixed(n_);
    int hits = 0;
    for (const auto &a : pts) {
      ProductTrialState t = base;
      t.set_pure(p.first, p.second, Vec4(a));
      QOracleResponse r = o_.qquery(t);
      hits += !r.sat && r.id == id;
    }
    return static_cast<double>(hits) / pts.size();
  }

  struct Lead {
    double score;
    QubitPair p;
    int id;
    Vec4 c;
  };

  // screen groups over the pool, those that vanish off their centre first
  std::vector<Lead> leads(const std::vector<QubitPair> &pool, const std::set<int> &known) {
    std::vector<Lead> out;
    for (auto p : pool) {
      const auto &ids = free_screen(p);
      for (const auto &[id, group] : groups(ids, known)) {
        Vec4 c = center(ids, group);
        out.push_back({ping(p, c, id), p, id, c});
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const Lead &a, const Lead &b) { return a.score < b.score; });
    return out;
  }

  std::optional<ApproxProjector> find_with_reference(QubitPair p, const ApproxProjector &ref, bool *flagged) {
    auto ids = screen(p, &ref);
    auto gs = groups(ids, {ref.id});
    if (flagged)
      *flagged = !gs.empty();
    if (gs.empty())
      return std::nullopt;
    Test1Schedule s = reference_schedule(ref, P_.nu0);
    for (const auto &[id, group] : gs) {
      if (rejected_.count({p, id}))
        continue;
      if (auto f = search(p, center(ids, group), id, s))
        return fresh(p, *f);
    }
    return std::nullopt;
  }

  ApproxProjector fresh(QubitPair p, const Found &f) {
    ApproxProjector a;
    a.pair = p;
    a.id = f.id;
    a.basis = {Eigen::VectorXcd(f.psi)};
    a.radius = {delta0_};
    a.history.push_back({0, delta0_, a.basis, 0});
    return a;
  }

  // one Test-II round on basis vector k of `a` against reference `ref`
  bool refine(ApproxProjector &a, size_t k, const ApproxProjector &ref, int t) {
    long start = trials();
    double scale = std::pow(2.0, t);
    double nu = P_.nu0 / scale, eta = P_.eta0 / scale, eps = P_.eps0 / (scale * scale);
    Test1Schedule s = reference_schedule(ref, nu);
    auto cands = ball_net_points(Vec4(a.basis[k]), a.radius[k], P_.candidate_slack * eta);
    bool ok = false;
    for (auto psi : cands) {
      for (size_t j = 0; j < k; ++j)
        psi -= a.basis[j].dot(psi) * a.basis[j];
      if (psi.norm() < 1e-6)
        continue;
      psi = canonical_phase(psi.normalized());
      if (call_test1(a.pair, Vec4(psi), eps, s, a.id).yes) {
        a.basis[k] = psi;
        a.radius[k] = delta0_ / scale;
        ok = true;
        break;
      }
    }
    a.history.push_back({t, a.radius[k], a.basis, trials() - start});
    return ok;
  }

  bool refine_all(ApproxProjector &a, size_t k, const ApproxProjector &ref) {
    for (int t = 1; t <= rounds_; ++t)
      if (!refine(a, k, ref, t))
        return false;
    return true;
  }

  void detect_rank(ApproxProjector &a, const ApproxProjector &ref) {
    if (!P_.detect_rank)
      return;
    Test1Schedule s = reference_schedule(ref, P_.nu0);
    while (a.basis.size() < 3) {
      auto cands = complement_net(a.basis, P_.candidate_slack * P_.eta0);
      std::optional<Eigen::VectorXcd> hit;
      for (const auto &psi : cands)
        if (call_test1(a.pair, Vec4(psi), P_.eps0, s, a.id).yes) {
          hit = psi;
          break;
        }
      if (!hit)
        return;
      a.basis.push_back(*hit);
      a.radius.push_back(delta0_);
      if (!refine_all(a, a.basis.size() - 1, ref)) {
        failure_ = "refinement failure";
        return;
      }
    }
  }

  // both approximations at delta0; alternate Test-II rounds until the target radius
  bool mutual_refine(ApproxProjector &a, ApproxProjector &b) {
    for (int t = 1; t <= rounds_; ++t) {
      if (!refine(a, 0, b, t) || !refine(b, 0, a, t))
        return false;
    }
    detect_rank(a, b);
    detect_rank(b, a);
    return failure_.empty();
  }

  // a Test-I yes can carry the id of a projector on the swept pair; such attributions fail
  // the first halving round, so they are rejected and the search goes on
  std::optional<std::pair<ApproxProjector, ApproxProjector>> seed_pair(const std::vector<QubitPair> &pool,
                                                                       const std::set<int> &known) {
    std::map<QubitPair, Test1Schedule> schedules;
    for (const auto &l : leads(pool, known)) {
      if (rejected_.count({l.p, l.id}))
        continue;
      auto it = schedules.find(l.p);
      if (it == schedules.end())
        it = schedules.emplace(l.p, full_schedule(l.p)).first;
      auto f = search(l.p, l.c, l.id, it->second);
      if (!f)
        continue;
      ApproxProjector a = fresh(l.p, *f);
      std::vector<std::pair<QubitPair, int>> tried;
      for (auto q : pool) {
        if (!disjoint(l.p, q))
          continue;
        while (auto b = find_with_reference(q, a, nullptr)) {
          ApproxProjector ra = a, rb = *b;
          refine_mark_ = trials();
          if (mutual_refine(ra, rb)) {
            for (const auto &t : tried)
              rejected_.erase(t);
            return std::make_pair(ra, rb);
          }
          failure_.clear();
          tried.push_back({q, b->id});
          rejected_.insert(tried.back());
        }
      }
      for (const auto &t : tried)
        rejected_.erase(t);
      rejected_.insert({l.p, a.id});
      rejected_.insert({l.p, l.id});
      star_like_hint_ = true;
    }
    return std::nullopt;
  }

  int pick_reference(QubitPair p) const {
    for (size_t k = 0; k < res_.learned.size(); ++k)
      if (disjoint(p, res_.learned[k].pair))
        return static_cast<int>(k);
    return -1;
  }

  // breadth-first distance of each qubit from the seed edges over the learned graph
  std::vector<int> qubit_distance() const {
    std::vector<int> dist(n_ + 1, std::numeric_limits<int>::max());
    std::deque<int> queue;
    for (size_t k = 0; k < std::min<size_t>(2, res_.learned.size()); ++k)
      for (int q : {res_.learned[k].pair.first, res_.learned[k].pair.second})
        if (dist[q] != 0) {
          dist[q] = 0;
          queue.push_back(q);
        }
    while (!queue.empty()) {
      int q = queue.front();
      queue.pop_front();
      for (const auto &a : res_.learned) {
        int other = a.pair.first == q ? a.pair.second : a.pair.second == q ? a.pair.first : 0;
        if (other && dist[other] > dist[q] + 1) {
          dist[other] = dist[q] + 1;
          queue.push_back(other);
        }
      }
    }
    return dist;
  }

  QuantumOracle &o_;
  const LearnerParams &P_;
  int n_;
  std::vector<Vec4> screen_;
  std::map<QubitPair, std::vector<int>> free_cache_;
  double delta0_;
  int rounds_;
  LearnResult res_;
  std::string failure_;
  bool star_like_hint_ = false;
  std::set<std::pair<QubitPair, int>> rejected_;
  long refine_mark_ = 0;
};

LearnResult Learner::run() {
  long start = trials();
  std::set<QubitPair> pending;
  for (auto p : all_pairs(n_))
    pending.insert(p);
  if (o_.m() == 0 || n_ < 4) {
    res_.status = o_.m() == 0 ? LearnResult::Status::Learned : LearnResult::Status::NotLearnable;
    res_.reason = o_.m() == 0 ? "" : "no-disjoint-pair";
    if (o_.m() == 0)
      res_.absent.assign(pending.begin(), pending.end());
    return res_;
  }

  auto learned_ids = [&] {
    std::set<int> ids;
    for (const auto &a : res_.learned)
      ids.insert(a.id);
    return ids;
  };

  auto seeds = seed_pair(all_pairs(n_), {});
  res_.step1_trials = (seeds ? refine_mark_ : trials()) - start;
  if (!seeds) {
    res_.status = LearnResult::Status::NotLearnable;
    res_.reason = star_like_hint_ ? "star-like" : "no-disjoint-pair";
    res_.trials = trials() - start;
    return res_;
  }
  auto [a, b] = *seeds;
  res_.learned.push_back(a);
  res_.learned.push_back(b);
  pending.erase(a.pair);
  pending.erase(b.pair);

  while (true) {
    // propagate from learned references
    while (true) {
      auto dist = qubit_distance();
      std::optional<QubitPair> next;
      long best = std::numeric_limits<long>::max();
      for (auto p : pending) {
        if (pick_reference(p) < 0)
          continue;
        long d = std::min<long>(dist[p.first], dist[p.second]);
        if (d < best) {
          best = d;
          next = p;
        }
      }
      if (!next)
        break;
      pending.erase(*next);
      const ApproxProjector ref = res_.learned[pick_reference(*next)];
      auto found = find_with_reference(*next, ref, nullptr);
      if (!found) {
        res_.absent.push_back(*next);
        continue;
      }
      if (!refine_all(*found, 0, ref)) {
        res_.learned.push_back(*found);
        res_.status = LearnResult::Status::NotLearnable;
        res_.reason = "refinement failure";
        res_.unresolved.assign(pending.begin(), pending.end());
        res_.trials = trials() - start;
        return res_;
      }
      detect_rank(*found, ref);
      res_.learned.push_back(*found);
      if (!failure_.empty()) {
        res_.status = LearnResult::Status::NotLearnable;
        res_.reason = failure_;
        res_.unresolved.assign(pending.begin(), pending.end());
        res_.trials = trials() - start;
        return res_;
      }
    }
    if (pending.empty() || !P_.resolve_unreferenced)
      break;
    // pairs without a disjoint learned reference: rule out by the unmasked screen, or seed again
    std::vector<QubitPair> left(pending.begin(), pending.end());
    std::vector<QubitPair> flagged;
    for (auto p : left) {
      if (groups(free_screen(p), learned_ids()).empty()) {
        pending.erase(p);
        res_.absent.push_back(p);
      } else {
        flagged.push_back(p);
      }
    }
    if (flagged.empty())
      break;
    auto more = seed_pair(flagged, learned_ids());
    if (!more) {
      for (auto p : flagged) {
        pending.erase(p);
        res_.absent.push_back(p);
      }
      break;
    }
    auto [c, d] = *more;
    res_.learned.push_back(c);
    res_.learned.push_back(d);
    pending.erase(c.pair);
    pending.erase(d.pair);
  }
  res_.unresolved.assign(pending.begin(), pending.end());
  if (!res_.unresolved.empty()) {
    res_.status = LearnResult::Status::NotLearnable;
    res_.reason = "stalled";
  }
  std::sort(res_.absent.begin(), res_.absent.end());
  res_.trials = trials() - start;
  return res_;
}

} // namespace

LearnResult learn_hqsat2(QuantumOracle &oracle, const LearnerParams &params) {
  Learner l(oracle, params);
  return l.run();
}

// ---- star-adjacent case ----

namespace {

// <a| Pi |a> contracted on the qubit `side` (0 = first qubit of the pair) of a two-qubit projector
Mat2 contract(const Mat4 &pi, int side, const Vec2 &a) {
  Mat2 m = Mat2::Zero();
  for (int z = 0; z < 2; ++z)
    for (int z2 = 0; z2 < 2; ++z2)
      for (int b = 0; b < 2; ++b)
        for (int b2 = 0; b2 < 2; ++b2) {
          int r = side == 0 ? 2 * b + z : 2 * z + b;
          int c = side == 0 ? 2 * b2 + z2 : 2 * z2 + b2;
          m(z, z2) += std::conj(a(b)) * pi(r, c) * a(b2);
        }
  return m;
}

} // namespace

StarAdjacentResult solve_star_adjacent(QuantumOracle &oracle, double epsilon, double beta, LearnerParams params) {
  StarAdjacentResult res;
  long start = oracle.transcript().total();
  int n = oracle.n(), m = oracle.m();
  params.target = beta;
  params.resolve_unreferenced = false;
  res.learned = learn_hqsat2(oracle, params);
  const auto &learned = res.learned.learned;
  auto finish = [&](StarAdjacentResult::Status s, std::string why) {
    res.status = s;
    res.reason = std::move(why);
    res.trials = oracle.transcript().total() - start;
    return res;
  };
  if (learned.size() < 2 || static_cast<int>(learned.size()) + 1 != m)
    return finish(StarAdjacentResult::Status::NotApplicable, "learned graph does not leave exactly one edge");

  std::vector<QubitPair> covers;
  for (auto p : res.learned.unresolved) {
    bool cover = std::all_of(learned.begin(), learned.end(), [&](const ApproxProjector &a) { return !disjoint(a.pair, p); });
    if (cover)
      covers.push_back(p);
  }
  if (covers.empty())
    return finish(StarAdjacentResult::Status::NotApplicable, "no unlearned pair touches every learned edge");

  std::vector<Projector> approx;
  double err = 0;
  for (const auto &a : learned) {
    approx.push_back(a.to_projector());
    for (double r : a.radius)
      err += r;
  }
  double tol = tolerances().compare;
  double target = (m - 1) * epsilon * epsilon + err + tol;
  auto net = bloch_points(epsilon / 2);

  for (auto [x, y] : covers) {
    // per-leaf contributions from each choice of state on x and on y
    auto side_terms = [&](int q, const Eigen::VectorXcd &s) {
      std::vector<Mat2> terms(n + 1, Mat2::Zero());
      for (const auto &p : approx) {
        int u = p.qubits()[0], v = p.qubits()[1];
        if (u == q)
          terms[v] += contract(p.m4(), 0, Vec2(s));
        else if (v == q)
          terms[u] += contract(p.m4(), 1, Vec2(s));
      }
      return terms;
    };
    std::vector<std::vector<Mat2>> tx, ty;
    for (const auto &s : net) {
      tx.push_back(side_terms(x, s));
      ty.push_back(side_terms(y, s));
    }
    for (size_t ia = 0; ia < net.size(); ++ia) {
      for (size_t ib = 0; ib < net.size(); ++ib) {
        std::vector<int> leaves;
        std::vector<double> lo, hi;
        std::vector<Vec2> vlo, vhi;
        double floor = 0;
        for (int z = 1; z <= n; ++z) {
          if (z == x || z == y)
            continue;
          Mat2 mz = tx[ia][z] + ty[ib][z];
          Eigen::SelfAdjointEigenSolver<Mat2> es(mz);
          leaves.push_back(z);
          lo.push_back(es.eigenvalues()(0));
          hi.push_back(es.eigenvalues()(1));
          vlo.push_back(es.eigenvectors().col(0));
          vhi.push_back(es.eigenvectors().col(1));
          floor += lo.back();
        }
        double need = target - floor;
        if (need < 0)
          continue;
        ProductTrialState t = ProductTrialState::mixed(n);
        t.set_pure(x, Vec2(net[ia]));
        t.set_pure(y, Vec2(net[ib]));
        for (size_t k = 0; k < leaves.size(); ++k) {
          double span = hi[k] - lo[k], add = std::min(need, span);
          double w = span > 1e-15 ? add / span : 0.0;
          need -= add;
          t.set(leaves[k], Mat2((1 - w) * vlo[k] * vlo[k].adjoint() + w * vhi[k] * vhi[k].adjoint()));
        }
        if (need > 1e-12)
          continue;
        if (!oracle.qquery(t).sat)
          continue;
        double est = 0;
        for (const auto &p : approx)
          est += violation_energy(p, t);
        double bound = m * epsilon * epsilon + tol - (est - err);
        if (bound <= epsilon * epsilon) {
          res.state = t;
          res.leftover = {x, y};
          res.leftover_bound = bound;
          return finish(StarAdjacentResult::Status::Sat, "");
        }
      }
    }
  }
  res.leftover = covers.front();
  return finish(StarAdjacentResult::Status::Unsat, "");
}

} // namespace hsat

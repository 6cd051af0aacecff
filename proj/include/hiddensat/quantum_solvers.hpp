#pragma once

#include "hiddensat/oracle_quantum.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hsat {

using QubitPair = std::pair<int, int>;

// ---- HQSAT1 ----

struct BlochRegion {
  int qubit = 0;
  std::vector<Vec2> constraints; // forbidden state f must keep |<f|a>|^2 <= 1/2
  std::vector<int> candidates;   // surviving indices into the fine Bloch net
};

struct Hqsat1Options {
  int depth = -1;          // defaults to ceil(log2(1/epsilon))
  double net_pitch = -1.0; // defaults to epsilon / 4
  double slack = 0.02;     // overlap slack when filtering candidates
  // when set, only list elements accepted by the filter are explored
  std::function<bool(const std::vector<Vec2> &)> descend_filter;
};

struct Hqsat1Result {
  bool sat = false;
  ProductTrialState state;
  long trials = 0;
  double bound = 0;
  long lists = 0;
  long leaves = 0;
  size_t max_list = 0;
  std::vector<std::vector<Vec2>> first_leaf_constraints; // per qubit, along the first explored branch
};

struct ListOutcome {
  std::vector<std::vector<Vec2>> states; // each entry assigns one pure state per qubit
  std::optional<ProductTrialState> sat;
  long trials = 0;
};

ListOutcome build_list_hqsat1(QuantumOracle &oracle, const std::vector<Vec2> &basis);
Hqsat1Result solve_hqsat1(QuantumOracle &oracle, int n, int m, double epsilon, Hqsat1Options opts = {});

// ---- Test-I ----

struct Test1Schedule {
  struct Part {
    QubitPair pair;
    std::vector<Vec4> points;
  };
  long serial = 0;
  double nu = 0;
  std::vector<Part> parts;       // swept first, in order
  const GradedNet *full = nullptr; // then swept over every pair in full_pairs
  std::vector<QubitPair> full_pairs;
};

struct Test1Outcome {
  bool yes = false;
  int id = 0;
  long trials = 0;
};

Mat4 test1_mixture(const Vec4 &alpha, double epsilon);

// Yes(id) iff every trial is answered with the same id (and that id equals `expected` when given)
Test1Outcome test1(QuantumOracle &oracle, QubitPair ij, const Vec4 &psi, double epsilon,
                   const Test1Schedule &schedule, std::optional<int> expected = std::nullopt);

struct Test1Call {
  QubitPair ij;
  Vec4 psi;
  double epsilon;
  const Test1Schedule *schedule;
  Test1Outcome outcome;
};

// ---- HQSAT2 learning ----

struct RoundRecord {
  int round = 0;
  double radius = 0;
  std::vector<Eigen::VectorXcd> basis;
  long trials = 0;
};

struct ApproxProjector {
  QubitPair pair;
  int id = 0;
  std::vector<Eigen::VectorXcd> basis;
  std::vector<double> radius; // per basis vector
  std::vector<RoundRecord> history;
  Projector to_projector() const;
};

struct LearnerParams {
  double target = 0.05;
  double nu0 = 0.25;
  double eps0 = 1.0 / 32;
  double eta0 = 0.25;
  double screen_gamma = 0.85;
  double screen_level = 0.55;
  double candidate_radius = 0.6;
  double candidate_slack = 0.9; // candidate pitch as a fraction of eta
  double complement_gamma = 0.5;
  bool resolve_unreferenced = true;
  bool detect_rank = true;
  std::function<void(const Test1Call &)> on_test1;
};

struct LearnResult {
  enum class Status { Learned, NotLearnable };
  Status status = Status::Learned;
  std::string reason;
  std::vector<ApproxProjector> learned;
  std::vector<QubitPair> absent;
  std::vector<QubitPair> unresolved;
  long trials = 0;
  long step1_trials = 0;
  long test1_calls = 0;

  const ApproxProjector *find(QubitPair p) const;
  QsatInstance hamiltonian(int n, double epsilon) const;
  std::string report_json() const;
};

LearnResult learn_hqsat2(QuantumOracle &oracle, const LearnerParams &params = {});

// ---- star-adjacent case ----

struct StarAdjacentResult {
  enum class Status { Sat, Unsat, NotApplicable };
  Status status = Status::NotApplicable;
  std::string reason;
  ProductTrialState state;
  QubitPair leftover{0, 0};
  double leftover_bound = 0; // energy bound on the leftover pair implied by a SAT answer
  LearnResult learned;
  long trials = 0;
};

StarAdjacentResult solve_star_adjacent(QuantumOracle &oracle, double epsilon, double beta,
                                       LearnerParams params = {});

} // namespace hsat

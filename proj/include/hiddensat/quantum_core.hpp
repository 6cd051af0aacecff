#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hsat {

using cd = std::complex<double>;
using Vec2 = Eigen::Vector2cd;
using Vec4 = Eigen::Vector4cd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

struct QuantumDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// selected once per process by HIDDENSAT_TOLERANCE_PROFILE (default | strict | loose)
struct Tolerances {
  std::string profile = "default";
  double construct = 1e-10;
  double compare = 1e-9;
  double eigen = 1e-8;
};

const Tolerances &tolerances();
Tolerances tolerance_profile(const std::string &name);

// first amplitude with magnitude above 1e-12 made real and non-negative
Eigen::VectorXcd canonical_phase(const Eigen::VectorXcd &v);

struct PureState1Q {
  Vec2 amp;
  PureState1Q() : amp(1, 0) {}
  explicit PureState1Q(const Vec2 &a);
};

struct PureState2Q {
  Vec4 amp;
  PureState2Q() : amp(1, 0, 0, 0) {}
  explicit PureState2Q(const Vec4 &a);
};

PureState1Q orthogonal_1q(const PureState1Q &s);
PureState2Q canonical_orthogonal_2q(const PureState2Q &s);
Vec2 orthogonal(const Vec2 &s);
Vec4 orthogonal(const Vec4 &s);

Eigen::Vector3d bloch_vector(const Vec2 &s);
Vec2 from_bloch(const Eigen::Vector3d &r);

Eigen::VectorXcd random_state(int dim, std::mt19937_64 &rng);

class Projector {
public:
  Projector() = default;
  // basis spans the forbidden space; it is orthonormalised here
  static Projector from_basis(int id, std::vector<int> qubits, std::vector<Eigen::VectorXcd> basis);
  static Projector pure(int id, std::vector<int> qubits, const Eigen::VectorXcd &state) {
    return from_basis(id, std::move(qubits), {state});
  }

  int id() const { return id_; }
  int arity() const { return static_cast<int>(qubits_.size()); }
  int rank() const { return static_cast<int>(basis_.size()); }
  const std::vector<int> &qubits() const { return qubits_; }
  const std::vector<Eigen::VectorXcd> &basis() const { return basis_; }
  const Eigen::MatrixXcd &matrix() const { return matrix_; }
  const Mat2 &m2() const { return m2_; }
  const Mat4 &m4() const { return m4_; }
  void validate() const;

private:
  int id_ = 0;
  std::vector<int> qubits_;
  std::vector<Eigen::VectorXcd> basis_;
  Eigen::MatrixXcd matrix_;
  Mat2 m2_ = Mat2::Zero();
  Mat4 m4_ = Mat4::Zero();
};

double frobenius_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b);
double frobenius_distance(const Projector &a, const Projector &b);
// distance between the rank-1 projectors of two pure states
double state_distance(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b);
// largest principal angle between two subspaces given by orthonormal bases
double principal_angle(const std::vector<Eigen::VectorXcd> &a, const std::vector<Eigen::VectorXcd> &b);

struct TrialBlock {
  std::vector<int> qubits; // one or two entries, 1-based
  Eigen::MatrixXcd rho;
};

class ProductTrialState {
public:
  ProductTrialState() = default;
  static ProductTrialState mixed(int n);

  int n() const { return static_cast<int>(where_.size()); }
  void set(int q, const Mat2 &rho);
  void set(int u, int v, const Mat4 &rho);
  void set_pure(int q, const Vec2 &s) { set(q, Mat2(s * s.adjoint())); }
  void set_pure(int u, int v, const Vec4 &s) { set(u, v, Mat4(s * s.adjoint())); }

  Mat2 reduce(int q) const;
  Mat4 reduce(int u, int v) const;
  Eigen::MatrixXcd reduce_to(const std::vector<int> &qubits) const;
  bool is_mixed(int q) const;

  std::vector<TrialBlock> blocks() const;
  void validate() const;
  void hash_into(std::uint64_t &h) const;

private:
  struct Slot {
    int block = -1; // index into pairs_ or -1 for a single-qubit block
    int pos = 0;
  };
  struct Pair {
    int u, v;
    Mat4 rho;
  };
  std::vector<Slot> where_;
  std::vector<Mat2> singles_;
  std::vector<Pair> pairs_;
};

double violation_energy(const Projector &p, const ProductTrialState &trial);

class QsatInstance {
public:
  int n = 0;
  double epsilon = 0.0;
  std::vector<Projector> projectors;
  bool allow_repetition = false;

  int m() const { return static_cast<int>(projectors.size()); }
  const Projector &projector(int id) const;
  void validate() const;
  std::vector<std::pair<int, int>> edges() const;
  bool is_star_like() const;

  std::string to_json() const;
  static QsatInstance from_json(const std::string &text);
  static QsatInstance load(const std::string &path);
  void save(const std::string &path) const;
};

Eigen::MatrixXcd hamiltonian(const QsatInstance &inst);
double ground_energy(const QsatInstance &inst);

struct InstanceSpec {
  int n = 0;
  std::vector<std::pair<int, int>> edges; // 2-local supports
  std::vector<int> sites;                 // 1-local supports, repeats allowed
  std::vector<int> ranks;                 // per edge, default 1
  double epsilon = 0.05;
  bool satisfiable = true;
  bool require_non_star = false;
};

QsatInstance generate_instance(const InstanceSpec &spec, std::uint64_t seed);

// ---- epsilon nets ----

enum class NetSpace { Bloch, TwoQubit };

struct EpsilonNet {
  NetSpace space = NetSpace::TwoQubit;
  double gamma = 0.0;
  std::optional<Eigen::VectorXcd> center;
  double radius = -1.0; // negative for the whole space
  std::vector<Eigen::VectorXcd> points;

  size_t size() const { return points.size(); }
};

struct Ball {
  Eigen::VectorXcd center;
  double radius;
};

EpsilonNet build_net(NetSpace space, double gamma, std::optional<Ball> ball = std::nullopt);

// covering net of the unit rays of C^d (d <= 4) as a graded angle grid
class GradedNet {
public:
  GradedNet(int dim, double gamma, double stretch = 1.0);
  // widest pitch whose sampled covering radius stays within gamma
  static std::unique_ptr<GradedNet> tuned(int dim, double gamma);
  int dim() const { return dim_; }
  double gamma() const { return gamma_; }
  const std::vector<Eigen::VectorXcd> &points() const { return points_; }
  // grid point of the cell containing s
  const Eigen::VectorXcd &cell_point(const Eigen::VectorXcd &s) const;
  // worst probe-to-cell-point distance over random probes
  double certify(int probes, std::uint64_t seed) const;

private:
  struct Node {
    double step = 0;
    int count = 0;
    int first_child = -1; // index into nodes_ or into points_ at the leaf level
  };
  void build(int level, std::vector<double> &angles, std::vector<double> &hi_sin, double budget, int node);
  Eigen::VectorXcd point_from(const std::vector<double> &angles) const;

  int dim_;
  double gamma_;
  std::vector<Node> nodes_;
  std::vector<double> half_;
  std::vector<Eigen::VectorXcd> points_;
};

const GradedNet &full_two_qubit_net(double gamma);

// net of the rays of the subspace orthogonal to `basis` inside C^4
std::vector<Eigen::VectorXcd> complement_net(const std::vector<Eigen::VectorXcd> &basis, double gamma);

// uncertified lattice behind ball-restricted two-qubit nets, nearest points first
std::vector<Eigen::VectorXcd> ball_net_points(const Vec4 &center, double radius, double gamma);

std::vector<Eigen::VectorXcd> bloch_points(double gamma);

// largest distance from a random probe to its nearest net point (upper bound via cell lookup)
double certify_covering(const EpsilonNet &net, int probes, std::uint64_t seed);

} // namespace hsat

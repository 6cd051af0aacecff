#include "hiddensat/quantum_core.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

namespace hsat {

namespace {

constexpr double kPi = std::numbers::pi;

double frob_to_angle(double gamma) { return std::asin(std::min(1.0, gamma / std::sqrt(2.0))); }

void mix(std::uint64_t &h, std::uint64_t w) {
  h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  h *= 0x100000001b3ull;
}

void mix(std::uint64_t &h, double d) {
  std::uint64_t w;
  std::memcpy(&w, &d, sizeof w);
  mix(h, w);
}

Mat4 kron(const Mat2 &a, const Mat2 &b) {
  Mat4 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      r.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return r;
}

Mat4 swap_qubits(const Mat4 &m) {
  static const int perm[4] = {0, 2, 1, 3};
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      r(perm[i], perm[j]) = m(i, j);
  return r;
}

template <class M> bool hermitian(const M &m, double tol) { return (m - m.adjoint()).cwiseAbs2().maxCoeff() <= tol * tol; }

// Cholesky of rho + shift*I succeeds
bool cholesky_ok(const Mat4 &rho, double shift) {
  cd l[4][4] = {};
  for (int j = 0; j < 4; ++j) {
    double d = rho(j, j).real() + shift;
    for (int k = 0; k < j; ++k)
      d -= std::norm(l[j][k]);
    if (!(d > 0))
      return false;
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < 4; ++i) {
      cd v = rho(i, j);
      for (int k = 0; k < j; ++k)
        v -= l[i][k] * std::conj(l[j][k]);
      l[i][j] = v / l[j][j].real();
    }
  }
  return true;
}

// orthonormal basis of the complement of span(basis) in C^dim
std::vector<Eigen::VectorXcd> complement_basis(const std::vector<Eigen::VectorXcd> &basis, int dim) {
  std::vector<Eigen::VectorXcd> all = basis, out;
  for (int k = 0; k < dim && static_cast<int>(all.size()) < dim; ++k) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e(k) = 1;
    for (const auto &b : all)
      e -= b.dot(e) * b;
    for (const auto &b : all)
      e -= b.dot(e) * b;
    if (e.norm() < 1e-6)
      continue;
    e.normalize();
    all.push_back(e);
    out.push_back(e);
  }
  return out;
}

} // namespace

// ---- tolerances ----

Tolerances tolerance_profile(const std::string &name) {
  if (name.empty() || name == "default")
    return {"default", 1e-10, 1e-9, 1e-8};
  if (name == "strict")
    return {"strict", 1e-12, 1e-11, 1e-10};
  if (name == "loose")
    return {"loose", 1e-8, 1e-7, 1e-6};
  throw QuantumDomainError("unknown tolerance profile '" + name + "'");
}

const Tolerances &tolerances() {
  static const Tolerances t = [] {
    const char *env = std::getenv("HIDDENSAT_TOLERANCE_PROFILE");
    return tolerance_profile(env ? env : "");
  }();
  return t;
}

// ---- states ----

Eigen::VectorXcd canonical_phase(const Eigen::VectorXcd &v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    double a = std::abs(v(k));
    if (a > 1e-12)
      return v * (std::conj(v(k)) / a);
  }
  return v;
}

PureState1Q::PureState1Q(const Vec2 &a) {
  if (std::abs(a.norm() - 1.0) > 1e-12)
    throw QuantumDomainError("single-qubit state is not normalised");
  amp = canonical_phase(a);
}

PureState2Q::PureState2Q(const Vec4 &a) {
  if (std::abs(a.norm() - 1.0) > 1e-12)
    throw QuantumDomainError("two-qubit state is not normalised");
  amp = canonical_phase(a);
}

Vec2 orthogonal(const Vec2 &s) { return canonical_phase(Vec2(std::conj(s(1)), -std::conj(s(0)))); }

Vec4 orthogonal(const Vec4 &s) {
  for (int k = 0; k < 4; ++k) {
    Vec4 e = Vec4::Zero();
    e(k) = 1;
    Vec4 r = e - s.dot(e) * s;
    if (r.squaredNorm() < 1e-6)
      continue;
    r -= s.dot(r) * s;
    r.normalize();
    for (int j = 0; j < 4; ++j)
      if (std::abs(r(j)) > 1e-12)
        return r * (std::conj(r(j)) / std::abs(r(j)));
    return r;
  }
  return Vec4(0, 1, 0, 0);
}

PureState1Q orthogonal_1q(const PureState1Q &s) {
  PureState1Q r;
  r.amp = orthogonal(s.amp);
  return r;
}

PureState2Q canonical_orthogonal_2q(const PureState2Q &s) {
  PureState2Q r;
  r.amp = orthogonal(s.amp);
  return r;
}

Eigen::Vector3d bloch_vector(const Vec2 &s) {
  cd c = std::conj(s(0)) * s(1);
  return {2 * c.real(), 2 * c.imag(), std::norm(s(0)) - std::norm(s(1))};
}

Vec2 from_bloch(const Eigen::Vector3d &r) {
  Eigen::Vector3d u = r.normalized();
  double theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
  double phi = std::atan2(u.y(), u.x());
  return canonical_phase(Vec2(std::cos(theta / 2), std::polar(std::sin(theta / 2), phi)));
}

Eigen::VectorXcd random_state(int dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(dim);
  for (int k = 0; k < dim; ++k) {
    double re = g(rng);
    double im = g(rng);
    v(k) = cd(re, im);
  }
  return canonical_phase(v.normalized());
}

// ---- projectors ----

Projector Projector::from_basis(int id, std::vector<int> qubits, std::vector<Eigen::VectorXcd> basis) {
  Projector p;
  p.id_ = id;
  p.qubits_ = std::move(qubits);
  int arity = p.arity();
  if (arity != 1 && arity != 2)
    throw QuantumDomainError("projector arity must be 1 or 2");
  int dim = 1 << arity;
  for (auto &v : basis) {
    if (v.size() != dim)
      throw QuantumDomainError("basis vector has the wrong dimension");
    for (const auto &b : p.basis_)
      v -= b.dot(v) * b;
    for (const auto &b : p.basis_)
      v -= b.dot(v) * b;
    if (v.norm() < 1e-8)
      throw QuantumDomainError("projector basis is linearly dependent");
    p.basis_.push_back(canonical_phase(v.normalized()));
  }
  p.matrix_ = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto &b : p.basis_)
    p.matrix_ += b * b.adjoint();
  if (arity == 1)
    p.m2_ = p.matrix_;
  else
    p.m4_ = p.matrix_;
  p.validate();
  return p;
}

void Projector::validate() const {
  double tol = tolerances().construct;
  int arity = this->arity();
  if (arity == 1 && (rank() != 1 || qubits_[0] < 1))
    throw QuantumDomainError("1-local projector must have rank 1");
  if (arity == 2 && (rank() < 1 || rank() > 3 || qubits_[0] == qubits_[1] || qubits_[0] < 1 || qubits_[1] < 1))
    throw QuantumDomainError("2-local projector must have rank 1..3 on two distinct qubits");
  if (!hermitian(matrix_, tol))
    throw QuantumDomainError("projector is not Hermitian");
  if ((matrix_ * matrix_ - matrix_).cwiseAbs().maxCoeff() > tol)
    throw QuantumDomainError("projector is not idempotent");
  if (std::abs(matrix_.trace().real() - rank()) > tol)
    throw QuantumDomainError("projector trace differs from its rank");
}

double frobenius_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw QuantumDomainError("shape mismatch");
  return (a - b).norm();
}

double frobenius_distance(const Projector &a, const Projector &b) { return frobenius_distance(a.matrix(), b.matrix()); }

double state_distance(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * std::norm(a.dot(b))));
}

double principal_angle(const std::vector<Eigen::VectorXcd> &a, const std::vector<Eigen::VectorXcd> &b) {
  if (a.size() != b.size() || a.empty())
    return kPi / 2;
  auto orth = [](const std::vector<Eigen::VectorXcd> &v) {
    Eigen::MatrixXcd m(v[0].size(), v.size());
    for (size_t k = 0; k < v.size(); ++k)
      m.col(k) = v[k];
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    return Eigen::MatrixXcd(qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), m.cols()));
  };
  Eigen::MatrixXcd qa = orth(a), qb = orth(b);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(qa.adjoint() * qb);
  double smin = svd.singularValues().minCoeff();
  return std::acos(std::clamp(smin, -1.0, 1.0));
}

// ---- product trials ----

ProductTrialState ProductTrialState::mixed(int n) {
  ProductTrialState t;
  t.where_.assign(n, Slot{});
  t.singles_.assign(n, Mat2::Identity() / 2.0);
  return t;
}

void ProductTrialState::set(int q, const Mat2 &rho) {
  if (q < 1 || q > n())
    throw QuantumDomainError("qubit out of range");
  if (where_[q - 1].block >= 0)
    throw QuantumDomainError("qubit already belongs to a two-qubit block");
  singles_[q - 1] = rho;
}

void ProductTrialState::set(int u, int v, const Mat4 &rho) {
  if (u < 1 || v < 1 || u > n() || v > n() || u == v)
    throw QuantumDomainError("bad qubit pair");
  if (where_[u - 1].block >= 0 || where_[v - 1].block >= 0)
    throw QuantumDomainError("qubit already belongs to a two-qubit block");
  int b = static_cast<int>(pairs_.size());
  pairs_.push_back({u, v, rho});
  where_[u - 1] = {b, 0};
  where_[v - 1] = {b, 1};
}

Mat2 ProductTrialState::reduce(int q) const {
  const Slot &s = where_[q - 1];
  if (s.block < 0)
    return singles_[q - 1];
  const Mat4 &r = pairs_[s.block].rho;
  Mat2 out;
  if (s.pos == 0) {
    out(0, 0) = r(0, 0) + r(1, 1);
    out(0, 1) = r(0, 2) + r(1, 3);
    out(1, 0) = r(2, 0) + r(3, 1);
    out(1, 1) = r(2, 2) + r(3, 3);
  } else {
    out(0, 0) = r(0, 0) + r(2, 2);
    out(0, 1) = r(0, 1) + r(2, 3);
    out(1, 0) = r(1, 0) + r(3, 2);
    out(1, 1) = r(1, 1) + r(3, 3);
  }
  return out;
}

Mat4 ProductTrialState::reduce(int u, int v) const {
  const Slot &a = where_[u - 1], &b = where_[v - 1];
  if (a.block >= 0 && a.block == b.block)
    return a.pos == 0 ? pairs_[a.block].rho : swap_qubits(pairs_[a.block].rho);
  return kron(reduce(u), reduce(v));
}

Eigen::MatrixXcd ProductTrialState::reduce_to(const std::vector<int> &qubits) const {
  for (int q : qubits)
    if (q < 1 || q > n())
      throw QuantumDomainError("qubit out of range");
  if (qubits.size() == 1)
    return reduce(qubits[0]);
  if (qubits.size() == 2)
    return reduce(qubits[0], qubits[1]);
  throw QuantumDomainError("reduce_to supports one or two qubits");
}

bool ProductTrialState::is_mixed(int q) const {
  const Slot &s = where_[q - 1];
  return s.block < 0 && (singles_[q - 1] - Mat2::Identity() / 2.0).cwiseAbs().maxCoeff() == 0.0;
}

std::vector<TrialBlock> ProductTrialState::blocks() const {
  std::vector<TrialBlock> out;
  for (int q = 1; q <= n(); ++q) {
    const Slot &s = where_[q - 1];
    if (s.block < 0) {
      out.push_back({{q}, singles_[q - 1]});
    } else if (s.pos == 0) {
      const Pair &p = pairs_[s.block];
      out.push_back({{p.u, p.v}, p.rho});
    }
  }
  return out;
}

void ProductTrialState::validate() const {
  double tol = tolerances().construct;
  for (int q = 1; q <= n(); ++q) {
    if (where_[q - 1].block >= 0)
      continue;
    const Mat2 &r = singles_[q - 1];
    if (!hermitian(r, tol) || std::abs(r.trace().real() - 1) > tol)
      throw QuantumDomainError("malformed single-qubit block");
    double det = (r(0, 0) * r(1, 1) - r(0, 1) * r(1, 0)).real();
    if (det < -tol || r(0, 0).real() < -tol || r(1, 1).real() < -tol)
      throw QuantumDomainError("single-qubit block is not positive semidefinite");
  }
  for (const auto &p : pairs_) {
    if (!hermitian(p.rho, tol) || std::abs(p.rho.trace().real() - 1) > tol)
      throw QuantumDomainError("malformed two-qubit block");
    if (!cholesky_ok(p.rho, 1e-9))
      throw QuantumDomainError("two-qubit block is not positive semidefinite");
  }
}

void ProductTrialState::hash_into(std::uint64_t &h) const {
  mix(h, static_cast<std::uint64_t>(n()));
  for (int q = 1; q <= n(); ++q) {
    const Slot &s = where_[q - 1];
    if (s.block < 0) {
      mix(h, static_cast<std::uint64_t>(q));
      const Mat2 &r = singles_[q - 1];
      for (int k = 0; k < 4; ++k) {
        mix(h, r.data()[k].real());
        mix(h, r.data()[k].imag());
      }
    } else if (s.pos == 0) {
      const Pair &p = pairs_[s.block];
      mix(h, static_cast<std::uint64_t>(p.u * 64 + p.v));
      for (int k = 0; k < 16; ++k) {
        mix(h, p.rho.data()[k].real());
        mix(h, p.rho.data()[k].imag());
      }
    }
  }
}

double violation_energy(const Projector &p, const ProductTrialState &trial) {
  const auto &q = p.qubits();
  double e;
  if (q.size() == 1)
    e = p.m2().cwiseProduct(trial.reduce(q[0]).transpose()).sum().real();
  else
    e = p.m4().cwiseProduct(trial.reduce(q[0], q[1]).transpose()).sum().real();
  return std::max(0.0, e);
}

// ---- instances ----

const Projector &QsatInstance::projector(int id) const {
  for (const auto &p : projectors)
    if (p.id() == id)
      return p;
  throw QuantumDomainError("unknown projector id " + std::to_string(id));
}

void QsatInstance::validate() const {
  if (n < 0 || epsilon <= 0)
    throw QuantumDomainError("instance needs n >= 0 and epsilon > 0");
  std::set<int> ids;
  std::set<std::vector<int>> supports;
  for (const auto &p : projectors) {
    p.validate();
    if (!ids.insert(p.id()).second)
      throw QuantumDomainError("duplicate projector id");
    for (int q : p.qubits())
      if (q > n)
        throw QuantumDomainError("projector qubit out of range");
    auto s = p.qubits();
    std::sort(s.begin(), s.end());
    if (!supports.insert(s).second && !allow_repetition)
      throw QuantumDomainError("repeated projector support in a repetition-free instance");
  }
}

std::vector<std::pair<int, int>> QsatInstance::edges() const {
  std::vector<std::pair<int, int>> e;
  for (const auto &p : projectors)
    if (p.arity() == 2)
      e.emplace_back(std::min(p.qubits()[0], p.qubits()[1]), std::max(p.qubits()[0], p.qubits()[1]));
  return e;
}

bool QsatInstance::is_star_like() const {
  auto e = edges();
  for (auto [u, v] : e) {
    bool all = std::all_of(e.begin(), e.end(), [&](auto f) {
      return f.first == u || f.first == v || f.second == u || f.second == v;
    });
    if (all)
      return true;
  }
  return false;
}

std::string QsatInstance::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["epsilon"] = epsilon;
  j["projectors"] = nlohmann::json::array();
  for (const auto &p : projectors) {
    nlohmann::json basis = nlohmann::json::array();
    for (const auto &b : p.basis()) {
      nlohmann::json v = nlohmann::json::array();
      for (Eigen::Index k = 0; k < b.size(); ++k)
        v.push_back({b(k).real(), b(k).imag()});
      basis.push_back(v);
    }
    j["projectors"].push_back({{"id", p.id()}, {"qubits", p.qubits()}, {"rank", p.rank()}, {"basis", basis}});
  }
  return j.dump();
}

QsatInstance QsatInstance::from_json(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw QuantumDomainError(std::string("bad instance json: ") + e.what());
  }
  QsatInstance inst;
  inst.n = j.at("n").get<int>();
  inst.epsilon = j.at("epsilon").get<double>();
  std::set<std::vector<int>> supports;
  for (const auto &pj : j.at("projectors")) {
    std::vector<Eigen::VectorXcd> basis;
    for (const auto &vj : pj.at("basis")) {
      Eigen::VectorXcd v(vj.size());
      for (size_t k = 0; k < vj.size(); ++k)
        v(k) = cd(vj[k][0].get<double>(), vj[k][1].get<double>());
      basis.push_back(v);
    }
    auto qubits = pj.at("qubits").get<std::vector<int>>();
    Projector p = Projector::from_basis(pj.at("id").get<int>(), qubits, basis);
    if (pj.contains("rank") && pj["rank"].get<int>() != p.rank())
      throw QuantumDomainError("declared rank does not match the basis");
    std::sort(qubits.begin(), qubits.end());
    if (!supports.insert(qubits).second)
      inst.allow_repetition = true;
    inst.projectors.push_back(std::move(p));
  }
  inst.validate();
  return inst;
}

QsatInstance QsatInstance::load(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw QuantumDomainError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void QsatInstance::save(const std::string &path) const {
  std::ofstream out(path);
  if (!out)
    throw QuantumDomainError("cannot write " + path);
  out << to_json() << "\n";
}

Eigen::MatrixXcd hamiltonian(const QsatInstance &inst) {
  int n = inst.n;
  if (n > 10)
    throw QuantumDomainError("dense Hamiltonian limited to n <= 10");
  int dim = 1 << n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto &p : inst.projectors) {
    const auto &q = p.qubits();
    if (q.size() == 1) {
      int bit = n - q[0];
      for (int x = 0; x < dim; ++x) {
        int b = (x >> bit) & 1;
        for (int b2 = 0; b2 < 2; ++b2)
          h((x & ~(1 << bit)) | (b2 << bit), x) += p.m2()(b2, b);
      }
    } else {
      int bu = n - q[0], bv = n - q[1];
      int clear = ~((1 << bu) | (1 << bv));
      for (int x = 0; x < dim; ++x) {
        int l = 2 * ((x >> bu) & 1) + ((x >> bv) & 1);
        for (int l2 = 0; l2 < 4; ++l2)
          h((x & clear) | ((l2 >> 1) << bu) | ((l2 & 1) << bv), x) += p.m4()(l2, l);
      }
    }
  }
  return h;
}

double ground_energy(const QsatInstance &inst) {
  Eigen::MatrixXcd h = hamiltonian(inst);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw QuantumDomainError("eigensolver failed");
  return es.eigenvalues()(0);
}

QsatInstance generate_instance(const InstanceSpec &spec, std::uint64_t seed) {
  if (!spec.ranks.empty() && spec.ranks.size() != spec.edges.size())
    throw QuantumDomainError("one rank per edge expected");
  std::set<std::pair<int, int>> seen;
  bool repeated = false;
  for (auto [u, v] : spec.edges) {
    if (u < 1 || v < 1 || u > spec.n || v > spec.n || u == v)
      throw QuantumDomainError("bad edge");
    repeated |= !seen.insert({std::min(u, v), std::max(u, v)}).second;
  }
  std::set<int> seen_sites;
  for (int q : spec.sites) {
    if (q < 1 || q > spec.n)
      throw QuantumDomainError("bad site");
    repeated |= !seen_sites.insert(q).second;
  }
  auto rank_of = [&](size_t e) { return spec.ranks.empty() ? 1 : spec.ranks[e]; };

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 500; ++attempt) {
    QsatInstance inst;
    inst.n = spec.n;
    inst.epsilon = spec.epsilon;
    inst.allow_repetition = repeated;
    std::vector<Eigen::VectorXcd> g;
    for (int q = 0; q < spec.n; ++q)
      g.push_back(random_state(2, rng));
    int id = 1;
    for (size_t e = 0; e < spec.edges.size(); ++e) {
      auto [u, v] = spec.edges[e];
      int r = rank_of(e);
      std::vector<Eigen::VectorXcd> basis;
      if (spec.satisfiable) {
        Eigen::VectorXcd allowed(4);
        allowed << g[u - 1](0) * g[v - 1](0), g[u - 1](0) * g[v - 1](1), g[u - 1](1) * g[v - 1](0),
            g[u - 1](1) * g[v - 1](1);
        auto comp = complement_basis({allowed}, 4);
        for (int k = 0; k < r; ++k) {
          Eigen::VectorXcd c = random_state(3, rng);
          basis.push_back(c(0) * comp[0] + c(1) * comp[1] + c(2) * comp[2]);
        }
      } else {
        for (int k = 0; k < r; ++k)
          basis.push_back(random_state(4, rng));
      }
      inst.projectors.push_back(Projector::from_basis(id++, {u, v}, basis));
    }
    for (int q : spec.sites) {
      Eigen::VectorXcd s = spec.satisfiable ? Eigen::VectorXcd(orthogonal(Vec2(g[q - 1]))) : random_state(2, rng);
      inst.projectors.push_back(Projector::pure(id++, {q}, s));
    }
    if (spec.require_non_star && inst.is_star_like())
      throw QuantumDomainError("graph is star-like");
    inst.validate();
    if (spec.satisfiable)
      return inst;
    if (spec.n > 10)
      throw QuantumDomainError("cannot certify the promise gap for n > 10");
    if (ground_energy(inst) > inst.m() * 2 * spec.epsilon * spec.epsilon)
      return inst;
  }
  throw QuantumDomainError("could not certify the promise gap");
}

// ---- nets ----

GradedNet::GradedNet(int dim, double gamma, double stretch) : dim_(dim), gamma_(gamma) {
  if (dim < 1 || dim > 4 || gamma <= 0)
    throw QuantumDomainError("graded net needs 1 <= dim <= 4 and gamma > 0");
  if (dim == 1) {
    points_.push_back(Eigen::VectorXcd::Ones(1));
    return;
  }
  double diam = 2 * frob_to_angle(gamma) * stretch;
  nodes_.push_back({});
  half_.assign(dim, 0.0);
  std::vector<double> ang(2 * (dim - 1)), hi_sin(dim, 1.0);
  build(0, ang, hi_sin, diam * diam, 0);
}

// each cell is a coordinate box whose metric extents e_l satisfy sum e_l^2 <= budget;
// slack left by rounding at one level is handed to the deeper levels
void GradedNet::build(int level, std::vector<double> &ang, std::vector<double> &hi_sin, double budget, int node) {
  int levels = 2 * (dim_ - 1), nang = dim_ - 1;
  double span, coef = 1.0;
  if (level < nang) {
    for (int j = 0; j < level; ++j)
      coef *= hi_sin[j];
    span = kPi / 2;
  } else {
    int k = level - nang + 1;
    for (int j = 0; j < k; ++j)
      coef *= hi_sin[j];
    if (k < dim_ - 1)
      coef *= std::cos(std::max(0.0, ang[k] - half_[k]));
    span = 2 * kPi;
  }
  double target = std::sqrt(std::max(budget, 0.0) / (levels - level));
  int count = std::max(1, static_cast<int>(std::ceil(span * coef / target - 1e-12)));
  double step = span / count, extent = coef * step;
  double rest = budget - extent * extent;
  nodes_[node].step = step;
  nodes_[node].count = count;
  if (level == levels - 1) {
    nodes_[node].first_child = static_cast<int>(points_.size());
    for (int i = 0; i < count; ++i) {
      ang[level] = i * step;
      points_.push_back(point_from(ang));
    }
    return;
  }
  int first = static_cast<int>(nodes_.size());
  nodes_[node].first_child = first;
  nodes_.resize(nodes_.size() + count);
  for (int i = 0; i < count; ++i) {
    if (level < nang) {
      ang[level] = (i + 0.5) * step;
      half_[level] = step / 2;
      hi_sin[level] = std::sin(std::min(kPi / 2, (i + 1) * step));
    } else {
      ang[level] = i * step;
    }
    build(level + 1, ang, hi_sin, rest, first + i);
  }
}

Eigen::VectorXcd GradedNet::point_from(const std::vector<double> &ang) const {
  int nang = dim_ - 1;
  Eigen::VectorXcd v(dim_);
  double s = 1.0;
  for (int k = 0; k < dim_; ++k) {
    double r = k < nang ? s * std::cos(ang[k]) : s;
    if (k < nang)
      s *= std::sin(ang[k]);
    v(k) = k == 0 ? cd(r, 0) : std::polar(r, ang[nang + k - 1]);
  }
  return v;
}

const Eigen::VectorXcd &GradedNet::cell_point(const Eigen::VectorXcd &s) const {
  if (dim_ == 1)
    return points_[0];
  int nang = dim_ - 1;
  std::vector<double> ang(2 * nang);
  double ph0 = std::arg(s(0));
  for (int k = 0; k < nang; ++k)
    ang[k] = std::atan2(s.tail(dim_ - k - 1).norm(), std::abs(s(k)));
  for (int k = 1; k < dim_; ++k) {
    double ph = std::arg(s(k)) - ph0;
    ph = std::fmod(ph, 2 * kPi);
    ang[nang + k - 1] = ph < 0 ? ph + 2 * kPi : ph;
  }
  int node = 0;
  for (int level = 0; level < 2 * nang; ++level) {
    const Node &nd = nodes_[node];
    int idx;
    if (level < nang)
      idx = std::min(nd.count - 1, static_cast<int>(ang[level] / nd.step));
    else
      idx = static_cast<int>(std::lround(ang[level] / nd.step)) % nd.count;
    if (level == 2 * nang - 1)
      return points_[nd.first_child + idx];
    node = nd.first_child + idx;
  }
  return points_[0];
}

double GradedNet::certify(int probes, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int i = 0; i < probes; ++i) {
    Eigen::VectorXcd s = random_state(dim_, rng);
    worst = std::max(worst, state_distance(s, cell_point(s)));
  }
  return worst;
}

std::unique_ptr<GradedNet> GradedNet::tuned(int dim, double gamma) {
  // sampled covering radius grows about linearly with the stretch; calibrate on a coarse build
  const double probe_stretch = 1.6;
  double cov = GradedNet(dim, gamma, probe_stretch).certify(20000, 11);
  double stretch = std::max(1.0, probe_stretch * 0.97 * gamma / std::max(cov, 1e-12));
  for (int attempt = 0; attempt < 20; ++attempt) {
    auto net = std::make_unique<GradedNet>(dim, gamma, stretch);
    if (net->certify(100000, 13 + attempt) <= 0.98 * gamma)
      return net;
    stretch = std::max(1.0, stretch * 0.97);
  }
  throw QuantumDomainError("graded net covering certification failed");
}

const GradedNet &full_two_qubit_net(double gamma) {
  static std::mutex mu;
  static std::map<double, std::unique_ptr<GradedNet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto &slot = cache[gamma];
  if (!slot)
    slot = GradedNet::tuned(4, gamma);
  return *slot;
}

std::vector<Eigen::VectorXcd> complement_net(const std::vector<Eigen::VectorXcd> &basis, double gamma) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::unique_ptr<GradedNet>> cache;
  std::vector<Eigen::VectorXcd> ortho;
  for (auto v : basis) {
    for (const auto &b : ortho)
      v -= b.dot(v) * b;
    if (v.norm() > 1e-8)
      ortho.push_back(v.normalized());
  }
  auto comp = complement_basis(ortho, 4);
  std::vector<Eigen::VectorXcd> out;
  if (comp.empty())
    return out;
  const GradedNet *g;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto &slot = cache[{static_cast<int>(comp.size()), gamma}];
    if (!slot)
      slot = GradedNet::tuned(static_cast<int>(comp.size()), gamma);
    g = slot.get();
  }
  out.reserve(g->points().size());
  for (const auto &c : g->points()) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    for (size_t k = 0; k < comp.size(); ++k)
      v += c(k) * comp[k];
    out.push_back(canonical_phase(v.normalized()));
  }
  return out;
}

namespace {

std::vector<Eigen::Vector3d> fibonacci(int count) {
  std::vector<Eigen::Vector3d> pts;
  double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / count;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    pts.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  return pts;
}

double bloch_covering(const std::vector<Eigen::Vector3d> &pts, int probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double worst_cos = 1.0;
  for (int i = 0; i < probes; ++i) {
    Eigen::Vector3d x;
    for (int k = 0; k < 3; ++k)
      x(k) = g(rng);
    x.normalize();
    double best = -1.0;
    for (const auto &p : pts)
      best = std::max(best, p.dot(x));
    worst_cos = std::min(worst_cos, best);
  }
  // Bloch angle b maps to Frobenius distance sqrt(2) sin(b/2)
  return std::sqrt(2.0) * std::sin(std::acos(std::clamp(worst_cos, -1.0, 1.0)) / 2);
}

} // namespace

// exp-mapped D6* lattice around `center`, sorted by distance from the centre
std::vector<Eigen::VectorXcd> ball_net_points(const Vec4 &center, double radius, double gamma) {
  Vec4 c = canonical_phase(center.normalized());
  if (radius <= 0)
    return {Eigen::VectorXcd(c)};
  double big = frob_to_angle(radius), small = frob_to_angle(gamma);
  double reach = std::min(kPi / 2, big + small);
  double pitch = small / (std::sqrt(3.0) / 2.0) * 0.97;
  auto comp = complement_basis({Eigen::VectorXcd(c)}, 4);
  std::vector<Vec4> dirs;
  for (const auto &u : comp) {
    dirs.push_back(u);
    dirs.push_back(cd(0, 1) * u);
  }
  int lim = static_cast<int>(std::ceil(reach / pitch)) + 1;
  struct Item {
    double norm;
    std::array<int, 7> key;
    Eigen::VectorXcd v;
  };
  std::vector<Item> items;
  std::array<int, 6> z{};
  for (int shift = 0; shift < 2; ++shift) {
    double off = shift * 0.5;
    std::fill(z.begin(), z.end(), -lim);
    while (true) {
      double x[6], n2 = 0;
      for (int k = 0; k < 6; ++k) {
        x[k] = (z[k] + off) * pitch;
        n2 += x[k] * x[k];
      }
      if (n2 <= reach * reach) {
        double r = std::sqrt(n2);
        Vec4 v = Vec4::Zero();
        for (int k = 0; k < 6; ++k)
          v += x[k] * dirs[k];
        Vec4 s = r > 0 ? Vec4(std::cos(r) * c + std::sin(r) / r * v) : c;
        std::array<int, 7> key{shift, z[0], z[1], z[2], z[3], z[4], z[5]};
        items.push_back({r, key, canonical_phase(Eigen::VectorXcd(s.normalized()))});
      }
      int k = 0;
      while (k < 6 && ++z[k] > lim)
        z[k++] = -lim;
      if (k == 6)
        break;
    }
  }
  std::sort(items.begin(), items.end(), [](const Item &a, const Item &b) {
    return a.norm != b.norm ? a.norm < b.norm : a.key < b.key;
  });
  std::vector<Eigen::VectorXcd> out;
  out.reserve(items.size());
  for (auto &it : items)
    out.push_back(std::move(it.v));
  return out;
}

std::vector<Eigen::VectorXcd> bloch_points(double gamma) {
  static std::mutex mu;
  static std::map<double, std::vector<Eigen::VectorXcd>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(gamma);
  if (it != cache.end())
    return it->second;
  double b = 2 * frob_to_angle(gamma);
  int count = std::max(2, static_cast<int>(std::ceil(4.0 * 1.25 / (b * b))));
  std::vector<Eigen::Vector3d> pts;
  for (int attempt = 0;; ++attempt) {
    pts = fibonacci(count);
    if (bloch_covering(pts, 20000, 91 + attempt) <= 0.97 * gamma)
      break;
    if (attempt > 60)
      throw QuantumDomainError("Bloch net covering certification failed");
    count = count + count / 10 + 1;
  }
  std::vector<Eigen::VectorXcd> out;
  for (const auto &p : pts)
    out.push_back(Eigen::VectorXcd(from_bloch(p)));
  return cache[gamma] = out;
}

EpsilonNet build_net(NetSpace space, double gamma, std::optional<Ball> ball) {
  if (gamma <= 0)
    throw QuantumDomainError("net pitch must be positive");
  EpsilonNet net;
  net.space = space;
  net.gamma = gamma;
  if (ball) {
    net.center = canonical_phase(ball->center.normalized());
    net.radius = ball->radius;
  }
  if (space == NetSpace::Bloch) {
    auto pts = bloch_points(gamma);
    if (ball) {
      if (ball->radius <= 0) {
        net.points = {*net.center};
        return net;
      }
      for (const auto &p : pts)
        if (state_distance(p, *net.center) <= ball->radius + gamma)
          net.points.push_back(p);
    } else {
      net.points = std::move(pts);
    }
  } else if (ball) {
    net.points = ball_net_points(Vec4(*net.center), ball->radius, gamma);
  } else {
    net.points = full_two_qubit_net(gamma).points();
  }
  if (certify_covering(net, 4000, 7) > gamma)
    throw QuantumDomainError("net covering certification failed");
  return net;
}

double certify_covering(const EpsilonNet &net, int probes, std::uint64_t seed) {
  int dim = net.space == NetSpace::Bloch ? 2 : 4;
  if (!net.center && net.space == NetSpace::TwoQubit)
    return full_two_qubit_net(net.gamma).certify(probes, seed);
  if (net.center && net.radius <= 0)
    return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0;
  for (int i = 0; i < probes; ++i) {
    Eigen::VectorXcd s = random_state(dim, rng);
    if (net.center) {
      // pull the probe into the ball along the geodesic from the centre
      const Eigen::VectorXcd &c = *net.center;
      Eigen::VectorXcd t = s - c.dot(s) * c;
      if (t.norm() < 1e-12)
        continue;
      t.normalize();
      double r = frob_to_angle(net.radius) * unif(rng);
      s = std::cos(r) * c + std::sin(r) * t;
    }
    double best = 1e9;
    for (const auto &p : net.points)
      best = std::min(best, state_distance(s, p));
    worst = std::max(worst, best);
  }
  return worst;
}

} // namespace hsat

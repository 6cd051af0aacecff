#include "hiddensat/oracle_quantum.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hsat {

namespace {

std::uint64_t splitmix(std::uint64_t &x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

nlohmann::json matrix_json(const Eigen::MatrixXcd &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

} // namespace

QTieBreak QTieBreak::from_name(const std::string &name, std::uint64_t seed) {
  if (name == "lowest")
    return lowest();
  if (name == "highest")
    return highest();
  if (name == "random")
    return random(seed);
  if (name == "scripted")
    return scripted(seed);
  throw QuantumDomainError("unknown quantum tie policy '" + name + "'");
}

std::string QTieBreak::name() const {
  switch (kind) {
  case QPolicyKind::Lowest:
    return "lowest";
  case QPolicyKind::Highest:
    return "highest";
  case QPolicyKind::Random:
    return "random";
  case QPolicyKind::Scripted:
    return "scripted";
  }
  return "?";
}

std::string QOracleResponse::to_json() const {
  nlohmann::json j;
  if (sat) {
    j["outcome"] = "sat";
  } else {
    j["outcome"] = "violated";
    j["id"] = id;
  }
  return j.dump();
}

void QTranscript::record(const ProductTrialState &trial, const QOracleResponse &r) {
  ++total_;
  trial.hash_into(digest_);
  std::uint64_t tag = r.sat ? 0xffffffffull : static_cast<std::uint64_t>(r.id);
  digest_ = (digest_ ^ tag) * 0x100000001b3ull;
  if (keep_)
    entries_.push_back({total_, trial.blocks(), r});
  if (sink_)
    *sink_ << entry_json({total_, trial.blocks(), r}) << "\n";
}

std::string QTranscript::entry_json(const QTranscriptEntry &e) {
  nlohmann::json j;
  j["seq"] = e.seq;
  j["blocks"] = nlohmann::json::array();
  for (const auto &b : e.blocks)
    j["blocks"].push_back({{"qubits", b.qubits}, {"matrix", matrix_json(b.rho)}});
  j["response"] = nlohmann::json::parse(e.response.to_json());
  return j.dump();
}

std::string QTranscript::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest_));
  return buf;
}

std::string QTranscript::to_jsonl() const {
  std::ostringstream out;
  for (const auto &e : entries_)
    out << entry_json(e) << "\n";
  return out.str();
}

void QTranscript::write_jsonl(const std::string &path) const {
  std::ofstream out(path);
  if (!out)
    throw QuantumDomainError("cannot write " + path);
  out << to_jsonl();
}

HiddenQsat::HiddenQsat(QsatInstance inst, QOracleOptions opts)
    : inst_(std::move(inst)), opts_(opts), transcript_(opts.keep_entries, opts.sink), rng_state_(opts.policy.seed) {
  inst_.validate();
  energies_.resize(inst_.m());
}

double HiddenQsat::tie_tolerance() const { return std::max(opts_.tau, opts_.precision); }

int HiddenQsat::choose(const ProductTrialState &trial, const std::vector<int> &tied) {
  switch (opts_.policy.kind) {
  case QPolicyKind::Lowest:
    return tied.front();
  case QPolicyKind::Highest:
    return tied.back();
  case QPolicyKind::Random:
    return tied[splitmix(rng_state_) % tied.size()];
  case QPolicyKind::Scripted: {
    std::uint64_t h = opts_.policy.seed ^ 0x51ed270b27a1f3c5ull;
    trial.hash_into(h);
    return tied[splitmix(h) % tied.size()];
  }
  }
  return tied.front();
}

QOracleResponse HiddenQsat::qquery(const ProductTrialState &trial) {
  if (trial.n() != inst_.n)
    throw QuantumDomainError("trial does not cover the instance qubits");
  if (opts_.validate_trials)
    trial.validate();
  double total = 0, best = -1;
  for (int k = 0; k < inst_.m(); ++k) {
    energies_[k] = violation_energy(inst_.projectors[k], trial);
    total += energies_[k];
    best = std::max(best, energies_[k]);
  }
  QOracleResponse r;
  double eps = inst_.epsilon;
  if (total > inst_.m() * eps * eps + tolerances().compare) {
    std::vector<int> tied;
    double tol = tie_tolerance();
    for (int k = 0; k < inst_.m(); ++k)
      if (energies_[k] >= best - tol)
        tied.push_back(inst_.projectors[k].id());
    std::sort(tied.begin(), tied.end());
    r = QOracleResponse::violated(choose(trial, tied));
  }
  transcript_.record(trial, r);
  return r;
}

namespace escrow {

const QsatInstance &instance(const HiddenQsat &o) { return o.inst_; }

std::vector<double> energies(const QsatInstance &inst, const ProductTrialState &trial) {
  std::vector<double> e;
  for (const auto &p : inst.projectors)
    e.push_back(violation_energy(p, trial));
  return e;
}

double total_energy(const QsatInstance &inst, const ProductTrialState &trial) {
  double t = 0;
  for (double e : energies(inst, trial))
    t += e;
  return t;
}

} // namespace escrow

} // namespace hsat

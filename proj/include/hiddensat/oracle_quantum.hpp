#pragma once

#include "hiddensat/quantum_core.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace hsat {

enum class QPolicyKind { Lowest, Highest, Random, Scripted };

struct QTieBreak {
  QPolicyKind kind = QPolicyKind::Lowest;
  std::uint64_t seed = 0;

  static QTieBreak lowest() { return {}; }
  static QTieBreak highest() { return {QPolicyKind::Highest}; }
  static QTieBreak random(std::uint64_t seed) { return {QPolicyKind::Random, seed}; }
  // choice keyed by a hash of (seed, trial)
  static QTieBreak scripted(std::uint64_t seed) { return {QPolicyKind::Scripted, seed}; }
  static QTieBreak from_name(const std::string &name, std::uint64_t seed);
  std::string name() const;
};

struct QOracleResponse {
  bool sat = true;
  int id = 0;

  static QOracleResponse satisfied() { return {}; }
  static QOracleResponse violated(int id) { return {false, id}; }
  bool operator==(const QOracleResponse &) const = default;
  std::string to_json() const;
};

struct QTranscriptEntry {
  long seq = 0;
  std::vector<TrialBlock> blocks;
  QOracleResponse response;
};

// counts every trial and folds it into a running digest; full entries only when asked
class QTranscript {
public:
  explicit QTranscript(bool keep_entries = false, std::ostream *sink = nullptr) : keep_(keep_entries), sink_(sink) {}
  void record(const ProductTrialState &trial, const QOracleResponse &r);
  static std::string entry_json(const QTranscriptEntry &e);
  long total() const { return total_; }
  std::uint64_t digest() const { return digest_; }
  std::string digest_hex() const;
  bool keeps_entries() const { return keep_; }
  const std::vector<QTranscriptEntry> &entries() const { return entries_; }
  std::string to_jsonl() const;
  void write_jsonl(const std::string &path) const;

private:
  bool keep_;
  std::ostream *sink_;
  long total_ = 0;
  std::uint64_t digest_ = 0xcbf29ce484222325ull;
  std::vector<QTranscriptEntry> entries_;
};

class QuantumOracle {
public:
  virtual ~QuantumOracle() = default;
  virtual int n() const = 0;
  virtual int m() const = 0;
  virtual double epsilon() const = 0;
  // energies within this gap of the maximum count as tied
  virtual double tie_tolerance() const = 0;
  virtual QOracleResponse qquery(const ProductTrialState &trial) = 0;
  virtual QTranscript &transcript() = 0;
};

struct QOracleOptions {
  QTieBreak policy;
  double tau = 1e-9;
  double precision = 0.0; // smallest energy gap the oracle resolves
  bool keep_entries = false;
  std::ostream *sink = nullptr; // receives each transcript line as it happens
  bool validate_trials = true;
};

class HiddenQsat;
namespace escrow {
const QsatInstance &instance(const HiddenQsat &o);
}

class HiddenQsat : public QuantumOracle {
public:
  explicit HiddenQsat(QsatInstance inst, QOracleOptions opts = {});

  int n() const override { return inst_.n; }
  int m() const override { return inst_.m(); }
  double epsilon() const override { return inst_.epsilon; }
  double tie_tolerance() const override;
  QOracleResponse qquery(const ProductTrialState &trial) override;
  QTranscript &transcript() override { return transcript_; }
  const QOracleOptions &options() const { return opts_; }

private:
  friend const QsatInstance &escrow::instance(const HiddenQsat &o);
  int choose(const ProductTrialState &trial, const std::vector<int> &tied);

  QsatInstance inst_;
  QOracleOptions opts_;
  QTranscript transcript_;
  std::uint64_t rng_state_;
  std::vector<double> energies_;
};

namespace escrow {
std::vector<double> energies(const QsatInstance &inst, const ProductTrialState &trial);
double total_energy(const QsatInstance &inst, const ProductTrialState &trial);
} // namespace escrow

} // namespace hsat

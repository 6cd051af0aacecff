#pragma once

#include "hiddensat/sat_core.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hsat {

enum class PolicyKind { Lowest, Highest, Random, Scripted, Prop5 };

struct TieBreakPolicy {
  using Chooser = std::function<int(const std::string &fingerprint, const std::vector<int> &tied)>;

  PolicyKind kind = PolicyKind::Lowest;
  std::uint64_t seed = 0;
  std::map<std::string, int> script;
  Chooser script_fn; // consulted for fingerprints missing from the table

  static TieBreakPolicy lowest() { return {}; }
  static TieBreakPolicy highest() { return {PolicyKind::Highest}; }
  static TieBreakPolicy random(std::uint64_t seed) { return {PolicyKind::Random, seed}; }
  static TieBreakPolicy scripted(std::map<std::string, int> table, Chooser fn = {});
  // deterministic table keyed by a hash of (seed, fingerprint)
  static TieBreakPolicy hashed_script(std::uint64_t seed);
  static TieBreakPolicy prop5() { return {PolicyKind::Prop5}; }
  static TieBreakPolicy from_name(const std::string &name, std::uint64_t seed);

  std::string name() const;
};

struct OracleResponse {
  enum class Kind { Sat, ViolatedId, ViolatedSet };
  Kind kind = Kind::Sat;
  int id = 0;
  std::vector<int> ids;

  static OracleResponse sat() { return {}; }
  static OracleResponse violated(int id) { return {Kind::ViolatedId, id, {}}; }
  static OracleResponse violated_set(std::vector<int> ids) {
    return {Kind::ViolatedSet, 0, std::move(ids)};
  }
  bool is_sat() const { return kind == Kind::Sat; }
  bool operator==(const OracleResponse &) const = default;
  std::string to_json() const;
};

struct TranscriptEntry {
  long seq = 0;
  std::string model;
  std::vector<Rational> assignment;
  OracleResponse response;
};

class QueryTranscript {
public:
  void append(std::string model, std::vector<Rational> a, OracleResponse r);
  const std::vector<TranscriptEntry> &entries() const { return entries_; }
  long count(const std::string &model) const;
  long total() const { return static_cast<long>(entries_.size()); }
  std::string to_jsonl() const;
  void write_jsonl(const std::string &path) const;

private:
  std::vector<TranscriptEntry> entries_;
  std::map<std::string, long> counters_;
};

class ClassicalOracle {
public:
  virtual ~ClassicalOracle() = default;
  virtual int n() const = 0;
  virtual int m() const = 0;
  virtual OracleResponse query_worst(const FractionalAssignment &a) = 0;
  virtual OracleResponse query_all(const BoolAssignment &a) = 0;
  virtual OracleResponse query_arbitrary(const BoolAssignment &a) = 0;
  virtual QueryTranscript &transcript() = 0;

  OracleResponse query_worst(const BoolAssignment &a) { return query_worst(a.as_fractional()); }
};

class HiddenFormula;

namespace escrow {
const CnfFormula &formula(const HiddenFormula &o);
}

class HiddenFormula : public ClassicalOracle {
public:
  HiddenFormula(CnfFormula f, TieBreakPolicy policy);
  static std::unique_ptr<HiddenFormula> from_dimacs(const std::string &path,
                                                    const std::string &policy,
                                                    std::uint64_t seed, int k = 0,
                                                    bool allow_repetition = true);

  int n() const override { return f_.n; }
  int m() const override { return f_.m(); }
  int k() const { return f_.k; }
  OracleResponse query_worst(const FractionalAssignment &a) override;
  OracleResponse query_all(const BoolAssignment &a) override;
  OracleResponse query_arbitrary(const BoolAssignment &a) override;
  QueryTranscript &transcript() override { return transcript_; }
  using ClassicalOracle::query_worst;

private:
  friend const CnfFormula &escrow::formula(const HiddenFormula &);
  int choose(const FractionalAssignment &a, const std::vector<int> &tied);
  void check_size(int size) const;

  CnfFormula f_;
  TieBreakPolicy policy_;
  std::mt19937_64 rng_;
  QueryTranscript transcript_;
};

// forwards queries with pinned variables overriding the caller's values
class RestrictedView : public ClassicalOracle {
public:
  RestrictedView(ClassicalOracle &parent, std::map<int, bool> pins);

  int n() const override { return parent_.n(); }
  int m() const override { return parent_.m(); }
  OracleResponse query_worst(const FractionalAssignment &a) override;
  OracleResponse query_all(const BoolAssignment &a) override;
  OracleResponse query_arbitrary(const BoolAssignment &a) override;
  QueryTranscript &transcript() override { return parent_.transcript(); }
  using ClassicalOracle::query_worst;

private:
  ClassicalOracle &parent_;
  std::map<int, bool> pins_;
};

std::unique_ptr<RestrictedView> restricted_view(ClassicalOracle &parent, std::map<int, bool> pins);

// literal-polarity flip layer: flipped variables see p -> 1-p
class FlippedView : public ClassicalOracle {
public:
  FlippedView(ClassicalOracle &parent, std::vector<bool> flip);

  int n() const override { return parent_.n(); }
  int m() const override { return parent_.m(); }
  OracleResponse query_worst(const FractionalAssignment &a) override;
  OracleResponse query_all(const BoolAssignment &a) override;
  OracleResponse query_arbitrary(const BoolAssignment &a) override;
  QueryTranscript &transcript() override { return parent_.transcript(); }
  using ClassicalOracle::query_worst;

  Literal to_parent(Literal l) const;

private:
  FractionalAssignment map(const FractionalAssignment &a) const;
  BoolAssignment map(const BoolAssignment &a) const;

  ClassicalOracle &parent_;
  std::vector<bool> flip_;
};

} // namespace hsat

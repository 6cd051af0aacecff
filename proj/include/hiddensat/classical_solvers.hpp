#pragma once

#include "hiddensat/oracle_classical.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hsat {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LearnedClause {
  std::vector<Literal> literals;
  std::vector<int> oracle_ids; // empty when the clause was inferred, not returned
};

struct LearnedFormula {
  int n = 0;
  std::vector<LearnedClause> clauses;

  CnfFormula to_cnf() const;
  std::string sidecar_json() const;
  void write(const std::string &dimacs_path, const std::string &sidecar_path) const;
};

// all clause types of width <= k over n variables, narrow types first
class ClauseTypeCatalog {
public:
  ClauseTypeCatalog(int n, int k);
  const std::vector<std::vector<Literal>> &types() const { return types_; }
  size_t size() const { return types_.size(); }
  static long count(int n, int k);

private:
  std::vector<std::vector<Literal>> types_;
};

struct AllViolatedResult {
  bool sat = false;
  BoolAssignment assignment;
  std::map<std::vector<Literal>, std::vector<int>> type_ids; // only nonempty types
  long queries = 0;
  long bound = 0;

  LearnedFormula learned(int n) const;
};

AllViolatedResult learn_all_violated(ClassicalOracle &oracle, int n, int k, int m);

struct WidesatResult {
  LearnedFormula formula;
  long queries = 0;
  long bound = 0;
  std::vector<int> distinguishing_subset;
};

WidesatResult learn_widesat(ClassicalOracle &oracle, int n, int m);

struct Hsat1Result {
  bool sat = false;
  BoolAssignment assignment;
  std::vector<std::vector<std::vector<std::uint8_t>>> lists; // lists[i-1] = L_i
  long queries = 0;
  long bound = 0;
};

Hsat1Result solve_hsat1(ClassicalOracle &oracle, int n, int m);

struct Detection {
  enum class Kind { Present, Absent, Sat };
  Kind kind = Kind::Absent;
  int id = 0;
  BoolAssignment assignment;
};

// robust: a satisfying background probe means no clause inside T exists, so it reports
// Absent instead of stopping
Detection detect_clause(ClassicalOracle &oracle, const std::vector<Literal> &type,
                        bool robust = false);

struct Hsat2Result {
  bool sat = false;
  BoolAssignment assignment;
  LearnedFormula learned; // present types (complete only when the sweep finished)
  bool sweep_complete = false;
  long queries = 0;
};

Hsat2Result solve_hsat2_repfree(ClassicalOracle &oracle, int n, bool robust = false);

struct Learn2SatResult {
  bool satisfiable = false;
  LearnedFormula formula;
  BoolAssignment witness;
  std::vector<int> forced;
  long queries = 0;
};

Learn2SatResult learn_equivalent_2sat(ClassicalOracle &oracle, int n);

} // namespace hsat

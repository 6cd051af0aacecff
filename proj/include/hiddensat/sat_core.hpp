#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsat {

using Rational = boost::rational<std::int64_t>;

std::string to_string(const Rational &r);
Rational parse_rational(const std::string &s);

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct Literal {
  int var = 0;
  bool negated = false;

  Literal negate() const { return {var, !negated}; }
  auto operator<=>(const Literal &) const = default;
};

inline Literal pos(int v) { return {v, false}; }
inline Literal neg(int v) { return {v, true}; }

std::string to_string(Literal l);

// literals are kept sorted; this is the clause "type"
struct Clause {
  int id = 0;
  std::vector<Literal> literals;

  bool same_type(const Clause &o) const { return literals == o.literals; }
};

std::vector<Literal> normalize_type(std::vector<Literal> lits);

struct CnfFormula {
  int n = 0;
  int k = 0;
  std::vector<Clause> clauses;
  bool allow_repetition = true;

  // ids are assigned 1..m in the given order
  static CnfFormula make(int n, int k, const std::vector<std::vector<Literal>> &types,
                         bool allow_repetition = true);

  int m() const { return static_cast<int>(clauses.size()); }
  const Clause &clause(int id) const { return clauses.at(id - 1); }
  void validate() const;
};

struct FractionalAssignment {
  std::vector<Rational> probs; // probs[v-1] = Pr[x_v = 1]

  FractionalAssignment() = default;
  explicit FractionalAssignment(int n, Rational fill = Rational(1, 2))
      : probs(n, fill) {}

  int n() const { return static_cast<int>(probs.size()); }
  Rational &operator[](int v) { return probs.at(v - 1); }
  const Rational &operator[](int v) const { return probs.at(v - 1); }
  bool is_boolean() const;
  std::string fingerprint() const;
};

struct BoolAssignment {
  std::vector<std::uint8_t> values; // values[v-1]

  BoolAssignment() = default;
  explicit BoolAssignment(int n, bool fill = false) : values(n, fill) {}
  static BoolAssignment from_bits(int n, std::uint64_t bits);

  int n() const { return static_cast<int>(values.size()); }
  bool operator[](int v) const { return values.at(v - 1) != 0; }
  void set(int v, bool b) { values.at(v - 1) = b; }
  FractionalAssignment as_fractional() const;
  bool operator==(const BoolAssignment &) const = default;
};

Rational literal_false_probability(Literal l, const FractionalAssignment &a);
Rational violation_probability(const Clause &c, const FractionalAssignment &a);
bool clause_violated(const Clause &c, const BoolAssignment &a);
bool evaluate(const CnfFormula &f, const BoolAssignment &a);
bool obscures(const Clause &c1, const Clause &c2);

struct SolveResult {
  bool sat = false;
  BoolAssignment assignment;
};

SolveResult two_sat_solve(const CnfFormula &f);
SolveResult brute_force_solve(const CnfFormula &f);

// satisfying-set equality over all 2^n assignments
bool equivalent(const CnfFormula &a, const CnfFormula &b);

CnfFormula parse_dimacs(std::istream &in, int k = 0, bool allow_repetition = true);
CnfFormula read_dimacs(const std::string &path, int k = 0, bool allow_repetition = true);
void write_dimacs(std::ostream &out, const CnfFormula &f);

// generators
CnfFormula random_ksat(int n, int k, int m, bool allow_repetition, std::mt19937_64 &rng,
                       bool exact_width = false);
CnfFormula random_widesat(int n, int m, std::mt19937_64 &rng);
CnfFormula prop5_phi1();
CnfFormula prop5_phi2();

} // namespace hsat

#include "hiddensat/sat_core.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace hsat {

std::string to_string(const Rational &r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational parse_rational(const std::string &s) {
  auto slash = s.find('/');
  if (slash == std::string::npos)
    return Rational(std::stoll(s));
  return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

std::string to_string(Literal l) {
  return (l.negated ? "-x" : "x") + std::to_string(l.var);
}

std::vector<Literal> normalize_type(std::vector<Literal> lits) {
  std::sort(lits.begin(), lits.end());
  lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
  return lits;
}

CnfFormula CnfFormula::make(int n, int k, const std::vector<std::vector<Literal>> &types,
                            bool allow_repetition) {
  CnfFormula f;
  f.n = n;
  f.k = k;
  f.allow_repetition = allow_repetition;
  int id = 1;
  for (const auto &t : types) {
    Clause c;
    c.id = id++;
    c.literals = t;
    std::sort(c.literals.begin(), c.literals.end());
    f.clauses.push_back(std::move(c));
  }
  f.validate();
  return f;
}

void CnfFormula::validate() const {
  std::set<std::vector<Literal>> seen;
  for (int i = 0; i < m(); ++i) {
    const Clause &c = clauses[i];
    if (c.id != i + 1)
      throw DomainError("clause ids must be dense 1..m");
    if (c.literals.empty() || static_cast<int>(c.literals.size()) > k)
      throw DomainError("clause " + std::to_string(c.id) + " has bad width");
    for (size_t j = 0; j < c.literals.size(); ++j) {
      const Literal &l = c.literals[j];
      if (l.var < 1 || l.var > n)
        throw DomainError("literal variable out of range");
      if (j > 0 && c.literals[j - 1].var == l.var)
        throw DomainError("clause " + std::to_string(c.id) + " repeats a variable");
    }
    if (!allow_repetition && !seen.insert(c.literals).second)
      throw DomainError("repeated clause type in repetition-free formula");
  }
}

bool FractionalAssignment::is_boolean() const {
  for (const auto &p : probs)
    if (p != Rational(0) && p != Rational(1))
      return false;
  return true;
}

std::string FractionalAssignment::fingerprint() const {
  std::string s;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (i)
      s += ',';
    s += to_string(probs[i]);
  }
  return s;
}

BoolAssignment BoolAssignment::from_bits(int n, std::uint64_t bits) {
  BoolAssignment a(n);
  for (int v = 1; v <= n; ++v)
    a.set(v, (bits >> (v - 1)) & 1);
  return a;
}

FractionalAssignment BoolAssignment::as_fractional() const {
  FractionalAssignment f(n(), Rational(0));
  for (int v = 1; v <= n(); ++v)
    f[v] = values[v - 1] ? 1 : 0;
  return f;
}

Rational literal_false_probability(Literal l, const FractionalAssignment &a) {
  if (l.var < 1 || l.var > a.n())
    throw DomainError("variable x" + std::to_string(l.var) + " missing from assignment");
  const Rational &p = a[l.var];
  return l.negated ? p : Rational(1) - p;
}

Rational violation_probability(const Clause &c, const FractionalAssignment &a) {
  Rational r(1);
  for (const Literal &l : c.literals) {
    r *= literal_false_probability(l, a);
    if (r == Rational(0))
      break;
  }
  return r;
}

bool clause_violated(const Clause &c, const BoolAssignment &a) {
  for (const Literal &l : c.literals)
    if (a[l.var] != l.negated)
      return false;
  return true;
}

bool evaluate(const CnfFormula &f, const BoolAssignment &a) {
  for (const Clause &c : f.clauses)
    if (clause_violated(c, a))
      return false;
  return true;
}

bool obscures(const Clause &c1, const Clause &c2) {
  if (c1.literals.size() >= c2.literals.size())
    return false;
  return std::includes(c2.literals.begin(), c2.literals.end(), c1.literals.begin(),
                       c1.literals.end());
}

namespace {

// node 2*(v-1) is x_v, 2*(v-1)+1 is its negation
int node(Literal l) { return 2 * (l.var - 1) + (l.negated ? 1 : 0); }

struct Tarjan {
  const std::vector<std::vector<int>> &adj;
  std::vector<int> index, low, comp;
  std::vector<bool> on_stack;
  std::vector<int> stack;
  int counter = 0, ncomp = 0;

  explicit Tarjan(const std::vector<std::vector<int>> &g)
      : adj(g), index(g.size(), -1), low(g.size(), 0), comp(g.size(), -1),
        on_stack(g.size(), false) {}

  void run() {
    for (int v = 0; v < static_cast<int>(adj.size()); ++v)
      if (index[v] < 0)
        visit(v);
  }

  void visit(int root) {
    std::vector<std::pair<int, size_t>> work{{root, 0}};
    while (!work.empty()) {
      auto &[v, i] = work.back();
      if (i == 0) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (i < adj[v].size()) {
        int w = adj[v][i++];
        if (index[w] < 0)
          work.push_back({w, 0});
        else if (on_stack[w])
          low[v] = std::min(low[v], index[w]);
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      int done = v;
      work.pop_back();
      if (!work.empty())
        low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
};

} // namespace

SolveResult two_sat_solve(const CnfFormula &f) {
  std::vector<std::vector<int>> adj(2 * f.n);
  for (const Clause &c : f.clauses) {
    if (c.literals.size() > 2)
      throw DomainError("two_sat_solve: clause width > 2");
    Literal a = c.literals[0];
    Literal b = c.literals.size() == 2 ? c.literals[1] : a;
    adj[node(a.negate())].push_back(node(b));
    adj[node(b.negate())].push_back(node(a));
  }
  Tarjan t(adj);
  t.run();
  SolveResult r;
  r.assignment = BoolAssignment(f.n);
  for (int v = 1; v <= f.n; ++v) {
    int p = t.comp[node(pos(v))], q = t.comp[node(neg(v))];
    if (p == q)
      return {false, BoolAssignment(f.n)};
    // Tarjan numbers components in reverse topological order
    r.assignment.set(v, p < q);
  }
  r.sat = true;
  return r;
}

SolveResult brute_force_solve(const CnfFormula &f) {
  if (f.n > 24)
    throw DomainError("brute_force_solve: n > 24");
  for (std::uint64_t bits = 0; bits < (1ull << f.n); ++bits) {
    auto a = BoolAssignment::from_bits(f.n, bits);
    if (evaluate(f, a))
      return {true, a};
  }
  return {false, BoolAssignment(f.n)};
}

bool equivalent(const CnfFormula &a, const CnfFormula &b) {
  if (a.n != b.n)
    return false;
  if (a.n > 24)
    throw DomainError("equivalent: n > 24");
  for (std::uint64_t bits = 0; bits < (1ull << a.n); ++bits) {
    auto x = BoolAssignment::from_bits(a.n, bits);
    if (evaluate(a, x) != evaluate(b, x))
      return false;
  }
  return true;
}

CnfFormula parse_dimacs(std::istream &in, int k, bool allow_repetition) {
  std::string line;
  int n = -1, m = -1;
  std::vector<std::vector<Literal>> types;
  std::vector<Literal> cur;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok[0] == 'c' || tok[0] == '%')
      continue;
    if (tok == "p") {
      std::string fmt;
      ls >> fmt >> n >> m;
      if (fmt != "cnf" || n < 0 || m < 0)
        throw DomainError("bad DIMACS header");
      continue;
    }
    if (n < 0)
      throw DomainError("DIMACS clause before header");
    ls.clear();
    ls.str(line);
    long long x;
    while (ls >> x) {
      if (x == 0) {
        types.push_back(cur);
        cur.clear();
      } else {
        cur.push_back({static_cast<int>(std::llabs(x)), x < 0});
      }
    }
  }
  if (!cur.empty())
    types.push_back(cur);
  if (m >= 0 && static_cast<int>(types.size()) != m)
    throw DomainError("DIMACS clause count mismatch");
  int width = 0;
  for (const auto &t : types)
    width = std::max<int>(width, t.size());
  return CnfFormula::make(n, k > 0 ? k : std::max(width, 1), types, allow_repetition);
}

CnfFormula read_dimacs(const std::string &path, int k, bool allow_repetition) {
  std::ifstream in(path);
  if (!in)
    throw DomainError("cannot open " + path);
  return parse_dimacs(in, k, allow_repetition);
}

void write_dimacs(std::ostream &out, const CnfFormula &f) {
  out << "p cnf " << f.n << ' ' << f.m() << '\n';
  for (const Clause &c : f.clauses) {
    for (const Literal &l : c.literals)
      out << (l.negated ? -l.var : l.var) << ' ';
    out << "0\n";
  }
}

CnfFormula random_ksat(int n, int k, int m, bool allow_repetition, std::mt19937_64 &rng,
                       bool exact_width) {
  std::uniform_int_distribution<int> width(1, std::min(k, n));
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<int> vars(n);
  std::set<std::vector<Literal>> used;
  std::vector<std::vector<Literal>> types;
  int attempts = 0;
  while (static_cast<int>(types.size()) < m) {
    if (++attempts > 100000)
      throw DomainError("random_ksat: cannot draw enough distinct clauses");
    int w = exact_width ? std::min(k, n) : width(rng);
    for (int i = 0; i < n; ++i)
      vars[i] = i + 1;
    std::shuffle(vars.begin(), vars.end(), rng);
    std::vector<Literal> t;
    for (int i = 0; i < w; ++i)
      t.push_back({vars[i], coin(rng) == 1});
    t = normalize_type(t);
    if (!allow_repetition && !used.insert(t).second)
      continue;
    types.push_back(t);
  }
  return CnfFormula::make(n, k, types, allow_repetition);
}

CnfFormula random_widesat(int n, int m, std::mt19937_64 &rng) {
  if (m > n || m > (1 << std::min(n, 20)))
    throw DomainError("random_widesat: need m <= n");
  std::uniform_int_distribution<int> coin(0, 1);
  std::set<std::vector<Literal>> used;
  std::vector<std::vector<Literal>> types;
  while (static_cast<int>(types.size()) < m) {
    std::vector<Literal> t;
    for (int v = 1; v <= n; ++v)
      t.push_back({v, coin(rng) == 1});
    if (used.insert(t).second)
      types.push_back(t);
  }
  return CnfFormula::make(n, n, types, false);
}

CnfFormula prop5_phi1() {
  return CnfFormula::make(2, 1, {{pos(1)}, {neg(1)}, {pos(1)}, {neg(1)}}, true);
}

CnfFormula prop5_phi2() {
  return CnfFormula::make(2, 1, {{pos(1)}, {neg(1)}, {pos(2)}, {pos(2)}}, true);
}

} // namespace hsat

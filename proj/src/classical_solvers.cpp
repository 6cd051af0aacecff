#include "hiddensat/classical_solvers.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace hsat {

CnfFormula LearnedFormula::to_cnf() const {
  std::vector<std::vector<Literal>> types;
  int k = 1;
  for (const auto &c : clauses) {
    types.push_back(c.literals);
    k = std::max<int>(k, c.literals.size());
  }
  return CnfFormula::make(n, k, types, true);
}

std::string LearnedFormula::sidecar_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["clauses"] = nlohmann::json::array();
  for (size_t i = 0; i < clauses.size(); ++i) {
    std::vector<int> lits;
    for (const auto &l : clauses[i].literals)
      lits.push_back(l.negated ? -l.var : l.var);
    j["clauses"].push_back({{"index", i + 1}, {"literals", lits}, {"oracle_ids", clauses[i].oracle_ids}});
  }
  return j.dump(2);
}

void LearnedFormula::write(const std::string &dimacs_path, const std::string &sidecar_path) const {
  std::ofstream d(dimacs_path);
  write_dimacs(d, to_cnf());
  std::ofstream s(sidecar_path);
  s << sidecar_json() << '\n';
}

ClauseTypeCatalog::ClauseTypeCatalog(int n, int k) {
  std::vector<int> vars;
  std::function<void(int, int)> rec = [&](int start, int width) {
    if (static_cast<int>(vars.size()) == width) {
      for (int mask = 0; mask < (1 << width); ++mask) {
        std::vector<Literal> t;
        for (int i = 0; i < width; ++i)
          t.push_back({vars[i], ((mask >> i) & 1) != 0});
        types_.push_back(t);
      }
      return;
    }
    for (int v = start; v <= n; ++v) {
      vars.push_back(v);
      rec(v + 1, width);
      vars.pop_back();
    }
  };
  for (int w = 1; w <= std::min(k, n); ++w)
    rec(1, w);
}

long ClauseTypeCatalog::count(int n, int k) {
  long total = 0, binom = 1;
  for (int w = 1; w <= std::min(k, n); ++w) {
    binom = binom * (n - w + 1) / w;
    total += binom << w;
  }
  return total;
}

namespace {

long queries_since(ClassicalOracle &o, long start) { return o.transcript().total() - start; }

FractionalAssignment falsify(int n, const std::vector<Literal> &type, Rational background) {
  FractionalAssignment a(n, background);
  for (const Literal &l : type)
    a[l.var] = l.negated ? 1 : 0;
  return a;
}

BoolAssignment falsify_bool(int n, const std::vector<Literal> &type, bool background) {
  BoolAssignment a(n, background);
  for (const Literal &l : type)
    a.set(l.var, l.negated);
  return a;
}

std::vector<int> as_set(const OracleResponse &r) {
  return r.kind == OracleResponse::Kind::ViolatedSet ? r.ids : std::vector<int>{};
}

} // namespace

LearnedFormula AllViolatedResult::learned(int n) const {
  LearnedFormula f;
  f.n = n;
  for (const auto &[t, ids] : type_ids)
    for (int id : ids)
      f.clauses.push_back({t, {id}});
  return f;
}

AllViolatedResult learn_all_violated(ClassicalOracle &oracle, int n, int k, int m) {
  AllViolatedResult res;
  long start = oracle.transcript().total();
  ClauseTypeCatalog catalog(n, k);
  res.bound = 2 * static_cast<long>(catalog.size());
  std::map<std::vector<Literal>, std::vector<int>> inside; // ids with type contained in T
  std::map<int, std::vector<Literal>> owner;

  for (const auto &t : catalog.types()) {
    std::vector<int> both;
    for (bool bg : {false, true}) {
      BoolAssignment a = falsify_bool(n, t, bg);
      OracleResponse r = oracle.query_all(a);
      if (r.is_sat()) {
        res.sat = true;
        res.assignment = a;
        res.queries = queries_since(oracle, start);
        return res;
      }
      std::vector<int> s = as_set(r);
      if (!bg) {
        both = s;
      } else {
        std::vector<int> tmp;
        std::set_intersection(both.begin(), both.end(), s.begin(), s.end(), std::back_inserter(tmp));
        both = tmp;
      }
    }
    inside[t] = both;
    std::vector<int> exact = both;
    if (t.size() > 1) {
      for (size_t drop = 0; drop < t.size(); ++drop) {
        std::vector<Literal> sub = t;
        sub.erase(sub.begin() + drop);
        const auto &smaller = inside.at(sub);
        std::vector<int> tmp;
        std::set_difference(exact.begin(), exact.end(), smaller.begin(), smaller.end(),
                            std::back_inserter(tmp));
        exact = tmp;
      }
    }
    if (exact.empty())
      continue;
    for (int id : exact)
      if (!owner.emplace(id, t).second)
        throw ProtocolError("clause " + std::to_string(id) + " matched two types");
    res.type_ids[t] = exact;
  }
  if (static_cast<int>(owner.size()) > m)
    throw ProtocolError("more clause ids than declared m");
  res.queries = queries_since(oracle, start);
  return res;
}

WidesatResult learn_widesat(ClassicalOracle &oracle, int n, int m) {
  WidesatResult res;
  long start = oracle.transcript().total();
  long binom = 1;
  for (int i = 0; i < m - 1; ++i)
    binom = binom * (n - i) / (i + 1);
  res.bound = binom * (1L << m) + 2L * n;

  std::vector<int> subset;
  std::map<int, int> pattern; // clause id -> falsifying bits on subset
  bool found = m <= 1;
  if (m > 1) {
    std::vector<int> idx(m - 1);
    for (int i = 0; i < m - 1; ++i)
      idx[i] = i + 1;
    while (!found) {
      pattern.clear();
      for (int bits = 0; bits < (1 << (m - 1)) && static_cast<int>(pattern.size()) < m; ++bits) {
        FractionalAssignment a(n, Rational(1, 2));
        for (int i = 0; i < m - 1; ++i)
          a[idx[i]] = (bits >> i) & 1;
        OracleResponse r = oracle.query_worst(a);
        if (!r.is_sat())
          pattern.emplace(r.id, bits);
      }
      if (static_cast<int>(pattern.size()) == m) {
        found = true;
        subset = idx;
        break;
      }
      int i = m - 2;
      while (i >= 0 && idx[i] == n - (m - 2 - i))
        --i;
      if (i < 0)
        break;
      ++idx[i];
      for (int j = i + 1; j < m - 1; ++j)
        idx[j] = idx[j - 1] + 1;
    }
    if (!found)
      throw ProtocolError("no distinguishing subset: responses inconsistent with WIDESAT");
  } else {
    pattern[0] = 0; // placeholder, id filled by the first probe
  }
  res.distinguishing_subset = subset;

  res.formula.n = n;
  std::vector<bool> in_subset(n + 1, false);
  for (int v : subset)
    in_subset[v] = true;
  for (auto [id, bits] : pattern) {
    LearnedClause c;
    int known_id = id;
    for (size_t i = 0; i < subset.size(); ++i)
      c.literals.push_back({subset[i], ((bits >> i) & 1) != 0});
    for (int v = 1; v <= n; ++v) {
      if (in_subset[v])
        continue;
      FractionalAssignment a(n, Rational(1, 2));
      for (size_t i = 0; i < subset.size(); ++i)
        a[subset[i]] = (bits >> i) & 1;
      a[v] = 1;
      OracleResponse r = oracle.query_worst(a);
      if (r.is_sat()) {
        c.literals.push_back(pos(v));
      } else {
        if (known_id != 0 && r.id != known_id)
          throw ProtocolError("WIDESAT probe answered a different clause");
        known_id = r.id;
        c.literals.push_back(neg(v));
      }
    }
    std::sort(c.literals.begin(), c.literals.end());
    if (known_id != 0)
      c.oracle_ids = {known_id};
    res.formula.clauses.push_back(c);
  }
  res.queries = queries_since(oracle, start);
  return res;
}

Hsat1Result solve_hsat1(ClassicalOracle &oracle, int n, int m) {
  Hsat1Result res;
  long start = oracle.transcript().total();
  res.bound = 2L * m * n + 3;
  using Prefix = std::vector<std::uint8_t>;
  std::vector<Prefix> list{Prefix{}};

  auto finish_sat = [&](BoolAssignment a) {
    res.sat = true;
    res.assignment = std::move(a);
    res.queries = queries_since(oracle, start);
    return res;
  };

  for (int k = 1; k <= n; ++k) {
    std::vector<Prefix> ext;
    for (const auto &y : list)
      for (std::uint8_t b : {0, 1}) {
        ext.push_back(y);
        ext.back().push_back(b);
      }
    if (k == n) {
      res.lists.push_back(ext);
      for (const auto &y : ext) {
        BoolAssignment a(n);
        for (int v = 1; v <= n; ++v)
          a.set(v, y[v - 1]);
        if (oracle.query_worst(a).is_sat())
          return finish_sat(a);
      }
      break;
    }
    std::vector<Prefix> next;
    std::set<int> seen;
    for (const auto &y : ext) {
      FractionalAssignment a(n, Rational(1, 2));
      for (int v = 1; v <= k; ++v)
        a[v] = y[v - 1];
      OracleResponse r = oracle.query_worst(a);
      if (r.is_sat()) {
        // every clause is already satisfied by the prefix
        BoolAssignment b(n);
        for (int v = 1; v <= k; ++v)
          b.set(v, y[v - 1]);
        if (!oracle.query_worst(b).is_sat())
          throw ProtocolError("fractional SAT answer not confirmed by its 0/1 completion");
        res.lists.push_back({y});
        return finish_sat(b);
      }
      if (seen.insert(r.id).second)
        next.push_back(y);
    }
    res.lists.push_back(next);
    list = std::move(next);
  }
  res.queries = queries_since(oracle, start);
  return res;
}

Detection detect_clause(ClassicalOracle &oracle, const std::vector<Literal> &type, bool robust) {
  int n = oracle.n();
  Detection d;
  for (bool bg : {false, true}) {
    BoolAssignment a = falsify_bool(n, type, bg);
    if (oracle.query_worst(a).is_sat()) {
      if (robust)
        return d;
      d.kind = Detection::Kind::Sat;
      d.assignment = a;
      return d;
    }
  }
  OracleResponse lo = oracle.query_worst(falsify(n, type, Rational(1, 4)));
  OracleResponse hi = oracle.query_worst(falsify(n, type, Rational(3, 4)));
  if (lo.is_sat() || hi.is_sat() || lo.id != hi.id)
    return d;
  d.kind = Detection::Kind::Present;
  d.id = lo.id;
  return d;
}

namespace {

bool disjoint(const std::vector<Literal> &a, const std::vector<Literal> &b) {
  for (const auto &x : a)
    if (std::find(b.begin(), b.end(), x) != b.end())
      return false;
  return true;
}

LearnedFormula contradiction(int n) {
  LearnedFormula f;
  f.n = n;
  f.clauses = {{{pos(1)}, {}}, {{neg(1)}, {}}};
  return f;
}

Hsat2Result exhaustive_small(ClassicalOracle &oracle, int n, bool robust) {
  Hsat2Result res;
  std::vector<BoolAssignment> models;
  for (std::uint64_t bits = 0; bits < (1ull << n); ++bits) {
    auto a = BoolAssignment::from_bits(n, bits);
    if (oracle.query_worst(a).is_sat()) {
      if (!res.sat) {
        res.sat = true;
        res.assignment = a;
      }
      models.push_back(a);
      if (!robust)
        return res;
    }
  }
  res.sweep_complete = true;
  if (models.empty()) {
    res.learned = contradiction(n);
    return res;
  }
  res.learned.n = n;
  ClauseTypeCatalog catalog(n, 2);
  for (const auto &t : catalog.types()) {
    Clause c{0, t};
    bool implied = std::none_of(models.begin(), models.end(),
                                [&](const BoolAssignment &x) { return clause_violated(c, x); });
    if (implied)
      res.learned.clauses.push_back({t, {}});
  }
  return res;
}

} // namespace

Hsat2Result solve_hsat2_repfree(ClassicalOracle &oracle, int n, bool robust) {
  long start = oracle.transcript().total();
  if (n < 4) {
    Hsat2Result r = exhaustive_small(oracle, n, robust);
    r.queries = queries_since(oracle, start);
    return r;
  }
  Hsat2Result res;
  res.learned.n = n;
  std::map<int, std::vector<std::vector<Literal>>> reported;
  ClauseTypeCatalog catalog(n, 2);
  for (const auto &t : catalog.types()) {
    Detection d = detect_clause(oracle, t, robust);
    if (d.kind == Detection::Kind::Sat) {
      res.sat = true;
      res.assignment = d.assignment;
      res.queries = queries_since(oracle, start);
      return res;
    }
    if (d.kind != Detection::Kind::Present)
      continue;
    for (const auto &other : reported[d.id])
      if (disjoint(other, t))
        throw PreconditionViolation("clause " + std::to_string(d.id) +
                                    " answered for disjoint types; instance has repetitions");
    reported[d.id].push_back(t);
    res.learned.clauses.push_back({t, {d.id}});
  }
  res.sweep_complete = true;
  SolveResult s = two_sat_solve(res.learned.to_cnf());
  if (s.sat) {
    if (!oracle.query_worst(s.assignment).is_sat())
      throw PreconditionViolation("learned formula rejected by the oracle");
    res.sat = true;
    res.assignment = s.assignment;
  }
  res.queries = queries_since(oracle, start);
  return res;
}

namespace {

struct Equivalent2Sat {
  FlippedView &view;
  CnfFormula known;
  std::map<std::vector<Literal>, std::vector<int>> ids;

  // satisfiability of the hidden instance under pins, decided on the learned sweep and
  // confirmed against the oracle when a witness exists
  bool satisfiable(const std::map<int, bool> &pins) {
    CnfFormula f = known;
    f.k = 2;
    for (auto [v, b] : pins)
      f.clauses.push_back({f.m() + 1, {{v, !b}}});
    SolveResult s = two_sat_solve(f);
    if (!s.sat)
      return false;
    auto pinned = restricted_view(view, pins);
    if (!pinned->query_worst(s.assignment).is_sat())
      throw ProtocolError("pinned witness rejected by the oracle");
    return true;
  }

  std::vector<int> ids_of(const std::vector<Literal> &t) const {
    auto it = ids.find(t);
    return it == ids.end() ? std::vector<int>{} : it->second;
  }
};

} // namespace

Learn2SatResult learn_equivalent_2sat(ClassicalOracle &oracle, int n) {
  Learn2SatResult res;
  long start = oracle.transcript().total();
  Hsat2Result first = solve_hsat2_repfree(oracle, n);
  if (!first.sat) {
    res.formula = first.learned;
    res.queries = queries_since(oracle, start);
    return res;
  }
  res.satisfiable = true;
  res.witness = first.assignment;

  // relabel so the witness is all-ones
  std::vector<bool> flip(n);
  for (int v = 1; v <= n; ++v)
    flip[v - 1] = !first.assignment[v];
  FlippedView view(oracle, flip);

  Hsat2Result sweep = solve_hsat2_repfree(view, n, true);
  Equivalent2Sat eq{view, sweep.learned.to_cnf(), {}};
  for (const auto &c : sweep.learned.clauses)
    eq.ids[c.literals].insert(eq.ids[c.literals].end(), c.oracle_ids.begin(), c.oracle_ids.end());

  LearnedFormula out;
  out.n = n;
  std::set<int> learned_ids;
  auto add = [&](std::vector<Literal> t) {
    std::vector<int> ids = eq.ids_of(t);
    learned_ids.insert(ids.begin(), ids.end());
    out.clauses.push_back({t, ids});
  };

  std::vector<bool> forced(n + 1, false);
  for (int i = 1; i <= n; ++i)
    if (!eq.satisfiable({{i, false}})) {
      forced[i] = true;
      res.forced.push_back(i);
      add({pos(i)});
    }
  std::map<int, bool> base;
  for (int f : res.forced)
    base[f] = true;

  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (i == j || forced[i] || forced[j])
        continue;
      auto pins = base;
      pins[i] = false;
      pins[j] = true;
      if (!eq.satisfiable(pins))
        add(normalize_type({pos(i), neg(j)}));
    }

  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      if (forced[i] || forced[j])
        continue;
      std::vector<Literal> t{pos(i), pos(j)};
      if (view.query_worst(falsify_bool(n, t, true)).is_sat())
        continue;
      OracleResponse r = view.query_worst(falsify(n, t, Rational(1, 2)));
      if (r.is_sat() || learned_ids.count(r.id))
        continue;
      Detection d = detect_clause(view, t, true);
      if (d.kind == Detection::Kind::Present)
        out.clauses.push_back({t, {d.id}});
    }

  for (auto &c : out.clauses) {
    for (auto &l : c.literals)
      l = view.to_parent(l);
    std::sort(c.literals.begin(), c.literals.end());
  }
  res.formula = out;
  res.queries = queries_since(oracle, start);
  return res;
}

} // namespace hsat

#include "hiddensat/oracle_classical.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace hsat {

TieBreakPolicy TieBreakPolicy::scripted(std::map<std::string, int> table, Chooser fn) {
  TieBreakPolicy p;
  p.kind = PolicyKind::Scripted;
  p.script = std::move(table);
  p.script_fn = std::move(fn);
  return p;
}

TieBreakPolicy TieBreakPolicy::hashed_script(std::uint64_t seed) {
  TieBreakPolicy p = scripted({}, [seed](const std::string &fp, const std::vector<int> &tied) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
    for (unsigned char c : fp)
      h = (h ^ c) * 0x100000001b3ull;
    return tied[h % tied.size()];
  });
  p.seed = seed;
  return p;
}

TieBreakPolicy TieBreakPolicy::from_name(const std::string &name, std::uint64_t seed) {
  if (name == "lowest")
    return lowest();
  if (name == "highest")
    return highest();
  if (name == "random")
    return random(seed);
  if (name == "scripted")
    return hashed_script(seed);
  if (name == "prop5")
    return prop5();
  throw DomainError("unknown policy '" + name + "'");
}

std::string TieBreakPolicy::name() const {
  switch (kind) {
  case PolicyKind::Lowest:
    return "lowest";
  case PolicyKind::Highest:
    return "highest";
  case PolicyKind::Random:
    return "random";
  case PolicyKind::Scripted:
    return "scripted";
  case PolicyKind::Prop5:
    return "prop5";
  }
  return "?";
}

std::string OracleResponse::to_json() const {
  nlohmann::json j;
  switch (kind) {
  case Kind::Sat:
    j["outcome"] = "sat";
    break;
  case Kind::ViolatedId:
    j["outcome"] = "violated";
    j["id"] = id;
    break;
  case Kind::ViolatedSet:
    j["outcome"] = "violated_set";
    j["ids"] = ids;
    break;
  }
  return j.dump();
}

void QueryTranscript::append(std::string model, std::vector<Rational> a, OracleResponse r) {
  ++counters_[model];
  entries_.push_back({total() + 1, std::move(model), std::move(a), std::move(r)});
}

long QueryTranscript::count(const std::string &model) const {
  auto it = counters_.find(model);
  return it == counters_.end() ? 0 : it->second;
}

std::string QueryTranscript::to_jsonl() const {
  std::string out;
  for (const auto &e : entries_) {
    nlohmann::json j;
    j["seq"] = e.seq;
    j["model"] = e.model;
    std::vector<std::string> a;
    for (const auto &p : e.assignment)
      a.push_back(to_string(p));
    j["assignment"] = a;
    j["response"] = nlohmann::json::parse(e.response.to_json());
    out += j.dump();
    out += '\n';
  }
  return out;
}

void QueryTranscript::write_jsonl(const std::string &path) const {
  std::ofstream out(path);
  out << to_jsonl();
}

namespace escrow {
const CnfFormula &formula(const HiddenFormula &o) { return o.f_; }
} // namespace escrow

namespace {

bool is_prop5_instance(const CnfFormula &f) {
  if (f.n != 2 || f.m() != 4)
    return false;
  auto t = [&](int id) { return f.clause(id).literals; };
  std::vector<Literal> x1{pos(1)}, nx1{neg(1)}, x2{pos(2)};
  bool common = t(1) == x1 && t(2) == nx1;
  return common && ((t(3) == x1 && t(4) == nx1) || (t(3) == x2 && t(4) == x2));
}

} // namespace

HiddenFormula::HiddenFormula(CnfFormula f, TieBreakPolicy policy)
    : f_(std::move(f)), policy_(std::move(policy)), rng_(policy_.seed) {
  f_.validate();
  if (policy_.kind == PolicyKind::Prop5 && !is_prop5_instance(f_))
    throw DomainError("prop5 adversary applied to a different instance");
}

std::unique_ptr<HiddenFormula> HiddenFormula::from_dimacs(const std::string &path,
                                                          const std::string &policy,
                                                          std::uint64_t seed, int k,
                                                          bool allow_repetition) {
  return std::make_unique<HiddenFormula>(read_dimacs(path, k, allow_repetition),
                                         TieBreakPolicy::from_name(policy, seed));
}

void HiddenFormula::check_size(int size) const {
  if (size != f_.n)
    throw DomainError("query assignment has " + std::to_string(size) + " variables, expected " +
                      std::to_string(f_.n));
}

int HiddenFormula::choose(const FractionalAssignment &a, const std::vector<int> &tied) {
  if (tied.size() == 1 && policy_.kind != PolicyKind::Prop5)
    return tied.front();
  switch (policy_.kind) {
  case PolicyKind::Lowest:
    return tied.front();
  case PolicyKind::Highest:
    return tied.back();
  case PolicyKind::Random: {
    std::uniform_int_distribution<size_t> d(0, tied.size() - 1);
    return tied[d(rng_)];
  }
  case PolicyKind::Scripted: {
    std::string fp = a.fingerprint();
    auto it = policy_.script.find(fp);
    int c = it != policy_.script.end() ? it->second
            : policy_.script_fn        ? policy_.script_fn(fp, tied)
                                       : tied.front();
    return std::find(tied.begin(), tied.end(), c) != tied.end() ? c : tied.front();
  }
  case PolicyKind::Prop5: {
    Rational v1 = Rational(1) - a[1], v1bar = a[1], v2 = Rational(1) - a[2];
    int c;
    if (v1 >= v1bar && v1 >= v2)
      c = 1;
    else if (v1bar >= v2)
      c = 2;
    else
      c = v1 > v1bar ? 3 : 4;
    if (std::find(tied.begin(), tied.end(), c) == tied.end())
      throw DomainError("prop5 adversary answer outside the tied set");
    return c;
  }
  }
  return tied.front();
}

OracleResponse HiddenFormula::query_worst(const FractionalAssignment &a) {
  check_size(a.n());
  Rational best(0);
  std::vector<int> tied;
  for (const Clause &c : f_.clauses) {
    Rational v = violation_probability(c, a);
    if (v == Rational(0))
      continue;
    if (v > best) {
      best = v;
      tied.assign(1, c.id);
    } else if (v == best) {
      tied.push_back(c.id);
    }
  }
  OracleResponse r = tied.empty() ? OracleResponse::sat() : OracleResponse::violated(choose(a, tied));
  transcript_.append("worst", a.probs, r);
  return r;
}

OracleResponse HiddenFormula::query_all(const BoolAssignment &a) {
  check_size(a.n());
  std::vector<int> ids;
  for (const Clause &c : f_.clauses)
    if (clause_violated(c, a))
      ids.push_back(c.id);
  OracleResponse r = ids.empty() ? OracleResponse::sat() : OracleResponse::violated_set(ids);
  transcript_.append("all", a.as_fractional().probs, r);
  return r;
}

OracleResponse HiddenFormula::query_arbitrary(const BoolAssignment &a) {
  check_size(a.n());
  std::vector<int> ids;
  for (const Clause &c : f_.clauses)
    if (clause_violated(c, a))
      ids.push_back(c.id);
  auto fa = a.as_fractional();
  OracleResponse r = ids.empty() ? OracleResponse::sat() : OracleResponse::violated(choose(fa, ids));
  transcript_.append("arbitrary", fa.probs, r);
  return r;
}

RestrictedView::RestrictedView(ClassicalOracle &parent, std::map<int, bool> pins)
    : parent_(parent), pins_(std::move(pins)) {
  for (auto [v, b] : pins_)
    if (v < 1 || v > parent_.n())
      throw DomainError("pinned variable out of range");
}

OracleResponse RestrictedView::query_worst(const FractionalAssignment &a) {
  FractionalAssignment b = a;
  for (auto [v, val] : pins_)
    b[v] = val ? 1 : 0;
  return parent_.query_worst(b);
}

OracleResponse RestrictedView::query_all(const BoolAssignment &a) {
  BoolAssignment b = a;
  for (auto [v, val] : pins_)
    b.set(v, val);
  return parent_.query_all(b);
}

OracleResponse RestrictedView::query_arbitrary(const BoolAssignment &a) {
  BoolAssignment b = a;
  for (auto [v, val] : pins_)
    b.set(v, val);
  return parent_.query_arbitrary(b);
}

std::unique_ptr<RestrictedView> restricted_view(ClassicalOracle &parent, std::map<int, bool> pins) {
  return std::make_unique<RestrictedView>(parent, std::move(pins));
}

FlippedView::FlippedView(ClassicalOracle &parent, std::vector<bool> flip)
    : parent_(parent), flip_(std::move(flip)) {
  if (static_cast<int>(flip_.size()) != parent_.n())
    throw DomainError("flip layer size mismatch");
}

Literal FlippedView::to_parent(Literal l) const {
  return flip_[l.var - 1] ? l.negate() : l;
}

FractionalAssignment FlippedView::map(const FractionalAssignment &a) const {
  FractionalAssignment b = a;
  for (int v = 1; v <= b.n(); ++v)
    if (flip_[v - 1])
      b[v] = Rational(1) - b[v];
  return b;
}

BoolAssignment FlippedView::map(const BoolAssignment &a) const {
  BoolAssignment b = a;
  for (int v = 1; v <= b.n(); ++v)
    if (flip_[v - 1])
      b.set(v, !b[v]);
  return b;
}

OracleResponse FlippedView::query_worst(const FractionalAssignment &a) {
  return parent_.query_worst(map(a));
}
OracleResponse FlippedView::query_all(const BoolAssignment &a) { return parent_.query_all(map(a)); }
OracleResponse FlippedView::query_arbitrary(const BoolAssignment &a) {
  return parent_.query_arbitrary(map(a));
}

} // namespace hsat

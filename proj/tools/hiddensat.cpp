#include "hiddensat/classical_solvers.hpp"
#include "hiddensat/quantum_solvers.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace hsat;
using nlohmann::json;

namespace {

const std::vector<std::string> kTasks = {"learn-allviolated", "widesat",      "hsat1",         "hsat2-solve",
                                         "hsat2-learn",       "hqsat1",       "hqsat2-learn",  "star-adjacent"};

bool quantum_task(const std::string &t) { return t == "hqsat1" || t == "hqsat2-learn" || t == "star-adjacent"; }

struct Options {
  std::string task = "hsat1";
  std::string instance;
  std::string policy = "lowest";
  std::uint64_t seed = 1;
  double epsilon = -1;
  std::string out;
  std::string format = "json";
  std::string transcript;
  int n = 6, m = 6, k = 0;
  bool unsat = false;
  bool prop5 = false;
  double beta = 1e-4;
  int count = 10;
  int jobs = 1;
  bool timing = false;
  std::string result;
};

int default_k(const std::string &task) {
  if (task == "hsat1")
    return 1;
  if (task == "hsat2-solve" || task == "hsat2-learn")
    return 2;
  if (task == "widesat")
    return 0;
  return 3;
}

double default_epsilon(const std::string &task) {
  if (task == "hqsat1")
    return 0.125;
  if (task == "star-adjacent")
    return 0.1;
  return 0.05;
}

std::vector<std::pair<int, int>> path_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int u = 1; u < n; ++u)
    e.emplace_back(u, u + 1);
  return e;
}

CnfFormula make_classical(const Options &o, std::uint64_t seed) {
  if (!o.instance.empty())
    return read_dimacs(o.instance, o.k, o.task != "hsat2-solve" && o.task != "hsat2-learn");
  if (o.prop5)
    return o.unsat ? prop5_phi2() : prop5_phi1();
  std::mt19937_64 rng(seed);
  if (o.task == "widesat")
    return random_widesat(o.n, o.m, rng);
  int k = o.k > 0 ? o.k : default_k(o.task);
  bool rep = o.task != "hsat2-solve" && o.task != "hsat2-learn";
  return random_ksat(o.n, k, o.m, rep, rng);
}

QsatInstance make_quantum(const Options &o, std::uint64_t seed) {
  if (!o.instance.empty())
    return QsatInstance::load(o.instance);
  InstanceSpec spec;
  spec.n = o.n;
  spec.epsilon = o.epsilon > 0 ? o.epsilon : default_epsilon(o.task);
  spec.satisfiable = !o.unsat;
  if (o.task == "hqsat1") {
    for (int j = 0; j < o.m; ++j)
      spec.sites.push_back(1 + j % o.n);
  } else if (o.task == "star-adjacent") {
    spec.edges = {{1, 2}, {3, 4}, {1, 3}};
    spec.n = std::max(o.n, 4);
    if (o.unsat)
      spec.ranks = {1, 1, 3};
  } else {
    spec.edges = path_edges(o.n);
    spec.require_non_star = true;
  }
  return generate_instance(spec, seed);
}

json bits_json(const BoolAssignment &a) {
  std::string s;
  for (auto v : a.values)
    s += v ? '1' : '0';
  return s;
}

json blocks_json(const ProductTrialState &t) {
  json out = json::array();
  for (const auto &b : t.blocks()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < b.rho.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < b.rho.cols(); ++j)
        row.push_back({b.rho(i, j).real(), b.rho(i, j).imag()});
      rows.push_back(row);
    }
    out.push_back({{"qubits", b.qubits}, {"matrix", rows}});
  }
  return out;
}

ProductTrialState blocks_from_json(int n, const json &j) {
  ProductTrialState t = ProductTrialState::mixed(n);
  for (const auto &b : j) {
    auto q = b.at("qubits").get<std::vector<int>>();
    Eigen::MatrixXcd m(q.size() == 1 ? 2 : 4, q.size() == 1 ? 2 : 4);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = cd(b["matrix"][r][c][0].get<double>(), b["matrix"][r][c][1].get<double>());
    if (q.size() == 1)
      t.set(q[0], Mat2(m));
    else
      t.set(q[0], q[1], Mat4(m));
  }
  return t;
}

std::map<std::vector<Literal>, std::vector<int>> type_map(const CnfFormula &f) {
  std::map<std::vector<Literal>, std::vector<int>> m;
  for (const auto &c : f.clauses)
    m[c.literals].push_back(c.id);
  return m;
}

std::set<std::vector<Literal>> type_set(const CnfFormula &f) {
  std::set<std::vector<Literal>> s;
  for (const auto &c : f.clauses)
    s.insert(c.literals);
  return s;
}

// ---- classical ----

json run_classical(const Options &o, const CnfFormula &f, const std::string &transcript_path) {
  HiddenFormula oracle(f, TieBreakPolicy::from_name(o.policy, o.seed));
  json r;
  bool ok = false;
  if (o.task == "learn-allviolated") {
    auto res = learn_all_violated(oracle, f.n, std::max(f.k, 1), f.m());
    r["outcome"] = res.sat ? "sat" : "learned";
    r["queries"] = res.queries;
    r["bound"] = res.bound;
    r["learned"] = json::parse(res.learned(f.n).sidecar_json());
    if (res.sat) {
      r["assignment"] = bits_json(res.assignment);
      ok = evaluate(f, res.assignment);
    } else {
      auto want = type_map(f);
      ok = want == res.type_ids && res.queries <= res.bound;
    }
  } else if (o.task == "widesat") {
    auto res = learn_widesat(oracle, f.n, f.m());
    r["outcome"] = "learned";
    r["queries"] = res.queries;
    r["bound"] = res.bound;
    r["learned"] = json::parse(res.formula.sidecar_json());
    ok = type_set(res.formula.to_cnf()) == type_set(f) && res.queries <= res.bound;
  } else if (o.task == "hsat1") {
    auto res = solve_hsat1(oracle, f.n, f.m());
    r["outcome"] = res.sat ? "sat" : "unsat";
    r["queries"] = res.queries;
    r["bound"] = res.bound;
    bool truth = brute_force_solve(f).sat;
    if (res.sat)
      r["assignment"] = bits_json(res.assignment);
    ok = res.sat == truth && (!res.sat || evaluate(f, res.assignment));
  } else if (o.task == "hsat2-solve") {
    auto res = solve_hsat2_repfree(oracle, f.n);
    r["outcome"] = res.sat ? "sat" : "unsat";
    r["queries"] = res.queries;
    if (res.sat)
      r["assignment"] = bits_json(res.assignment);
    bool truth = two_sat_solve(f).sat;
    ok = res.sat == truth && (!res.sat || evaluate(f, res.assignment));
  } else {
    auto res = learn_equivalent_2sat(oracle, f.n);
    r["outcome"] = res.satisfiable ? "learned" : "unsat";
    r["queries"] = res.queries;
    r["learned"] = json::parse(res.formula.sidecar_json());
    ok = res.satisfiable ? equivalent(f, res.formula.to_cnf()) : !two_sat_solve(f).sat;
  }
  r["verified"] = ok;
  if (!transcript_path.empty())
    oracle.transcript().write_jsonl(transcript_path);
  return r;
}

// ---- quantum ----

json run_quantum(const Options &o, const QsatInstance &inst, const std::string &transcript_path) {
  QOracleOptions qo;
  qo.policy = QTieBreak::from_name(o.policy, o.seed);
  std::ofstream sink;
  if (!transcript_path.empty()) {
    sink.open(transcript_path);
    if (!sink)
      throw std::runtime_error("cannot write " + transcript_path);
    qo.sink = &sink;
  }
  double eps = inst.epsilon;
  if (o.task == "star-adjacent")
    qo.tau = 1e-13;
  HiddenQsat oracle(inst, qo);
  json r;
  bool ok = false;
  if (o.task == "hqsat1") {
    auto res = solve_hqsat1(oracle, inst.n, inst.m(), eps);
    r["outcome"] = res.sat ? "sat" : "unsat";
    r["trials"] = res.trials;
    r["bound"] = res.bound;
    if (res.sat) {
      r["state"] = blocks_json(res.state);
      ok = true;
      for (double e : escrow::energies(inst, res.state))
        ok = ok && e <= eps * eps + 1e-9;
    } else {
      ok = ground_energy(inst) > inst.m() * 2 * eps * eps;
    }
    ok = ok && res.trials <= res.bound;
  } else if (o.task == "hqsat2-learn") {
    auto res = learn_hqsat2(oracle);
    r["outcome"] = res.status == LearnResult::Status::Learned ? "learned" : "not-learnable";
    r["trials"] = res.trials;
    r["report"] = json::parse(res.report_json());
    r["learned_instance"] = json::parse(res.hamiltonian(inst.n, eps).to_json());
    ok = res.status == LearnResult::Status::Learned && static_cast<int>(res.learned.size()) == inst.m();
    double worst = 0;
    for (const auto &a : res.learned)
      worst = std::max(worst, frobenius_distance(a.to_projector().matrix(), inst.projector(a.id).matrix()));
    r["max_distance"] = worst;
    double de = std::abs(ground_energy(inst) - ground_energy(res.hamiltonian(inst.n, eps)));
    r["ground_energy_delta"] = de;
    ok = ok && worst <= 0.05 && de <= inst.m() * 0.05;
  } else {
    auto res = solve_star_adjacent(oracle, eps, o.beta);
    const char *names[] = {"sat", "unsat", "not-applicable"};
    r["outcome"] = names[static_cast<int>(res.status)];
    r["trials"] = res.trials;
    if (!res.reason.empty())
      r["reason"] = res.reason;
    if (res.status == StarAdjacentResult::Status::Sat) {
      r["state"] = blocks_json(res.state);
      r["leftover_bound"] = res.leftover_bound;
      double left = 0;
      for (const auto &p : inst.projectors)
        if (!res.learned.find({std::min(p.qubits()[0], p.qubits()[1]), std::max(p.qubits()[0], p.qubits()[1])}))
          left = std::max(left, violation_energy(p, res.state));
      r["leftover_energy"] = left;
      ok = left <= eps * eps + 1e-9;
    } else if (res.status == StarAdjacentResult::Status::Unsat) {
      ok = ground_energy(inst) > inst.m() * 2 * eps * eps;
    }
  }
  r["verified"] = ok;
  r["transcript_digest"] = oracle.transcript().digest_hex();
  return r;
}

json run_one(const Options &o, std::uint64_t seed, const std::string &transcript_path) {
  json r;
  r["task"] = o.task;
  r["policy"] = o.policy;
  r["seed"] = seed;
  if (quantum_task(o.task)) {
    auto inst = make_quantum(o, seed);
    r["n"] = inst.n;
    r["m"] = inst.m();
    r["epsilon"] = inst.epsilon;
    r.update(run_quantum(o, inst, transcript_path));
  } else {
    auto f = make_classical(o, seed);
    r["n"] = f.n;
    r["m"] = f.m();
    r.update(run_classical(o, f, transcript_path));
  }
  return r;
}

void emit(const Options &o, const std::vector<json> &rows) {
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out);
    if (!file)
      throw std::runtime_error("cannot write " + o.out);
  }
  std::ostream &out = o.out.empty() ? std::cout : file;
  if (o.format == "json") {
    if (rows.size() == 1)
      out << rows[0].dump(2) << "\n";
    else
      out << json(rows).dump(2) << "\n";
    return;
  }
  std::vector<std::string> cols = {"task", "policy", "seed", "n", "m", "outcome", "queries", "trials", "bound", "verified"};
  if (o.timing)
    cols.push_back("seconds");
  for (size_t c = 0; c < cols.size(); ++c)
    out << (c ? "," : "") << cols[c];
  out << "\n";
  for (const auto &r : rows) {
    for (size_t c = 0; c < cols.size(); ++c) {
      out << (c ? "," : "");
      if (!r.contains(cols[c]))
        continue;
      const auto &v = r[cols[c]];
      out << (v.is_string() ? v.get<std::string>() : v.dump());
    }
    out << "\n";
  }
}

int do_gen(const Options &o) {
  if (o.out.empty())
    throw CLI::ValidationError("gen needs --out");
  std::ofstream file(o.out);
  if (!file)
    throw std::runtime_error("cannot write " + o.out);
  if (quantum_task(o.task))
    file << make_quantum(o, o.seed).to_json() << "\n";
  else
    write_dimacs(file, make_classical(o, o.seed));
  return 0;
}

int do_run(const Options &o) {
  auto t0 = std::chrono::steady_clock::now();
  json r = run_one(o, o.seed, o.transcript);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (o.timing)
    r["seconds"] = secs;
  emit(o, {r});
  std::cerr << o.task << ": " << r["outcome"].get<std::string>() << (r["verified"].get<bool>() ? ", verified" : ", NOT verified")
            << " in " << secs << " s\n";
  return r["verified"].get<bool>() ? 0 : 2;
}

int do_bench(const Options &o) {
  std::vector<std::optional<json>> slots(o.count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < o.count; i = next++) {
      auto t0 = std::chrono::steady_clock::now();
      json r;
      try {
        r = run_one(o, o.seed + i, "");
      } catch (const QuantumDomainError &e) {
        // generator could not certify a no-instance at this seed
        std::cerr << "seed " << o.seed + i << ": " << e.what() << "\n";
        continue;
      }
      if (o.timing)
        r["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (const char *bulky : {"learned", "learned_instance", "report", "state", "assignment"})
        r.erase(bulky);
      slots[i] = std::move(r);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::max(1, o.jobs); ++w)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();
  std::vector<json> rows;
  bool all = true;
  for (auto &r : slots)
    if (r) {
      all = all && (*r)["verified"].get<bool>();
      rows.push_back(std::move(*r));
    }
  emit(o, rows);
  return all ? 0 : 2;
}

int do_verify(const Options &o) {
  if (o.instance.empty() || o.result.empty())
    throw CLI::ValidationError("verify needs --instance and --result");
  std::ifstream in(o.result);
  if (!in)
    throw std::runtime_error("cannot read " + o.result);
  json r = json::parse(in);
  std::string task = r.at("task");
  std::string outcome = r.at("outcome");
  bool ok = false;
  json verdict;
  if (quantum_task(task)) {
    auto inst = QsatInstance::load(o.instance);
    double eps = inst.epsilon;
    if (r.contains("learned_instance")) {
      auto learned = QsatInstance::from_json(r["learned_instance"].dump());
      json edges = json::array();
      double worst = learned.m() == inst.m() ? 0.0 : 2.0;
      for (const auto &p : learned.projectors) {
        double d = frobenius_distance(p.matrix(), inst.projector(p.id()).matrix());
        worst = std::max(worst, d);
        edges.push_back({{"id", p.id()}, {"distance", d}});
      }
      double de = std::abs(ground_energy(inst) - ground_energy(learned));
      verdict["edges"] = edges;
      verdict["ground_energy_delta"] = de;
      ok = worst <= 0.05 && de <= inst.m() * 0.05;
    } else if (outcome == "sat") {
      auto t = blocks_from_json(inst.n, r.at("state"));
      auto e = escrow::energies(inst, t);
      verdict["energies"] = e;
      double total = 0;
      for (double x : e)
        total += x;
      ok = total <= inst.m() * eps * eps + tolerances().compare;
    } else if (outcome == "unsat") {
      double e0 = ground_energy(inst);
      verdict["ground_energy"] = e0;
      ok = e0 > inst.m() * 2 * eps * eps;
    }
  } else {
    auto f = read_dimacs(o.instance, o.k);
    if (outcome == "sat") {
      BoolAssignment a(f.n);
      std::string bits = r.at("assignment");
      for (int v = 1; v <= f.n; ++v)
        a.set(v, bits.at(v - 1) == '1');
      json per = json::array();
      ok = true;
      for (const auto &c : f.clauses) {
        bool viol = clause_violated(c, a);
        ok = ok && !viol;
        if (viol)
          per.push_back(c.id);
      }
      verdict["violated"] = per;
    } else if (outcome == "unsat") {
      ok = !brute_force_solve(f).sat;
    } else if (r.contains("learned")) {
      LearnedFormula lf;
      lf.n = f.n;
      for (const auto &c : r["learned"].at("clauses")) {
        LearnedClause lc;
        for (int lit : c.at("literals"))
          lc.literals.push_back(lit > 0 ? pos(lit) : neg(-lit));
        lf.clauses.push_back(lc);
      }
      ok = equivalent(f, lf.to_cnf());
    }
  }
  verdict["verified"] = ok;
  std::cout << verdict.dump(2) << "\n";
  return ok ? 0 : 2;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"hidden SAT and QSAT experiment harness"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App *c) {
    c->add_option("--task", o.task, "experiment task")->check(CLI::IsMember(kTasks));
    c->add_option("--instance", o.instance, "DIMACS or quantum JSON instance file");
    c->add_option("--policy", o.policy, "tie-breaking policy")
        ->check(CLI::IsMember({"lowest", "highest", "random", "scripted", "prop5"}));
    c->add_option("--seed", o.seed, "seed for generators and randomized policies");
    c->add_option("--epsilon", o.epsilon, "promise parameter for quantum tasks");
    c->add_option("--out", o.out, "output file (stdout when omitted)");
    c->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    c->add_option("--n", o.n, "variables or qubits for generated instances");
    c->add_option("--m", o.m, "clauses or projectors for generated instances");
    c->add_option("-k,--k", o.k, "clause width (0 = task default)");
    c->add_flag("--unsat", o.unsat, "generate a no-instance");
    c->add_flag("--prop5", o.prop5, "use the two fixed 1SAT formulas that share a transcript");
  };
  auto gen = app.add_subcommand("gen", "write a generated instance");
  common(gen);
  auto run = app.add_subcommand("run", "run one experiment and verify it against escrow");
  common(run);
  run->add_option("--transcript", o.transcript, "write the oracle transcript as JSONL");
  run->add_option("--beta", o.beta, "learner precision for star-adjacent runs");
  run->add_flag("--timing", o.timing, "include wall time in the report");
  auto verify = app.add_subcommand("verify", "check a run report against an instance");
  common(verify);
  verify->add_option("--result", o.result, "report written by run")->required();
  auto bench = app.add_subcommand("bench", "run a batch of generated instances");
  common(bench);
  bench->add_option("--count", o.count, "instances in the batch");
  bench->add_option("--beta", o.beta, "learner precision for star-adjacent runs");
  bench->add_flag("--timing", o.timing, "include wall time per row");
  bench->add_option("--jobs", o.jobs, "worker threads, one oracle and solver each")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (o.policy == "prop5" && quantum_task(o.task))
      throw CLI::ValidationError("prop5 policy applies to classical tasks only");
    if (*gen)
      return do_gen(o);
    if (*run)
      return do_run(o);
    if (*verify)
      return do_verify(o);
    return do_bench(o);
  } catch (const CLI::Error &e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "relv/automaton.hpp"
#include "relv/discharge.hpp"
#include "relv/parse.hpp"
#include "relv/product.hpp"
#include "relv/proofcheck.hpp"
#include "relv/semantics.hpp"
#include "relv/vars.hpp"

using namespace relv;

namespace {

constexpr int kOk = 0;
constexpr int kFound = 1;
constexpr int kUsage = 2;

// Bad input that is not a parse failure of a known format.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

// Structured report: `key: value` lines, blocks opened by an unindented
// key and continued by two-space indented keys.
class Report {
 public:
  void add(const std::string& key, const std::string& value) { lines_.push_back(key + ": " + value); }
  void sub(const std::string& key, const std::string& value) {
    lines_.push_back("  " + key + ": " + value);
  }
  std::string text(long duration_ms) const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    out += "duration-ms: " + std::to_string(duration_ms) + "\n";
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

struct Options {
  std::string domain = "-2..2";
  std::vector<std::string> ranges;  // v=lo..hi
  std::string bounds;
  int fuel = 1000;
  std::uint64_t budget = 50'000'000;
  int jobs = 1;
  bool trace = false;
  std::string report;
};

void add_common(CLI::App* app, Options& o, bool with_fuel = true) {
  app->add_option("--domain", o.domain, "input interval lo..hi")->capture_default_str();
  app->add_option("--range", o.ranges, "per-variable input interval v=lo..hi");
  app->add_option("--bounds", o.bounds, "value limits lo..hi (default -1024..1023)");
  if (with_fuel) app->add_option("--fuel", o.fuel, "interpreter step bound")->capture_default_str();
  app->add_option("--budget", o.budget, "enumerated assignments per check")->capture_default_str();
  app->add_option("--jobs", o.jobs, "parallel discharge workers")->check(CLI::PositiveNumber);
  app->add_flag("--trace", o.trace, "print runs and product traces");
  app->add_option("--report", o.report, "write the structured report here");
}

Domain make_domain(const Options& o) {
  Domain d;
  try {
    d.set_input(parse_interval(o.domain));
    for (const std::string& r : o.ranges) {
      auto eq = r.find('=');
      if (eq == std::string::npos) throw UsageError("--range expects v=lo..hi, got `" + r + "`");
      d.overrides[Var(r.substr(0, eq))] = parse_interval(r.substr(eq + 1));
    }
    if (!o.bounds.empty()) {
      Interval b = parse_interval(o.bounds);
      d.limits.lo = b.lo;
      d.limits.hi = b.hi;
    }
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  d.fuel = o.fuel;
  d.budget = o.budget;
  return d;
}

Domain pin_hidden(Domain d, const VarSet& vs) {
  for (Var v : vs)
    if (is_hidden(v)) d.overrides[v] = {0, 0};
  return d;
}

std::string show(const Store& s, const char* prime = "") {
  std::string out;
  for (Var v : s.universe->vars()) {
    if (is_hidden(v)) continue;
    if (!out.empty()) out += ", ";
    out += v.name() + prime + "=" + std::to_string(s.get(v));
  }
  return out;
}

std::string show_pair(const Store& l, const Store& r) { return show(l) + " | " + show(r, "'"); }

std::string show_interval(const Interval& i) {
  return std::to_string(i.lo) + ".." + std::to_string(i.hi);
}

template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex mu;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

class Run {
 public:
  Run(std::string name, const Options& o) : o_(o), d_(make_domain(o)) {
    report_.add("report", "relv 1");
    report_.add("subcommand", name);
  }

  std::string input(const std::string& role, const std::string& path) {
    std::string text = read_file(path);
    report_.add("input", role + " " + path + " sha256:" + sha256_hex(text));
    return text;
  }

  void options(std::initializer_list<std::pair<const char*, std::string>> extra) {
    report_.add("option", "domain " + show_interval(d_.input));
    for (const auto& [v, i] : d_.overrides) report_.add("option", "range " + v.name() + "=" + show_interval(i));
    report_.add("option", "bounds " + show_interval({d_.limits.lo, d_.limits.hi}));
    report_.add("option", "fuel " + std::to_string(d_.fuel));
    report_.add("option", "budget " + std::to_string(d_.budget));
    for (const auto& [k, v] : extra) report_.add("option", std::string(k) + " " + v);
  }

  Domain& domain() { return d_; }
  Report& report() { return report_; }
  const Options& opts() const { return o_; }

  int finish(int code) {
    report_.add("exit", std::to_string(code));
    if (!o_.report.empty()) {
      long ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start_)
                    .count();
      std::ofstream out(o_.report, std::ios::binary);
      out << report_.text(ms);
      if (!out) throw IoError("cannot write report `" + o_.report + "`");
    }
    return code;
  }

 private:
  Options o_;
  Domain d_;
  Report report_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void add_vars(VarSet& left, VarSet& right, const ExprPtr& e) {
  SidedVars sv = sided_vars(*e);
  left.insert(sv.left.begin(), sv.left.end());
  right.insert(sv.right.begin(), sv.right.end());
}

std::vector<Verdict> discharge_all(const std::vector<VC>& vcs, const SideSpace& ls,
                                   const SideSpace* rs, const Domain& d, int jobs) {
  std::vector<Verdict> out(vcs.size());
  parallel_for(vcs.size(), jobs, [&](std::size_t i) { out[i] = discharge_enumerate(vcs[i], ls, rs, d); });
  return out;
}

// Reports every VC; returns whether all are valid.
bool report_vcs(Run& run, const std::vector<VC>& vcs, const std::vector<Verdict>& vs) {
  bool all = true;
  std::set<std::string> classes;
  for (std::size_t i = 0; i < vcs.size(); ++i) {
    const VC& vc = vcs[i];
    const Verdict& v = vs[i];
    Report& r = run.report();
    r.add("vc", std::to_string(vc.id));
    r.sub("kind", to_string(vc.kind));
    r.sub("source", vc.source);
    r.sub("target", vc.target);
    if (!vc.shape.empty()) r.sub("shape", vc.shape);
    r.sub("verdict", to_string(v.kind));
    r.sub("enumerated", std::to_string(v.enumerated));
    std::string where;
    if (v.left && v.right) where = show_pair(*v.left, *v.right);
    else if (v.left) where = show(*v.left);
    std::string after;
    if (v.left_after && v.right_after) after = show_pair(*v.left_after, *v.right_after);
    else if (v.left_after) after = show(*v.left_after);
    if (!where.empty()) r.sub("counterexample", where);
    if (!after.empty()) r.sub("after", after);
    if (!v.reason.empty()) r.sub("reason", v.reason);
    std::cout << vc.describe() << ": " << to_string(v.kind);
    if (!where.empty()) std::cout << " at " << where;
    if (!after.empty()) std::cout << " -> " << after;
    if (!v.valid() && !v.reason.empty()) std::cout << " (" << v.reason << ")";
    std::cout << "\n";
    if (!v.valid()) {
      all = false;
      classes.insert(vc.source);
    }
  }
  std::string joined;
  for (const auto& c : classes) joined += (joined.empty() ? "" : " ") + c;
  run.report().add("vcs", std::to_string(vcs.size()));
  run.report().add("failing-classes", joined.empty() ? "none" : joined);
  std::cout << vcs.size() << " VCs, failing classes: " << (joined.empty() ? "none" : joined) << "\n";
  return all;
}

// ---------------------------------------------------------------------------

int cmd_verify_unary(const Options& o, const std::string& prog, const std::string& spec_path,
                     const std::string& anno_path, bool non_stuck, bool cut_branches) {
  Run run("verify-unary", o);
  CommandPtr c = parse_program(run.input("program", prog));
  Spec spec = parse_spec(run.input("spec", spec_path), false);
  Annotation anno = anno_path.empty() ? Annotation{} : parse_annotation(run.input("anno", anno_path));
  run.options({{"non-stuck", non_stuck ? "yes" : "no"}, {"cut-branches", cut_branches ? "yes" : "no"}});
  Automaton a = build_automaton(c, {cut_branches});
  std::vector<VC> vcs = unary_vcs(a, anno, spec, non_stuck, run.domain().limits);
  VarSet vs = a.vars;
  auto add = [&](const ExprPtr& e) {
    VarSet f = free_vars(*e);
    vs.insert(f.begin(), f.end());
  };
  add(spec.pre);
  add(spec.post);
  for (const auto& [k, e] : anno) add(e);
  Domain d = pin_hidden(run.domain(), vs);
  SideSpace sp = make_side_space(a, make_universe(vs), d);
  std::vector<Verdict> verdicts = discharge_all(vcs, sp, nullptr, d, o.jobs);
  bool ok = report_vcs(run, vcs, verdicts);
  if (o.trace)
    for (std::size_t i = 0; i < vcs.size(); ++i)
      if (!verdicts[i].valid() && verdicts[i].left) {
        std::cout << "runs of " << vcs[i].describe() << " from the counterexample:\n";
        AState s{vcs[i].source_left, *verdicts[i].left};
        for (const AState& t : successors(a, s, d.limits))
          std::cout << "  " << a.label(s.label) << " " << show(s.store) << " -> " << a.label(t.label)
                    << " " << show(t.store) << "\n";
      }
  run.report().add("result", ok ? "valid" : "counterexample");
  std::cout << "result: " << (ok ? "valid" : "counterexample") << "\n";
  return run.finish(ok ? kOk : kFound);
}

struct RelInputs {
  std::shared_ptr<const Automaton> left, right;
  Spec spec;
  RelAnnotation ranno;
  Alignment align;
  ProductKind kind;
};

RelInputs load_rel(Run& run, const std::string& lp, const std::string& rp, const std::string* spec,
                   const std::string& product, const std::string& align, const std::string& ranno,
                   bool cut_branches) {
  RelInputs in;
  std::optional<ProductKind> k = parse_product_kind(product);
  if (!k) throw UsageError("unknown --product `" + product + "`");
  in.kind = *k;
  CommandPtr a = parse_program(run.input("left", lp));
  CommandPtr b = parse_program(run.input("right", rp));
  if (spec) in.spec = parse_spec(run.input("rspec", *spec), true);
  if (!ranno.empty()) in.ranno = parse_rel_annotation(run.input("ranno", ranno));
  if (!align.empty()) in.align = parse_alignment(run.input("align", align));
  in.left = std::make_shared<const Automaton>(build_automaton(a, {cut_branches}));
  in.right = std::make_shared<const Automaton>(build_automaton(b, {cut_branches}));
  return in;
}

void print_product_trace(const PreProduct& p, const std::vector<PState>& t) {
  for (const PState& s : t)
    std::cout << "  " << p.pair_name(s.left.label, s.right.label) << " "
              << show_pair(s.left.store, s.right.store) << "\n";
}

int cmd_verify_rel(const Options& o, const std::string& lp, const std::string& rp,
                   const std::string& spec_path, const std::string& product, const std::string& align,
                   const std::string& ranno, bool rel_non_stuck, bool cut_branches, int adequacy_fuel) {
  Run run("verify-rel", o);
  RelInputs in = load_rel(run, lp, rp, &spec_path, product, align, ranno, cut_branches);
  run.options({{"product", to_string(in.kind)},
               {"rel-non-stuck", rel_non_stuck ? "yes" : "no"},
               {"cut-branches", cut_branches ? "yes" : "no"},
               {"adequacy-fuel", std::to_string(adequacy_fuel)}});
  PreProduct p = construct_product(in.kind, in.left, in.right, in.align);
  RelVcs rv = relational_vcs(p, in.ranno, in.spec);

  VarSet lv = in.left->vars, rvs = in.right->vars;
  add_vars(lv, rvs, in.spec.pre);
  add_vars(lv, rvs, in.spec.post);
  for (const auto& [k, e] : in.ranno) add_vars(lv, rvs, e);
  VarSet all = lv;
  all.insert(rvs.begin(), rvs.end());
  Domain d = pin_hidden(run.domain(), all);
  SideSpace ls = make_side_space(*in.left, make_universe(lv), d);
  SideSpace rs = make_side_space(*in.right, make_universe(rvs), d);
  std::vector<Verdict> verdicts = discharge_all(rv.vcs, ls, &rs, d, o.jobs);
  bool ok = report_vcs(run, rv.vcs, verdicts);

  std::vector<Store> li = input_stores(make_universe(lv), d);
  std::vector<Store> ri = input_stores(make_universe(rvs), d);
  if (!ok) {
    // A failing VC whose hypothesis is met by some reachable state refutes
    // the annotation, not just its inductiveness.
    std::optional<Probe> pr;
    std::size_t at = 0;
    for (std::size_t i = 0; i < rv.vcs.size() && !pr; ++i)
      if (!verdicts[i].valid() && rv.vcs[i].kind == VC::Kind::Preserve) {
        pr = probe_failing(p, rv.vcs[i], in.spec, li, ri, adequacy_fuel, d);
        at = i;
      }
    if (pr) {
      const PState& last = pr->trace.back();
      run.report().add("reachable", std::to_string(rv.vcs[at].id));
      run.report().sub("state", show_pair(last.left.store, last.right.store));
      run.report().sub("after", show_pair(pr->left_after, pr->right_after));
      std::cout << "reachable counterexample for " << rv.vcs[at].describe() << ": "
                << show_pair(last.left.store, last.right.store) << " -> "
                << show_pair(pr->left_after, pr->right_after) << "\n";
      if (o.trace) {
        std::cout << "product trace:\n";
        print_product_trace(p, pr->trace);
      }
      auto replay = lockstep_replay(in.left->program, in.right->program, pr->trace.front().left.store,
                                    pr->trace.front().right.store, d.fuel, d.limits);
      std::cout << "statement-level replay:\n";
      for (std::size_t i = 0; i < replay.size(); ++i) {
        std::string line = show_pair(replay[i].first, replay[i].second);
        run.report().sub("replay", line);
        std::cout << "  " << i << ": " << line << "\n";
      }
    } else {
      run.report().add("reachable", "none");
      std::cout << "no reachable state refutes a failing VC within the search bound\n";
    }
  }

  AdequacyReport ad = check_adequacy_bounded(p, li, ri, adequacy_fuel, AdequacyMode::Weak, d, in.spec.pre);
  bool adequate = ad.verdict != AdequacyReport::Verdict::Witness;
  run.report().add("adequacy", to_string(ad.verdict));
  run.report().sub("pairs", std::to_string(ad.pairs_checked));
  std::cout << "weak adequacy under the precondition: " << to_string(ad.verdict) << "\n";

  bool non_stuck_ok = true;
  if (rel_non_stuck) {
    DirectResult nr = check_rel_non_stuck(*in.left, *in.right, in.spec, li, ri, d.fuel, d);
    non_stuck_ok = nr.holds;
    run.report().add("rel-non-stuck", nr.holds ? "holds" : "violated");
    if (nr.cutoff) run.report().sub("cutoff", "yes");
    if (!nr.reason.empty()) run.report().sub("reason", nr.reason);
    std::cout << "relational non-stuck check: " << (nr.holds ? "holds" : "violated");
    if (nr.cutoff) std::cout << " (bounded: some run was cut off)";
    if (!nr.reason.empty()) std::cout << " (" << nr.reason << ")";
    std::cout << "\n";
  }

  std::string result = !ok ? "counterexample" : !adequate ? "inadequate-product"
                       : !non_stuck_ok ? "stuck" : "valid";
  run.report().add("result", result);
  std::cout << "result: " << result << "\n";
  return run.finish(result == "valid" ? kOk : kFound);
}

int cmd_adequacy(const Options& o, const std::string& lp, const std::string& rp,
                 const std::string& product, const std::string& align, const std::string& mode,
                 const std::string& spec_path) {
  Run run("adequacy", o);
  RelInputs in = load_rel(run, lp, rp, spec_path.empty() ? nullptr : &spec_path, product, align, "", false);
  AdequacyMode m;
  if (mode == "adequate") m = AdequacyMode::Adequate;
  else if (mode == "weak") m = AdequacyMode::Weak;
  else throw UsageError("--mode expects adequate or weak");
  run.options({{"product", to_string(in.kind)}, {"mode", mode}});
  PreProduct p = construct_product(in.kind, in.left, in.right, in.align);
  VarSet lv = in.left->vars, rvs = in.right->vars;
  if (in.spec.pre) add_vars(lv, rvs, in.spec.pre);
  VarSet all = lv;
  all.insert(rvs.begin(), rvs.end());
  Domain d = pin_hidden(run.domain(), all);
  AdequacyReport ad = check_adequacy_bounded(p, input_stores(make_universe(lv), d),
                                             input_stores(make_universe(rvs), d), d.fuel, m, d,
                                             in.spec.pre);
  run.report().add("adequacy", to_string(ad.verdict));
  run.report().sub("pairs", std::to_string(ad.pairs_checked));
  std::cout << "verdict: " << to_string(ad.verdict) << " (" << ad.pairs_checked << " trace pairs)\n";
  if (ad.left && ad.right) {
    auto one_line = [](std::string t) {
      while (!t.empty() && t.back() == '\n') t.pop_back();
      for (std::size_t i; (i = t.find('\n')) != std::string::npos;) t.replace(i, 1, " ; ");
      return t;
    };
    std::string lt = one_line(dump_trace(*in.left, *ad.left));
    std::string rt = one_line(dump_trace(*in.right, *ad.right));
    run.report().sub("uncovered-left", lt);
    run.report().sub("uncovered-right", rt);
    std::cout << "uncovered pair:\n  left:  " << lt << "\n  right: " << rt << "\n";
    bool replays = !covered(p, *ad.left, *ad.right, d);
    run.report().sub("replay-uncovered", replays ? "yes" : "no");
    std::cout << "independent replay confirms it is uncovered: " << (replays ? "yes" : "no") << "\n";
  }
  bool ok = m == AdequacyMode::Adequate ? ad.verdict == AdequacyReport::Verdict::Adequate
                                        : ad.verdict != AdequacyReport::Verdict::Witness;
  return run.finish(ok ? kOk : kFound);
}

int cmd_check_proof(const Options& o, const std::string& path) {
  Run run("check-proof", o);
  run.input("proof", path);
  Derivation dv = load_derivation(path);
  run.options({});
  ProofResult r = check_derivation(dv, run.domain());
  run.report().add("verdict", r.verdict());
  run.report().add("nodes", std::to_string(r.nodes));
  std::cout << "verdict: " << r.verdict() << " (" << r.nodes << " nodes)\n";
  if (!r.ok) {
    run.report().add("error", r.path);
    run.report().sub("rule", r.rule);
    run.report().sub("reason", r.reason);
    std::cout << "error at " << r.path << " [" << r.rule << "]: " << r.reason << "\n";
  }
  for (const std::string& a : r.assumptions) {
    run.report().add("assumption", a);
    std::cout << "assumption: " << a << "\n";
  }
  std::string rules;
  for (const std::string& x : r.rules_used) rules += (rules.empty() ? "" : " ") + x;
  run.report().add("rules", rules);
  std::cout << "rules: " << rules << "\n";
  return run.finish(r.ok ? kOk : kFound);
}

int cmd_emit_smt(const Options& o, const std::vector<std::string>& files, const std::string& anno,
                 const std::string& product, const std::string& align, const std::string& ranno,
                 int only, bool non_stuck, bool cut_branches) {
  Run run("emit-smt", o);
  WpOptions wo;
  wo.limits = run.domain().limits;
  std::vector<VC> vcs;
  if (files.size() == 2) {
    CommandPtr c = parse_program(run.input("program", files[0]));
    Spec spec = parse_spec(run.input("spec", files[1]), false);
    Annotation an = anno.empty() ? Annotation{} : parse_annotation(run.input("anno", anno));
    Automaton a = build_automaton(c, {cut_branches});
    vcs = unary_vcs(a, an, spec, non_stuck, wo.limits);
  } else if (files.size() == 3) {
    RelInputs in = load_rel(run, files[0], files[1], &files[2], product, align, ranno, cut_branches);
    PreProduct p = construct_product(in.kind, in.left, in.right, in.align);
    vcs = relational_vcs(p, in.ranno, in.spec).vcs;
  } else {
    throw UsageError("emit-smt expects <program> <spec> or <left> <right> <rspec>");
  }
  run.options({{"vc", only < 0 ? "all" : std::to_string(only)}});
  bool found = false;
  for (const VC& vc : vcs) {
    if (only >= 0 && vc.id != only) continue;
    found = true;
    std::string smt = emit_smtlib(vc, wo);
    run.report().add("smt", std::to_string(vc.id) + " sha256:" + sha256_hex(smt));
    std::cout << smt;
  }
  if (!found) throw UsageError("no VC with id " + std::to_string(only));
  return run.finish(kOk);
}

int cmd_run(const Options& o, const std::string& prog, const std::vector<std::string>& sets) {
  Run run("run", o);
  CommandPtr c = prepare(parse_program(run.input("program", prog)));
  run.options({});
  Store s(make_universe(all_vars(*c)));
  for (const std::string& a : sets) {
    auto eq = a.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects v=n, got `" + a + "`");
    Var v(a.substr(0, eq));
    if (!s.has(v)) throw UsageError("the program has no variable `" + v.name() + "`");
    try {
      s.set(v, std::stoll(a.substr(eq + 1)));
    } catch (const std::logic_error&) {
      throw UsageError("--set expects an integer value, got `" + a + "`");
    }
  }
  const Domain& d = run.domain();
  run.report().add("initial", show(s));
  bool clean = true;
  if (o.trace) {
    std::vector<Outcome> outs = run_bounded(c, s, d.fuel, d.limits);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      const Outcome& out = outs[i];
      std::cout << "run " << i << ": " << to_string(out.kind);
      if (!out.reason.empty()) std::cout << " (" << out.reason << ")";
      std::cout << "\n";
      for (const Config& cfg : out.trace) std::cout << "  " << show(cfg.store) << "\n";
      run.report().add("run", std::to_string(i));
      run.report().sub("outcome", to_string(out.kind));
      run.report().sub("final", show(out.last()));
      clean &= out.kind == OutcomeKind::Terminated;
    }
  } else {
    FinalStores fs = final_stores(c, s, d.fuel, d.limits);
    for (const Store& f : fs.finals) {
      run.report().add("final", show(f));
      std::cout << "final: " << show(f) << "\n";
    }
    if (fs.stuck) std::cout << "some run gets stuck\n";
    if (fs.cutoff) std::cout << "some run was cut off after " << d.fuel << " steps\n";
    run.report().add("stuck", fs.stuck ? "yes" : "no");
    run.report().add("cutoff", fs.cutoff ? "yes" : "no");
    clean = !fs.stuck && !fs.cutoff;
  }
  return run.finish(clean ? kOk : kFound);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relational verification toolkit for the while language"};
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  std::string prog, spec, anno, left, right, product = "only-lockstep", align, ranno, mode = "adequate";
  bool non_stuck = false, rel_non_stuck = false, cut_branches = false;
  int adequacy_fuel = 100, only = -1;
  std::vector<std::string> files, sets;

  auto* vu = app.add_subcommand("verify-unary", "discharge the VCs of an annotated program");
  vu->add_option("program", prog)->required();
  vu->add_option("spec", spec)->required();
  vu->add_option("--anno", anno, "cutpoint annotation file");
  vu->add_flag("--non-stuck", non_stuck, "add VCs excluding stuck states");
  vu->add_flag("--cut-branches", cut_branches, "cutpoints at conditionals too");
  add_common(vu, o);
  vu->callback([&] { action = [&] { return cmd_verify_unary(o, prog, spec, anno, non_stuck, cut_branches); }; });

  auto* vr = app.add_subcommand("verify-rel", "discharge the VCs of a product program");
  vr->add_option("left", left)->required();
  vr->add_option("right", right)->required();
  vr->add_option("rspec", spec)->required();
  vr->add_option("--product", product, "product construction")->capture_default_str();
  vr->add_option("--align", align, "alignment condition file");
  vr->add_option("--ranno", ranno, "relational annotation file");
  vr->add_flag("--rel-non-stuck", rel_non_stuck, "bounded direct non-stuck check");
  vr->add_flag("--cut-branches", cut_branches, "cutpoints at conditionals too");
  vr->add_option("--adequacy-fuel", adequacy_fuel, "bound for adequacy and refutation search")
      ->capture_default_str();
  add_common(vr, o);
  vr->callback([&] {
    action = [&] {
      return cmd_verify_rel(o, left, right, spec, product, align, ranno, rel_non_stuck, cut_branches,
                            adequacy_fuel);
    };
  });

  auto* ad = app.add_subcommand("adequacy", "bounded adequacy of a product");
  ad->add_option("left", left)->required();
  ad->add_option("right", right)->required();
  ad->add_option("--product", product, "product construction")->capture_default_str();
  ad->add_option("--align", align, "alignment condition file");
  ad->add_option("--mode", mode, "adequate or weak")->capture_default_str();
  ad->add_option("--rspec", spec, "restrict to initial pairs satisfying this precondition");
  add_common(ad, o, false);
  ad->add_option("--fuel", adequacy_fuel, "trace length bound")->capture_default_str();
  ad->callback([&] {
    action = [&] {
      Options bounded = o;
      bounded.fuel = adequacy_fuel;
      return cmd_adequacy(bounded, left, right, product, align, mode, spec);
    };
  });

  auto* cp = app.add_subcommand("check-proof", "check a derivation file");
  cp->add_option("proof", prog)->required();
  add_common(cp, o);
  cp->callback([&] { action = [&] { return cmd_check_proof(o, prog); }; });

  auto* em = app.add_subcommand("emit-smt", "print VCs as SMT-LIB v2");
  em->add_option("files", files, "<program> <spec> or <left> <right> <rspec>")->required();
  em->add_option("--anno", anno, "cutpoint annotation file");
  em->add_option("--product", product, "product construction")->capture_default_str();
  em->add_option("--align", align, "alignment condition file");
  em->add_option("--ranno", ranno, "relational annotation file");
  em->add_option("--vc", only, "emit only this VC id");
  em->add_flag("--non-stuck", non_stuck, "add VCs excluding stuck states");
  em->add_flag("--cut-branches", cut_branches, "cutpoints at conditionals too");
  add_common(em, o);
  em->callback([&] {
    action = [&] { return cmd_emit_smt(o, files, anno, product, align, ranno, only, non_stuck, cut_branches); };
  });

  auto* rn = app.add_subcommand("run", "interpret a program");
  rn->add_option("program", prog)->required();
  rn->add_option("--set", sets, "initial value v=n (others start at 0)");
  add_common(rn, o);
  rn->callback([&] { action = [&] { return cmd_run(o, prog, sets); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  try {
    return action();
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const ProofSyntaxError& e) {
    std::cerr << "proof syntax error: " << e.what() << "\n";
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const VcError& e) {
    std::cerr << "annotation error: " << e.what() << "\n";
  } catch (const ProductError& e) {
    std::cerr << "product error: " << e.what() << "\n";
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
  }
  return kUsage;
}

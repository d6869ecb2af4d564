#include "doctest.h"
#include "gen.hpp"
#include "relv/automaton.hpp"
#include "relv/discharge.hpp"
#include "relv/parse.hpp"
#include "relv/vars.hpp"

using namespace relv;

namespace {

std::string fixture(const std::string& name) {
  return read_file(std::string(RELV_FIXTURES) + "/" + name);
}

int count(const Automaton& a, int src, int dst) {
  int n = 0;
  for (const Segment& s : a.segments) n += s.source == src && s.target == dst;
  return n;
}

std::vector<Verdict> discharge_all(const Automaton& a, const std::vector<VC>& vcs,
                                   const Domain& d) {
  VarSet vs = a.vars;
  for (const VC& vc : vcs)
    for (const ExprPtr& f : {vc.hypothesis, vc.conclusion}) {
      VarSet fv = free_vars(*f);
      vs.insert(fv.begin(), fv.end());
    }
  SideSpace sp = make_side_space(a, make_universe(vs), d);
  std::vector<Verdict> out;
  for (const VC& vc : vcs) out.push_back(discharge_enumerate(vc, sp, nullptr, d));
  return out;
}

}  // namespace

TEST_CASE("automaton of P0") {
  Automaton a = build_automaton(parse_program(fixture("programs/p0.whl")));
  CHECK(a.labels == std::vector<std::string>{"init", "fin", "L1"});
  CHECK(a.segments.size() == 3);
  CHECK(count(a, kInit, 2) == 1);
  CHECK(count(a, 2, 2) == 1);
  CHECK(count(a, 2, kFin) == 1);
}

TEST_CASE("straight-line and branching automata") {
  Automaton s = build_automaton(parse_program("x := 1"));
  CHECK(s.labels.size() == 2);
  CHECK(s.segments.size() == 1);
  Automaton p2 = build_automaton(parse_program(fixture("programs/p2.whl")));
  CHECK(p2.labels.size() == 3);
  CHECK(p2.segments.size() == 4);
  CHECK(count(p2, 2, 2) == 2);
  Automaton cut = build_automaton(parse_program(fixture("programs/p2.whl")), {true});
  CHECK(cut.labels == std::vector<std::string>{"init", "fin", "L1", "B1"});
  CHECK(count(cut, 2, 3) == 1);
  CHECK(count(cut, 3, 2) == 2);
  Automaton ch = build_automaton(parse_program("choice x := 1 or x := 2 end"));
  CHECK(ch.segments.size() == 2);
  Automaton nested = build_automaton(
      parse_program("while x > 0 do while y > 0 do y := y - 1 od; x := x - 1 od"));
  CHECK(nested.labels == std::vector<std::string>{"init", "fin", "L1", "L2"});
  CHECK_THROWS(build_automaton(parse_program("z := call(x)")));
}

// Every CFG edge on some segment; init has no incoming and fin no outgoing
// segment.
TEST_CASE("segment shape on generated programs") {
  gen::Rng r(5);
  std::vector<Var> vars{Var("x"), Var("y")};
  for (int i = 0; i < 300; ++i) {
    Automaton a = build_automaton(gen::command(r, vars, 4));
    CHECK(a.outgoing[kFin].empty());
    for (const Segment& s : a.segments) {
      CHECK(s.target != kInit);
      CHECK(s.source != kFin);
    }
    for (std::size_t l = 0; l < a.labels.size(); ++l)
      if (l != kFin) CHECK_FALSE(a.outgoing[l].empty());
  }
}

TEST_CASE("unary VCs of P0") {
  Automaton a = build_automaton(parse_program(fixture("programs/p0.whl")));
  Spec spec = parse_spec("pre: x >= 0\npost: 0 = 0\n", false);
  Domain d;
  d.set_input({0, 8});
  std::vector<VC> good = unary_vcs(a, parse_annotation("L1: y >= 0\n"), spec);
  REQUIRE(good.size() == 3);
  for (const Verdict& v : discharge_all(a, good, d)) CHECK(v.valid());

  std::vector<VC> bad = unary_vcs(a, parse_annotation("L1: y > 0\n"), spec);
  std::vector<Verdict> vs = discharge_all(a, bad, d);
  for (std::size_t i = 0; i < bad.size(); ++i) {
    INFO(bad[i].describe());
    bool exit = bad[i].target == "fin";
    CHECK(vs[i].valid() == exit);
    if (!exit) {
      REQUIRE(vs[i].kind == Verdict::Kind::Counterexample);
      REQUIRE(vs[i].left);
      // The pre-state satisfies the hypothesis and some post-state falsifies
      // the conclusion.
      CHECK(eval_unary(*bad[i].hypothesis, *vs[i].left, d));
      bool falsified = false;
      for (const Store& t : exec_segment(*bad[i].left, *vs[i].left, d.limits))
        falsified |= !eval_unary(*bad[i].conclusion, t, d);
      CHECK(falsified);
    }
  }
  CHECK(vs[0].left->get(Var("x")) == 0);

  CHECK_THROWS_WITH_AS(unary_vcs(a, {}, spec), doctest::Contains("missing annotation"), VcError);
  CHECK_THROWS_AS(unary_vcs(a, parse_annotation("L1: y >= 0\ninit: x = 1\n"), spec), VcError);
}

TEST_CASE("degenerate annotation") {
  Automaton a = build_automaton(parse_program("x := x + 1"));
  Spec spec = parse_spec("pre: x = y\npost: x > y\n", false);
  std::vector<VC> vcs = unary_vcs(a, {}, spec);
  REQUIRE(vcs.size() == 1);
  CHECK(same(vcs[0].hypothesis, spec.pre));
  CHECK(same(vcs[0].conclusion, spec.post));
  Domain d;
  CHECK(discharge_all(a, vcs, d)[0].valid());
}

TEST_CASE("non-stuck side VCs") {
  Automaton a = build_automaton(parse_program("y := 10 div x"));
  Spec spec = parse_spec("pre: true\npost: true\n", false);
  std::vector<VC> vcs = unary_vcs(a, {}, spec, true);
  REQUIRE(vcs.size() == 2);
  CHECK(vcs[1].kind == VC::Kind::NonStuck);
  Domain d;
  std::vector<Verdict> vs = discharge_all(a, vcs, d);
  CHECK(vs[0].valid());
  REQUIRE(vs[1].kind == Verdict::Kind::Counterexample);
  CHECK(vs[1].left->get(Var("x")) == 0);
  Spec guarded = parse_spec("pre: x <> 0\npost: true\n", false);
  std::vector<VC> ok = unary_vcs(a, {}, guarded, true);
  for (const Verdict& v : discharge_all(a, ok, d)) CHECK(v.valid());
  CHECK(unary_vcs(build_automaton(parse_program("y := x + 1")), {}, spec, true).size() == 2);
  CHECK(unary_vcs(build_automaton(parse_program("y := 1")), {}, spec, true).size() == 1);
}

// Bounded soundness: with valid VCs everywhere, every terminated run from a
// store satisfying the precondition satisfies the postcondition. Annotations
// are the exact reachable sets, written as disjunctions of store equalities.
TEST_CASE("bounded soundness of the inductive assertion method") {
  gen::Rng r(321);
  std::vector<Var> vars{Var("x"), Var("y")};
  Limits lim{-6, 5, -1, 1};
  int valid_runs = 0, refuted = 0;
  for (int i = 0; i < 60; ++i) {
    CommandPtr c = gen::command(r, vars, 3, {true, true, false, true});
    Automaton a = build_automaton(c);
    VarSet vs = a.vars;
    vs.insert(vars.begin(), vars.end());
    UniversePtr u = make_universe(vs);
    ExprPtr pre = gen::bool_expr(r, vars, 1, false);
    ExprPtr post = gen::bool_expr(r, vars, 1, false);
    Spec spec{pre, post};
    Domain d;
    d.set_input({-1, 1});
    d.limits.lo = lim.lo;
    d.limits.hi = lim.hi;
    std::vector<Store> inits;
    for (Value x = -1; x <= 1; ++x)
      for (Value y = -1; y <= 1; ++y) {
        Store s(u);
        s.set(vars[0], x);
        s.set(vars[1], y);
        if (vs.size() == 2 && eval_unary(*pre, s, d)) inits.push_back(s);
      }
    if (vs.size() != 2) continue;
    std::map<int, ExprPtr> exact;
    for (const AState& st : reachable_states(a, inits, 1 << 20, d.limits)) {
      ExprPtr eq = ex::conj(ex::binary(Op::Eq, ex::var(vars[0]), ex::int_lit(st.store.get(vars[0]))),
                            ex::binary(Op::Eq, ex::var(vars[1]), ex::int_lit(st.store.get(vars[1]))));
      auto it = exact.find(st.label);
      exact[st.label] = it == exact.end() ? eq : ex::disj(it->second, eq);
    }
    Annotation anno;
    for (std::size_t l = 2; l < a.labels.size(); ++l)
      anno[a.labels[l]] = exact.count(l) ? exact[l] : ex::bool_lit(false);
    std::vector<VC> vcs = unary_vcs(a, anno, spec);
    SideSpace sp = make_side_space(a, u, d);
    bool all_valid = true;
    for (const VC& vc : vcs) all_valid &= discharge_enumerate(vc, sp, nullptr, d).valid();
    bool holds = true;
    for (const Store& s : inits) {
      FinalStores fs = final_stores(a.program, s, 1 << 20, d.limits);
      for (const Store& t : fs.finals) holds &= eval_unary(*post, t, d);
    }
    INFO(to_string(*c));
    // With exact annotations the VCs are valid iff the spec holds; the
    // only VCs that can fail are those entering fin.
    CHECK(all_valid == holds);
    (all_valid ? valid_runs : refuted) += 1;
  }
  CHECK(valid_runs > 0);
  CHECK(refuted > 0);
}

TEST_CASE("trace dump format") {
  Automaton a = build_automaton(parse_program(fixture("programs/p0.whl")));
  Store s(make_universe(a.vars));
  s.set(Var("x"), 2);
  auto traces = automaton_traces(a, s, 100, Limits{});
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].kind == OutcomeKind::Terminated);
  CHECK(dump_trace(a, traces[0]) ==
        "init | x=2, y=0, z=0\n"
        "L1 | x=2, y=2, z=1\n"
        "L1 | x=2, y=1, z=2\n"
        "L1 | x=2, y=0, z=2\n"
        "fin | x=2, y=0, z=2\n");
}

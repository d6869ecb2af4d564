#include <set>

#include "doctest.h"
#include "gen.hpp"
#include "relv/product.hpp"
#include "relv/vars.hpp"

using namespace relv;

namespace {

std::string fixture(const std::string& name) {
  return read_file(std::string(RELV_FIXTURES) + "/" + name);
}

std::shared_ptr<const Automaton> load(const std::string& name) {
  return std::make_shared<const Automaton>(
      build_automaton(parse_program(fixture("programs/" + name))));
}

// Inputs over `lo..hi`; every other variable starts at 0.
Domain domain(Value lo, Value hi, const std::vector<std::string>& fixed = {"y", "z", "w"}) {
  Domain d;
  d.set_input({lo, hi});
  for (const std::string& v : fixed) d.overrides[Var(v)] = {0, 0};
  return d;
}

std::vector<Store> inits(const Automaton& a, const Domain& d) {
  return input_stores(make_universe(a.vars), d);
}

std::vector<Verdict> discharge_all(const PreProduct& p, const std::vector<VC>& vcs,
                                   const Domain& d) {
  SideSpace ls = make_side_space(*p.left, make_universe(p.left->vars), d);
  SideSpace rs = make_side_space(*p.right, make_universe(p.right->vars), d);
  std::vector<Verdict> out;
  for (const VC& vc : vcs) out.push_back(discharge_enumerate(vc, ls, &rs, d));
  return out;
}

bool all_valid(const std::vector<Verdict>& vs) {
  for (const Verdict& v : vs)
    if (!v.valid()) return false;
  return true;
}

Store store_of(const Automaton& a, std::initializer_list<std::pair<const char*, Value>> vals) {
  Store s(make_universe(a.vars));
  for (auto [n, v] : vals) s.set(Var(n), v);
  return s;
}

const std::vector<ProductKind> kAllKinds{
    ProductKind::OnlyLockstep, ProductKind::EagerLockstep,   ProductKind::Interleaved,
    ProductKind::Maximal,      ProductKind::Sequenced,       ProductKind::SimpleCondition,
    ProductKind::ThreeCondition};

Alignment random_alignment(gen::Rng& r, const std::vector<Var>& vars) {
  Alignment al;
  for (const char* k : {"ac", "l", "r", "b"}) al.defaults[k] = gen::rel_formula(r, vars, 1);
  return al;
}

}  // namespace

TEST_CASE("product kind spellings") {
  for (ProductKind k : kAllKinds) CHECK(parse_product_kind(to_string(k)) == k);
  CHECK_FALSE(parse_product_kind("lockstep"));
}

TEST_CASE("construction errors") {
  auto p0 = load("p0.whl");
  auto p2 = load("p2.whl");
  CHECK_THROWS_AS(construct_product(ProductKind::SimpleCondition, p0, p0), ProductError);
  CHECK_THROWS_AS(construct_product(ProductKind::ThreeCondition, p0, p2,
                                    parse_alignment("l: true\nr: true\n")),
                  ProductError);
  CHECK_THROWS_WITH_AS(
      construct_product(ProductKind::ThreeCondition, p0, p2,
                        parse_alignment("l: L(w = 0)\nr: true\nb: true\n")),
      doctest::Contains("`w`"), ProductError);
  CHECK_THROWS_AS(construct_product(ProductKind::SimpleCondition, p0, p0,
                                    parse_alignment("(L7,L1) ac: true\n")),
                  ProductError);
  CHECK_NOTHROW(construct_product(ProductKind::ThreeCondition, p0, p2,
                                  parse_alignment(fixture("rel/p0p2.align"))));
}

TEST_CASE("sequenced and lockstep traces of P0|P1") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(0, 4);
  PState s{{kInit, store_of(*p0, {{"x", 2}})}, {kInit, store_of(*p1, {{"x", 2}})}};

  PreProduct seq = construct_product(ProductKind::Sequenced, p0, p1);
  auto ts = product_traces(seq, s, 100, d);
  REQUIRE(ts.size() == 1);
  const auto& t = ts[0];
  // Left runs to fin while right waits at init; then right runs to fin.
  std::size_t k = 0;
  while (t[k].left.label != kFin) CHECK(t[k++].right.label == kInit);
  for (; k < t.size(); ++k) CHECK(t[k].left.label == kFin);
  CHECK(t.back().right.label == kFin);
  CHECK(t.size() == 9);
  CHECK(t.back().left.store.get(Var("z")) == 2);
  CHECK(t.back().right.store.get(Var("z")) == 4);

  PreProduct ls = construct_product(ProductKind::OnlyLockstep, p0, p1);
  auto tl = product_traces(ls, s, 100, d);
  REQUIRE(tl.size() == 1);
  CHECK(tl[0].size() == 5);
  CHECK(tl[0].back().left.label == kFin);
  CHECK(tl[0].back().right.label == kFin);
  // Lockstep over equal-length runs projects to both runs verbatim.
  auto ra = automaton_traces(*p0, s.left.store, 100, d.limits);
  auto rb = automaton_traces(*p1, s.right.store, 100, d.limits);
  CHECK(project(tl[0], true) == ra[0].states);
  CHECK(project(tl[0], false) == rb[0].states);
}

TEST_CASE("projection and destuttering") {
  auto a = std::make_shared<const Automaton>(
      build_automaton(parse_program("while x > 0 do x := x - 1 od")));
  Domain d = domain(0, 5);
  PreProduct il = construct_product(ProductKind::Interleaved, a, a);
  Store s = store_of(*a, {{"x", 2}});
  PState init{{kInit, s}, {kInit, s}};
  // Alternate left and right steps: 2n+1 product states project to n+1.
  std::vector<PState> t{init};
  for (int i = 0; i < 8; ++i) {
    auto next = product_successors(il, t.back(), d);
    Shape want = i % 2 == 0 ? Shape::Left : Shape::Right;
    bool found = false;
    for (const PStep& st : next)
      if (st.shape == want) {
        t.push_back(st.to);
        found = true;
        break;
      }
    REQUIRE(found);
  }
  REQUIRE(t.size() == 9);
  CHECK(project(t, true).size() == 5);
  CHECK(project(t, false).size() == 5);
  CHECK(project({init}, true) == std::vector<AState>{init.left});
  CHECK(destutter({init.left, init.left, init.left}).size() == 1);
  CHECK(project({}, true).empty());
}

// Every product transition decomposes into a transition of the named side(s)
// while the idle side stays put, and only under an enabled guard.
TEST_CASE("pre-product shape on all kinds") {
  gen::Rng r(77);
  std::vector<Var> vars{Var("x"), Var("y")};
  Domain d = domain(-2, 2, {});
  d.limits.lo = -6;
  d.limits.hi = 5;
  int steps = 0;
  for (int i = 0; i < 40; ++i) {
    auto a = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 3, {true, true, false, true})));
    auto b = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 3, {true, true, false, true})));
    if (a->vars.size() != 2 || b->vars.size() != 2) continue;
    for (ProductKind k : kAllKinds) {
      PreProduct p = construct_product(k, a, b, random_alignment(r, vars));
      auto la = reachable_states(*a, inits(*a, d), 50, d.limits);
      auto lb = reachable_states(*b, inits(*b, d), 50, d.limits);
      for (int n = 0; n < 30; ++n) {
        PState s{r.pick(la), r.pick(lb)};
        auto sa = successors(*a, s.left, d.limits);
        auto sb = successors(*b, s.right, d.limits);
        auto in = [](const std::vector<AState>& v, const AState& x) {
          return std::find(v.begin(), v.end(), x) != v.end();
        };
        for (const PStep& st : product_successors(p, s, d)) {
          ++steps;
          ExprPtr g = p.guard(st.shape, s.left.label, s.right.label);
          CHECK(eval_rel(*g, s.left.store, s.right.store, d));
          switch (st.shape) {
            case Shape::Joint:
              CHECK(in(sa, st.to.left));
              CHECK(in(sb, st.to.right));
              break;
            case Shape::Left:
              CHECK(in(sa, st.to.left));
              CHECK(st.to.right == s.right);
              break;
            case Shape::Right:
              CHECK(st.to.left == s.left);
              CHECK(in(sb, st.to.right));
              break;
          }
        }
      }
    }
  }
  CHECK(steps > 1000);
}

// The projections of product traces are traces of the components.
TEST_CASE("projection soundness") {
  gen::Rng r(91);
  std::vector<Var> vars{Var("x"), Var("y")};
  Domain d = domain(-1, 1, {});
  d.limits.lo = -6;
  d.limits.hi = 5;
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    auto a = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 3, {true, true, false, true})));
    auto b = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 3, {true, true, false, true})));
    if (a->vars.size() != 2 || b->vars.size() != 2) continue;
    PreProduct p = construct_product(kAllKinds[i % kAllKinds.size()], a, b,
                                     random_alignment(r, vars));
    auto ia = inits(*a, d);
    auto ib = inits(*b, d);
    PState s{{kInit, r.pick(ia)}, {kInit, r.pick(ib)}};
    std::vector<std::vector<PState>> ts;
    try {
      ts = product_traces(p, s, 8, d, 2000);
    } catch (const std::length_error&) {
      continue;
    }
    for (const auto& t : ts) {
      for (bool left : {true, false}) {
        const Automaton& c = left ? *a : *b;
        auto pr = project(t, left);
        REQUIRE(!pr.empty());
        CHECK(pr[0].label == kInit);
        for (std::size_t k = 0; k + 1 < pr.size(); ++k) {
          auto next = successors(c, pr[k], d.limits);
          CHECK(std::find(next.begin(), next.end(), pr[k + 1]) != next.end());
        }
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("bounded adequacy on P0|P1") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(0, 4);
  auto ia = inits(*p0, d);
  auto ib = inits(*p1, d);
  auto check = [&](ProductKind k) {
    return check_adequacy_bounded(construct_product(k, p0, p1), ia, ib, 200,
                                  AdequacyMode::Adequate, d);
  };
  AdequacyReport only = check(ProductKind::OnlyLockstep);
  REQUIRE(only.verdict == AdequacyReport::Verdict::Witness);
  REQUIRE(only.left);
  REQUIRE(only.right);
  PreProduct lp = construct_product(ProductKind::OnlyLockstep, p0, p1);
  CHECK_FALSE(covered(lp, *only.left, *only.right, d));
  // The witness pair is covered by the eager product.
  PreProduct ep = construct_product(ProductKind::EagerLockstep, p0, p1);
  CHECK(covered(ep, *only.left, *only.right, d));
  for (ProductKind k : {ProductKind::EagerLockstep, ProductKind::Interleaved,
                        ProductKind::Maximal, ProductKind::Sequenced})
    CHECK(check(k).verdict == AdequacyReport::Verdict::Adequate);
  CHECK(check_adequacy_bounded(lp, ia, ib, 200, AdequacyMode::Weak, d).verdict ==
        AdequacyReport::Verdict::Witness);
}

// Sequenced never moves the right side once the left sticks: weakly adequate
// but not adequate.
TEST_CASE("sequenced product over a sticking left side") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(-1, 2);
  auto ia = inits(*p0, d);
  auto ib = inits(*p1, d);
  PreProduct sp = construct_product(ProductKind::Sequenced, p0, p1);
  AdequacyReport rep = check_adequacy_bounded(sp, ia, ib, 200, AdequacyMode::Adequate, d);
  CHECK(rep.verdict == AdequacyReport::Verdict::WeaklyAdequateOnly);
  REQUIRE(rep.left);
  for (const ATrace& t : automaton_traces(*p0, rep.left->states[0].store, 200, d.limits))
    CHECK(t.kind == OutcomeKind::Stuck);
  CHECK_FALSE(covered(sp, *rep.left, *rep.right, d));
  CHECK(check_adequacy_bounded(sp, ia, ib, 200, AdequacyMode::Weak, d).verdict ==
        AdequacyReport::Verdict::WeaklyAdequate);
  // Eager lockstep also waits for the stuck side; one-sided moves do not.
  for (ProductKind k : {ProductKind::EagerLockstep, ProductKind::OnlyLockstep})
    CHECK(check_adequacy_bounded(construct_product(k, p0, p1), ia, ib, 200,
                                 AdequacyMode::Adequate, d)
              .verdict != AdequacyReport::Verdict::Adequate);
  for (ProductKind k : {ProductKind::Interleaved, ProductKind::Maximal})
    CHECK(check_adequacy_bounded(construct_product(k, p0, p1), ia, ib, 200,
                                 AdequacyMode::Adequate, d)
              .verdict == AdequacyReport::Verdict::Adequate);
}

// The tree search agrees with the independent replay on random instances.
TEST_CASE("adequacy verdicts replay") {
  gen::Rng r(13);
  std::vector<Var> vars{Var("x"), Var("y")};
  Domain d = domain(-1, 1, {});
  d.limits.lo = -4;
  d.limits.hi = 3;
  int witnesses = 0, adequate = 0;
  for (int i = 0; i < 80; ++i) {
    auto a = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 2, {true, true, false, true})));
    auto b = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 2, {true, true, false, true})));
    if (a->vars.size() != 2 || b->vars.size() != 2) continue;
    PreProduct p = construct_product(kAllKinds[i % kAllKinds.size()], a, b,
                                     random_alignment(r, vars));
    auto ia = inits(*a, d);
    auto ib = inits(*b, d);
    std::vector<Store> la{r.pick(ia)}, lb{r.pick(ib)};
    const int fuel = 4;
    AdequacyReport rep = check_adequacy_bounded(p, la, lb, fuel, AdequacyMode::Adequate, d);
    if (rep.verdict == AdequacyReport::Verdict::Adequate) {
      ++adequate;
      for (const ATrace& t : automaton_traces(*a, la[0], fuel, d.limits, 50))
        for (const ATrace& t2 : automaton_traces(*b, lb[0], fuel, d.limits, 50))
          CHECK(covered(p, t, t2, d));
    } else {
      ++witnesses;
      REQUIRE(rep.left);
      CHECK_FALSE(covered(p, *rep.left, *rep.right, d));
    }
  }
  CHECK(witnesses > 0);
  CHECK(adequate > 0);
}

TEST_CASE("monotonicity of P0 under the eager product") {
  auto p0 = load("p0.whl");
  Domain d = domain(0, 6);
  PreProduct p = construct_product(ProductKind::EagerLockstep, p0, p0);
  Spec spec = parse_spec(fixture("rel/mono.rspec"), true);
  RelVcs rv = relational_vcs(p, parse_rel_annotation(fixture("rel/mono.rann")), spec);
  CHECK(rv.reachable.size() == 5);
  CHECK(all_valid(discharge_all(p, rv.vcs, d)));
  CHECK(check_rel_direct(*p0, *p0, spec, inits(*p0, d), inits(*p0, d), 1000, d).holds);
}

TEST_CASE("lockstep invariant for P0|P1") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(5, 8);
  d.limits.lo = -100000;
  d.limits.hi = 100000;
  PreProduct p = construct_product(ProductKind::OnlyLockstep, p0, p1);
  Spec spec = parse_spec(fixture("rel/maj.rspec"), true);
  RelVcs rv = relational_vcs(p, parse_rel_annotation(fixture("rel/inv1.rann")), spec);
  // (init,init), (L1,L1), (L1,fin), (fin,L1), (fin,fin)
  CHECK(rv.reachable.size() == 5);
  int loop = 0;
  for (const VC& vc : rv.vcs) loop += vc.source == "(L1,L1)";
  CHECK(loop == 4);
  std::vector<Verdict> vs = discharge_all(p, rv.vcs, d);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    INFO(rv.vcs[i].describe());
    CHECK(vs[i].valid());
  }
  CHECK(check_rel_direct(*p0, *p1, spec, inits(*p0, d), inits(*p1, d), 1000, d).holds);
}

TEST_CASE("majorization fails at 2 and holds at 4") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(0, 8);
  d.limits.lo = -100000;
  d.limits.hi = 100000;
  DirectResult at4 = check_rel_direct(*p0, *p1, parse_spec(fixture("rel/maj4.rspec"), true),
                                      inits(*p0, d), inits(*p1, d), 1000, d);
  CHECK(at4.holds);
  Spec s2 = parse_spec("pre: A(x) /\\ L(x) = 2\npost: L(z) > R(z)\n", true);
  DirectResult at2 = check_rel_direct(*p0, *p1, s2, inits(*p0, d), inits(*p1, d), 1000, d);
  CHECK_FALSE(at2.holds);
  CHECK(at2.left_final->get(Var("z")) == 2);
  CHECK(at2.right_final->get(Var("z")) == 4);
}

TEST_CASE("naive invariant: failing VC, reachable instance and replay") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(0, 6);
  PreProduct p = construct_product(ProductKind::OnlyLockstep, p0, p1);
  Spec spec = parse_spec(fixture("rel/maj_naive.rspec"), true);
  RelVcs rv = relational_vcs(p, parse_rel_annotation(fixture("rel/naive.rann")), spec);
  std::vector<Verdict> vs = discharge_all(p, rv.vcs, d);
  std::set<std::string> failing;
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (!vs[i].valid()) {
      CHECK(vs[i].kind == Verdict::Kind::Counterexample);
      failing.insert(rv.vcs[i].source);
    }
  CHECK(failing == std::set<std::string>{"(L1,L1)"});

  // The body VC fails on a state some execution actually reaches.
  auto ia = inits(*p0, d);
  auto ib = inits(*p1, d);
  std::optional<Probe> pr;
  for (std::size_t i = 0; i < vs.size() && !pr; ++i)
    if (!vs[i].valid() && rv.vcs[i].target == "(L1,L1)")
      pr = probe_failing(p, rv.vcs[i], spec, ia, ib, 100, d);
  REQUIRE(pr);
  const PState& at = pr->trace.back();
  CHECK(at.left.store.get(Var("x")) == 3);
  CHECK(at.left.store.get(Var("y")) == 1);
  CHECK(at.left.store.get(Var("z")) == 6);
  CHECK(at.right.store.get(Var("z")) == 4);
  CHECK(pr->left_after.get(Var("z")) == 6);
  CHECK(pr->right_after.get(Var("z")) == 8);

  auto replay = lockstep_replay(p0->program, p1->program, pr->trace.front().left.store,
                                pr->trace.front().right.store, 1000, d.limits);
  bool seen = false;
  for (const auto& [l, r] : replay)
    seen |= l.get(Var("y")) == 2 && l.get(Var("z")) == 6 && r.get(Var("z")) == 4;
  CHECK(seen);
}

TEST_CASE("naive invariant with the bound 3") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  Domain d = domain(0, 6);
  PreProduct p = construct_product(ProductKind::OnlyLockstep, p0, p1);
  Spec spec = parse_spec(fixture("rel/maj3.rspec"), true);
  RelVcs rv = relational_vcs(p, parse_rel_annotation(fixture("rel/naive3.rann")), spec);
  std::vector<Verdict> vs = discharge_all(p, rv.vcs, d);
  bool body_fails = false;
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (rv.vcs[i].source == "(L1,L1)" && rv.vcs[i].target == "(L1,L1)")
      body_fails |= vs[i].kind == Verdict::Kind::Counterexample;
  CHECK(body_fails);
  // No reachable state refutes it: the invariant is too weak, not wrong.
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (!vs[i].valid())
      CHECK_FALSE(probe_failing(p, rv.vcs[i], spec, inits(*p0, d), inits(*p1, d), 100, d));
}

TEST_CASE("relational VC errors") {
  auto p0 = load("p0.whl");
  auto p1 = load("p1.whl");
  PreProduct p = construct_product(ProductKind::OnlyLockstep, p0, p1);
  Spec spec = parse_spec(fixture("rel/maj.rspec"), true);
  CHECK_THROWS_WITH_AS(relational_vcs(p, parse_rel_annotation("(L1,L1): true\n"), spec),
                       doctest::Contains("missing annotation"), VcError);
  CHECK_THROWS_AS(relational_vcs(p, parse_rel_annotation("(L1,L3): true\n"), spec), VcError);
  CHECK_THROWS_AS(relational_vcs(p, parse_rel_annotation("(init,init): true\n"), spec), VcError);
}

TEST_CASE("3-condition equivalence of P0 and P2") {
  auto p0 = load("p0.whl");
  auto p2 = load("p2.whl");
  Domain d = domain(0, 6);
  PreProduct p = construct_product(ProductKind::ThreeCondition, p0, p2,
                                   parse_alignment(fixture("rel/p0p2.align")));
  Spec spec = parse_spec(fixture("rel/equiv.rspec"), true);
  RelVcs rv = relational_vcs(p, parse_rel_annotation(fixture("rel/p0p2.rann")), spec);
  int coverage = 0;
  for (const VC& vc : rv.vcs) coverage += vc.kind == VC::Kind::Coverage;
  CHECK(coverage == static_cast<int>(rv.reachable.size()) - 1);
  std::vector<Verdict> vs = discharge_all(p, rv.vcs, d);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    INFO(rv.vcs[i].describe());
    CHECK(vs[i].valid());
  }
  // Dropping the right-only condition leaves odd counters uncovered.
  Alignment al = parse_alignment(fixture("rel/p0p2.align"));
  al.defaults["r"] = ex::bool_lit(false);
  PreProduct q = construct_product(ProductKind::ThreeCondition, p0, p2, al);
  RelVcs rq = relational_vcs(q, parse_rel_annotation(fixture("rel/p0p2.rann")), spec);
  bool cov_fails = false;
  std::vector<Verdict> vq = discharge_all(q, rq.vcs, d);
  for (std::size_t i = 0; i < vq.size(); ++i)
    cov_fails |= rq.vcs[i].kind == VC::Kind::Coverage && !vq[i].valid();
  CHECK(cov_fails);
}

// With exact reachable-set annotations the product VCs are valid iff the
// relational spec holds directly, for weakly adequate products.
TEST_CASE("relational soundness and completeness on generated pairs") {
  gen::Rng r(2024);
  std::vector<Var> vars{Var("x"), Var("y")};
  const std::vector<ProductKind> kinds{ProductKind::EagerLockstep, ProductKind::Interleaved,
                                       ProductKind::Maximal, ProductKind::Sequenced};
  int pairs = 0, holds = 0, fails = 0;
  for (int i = 0; pairs < 110 && i < 1000; ++i) {
    auto a = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 3, {true, true, false, true})));
    auto b = std::make_shared<const Automaton>(
        build_automaton(gen::command(r, vars, 3, {true, true, false, true})));
    if (a->vars.size() != 2 || b->vars.size() != 2) continue;
    Domain d = domain(-2, 2, {});
    d.limits.lo = -6;
    d.limits.hi = 5;
    Spec spec{gen::rel_formula(r, vars, 1), gen::rel_formula(r, vars, 1)};
    PreProduct p = construct_product(kinds[i % kinds.size()], a, b);
    auto ia = inits(*a, d);
    auto ib = inits(*b, d);
    // Exact reachable product states per label pair.
    std::set<PState> seen;
    std::vector<PState> todo;
    for (const Store& s : ia)
      for (const Store& s2 : ib)
        if (eval_rel(*spec.pre, s, s2, d)) {
          PState st{{kInit, s}, {kInit, s2}};
          if (seen.insert(st).second) todo.push_back(st);
        }
    bool too_big = false;
    while (!todo.empty() && !too_big) {
      PState st = todo.back();
      todo.pop_back();
      for (const PStep& n : product_successors(p, st, d))
        if (seen.insert(n.to).second) todo.push_back(n.to);
      too_big = seen.size() > 20000;
    }
    if (too_big) continue;
    std::map<std::pair<int, int>, std::vector<ExprPtr>> exact;
    for (const PState& st : seen) {
      std::vector<ExprPtr> eqs;
      for (Var v : vars) {
        eqs.push_back(ex::eq(ex::left(ex::var(v)), ex::int_lit(st.left.store.get(v))));
        eqs.push_back(ex::eq(ex::right(ex::var(v)), ex::int_lit(st.right.store.get(v))));
      }
      exact[{st.left.label, st.right.label}].push_back(ex::conj_all(eqs));
    }
    RelAnnotation ranno;
    for (std::size_t l = 0; l < a->labels.size(); ++l)
      for (std::size_t m = 0; m < b->labels.size(); ++m) {
        if ((l == kInit && m == kInit) || (l == kFin && m == kFin)) continue;
        auto it = exact.find({static_cast<int>(l), static_cast<int>(m)});
        ranno[{a->labels[l], b->labels[m]}] =
            it == exact.end() ? ex::bool_lit(false) : ex::disj_all(it->second);
      }
    RelVcs rv = relational_vcs(p, ranno, spec);
    bool valid = all_valid(discharge_all(p, rv.vcs, d));
    DirectResult dr = check_rel_direct(*a, *b, spec, ia, ib, 1 << 20, d);
    INFO(to_string(*a->program), " | ", to_string(*b->program), " under ", to_string(p.kind));
    CHECK(valid == dr.holds);
    ++pairs;
    (dr.holds ? holds : fails) += 1;
  }
  CHECK(pairs >= 100);
  CHECK(holds > 0);
  CHECK(fails > 0);
}

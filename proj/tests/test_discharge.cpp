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

UniversePtr universe(std::initializer_list<const char*> xs) {
  VarSet vs;
  for (const char* x : xs) vs.insert(Var(x));
  return make_universe(vs);
}

Store store(const UniversePtr& u, std::initializer_list<std::pair<const char*, Value>> xs) {
  Store s(u);
  for (const auto& [n, v] : xs) s.set(Var(n), v);
  return s;
}

// Odometer over all stores of u with every variable in [lo, hi].
template <class F>
void for_all_stores(const UniversePtr& u, Value lo, Value hi, F&& f) {
  Store s(u);
  for (Value& v : s.values) v = lo;
  for (;;) {
    f(s);
    std::size_t k = 0;
    while (k < s.values.size() && s.values[k] == hi) s.values[k++] = lo;
    if (k == s.values.size()) return;
    ++s.values[k];
  }
}

const char* kInv1 =
    "L(y) = R(y) /\\ ((L(y) > 4 /\\ L(z) = 1 /\\ R(z) = 1) \\/ (L(y) > 0 /\\ L(z) > 2 * R(z)) \\/ "
    "(L(y) = 0 /\\ L(z) > R(z)))";

}  // namespace

TEST_CASE("relational evaluation examples") {
  Domain d;
  UniversePtr ux = universe({"x"});
  CHECK(eval_rel(*parse_rel_formula("A(x)"), store(ux, {{"x", 2}}), store(ux, {{"x", 2}}), d));
  UniversePtr u = universe({"y", "z"});
  CHECK_FALSE(eval_rel(*parse_rel_formula(kInv1), store(u, {{"y", 2}, {"z", 6}}),
                       store(u, {{"y", 2}, {"z", 4}}), d));
  CHECK(eval_rel(*parse_rel_formula(kInv1), store(u, {{"y", 2}, {"z", 9}}),
                 store(u, {{"y", 2}, {"z", 4}}), d));
  Store a = store(ux, {{"x", 1}}), b = store(ux, {{"x", -1}});
  ExprPtr cl = parse_rel_formula("conv(L(x > 0))");
  CHECK(eval_rel(*cl, a, b, d) == eval_rel(*parse_rel_formula("L(x > 0)"), b, a, d));
  CHECK(eval_rel(*parse_rel_formula("AA{x}"), a, a, d));
  CHECK_FALSE(eval_rel(*parse_rel_formula("AA{x}"), a, b, d));
  CHECK(eval_rel(*parse_rel_formula("both(x * x = 1)"), a, b, d));
  std::optional<Store> mid;
  CHECK(eval_rel(*parse_rel_formula("comp(L(x) < R(x), L(x) < R(x))"), b, a, d, &mid));
  REQUIRE(mid);
  CHECK(mid->get(Var("x")) == 0);
  CHECK_FALSE(eval_rel(*parse_rel_formula("comp(L(x) < R(x), L(x) < R(x))"), store(ux, {{"x", 0}}),
                       a, d));
  CHECK(eval_unary(*parse_formula("x div 0 = 0 /\\ x mod 0 = 0"), a, d));
  CHECK_THROWS_AS(eval_unary(*parse_formula("x * 4611686018427387904 * 4 > 0"), a, d), EvalError);
  CHECK_THROWS_AS(eval_unary(*parse_formula("f(x) = 0"), a, d), EvalError);
}

TEST_CASE("converse involution") {
  gen::Rng r(11);
  std::vector<Var> vars{Var("x"), Var("y")};
  UniversePtr u = universe({"x", "y"});
  Domain d;
  d.set_input({-1, 1});
  for (int i = 0; i < 200; ++i) {
    ExprPtr f = gen::rel_formula(r, vars, 3, true);
    ExprPtr cc = ex::unary(Op::Converse, ex::unary(Op::Converse, f));
    for (int k = 0; k < 5; ++k) {
      Store s(u), s2(u);
      for (Value& v : s.values) v = r.range(-2, 2);
      for (Value& v : s2.values) v = r.range(-2, 2);
      INFO(to_string(*f));
      CHECK(eval_rel(*cc, s, s2, d) == eval_rel(*f, s, s2, d));
    }
  }
}

TEST_CASE("per laws for agreements") {
  Domain d;
  d.set_input({-3, 3});
  for (const char* e : {"x", "x + y", "x mod 2", "x * y - 1"}) {
    ExprPtr a = parse_rel_formula(std::string("A(") + e + ")");
    CHECK(check_rel_entailment(ex::unary(Op::Converse, a), a, d).valid());
    CHECK(check_rel_entailment(ex::binary(Op::Compose, a, a), a, d).valid());
  }
  ExprPtr lt = parse_rel_formula("L(x) < R(x)");
  CHECK(check_rel_entailment(ex::binary(Op::Compose, lt, lt), lt, d).valid());
  Verdict sym = check_rel_entailment(ex::unary(Op::Converse, lt), lt, d);
  REQUIRE(sym.kind == Verdict::Kind::Counterexample);
  CHECK(sym.left->get(Var("x")) > sym.right->get(Var("x")));
}

TEST_CASE("substitution lemmas") {
  gen::Rng r(2718);
  std::vector<Var> vars{Var("x"), Var("y"), Var("z")};
  UniversePtr u = universe({"x", "y", "z"});
  Domain d;
  d.set_input({-1, 1});
  for (int i = 0; i < 400; ++i) {
    ExprPtr p = gen::bool_expr(r, vars, 3);
    Var x = r.pick(vars);
    ExprPtr e = gen::int_expr(r, vars, 2);
    ExprPtr q = subst_unary(p, x, e);
    Store s(u);
    for (Value& v : s.values) v = r.range(-3, 3);
    Store t = s;
    t.set(x, eval_term(*e, s, d));
    INFO(to_string(*p));
    CHECK(eval_unary(*q, s, d) == eval_unary(*p, t, d));
  }
  for (int i = 0; i < 400; ++i) {
    ExprPtr f = gen::rel_formula(r, vars, 3, true);
    Var x = r.pick(vars), x2 = r.pick(vars);
    ExprPtr e = gen::int_expr(r, vars, 2), e2 = gen::int_expr(r, vars, 2);
    bool one_sided = r.coin(30);
    ExprPtr g = one_sided ? subst_rel(f, x, e, Var(), nullptr) : subst_rel(f, x, e, x2, e2);
    Store s(u), s2(u);
    for (Value& v : s.values) v = r.range(-2, 2);
    for (Value& v : s2.values) v = r.range(-2, 2);
    Store t = s, t2 = s2;
    t.set(x, eval_term(*e, s, d));
    if (!one_sided) t2.set(x2, eval_term(*e2, s2, d));
    INFO(to_string(*f));
    INFO(to_string(*g));
    CHECK(eval_rel(*g, s, s2, d) == eval_rel(*f, t, t2, d));
  }
}

TEST_CASE("wp examples") {
  WpOptions plain{false, Limits{}};
  Var x("x");
  std::vector<Action> assign{{Action::Kind::Assign, parse_expr("y + 1"), x}};
  ExprPtr p = parse_formula("x > y");
  CHECK(same(wp_unary(assign, p, plain), subst_unary(p, x, parse_expr("y + 1"))));
  Segment left{0, 0, 1, assign};
  left.path[0].expr = parse_expr("x + 1");
  ExprPtr w = wp_rel(&left, nullptr, parse_rel_formula("A(x)"), plain);
  CHECK(to_string(*w) == "L(x + 1) = R(x)");
  std::vector<Action> never{{Action::Kind::Assume, ex::bool_lit(false), {}}};
  CHECK(is_true_lit(*wp_unary(never, parse_formula("x = 5"), WpOptions{})));
  std::vector<Action> div{{Action::Kind::Assign, parse_expr("10 div y"), x}};
  CHECK(to_string(*wp_unary(div, parse_formula("x = 5"), WpOptions{})) ==
        "y <> 0 /\\ -1024 <= 10 div y /\\ 10 div y <= 1023 => 10 div y = 5");
  Limits hv;
  hv.havoc_lo = 0;
  hv.havoc_hi = 2;
  std::vector<Action> havoc{{Action::Kind::Havoc, nullptr, x}};
  CHECK(to_string(*wp_unary(havoc, parse_formula("x >= y"), WpOptions{true, hv})) ==
        "0 >= y /\\ 1 >= y /\\ 2 >= y");
}

namespace {

// Segments of generated programs, and their stores.
struct SegmentPool {
  std::vector<Segment> segments;
  UniversePtr universe;
};

SegmentPool pool(gen::Rng& r, const std::vector<Var>& vars, int programs) {
  SegmentPool p;
  VarSet vs(vars.begin(), vars.end());
  for (int i = 0; i < programs; ++i) {
    CommandPtr c = gen::command(r, vars, 3, {true, true, false, true});
    for (const Segment& s : build_automaton(c).segments) p.segments.push_back(s);
  }
  p.universe = make_universe(vs);
  return p;
}

}  // namespace

TEST_CASE("wp agrees with segment execution") {
  gen::Rng r(1000);
  std::vector<Var> vars{Var("x"), Var("y"), Var("z")};
  SegmentPool sp = pool(r, vars, 200);
  Limits lim{-8, 7, -1, 1};
  WpOptions o{true, lim};
  Domain d;
  d.limits = lim;
  int pairs = 0;
  for (int i = 0; i < 1200; ++i) {
    const Segment& seg = r.pick(sp.segments);
    ExprPtr q = gen::bool_expr(r, vars, 2);
    ExprPtr w = wp_unary(seg.path, q, o);
    Store s(sp.universe);
    for (Value& v : s.values) v = r.range(-3, 3);
    bool all = true;
    for (const Store& t : exec_segment(seg, s, lim)) all &= eval_unary(*q, t, d);
    INFO(to_string(*q));
    CHECK(eval_unary(*w, s, d) == all);
    bool stuck = false;
    exec_segment(seg, s, lim, stuck);
    CHECK(eval_unary(*wp_nonstuck(seg.path, o), s, d) == !stuck);
    ++pairs;
  }
  CHECK(pairs >= 1000);
  for (int i = 0; i < 600; ++i) {
    const Segment& a = r.pick(sp.segments);
    const Segment& b = r.pick(sp.segments);
    int shape = r.below(3);
    const Segment* ls = shape == 2 ? nullptr : &a;
    const Segment* rs = shape == 1 ? nullptr : &b;
    ExprPtr q = gen::rel_formula(r, vars, 2);
    ExprPtr w = wp_rel(ls, rs, q, o);
    Store s(sp.universe), s2(sp.universe);
    for (Value& v : s.values) v = r.range(-3, 3);
    for (Value& v : s2.values) v = r.range(-3, 3);
    std::vector<Store> lt = ls ? exec_segment(*ls, s, lim) : std::vector<Store>{s};
    std::vector<Store> rt = rs ? exec_segment(*rs, s2, lim) : std::vector<Store>{s2};
    bool all = true;
    for (const Store& t : lt)
      for (const Store& t2 : rt) all &= eval_rel(*q, t, t2, d);
    INFO(to_string(*q));
    CHECK(eval_rel(*w, s, s2, d) == all);
  }
}

TEST_CASE("discharge routes agree and counterexamples replay") {
  gen::Rng r(77);
  std::vector<Var> vars{Var("x"), Var("y")};
  Domain d;
  d.set_input({-2, 2});
  d.limits.lo = -8;
  d.limits.hi = 7;
  WpOptions o{true, d.limits};
  int cex = 0, valid = 0;
  for (int i = 0; i < 150; ++i) {
    CommandPtr c = gen::command(r, vars, 3, {true, true, false, true});
    Automaton a = build_automaton(c);
    Annotation anno;
    for (std::size_t l = 2; l < a.labels.size(); ++l)
      anno[a.labels[l]] = gen::bool_expr(r, vars, 1, false);
    Spec spec{gen::bool_expr(r, vars, 1, false), gen::bool_expr(r, vars, 1, false)};
    VarSet vs = a.vars;
    vs.insert(vars.begin(), vars.end());
    if (vs.size() != 2) continue;
    SideSpace space = make_side_space(a, make_universe(vs), d);
    for (const VC& vc : unary_vcs(a, anno, spec, true, d.limits)) {
      Verdict e = discharge_exec(vc, space, nullptr, d);
      Verdict w = discharge_wp(vc, space, nullptr, d);
      CHECK(e.kind == w.kind);
      Verdict v = discharge_enumerate(vc, space, nullptr, d);
      CHECK(v.kind != Verdict::Kind::Unknown);
      if (v.kind == Verdict::Kind::Counterexample) {
        REQUIRE(v.left);
        CHECK(e.left == w.left);
        CHECK_FALSE(eval_unary(*vc_formula(vc, o), *v.left, d));
        ++cex;
      } else {
        ++valid;
      }
    }
  }
  CHECK(cex > 20);
  CHECK(valid > 20);
}

TEST_CASE("discharge examples") {
  Domain d;
  Automaton a = build_automaton(parse_program("x := x + 1"));
  SideSpace sp = interval_space(universe({"x"}));
  VC vc;
  vc.hypothesis = ex::bool_lit(false);
  vc.conclusion = parse_formula("x = 100");
  vc.left = a.segments[0];
  CHECK(discharge_enumerate(vc, sp, nullptr, d).valid());
  vc.hypothesis = parse_formula("x >= 0");
  Verdict v = discharge_enumerate(vc, sp, nullptr, d);
  REQUIRE(v.kind == Verdict::Kind::Counterexample);
  CHECK(v.left->get(Var("x")) == 0);
  CHECK(v.left_after->get(Var("x")) == 1);
  Domain tiny;
  tiny.budget = 2;
  Verdict u = discharge_enumerate(vc, sp, nullptr, tiny);
  CHECK(u.kind == Verdict::Kind::Unknown);
  CHECK(u.reason.find("budget") != std::string::npos);
}

TEST_CASE("majorization invariant VCs of the lockstep loop body") {
  Automaton p0 = build_automaton(parse_program(fixture("programs/p0.whl")));
  Automaton p1 = build_automaton(parse_program(fixture("programs/p1.whl")));
  Domain d;
  d.set_input({5, 8});
  ExprPtr inv = parse_rel_formula(kInv1);
  UniversePtr u = universe({"x", "y", "z"});
  SideSpace ls = make_side_space(p0, u, d), rs = make_side_space(p1, u, d);
  int checked = 0;
  for (const Segment& a : p0.segments)
    for (const Segment& b : p1.segments) {
      if (a.source != 2 || b.source != 2) continue;
      VC vc;
      vc.relational = true;
      vc.source_left = vc.source_right = 2;
      vc.hypothesis = ex::conj(inv, ex::conj(ex::left(a.path[0].expr), ex::right(b.path[0].expr)));
      vc.conclusion = a.target == kFin && b.target == kFin ? parse_rel_formula("L(z) > R(z)") : inv;
      if (a.target != b.target) vc.conclusion = ex::bool_lit(false);
      vc.left = a;
      vc.right = b;
      Verdict v = discharge_enumerate(vc, ls, &rs, d);
      INFO(vc.describe());
      CHECK(v.valid());
      ++checked;
    }
  CHECK(checked == 4);
}

TEST_CASE("interpreting a symbol by a command") {
  Domain d;
  d.set_input({-3, 3});
  d.functions->define("cmp", Callee{{Var("x"), Var("y")}, Var("z"),
                                      parse_program(fixture("programs/comparator.whl"))});
  CHECK(interpret_symbol("cmp", {2, 2}, d) == 1);
  CHECK(interpret_symbol("cmp", {2, 3}, d) == 0);
  CHECK_FALSE(interpret_symbol("cmp", {5, 0}, d));
  CHECK(eval_unary(*parse_formula("cmp(x, 1) = 1"), store(universe({"x"}), {{"x", 1}}), d));
  CHECK(check_entailment(parse_formula("true"), parse_formula("cmp(x, y) = cmp(y, x)"), d)
            .valid());
  d.functions->define("loop", Callee{{Var("x")}, Var("z"), parse_program("while 0 = 0 do skip od")});
  CHECK_FALSE(interpret_symbol("loop", {0}, d));
  d.functions->define("guess", Callee{{Var("x")}, Var("z"), parse_program("havoc z")});
  CHECK_FALSE(interpret_symbol("guess", {0}, d));
  Verdict unknown = check_entailment(parse_formula("true"), parse_formula("guess(x) = 0"), d);
  CHECK(unknown.kind == Verdict::Kind::Unknown);
}

TEST_CASE("SMT-LIB emission") {
  VC triv;
  triv.kind = VC::Kind::Coverage;
  triv.hypothesis = ex::bool_lit(true);
  triv.conclusion = ex::bool_lit(true);
  std::string t = emit_smtlib(triv, WpOptions{});
  CHECK(t.find("(assert (not true))") != std::string::npos);
  CHECK(t.find("(check-sat)") != std::string::npos);
  CHECK(t.find("declare-const") == std::string::npos);

  VC fn = triv;
  fn.relational = true;
  fn.hypothesis = parse_rel_formula("L(x) = R(y) /\\ L(y) = R(x)");
  fn.conclusion = parse_rel_formula("L(f(x, y)) = R(f(x, y))");
  std::string f = emit_smtlib(fn, WpOptions{});
  CHECK(f.find("(declare-fun f (Int Int) Int)") != std::string::npos);
  CHECK(f.find("(declare-const x_l Int)\n(declare-const y_l Int)\n(declare-const x_r Int)\n"
               "(declare-const y_r Int)\n") != std::string::npos);

  VC md = triv;
  md.conclusion = parse_formula("x mod 2 = 0");
  std::string m = emit_smtlib(md, WpOptions{});
  CHECK(m.find("define-fun fdiv") != std::string::npos);
  CHECK(m.find("define-fun fmod") != std::string::npos);
  CHECK(m.find("(<= (- 1024) x) (<= x 1023)") != std::string::npos);

  VC cp = triv;
  cp.relational = true;
  cp.hypothesis = parse_rel_formula("comp(A(x), A(x))");
  cp.conclusion = parse_rel_formula("A(x)");
  std::string c = emit_smtlib(cp, WpOptions{});
  CHECK(c.find("(exists ((x_m1 Int))") != std::string::npos);
}

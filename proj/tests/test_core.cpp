#include "doctest.h"
#include "gen.hpp"
#include "relv/parse.hpp"
#include "relv/semantics.hpp"
#include "relv/vars.hpp"

using namespace relv;

namespace {

std::string fixture(const std::string& name) {
  return read_file(std::string(RELV_FIXTURES) + "/" + name);
}

VarSet names(std::initializer_list<const char*> xs) {
  VarSet out;
  for (const char* x : xs) out.insert(Var(x));
  return out;
}

}  // namespace

TEST_CASE("parse skip") { CHECK(parse_program("skip")->kind == Cmd::Skip); }

TEST_CASE("parse the factorial program") {
  CommandPtr c = parse_program(
      "y := x; z := 1; while y <> 0 do z := z*y; y := y-1 od");
  Var x("x"), y("y"), z("z");
  CommandPtr expected = cmd::seq(
      cmd::assign(y, ex::var(x)),
      cmd::seq(cmd::assign(z, ex::int_lit(1)),
               cmd::while_(ex::binary(Op::Ne, ex::var(y), ex::int_lit(0)),
                           cmd::seq(cmd::assign(z, ex::binary(Op::Mul, ex::var(z), ex::var(y))),
                                    cmd::assign(y, ex::binary(Op::Sub, ex::var(y),
                                                              ex::int_lit(1)))))));
  CHECK(*c == *expected);
  CHECK(*parse_program(fixture("programs/p0.whl")) == *expected);
}

TEST_CASE("guard must be boolean") {
  try {
    parse_program("while x do skip od");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("guard must be boolean-typed") != std::string::npos);
    CHECK(e.line() == 1);
    CHECK(e.column() == 7);
  }
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_program("x := 1;\n y := (2 + ");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_program("if := 3"), ParseError);
  CHECK_THROWS_WITH_AS(parse_program("do := 1"), doctest::Contains("reserved word"), ParseError);
  CHECK_THROWS_WITH_AS(parse_program("x := f(y)"), doctest::Contains("function symbols"),
                       ParseError);
  CHECK_THROWS_AS(parse_program("var x, x in skip ni"), ParseError);
  CHECK_THROWS_AS(parse_formula("a < b < c"), ParseError);
  CHECK_THROWS_WITH_AS(parse_rel_formula("x = 1"), doctest::Contains("bare variable"),
                       ParseError);
  CHECK_THROWS_AS(parse_formula("L(x) = 1"), ParseError);
  CHECK_THROWS_AS(parse_program("x := 1 = 2"), ParseError);
}

TEST_CASE("grammar corners") {
  CommandPtr c = parse_program("choice x := a or y := 1 end");
  REQUIRE(c->kind == Cmd::Choice);
  CHECK(c->first->kind == Cmd::Assign);
  CHECK(parse_program("if x > 0 then y := 1 fi")->second->kind == Cmd::Skip);
  CHECK(parse_program("z := call(x, y)")->kind == Cmd::CallSite);
  CHECK(parse_program("var t in t := x (* swap *) ni")->kind == Cmd::VarBlock);
  CHECK(parse_program("x := 1; y := 2;")->kind == Cmd::Seq);
  ExprPtr e = parse_expr("-3 * x");
  CHECK(e->args[0]->op == Op::IntLit);
  CHECK(e->args[0]->value == -3);
  ExprPtr imp = parse_formula("a = 1 => b = 1 => c = 1");
  CHECK(imp->op == Op::Implies);
  CHECK(imp->args[1]->op == Op::Implies);
  ExprPtr word = parse_formula("not a = 1 and b = 1 or c = 1");
  CHECK(word->op == Op::Or);
  ExprPtr rel = parse_rel_formula("comp(A(x), conv(L(x) < R(x))) /\\ AA{x,y} /\\ both(y >= 0)");
  CHECK(is_relational(*rel));
  CHECK(parse_rel_formula("L(y = 0) = R(y = 0)")->op == Op::Eq);
}

TEST_CASE("print/parse round trip on generated commands and formulas") {
  gen::Rng r(20240601);
  std::vector<Var> vars{Var("x"), Var("y"), Var("z")};
  for (int i = 0; i < 500; ++i) {
    CommandPtr c = gen::command(r, vars, 4);
    std::string text = to_string(*c);
    CommandPtr back = parse_program(text);
    INFO(text);
    REQUIRE(*back == *c);
  }
  for (int i = 0; i < 500; ++i) {
    ExprPtr f = gen::rel_formula(r, vars, 3, true);
    std::string text = to_string(*f);
    INFO(text);
    REQUIRE(*parse_rel_formula(text) == *f);
  }
  for (int i = 0; i < 300; ++i) {
    ExprPtr f = gen::bool_expr(r, vars, 3);
    std::string text = to_string(*f);
    INFO(text);
    REQUIRE(*parse_formula(text) == *f);
  }
}

TEST_CASE("file formats") {
  Spec s = parse_spec("pre: A(x) /\\ L(x) > 4\npost: L(z) >\n  R(z)\n", true);
  CHECK(to_string(*s.pre) == "A(x) /\\ L(x) > 4");
  CHECK(to_string(*s.post) == "L(z) > R(z)");
  Annotation a = parse_annotation("(* loop *)\nL1: y >= 0\nL2: z = 1 /\\\n  y = 2\n");
  CHECK(a.size() == 2);
  CHECK(to_string(*a.at("L2")) == "z = 1 /\\ y = 2");
  RelAnnotation ra = parse_rel_annotation("(L1,L1): A(y)\n(fin, L1): false\n");
  CHECK(ra.count({"fin", "L1"}) == 1);
  Alignment al = parse_alignment("l: L(w mod 2 <> 0)\nr: false\nb: true\n(init,init) b: false\n");
  CHECK(is_false_lit(*al.lookup("b", {"init", "init"})));
  CHECK(is_true_lit(*al.lookup("b", {"L1", "L1"})));
  CHECK(al.lookup("ac", {"L1", "L1"}) == nullptr);
  CHECK_THROWS_AS(parse_spec("pre: true\n", false), ParseError);
  CHECK_THROWS_AS(parse_annotation("L1: x\n"), ParseError);
  CHECK_THROWS_AS(read_file("/nonexistent/file"), IoError);
}

TEST_CASE("unary substitution") {
  Var x("x"), y("y");
  CHECK(to_string(*subst_unary(parse_formula("x = y"), x, parse_expr("x + 1"))) == "x + 1 = y");
  ExprPtr p = parse_formula("z = 1");
  CHECK(subst_unary(p, x, ex::int_lit(7)) == p);
  CHECK(to_string(*subst_unary(parse_formula("x = x"), x, parse_expr("y * 2"))) ==
        "y * 2 = y * 2");
}

TEST_CASE("relational substitution") {
  Var x("x"), y("y");
  ExprPtr r = subst_rel(parse_rel_formula("A(x)"), x, parse_expr("x + 1"), x, ex::var(y));
  CHECK(to_string(*r) == "L(x + 1) = R(y)");
  ExprPtr b = parse_rel_formula("both(z = 1)");
  CHECK(subst_rel(b, x, ex::int_lit(0), x, ex::int_lit(0)) == b);
  ExprPtr two = subst_rel(parse_rel_formula("L(x > 0) /\\ R(x > 0)"), x, parse_expr("x - 1"), x,
                          parse_expr("x + 1"));
  CHECK(to_string(*two) == "L(x - 1 > 0) /\\ R(x + 1 > 0)");
  ExprPtr same_both = subst_rel(parse_rel_formula("A(x)"), x, ex::int_lit(3), x, ex::int_lit(3));
  CHECK(to_string(*same_both) == "A(3)");
  ExprPtr conv = subst_rel(parse_rel_formula("conv(L(x > 0))"), x, ex::int_lit(1), Var(), nullptr);
  CHECK(to_string(*conv) == "conv(L(x > 0))");
  ExprPtr conv2 = subst_rel(parse_rel_formula("conv(R(x > 0))"), x, ex::int_lit(1), Var(), nullptr);
  CHECK(to_string(*conv2) == "conv(R(1 > 0))");
  ExprPtr aa = subst_rel(parse_rel_formula("AA{x,y}"), x, ex::int_lit(1), Var(), nullptr);
  CHECK(to_string(*aa) == "AA{y} /\\ L(1) = R(x)");
}

TEST_CASE("command variables") {
  CommandVars body = command_vars(*parse_program("z := z*y; y := y-1"));
  CHECK(body.read == names({"z", "y"}));
  CHECK(body.written == names({"z", "y"}));
  CommandVars sk = command_vars(*cmd::skip());
  CHECK(sk.read.empty());
  CHECK(sk.written.empty());
  CommandVars p0 = command_vars(*parse_program(fixture("programs/p0.whl")));
  CHECK(p0.read == names({"x", "y", "z"}));
  CHECK(p0.written == names({"y", "z"}));
  CommandVars blk = command_vars(*parse_program("var t in t := x; y := t ni"));
  CHECK(blk.read == names({"x"}));
  CHECK(blk.written == names({"y"}));
}

TEST_CASE("auxiliary variables") {
  CommandPtr c = parse_program("x := 1; g := g + x");
  CHECK(is_auxiliary(names({"g"}), *c));
  CommandPtr erased = erase_aux(names({"g"}), c);
  CHECK(to_string(*erased) == "x := 1; skip");
  CHECK_FALSE(is_auxiliary(names({"g"}), *parse_program("x := g")));
  CHECK_THROWS_AS(erase_aux(names({"g"}), parse_program("x := g")), std::invalid_argument);

  gen::Rng r(7);
  std::vector<Var> vars{Var("x"), Var("y"), Var("g")};
  for (int i = 0; i < 200; ++i) {
    CommandPtr prog = gen::command(r, vars, 3);
    CHECK(is_auxiliary({}, *prog));
  }

  // Terminal stores outside xs are preserved, by interpretation over [-2,2].
  for (const char* text : {"x := 1; g := g + x", "g := x; while x > 0 do x := x - 1; g := g * 2 od",
                           "if x > 0 then g := 1 else y := 2 fi"}) {
    CommandPtr p = parse_program(text);
    VarSet xs = names({"g"});
    REQUIRE(is_auxiliary(xs, *p));
    CommandPtr q = erase_aux(xs, p);
    auto u = make_universe(names({"x", "y", "g"}));
    Limits lim;
    for (Value a = -2; a <= 2; ++a)
      for (Value b = -2; b <= 2; ++b)
        for (Value g = -2; g <= 2; ++g) {
          Store s(u);
          s.set(Var("x"), a);
          s.set(Var("y"), b);
          s.set(Var("g"), g);
          auto project = [&](const FinalStores& f) {
            std::set<std::pair<Value, Value>> out;
            for (const Store& t : f.finals) out.insert({t.get(Var("x")), t.get(Var("y"))});
            return out;
          };
          CHECK(project(final_stores(prepare(p), s, 100, lim)) ==
                project(final_stores(prepare(q), s, 100, lim)));
        }
  }
}

TEST_CASE("renaming keeps shape") {
  CommandPtr c = parse_program("var t in t := x ni");
  CHECK(to_string(*rename_var(c, Var("t"), Var("t0"))) == "var t0 in t0 := x ni");
}

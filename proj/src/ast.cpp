#include "relv/ast.hpp"

#include <functional>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace relv {

namespace {

struct Interner {
  std::mutex mu;
  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::unique_ptr<std::string>> names;

  Interner() { names.push_back(std::make_unique<std::string>("")); }
};

Interner& interner() {
  static Interner instance;
  return instance;
}

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_expr(const Expr& e) {
  std::size_t h = std::hash<int>{}(static_cast<int>(e.op));
  h = mix(h, std::hash<Value>{}(e.value));
  h = mix(h, e.var.id());
  if (!e.fn.empty()) h = mix(h, std::hash<std::string>{}(e.fn));
  for (Var v : e.vars) h = mix(h, v.id());
  for (const auto& a : e.args) h = mix(h, a->hash);
  return h;
}

std::size_t hash_command(const Command& c) {
  std::size_t h = std::hash<int>{}(static_cast<int>(c.kind)) + 17;
  h = mix(h, c.target.id());
  if (c.expr) h = mix(h, c.expr->hash);
  if (c.first) h = mix(h, c.first->hash);
  if (c.second) h = mix(h, c.second->hash);
  for (Var v : c.vars) h = mix(h, v.id());
  return h;
}

ExprPtr make(Expr e) {
  e.hash = hash_expr(e);
  return std::make_shared<const Expr>(std::move(e));
}

CommandPtr make(Command c) {
  c.hash = hash_command(c);
  return std::make_shared<const Command>(std::move(c));
}

}  // namespace

Var::Var(std::string_view name) {
  auto& in = interner();
  std::lock_guard lock(in.mu);
  std::string key(name);
  auto it = in.ids.find(key);
  if (it != in.ids.end()) {
    id_ = it->second;
    return;
  }
  id_ = static_cast<std::uint32_t>(in.names.size());
  in.names.push_back(std::make_unique<std::string>(key));
  in.ids.emplace(std::move(key), id_);
}

const std::string& Var::name() const {
  auto& in = interner();
  std::lock_guard lock(in.mu);
  return *in.names[id_];
}

bool operator==(const Expr& a, const Expr& b) {
  if (&a == &b) return true;
  if (a.hash != b.hash || a.op != b.op || a.value != b.value || a.var != b.var ||
      a.fn != b.fn || a.vars != b.vars || a.args.size() != b.args.size())
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!(*a.args[i] == *b.args[i])) return false;
  return true;
}

bool same(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

bool operator==(const Command& a, const Command& b) {
  if (&a == &b) return true;
  return a.hash == b.hash && a.kind == b.kind && a.target == b.target &&
         same(a.expr, b.expr) && same(a.first, b.first) && same(a.second, b.second) &&
         a.vars == b.vars;
}

bool same(const CommandPtr& a, const CommandPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

namespace ex {

ExprPtr int_lit(Value v) { return make(Expr{.op = Op::IntLit, .value = v}); }
ExprPtr bool_lit(bool b) { return make(Expr{.op = Op::BoolLit, .value = b ? 1 : 0}); }
ExprPtr var(Var v) { return make(Expr{.op = Op::Var, .var = v}); }
ExprPtr var(std::string_view name) { return var(Var(name)); }
ExprPtr unary(Op op, ExprPtr a) { return make(Expr{.op = op, .args = {std::move(a)}}); }
ExprPtr binary(Op op, ExprPtr a, ExprPtr b) {
  return make(Expr{.op = op, .args = {std::move(a), std::move(b)}});
}
ExprPtr app(std::string fn, std::vector<ExprPtr> args) {
  return make(Expr{.op = Op::App, .fn = std::move(fn), .args = std::move(args)});
}
ExprPtr agree_all(std::vector<Var> vars) {
  return make(Expr{.op = Op::AgreeAll, .vars = std::move(vars)});
}

ExprPtr conj(ExprPtr a, ExprPtr b) { return binary(Op::And, std::move(a), std::move(b)); }
ExprPtr disj(ExprPtr a, ExprPtr b) { return binary(Op::Or, std::move(a), std::move(b)); }
ExprPtr implies(ExprPtr a, ExprPtr b) { return binary(Op::Implies, std::move(a), std::move(b)); }
ExprPtr negate(ExprPtr a) { return unary(Op::Not, std::move(a)); }
ExprPtr eq(ExprPtr a, ExprPtr b) { return binary(Op::Eq, std::move(a), std::move(b)); }
ExprPtr left(ExprPtr a) { return unary(Op::Left, std::move(a)); }
ExprPtr right(ExprPtr a) { return unary(Op::Right, std::move(a)); }

ExprPtr conj_all(const std::vector<ExprPtr>& parts) {
  if (parts.empty()) return bool_lit(true);
  ExprPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = conj(acc, parts[i]);
  return acc;
}

ExprPtr disj_all(const std::vector<ExprPtr>& parts) {
  if (parts.empty()) return bool_lit(false);
  ExprPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = disj(acc, parts[i]);
  return acc;
}

}  // namespace ex

bool is_true_lit(const Expr& e) { return e.op == Op::BoolLit && e.value != 0; }
bool is_false_lit(const Expr& e) { return e.op == Op::BoolLit && e.value == 0; }

namespace {

void expect(bool ok, const Expr& e, const char* what) {
  if (!ok) throw TypeError(std::string(what) + " in `" + to_string(e) + "`");
}

Sort sort_impl(const Expr& e, bool under_side) {
  auto arg = [&](std::size_t i, bool side) { return sort_impl(*e.args[i], side); };
  switch (e.op) {
    case Op::IntLit:
      return Sort::Int;
    case Op::BoolLit:
      return Sort::Bool;
    case Op::Var:
      return Sort::Int;
    case Op::Neg:
      expect(arg(0, under_side) == Sort::Int, e, "integer operand expected");
      return Sort::Int;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
      expect(arg(0, under_side) == Sort::Int && arg(1, under_side) == Sort::Int, e,
             "integer operands expected");
      return Sort::Int;
    case Op::Eq:
    case Op::Ne:
      expect(arg(0, under_side) == arg(1, under_side), e, "operands of different sorts");
      return Sort::Bool;
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      expect(arg(0, under_side) == Sort::Int && arg(1, under_side) == Sort::Int, e,
             "integer operands expected");
      return Sort::Bool;
    case Op::Not:
      expect(arg(0, under_side) == Sort::Bool, e, "boolean operand expected");
      return Sort::Bool;
    case Op::And:
    case Op::Or:
    case Op::Implies:
      expect(arg(0, under_side) == Sort::Bool && arg(1, under_side) == Sort::Bool, e,
             "boolean operands expected");
      return Sort::Bool;
    case Op::App:
      for (std::size_t i = 0; i < e.args.size(); ++i)
        expect(arg(i, under_side) == Sort::Int, e, "integer arguments expected");
      return Sort::Int;
    case Op::Left:
    case Op::Right:
      expect(!is_relational(*e.args[0]), e, "nested relational form");
      return sort_impl(*e.args[0], true);
    case Op::Agree:
      expect(!is_relational(*e.args[0]), e, "nested relational form");
      sort_impl(*e.args[0], true);
      return Sort::Bool;
    case Op::AgreeAll:
      return Sort::Bool;
    case Op::Both:
      expect(!is_relational(*e.args[0]) && sort_impl(*e.args[0], true) == Sort::Bool, e,
             "unary formula expected");
      return Sort::Bool;
    case Op::Converse:
    case Op::Compose:
      for (std::size_t i = 0; i < e.args.size(); ++i)
        expect(arg(i, under_side) == Sort::Bool, e, "relational formula expected");
      return Sort::Bool;
  }
  return Sort::Bool;
}

}  // namespace

Sort sort_of(const Expr& e) { return sort_impl(e, false); }

bool is_relational(const Expr& e) {
  switch (e.op) {
    case Op::Left:
    case Op::Right:
    case Op::Agree:
    case Op::AgreeAll:
    case Op::Both:
    case Op::Converse:
    case Op::Compose:
      return true;
    default:
      for (const auto& a : e.args)
        if (is_relational(*a)) return true;
      return false;
  }
}

bool mentions_functions(const Expr& e) {
  if (e.op == Op::App) return true;
  for (const auto& a : e.args)
    if (mentions_functions(*a)) return true;
  return false;
}

void collect_functions(const Expr& e, std::set<std::string>& out) {
  if (e.op == Op::App) out.insert(e.fn);
  for (const auto& a : e.args) collect_functions(*a, out);
}

namespace {
void free_vars_into(const Expr& e, VarSet& out) {
  if (e.op == Op::Var) out.insert(e.var);
  for (Var v : e.vars) out.insert(v);
  for (const auto& a : e.args) free_vars_into(*a, out);
}
}  // namespace

VarSet free_vars(const Expr& e) {
  VarSet out;
  free_vars_into(e, out);
  return out;
}

SidedVars sided_vars(const Expr& r) {
  SidedVars out;
  switch (r.op) {
    case Op::Left:
      free_vars_into(*r.args[0], out.left);
      return out;
    case Op::Right:
      free_vars_into(*r.args[0], out.right);
      return out;
    case Op::Agree:
    case Op::Both:
    case Op::AgreeAll:
      free_vars_into(r, out.left);
      out.right = out.left;
      return out;
    case Op::Converse: {
      SidedVars in = sided_vars(*r.args[0]);
      return {in.right, in.left};
    }
    case Op::Compose:
      out.left = sided_vars(*r.args[0]).left;
      out.right = sided_vars(*r.args[1]).right;
      return out;
    case Op::Var:
      throw TypeError("bare variable `" + r.var.name() +
                      "` in relational formula; use L(..) or R(..)");
    default:
      for (const auto& a : r.args) {
        SidedVars in = sided_vars(*a);
        out.left.insert(in.left.begin(), in.left.end());
        out.right.insert(in.right.begin(), in.right.end());
      }
      return out;
  }
}

namespace cmd {

CommandPtr skip() {
  static const CommandPtr instance = make(Command{.kind = Cmd::Skip});
  return instance;
}
CommandPtr assign(Var x, ExprPtr e) {
  return make(Command{.kind = Cmd::Assign, .target = x, .expr = std::move(e)});
}
CommandPtr havoc(Var x) { return make(Command{.kind = Cmd::Havoc, .target = x}); }
CommandPtr seq(CommandPtr a, CommandPtr b) {
  return make(Command{.kind = Cmd::Seq, .first = std::move(a), .second = std::move(b)});
}
CommandPtr if_(ExprPtr g, CommandPtr t, CommandPtr e) {
  return make(Command{.kind = Cmd::If, .expr = std::move(g), .first = std::move(t),
                      .second = std::move(e)});
}
CommandPtr while_(ExprPtr g, CommandPtr body) {
  return make(Command{.kind = Cmd::While, .expr = std::move(g), .first = std::move(body)});
}
CommandPtr choice(CommandPtr a, CommandPtr b) {
  return make(Command{.kind = Cmd::Choice, .first = std::move(a), .second = std::move(b)});
}
CommandPtr var_block(std::vector<Var> locals, CommandPtr body) {
  return make(Command{.kind = Cmd::VarBlock, .first = std::move(body), .vars = std::move(locals)});
}
CommandPtr call(Var result, std::vector<Var> args) {
  return make(Command{.kind = Cmd::CallSite, .target = result, .vars = std::move(args)});
}

}  // namespace cmd

void check_command(const Command& c) {
  auto check_expr = [&](const ExprPtr& e, Sort want, const char* where) {
    if (is_relational(*e)) throw TypeError(std::string("relational form in ") + where);
    if (mentions_functions(*e))
      throw TypeError("function symbols never appear in commands: `" + to_string(*e) + "`");
    if (sort_of(*e) != want)
      throw TypeError(std::string(where) + " must be " + to_string(want) + "-typed: `" +
                      to_string(*e) + "`");
  };
  switch (c.kind) {
    case Cmd::Skip:
    case Cmd::Havoc:
      return;
    case Cmd::Assign:
      check_expr(c.expr, Sort::Int, "right-hand side");
      return;
    case Cmd::Seq:
    case Cmd::Choice:
      check_command(*c.first);
      check_command(*c.second);
      return;
    case Cmd::If:
      check_expr(c.expr, Sort::Bool, "guard");
      check_command(*c.first);
      check_command(*c.second);
      return;
    case Cmd::While:
      check_expr(c.expr, Sort::Bool, "guard");
      check_command(*c.first);
      return;
    case Cmd::VarBlock: {
      VarSet seen;
      for (Var v : c.vars)
        if (!seen.insert(v).second) throw TypeError("duplicate block local `" + v.name() + "`");
      check_command(*c.first);
      return;
    }
    case Cmd::CallSite:
      return;
  }
}

bool contains_calls(const Command& c) {
  if (c.kind == Cmd::CallSite) return true;
  return (c.first && contains_calls(*c.first)) || (c.second && contains_calls(*c.second));
}

bool is_deterministic(const Command& c) {
  if (c.kind == Cmd::Choice || c.kind == Cmd::Havoc) return false;
  return (!c.first || is_deterministic(*c.first)) && (!c.second || is_deterministic(*c.second));
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.op) {
    case Op::Implies:
      return 1;
    case Op::Or:
      return 2;
    case Op::And:
      return 3;
    case Op::Not:
      return 4;
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      return 5;
    case Op::Add:
    case Op::Sub:
      return 6;
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
      return 7;
    case Op::Neg:
      return 8;
    case Op::IntLit:
      return e.value < 0 ? 8 : 9;
    default:
      return 9;
  }
}

const char* infix(Op op) {
  switch (op) {
    case Op::Implies: return " => ";
    case Op::Or: return " \\/ ";
    case Op::And: return " /\\ ";
    case Op::Eq: return " = ";
    case Op::Ne: return " <> ";
    case Op::Lt: return " < ";
    case Op::Le: return " <= ";
    case Op::Gt: return " > ";
    case Op::Ge: return " >= ";
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    case Op::Div: return " div ";
    case Op::Mod: return " mod ";
    default: return " ? ";
  }
}

void print(std::ostream& os, const Expr& e, int ctx);

void print_at(std::ostream& os, const Expr& e, int need) {
  if (precedence(e) < need) {
    os << '(';
    print(os, e, 0);
    os << ')';
  } else {
    print(os, e, need);
  }
}

void print(std::ostream& os, const Expr& e, int) {
  switch (e.op) {
    case Op::IntLit:
      os << e.value;
      return;
    case Op::BoolLit:
      os << (e.value ? "true" : "false");
      return;
    case Op::Var:
      os << e.var.name();
      return;
    case Op::Neg:
      os << '-';
      if (e.args[0]->op == Op::IntLit || e.args[0]->op == Op::Neg) {
        os << '(';
        print(os, *e.args[0], 0);
        os << ')';
      } else {
        print_at(os, *e.args[0], 8);
      }
      return;
    case Op::Not:
      os << "~";
      print_at(os, *e.args[0], 4);
      return;
    case Op::Implies:
      print_at(os, *e.args[0], 2);
      os << infix(e.op);
      print_at(os, *e.args[1], 1);
      return;
    case Op::Or:
    case Op::And:
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod: {
      int p = precedence(e);
      print_at(os, *e.args[0], p);
      os << infix(e.op);
      print_at(os, *e.args[1], p + 1);
      return;
    }
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
      print_at(os, *e.args[0], 6);
      os << infix(e.op);
      print_at(os, *e.args[1], 6);
      return;
    case Op::App:
      os << e.fn << '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ", ";
        print(os, *e.args[i], 0);
      }
      os << ')';
      return;
    case Op::Left:
    case Op::Right:
    case Op::Agree:
    case Op::Both:
    case Op::Converse:
      os << (e.op == Op::Left    ? "L("
             : e.op == Op::Right ? "R("
             : e.op == Op::Agree ? "A("
             : e.op == Op::Both  ? "both("
                                 : "conv(");
      print(os, *e.args[0], 0);
      os << ')';
      return;
    case Op::AgreeAll:
      os << "AA{";
      for (std::size_t i = 0; i < e.vars.size(); ++i) os << (i ? "," : "") << e.vars[i].name();
      os << '}';
      return;
    case Op::Compose:
      os << "comp(";
      print(os, *e.args[0], 0);
      os << ", ";
      print(os, *e.args[1], 0);
      os << ')';
      return;
  }
}

void print(std::ostream& os, const Command& c, bool in_seq_first);

void print_vars(std::ostream& os, const std::vector<Var>& vs) {
  for (std::size_t i = 0; i < vs.size(); ++i) os << (i ? "," : "") << vs[i].name();
}

void print(std::ostream& os, const Command& c, bool in_seq_first) {
  switch (c.kind) {
    case Cmd::Skip:
      os << "skip";
      return;
    case Cmd::Assign:
      os << c.target.name() << " := ";
      print(os, *c.expr, 0);
      return;
    case Cmd::Havoc:
      os << "havoc " << c.target.name();
      return;
    case Cmd::Seq:
      if (in_seq_first) os << '(';
      print(os, *c.first, true);
      os << "; ";
      print(os, *c.second, false);
      if (in_seq_first) os << ')';
      return;
    case Cmd::If:
      os << "if ";
      print(os, *c.expr, 0);
      os << " then ";
      print(os, *c.first, false);
      if (c.second->kind != Cmd::Skip) {
        os << " else ";
        print(os, *c.second, false);
      }
      os << " fi";
      return;
    case Cmd::While:
      os << "while ";
      print(os, *c.expr, 0);
      os << " do ";
      print(os, *c.first, false);
      os << " od";
      return;
    case Cmd::Choice:
      os << "choice ";
      print(os, *c.first, false);
      os << " or ";
      print(os, *c.second, false);
      os << " end";
      return;
    case Cmd::VarBlock:
      os << "var ";
      print_vars(os, c.vars);
      os << " in ";
      print(os, *c.first, false);
      os << " ni";
      return;
    case Cmd::CallSite:
      os << c.target.name() << " := call(";
      print_vars(os, c.vars);
      os << ')';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(os, e, 0);
  return os.str();
}

std::string to_string(const Command& c) {
  std::ostringstream os;
  print(os, c, false);
  return os.str();
}

std::string to_string(Sort s) { return s == Sort::Int ? "int" : "bool"; }

}  // namespace relv

#include <algorithm>
#include <filesystem>

#include "relv/proofcheck.hpp"
#include "relv/vars.hpp"

namespace relv {

ProofSyntaxError::ProofSyntaxError(int line, int column, const std::string& msg)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

// ---------------------------------------------------------------------------
// S-expressions

namespace {

class SReader {
 public:
  explicit SReader(std::string_view t) : t_(t) {}

  SExpr top() {
    skip_ws();
    if (pos_ >= t_.size()) fail("empty proof file");
    SExpr e = read();
    skip_ws();
    if (pos_ < t_.size()) fail("text after the top-level form");
    return e;
  }

 private:
  std::string_view t_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  [[noreturn]] void fail(const std::string& msg) const { throw ProofSyntaxError(line_, col_, msg); }

  char peek() const { return pos_ < t_.size() ? t_[pos_] : '\0'; }
  char next() {
    char c = t_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_ws() {
    while (pos_ < t_.size()) {
      char c = peek();
      if (c == ';') {
        while (pos_ < t_.size() && peek() != '\n') next();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        next();
      } else {
        return;
      }
    }
  }

  SExpr read() {
    SExpr e;
    e.line = line_;
    e.column = col_;
    char c = peek();
    if (c == '(') {
      next();
      e.kind = SExpr::Kind::List;
      for (;;) {
        skip_ws();
        if (pos_ >= t_.size()) throw ProofSyntaxError(e.line, e.column, "unclosed `(`");
        if (peek() == ')') {
          next();
          return e;
        }
        e.items.push_back(read());
      }
    }
    if (c == ')') fail("unexpected `)`");
    if (c == '"') {
      next();
      e.kind = SExpr::Kind::String;
      for (;;) {
        if (pos_ >= t_.size()) throw ProofSyntaxError(e.line, e.column, "unterminated string");
        char d = next();
        if (d == '"') return e;
        // Only `\"` escapes; formulas use backslashes in `/\` and `\/`.
        if (d == '\\' && peek() == '"') {
          e.text += next();
        } else {
          e.text += d;
        }
      }
    }
    e.kind = SExpr::Kind::Atom;
    while (pos_ < t_.size() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '(' &&
           peek() != ')' && peek() != '"' && peek() != ';')
      e.text += next();
    return e;
  }
};

}  // namespace

SExpr parse_sexpr(std::string_view text) { return SReader(text).top(); }

std::string to_string(const SExpr& s) {
  switch (s.kind) {
    case SExpr::Kind::Atom:
      return s.text;
    case SExpr::Kind::String: {
      std::string out = "\"";
      for (char c : s.text) {
        if (c == '"') out += '\\';
        out += c;
      }
      return out + "\"";
    }
    case SExpr::Kind::List: {
      std::string out = "(";
      for (std::size_t i = 0; i < s.items.size(); ++i) out += (i ? " " : "") + to_string(s.items[i]);
      return out + ")";
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// Derivations

std::string to_string(const Judgment& j) {
  std::string pre = to_string(*j.pre);
  if (!j.exists.empty()) {
    std::string vs;
    for (Var v : j.exists) vs += (vs.empty() ? "" : ",") + v.name();
    pre = "exists " + vs + ". " + pre;
  }
  std::string spec = " : <" + pre + "><" + to_string(*j.post) + ">";
  if (j.relational) return to_string(*j.left) + " | " + to_string(*j.right) + spec;
  if (j.link) return "link (" + to_string(*j.left) + ") with (" + to_string(*j.link->callee) + ")" + spec;
  return to_string(*j.left) + spec;
}

namespace {

struct DerivationReader {
  std::string base;

  [[noreturn]] static void fail(const SExpr& at, const std::string& msg) {
    throw ProofSyntaxError(at.line, at.column, msg);
  }

  std::string path(const std::string& rel) const {
    std::filesystem::path p(rel);
    return p.is_absolute() ? rel : (std::filesystem::path(base) / p).string();
  }

  template <class F>
  auto guarded(const SExpr& at, F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const ParseError& e) {
      fail(at, std::string("in embedded text: ") + e.what());
    } catch (const TypeError& e) {
      fail(at, std::string("in embedded text: ") + e.what());
    } catch (const IoError& e) {
      fail(at, e.what());
    }
  }

  const std::string& str(const SExpr& s) const {
    if (s.kind != SExpr::Kind::String) fail(s, "expected a string");
    return s.text;
  }

  std::vector<Var> var_list(const SExpr& s, std::size_t from) const {
    std::vector<Var> out;
    for (std::size_t i = from; i < s.items.size(); ++i) {
      if (s.items[i].kind != SExpr::Kind::Atom) fail(s.items[i], "expected a variable name");
      out.push_back(Var(s.items[i].text));
    }
    return out;
  }

  CommandPtr command(const SExpr& s) {
    if (s.kind == SExpr::Kind::String)
      return guarded(s, [&] {
        CommandPtr c = parse_program(s.text);
        check_command(*c);
        return c;
      });
    if (s.is_form("file") && s.items.size() == 2)
      return guarded(s, [&] {
        CommandPtr c = parse_program(read_file(path(str(s.items[1]))));
        check_command(*c);
        return c;
      });
    fail(s, "expected a command string or (file \"path\")");
  }

  ExprPtr formula(const SExpr& s, bool relational) {
    const std::string* text = nullptr;
    std::string content;
    if (s.kind == SExpr::Kind::String) {
      text = &s.text;
    } else if (s.is_form("file") && s.items.size() == 2) {
      content = guarded(s, [&] { return read_file(path(str(s.items[1]))); });
      text = &content;
    } else {
      fail(s, "expected a formula string");
    }
    return guarded(s, [&] { return relational ? parse_rel_formula(*text) : parse_formula(*text); });
  }

  Judgment judgment(const SExpr& s) {
    Judgment j;
    if (s.is_form("unary") && s.items.size() == 4) {
      const SExpr& c = s.items[1];
      if (c.is_form("link")) {
        if (c.items.size() != 5 || !c.items[3].is_form("params") || !c.items[4].is_form("result") ||
            c.items[4].items.size() != 2)
          fail(c, "expected (link D C (params x..) (result z))");
        j.left = command(c.items[1]);
        Link l;
        l.callee = command(c.items[2]);
        l.params = var_list(c.items[3], 1);
        l.result = var_list(c.items[4], 1)[0];
        j.link = std::move(l);
      } else {
        j.left = command(c);
      }
      const SExpr& p = s.items[2];
      if (p.is_form("exists")) {
        if (p.items.size() != 3 || p.items[1].kind != SExpr::Kind::List)
          fail(p, "expected (exists (x..) \"P\")");
        j.exists = var_list(p.items[1], 0);
        if (j.exists.empty()) fail(p, "empty variable list");
        j.pre = formula(p.items[2], false);
      } else {
        j.pre = formula(p, false);
      }
      j.post = formula(s.items[3], false);
      return j;
    }
    if (s.is_form("relational") && s.items.size() == 5) {
      j.relational = true;
      j.left = command(s.items[1]);
      j.right = command(s.items[2]);
      j.pre = formula(s.items[3], true);
      j.post = formula(s.items[4], true);
      return j;
    }
    fail(s, "expected (unary C P Q) or (relational C C' R S)");
  }

  Derivation derivation(const SExpr& s) {
    if (!s.is_form("derivation")) fail(s, "expected (derivation ...)");
    Derivation d;
    d.base_dir = base;
    d.line = s.line;
    bool rule = false, concl = false;
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      const SExpr& f = s.items[i];
      if (f.is_form("rule") && f.items.size() == 2 && f.items[1].kind == SExpr::Kind::Atom) {
        d.rule = f.items[1].text;
        rule = true;
      } else if (f.is_form("conclusion") && f.items.size() == 2) {
        d.conclusion = judgment(f.items[1]);
        concl = true;
      } else if (f.is_form("premises")) {
        for (std::size_t k = 1; k < f.items.size(); ++k) d.premises.push_back(derivation(f.items[k]));
      } else if (f.is_form("side")) {
        for (std::size_t k = 1; k < f.items.size(); ++k) d.side.push_back(f.items[k]);
      } else {
        fail(f, "unexpected entry in derivation: " + to_string(f));
      }
    }
    if (!rule) fail(s, "derivation without (rule ...)");
    if (!concl) fail(s, "derivation without (conclusion ...)");
    return d;
  }
};

}  // namespace

Derivation parse_derivation(std::string_view text, const std::string& base_dir) {
  DerivationReader r{base_dir};
  return r.derivation(parse_sexpr(text));
}

Derivation load_derivation(const std::string& path) {
  std::string text = read_file(path);
  std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_derivation(text, dir.empty() ? "." : dir);
}

// ---------------------------------------------------------------------------
// Normal form for matching

namespace {

bool connective(Op op) {
  return op == Op::Not || op == Op::And || op == Op::Or || op == Op::Implies || op == Op::BoolLit;
}

ExprPtr rebuild(const ExprPtr& e, std::vector<ExprPtr> args) {
  switch (args.size()) {
    case 0:
      return e;
    case 1:
      return ex::unary(e->op, args[0]);
    case 2:
      return ex::binary(e->op, args[0], args[1]);
    default:
      return ex::app(e->fn, std::move(args));
  }
}

ExprPtr chain(Op op, const std::vector<ExprPtr>& parts) {
  bool unit = op == Op::And;
  std::vector<ExprPtr> keep;
  for (const ExprPtr& p : parts) {
    if (p->op == Op::BoolLit) {
      if ((p->value != 0) == unit) continue;
      return ex::bool_lit(!unit);
    }
    keep.push_back(p);
  }
  if (keep.empty()) return ex::bool_lit(unit);
  // Chains are compared as sets of operands.
  std::vector<std::pair<std::string, ExprPtr>> keyed;
  for (const ExprPtr& p : keep) keyed.emplace_back(to_string(*p), p);
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              keyed.end());
  keep.clear();
  for (auto& [k, p] : keyed) keep.push_back(p);
  ExprPtr acc = keep[0];
  for (std::size_t i = 1; i < keep.size(); ++i) acc = ex::binary(op, acc, keep[i]);
  return acc;
}

void flatten_into(Op op, const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (e->op == op) {
    for (const ExprPtr& a : e->args) flatten_into(op, a, out);
  } else {
    out.push_back(e);
  }
}

// Negation of a normalized formula, pushed into comparisons.
ExprPtr negated(const ExprPtr& n) {
  switch (n->op) {
    case Op::Not:
      return n->args[0];
    case Op::BoolLit:
      return ex::bool_lit(n->value == 0);
    case Op::Lt:
      return ex::binary(Op::Le, n->args[1], n->args[0]);
    case Op::Le:
      return ex::binary(Op::Lt, n->args[1], n->args[0]);
    case Op::Eq:
      return ex::binary(Op::Ne, n->args[0], n->args[1]);
    case Op::Ne:
      return ex::binary(Op::Eq, n->args[0], n->args[1]);
    case Op::Left:
    case Op::Right: {
      Op in = n->args[0]->op;
      if (in == Op::Lt || in == Op::Le || in == Op::Eq || in == Op::Ne)
        return ex::unary(n->op, negated(n->args[0]));
      break;
    }
    default:
      break;
  }
  return ex::unary(Op::Not, n);
}

// side: 0 outside any wrapper, 1 inside L, 2 inside R (after converse).
ExprPtr norm(const ExprPtr& e, bool conv, int side);

ExprPtr wrap(const ExprPtr& inner, bool left, bool conv) {
  bool l = left != conv;
  return norm(inner, false, l ? 1 : 2);
}

ExprPtr norm(const ExprPtr& e, bool conv, int side) {
  switch (e->op) {
    case Op::IntLit:
    case Op::BoolLit:
      return e;
    case Op::Var: {
      if (side == 0) return e;
      return side == 1 ? ex::left(e) : ex::right(e);
    }
    case Op::Left:
    case Op::Right:
      return wrap(e->args[0], e->op == Op::Left, conv);
    case Op::Agree:
      return norm(ex::eq(ex::left(e->args[0]), ex::right(e->args[0])), false, 0);
    case Op::AgreeAll: {
      std::vector<ExprPtr> parts;
      for (Var v : e->vars) parts.push_back(ex::eq(ex::left(ex::var(v)), ex::right(ex::var(v))));
      return norm(ex::conj_all(parts), false, 0);
    }
    case Op::Both:
      return norm(ex::conj(ex::left(e->args[0]), ex::right(e->args[0])), conv, side);
    case Op::Converse:
      return norm(e->args[0], !conv, side);
    case Op::Compose:
      return conv ? ex::binary(Op::Compose, norm(e->args[1], true, side), norm(e->args[0], true, side))
                  : ex::binary(Op::Compose, norm(e->args[0], false, side),
                               norm(e->args[1], false, side));
    case Op::And:
    case Op::Or: {
      std::vector<ExprPtr> flat;
      flatten_into(e->op, e, flat);
      std::vector<ExprPtr> parts;
      for (const ExprPtr& a : flat) flatten_into(e->op, norm(a, conv, side), parts);
      return chain(e->op, parts);
    }
    default:
      break;
  }
  // Inside a side wrapper, non-connective subterms become one sided atom.
  if (side != 0 && !connective(e->op)) {
    ExprPtr inner = norm(e, false, 0);
    return side == 1 ? ex::left(inner) : ex::right(inner);
  }
  std::vector<ExprPtr> args;
  for (const ExprPtr& a : e->args) args.push_back(norm(a, conv, side));
  Op op = e->op;
  if (op == Op::Gt || op == Op::Ge) {
    std::swap(args[0], args[1]);
    op = op == Op::Gt ? Op::Lt : Op::Le;
  }
  if ((op == Op::Eq || op == Op::Ne) && to_string(*args[1]) < to_string(*args[0]))
    std::swap(args[0], args[1]);
  if (op == Op::App) return ex::app(e->fn, std::move(args));
  if (op == Op::Not) return negated(args[0]);
  if (op != e->op) return ex::binary(op, args[0], args[1]);
  return rebuild(e, std::move(args));
}

}  // namespace

ExprPtr normalize(const ExprPtr& f) { return norm(f, false, 0); }

bool same_formula(const ExprPtr& a, const ExprPtr& b) { return same(normalize(a), normalize(b)); }

// ---------------------------------------------------------------------------
// Catalog

const std::vector<RuleInfo>& rule_catalog() {
  using S = Soundness;
  static const std::vector<RuleInfo> rules{
      {"Assign", 0, false, S::Basic, true},     {"Seq", 2, false, S::Basic, true},
      {"If", 2, false, S::Basic, true},         {"Choice", 2, false, S::Basic, true},
      {"While", 1, false, S::Basic, true},      {"Conseq", 1, false, S::Basic, true},
      {"Conj", 2, false, S::Basic, true},       {"Disj", 2, false, S::Basic, true},
      {"Frame", 1, false, S::Basic, true},      {"AuxVar", 1, false, S::Basic, true},
      {"ExistsPre", 1, false, S::Basic, true},  {"DAssign", 0, true, S::Basic, true},
      {"DSeq", 2, true, S::Basic, true},        {"DIf4", 4, true, S::Basic, true},
      {"AltAgree", 2, true, S::Basic, true},    {"IterAgree", 1, true, S::Basic, true},
      {"EagerWhile", 3, true, S::Basic, true},  {"While3", 3, true, S::Basic, true},
      {"LAssign", 0, true, S::Basic, true},     {"LSeq", 2, true, S::Basic, true},
      {"LIf", 2, true, S::Basic, true},         {"WhSeq", 2, true, S::Basic, true},
      {"SeqProd", 1, true, S::Basic, true},     {"Embed", 2, true, S::Basic, true},
      {"Erefl", 1, true, S::Basic, true},       {"Ecorr", 2, false, S::Termination, true},
      {"RelConseq", 1, true, S::Basic, true},   {"RelFrame", 1, true, S::Basic, true},
      {"Swap", 1, true, S::Basic, true},        {"Comp", 2, true, S::Termination, true},
      {"RelConj", 2, true, S::Basic, true},     {"RelDisj", 2, true, S::Basic, true},
      {"Rewrite", 1, true, S::Basic, true},    {"CmdFun", 3, false, S::Basic, true},
      // Leaf helpers for constructs and evidence the catalog leaves implicit.
      {"Skip", 0, false, S::Basic, false},      {"Havoc", 0, false, S::Basic, false},
      {"Local", 1, false, S::Basic, false},     {"Call", 0, false, S::Basic, false},
      {"False", 0, false, S::Basic, false},     {"RelSkip", 0, true, S::Basic, false},
      {"Explore", 0, false, S::Bounded, false}, {"ProductVC", 0, true, S::Bounded, false},
  };
  return rules;
}

const RuleInfo* find_rule(const std::string& name) {
  for (const RuleInfo& r : rule_catalog())
    if (r.name == name) return &r;
  return nullptr;
}

std::string to_string(Soundness s) {
  switch (s) {
    case Soundness::Basic: return "basic";
    case Soundness::Termination: return "basic-with-termination-assumption";
    case Soundness::Bounded: return "bounded";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Equivalence laws

std::string to_string(EquivLaw l) {
  switch (l) {
    case EquivLaw::SkipLeft: return "SkipLeft";
    case EquivLaw::SkipRight: return "SkipRight";
    case EquivLaw::LoopSplit: return "LoopSplit";
    case EquivLaw::LoopSeqSplit: return "LoopSeqSplit";
    case EquivLaw::LoopPeel: return "LoopPeel";
    case EquivLaw::VarRename: return "VarRename";
  }
  return "?";
}

std::optional<EquivLaw> parse_equiv_law(const std::string& s) {
  for (EquivLaw l : {EquivLaw::SkipLeft, EquivLaw::SkipRight, EquivLaw::LoopSplit,
                     EquivLaw::LoopSeqSplit, EquivLaw::LoopPeel, EquivLaw::VarRename})
    if (to_string(l) == s) return l;
  return std::nullopt;
}

namespace {

CommandPtr apply_law(const CommandPtr& c, const LawStep& st) {
  auto need = [&](bool ok, const std::string& what) {
    if (!ok)
      throw RewriteError(to_string(st.law) + (st.reverse ? " (reversed)" : "") + " expects " +
                         what + ", found `" + to_string(*c) + "`");
  };
  auto need_arg = [&]() {
    if (!st.arg) throw RewriteError(to_string(st.law) + " needs an (arg \"e0\")");
  };
  switch (st.law) {
    case EquivLaw::SkipLeft:
      if (st.reverse) return cmd::seq(cmd::skip(), c);
      need(c->kind == Cmd::Seq && c->first->kind == Cmd::Skip, "`skip; C`");
      return c->second;
    case EquivLaw::SkipRight:
      if (st.reverse) return cmd::seq(c, cmd::skip());
      need(c->kind == Cmd::Seq && c->second->kind == Cmd::Skip, "`C; skip`");
      return c->first;
    case EquivLaw::LoopSplit: {
      need_arg();
      if (!st.reverse) {
        need(c->kind == Cmd::While, "a loop");
        return cmd::while_(c->expr,
                           cmd::seq(c->first, cmd::while_(ex::conj(c->expr, st.arg), c->first)));
      }
      need(c->kind == Cmd::While && c->first->kind == Cmd::Seq &&
               c->first->second->kind == Cmd::While &&
               same(c->first->second->expr, ex::conj(c->expr, st.arg)) &&
               same(c->first->second->first, c->first->first),
           "`while e do C; while e /\\ e0 do C od od`");
      return cmd::while_(c->expr, c->first->first);
    }
    case EquivLaw::LoopSeqSplit: {
      need_arg();
      if (!st.reverse) {
        need(c->kind == Cmd::While, "a loop");
        return cmd::seq(cmd::while_(ex::conj(c->expr, st.arg), c->first), c);
      }
      need(c->kind == Cmd::Seq && c->first->kind == Cmd::While && c->second->kind == Cmd::While &&
               same(c->first->expr, ex::conj(c->second->expr, st.arg)) &&
               same(c->first->first, c->second->first),
           "`while e /\\ e0 do C od; while e do C od`");
      return c->second;
    }
    case EquivLaw::LoopPeel:
      if (!st.reverse) {
        need(c->kind == Cmd::While, "a loop");
        return cmd::seq(cmd::if_(c->expr, c->first, cmd::skip()), c);
      }
      need(c->kind == Cmd::Seq && c->first->kind == Cmd::If && c->second->kind == Cmd::While &&
               c->first->second->kind == Cmd::Skip && same(c->first->expr, c->second->expr) &&
               same(c->first->first, c->second->first),
           "`if e then C fi; while e do C od`");
      return c->second;
    case EquivLaw::VarRename: {
      need(c->kind == Cmd::VarBlock, "a variable block");
      if (!st.from.valid() || !st.to.valid())
        throw RewriteError("VarRename needs (from x) and (to x')");
      auto it = std::find(c->vars.begin(), c->vars.end(), st.from);
      need(it != c->vars.end(), "a block declaring `" + st.from.name() + "`");
      VarSet used = all_vars(*c->first);
      if (used.count(st.to) || std::find(c->vars.begin(), c->vars.end(), st.to) != c->vars.end())
        throw RewriteError("VarRename target `" + st.to.name() + "` is not fresh");
      std::vector<Var> locals = c->vars;
      *std::find(locals.begin(), locals.end(), st.from) = st.to;
      return cmd::var_block(locals, rename_var(c->first, st.from, st.to));
    }
  }
  return c;
}

CommandPtr at_path(const CommandPtr& c, const LawStep& st, std::size_t k) {
  if (k == st.at.size()) return apply_law(c, st);
  int i = st.at[k];
  auto bad = [&]() -> CommandPtr {
    throw RewriteError("no child " + std::to_string(i) + " in `" + to_string(*c) + "`");
  };
  switch (c->kind) {
    case Cmd::Seq:
    case Cmd::Choice: {
      if (i != 0 && i != 1) return bad();
      CommandPtr a = i == 0 ? at_path(c->first, st, k + 1) : c->first;
      CommandPtr b = i == 1 ? at_path(c->second, st, k + 1) : c->second;
      return c->kind == Cmd::Seq ? cmd::seq(a, b) : cmd::choice(a, b);
    }
    case Cmd::If: {
      if (i != 0 && i != 1) return bad();
      CommandPtr a = i == 0 ? at_path(c->first, st, k + 1) : c->first;
      CommandPtr b = i == 1 ? at_path(c->second, st, k + 1) : c->second;
      return cmd::if_(c->expr, a, b);
    }
    case Cmd::While:
      if (i != 0) return bad();
      return cmd::while_(c->expr, at_path(c->first, st, k + 1));
    case Cmd::VarBlock:
      if (i != 0) return bad();
      return cmd::var_block(c->vars, at_path(c->first, st, k + 1));
    default:
      return bad();
  }
}

}  // namespace

CommandPtr rewrite_uequiv(const CommandPtr& c, const LawStep& step) { return at_path(c, step, 0); }

namespace {

using StoreTrace = std::vector<std::vector<Value>>;

// `c` is prepared.
std::set<StoreTrace> visible_traces(const CommandPtr& c, const Store& s,
                                    const std::vector<Var>& visible, int fuel, const Limits& lim) {
  std::set<StoreTrace> out;
  for (const Outcome& o : run_bounded(c, s, fuel, lim)) {
    StoreTrace t;
    for (const Config& cfg : o.trace) {
      std::vector<Value> row;
      for (Var v : visible) row.push_back(cfg.store.get(v));
      if (t.empty() || t.back() != row) t.push_back(std::move(row));
    }
    // A cut-off run is compared as a prefix only; mark it.
    if (o.kind == OutcomeKind::Cutoff) t.push_back({});
    out.insert(std::move(t));
  }
  return out;
}

}  // namespace

bool trace_equivalent(const CommandPtr& a0, const CommandPtr& b0, const Domain& d, int fuel) {
  // Hidden block names are drawn afresh by each prepare.
  CommandPtr a = prepare(a0), b = prepare(b0);
  VarSet va = all_vars(*a), vb = all_vars(*b);
  VarSet all = va;
  all.insert(vb.begin(), vb.end());
  std::vector<Var> visible;
  for (Var v : all)
    if (!is_hidden(v)) visible.push_back(v);
  UniversePtr u = make_universe(all);
  std::vector<Store> inits;
  {
    Store s(u);
    std::vector<Value> vals(visible.size());
    for (std::size_t i = 0; i < visible.size(); ++i) vals[i] = d.of(visible[i]).lo;
    for (;;) {
      for (std::size_t i = 0; i < visible.size(); ++i) s.set(visible[i], vals[i]);
      inits.push_back(s);
      std::size_t k = 0;
      while (k < visible.size() && vals[k] == d.of(visible[k]).hi) {
        vals[k] = d.of(visible[k]).lo;
        ++k;
      }
      if (k == visible.size()) break;
      ++vals[k];
    }
  }
  for (const Store& s : inits) {
    std::set<StoreTrace> ta = visible_traces(a, s, visible, fuel, d.limits);
    std::set<StoreTrace> tb = visible_traces(b, s, visible, fuel, d.limits);
    // Different step counts cut runs at different places; with a cut-off
    // run, every trace must be prefix-compatible with one of the other side.
    bool any_cut = false;
    for (const auto* ts : {&ta, &tb})
      for (const StoreTrace& t : *ts) any_cut |= !t.empty() && t.back().empty();
    if (!any_cut) {
      if (ta != tb) return false;
      continue;
    }
    auto prefix_of_some = [](const StoreTrace& t, const std::set<StoreTrace>& others) {
      StoreTrace core(t.begin(), t.end() - (!t.empty() && t.back().empty() ? 1 : 0));
      for (const StoreTrace& o : others) {
        StoreTrace oc(o.begin(), o.end() - (!o.empty() && o.back().empty() ? 1 : 0));
        std::size_t n = std::min(core.size(), oc.size());
        if (std::equal(core.begin(), core.begin() + n, oc.begin())) return true;
      }
      return false;
    };
    for (const StoreTrace& t : ta)
      if (!prefix_of_some(t, tb)) return false;
    for (const StoreTrace& t : tb)
      if (!prefix_of_some(t, ta)) return false;
  }
  return true;
}

}  // namespace relv

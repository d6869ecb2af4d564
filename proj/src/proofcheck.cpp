#include "relv/proofcheck.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <set>

#include "relv/product.hpp"
#include "relv/vars.hpp"

namespace relv {

std::string ProofResult::verdict() const {
  if (!ok) return "error";
  return assumptions.empty() ? "proved" : "proved-modulo-assumptions";
}

namespace {

// A rule instance that does not check; carries no path, the caller adds it.
struct Fail {
  std::string reason;
};

[[noreturn]] void fail(std::string reason) { throw Fail{std::move(reason)}; }

struct NodeFail {
  std::string path;
  std::string rule;
  std::string reason;
};

struct Ctx {
  Domain d;
  std::string fn;  // symbol of the linked callee; empty outside CmdFun premise (iv)
  std::optional<Link> link;
  int adequacy_fuel = 100;
};

std::string q(const Expr& e) { return "`" + to_string(e) + "`"; }
std::string q(const Command& c) { return "`" + to_string(c) + "`"; }

// Sequences in right-associated form, so grouping never matters.
CommandPtr canon(const CommandPtr& c) {
  switch (c->kind) {
    case Cmd::Seq: {
      std::vector<CommandPtr> parts;
      std::function<void(const CommandPtr&)> flat = [&](const CommandPtr& x) {
        if (x->kind == Cmd::Seq) {
          flat(x->first);
          flat(x->second);
        } else {
          parts.push_back(canon(x));
        }
      };
      flat(c);
      CommandPtr acc = parts.back();
      for (std::size_t i = parts.size() - 1; i-- > 0;) acc = cmd::seq(parts[i], acc);
      return acc;
    }
    case Cmd::If:
      return cmd::if_(c->expr, canon(c->first), canon(c->second));
    case Cmd::While:
      return cmd::while_(c->expr, canon(c->first));
    case Cmd::Choice:
      return cmd::choice(canon(c->first), canon(c->second));
    case Cmd::VarBlock:
      return cmd::var_block(c->vars, canon(c->first));
    default:
      return c;
  }
}

bool same_cmd(const CommandPtr& a, const CommandPtr& b) { return same(canon(a), canon(b)); }

void match_cmd(const CommandPtr& got, const CommandPtr& want, const std::string& what) {
  if (!same_cmd(got, want))
    fail(what + ": expected " + q(*want) + ", found " + q(*got));
}

void match(const ExprPtr& got, const ExprPtr& want, const std::string& what) {
  if (!same_formula(got, want))
    fail(what + ": expected " + q(*want) + ", found " + q(*got));
}

// Every variable of c, block locals included.
void every_var(const Command& c, VarSet& out) {
  VarSet a = all_vars(c);
  out.insert(a.begin(), a.end());
  out.insert(c.vars.begin(), c.vars.end());
  if (c.target.valid()) out.insert(c.target);
  if (c.first) every_var(*c.first, out);
  if (c.second) every_var(*c.second, out);
}

VarSet every_var(const Command& c) {
  VarSet out;
  every_var(c, out);
  return out;
}

VarSet fv(std::initializer_list<ExprPtr> es) {
  VarSet out;
  for (const ExprPtr& e : es) {
    VarSet v = free_vars(*e);
    out.insert(v.begin(), v.end());
  }
  return out;
}

std::string names(const VarSet& vs) {
  std::string out;
  for (Var v : vs) out += (out.empty() ? "" : ", ") + v.name();
  return out;
}

VarSet meet(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

ExprPtr iff(const ExprPtr& a, const ExprPtr& b) {
  return ex::conj(ex::implies(a, b), ex::implies(b, a));
}

ExprPtr agree_on(const VarSet& vs) { return ex::agree_all(std::vector<Var>(vs.begin(), vs.end())); }

ExprPtr expand_exists(const ExprPtr& p, const std::vector<Var>& xs, const Domain& d) {
  ExprPtr acc = p;
  for (Var x : xs) {
    Interval iv = d.of(x);
    std::vector<ExprPtr> parts;
    for (Value v = iv.lo; v <= iv.hi; ++v) parts.push_back(subst_unary(acc, x, ex::int_lit(v)));
    acc = ex::disj_all(parts);
  }
  return acc;
}

ExprPtr upre(const Judgment& j, const Domain& d) {
  return j.exists.empty() ? j.pre : expand_exists(j.pre, j.exists, d);
}

std::string cex(const Verdict& v) {
  std::string out;
  if (v.left) out += " at " + to_string(*v.left);
  if (v.right) out += (v.left ? " | " : " at ") + to_string(*v.right);
  if (!v.reason.empty()) out += " (" + v.reason + ")";
  return out;
}

void entail(const ExprPtr& p, const ExprPtr& q2, const Ctx& ctx, const std::string& what) {
  Verdict v = check_entailment(p, q2, ctx.d);
  if (!v.valid())
    fail(what + " " + q(*p) + " => " + q(*q2) + " is not valid: " + to_string(v.kind) + cex(v));
}

void rel_entail(const ExprPtr& p, const ExprPtr& q2, const Ctx& ctx, const std::string& what) {
  Verdict v = check_rel_entailment(p, q2, ctx.d);
  if (!v.valid())
    fail(what + " " + q(*p) + " => " + q(*q2) + " is not valid: " + to_string(v.kind) + cex(v));
}

// Domain with hidden variables pinned to their block-entry value.
Domain pin_hidden(const Domain& d, const VarSet& vs) {
  Domain out = d;
  for (Var v : vs)
    if (is_hidden(v)) out.overrides[v] = {0, 0};
  return out;
}

// ---------------------------------------------------------------------------
// Side entries

struct Side {
  const Derivation& n;

  const SExpr* find(std::string_view key) const {
    for (const SExpr& s : n.side)
      if (s.is_form(key)) return &s;
    return nullptr;
  }
  bool has(std::string_view key) const { return find(key) != nullptr; }

  const SExpr& need(std::string_view key) const {
    const SExpr* s = find(key);
    if (!s) fail("missing side entry (" + std::string(key) + " ...)");
    return *s;
  }

  std::string text(std::string_view key) const {
    const SExpr& s = need(key);
    if (s.items.size() != 2 || s.items[1].kind != SExpr::Kind::String)
      fail("side entry (" + std::string(key) + " \"...\") expects one string");
    return s.items[1].text;
  }

  std::string atom(std::string_view key) const {
    const SExpr& s = need(key);
    if (s.items.size() != 2 || s.items[1].kind != SExpr::Kind::Atom)
      fail("side entry (" + std::string(key) + " name) expects one name");
    return s.items[1].text;
  }

  std::string path(const std::string& rel) const {
    std::filesystem::path p(rel);
    return p.is_absolute() ? rel : (std::filesystem::path(n.base_dir) / p).string();
  }

  std::string file(std::string_view key) const { return read_file(path(text(key))); }

  std::vector<Var> vars(std::string_view key) const {
    const SExpr& s = need(key);
    std::vector<Var> out;
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      if (s.items[i].kind != SExpr::Kind::Atom) fail("expected variable names in (" + std::string(key) + " ...)");
      out.push_back(Var(s.items[i].text));
    }
    return out;
  }
};

long parse_count(const SExpr& s) {
  if (s.items.size() != 2 || s.items[1].kind != SExpr::Kind::Atom)
    fail("side entry " + to_string(s) + " expects a number");
  try {
    std::size_t used = 0;
    long v = std::stol(s.items[1].text, &used);
    if (used != s.items[1].text.size() || v <= 0) throw std::invalid_argument("");
    return v;
  } catch (const std::logic_error&) {
    fail("side entry " + to_string(s) + " expects a positive number");
  }
}

const std::set<std::string>& common_side_keys() {
  static const std::set<std::string> keys{"domain", "range", "bounds", "fuel", "budget",
                                          "adequacy-fuel"};
  return keys;
}

const std::map<std::string, std::set<std::string>>& rule_side_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"Frame", {"frame"}},
      {"RelFrame", {"frame"}},
      {"While3", {"l", "r"}},
      {"Local", {"fresh"}},
      {"CmdFun", {"function"}},
      {"ProductVC", {"product", "ranno", "align", "cut-branches"}},
      {"Rewrite", {"law"}},
  };
  return keys;
}

Ctx scoped(const Derivation& n, const Ctx& outer) {
  Ctx c = outer;
  auto allowed = rule_side_keys().find(n.rule);
  for (const SExpr& s : n.side) {
    std::string head = s.kind == SExpr::Kind::List && !s.items.empty() ? s.items[0].text : "";
    bool ok = common_side_keys().count(head) ||
              (allowed != rule_side_keys().end() && allowed->second.count(head));
    if (!ok) fail("unexpected side entry " + to_string(s) + " for rule " + n.rule);
  }
  Side side{n};
  if (side.has("domain")) c.d.set_input(parse_interval(side.text("domain")));
  for (const SExpr& s : n.side)
    if (s.is_form("range")) {
      if (s.items.size() != 3 || s.items[1].kind != SExpr::Kind::Atom ||
          s.items[2].kind != SExpr::Kind::String)
        fail("side entry (range x \"lo..hi\") is malformed");
      c.d.overrides[Var(s.items[1].text)] = parse_interval(s.items[2].text);
    }
  if (side.has("bounds")) {
    Interval b = parse_interval(side.text("bounds"));
    c.d.limits.lo = b.lo;
    c.d.limits.hi = b.hi;
  }
  if (const SExpr* s = side.find("fuel")) c.d.fuel = static_cast<int>(parse_count(*s));
  if (const SExpr* s = side.find("budget")) c.d.budget = static_cast<std::uint64_t>(parse_count(*s));
  if (const SExpr* s = side.find("adequacy-fuel")) c.adequacy_fuel = static_cast<int>(parse_count(*s));
  return c;
}

// ---------------------------------------------------------------------------
// Semantic helpers

CommandPtr linked_command(const Judgment& j) {
  if (!j.link) return j.left;
  return inline_calls(j.left, Callee{j.link->params, j.link->result, j.link->callee});
}

// Every store of the domain over the prepared command's variables (plus
// `extra`) satisfying `pre` has a terminated run and no run is cut off.
void require_termination(const CommandPtr& c, const ExprPtr& pre, const VarSet& extra,
                         const Ctx& ctx, const std::string& who) {
  CommandPtr p = prepare(c);
  VarSet vs = all_vars(*p);
  vs.insert(extra.begin(), extra.end());
  Domain d = pin_hidden(ctx.d, vs);
  for (const Store& s : input_stores(make_universe(vs), d)) {
    if (pre && !eval_unary(*pre, s, d)) continue;
    FinalStores fs = final_stores(p, s, d.fuel, d.limits);
    if (fs.cutoff)
      fail("termination assumption for " + who + " " + q(*c) + " fails: a run from " +
           to_string(s) + " is cut off within fuel " + std::to_string(d.fuel));
    if (fs.finals.empty())
      fail("termination assumption for " + who + " " + q(*c) + " fails: no terminated run from " +
           to_string(s));
  }
}

// ---------------------------------------------------------------------------
// The checker

class Checker {
 public:
  ProofResult result;

  void node(const Derivation& n, const std::string& path, const Ctx& outer) {
    ++result.nodes;
    rules_.insert(n.rule);
    try {
      const RuleInfo* info = find_rule(n.rule);
      if (!info) fail("unknown rule `" + n.rule + "`");
      if (static_cast<int>(n.premises.size()) != info->arity)
        fail("rule " + n.rule + " takes " + std::to_string(info->arity) + " premise(s), found " +
             std::to_string(n.premises.size()));
      Ctx ctx = scoped(n, outer);
      path_ = path;
      dispatch(n, ctx, path);
    } catch (const NodeFail&) {
      throw;
    } catch (const Fail& f) {
      throw NodeFail{path, n.rule, f.reason};
    } catch (const std::exception& e) {
      throw NodeFail{path, n.rule, e.what()};
    }
  }

  std::vector<std::string> rules_used() const { return {rules_.begin(), rules_.end()}; }

 private:
  std::set<std::string> rules_;
  std::string path_;

  void assume(const std::string& a) {
    if (std::find(result.assumptions.begin(), result.assumptions.end(), a) ==
        result.assumptions.end())
      result.assumptions.push_back(a);
  }

  void premises(const Derivation& n, const Ctx& ctx, const std::string& path) {
    for (std::size_t i = 0; i < n.premises.size(); ++i) premise(n, i, ctx, path);
  }
  void premise(const Derivation& n, std::size_t i, const Ctx& ctx, const std::string& path) {
    node(n.premises[i], path + "/" + std::to_string(i), ctx);
  }

  static const Judgment& P(const Derivation& n, std::size_t i) { return n.premises[i].conclusion; }

  static void unary(const Judgment& j, const std::string& what, bool allow_exists = false) {
    if (j.relational) fail(what + " must be a unary judgment");
    if (j.link) fail(what + " must not be a linked judgment");
    if (!allow_exists && !j.exists.empty())
      fail(what + " has an existential precondition; use ExistsPre");
  }
  static void relational(const Judgment& j, const std::string& what) {
    if (!j.relational) fail(what + " must be a relational judgment");
  }
  static void kind_of(const Judgment& j, Cmd k, const std::string& what) {
    if (j.left->kind != k) fail(what + " has the wrong command form: " + q(*j.left));
  }

  void dispatch(const Derivation& n, const Ctx& ctx, const std::string& path) {
    static const std::map<std::string, void (Checker::*)(const Derivation&, const Ctx&,
                                                         const std::string&)>
        table{
            {"Assign", &Checker::assign},       {"Seq", &Checker::seq},
            {"If", &Checker::if_},              {"Choice", &Checker::choice},
            {"While", &Checker::while_},        {"Conseq", &Checker::conseq},
            {"Conj", &Checker::conj},           {"Disj", &Checker::disj},
            {"Frame", &Checker::frame},         {"AuxVar", &Checker::auxvar},
            {"ExistsPre", &Checker::exists_pre}, {"DAssign", &Checker::dassign},
            {"DSeq", &Checker::dseq},           {"DIf4", &Checker::dif4},
            {"AltAgree", &Checker::alt_agree},  {"IterAgree", &Checker::iter_agree},
            {"EagerWhile", &Checker::eager_while}, {"While3", &Checker::while3},
            {"LAssign", &Checker::lassign},     {"LSeq", &Checker::lseq},
            {"LIf", &Checker::lif},             {"WhSeq", &Checker::whseq},
            {"SeqProd", &Checker::seqprod},     {"Embed", &Checker::embed_rule},
            {"Erefl", &Checker::erefl},         {"Ecorr", &Checker::ecorr},
            {"RelConseq", &Checker::rel_conseq}, {"RelFrame", &Checker::rel_frame},
            {"Swap", &Checker::swap},           {"Comp", &Checker::comp},
            {"RelConj", &Checker::rel_conj},    {"RelDisj", &Checker::rel_disj},
            {"Rewrite", &Checker::rewrite},     {"CmdFun", &Checker::cmdfun},
            {"Skip", &Checker::skip},           {"Havoc", &Checker::havoc},
            {"Local", &Checker::local},         {"Call", &Checker::call},
            {"False", &Checker::false_},        {"RelSkip", &Checker::rel_skip},
            {"Explore", &Checker::explore},     {"ProductVC", &Checker::product_vc},
        };
    (this->*table.at(n.rule))(n, ctx, path);
  }

  // --- unary, syntax directed ----------------------------------------------

  void assign(const Derivation& n, const Ctx&, const std::string&) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    kind_of(j, Cmd::Assign, "conclusion");
    match(j.pre, subst_unary(j.post, j.left->target, j.left->expr), "precondition");
  }

  void skip(const Derivation& n, const Ctx&, const std::string&) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    kind_of(j, Cmd::Skip, "conclusion");
    match(j.pre, j.post, "precondition");
  }

  void havoc(const Derivation& n, const Ctx& ctx, const std::string&) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    kind_of(j, Cmd::Havoc, "conclusion");
    std::vector<ExprPtr> parts;
    for (Value v = ctx.d.limits.havoc_lo; v <= ctx.d.limits.havoc_hi; ++v)
      parts.push_back(subst_unary(j.post, j.left->target, ex::int_lit(v)));
    entail(j.pre, ex::conj_all(parts), ctx, "havoc side condition");
  }

  void seq(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    unary(P(n, 1), "premise 1");
    kind_of(j, Cmd::Seq, "conclusion");
    match_cmd(cmd::seq(P(n, 0).left, P(n, 1).left), j.left, "sequence of the premise commands");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 1).pre, P(n, 0).post, "premise 1 precondition");
    match(P(n, 1).post, j.post, "premise 1 postcondition");
    premises(n, ctx, path);
  }

  void if_(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    unary(P(n, 1), "premise 1");
    kind_of(j, Cmd::If, "conclusion");
    const ExprPtr& e = j.left->expr;
    match_cmd(P(n, 0).left, j.left->first, "premise 0 command");
    match_cmd(P(n, 1).left, j.left->second, "premise 1 command");
    match(P(n, 0).pre, ex::conj(j.pre, e), "premise 0 precondition");
    match(P(n, 1).pre, ex::conj(j.pre, ex::negate(e)), "premise 1 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    match(P(n, 1).post, j.post, "premise 1 postcondition");
    premises(n, ctx, path);
  }

  void choice(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    unary(P(n, 1), "premise 1");
    kind_of(j, Cmd::Choice, "conclusion");
    match_cmd(P(n, 0).left, j.left->first, "premise 0 command");
    match_cmd(P(n, 1).left, j.left->second, "premise 1 command");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 1).pre, j.pre, "premise 1 precondition");
    match(j.post, ex::disj(P(n, 0).post, P(n, 1).post), "postcondition");
    premises(n, ctx, path);
  }

  void while_(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    kind_of(j, Cmd::While, "conclusion");
    const ExprPtr& b = j.left->expr;
    match(j.post, ex::conj(j.pre, ex::negate(b)), "postcondition");
    match_cmd(P(n, 0).left, j.left->first, "premise 0 command");
    match(P(n, 0).pre, ex::conj(j.pre, b), "premise 0 precondition");
    match(P(n, 0).post, j.pre, "premise 0 postcondition");
    premises(n, ctx, path);
  }

  void local(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    kind_of(j, Cmd::VarBlock, "conclusion");
    std::vector<Var> ts = Side{n}.vars("fresh");
    const std::vector<Var>& xs = j.left->vars;
    if (ts.size() != xs.size())
      fail("(fresh ...) names " + std::to_string(ts.size()) + " variable(s), the block declares " +
           std::to_string(xs.size()));
    VarSet taken = every_var(*j.left->first);
    VarSet specv = fv({j.pre, j.post});
    taken.insert(specv.begin(), specv.end());
    taken.insert(xs.begin(), xs.end());
    CommandPtr body = j.left->first;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (taken.count(ts[i]) || is_hidden(ts[i]))
        fail("fresh variable `" + ts[i].name() + "` is not fresh");
      taken.insert(ts[i]);
      body = rename_var(body, xs[i], ts[i]);
    }
    for (std::size_t i = ts.size(); i-- > 0;) body = cmd::seq(cmd::assign(ts[i], ex::int_lit(0)), body);
    match_cmd(P(n, 0).left, body, "premise 0 command");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    premises(n, ctx, path);
  }

  void call(const Derivation& n, const Ctx& ctx, const std::string&) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    kind_of(j, Cmd::CallSite, "conclusion");
    if (ctx.fn.empty() || !ctx.link) fail("call outside the client premise of CmdFun");
    if (j.left->vars.size() != ctx.link->params.size())
      fail("call passes " + std::to_string(j.left->vars.size()) + " argument(s), the callee takes " +
           std::to_string(ctx.link->params.size()));
    std::vector<ExprPtr> args;
    for (Var a : j.left->vars) args.push_back(ex::var(a));
    entail(j.pre, subst_unary(j.post, j.left->target, ex::app(ctx.fn, args)), ctx,
           "call side condition");
  }

  // --- unary, spec manipulation ----------------------------------------------

  void conseq(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion", true);
    unary(P(n, 0), "premise 0", true);
    match_cmd(P(n, 0).left, j.left, "premise 0 command");
    entail(upre(j, ctx.d), upre(P(n, 0), ctx.d), ctx, "precondition entailment");
    entail(P(n, 0).post, j.post, ctx, "postcondition entailment");
    premises(n, ctx, path);
  }

  void conj(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    for (int i : {0, 1}) {
      unary(P(n, i), "premise " + std::to_string(i));
      match_cmd(P(n, i).left, j.left, "premise " + std::to_string(i) + " command");
      match(P(n, i).pre, j.pre, "premise " + std::to_string(i) + " precondition");
    }
    match(j.post, ex::conj(P(n, 0).post, P(n, 1).post), "postcondition");
    premises(n, ctx, path);
  }

  void disj(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    for (int i : {0, 1}) {
      unary(P(n, i), "premise " + std::to_string(i));
      match_cmd(P(n, i).left, j.left, "premise " + std::to_string(i) + " command");
      match(P(n, i).post, j.post, "premise " + std::to_string(i) + " postcondition");
    }
    match(j.pre, ex::disj(P(n, 0).pre, P(n, 1).pre), "precondition");
    premises(n, ctx, path);
  }

  void frame(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    ExprPtr r = parse_formula(Side{n}.text("frame"));
    match_cmd(P(n, 0).left, j.left, "premise 0 command");
    match(j.pre, ex::conj(P(n, 0).pre, r), "precondition");
    match(j.post, ex::conj(P(n, 0).post, r), "postcondition");
    VarSet clash = meet(free_vars(*r), every_var(*j.left));
    if (!clash.empty()) fail("frame " + q(*r) + " mentions variables of the command: " + names(clash));
    premises(n, ctx, path);
  }

  void auxvar(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    const CommandPtr& blk = P(n, 0).left;
    if (blk->kind != Cmd::VarBlock) fail("premise 0 command must be a block `var x.. in C ni`");
    VarSet xs(blk->vars.begin(), blk->vars.end());
    VarSet clash = meet(xs, fv({j.pre, j.post}));
    if (!clash.empty()) fail("auxiliary variables occur in the spec: " + names(clash));
    if (!is_auxiliary(xs, *blk->first)) fail("variables " + names(xs) + " are not auxiliary in the block");
    std::function<void(const Command&)> no_stick = [&](const Command& c) {
      if (c.kind == Cmd::Assign && xs.count(c.target) &&
          can_stick(c.expr, ctx.d.limits.lo, ctx.d.limits.hi))
        fail("auxiliary assignment `" + to_string(c) + "` can get stuck");
      if (c.first) no_stick(*c.first);
      if (c.second) no_stick(*c.second);
    };
    no_stick(*blk->first);
    match_cmd(j.left, erase_aux(xs, blk->first), "conclusion command (the block body with auxiliary assignments erased)");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    premises(n, ctx, path);
  }

  void exists_pre(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion", true);
    unary(P(n, 0), "premise 0");
    if (j.exists.empty()) fail("conclusion precondition must be `(exists (x..) P)`");
    match_cmd(P(n, 0).left, j.left, "premise 0 command");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    VarSet xs(j.exists.begin(), j.exists.end());
    VarSet c1 = meet(xs, free_vars(*j.post));
    if (!c1.empty()) fail("bound variables occur in the postcondition: " + names(c1));
    VarSet c2 = meet(xs, every_var(*j.left));
    if (!c2.empty()) fail("bound variables occur in the command: " + names(c2));
    premises(n, ctx, path);
  }

  void false_(const Derivation& n, const Ctx&, const std::string&) {
    const Judgment& j = n.conclusion;
    if (!j.relational) unary(j, "conclusion");
    if (!is_false_lit(*normalize(j.pre))) fail("precondition " + q(*j.pre) + " is not `false`");
  }

  void explore(const Derivation& n, const Ctx& ctx, const std::string&) {
    SemanticResult r = check_judgment_semantically(n.conclusion, ctx.d);
    if (r.cutoff) fail("bounded exploration cut off within fuel " + std::to_string(ctx.d.fuel));
    if (!r.holds) fail("bounded exploration refutes the judgment: " + r.reason);
  }

  // --- relational, syntax directed -------------------------------------------

  static void both(const Judgment& j, Cmd k, Cmd k2, const std::string& what) {
    relational(j, what);
    if (j.left->kind != k) fail(what + " left command has the wrong form: " + q(*j.left));
    if (j.right->kind != k2) fail(what + " right command has the wrong form: " + q(*j.right));
  }

  static void commands(const Judgment& p, const CommandPtr& l, const CommandPtr& r,
                       const std::string& what) {
    relational(p, what);
    match_cmd(p.left, l, what + " left command");
    match_cmd(p.right, r, what + " right command");
  }

  void rel_skip(const Derivation& n, const Ctx&, const std::string&) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::Skip, Cmd::Skip, "conclusion");
    match(j.pre, j.post, "precondition");
  }

  void dassign(const Derivation& n, const Ctx&, const std::string&) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::Assign, Cmd::Assign, "conclusion");
    match(j.pre, subst_rel(j.post, j.left->target, j.left->expr, j.right->target, j.right->expr),
          "precondition");
  }

  void lassign(const Derivation& n, const Ctx&, const std::string&) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::Assign, Cmd::Skip, "conclusion");
    match(j.pre, subst_rel(j.post, Subst{{j.left->target, j.left->expr}}, Subst{}),
          "precondition");
  }

  void dseq(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    relational(P(n, 0), "premise 0");
    relational(P(n, 1), "premise 1");
    match_cmd(cmd::seq(P(n, 0).left, P(n, 1).left), j.left, "left sequence of the premise commands");
    match_cmd(cmd::seq(P(n, 0).right, P(n, 1).right), j.right,
              "right sequence of the premise commands");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 1).pre, P(n, 0).post, "premise 1 precondition");
    match(P(n, 1).post, j.post, "premise 1 postcondition");
    premises(n, ctx, path);
  }

  void lseq(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    relational(P(n, 0), "premise 0");
    relational(P(n, 1), "premise 1");
    if (P(n, 0).right->kind != Cmd::Skip) fail("premise 0 right command must be `skip`");
    match_cmd(cmd::seq(P(n, 0).left, P(n, 1).left), j.left, "left sequence of the premise commands");
    match_cmd(P(n, 1).right, j.right, "premise 1 right command");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 1).pre, P(n, 0).post, "premise 1 precondition");
    match(P(n, 1).post, j.post, "premise 1 postcondition");
    premises(n, ctx, path);
  }

  void dif4(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::If, Cmd::If, "conclusion");
    const ExprPtr& e = j.left->expr;
    const ExprPtr& e2 = j.right->expr;
    ExprPtr le = ex::left(e), nle = ex::left(ex::negate(e));
    ExprPtr re = ex::right(e2), nre = ex::right(ex::negate(e2));
    struct Case {
      CommandPtr l, r;
      ExprPtr gl, gr;
    };
    const Case cases[4] = {{j.left->first, j.right->first, le, re},
                           {j.left->second, j.right->second, nle, nre},
                           {j.left->first, j.right->second, le, nre},
                           {j.left->second, j.right->first, nle, re}};
    for (int i = 0; i < 4; ++i) {
      std::string w = "premise " + std::to_string(i);
      commands(P(n, i), cases[i].l, cases[i].r, w);
      match(P(n, i).pre, ex::conj(ex::conj(j.pre, cases[i].gl), cases[i].gr), w + " precondition");
      match(P(n, i).post, j.post, w + " postcondition");
    }
    premises(n, ctx, path);
  }

  void alt_agree(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::If, Cmd::If, "conclusion");
    const ExprPtr& e = j.left->expr;
    const ExprPtr& e2 = j.right->expr;
    commands(P(n, 0), j.left->first, j.right->first, "premise 0");
    commands(P(n, 1), j.left->second, j.right->second, "premise 1");
    match(P(n, 0).pre, ex::conj(ex::conj(j.pre, ex::left(e)), ex::right(e2)), "premise 0 precondition");
    match(P(n, 1).pre,
          ex::conj(ex::conj(j.pre, ex::left(ex::negate(e))), ex::right(ex::negate(e2))),
          "premise 1 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    match(P(n, 1).post, j.post, "premise 1 postcondition");
    rel_entail(j.pre, iff(ex::left(e), ex::right(e2)), ctx, "guard agreement");
    premises(n, ctx, path);
  }

  void lif(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    if (j.left->kind != Cmd::If) fail("conclusion left command must be a conditional");
    const ExprPtr& e = j.left->expr;
    commands(P(n, 0), j.left->first, j.right, "premise 0");
    commands(P(n, 1), j.left->second, j.right, "premise 1");
    match(P(n, 0).pre, ex::conj(j.pre, ex::left(e)), "premise 0 precondition");
    match(P(n, 1).pre, ex::conj(j.pre, ex::left(ex::negate(e))), "premise 1 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    match(P(n, 1).post, j.post, "premise 1 postcondition");
    premises(n, ctx, path);
  }

  ExprPtr loop_exit(const Judgment& j) {
    return ex::conj(ex::conj(j.pre, ex::left(ex::negate(j.left->expr))),
                    ex::right(ex::negate(j.right->expr)));
  }

  void iter_agree(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::While, Cmd::While, "conclusion");
    const ExprPtr& e = j.left->expr;
    const ExprPtr& e2 = j.right->expr;
    match(j.post, loop_exit(j), "postcondition");
    commands(P(n, 0), j.left->first, j.right->first, "premise 0");
    match(P(n, 0).pre, ex::conj(ex::conj(j.pre, ex::left(e)), ex::right(e2)), "premise 0 precondition");
    match(P(n, 0).post, j.pre, "premise 0 postcondition");
    rel_entail(j.pre, iff(ex::left(e), ex::right(e2)), ctx, "guard agreement");
    premises(n, ctx, path);
  }

  void eager_while(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::While, Cmd::While, "conclusion");
    const ExprPtr& e = j.left->expr;
    const ExprPtr& e2 = j.right->expr;
    match(j.post, loop_exit(j), "postcondition");
    commands(P(n, 0), j.left->first, j.right->first, "premise 0");
    commands(P(n, 1), j.left->first, cmd::skip(), "premise 1");
    commands(P(n, 2), cmd::skip(), j.right->first, "premise 2");
    match(P(n, 0).pre, ex::conj(ex::conj(j.pre, ex::left(e)), ex::right(e2)), "premise 0 precondition");
    match(P(n, 1).pre, ex::conj(ex::conj(j.pre, ex::left(e)), ex::right(ex::negate(e2))),
          "premise 1 precondition");
    match(P(n, 2).pre, ex::conj(ex::conj(j.pre, ex::left(ex::negate(e))), ex::right(e2)),
          "premise 2 precondition");
    for (int i : {0, 1, 2})
      match(P(n, i).post, j.pre, "premise " + std::to_string(i) + " postcondition");
    premises(n, ctx, path);
  }

  void while3(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    both(j, Cmd::While, Cmd::While, "conclusion");
    Side side{n};
    ExprPtr lr = parse_rel_formula(side.text("l"));
    ExprPtr rr = parse_rel_formula(side.text("r"));
    const ExprPtr& e = j.left->expr;
    const ExprPtr& e2 = j.right->expr;
    ExprPtr le = ex::left(e), re = ex::right(e2);
    match(j.post, loop_exit(j), "postcondition");
    commands(P(n, 0), j.left->first, j.right->first, "premise 0");
    commands(P(n, 1), j.left->first, cmd::skip(), "premise 1");
    commands(P(n, 2), cmd::skip(), j.right->first, "premise 2");
    match(P(n, 0).pre,
          ex::conj_all({j.pre, le, re, ex::negate(lr), ex::negate(rr)}), "premise 0 precondition");
    match(P(n, 1).pre, ex::conj_all({j.pre, lr, le}), "premise 1 precondition");
    match(P(n, 2).pre, ex::conj_all({j.pre, rr, re}), "premise 2 precondition");
    for (int i : {0, 1, 2})
      match(P(n, i).post, j.pre, "premise " + std::to_string(i) + " postcondition");
    rel_entail(j.pre, ex::disj_all({iff(le, re), ex::conj(lr, le), ex::conj(rr, re)}), ctx,
               "coverage side condition");
    premises(n, ctx, path);
  }

  void whseq(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    if (j.left->kind != Cmd::While) fail("conclusion left command must be a loop");
    const ExprPtr& e = j.left->expr;
    const Judgment& p0 = P(n, 0);
    const Judgment& p1 = P(n, 1);
    relational(p0, "premise 0");
    relational(p1, "premise 1");
    const ExprPtr& g = p0.left->expr;
    if (p0.left->kind != Cmd::While || g->op != Op::And || !same(g->args[0], e))
      fail("premise 0 left command must be `while " + to_string(*e) +
           " /\\ b do ... od`, found " + q(*p0.left));
    match_cmd(p0.left->first, j.left->first, "premise 0 loop body");
    match_cmd(p1.left, j.left, "premise 1 left command");
    match_cmd(cmd::seq(p0.right, p1.right), j.right, "right sequence of the premise commands");
    match(p0.pre, j.pre, "premise 0 precondition");
    match(p1.pre, p0.post, "premise 1 precondition");
    match(p1.post, j.post, "premise 1 postcondition");
    rel_entail(ex::conj(p0.post, ex::left(ex::negate(e))), j.post, ctx, "exit side condition");
    premises(n, ctx, path);
  }

  // --- relational from unary and back ----------------------------------------

  static ExprPtr erase_sides(const ExprPtr& e) {
    switch (e->op) {
      case Op::Left:
      case Op::Right:
        return e->args[0];
      case Op::Agree:
      case Op::AgreeAll:
      case Op::Both:
      case Op::Converse:
      case Op::Compose:
        fail("formula " + q(*e) + " relates both sides; SeqProd needs one-sided atoms");
      default: {
        if (e->args.empty()) return e;
        std::vector<ExprPtr> args;
        for (const ExprPtr& a : e->args) args.push_back(erase_sides(a));
        if (e->op == Op::App) return ex::app(e->fn, args);
        return args.size() == 1 ? ex::unary(e->op, args[0]) : ex::binary(e->op, args[0], args[1]);
      }
    }
  }

  void seqprod(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    unary(P(n, 0), "premise 0");
    VarSet lv = every_var(*j.left), rv = every_var(*j.right);
    VarSet common = meet(lv, rv);
    if (!common.empty()) fail("the two commands share variables: " + names(common));
    for (const ExprPtr& f : {j.pre, j.post}) {
      SidedVars sv = sided_vars(*f);
      VarSet both_sides = meet(sv.left, sv.right);
      if (!both_sides.empty()) fail(q(*f) + " mentions variables on both sides: " + names(both_sides));
      VarSet l_bad = meet(sv.left, rv), r_bad = meet(sv.right, lv);
      if (!l_bad.empty()) fail(q(*f) + " reads right-program variables on the left: " + names(l_bad));
      if (!r_bad.empty()) fail(q(*f) + " reads left-program variables on the right: " + names(r_bad));
    }
    match_cmd(P(n, 0).left, cmd::seq(j.left, j.right), "premise 0 command");
    match(P(n, 0).pre, erase_sides(j.pre), "premise 0 precondition");
    match(P(n, 0).post, erase_sides(j.post), "premise 0 postcondition");
    premises(n, ctx, path);
  }

  void embed_rule(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    unary(P(n, 0), "premise 0");
    unary(P(n, 1), "premise 1");
    match_cmd(P(n, 0).left, j.left, "premise 0 command");
    match_cmd(P(n, 1).left, j.right, "premise 1 command");
    match(j.pre, ex::conj(embed(P(n, 0).pre, true), embed(P(n, 1).pre, false)), "precondition");
    match(j.post, ex::conj(embed(P(n, 0).post, true), embed(P(n, 1).post, false)), "postcondition");
    premises(n, ctx, path);
  }

  void erefl(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    unary(P(n, 0), "premise 0");
    match_cmd(j.right, j.left, "conclusion right command");
    match_cmd(P(n, 0).left, j.left, "premise 0 command");
    if (!is_deterministic(*j.left)) fail("command " + q(*j.left) + " is not deterministic");
    CommandVars cv = command_vars(*j.left);
    const ExprPtr& p = P(n, 0).pre;
    match(j.pre, ex::conj(agree_on(cv.read), ex::conj(ex::left(p), ex::right(p))), "precondition");
    match(j.post, agree_on(cv.written), "postcondition");
    premises(n, ctx, path);
  }

  void ecorr(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    unary(j, "conclusion");
    unary(P(n, 0), "premise 0");
    relational(P(n, 1), "premise 1");
    const CommandPtr& c = P(n, 0).left;
    match_cmd(P(n, 1).left, c, "premise 1 left command");
    match_cmd(P(n, 1).right, j.left, "premise 1 right command");
    match(P(n, 0).pre, j.pre, "premise 0 precondition");
    match(P(n, 0).post, j.post, "premise 0 postcondition");
    CommandVars a = command_vars(*c), b = command_vars(*j.left);
    VarSet reads = a.read, writes = a.written;
    reads.insert(b.read.begin(), b.read.end());
    writes.insert(b.written.begin(), b.written.end());
    match(P(n, 1).pre, ex::conj(agree_on(reads), ex::conj(ex::left(j.pre), ex::right(j.pre))),
          "premise 1 precondition");
    match(P(n, 1).post, agree_on(writes), "premise 1 postcondition");
    require_termination(c, j.pre, fv({j.pre}), ctx, "the original command");
    assume("termination of " + q(*c) + " from states satisfying " + q(*j.pre) +
           " (bounded check, fuel " + std::to_string(ctx.d.fuel) + ")");
    premises(n, ctx, path);
  }

  // --- relational, spec manipulation -----------------------------------------

  void rel_conseq(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    commands(P(n, 0), j.left, j.right, "premise 0");
    rel_entail(j.pre, P(n, 0).pre, ctx, "precondition entailment");
    rel_entail(P(n, 0).post, j.post, ctx, "postcondition entailment");
    premises(n, ctx, path);
  }

  void rel_frame(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    commands(P(n, 0), j.left, j.right, "premise 0");
    ExprPtr r = parse_rel_formula(Side{n}.text("frame"));
    match(j.pre, ex::conj(P(n, 0).pre, r), "precondition");
    match(j.post, ex::conj(P(n, 0).post, r), "postcondition");
    SidedVars sv = sided_vars(*r);
    VarSet l = meet(sv.left, every_var(*j.left)), rr = meet(sv.right, every_var(*j.right));
    if (!l.empty()) fail("frame " + q(*r) + " mentions variables of the left command: " + names(l));
    if (!rr.empty()) fail("frame " + q(*r) + " mentions variables of the right command: " + names(rr));
    premises(n, ctx, path);
  }

  void swap(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    commands(P(n, 0), j.right, j.left, "premise 0");
    match(j.pre, ex::unary(Op::Converse, P(n, 0).pre), "precondition");
    match(j.post, ex::unary(Op::Converse, P(n, 0).post), "postcondition");
    premises(n, ctx, path);
  }

  void comp(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    relational(P(n, 0), "premise 0");
    relational(P(n, 1), "premise 1");
    match_cmd(P(n, 0).left, j.left, "premise 0 left command");
    match_cmd(P(n, 1).right, j.right, "premise 1 right command");
    match_cmd(P(n, 1).left, P(n, 0).right, "premise 1 left command (the middle command)");
    match(j.pre, ex::binary(Op::Compose, P(n, 0).pre, P(n, 1).pre), "precondition");
    match(j.post, ex::binary(Op::Compose, P(n, 0).post, P(n, 1).post), "postcondition");
    const CommandPtr& mid = P(n, 0).right;
    require_termination(mid, nullptr, {}, ctx, "the middle command");
    assume("termination of " + q(*mid) + " from every store in the domain (bounded check, fuel " +
           std::to_string(ctx.d.fuel) + ")");
    premises(n, ctx, path);
  }

  void rel_conj(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    for (int i : {0, 1}) {
      commands(P(n, i), j.left, j.right, "premise " + std::to_string(i));
      match(P(n, i).pre, j.pre, "premise " + std::to_string(i) + " precondition");
    }
    match(j.post, ex::conj(P(n, 0).post, P(n, 1).post), "postcondition");
    premises(n, ctx, path);
  }

  void rel_disj(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    for (int i : {0, 1}) {
      commands(P(n, i), j.left, j.right, "premise " + std::to_string(i));
      match(P(n, i).post, j.post, "premise " + std::to_string(i) + " postcondition");
    }
    match(j.pre, ex::disj(P(n, 0).pre, P(n, 1).pre), "precondition");
    premises(n, ctx, path);
  }

  // --- transformations --------------------------------------------------------

  static LawStep parse_step(const SExpr& s, bool& right_side) {
    if (s.items.size() < 2 || s.items[1].kind != SExpr::Kind::Atom)
      fail("side entry (law Name ...) needs a law name");
    std::optional<EquivLaw> law = parse_equiv_law(s.items[1].text);
    if (!law) fail("unknown equivalence law `" + s.items[1].text + "`");
    LawStep st{*law, {}, nullptr, Var(), Var(), false};
    right_side = false;
    for (std::size_t i = 2; i < s.items.size(); ++i) {
      const SExpr& a = s.items[i];
      if (a.is_atom("reverse")) {
        st.reverse = true;
      } else if (a.is_form("at")) {
        for (std::size_t k = 1; k < a.items.size(); ++k) st.at.push_back(std::stoi(a.items[k].text));
      } else if (a.is_form("arg") && a.items.size() == 2) {
        st.arg = parse_expr(a.items[1].text);
      } else if (a.is_form("from") && a.items.size() == 2) {
        st.from = Var(a.items[1].text);
      } else if (a.is_form("to") && a.items.size() == 2) {
        st.to = Var(a.items[1].text);
      } else if (a.is_form("side") && a.items.size() == 2 &&
                 (a.items[1].is_atom("left") || a.items[1].is_atom("right"))) {
        right_side = a.items[1].is_atom("right");
      } else {
        fail("malformed law step " + to_string(s));
      }
    }
    return st;
  }

  void rewrite(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    const Judgment& p = P(n, 0);
    if (j.relational != p.relational) fail("premise 0 must be the same kind of judgment");
    if (!j.relational) {
      unary(j, "conclusion");
      unary(p, "premise 0");
    }
    CommandPtr l = j.left, r = j.right;
    int k = 0;
    for (const SExpr& s : n.side) {
      if (!s.is_form("law")) continue;
      bool right_side = false;
      LawStep st = parse_step(s, right_side);
      if (right_side && !j.relational) fail("(side right) in a unary rewrite");
      try {
        if (right_side)
          r = rewrite_uequiv(r, st);
        else
          l = rewrite_uequiv(l, st);
      } catch (const RewriteError& e) {
        fail("law step " + std::to_string(k) + ": " + e.what());
      }
      ++k;
    }
    if (k == 0) fail("rewrite cites no law");
    match_cmd(p.left, l, "premise 0 (left) command after rewriting");
    if (j.relational) match_cmd(p.right, r, "premise 0 right command after rewriting");
    match(p.pre, j.pre, "premise 0 precondition");
    match(p.post, j.post, "premise 0 postcondition");
    premises(n, ctx, path);
  }

  // --- linking ----------------------------------------------------------------

  void cmdfun(const Derivation& n, const Ctx& ctx, const std::string& path) {
    const Judgment& j = n.conclusion;
    if (j.relational || !j.link) fail("conclusion must be `(link D C (params ..) (result z))`");
    if (!j.exists.empty()) fail("conclusion has an existential precondition");
    const Link& lk = *j.link;
    std::string f = Side{n}.atom("function");
    if (ctx.d.functions && ctx.d.functions->defined(f)) fail("symbol `" + f + "` is not fresh");
    std::set<std::string> seen;
    for (const ExprPtr& e : {j.pre, j.post, P(n, 0).pre, P(n, 0).post, P(n, 1).pre, P(n, 1).post})
      collect_functions(*e, seen);
    if (seen.count(f)) fail("symbol `" + f + "` is not fresh: it occurs in the conclusion or premises (i)/(ii)");
    if (contains_calls(*lk.callee)) fail("callee " + q(*lk.callee) + " contains calls");
    VarSet params(lk.params.begin(), lk.params.end());
    for (Var w : command_vars(*lk.callee).written) {
      if (params.count(w)) fail("callee writes its parameter `" + w.name() + "`");
      if (w != lk.result) fail("callee writes `" + w.name() + "` besides its result `" + lk.result.name() + "`");
    }
    commands(P(n, 0), lk.callee, lk.callee, "premise 0");
    match(P(n, 0).pre, agree_on(params), "premise 0 precondition");
    match(P(n, 0).post, agree_on({lk.result}), "premise 0 postcondition");
    commands(P(n, 1), lk.callee, lk.callee, "premise 1");
    unary(P(n, 2), "premise 2");
    match_cmd(P(n, 2).left, j.left, "premise 2 command");
    match(P(n, 2).pre, j.pre, "premise 2 precondition");
    match(P(n, 2).post, j.post, "premise 2 postcondition");

    premise(n, 0, ctx, path);
    premise(n, 1, ctx, path);
    path_ = path;

    Ctx inner = ctx;
    inner.d.functions = std::make_shared<FunctionTable>();
    inner.d.functions->define(f, Callee{lk.params, lk.result, lk.callee});
    inner.fn = f;
    inner.link = lk;

    // (iii): the callee computes a function of its parameters on the domain.
    std::vector<std::vector<Value>> tuples{{}};
    for (Var x : lk.params) {
      std::vector<std::vector<Value>> next;
      Interval iv = inner.d.of(x);
      for (const auto& t : tuples)
        for (Value v = iv.lo; v <= iv.hi; ++v) {
          next.push_back(t);
          next.back().push_back(v);
        }
      tuples = std::move(next);
    }
    std::vector<Value> results;
    for (const auto& t : tuples) {
      std::optional<Value> v = interpret_symbol(f, t, inner.d);
      if (!v) {
        std::string args;
        for (Value a : t) args += (args.empty() ? "" : ", ") + std::to_string(a);
        fail("defining spec `" + lk.callee->target.name() + "` = " + f + "(..) fails: the callee does not compute a value at (" + args + ")");
      }
      results.push_back(*v);
    }
    // The axiom of premise (ii), enumerated with the symbol interpreted.
    VarSet uv = params;
    uv.insert(lk.result);
    UniversePtr u = make_universe(uv);
    auto store = [&](std::size_t i, bool with_result) {
      Store s(u);
      for (std::size_t k = 0; k < lk.params.size(); ++k) s.set(lk.params[k], tuples[i][k]);
      if (with_result) s.set(lk.result, results[i]);
      return s;
    };
    for (std::size_t a = 0; a < tuples.size(); ++a)
      for (std::size_t b = 0; b < tuples.size(); ++b) {
        if (!eval_rel(*P(n, 1).pre, store(a, false), store(b, false), inner.d)) continue;
        if (!eval_rel(*P(n, 1).post, store(a, true), store(b, true), inner.d))
          fail("axiom of premise 1 fails for " + f + " at " + to_string(store(a, true)) + " | " +
               to_string(store(b, true)));
      }

    premise(n, 2, inner, path);
    path_ = path;

    SemanticResult r = check_judgment_semantically(j, inner.d);
    if (r.cutoff) fail("replay of the linked program is cut off within fuel " + std::to_string(inner.d.fuel));
    if (!r.holds) fail("replay of the linked program fails: " + r.reason);
  }

  // --- product evidence ---------------------------------------------------------

  void product_vc(const Derivation& n, const Ctx& ctx, const std::string&) {
    const Judgment& j = n.conclusion;
    relational(j, "conclusion");
    Side side{n};
    std::optional<ProductKind> kind = parse_product_kind(side.atom("product"));
    if (!kind) fail("unknown product kind `" + side.atom("product") + "`");
    AutomatonOptions opts;
    opts.cut_branches = side.has("cut-branches");
    auto a = std::make_shared<const Automaton>(build_automaton(j.left, opts));
    auto b = std::make_shared<const Automaton>(build_automaton(j.right, opts));
    Alignment al = side.has("align") ? parse_alignment(side.file("align")) : Alignment{};
    RelAnnotation ra = side.has("ranno") ? parse_rel_annotation(side.file("ranno")) : RelAnnotation{};
    PreProduct p = construct_product(*kind, a, b, al);
    Spec spec{j.pre, j.post};
    RelVcs rv = relational_vcs(p, ra, spec);

    VarSet lv = a->vars, rvs = b->vars;
    auto add = [&](const ExprPtr& e) {
      SidedVars sv = sided_vars(*e);
      lv.insert(sv.left.begin(), sv.left.end());
      rvs.insert(sv.right.begin(), sv.right.end());
    };
    add(j.pre);
    add(j.post);
    for (const auto& [k, e] : ra) add(e);
    VarSet all = lv;
    all.insert(rvs.begin(), rvs.end());
    Domain d = pin_hidden(ctx.d, all);
    SideSpace ls = make_side_space(*a, make_universe(lv), d);
    SideSpace rs = make_side_space(*b, make_universe(rvs), d);
    for (const VC& vc : rv.vcs) {
      Verdict v = discharge_enumerate(vc, ls, &rs, d);
      if (!v.valid()) fail("VC " + vc.describe() + " is " + to_string(v.kind) + cex(v));
    }
    std::vector<Store> li = input_stores(make_universe(lv), d);
    std::vector<Store> ri = input_stores(make_universe(rvs), d);
    AdequacyReport rep =
        check_adequacy_bounded(p, li, ri, ctx.adequacy_fuel, AdequacyMode::Weak, d, j.pre);
    if (rep.verdict == AdequacyReport::Verdict::Witness)
      fail("the " + to_string(*kind) + " product is not weakly adequate on pairs satisfying the precondition");
  }
};

}  // namespace

ProofResult check_derivation(const Derivation& root, const Domain& d) {
  Checker c;
  try {
    c.node(root, "root", Ctx{d, "", std::nullopt, 100});
  } catch (const NodeFail& f) {
    c.result.ok = false;
    c.result.path = f.path;
    c.result.rule = f.rule;
    c.result.reason = f.reason;
  }
  c.result.rules_used = c.rules_used();
  return c.result;
}

SemanticResult check_judgment_semantically(const Judgment& j, const Domain& d) {
  SemanticResult out;
  try {
    if (!j.relational) {
      CommandPtr c = linked_command(j);
      if (contains_calls(*c)) {
        out.holds = false;
        out.reason = "the command makes calls but no callee is linked";
        return out;
      }
      CommandPtr p = prepare(c);
      ExprPtr pre = upre(j, d);
      VarSet vs = all_vars(*p);
      for (const ExprPtr& e : {pre, j.post}) {
        VarSet f = free_vars(*e);
        vs.insert(f.begin(), f.end());
      }
      Domain dd = pin_hidden(d, vs);
      for (const Store& s : input_stores(make_universe(vs), dd)) {
        if (!eval_unary(*pre, s, dd)) continue;
        FinalStores fs = final_stores(p, s, dd.fuel, dd.limits);
        out.cutoff |= fs.cutoff;
        for (const Store& t : fs.finals)
          if (!eval_unary(*j.post, t, dd)) {
            out.holds = false;
            out.reason = "from " + to_string(s) + " a run ends in " + to_string(t) +
                         " violating " + q(*j.post);
            return out;
          }
      }
      return out;
    }
    Automaton a = build_automaton(j.left);
    Automaton b = build_automaton(j.right);
    VarSet lv = a.vars, rv = b.vars;
    for (const ExprPtr& e : {j.pre, j.post}) {
      SidedVars sv = sided_vars(*e);
      lv.insert(sv.left.begin(), sv.left.end());
      rv.insert(sv.right.begin(), sv.right.end());
    }
    VarSet all = lv;
    all.insert(rv.begin(), rv.end());
    Domain dd = pin_hidden(d, all);
    DirectResult r = check_rel_direct(a, b, Spec{j.pre, j.post}, input_stores(make_universe(lv), dd),
                                      input_stores(make_universe(rv), dd), dd.fuel, dd);
    out.holds = r.holds;
    out.cutoff = r.cutoff;
    out.reason = r.reason;
    if (!r.holds && r.left && r.right)
      out.reason = "from " + to_string(*r.left) + " | " + to_string(*r.right) +
                   (r.reason.empty() ? "" : ": " + r.reason);
  } catch (const std::exception& e) {
    out.holds = false;
    out.reason = e.what();
  }
  return out;
}

}  // namespace relv

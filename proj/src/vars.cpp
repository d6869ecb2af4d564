#include "relv/vars.hpp"

#include <stdexcept>

namespace relv {

namespace {

ExprPtr rebuild(const ExprPtr& e, std::vector<ExprPtr> args) {
  bool changed = false;
  for (std::size_t i = 0; i < args.size(); ++i) changed |= args[i] != e->args[i];
  if (!changed) return e;
  if (e->op == Op::App) return ex::app(e->fn, std::move(args));
  if (args.size() == 1) return ex::unary(e->op, args[0]);
  return ex::binary(e->op, args[0], args[1]);
}

Subst restrict_to(const Subst& s, const VarSet& fv) {
  Subst out;
  for (const auto& [v, e] : s)
    if (fv.count(v)) out.emplace(v, e);
  return out;
}

bool same_subst(const Subst& a, const Subst& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first || !same(ia->second, ib->second)) return false;
  return true;
}

}  // namespace

ExprPtr substitute(const ExprPtr& e, const Subst& s) {
  if (s.empty()) return e;
  if (e->op == Op::Var) {
    auto it = s.find(e->var);
    return it == s.end() ? e : it->second;
  }
  if (e->args.empty()) return e;
  std::vector<ExprPtr> args;
  args.reserve(e->args.size());
  for (const auto& a : e->args) args.push_back(substitute(a, s));
  return rebuild(e, std::move(args));
}

ExprPtr subst_unary(const ExprPtr& p, Var x, const ExprPtr& e) { return substitute(p, {{x, e}}); }

ExprPtr subst_rel(const ExprPtr& r, const Subst& left, const Subst& right) {
  if (left.empty() && right.empty()) return r;
  switch (r->op) {
    case Op::Left:
      return rebuild(r, {substitute(r->args[0], left)});
    case Op::Right:
      return rebuild(r, {substitute(r->args[0], right)});
    case Op::Agree:
    case Op::Both: {
      VarSet fv = free_vars(*r->args[0]);
      Subst l = restrict_to(left, fv), rr = restrict_to(right, fv);
      if (same_subst(l, rr)) return rebuild(r, {substitute(r->args[0], l)});
      ExprPtr lhs = ex::left(substitute(r->args[0], l));
      ExprPtr rhs = ex::right(substitute(r->args[0], rr));
      return r->op == Op::Agree ? ex::eq(lhs, rhs) : ex::conj(lhs, rhs);
    }
    case Op::AgreeAll: {
      std::vector<Var> kept;
      std::vector<ExprPtr> expanded;
      for (Var v : r->vars) {
        if (!left.count(v) && !right.count(v)) {
          kept.push_back(v);
          continue;
        }
        expanded.push_back(subst_rel(ex::unary(Op::Agree, ex::var(v)), left, right));
      }
      if (expanded.empty()) return r;
      if (!kept.empty()) expanded.insert(expanded.begin(), ex::agree_all(kept));
      return ex::conj_all(expanded);
    }
    case Op::Converse:
      return rebuild(r, {subst_rel(r->args[0], right, left)});
    case Op::Compose:
      return rebuild(r, {subst_rel(r->args[0], left, {}), subst_rel(r->args[1], {}, right)});
    default: {
      if (r->args.empty()) return r;
      std::vector<ExprPtr> args;
      for (const auto& a : r->args) args.push_back(subst_rel(a, left, right));
      return rebuild(r, std::move(args));
    }
  }
}

ExprPtr subst_rel(const ExprPtr& r, Var x, const ExprPtr& e, Var x2, const ExprPtr& e2) {
  Subst l, rr;
  if (x.valid()) l.emplace(x, e);
  if (x2.valid()) rr.emplace(x2, e2);
  return subst_rel(r, l, rr);
}

namespace {

void vars_into(const Command& c, CommandVars& out) {
  switch (c.kind) {
    case Cmd::Skip:
      return;
    case Cmd::Assign: {
      VarSet fv = free_vars(*c.expr);
      out.read.insert(fv.begin(), fv.end());
      out.written.insert(c.target);
      return;
    }
    case Cmd::Havoc:
      out.written.insert(c.target);
      return;
    case Cmd::Seq:
    case Cmd::Choice:
      vars_into(*c.first, out);
      vars_into(*c.second, out);
      return;
    case Cmd::If: {
      VarSet fv = free_vars(*c.expr);
      out.read.insert(fv.begin(), fv.end());
      vars_into(*c.first, out);
      vars_into(*c.second, out);
      return;
    }
    case Cmd::While: {
      VarSet fv = free_vars(*c.expr);
      out.read.insert(fv.begin(), fv.end());
      vars_into(*c.first, out);
      return;
    }
    case Cmd::VarBlock: {
      CommandVars inner;
      vars_into(*c.first, inner);
      for (Var v : c.vars) {
        inner.read.erase(v);
        inner.written.erase(v);
      }
      out.read.insert(inner.read.begin(), inner.read.end());
      out.written.insert(inner.written.begin(), inner.written.end());
      return;
    }
    case Cmd::CallSite:
      out.read.insert(c.vars.begin(), c.vars.end());
      out.written.insert(c.target);
      return;
  }
}

bool aux_ok(const VarSet& xs, const Command& c) {
  auto clean = [&](const ExprPtr& e) {
    for (Var v : free_vars(*e))
      if (xs.count(v)) return false;
    return true;
  };
  switch (c.kind) {
    case Cmd::Skip:
      return true;
    case Cmd::Assign:
      return xs.count(c.target) || clean(c.expr);
    case Cmd::Havoc:
      return true;
    case Cmd::Seq:
    case Cmd::Choice:
      return aux_ok(xs, *c.first) && aux_ok(xs, *c.second);
    case Cmd::If:
      return clean(c.expr) && aux_ok(xs, *c.first) && aux_ok(xs, *c.second);
    case Cmd::While:
      return clean(c.expr) && aux_ok(xs, *c.first);
    case Cmd::VarBlock: {
      VarSet inner = xs;
      for (Var v : c.vars) inner.erase(v);
      return aux_ok(inner, *c.first);
    }
    case Cmd::CallSite:
      if (xs.count(c.target)) return false;
      for (Var v : c.vars)
        if (xs.count(v)) return false;
      return true;
  }
  return true;
}

CommandPtr erase_impl(const VarSet& xs, const CommandPtr& c) {
  switch (c->kind) {
    case Cmd::Assign:
    case Cmd::Havoc:
      return xs.count(c->target) ? cmd::skip() : c;
    case Cmd::Seq:
      return cmd::seq(erase_impl(xs, c->first), erase_impl(xs, c->second));
    case Cmd::Choice:
      return cmd::choice(erase_impl(xs, c->first), erase_impl(xs, c->second));
    case Cmd::If:
      return cmd::if_(c->expr, erase_impl(xs, c->first), erase_impl(xs, c->second));
    case Cmd::While:
      return cmd::while_(c->expr, erase_impl(xs, c->first));
    case Cmd::VarBlock: {
      VarSet inner = xs;
      for (Var v : c->vars) inner.erase(v);
      return cmd::var_block(c->vars, erase_impl(inner, c->first));
    }
    default:
      return c;
  }
}

}  // namespace

CommandVars command_vars(const Command& c) {
  CommandVars out;
  vars_into(c, out);
  return out;
}

VarSet all_vars(const Command& c) {
  CommandVars cv = command_vars(c);
  cv.read.insert(cv.written.begin(), cv.written.end());
  return cv.read;
}

bool is_auxiliary(const VarSet& xs, const Command& c) { return aux_ok(xs, c); }

CommandPtr erase_aux(const VarSet& xs, const CommandPtr& c) {
  if (!is_auxiliary(xs, *c)) throw std::invalid_argument("variables are not auxiliary in command");
  return erase_impl(xs, c);
}

CommandPtr rename_var(const CommandPtr& c, Var from, Var to) {
  Subst s{{from, ex::var(to)}};
  auto tgt = [&](Var v) { return v == from ? to : v; };
  auto list = [&](std::vector<Var> vs) {
    for (Var& v : vs) v = tgt(v);
    return vs;
  };
  switch (c->kind) {
    case Cmd::Skip:
      return c;
    case Cmd::Assign:
      return cmd::assign(tgt(c->target), substitute(c->expr, s));
    case Cmd::Havoc:
      return cmd::havoc(tgt(c->target));
    case Cmd::Seq:
      return cmd::seq(rename_var(c->first, from, to), rename_var(c->second, from, to));
    case Cmd::Choice:
      return cmd::choice(rename_var(c->first, from, to), rename_var(c->second, from, to));
    case Cmd::If:
      return cmd::if_(substitute(c->expr, s), rename_var(c->first, from, to),
                      rename_var(c->second, from, to));
    case Cmd::While:
      return cmd::while_(substitute(c->expr, s), rename_var(c->first, from, to));
    case Cmd::VarBlock:
      return cmd::var_block(list(c->vars), rename_var(c->first, from, to));
    case Cmd::CallSite:
      return cmd::call(tgt(c->target), list(c->vars));
  }
  return c;
}

namespace {

void definedness_into(const ExprPtr& e, Value lo, Value hi, std::vector<ExprPtr>& out) {
  for (const auto& a : e->args) definedness_into(a, lo, hi, out);
  if (e->op == Op::Div || e->op == Op::Mod)
    out.push_back(ex::binary(Op::Ne, e->args[1], ex::int_lit(0)));
  switch (e->op) {
    case Op::IntLit:
      if (e->value < lo || e->value > hi) out.push_back(ex::bool_lit(false));
      return;
    case Op::Neg:
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
      out.push_back(ex::binary(Op::Le, ex::int_lit(lo), e));
      out.push_back(ex::binary(Op::Le, e, ex::int_lit(hi)));
      return;
    default:
      return;
  }
}

}  // namespace

ExprPtr definedness(const ExprPtr& e, Value lo, Value hi) {
  std::vector<ExprPtr> parts;
  definedness_into(e, lo, hi, parts);
  return ex::conj_all(parts);
}

bool can_stick(const ExprPtr& e, Value lo, Value hi) {
  return !is_true_lit(*definedness(e, lo, hi));
}

ExprPtr embed(const ExprPtr& p, bool left) { return left ? ex::left(p) : ex::right(p); }

ExprPtr strip_side(const ExprPtr& r, bool left) {
  switch (r->op) {
    case Op::Left:
      return left ? r->args[0] : nullptr;
    case Op::Right:
      return left ? nullptr : r->args[0];
    case Op::Var:
    case Op::Agree:
    case Op::AgreeAll:
    case Op::Both:
    case Op::Converse:
    case Op::Compose:
      return nullptr;
    default: {
      if (r->args.empty()) return r;
      std::vector<ExprPtr> args;
      for (const auto& a : r->args) {
        ExprPtr s = strip_side(a, left);
        if (!s) return nullptr;
        args.push_back(s);
      }
      return rebuild(r, std::move(args));
    }
  }
}

}  // namespace relv

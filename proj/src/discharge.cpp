#include "relv/discharge.hpp"

#include <algorithm>
#include <functional>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>

#include "relv/vars.hpp"

namespace relv {

Interval parse_interval(const std::string& text) {
  static const std::regex re(R"(^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    throw std::invalid_argument("expected an interval lo..hi, got `" + text + "`");
  Interval i{std::stoll(m[1].str()), std::stoll(m[2].str())};
  if (i.lo > i.hi) throw std::invalid_argument("empty interval `" + text + "`");
  return i;
}

void FunctionTable::define(const std::string& name, Callee callee) {
  callees_[name] = std::move(callee);
}

bool FunctionTable::defined(const std::string& name) const { return callees_.count(name) > 0; }

const Callee& FunctionTable::callee(const std::string& name) const {
  auto it = callees_.find(name);
  if (it == callees_.end()) throw EvalError("symbol `" + name + "` has no interpretation");
  return it->second;
}

std::optional<Value> FunctionTable::lookup(const std::string& name,
                                           const std::vector<Value>& args) const {
  std::lock_guard lock(mu_);
  auto it = memo_.find({name, args});
  if (it == memo_.end()) throw std::out_of_range("not memoized");
  return it->second;
}

void FunctionTable::remember(const std::string& name, const std::vector<Value>& args,
                             std::optional<Value> v) const {
  std::lock_guard lock(mu_);
  memo_.emplace(std::make_pair(name, args), v);
}

Interval Domain::of(Var v) const {
  auto it = overrides.find(v);
  return it == overrides.end() ? input : it->second;
}

void Domain::set_input(Interval i) {
  input = i;
  limits.havoc_lo = i.lo;
  limits.havoc_hi = i.hi;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

Value floor_div(Value a, Value b) {
  if (b == 0) return 0;
  if (a == INT64_MIN && b == -1) throw EvalError("integer overflow in division");
  Value q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Value floor_mod(Value a, Value b) {
  if (b == 0) return 0;
  if (b == -1) return 0;
  return a - b * floor_div(a, b);
}

bool is_bool_valued(const Expr& e) {
  switch (e.op) {
    case Op::BoolLit:
    case Op::Not:
    case Op::And:
    case Op::Or:
    case Op::Implies:
    case Op::Eq:
    case Op::Ne:
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge:
    case Op::Agree:
    case Op::AgreeAll:
    case Op::Both:
    case Op::Converse:
    case Op::Compose:
      return true;
    case Op::Left:
    case Op::Right:
      return is_bool_valued(*e.args[0]);
    default:
      return false;
  }
}

struct Middle {
  std::vector<Var> vars;
  std::vector<Interval> ranges;
  UniversePtr universe;
};

const Middle& middle_of(const Expr& compose, const Domain& d) {
  thread_local std::unordered_map<const Expr*, std::pair<ExprPtr, Middle>> cache;
  auto it = cache.find(&compose);
  // The key is a raw pointer; compare structure to survive address reuse.
  if (it != cache.end() && it->second.first && *it->second.first == compose) {
    Middle& m = it->second.second;
    for (std::size_t i = 0; i < m.vars.size(); ++i) m.ranges[i] = d.of(m.vars[i]);
    return m;
  }
  VarSet vs = sided_vars(*compose.args[0]).right;
  VarSet lv = sided_vars(*compose.args[1]).left;
  vs.insert(lv.begin(), lv.end());
  Middle m;
  m.vars.assign(vs.begin(), vs.end());
  for (Var v : m.vars) m.ranges.push_back(d.of(v));
  m.universe = make_universe(vs);
  auto copy = std::make_shared<const Expr>(compose);
  auto& slot = cache[&compose];
  slot = {copy, std::move(m)};
  return slot.second;
}

struct Evaluator {
  const Domain& d;
  std::optional<Store>* middle;

  Value arith(Op op, Value a, Value b) const {
    Value r = 0;
    switch (op) {
      case Op::Add:
        if (__builtin_add_overflow(a, b, &r)) throw EvalError("integer overflow");
        return r;
      case Op::Sub:
        if (__builtin_sub_overflow(a, b, &r)) throw EvalError("integer overflow");
        return r;
      case Op::Mul:
        if (__builtin_mul_overflow(a, b, &r)) throw EvalError("integer overflow");
        return r;
      case Op::Div:
        return floor_div(a, b);
      default:
        return floor_mod(a, b);
    }
  }

  // `here` is the store bare variables refer to; null at relational level.
  Value num(const Expr& e, const Store* here, const Store* s, const Store* s2) const {
    switch (e.op) {
      case Op::IntLit:
        return e.value;
      case Op::Var:
        if (!here) throw EvalError("bare variable in relational formula");
        return here->get(e.var);
      case Op::Neg: {
        Value a = num(*e.args[0], here, s, s2);
        if (a == INT64_MIN) throw EvalError("integer overflow");
        return -a;
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Mod:
        return arith(e.op, num(*e.args[0], here, s, s2), num(*e.args[1], here, s, s2));
      case Op::App: {
        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(num(*a, here, s, s2));
        auto v = interpret_symbol(e.fn, args, d);
        if (!v) throw EvalError("no value for `" + to_string(e) + "`");
        return *v;
      }
      case Op::Left:
        return num(*e.args[0], s, s, s2);
      case Op::Right:
        return num(*e.args[0], s2, s, s2);
      default:
        throw EvalError("boolean where an integer was expected: `" + to_string(e) + "`");
    }
  }

  bool truth(const Expr& e, const Store* here, const Store* s, const Store* s2) const {
    switch (e.op) {
      case Op::BoolLit:
        return e.value != 0;
      case Op::Not:
        return !truth(*e.args[0], here, s, s2);
      case Op::And:
        return truth(*e.args[0], here, s, s2) && truth(*e.args[1], here, s, s2);
      case Op::Or:
        return truth(*e.args[0], here, s, s2) || truth(*e.args[1], here, s, s2);
      case Op::Implies:
        return !truth(*e.args[0], here, s, s2) || truth(*e.args[1], here, s, s2);
      case Op::Eq:
      case Op::Ne: {
        bool eq;
        if (is_bool_valued(*e.args[0]))
          eq = truth(*e.args[0], here, s, s2) == truth(*e.args[1], here, s, s2);
        else
          eq = num(*e.args[0], here, s, s2) == num(*e.args[1], here, s, s2);
        return eq == (e.op == Op::Eq);
      }
      case Op::Lt:
      case Op::Le:
      case Op::Gt:
      case Op::Ge: {
        Value a = num(*e.args[0], here, s, s2), b = num(*e.args[1], here, s, s2);
        switch (e.op) {
          case Op::Lt: return a < b;
          case Op::Le: return a <= b;
          case Op::Gt: return a > b;
          default: return a >= b;
        }
      }
      case Op::Left:
        return truth(*e.args[0], s, s, s2);
      case Op::Right:
        return truth(*e.args[0], s2, s, s2);
      case Op::Agree: {
        const Expr& g = *e.args[0];
        if (is_bool_valued(g)) return truth(g, s, s, s2) == truth(g, s2, s, s2);
        return num(g, s, s, s2) == num(g, s2, s, s2);
      }
      case Op::AgreeAll:
        for (Var v : e.vars)
          if (s->get(v) != s2->get(v)) return false;
        return true;
      case Op::Both:
        return truth(*e.args[0], s, s, s2) && truth(*e.args[0], s2, s, s2);
      case Op::Converse:
        return truth(*e.args[0], nullptr, s2, s);
      case Op::Compose:
        return compose(e, s, s2);
      default:
        throw EvalError("integer where a formula was expected: `" + to_string(e) + "`");
    }
  }

  bool compose(const Expr& e, const Store* s, const Store* s2) const {
    const Middle& m = middle_of(e, d);
    Store t(m.universe);
    std::size_t n = m.vars.size();
    for (std::size_t i = 0; i < n; ++i) t.values[i] = m.ranges[i].lo;
    for (;;) {
      if (truth(*e.args[0], nullptr, s, &t) && truth(*e.args[1], nullptr, &t, s2)) {
        if (middle) *middle = t;
        return true;
      }
      std::size_t k = 0;
      while (k < n && t.values[k] == m.ranges[k].hi) {
        t.values[k] = m.ranges[k].lo;
        ++k;
      }
      if (k == n) return false;
      ++t.values[k];
    }
  }
};

}  // namespace

Value eval_term(const Expr& e, const Store& s, const Domain& d) {
  return Evaluator{d, nullptr}.num(e, &s, &s, &s);
}

bool eval_unary(const Expr& p, const Store& s, const Domain& d) {
  return Evaluator{d, nullptr}.truth(p, &s, &s, &s);
}

bool eval_rel(const Expr& r, const Store& s, const Store& s2, const Domain& d,
              std::optional<Store>* middle) {
  return Evaluator{d, middle}.truth(r, nullptr, &s, &s2);
}

std::optional<Value> interpret_symbol(const std::string& f, const std::vector<Value>& args,
                                      const Domain& d) {
  const FunctionTable& table = *d.functions;
  const Callee& c = table.callee(f);
  try {
    return table.lookup(f, args);
  } catch (const std::out_of_range&) {
  }
  std::optional<Value> result;
  bool in_range = args.size() == c.params.size();
  for (Value a : args) in_range &= a >= d.input.lo && a <= d.input.hi;
  if (in_range) {
    VarSet vs = all_vars(*c.body);
    vs.insert(c.params.begin(), c.params.end());
    vs.insert(c.result);
    CommandPtr body = prepare(c.body);
    VarSet prepared = all_vars(*body);
    vs.insert(prepared.begin(), prepared.end());
    Store s(make_universe(vs));
    for (std::size_t i = 0; i < args.size(); ++i) s.set(c.params[i], args[i]);
    FinalStores fs = final_stores(body, s, d.fuel, d.limits);
    if (!fs.cutoff && !fs.stuck && !fs.finals.empty()) {
      std::set<Value> outs;
      for (const Store& t : fs.finals) outs.insert(t.get(c.result));
      if (outs.size() == 1) result = *outs.begin();
    }
  }
  table.remember(f, args, result);
  return result;
}

// ---------------------------------------------------------------------------
// Weakest preconditions

namespace {

ExprPtr mk_and(const ExprPtr& a, const ExprPtr& b) {
  if (is_true_lit(*a)) return b;
  if (is_true_lit(*b)) return a;
  if (is_false_lit(*a) || is_false_lit(*b)) return ex::bool_lit(false);
  return ex::conj(a, b);
}

ExprPtr mk_imp(const ExprPtr& a, const ExprPtr& b) {
  if (is_true_lit(*a)) return b;
  if (is_false_lit(*a) || is_true_lit(*b)) return ex::bool_lit(true);
  return ex::implies(a, b);
}

ExprPtr mk_side(const ExprPtr& p, bool left) {
  if (p->op == Op::BoolLit) return p;
  return embed(p, left);
}

ExprPtr def_of(const ExprPtr& e, const WpOptions& o) {
  if (!o.definedness) return ex::bool_lit(true);
  return definedness(e, o.limits.lo, o.limits.hi);
}

ExprPtr havoc_conj(const std::function<ExprPtr(Value)>& inst, const WpOptions& o) {
  ExprPtr acc = ex::bool_lit(true);
  for (Value v = o.limits.havoc_lo; v <= o.limits.havoc_hi; ++v) acc = mk_and(acc, inst(v));
  return acc;
}

ExprPtr wp_side(const std::vector<Action>& path, ExprPtr q, bool left, const WpOptions& o) {
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Action& a = *it;
    auto sub = [&](Var x, ExprPtr e) {
      Subst s{{x, std::move(e)}};
      return left ? subst_rel(q, s, {}) : subst_rel(q, {}, s);
    };
    switch (a.kind) {
      case Action::Kind::Assign:
        q = mk_imp(mk_side(def_of(a.expr, o), left), sub(a.target, a.expr));
        break;
      case Action::Kind::Assume:
        q = mk_imp(mk_side(mk_and(def_of(a.expr, o), a.expr), left), q);
        break;
      case Action::Kind::Havoc:
        q = havoc_conj([&](Value v) { return sub(a.target, ex::int_lit(v)); }, o);
        break;
    }
  }
  return q;
}

}  // namespace

ExprPtr wp_unary(const std::vector<Action>& path, const ExprPtr& post, const WpOptions& o) {
  ExprPtr q = post;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Action& a = *it;
    switch (a.kind) {
      case Action::Kind::Assign:
        q = mk_imp(def_of(a.expr, o), subst_unary(q, a.target, a.expr));
        break;
      case Action::Kind::Assume:
        q = mk_imp(mk_and(def_of(a.expr, o), a.expr), q);
        break;
      case Action::Kind::Havoc: {
        ExprPtr body = q;
        q = havoc_conj([&](Value v) { return subst_unary(body, a.target, ex::int_lit(v)); }, o);
        break;
      }
    }
  }
  return q;
}

ExprPtr wp_rel(const Segment* left, const Segment* right, const ExprPtr& post,
               const WpOptions& o) {
  ExprPtr q = post;
  if (right) q = wp_side(right->path, q, false, o);
  if (left) q = wp_side(left->path, q, true, o);
  return q;
}

ExprPtr wp_nonstuck(const std::vector<Action>& path, const WpOptions& o) {
  ExprPtr q = ex::bool_lit(true);
  WpOptions strict = o;
  strict.definedness = true;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Action& a = *it;
    switch (a.kind) {
      case Action::Kind::Assign:
        q = mk_and(def_of(a.expr, strict), subst_unary(q, a.target, a.expr));
        break;
      case Action::Kind::Assume:
        q = mk_and(def_of(a.expr, strict), mk_imp(a.expr, q));
        break;
      case Action::Kind::Havoc: {
        if (o.limits.havoc_lo > o.limits.havoc_hi) return ex::bool_lit(false);
        ExprPtr body = q;
        q = havoc_conj([&](Value v) { return subst_unary(body, a.target, ex::int_lit(v)); }, o);
        break;
      }
    }
  }
  return q;
}

namespace {

ExprPtr payload_wp(const VC& vc, const WpOptions& o) {
  switch (vc.kind) {
    case VC::Kind::Coverage:
      return vc.conclusion;
    case VC::Kind::NonStuck:
      return wp_nonstuck(vc.left->path, o);
    case VC::Kind::Preserve:
      if (!vc.relational) return wp_unary(vc.left->path, vc.conclusion, o);
      return wp_rel(vc.left ? &*vc.left : nullptr, vc.right ? &*vc.right : nullptr,
                    vc.conclusion, o);
  }
  return vc.conclusion;
}

}  // namespace

ExprPtr vc_formula(const VC& vc, const WpOptions& o) {
  return mk_imp(vc.hypothesis, payload_wp(vc, o));
}

// ---------------------------------------------------------------------------
// Enumeration spaces

std::vector<Value> SideSpace::values(Var v, int label, const Domain& d) const {
  Interval in = d.of(v);
  std::vector<Value> out;
  for (Value x = in.lo; x <= in.hi; ++x) out.push_back(x);
  if (label == kInit) return out;
  auto it = envelope.find(label);
  if (it == envelope.end()) return out;
  auto jt = it->second.find(v);
  if (jt == it->second.end()) return out;
  std::vector<Value> merged;
  std::set_union(out.begin(), out.end(), jt->second.begin(), jt->second.end(),
                 std::back_inserter(merged));
  return merged;
}

SideSpace interval_space(UniversePtr u) { return SideSpace{std::move(u), {}}; }

SideSpace make_side_space(const Automaton& a, UniversePtr u, const Domain& d,
                          std::uint64_t max_inits) {
  SideSpace sp{u, {}};
  // Input box over the universe; variables never read keep their low bound
  // when the full box is too large.
  std::vector<Var> varying = u->vars();
  auto box = [&](const std::vector<Var>& vs) {
    long double n = 1;
    for (Var v : vs) n *= static_cast<long double>(d.of(v).size());
    return n;
  };
  if (box(varying) > static_cast<long double>(max_inits)) {
    VarSet read = command_vars(*a.program).read;
    varying.clear();
    for (Var v : u->vars())
      if (read.count(v) || !a.vars.count(v)) varying.push_back(v);
    if (box(varying) > static_cast<long double>(max_inits))
      throw std::length_error("input box exceeds " + std::to_string(max_inits) + " stores");
  }
  std::vector<Store> inits;
  Store s(u);
  for (Var v : u->vars()) s.set(v, d.of(v).lo);
  std::function<void(std::size_t)> fill = [&](std::size_t k) {
    if (k == varying.size()) {
      inits.push_back(s);
      return;
    }
    Interval in = d.of(varying[k]);
    for (Value x = in.lo; x <= in.hi; ++x) {
      s.set(varying[k], x);
      fill(k + 1);
    }
  };
  fill(0);
  std::map<int, std::map<Var, std::set<Value>>> seen;
  for (const AState& st : reachable_states(a, inits, d.fuel, d.limits)) {
    auto& at = seen[st.label];
    for (std::size_t i = 0; i < u->size(); ++i) at[u->vars()[i]].insert(st.store.values[i]);
  }
  for (auto& [label, vars] : seen)
    for (auto& [v, vals] : vars) sp.envelope[label][v].assign(vals.begin(), vals.end());
  return sp;
}

std::string to_string(Verdict::Kind k) {
  switch (k) {
    case Verdict::Kind::Valid: return "valid";
    case Verdict::Kind::Counterexample: return "counterexample";
    case Verdict::Kind::Unknown: return "unknown";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

struct Slot {
  int side;  // 0 left (or unary), 1 right
  Var var;
  std::vector<Value> values;
};

void flatten_conj(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (e->op == Op::And) {
    flatten_conj(e->args[0], out);
    flatten_conj(e->args[1], out);
  } else if (!is_true_lit(*e)) {
    out.push_back(e);
  }
}

class OutOfBudget : public std::exception {};

// Depth-first search over the relevant slots in greedy order; hypothesis
// conjuncts are checked as soon as their variables are bound. The leaf
// returns false to stop.
class Enumerator {
 public:
  Enumerator(const ExprPtr& hyp, bool relational, std::vector<Slot> slots, Store left,
             std::optional<Store> right, const Domain& d)
      : relational_(relational), d_(d), left_(std::move(left)), right_(std::move(right)) {
    std::vector<ExprPtr> conj;
    flatten_conj(hyp, conj);
    struct Pending {
      ExprPtr f;
      std::set<std::pair<int, Var>> vars;
    };
    std::vector<Pending> pending;
    for (const ExprPtr& c : conj) {
      Pending p{c, {}};
      if (relational) {
        SidedVars sv = sided_vars(*c);
        for (Var v : sv.left) p.vars.insert({0, v});
        for (Var v : sv.right) p.vars.insert({1, v});
      } else {
        for (Var v : free_vars(*c)) p.vars.insert({0, v});
      }
      pending.push_back(std::move(p));
    }
    std::map<std::pair<int, Var>, Slot> by_key;
    for (Slot& s : slots) by_key.emplace(std::make_pair(s.side, s.var), std::move(s));
    std::set<std::pair<int, Var>> bound;
    auto bind = [&](const std::pair<int, Var>& key) {
      if (bound.count(key) || !by_key.count(key)) return;
      bound.insert(key);
      order_.push_back(by_key.at(key));
    };
    std::vector<char> used(pending.size(), 0);
    for (;;) {
      // Cheapest conjunct next: fewest unbound tuples.
      int best = -1;
      long double best_cost = 0;
      for (std::size_t i = 0; i < pending.size(); ++i) {
        if (used[i]) continue;
        long double cost = 1;
        for (const auto& key : pending[i].vars)
          if (!bound.count(key) && by_key.count(key))
            cost *= static_cast<long double>(by_key.at(key).values.size());
        if (best < 0 || cost < best_cost) {
          best = static_cast<int>(i);
          best_cost = cost;
        }
      }
      if (best < 0) break;
      used[best] = 1;
      for (const auto& key : pending[best].vars) bind(key);
      checks_.resize(order_.size() + 1);
      checks_[order_.size()].push_back(pending[best].f);
    }
    for (auto& [key, slot] : by_key) bind(key);
    checks_.resize(order_.size() + 1);
  }

  // Returns false when the leaf stopped the search.
  bool run(const std::function<bool(const Store&, const std::optional<Store>&)>& leaf) {
    leaf_ = &leaf;
    return descend(0);
  }

  std::uint64_t count() const { return count_; }

 private:
  bool relational_;
  const Domain& d_;
  Store left_;
  std::optional<Store> right_;
  std::vector<Slot> order_;
  std::vector<std::vector<ExprPtr>> checks_;  // by number of bound slots
  const std::function<bool(const Store&, const std::optional<Store>&)>* leaf_ = nullptr;
  std::uint64_t count_ = 0;

  bool holds(std::size_t level) {
    for (const ExprPtr& f : checks_[level]) {
      bool ok = relational_ ? eval_rel(*f, left_, *right_, d_) : eval_unary(*f, left_, d_);
      if (!ok) return false;
    }
    return true;
  }

  bool descend(std::size_t k) {
    if (!holds(k)) return true;
    if (k == order_.size()) return (*leaf_)(left_, right_);
    Slot& s = order_[k];
    Store& st = s.side == 0 ? left_ : *right_;
    for (Value v : s.values) {
      if (++count_ > d_.budget) throw OutOfBudget();
      st.set(s.var, v);
      if (!descend(k + 1)) return false;
    }
    return true;
  }
};

VarSet action_vars(const std::optional<Segment>& seg) {
  VarSet out;
  if (!seg) return out;
  for (const Action& a : seg->path) {
    if (a.expr) {
      VarSet fv = free_vars(*a.expr);
      out.insert(fv.begin(), fv.end());
    }
    if (a.target.valid()) out.insert(a.target);
  }
  return out;
}

struct Problem {
  std::vector<Slot> slots;
  Store left;
  std::optional<Store> right;
};

Problem setup(const VC& vc, const SideSpace& ls, const SideSpace* rs, const Domain& d) {
  Problem p;
  std::set<std::pair<int, Var>> keys;
  auto add = [&](int side, const VarSet& vs) {
    for (Var v : vs) keys.insert({side, v});
  };
  if (vc.relational) {
    for (const ExprPtr& f : {vc.hypothesis, vc.conclusion}) {
      SidedVars sv = sided_vars(*f);
      add(0, sv.left);
      add(1, sv.right);
    }
    add(0, action_vars(vc.left));
    add(1, action_vars(vc.right));
  } else {
    add(0, free_vars(*vc.hypothesis));
    add(0, free_vars(*vc.conclusion));
    add(0, action_vars(vc.left));
  }
  p.left = Store(ls.universe);
  for (Var v : ls.universe->vars()) p.left.set(v, d.of(v).lo);
  if (vc.relational) {
    if (!rs) throw std::invalid_argument("relational VC needs a right space");
    p.right = Store(rs->universe);
    for (Var v : rs->universe->vars()) p.right->set(v, d.of(v).lo);
  }
  for (const auto& [side, v] : keys) {
    const SideSpace& sp = side == 0 ? ls : *rs;
    if (!sp.universe->contains(v))
      throw std::invalid_argument("variable `" + v.name() + "` outside the " +
                                  (side == 0 ? "left" : "right") + " universe");
    int label = side == 0 ? vc.source_left : vc.source_right;
    p.slots.push_back({side, v, sp.values(v, label, d)});
  }
  return p;
}

using Leaf = std::function<bool(const Store&, const std::optional<Store>&)>;

Verdict search(const VC& vc, const SideSpace& ls, const SideSpace* rs, const Domain& d,
               const std::function<bool(const Store&, const std::optional<Store>&, Verdict&)>& ok) {
  Verdict out;
  try {
    Problem p = setup(vc, ls, rs, d);
    Enumerator en(vc.hypothesis, vc.relational, std::move(p.slots), std::move(p.left),
                  std::move(p.right), d);
    Leaf leaf = [&](const Store& s, const std::optional<Store>& s2) {
      if (ok(s, s2, out)) return true;
      out.kind = Verdict::Kind::Counterexample;
      out.left = s;
      if (s2) out.right = *s2;
      if (vc.relational) {
        std::optional<Store> mid;
        eval_rel(*vc.hypothesis, s, *s2, d, &mid);
        out.middle = mid;
      }
      return false;
    };
    try {
      en.run(leaf);
    } catch (const OutOfBudget&) {
      out = Verdict{};
      out.kind = Verdict::Kind::Unknown;
      out.reason = "enumeration budget of " + std::to_string(d.budget) + " exceeded";
    }
    out.enumerated = en.count();
  } catch (const EvalError& e) {
    out = Verdict{};
    out.kind = Verdict::Kind::Unknown;
    out.reason = e.what();
  }
  return out;
}

WpOptions wp_options(const Domain& d) { return WpOptions{true, d.limits}; }

}  // namespace

Verdict discharge_exec(const VC& vc, const SideSpace& ls, const SideSpace* rs, const Domain& d) {
  return search(vc, ls, rs, d,
                [&](const Store& s, const std::optional<Store>& s2, Verdict& out) {
                  switch (vc.kind) {
                    case VC::Kind::Coverage:
                      return vc.relational ? eval_rel(*vc.conclusion, s, *s2, d)
                                           : eval_unary(*vc.conclusion, s, d);
                    case VC::Kind::NonStuck: {
                      bool stuck = false;
                      exec_segment(*vc.left, s, d.limits, stuck, &out.reason);
                      return !stuck;
                    }
                    case VC::Kind::Preserve:
                      break;
                  }
                  if (!vc.relational) {
                    for (const Store& t : exec_segment(*vc.left, s, d.limits))
                      if (!eval_unary(*vc.conclusion, t, d)) {
                        out.left_after = t;
                        return false;
                      }
                    return true;
                  }
                  std::vector<Store> ls2 =
                      vc.left ? exec_segment(*vc.left, s, d.limits) : std::vector<Store>{s};
                  if (ls2.empty()) return true;
                  std::vector<Store> rs2 =
                      vc.right ? exec_segment(*vc.right, *s2, d.limits) : std::vector<Store>{*s2};
                  for (const Store& t : ls2)
                    for (const Store& t2 : rs2)
                      if (!eval_rel(*vc.conclusion, t, t2, d)) {
                        out.left_after = t;
                        out.right_after = t2;
                        return false;
                      }
                  return true;
                });
}

Verdict discharge_wp(const VC& vc, const SideSpace& ls, const SideSpace* rs, const Domain& d) {
  ExprPtr w = payload_wp(vc, wp_options(d));
  return search(vc, ls, rs, d,
                [&](const Store& s, const std::optional<Store>& s2, Verdict&) {
                  return vc.relational ? eval_rel(*w, s, *s2, d) : eval_unary(*w, s, d);
                });
}

Verdict discharge_enumerate(const VC& vc, const SideSpace& ls, const SideSpace* rs,
                            const Domain& d) {
  Verdict a = discharge_exec(vc, ls, rs, d);
  Verdict b = discharge_wp(vc, ls, rs, d);
  if (a.kind == Verdict::Kind::Unknown) return a;
  if (b.kind == Verdict::Kind::Unknown) return b;
  if (a.kind != b.kind || (a.left && b.left && *a.left != *b.left) ||
      (a.right && b.right && *a.right != *b.right)) {
    Verdict u;
    u.kind = Verdict::Kind::Unknown;
    u.reason = "discharge routes disagree (execution: " + to_string(a.kind) +
               ", wp: " + to_string(b.kind) + ")";
    return u;
  }
  return a;
}

namespace {

Verdict entailment(const ExprPtr& p, const ExprPtr& q, const Domain& d, bool relational) {
  VC vc;
  vc.kind = VC::Kind::Coverage;
  vc.relational = relational;
  vc.hypothesis = p;
  vc.conclusion = q;
  vc.source_left = kInit;
  vc.source_right = kInit;
  if (!relational) {
    VarSet vs = free_vars(*p);
    VarSet qs = free_vars(*q);
    vs.insert(qs.begin(), qs.end());
    SideSpace sp = interval_space(make_universe(vs));
    return discharge_exec(vc, sp, nullptr, d);
  }
  SidedVars a = sided_vars(*p), b = sided_vars(*q);
  a.left.insert(b.left.begin(), b.left.end());
  a.right.insert(b.right.begin(), b.right.end());
  SideSpace ls = interval_space(make_universe(a.left));
  SideSpace rs = interval_space(make_universe(a.right));
  return discharge_exec(vc, ls, &rs, d);
}

}  // namespace

Verdict check_entailment(const ExprPtr& p, const ExprPtr& q, const Domain& d) {
  return entailment(p, q, d, false);
}

Verdict check_rel_entailment(const ExprPtr& p, const ExprPtr& q, const Domain& d) {
  return entailment(p, q, d, true);
}

// ---------------------------------------------------------------------------
// SMT-LIB

namespace {

class SmtWriter {
 public:
  explicit SmtWriter(const Limits& lim) : lim_(lim) {}

  std::string formula(const Expr& e, const std::string& here, const std::string& l,
                      const std::string& r) {
    switch (e.op) {
      case Op::BoolLit:
        return e.value ? "true" : "false";
      case Op::Not:
        return "(not " + formula(*e.args[0], here, l, r) + ")";
      case Op::And:
        return "(and " + formula(*e.args[0], here, l, r) + " " + formula(*e.args[1], here, l, r) +
               ")";
      case Op::Or:
        return "(or " + formula(*e.args[0], here, l, r) + " " + formula(*e.args[1], here, l, r) +
               ")";
      case Op::Implies:
        return "(=> " + formula(*e.args[0], here, l, r) + " " + formula(*e.args[1], here, l, r) +
               ")";
      case Op::Eq:
      case Op::Ne: {
        bool b = is_bool_valued(*e.args[0]);
        std::string a1 = b ? formula(*e.args[0], here, l, r) : term(*e.args[0], here, l, r);
        std::string a2 = b ? formula(*e.args[1], here, l, r) : term(*e.args[1], here, l, r);
        std::string eq = "(= " + a1 + " " + a2 + ")";
        return e.op == Op::Eq ? eq : "(not " + eq + ")";
      }
      case Op::Lt:
      case Op::Le:
      case Op::Gt:
      case Op::Ge: {
        const char* op = e.op == Op::Lt ? "<" : e.op == Op::Le ? "<=" : e.op == Op::Gt ? ">" : ">=";
        return std::string("(") + op + " " + term(*e.args[0], here, l, r) + " " +
               term(*e.args[1], here, l, r) + ")";
      }
      case Op::Left:
        return formula(*e.args[0], l, l, r);
      case Op::Right:
        return formula(*e.args[0], r, l, r);
      case Op::Agree: {
        const Expr& g = *e.args[0];
        if (is_bool_valued(g)) return "(= " + formula(g, l, l, r) + " " + formula(g, r, l, r) + ")";
        return "(= " + term(g, l, l, r) + " " + term(g, r, l, r) + ")";
      }
      case Op::AgreeAll: {
        if (e.vars.empty()) return "true";
        std::string out = e.vars.size() > 1 ? "(and" : "";
        for (Var v : e.vars) {
          std::string eq = "(= " + name(v, l) + " " + name(v, r) + ")";
          out += e.vars.size() > 1 ? " " + eq : eq;
        }
        return e.vars.size() > 1 ? out + ")" : out;
      }
      case Op::Both:
        return "(and " + formula(*e.args[0], l, l, r) + " " + formula(*e.args[0], r, l, r) + ")";
      case Op::Converse:
        return formula(*e.args[0], "", r, l);
      case Op::Compose: {
        std::string m = "_m" + std::to_string(++middles_);
        VarSet vs = sided_vars(*e.args[0]).right;
        VarSet lv = sided_vars(*e.args[1]).left;
        vs.insert(lv.begin(), lv.end());
        std::string body = "(and " + formula(*e.args[0], "", l, m) + " " +
                           formula(*e.args[1], "", m, r) + ")";
        if (vs.empty()) return body;
        std::string binders, bounds;
        for (Var v : vs) {
          binders += (binders.empty() ? "(" : " (") + v.name() + m + " Int)";
          bounds += " " + range(v.name() + m);
        }
        return "(exists (" + binders + ") (and" + bounds + " " + body + "))";
      }
      default:
        throw EvalError("not a formula: `" + to_string(e) + "`");
    }
  }

  std::string term(const Expr& e, const std::string& here, const std::string& l,
                   const std::string& r) {
    switch (e.op) {
      case Op::IntLit:
        return e.value < 0 ? "(- " + std::to_string(-e.value) + ")" : std::to_string(e.value);
      case Op::Var:
        return name(e.var, here);
      case Op::Neg:
        return "(- " + term(*e.args[0], here, l, r) + ")";
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
      case Op::Mod: {
        const char* op = e.op == Op::Add   ? "+"
                         : e.op == Op::Sub ? "-"
                         : e.op == Op::Mul ? "*"
                         : e.op == Op::Div ? "fdiv"
                                           : "fmod";
        if (e.op == Op::Div) uses_div_ = true;
        if (e.op == Op::Mod) uses_div_ = uses_mod_ = true;
        return std::string("(") + op + " " + term(*e.args[0], here, l, r) + " " +
               term(*e.args[1], here, l, r) + ")";
      }
      case Op::App: {
        functions_[e.fn] = e.args.size();
        if (e.args.empty()) return e.fn;
        std::string out = "(" + e.fn;
        for (const auto& a : e.args) out += " " + term(*a, here, l, r);
        return out + ")";
      }
      case Op::Left:
        return term(*e.args[0], l, l, r);
      case Op::Right:
        return term(*e.args[0], r, l, r);
      default:
        throw EvalError("not a term: `" + to_string(e) + "`");
    }
  }

  std::string name(Var v, const std::string& suffix) {
    std::string n = v.name() + suffix;
    if (suffix.rfind("_m", 0) != 0) consts_[suffix].insert(v.name());
    return n;
  }

  std::string range(const std::string& n) const {
    return "(<= " + lit(lim_.lo) + " " + n + ") (<= " + n + " " + lit(lim_.hi) + ")";
  }

  static std::string lit(Value v) {
    return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v);
  }

  const Limits& lim_;
  std::map<std::string, std::set<std::string>> consts_;  // suffix -> names
  std::map<std::string, std::size_t> functions_;
  bool uses_div_ = false;
  bool uses_mod_ = false;
  int middles_ = 0;
};

}  // namespace

std::string emit_smtlib(const VC& vc, const WpOptions& o) {
  ExprPtr f = vc_formula(vc, o);
  SmtWriter w(o.limits);
  std::string body = vc.relational ? w.formula(*f, "", "_l", "_r") : w.formula(*f, "", "", "");
  std::ostringstream os;
  os << "; " << vc.describe() << "\n";
  os << "(set-logic ALL)\n";
  if (w.uses_div_)
    os << "(define-fun fdiv ((a Int) (b Int)) Int\n"
          "  (ite (= b 0) 0 (ite (> b 0) (div a b) (div (- a) (- b)))))\n";
  if (w.uses_mod_)
    os << "(define-fun fmod ((a Int) (b Int)) Int\n"
          "  (ite (= b 0) 0 (- a (* b (fdiv a b)))))\n";
  std::vector<std::string> names;
  for (const char* suffix : {"", "_l", "_r"}) {
    auto it = w.consts_.find(suffix);
    if (it == w.consts_.end()) continue;
    for (const std::string& n : it->second) names.push_back(n + suffix);
  }
  for (const std::string& n : names) os << "(declare-const " << n << " Int)\n";
  for (const auto& [fn, arity] : w.functions_) {
    os << "(declare-fun " << fn << " (";
    for (std::size_t i = 0; i < arity; ++i) os << (i ? " " : "") << "Int";
    os << ") Int)\n";
  }
  for (const std::string& n : names) os << "(assert (and " << w.range(n) << "))\n";
  os << "(assert (not " << body << "))\n";
  os << "(check-sat)\n";
  return os.str();
}

}  // namespace relv

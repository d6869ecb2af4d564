#include "relv/semantics.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "relv/vars.hpp"

namespace relv {

Universe::Universe(const VarSet& vars) : vars_(vars.begin(), vars.end()) {
  std::uint32_t max_id = 0;
  for (Var v : vars_) max_id = std::max(max_id, v.id());
  slots_.assign(max_id + 1, -1);
  for (std::size_t i = 0; i < vars_.size(); ++i) slots_[vars_[i].id()] = static_cast<int>(i);
}

int Universe::slot(Var v) const { return v.id() < slots_.size() ? slots_[v.id()] : -1; }

UniversePtr make_universe(const VarSet& vars) { return std::make_shared<const Universe>(vars); }

Value Store::get(Var v) const {
  int k = universe ? universe->slot(v) : -1;
  if (k < 0) throw std::out_of_range("variable `" + v.name() + "` not in store universe");
  return values[k];
}

void Store::set(Var v, Value x) {
  int k = universe ? universe->slot(v) : -1;
  if (k < 0) throw std::out_of_range("variable `" + v.name() + "` not in store universe");
  values[k] = x;
}

std::size_t StoreHash::operator()(const Store& s) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (Value v : s.values) h = (h ^ static_cast<std::size_t>(v)) * 0x100000001b3ULL;
  return h;
}

bool is_hidden(Var v) { return v.name().find('@') != std::string::npos; }

std::string to_string(const Store& s) {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    Var v = s.universe->vars()[i];
    if (is_hidden(v)) continue;
    os << (first ? "" : ", ") << v.name() << '=' << s.values[i];
    first = false;
  }
  return os.str();
}

namespace {

Value floor_div(Value a, Value b) {
  Value q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Value floor_mod(Value a, Value b) { return a - b * floor_div(a, b); }

std::optional<Value> stuck(std::string* why, std::string msg) {
  if (why) *why = std::move(msg);
  return std::nullopt;
}

std::optional<Value> checked(Value v, const Expr& e, const Limits& lim, std::string* why) {
  if (v < lim.lo || v > lim.hi)
    return stuck(why, "value " + std::to_string(v) + " of `" + to_string(e) + "` out of range");
  return v;
}

}  // namespace

std::optional<Value> eval_int(const Expr& e, const Store& s, const Limits& lim, std::string* why) {
  switch (e.op) {
    case Op::IntLit:
      return checked(e.value, e, lim, why);
    case Op::Var:
      return s.get(e.var);
    case Op::Neg: {
      auto a = eval_int(*e.args[0], s, lim, why);
      if (!a) return a;
      return checked(-*a, e, lim, why);
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Mod: {
      auto a = eval_int(*e.args[0], s, lim, why);
      if (!a) return a;
      auto b = eval_int(*e.args[1], s, lim, why);
      if (!b) return b;
      // Operands are within the bounds, so int64 arithmetic cannot overflow.
      switch (e.op) {
        case Op::Add:
          return checked(*a + *b, e, lim, why);
        case Op::Sub:
          return checked(*a - *b, e, lim, why);
        case Op::Mul:
          return checked(*a * *b, e, lim, why);
        default:
          if (*b == 0) return stuck(why, "division by zero in `" + to_string(e) + "`");
          return checked(e.op == Op::Div ? floor_div(*a, *b) : floor_mod(*a, *b), e, lim, why);
      }
    }
    default:
      throw TypeError("not an integer command expression: `" + to_string(e) + "`");
  }
}

std::optional<bool> eval_bool(const Expr& e, const Store& s, const Limits& lim, std::string* why) {
  switch (e.op) {
    case Op::BoolLit:
      return e.value != 0;
    case Op::Not: {
      auto a = eval_bool(*e.args[0], s, lim, why);
      if (!a) return a;
      return !*a;
    }
    case Op::And:
    case Op::Or:
    case Op::Implies: {
      // Both operands are evaluated: a fault on either side sticks.
      auto a = eval_bool(*e.args[0], s, lim, why);
      if (!a) return a;
      auto b = eval_bool(*e.args[1], s, lim, why);
      if (!b) return b;
      if (e.op == Op::And) return *a && *b;
      if (e.op == Op::Or) return *a || *b;
      return !*a || *b;
    }
    case Op::Eq:
    case Op::Ne:
      if (sort_of(*e.args[0]) == Sort::Bool) {
        auto a = eval_bool(*e.args[0], s, lim, why);
        if (!a) return a;
        auto b = eval_bool(*e.args[1], s, lim, why);
        if (!b) return b;
        return (*a == *b) == (e.op == Op::Eq);
      }
      [[fallthrough]];
    case Op::Lt:
    case Op::Le:
    case Op::Gt:
    case Op::Ge: {
      auto a = eval_int(*e.args[0], s, lim, why);
      if (!a) return std::nullopt;
      auto b = eval_int(*e.args[1], s, lim, why);
      if (!b) return std::nullopt;
      switch (e.op) {
        case Op::Eq: return *a == *b;
        case Op::Ne: return *a != *b;
        case Op::Lt: return *a < *b;
        case Op::Le: return *a <= *b;
        case Op::Gt: return *a > *b;
        default: return *a >= *b;
      }
    }
    default:
      throw TypeError("not a boolean command expression: `" + to_string(e) + "`");
  }
}

namespace {

std::atomic<int> g_fresh{0};

Var fresh_hidden(Var base, const char* tag) {
  return Var(base.name() + "@" + tag + std::to_string(++g_fresh));
}

CommandPtr prepare_impl(const CommandPtr& c) {
  switch (c->kind) {
    case Cmd::Seq:
      return cmd::seq(prepare_impl(c->first), prepare_impl(c->second));
    case Cmd::Choice:
      return cmd::choice(prepare_impl(c->first), prepare_impl(c->second));
    case Cmd::If:
      return cmd::if_(c->expr, prepare_impl(c->first), prepare_impl(c->second));
    case Cmd::While:
      return cmd::while_(c->expr, prepare_impl(c->first));
    case Cmd::VarBlock: {
      CommandPtr body = c->first;
      CommandPtr init;
      for (Var v : c->vars) {
        Var f = fresh_hidden(v, "b");
        body = rename_var(body, v, f);
        CommandPtr zero = cmd::assign(f, ex::int_lit(0));
        init = init ? cmd::seq(init, zero) : zero;
      }
      body = prepare_impl(body);
      return init ? cmd::seq(init, body) : body;
    }
    case Cmd::CallSite:
      throw std::invalid_argument("call sites must be inlined before execution");
    default:
      return c;
  }
}

// Right-nests a sequence so that the first statement is always atomic or
// structured, never a Seq.
CommandPtr flatten_seq(const CommandPtr& c) {
  switch (c->kind) {
    case Cmd::Seq: {
      CommandPtr a = flatten_seq(c->first), b = flatten_seq(c->second);
      if (a->kind != Cmd::Seq) return cmd::seq(a, b);
      std::vector<CommandPtr> parts;
      CommandPtr cur = a;
      while (cur->kind == Cmd::Seq) {
        parts.push_back(cur->first);
        cur = cur->second;
      }
      parts.push_back(cur);
      CommandPtr acc = b;
      for (auto it = parts.rbegin(); it != parts.rend(); ++it) acc = cmd::seq(*it, acc);
      return acc;
    }
    case Cmd::Choice:
      return cmd::choice(flatten_seq(c->first), flatten_seq(c->second));
    case Cmd::If:
      return cmd::if_(c->expr, flatten_seq(c->first), flatten_seq(c->second));
    case Cmd::While:
      return cmd::while_(c->expr, flatten_seq(c->first));
    case Cmd::VarBlock:
      return cmd::var_block(c->vars, flatten_seq(c->first));
    default:
      return c;
  }
}

}  // namespace

CommandPtr prepare(const CommandPtr& c) { return flatten_seq(prepare_impl(c)); }

CommandPtr inline_calls(const CommandPtr& c, const Callee& callee) {
  switch (c->kind) {
    case Cmd::CallSite: {
      if (c->vars.size() != callee.params.size())
        throw std::invalid_argument("call of arity " + std::to_string(c->vars.size()) +
                                    " to callee of arity " +
                                    std::to_string(callee.params.size()));
      VarSet locals = all_vars(*callee.body);
      locals.insert(callee.params.begin(), callee.params.end());
      locals.insert(callee.result);
      CommandPtr body = callee.body;
      std::map<Var, Var> renamed;
      for (Var v : locals) {
        Var f = fresh_hidden(v, "c");
        renamed[v] = f;
        body = rename_var(body, v, f);
      }
      CommandPtr acc = cmd::seq(body, cmd::assign(c->target, ex::var(renamed[callee.result])));
      for (std::size_t i = callee.params.size(); i-- > 0;)
        acc = cmd::seq(cmd::assign(renamed[callee.params[i]], ex::var(c->vars[i])), acc);
      std::vector<Var> block;
      for (auto& [v, f] : renamed) block.push_back(f);
      return cmd::var_block(block, acc);
    }
    case Cmd::Seq:
      return cmd::seq(inline_calls(c->first, callee), inline_calls(c->second, callee));
    case Cmd::Choice:
      return cmd::choice(inline_calls(c->first, callee), inline_calls(c->second, callee));
    case Cmd::If:
      return cmd::if_(c->expr, inline_calls(c->first, callee), inline_calls(c->second, callee));
    case Cmd::While:
      return cmd::while_(c->expr, inline_calls(c->first, callee));
    case Cmd::VarBlock:
      return cmd::var_block(c->vars, inline_calls(c->first, callee));
    default:
      return c;
  }
}

std::size_t ConfigHash::operator()(const Config& c) const noexcept {
  std::size_t h = c.control ? c.control->hash : 0x51ed27;
  return h ^ (StoreHash{}(c.store) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

StepResult step(const Config& cfg, const Limits& lim) {
  StepResult out;
  if (cfg.final()) return out;
  const Command& c = *cfg.control;
  const Store& s = cfg.store;
  switch (c.kind) {
    case Cmd::Skip:
      out.next.push_back({nullptr, s});
      return out;
    case Cmd::Assign: {
      auto v = eval_int(*c.expr, s, lim, &out.stuck_reason);
      if (!v) return out;
      Store t = s;
      t.set(c.target, *v);
      out.next.push_back({nullptr, std::move(t)});
      return out;
    }
    case Cmd::Havoc:
      for (Value v = lim.havoc_lo; v <= lim.havoc_hi; ++v) {
        Store t = s;
        t.set(c.target, v);
        out.next.push_back({nullptr, std::move(t)});
      }
      if (out.next.empty()) out.stuck_reason = "empty havoc range";
      return out;
    case Cmd::Seq: {
      StepResult inner = step({c.first, s}, lim);
      out.stuck_reason = std::move(inner.stuck_reason);
      for (Config& n : inner.next) {
        CommandPtr k = n.final() ? c.second : cmd::seq(n.control, c.second);
        out.next.push_back({std::move(k), std::move(n.store)});
      }
      return out;
    }
    case Cmd::If: {
      auto g = eval_bool(*c.expr, s, lim, &out.stuck_reason);
      if (!g) return out;
      out.next.push_back({*g ? c.first : c.second, s});
      return out;
    }
    case Cmd::While: {
      auto g = eval_bool(*c.expr, s, lim, &out.stuck_reason);
      if (!g) return out;
      if (*g)
        out.next.push_back({cmd::seq(c.first, cfg.control), s});
      else
        out.next.push_back({nullptr, s});
      return out;
    }
    case Cmd::Choice:
      out.next.push_back({c.first, s});
      out.next.push_back({c.second, s});
      return out;
    case Cmd::VarBlock:
    case Cmd::CallSite:
      throw std::invalid_argument("step on an unprepared command: `" + to_string(c) + "`");
  }
  return out;
}

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Terminated: return "terminated";
    case OutcomeKind::Stuck: return "stuck";
    case OutcomeKind::Cutoff: return "cutoff";
  }
  return "?";
}

std::vector<Outcome> run_bounded(const CommandPtr& c, const Store& s, int fuel, const Limits& lim,
                                 std::size_t max_traces) {
  if (fuel < 1) throw std::invalid_argument("fuel must be positive");
  std::vector<Outcome> out;
  std::vector<Config> trace{{c, s}};
  // Iterative DFS; each frame holds the pending successors of trace[depth].
  struct Frame {
    std::vector<Config> pending;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  auto expand = [&]() {
    const Config& top = trace.back();
    if (top.final()) {
      out.push_back({OutcomeKind::Terminated, trace, ""});
      return false;
    }
    if (static_cast<int>(trace.size()) - 1 >= fuel) {
      out.push_back({OutcomeKind::Cutoff, trace, "fuel exhausted"});
      return false;
    }
    StepResult r = step(top, lim);
    if (r.next.empty()) {
      out.push_back({OutcomeKind::Stuck, trace, r.stuck_reason});
      return false;
    }
    stack.push_back({std::move(r.next), 0});
    return true;
  };
  expand();
  while (!stack.empty()) {
    if (out.size() > max_traces) throw std::length_error("too many traces");
    Frame& f = stack.back();
    if (f.next == f.pending.size()) {
      stack.pop_back();
      trace.pop_back();
      continue;
    }
    trace.push_back(f.pending[f.next++]);
    if (!expand()) trace.pop_back();
  }
  return out;
}

FinalStores final_stores(const CommandPtr& c, const Store& s, int fuel, const Limits& lim) {
  FinalStores out;
  std::unordered_set<Config, ConfigHash> seen;
  std::set<Store> finals;
  std::vector<Config> frontier{{c, s}};
  seen.insert(frontier.front());
  for (int depth = 0; !frontier.empty(); ++depth) {
    std::vector<Config> next;
    for (const Config& cfg : frontier) {
      if (cfg.final()) {
        finals.insert(cfg.store);
        continue;
      }
      if (depth >= fuel) {
        out.cutoff = true;
        continue;
      }
      StepResult r = step(cfg, lim);
      if (r.next.empty()) out.stuck = true;
      for (Config& n : r.next)
        if (seen.insert(n).second) next.push_back(std::move(n));
    }
    frontier = std::move(next);
  }
  out.finals.assign(finals.begin(), finals.end());
  return out;
}

std::string to_string(const Action& a) {
  switch (a.kind) {
    case Action::Kind::Assume:
      return "assume " + to_string(*a.expr);
    case Action::Kind::Assign:
      return a.target.name() + " := " + to_string(*a.expr);
    case Action::Kind::Havoc:
      return "havoc " + a.target.name();
  }
  return "?";
}

std::vector<Store> exec_segment(const Segment& seg, const Store& s, const Limits& lim,
                                bool& stuck_out, std::string* why) {
  stuck_out = false;
  std::vector<Store> cur{s};
  for (const Action& a : seg.path) {
    std::vector<Store> next;
    for (const Store& t : cur) {
      switch (a.kind) {
        case Action::Kind::Assume: {
          auto g = eval_bool(*a.expr, t, lim, why);
          if (!g) stuck_out = true;
          if (g && *g) next.push_back(t);
          break;
        }
        case Action::Kind::Assign: {
          auto v = eval_int(*a.expr, t, lim, why);
          if (!v) {
            stuck_out = true;
            break;
          }
          Store u = t;
          u.set(a.target, *v);
          next.push_back(std::move(u));
          break;
        }
        case Action::Kind::Havoc:
          for (Value v = lim.havoc_lo; v <= lim.havoc_hi; ++v) {
            Store u = t;
            u.set(a.target, v);
            next.push_back(std::move(u));
          }
          break;
      }
    }
    cur = std::move(next);
    if (cur.empty()) break;
  }
  std::sort(cur.begin(), cur.end());
  cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
  return cur;
}

std::vector<Store> exec_segment(const Segment& seg, const Store& s, const Limits& lim) {
  bool stuck_flag = false;
  return exec_segment(seg, s, lim, stuck_flag);
}

}  // namespace relv

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relv/ast.hpp"

namespace relv {

struct Limits {
  Value lo = -1024;  // value bounds; results outside stick
  Value hi = 1023;
  Value havoc_lo = -2;  // havoc ranges over [havoc_lo, havoc_hi]
  Value havoc_hi = 2;
};

// Sorted variable list with constant-time slot lookup.
class Universe {
 public:
  explicit Universe(const VarSet& vars);
  const std::vector<Var>& vars() const { return vars_; }
  std::size_t size() const { return vars_.size(); }
  int slot(Var v) const;  // -1 when absent
  bool contains(Var v) const { return slot(v) >= 0; }

 private:
  std::vector<Var> vars_;
  std::vector<int> slots_;  // indexed by Var::id
};
using UniversePtr = std::shared_ptr<const Universe>;
UniversePtr make_universe(const VarSet& vars);

struct Store {
  UniversePtr universe;
  std::vector<Value> values;

  Store() = default;
  explicit Store(UniversePtr u) : universe(std::move(u)), values(universe->size(), 0) {}

  Value get(Var v) const;
  void set(Var v, Value x);
  bool has(Var v) const { return universe && universe->contains(v); }

  friend bool operator==(const Store& a, const Store& b) { return a.values == b.values; }
  friend bool operator!=(const Store& a, const Store& b) { return a.values != b.values; }
  friend bool operator<(const Store& a, const Store& b) { return a.values < b.values; }
};

struct StoreHash {
  std::size_t operator()(const Store& s) const noexcept;
};

// Hidden names (block locals and inlined callee variables) contain '@'.
bool is_hidden(Var v);
// `x=1, y=2` over the visible variables, in universe order.
std::string to_string(const Store& s);

// Evaluation of command expressions: nullopt means the state is stuck.
// `why` receives the reason when non-null.
std::optional<Value> eval_int(const Expr& e, const Store& s, const Limits& lim,
                              std::string* why = nullptr);
std::optional<bool> eval_bool(const Expr& e, const Store& s, const Limits& lim,
                              std::string* why = nullptr);

// Replaces each block local by a fresh hidden name assigned 0 on block entry,
// leaving no VarBlock nodes. Both the interpreter and the automaton run
// prepared commands.
CommandPtr prepare(const CommandPtr& c);

struct Callee {
  std::vector<Var> params;
  Var result;
  CommandPtr body;
};
// `r := call(a..)` becomes a block running the callee on fresh copies of
// its variables, then `r := result`.
CommandPtr inline_calls(const CommandPtr& c, const Callee& callee);

// Control is a command continuation; nullptr is fin.
struct Config {
  CommandPtr control;
  Store store;

  bool final() const { return control == nullptr; }
  friend bool operator==(const Config& a, const Config& b) {
    return same(a.control, b.control) && a.store == b.store;
  }
};

struct ConfigHash {
  std::size_t operator()(const Config& c) const noexcept;
};

struct StepResult {
  std::vector<Config> next;
  std::string stuck_reason;  // set when next is empty and control is not fin
};
StepResult step(const Config& cfg, const Limits& lim);

enum class OutcomeKind { Terminated, Stuck, Cutoff };
std::string to_string(OutcomeKind k);

struct Outcome {
  OutcomeKind kind;
  std::vector<Config> trace;
  std::string reason;
  const Store& last() const { return trace.back().store; }
};

// All maximal traces of at most `fuel` transitions from (c, s).
// Throws std::length_error when more than `max_traces` traces exist.
std::vector<Outcome> run_bounded(const CommandPtr& c, const Store& s, int fuel, const Limits& lim,
                                 std::size_t max_traces = 100000);

// Reachable final stores by breadth-first search over configurations.
struct FinalStores {
  std::vector<Store> finals;  // sorted, distinct
  bool stuck = false;         // some reachable non-final config has no successor
  bool cutoff = false;        // the search hit the depth bound
};
FinalStores final_stores(const CommandPtr& c, const Store& s, int fuel, const Limits& lim);

// Straight-line action of a segment.
struct Action {
  enum class Kind { Assume, Assign, Havoc };
  Kind kind;
  ExprPtr expr;  // assumed condition (polarity applied) or assigned value
  Var target;
};

struct Segment {
  int id = 0;
  int source = 0;
  int target = 0;
  std::vector<Action> path;
};

std::string to_string(const Action& a);

// Stores reached by running the path from s; empty when a condition fails
// or a step sticks.
std::vector<Store> exec_segment(const Segment& seg, const Store& s, const Limits& lim);
// Like exec_segment, also reporting whether some prefix of the path sticks.
std::vector<Store> exec_segment(const Segment& seg, const Store& s, const Limits& lim,
                                bool& stuck, std::string* why = nullptr);

}  // namespace relv

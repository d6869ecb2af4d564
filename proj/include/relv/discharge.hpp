#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "relv/automaton.hpp"

namespace relv {

struct Interval {
  Value lo = 0;
  Value hi = 0;
  std::uint64_t size() const { return hi < lo ? 0 : static_cast<std::uint64_t>(hi - lo) + 1; }
};

// Parses `lo..hi`.
Interval parse_interval(const std::string& text);

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Interpretations of uninterpreted symbols by commands. The memo is a
// write-once map: racing writers compute equal values.
class FunctionTable {
 public:
  void define(const std::string& name, Callee callee);
  bool defined(const std::string& name) const;
  std::optional<Value> lookup(const std::string& name, const std::vector<Value>& args) const;
  void remember(const std::string& name, const std::vector<Value>& args,
                std::optional<Value> v) const;
  const Callee& callee(const std::string& name) const;

 private:
  std::map<std::string, Callee> callees_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<std::string, std::vector<Value>>, std::optional<Value>> memo_;
};

struct Domain {
  Interval input{-2, 2};
  std::map<Var, Interval> overrides;
  Limits limits;                      // havoc range follows `input` unless set explicitly
  std::uint64_t budget = 50'000'000;  // enumerated assignments per check
  int fuel = 1000;
  std::shared_ptr<FunctionTable> functions = std::make_shared<FunctionTable>();

  Interval of(Var v) const;
  // The interval also becomes the havoc range.
  void set_input(Interval i);
};

// Formula evaluation is total: x div 0 = x mod 0 = 0. Throws EvalError on
// int64 overflow or an uninterpretable symbol application.
Value eval_term(const Expr& e, const Store& s, const Domain& d);
bool eval_unary(const Expr& p, const Store& s, const Domain& d);
// `middle` receives a witness middle store of the last true Compose.
bool eval_rel(const Expr& r, const Store& s, const Store& s2, const Domain& d,
              std::optional<Store>* middle = nullptr);

// Result of `callee` on `args`, memoized per (f, args). nullopt when some
// run is cut off or sticks, the results disagree, or args leave the input
// interval.
std::optional<Value> interpret_symbol(const std::string& f, const std::vector<Value>& args,
                                      const Domain& d);

struct WpOptions {
  bool definedness = true;  // guard against sticking actions
  Limits limits;
};

// Partial-correctness weakest precondition of a segment path.
ExprPtr wp_unary(const std::vector<Action>& path, const ExprPtr& post, const WpOptions& o);
// Relational wp of a payload; a missing side stays put. Right then left.
ExprPtr wp_rel(const Segment* left, const Segment* right, const ExprPtr& post,
               const WpOptions& o);
// Holds exactly where no action on the path sticks.
ExprPtr wp_nonstuck(const std::vector<Action>& path, const WpOptions& o);
// The payload-free obligation of a VC: hypothesis => wp(payload, conclusion).
ExprPtr vc_formula(const VC& vc, const WpOptions& o);

// Per-variable enumeration values of one side.
struct SideSpace {
  UniversePtr universe;
  // label -> variable -> observed values (sorted)
  std::map<int, std::map<Var, std::vector<Value>>> envelope;

  std::vector<Value> values(Var v, int label, const Domain& d) const;
};

// Observed values come from bounded runs of `a` from every store of the
// input box (universe variables ranging over their intervals).
SideSpace make_side_space(const Automaton& a, UniversePtr u, const Domain& d,
                          std::uint64_t max_inits = 200000);
// Intervals only (no envelope); for entailments.
SideSpace interval_space(UniversePtr u);

struct Verdict {
  enum class Kind { Valid, Counterexample, Unknown };
  Kind kind = Kind::Valid;
  std::optional<Store> left;  // pre-state(s) of the counterexample
  std::optional<Store> right;
  std::optional<Store> middle;
  std::optional<Store> left_after;  // post-state(s) falsifying the conclusion
  std::optional<Store> right_after;
  std::string reason;
  std::uint64_t enumerated = 0;

  bool valid() const { return kind == Kind::Valid; }
};

std::string to_string(Verdict::Kind k);

// Both routes (segment execution and wp implication) are run and compared;
// disagreement is reported as Unknown.
Verdict discharge_enumerate(const VC& vc, const SideSpace& left, const SideSpace* right,
                            const Domain& d);

// The single routes, exposed for cross-checking.
Verdict discharge_exec(const VC& vc, const SideSpace& left, const SideSpace* right,
                       const Domain& d);
Verdict discharge_wp(const VC& vc, const SideSpace& left, const SideSpace* right,
                     const Domain& d);

// Validity of p => q over the intervals of `d`, for the variables mentioned.
Verdict check_entailment(const ExprPtr& p, const ExprPtr& q, const Domain& d);
Verdict check_rel_entailment(const ExprPtr& p, const ExprPtr& q, const Domain& d);

// SMT-LIB v2 text of hypothesis => wp(payload, conclusion).
std::string emit_smtlib(const VC& vc, const WpOptions& o);

}  // namespace relv

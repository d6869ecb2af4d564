#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relv/automaton.hpp"
#include "relv/discharge.hpp"
#include "relv/parse.hpp"

namespace relv {

enum class ProductKind {
  OnlyLockstep,
  EagerLockstep,
  Interleaved,
  Maximal,
  Sequenced,
  SimpleCondition,  // alignment key `ac`
  ThreeCondition,   // alignment keys `l`, `r`, `b`
};

std::string to_string(ProductKind k);
// Accepts the CLI spellings: only-lockstep, eager-lockstep, interleaved,
// maximal, sequenced, simple-cond, 3cond.
std::optional<ProductKind> parse_product_kind(const std::string& s);

enum class Shape { Joint, Left, Right };
std::string to_string(Shape s);

struct PreProduct {
  ProductKind kind = ProductKind::OnlyLockstep;
  std::shared_ptr<const Automaton> left;
  std::shared_ptr<const Automaton> right;
  Alignment align;  // absent conditions are false

  // The relational condition under which a transition of shape `s` is
  // enabled at the label pair (p, q); a literal false when never.
  ExprPtr guard(Shape s, int p, int q) const;
  std::string pair_name(int p, int q) const;
};

class ProductError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conditions may mention only variables of the respective automaton.
PreProduct construct_product(ProductKind kind, std::shared_ptr<const Automaton> left,
                             std::shared_ptr<const Automaton> right, Alignment align = {});

struct PState {
  AState left;
  AState right;
  friend bool operator==(const PState& a, const PState& b) {
    return a.left == b.left && a.right == b.right;
  }
  friend bool operator<(const PState& a, const PState& b) {
    return a.left == b.left ? a.right < b.right : a.left < b.left;
  }
};

struct PStateHash {
  std::size_t operator()(const PState& s) const noexcept {
    return AStateHash{}(s.left) * 1000003u ^ AStateHash{}(s.right);
  }
};

struct PStep {
  Shape shape;
  PState to;
};

std::vector<PStep> product_successors(const PreProduct& p, const PState& s, const Domain& d);

// All maximal product traces of at most `fuel` steps.
std::vector<std::vector<PState>> product_traces(const PreProduct& p, const PState& s, int fuel,
                                                const Domain& d, std::size_t max_traces = 100000);

// destutter(map(side, t)).
std::vector<AState> project(const std::vector<PState>& t, bool left);
std::vector<AState> destutter(const std::vector<AState>& t);

enum class AdequacyMode { Adequate, Weak };

struct AdequacyReport {
  enum class Verdict { Adequate, WeaklyAdequate, WeaklyAdequateOnly, Witness };
  Verdict verdict = Verdict::Adequate;
  // The first uncovered pair (also set for WeaklyAdequateOnly).
  std::optional<ATrace> left;
  std::optional<ATrace> right;
  std::uint64_t pairs_checked = 0;
};

std::string to_string(AdequacyReport::Verdict v);

// Every pair of finite traces (Weak: prefixes of terminated traces) of at
// most `fuel` steps from the given initial stores is searched for a covering
// product trace. In mode Adequate a failure is downgraded to
// WeaklyAdequateOnly when the weak check passes. With `pre`, only initial
// pairs satisfying it are considered.
AdequacyReport check_adequacy_bounded(const PreProduct& p, const std::vector<Store>& left_inits,
                                      const std::vector<Store>& right_inits, int fuel,
                                      AdequacyMode mode, const Domain& d,
                                      const ExprPtr& pre = nullptr);

// Independent replay: is there a product trace T with t <= left(T) and
// t2 <= right(T), counting one-sided moves as genuine steps?
bool covered(const PreProduct& p, const ATrace& t, const ATrace& t2, const Domain& d,
             int max_steps = 1000);

struct RelVcs {
  std::vector<VC> vcs;
  std::vector<std::pair<int, int>> reachable;  // label pairs, sorted
};

// One VC per enabled (shape, segment or segment pair) from each reachable
// label pair, plus for ThreeCondition one coverage VC per reachable pair.
// Annotations at (init,init) and (fin,fin) default to the spec and must
// agree with it when given.
RelVcs relational_vcs(const PreProduct& p, const RelAnnotation& ranno, const Spec& rspec);

ExprPtr rel_annotation_at(const PreProduct& p, const RelAnnotation& ranno, const Spec& rspec,
                          int l, int r);

// Direct relational satisfaction in basic semantics: for every pair of
// initial stores satisfying the precondition, every pair of terminated
// runs satisfies the postcondition.
struct DirectResult {
  bool holds = true;
  bool cutoff = false;  // some run was cut off by fuel; the verdict is bounded
  std::optional<Store> left, right;            // initial stores of a violation
  std::optional<Store> left_final, right_final;
  std::string reason;
};

DirectResult check_rel_direct(const Automaton& a, const Automaton& b, const Spec& rspec,
                              const std::vector<Store>& left_inits,
                              const std::vector<Store>& right_inits, int fuel, const Domain& d);

// Bounded relational non-stuck check: additionally no reachable state of
// either side is stuck.
DirectResult check_rel_non_stuck(const Automaton& a, const Automaton& b, const Spec& rspec,
                                 const std::vector<Store>& left_inits,
                                 const std::vector<Store>& right_inits, int fuel, const Domain& d);

// A product state reachable from some initial pair satisfying the spec
// precondition, at the VC's source pair, satisfying its hypothesis and
// falsifying it; with the product trace leading there.
struct Probe {
  std::vector<PState> trace;
  Store left_after, right_after;
};

std::optional<Probe> probe_failing(const PreProduct& p, const VC& vc, const Spec& rspec,
                                   const std::vector<Store>& left_inits,
                                   const std::vector<Store>& right_inits, int fuel,
                                   const Domain& d);

// Runs each command at statement level and pairs the i-th configurations,
// the shorter run repeating its last one.
std::vector<std::pair<Store, Store>> lockstep_replay(const CommandPtr& a, const CommandPtr& b,
                                                     const Store& s, const Store& s2, int fuel,
                                                     const Limits& lim);

// All stores over `u` with every variable ranging over its interval in `d`.
std::vector<Store> input_stores(const UniversePtr& u, const Domain& d);

}  // namespace relv

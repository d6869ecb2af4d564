#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relv/parse.hpp"
#include "relv/semantics.hpp"

namespace relv {

constexpr int kInit = 0;
constexpr int kFin = 1;

struct AutomatonOptions {
  bool cut_branches = false;  // if-statements also get cutpoints B1, B2, ...
};

// Cutpoint automaton of a prepared command. Label 0 is init, 1 is fin, then
// L1, L2, ... for loop headers (and B1, ... for branches) in textual order.
struct Automaton {
  CommandPtr program;
  std::vector<std::string> labels;
  std::vector<Segment> segments;
  std::vector<std::vector<int>> outgoing;  // segment ids by source label
  VarSet vars;                             // read or written, hidden locals included

  int label_id(const std::string& name) const;  // -1 when absent
  const std::string& label(int id) const { return labels[id]; }
};

// The command is prepared (block locals made fresh) first. Call sites must
// already be inlined.
Automaton build_automaton(const CommandPtr& c, const AutomatonOptions& opts = {});

class VcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VC {
  enum class Kind {
    Preserve,  // hypothesis, payload, conclusion
    NonStuck,  // no action of the payload sticks under the hypothesis
    Coverage,  // hypothesis implies conclusion, no payload
  };
  Kind kind = Kind::Preserve;
  int id = 0;
  bool relational = false;
  std::string source;  // "L1" or "(L1,L1)"
  int source_left = 0;  // label ids of the source; right is -1 for unary VCs
  int source_right = -1;
  std::string target;
  std::string shape;  // relational: "joint", "left", "right"; unary: ""
  ExprPtr hypothesis;
  ExprPtr conclusion;
  std::optional<Segment> left;  // the unary payload lives here
  std::optional<Segment> right;

  std::string describe() const;
};

std::string to_string(VC::Kind k);

// Annotations may omit init and fin; when present they must equal the spec.
std::vector<VC> unary_vcs(const Automaton& a, const Annotation& anno, const Spec& spec,
                          bool non_stuck = false, const Limits& lim = {});

ExprPtr annotation_at(const Automaton& a, const Annotation& anno, const Spec& spec, int label);

// Cutpoint-level runs.
struct AState {
  int label;
  Store store;
  friend bool operator==(const AState& a, const AState& b) {
    return a.label == b.label && a.store == b.store;
  }
  friend bool operator<(const AState& a, const AState& b) {
    return a.label != b.label ? a.label < b.label : a.store < b.store;
  }
};

struct AStateHash {
  std::size_t operator()(const AState& s) const noexcept {
    return StoreHash{}(s.store) * 31 + static_cast<std::size_t>(s.label);
  }
};

struct ATrace {
  OutcomeKind kind;
  std::vector<AState> states;
};

std::vector<AState> successors(const Automaton& a, const AState& s, const Limits& lim,
                               bool* stuck = nullptr);

// All maximal cutpoint traces with at most `fuel` segment steps.
std::vector<ATrace> automaton_traces(const Automaton& a, const Store& s, int fuel,
                                     const Limits& lim, std::size_t max_traces = 100000);

// Reachable states from the given initial stores, by depth-bounded search.
std::vector<AState> reachable_states(const Automaton& a, const std::vector<Store>& inits, int fuel,
                                     const Limits& lim);

std::string dump_trace(const Automaton& a, const ATrace& t);

}  // namespace relv

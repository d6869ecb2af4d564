#include "relv/automaton.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "relv/vars.hpp"

namespace relv {

namespace {

struct Edge {
  int to;
  std::optional<Action> action;  // nullopt is a silent edge
};

class CfgBuilder {
 public:
  explicit CfgBuilder(const AutomatonOptions& opts) : opts_(opts) {
    node();  // init
    node();  // fin
    cut_.push_back(kInit);
    cut_.push_back(kFin);
    names_ = {"init", "fin"};
  }

  void build(const Command& c, int entry, int exit) {
    switch (c.kind) {
      case Cmd::Skip:
        silent(entry, exit);
        return;
      case Cmd::Assign:
        act(entry, exit, {Action::Kind::Assign, c.expr, c.target});
        return;
      case Cmd::Havoc:
        act(entry, exit, {Action::Kind::Havoc, nullptr, c.target});
        return;
      case Cmd::Seq: {
        int mid = node();
        build(*c.first, entry, mid);
        build(*c.second, mid, exit);
        return;
      }
      case Cmd::If: {
        int head = entry;
        if (opts_.cut_branches) {
          head = node();
          silent(entry, head);
          mark(head, "B" + std::to_string(++branches_));
        }
        int t = node(), e = node();
        act(head, t, {Action::Kind::Assume, c.expr, {}});
        act(head, e, {Action::Kind::Assume, ex::negate(c.expr), {}});
        build(*c.first, t, exit);
        build(*c.second, e, exit);
        return;
      }
      case Cmd::While: {
        int head = node();
        silent(entry, head);
        mark(head, "L" + std::to_string(++loops_));
        int body = node();
        act(head, body, {Action::Kind::Assume, c.expr, {}});
        build(*c.first, body, head);
        act(head, exit, {Action::Kind::Assume, ex::negate(c.expr), {}});
        return;
      }
      case Cmd::Choice: {
        int a = node(), b = node();
        silent(entry, a);
        silent(entry, b);
        build(*c.first, a, exit);
        build(*c.second, b, exit);
        return;
      }
      case Cmd::VarBlock:
      case Cmd::CallSite:
        throw std::invalid_argument("automaton of an unprepared command");
    }
  }

  // Label ids follow textual order: init, fin, then cutpoints as marked.
  void segments(Automaton& a) {
    a.labels = names_;
    a.outgoing.assign(names_.size(), {});
    std::map<int, int> label_of;
    for (std::size_t i = 0; i < cut_.size(); ++i) label_of[cut_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < cut_.size(); ++i) {
      if (cut_[i] == kFin) continue;
      std::vector<Action> path;
      std::vector<char> on_path(edges_.size(), 0);
      walk(a, label_of, static_cast<int>(i), cut_[i], path, on_path, true);
    }
  }

 private:
  const AutomatonOptions& opts_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<int> cut_;
  std::vector<std::string> names_;
  int loops_ = 0;
  int branches_ = 0;

  int node() {
    edges_.emplace_back();
    return static_cast<int>(edges_.size()) - 1;
  }
  void silent(int from, int to) { edges_[from].push_back({to, std::nullopt}); }
  void act(int from, int to, Action a) { edges_[from].push_back({to, std::move(a)}); }
  void mark(int n, std::string name) {
    cut_.push_back(n);
    names_.push_back(std::move(name));
  }

  void walk(Automaton& a, const std::map<int, int>& label_of, int source, int n,
            std::vector<Action>& path, std::vector<char>& on_path, bool start) {
    if (!start) {
      auto it = label_of.find(n);
      if (it != label_of.end()) {
        Segment seg;
        seg.id = static_cast<int>(a.segments.size());
        seg.source = source;
        seg.target = it->second;
        seg.path = path;
        a.outgoing[source].push_back(seg.id);
        a.segments.push_back(std::move(seg));
        return;
      }
    }
    if (on_path[n]) throw std::logic_error("cycle without a cutpoint");
    on_path[n] = 1;
    for (const Edge& e : edges_[n]) {
      if (e.action) path.push_back(*e.action);
      walk(a, label_of, source, e.to, path, on_path, false);
      if (e.action) path.pop_back();
    }
    on_path[n] = 0;
  }
};

}  // namespace

int Automaton::label_id(const std::string& name) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == name) return static_cast<int>(i);
  return -1;
}

Automaton build_automaton(const CommandPtr& c, const AutomatonOptions& opts) {
  if (contains_calls(*c)) throw std::invalid_argument("call sites must be inlined first");
  Automaton a;
  a.program = prepare(c);
  CfgBuilder b(opts);
  b.build(*a.program, kInit, kFin);
  b.segments(a);
  a.vars = all_vars(*a.program);
  return a;
}

std::string to_string(VC::Kind k) {
  switch (k) {
    case VC::Kind::Preserve: return "preserve";
    case VC::Kind::NonStuck: return "non-stuck";
    case VC::Kind::Coverage: return "coverage";
  }
  return "?";
}

std::string VC::describe() const {
  std::ostringstream os;
  os << "vc " << id << " [" << to_string(kind) << "] " << source << " -> " << target;
  if (!shape.empty()) os << " (" << shape << ")";
  return os.str();
}

ExprPtr annotation_at(const Automaton& a, const Annotation& anno, const Spec& spec, int label) {
  if (label == kInit) return spec.pre;
  if (label == kFin) return spec.post;
  auto it = anno.find(a.label(label));
  if (it == anno.end()) throw VcError("missing annotation at cutpoint " + a.label(label));
  return it->second;
}

std::vector<VC> unary_vcs(const Automaton& a, const Annotation& anno, const Spec& spec,
                          bool non_stuck, const Limits& lim) {
  for (const auto& [name, f] : anno) {
    int id = a.label_id(name);
    if (id < 0) throw VcError("annotation for unknown cutpoint " + name);
    if (id == kInit && !same(f, spec.pre))
      throw VcError("annotation at init differs from the precondition");
    if (id == kFin && !same(f, spec.post))
      throw VcError("annotation at fin differs from the postcondition");
  }
  std::vector<VC> out;
  for (const Segment& seg : a.segments) {
    VC vc;
    vc.id = static_cast<int>(out.size());
    vc.source = a.label(seg.source);
    vc.source_left = seg.source;
    vc.target = a.label(seg.target);
    vc.hypothesis = annotation_at(a, anno, spec, seg.source);
    vc.conclusion = annotation_at(a, anno, spec, seg.target);
    vc.left = seg;
    out.push_back(vc);
  }
  if (non_stuck) {
    for (const Segment& seg : a.segments) {
      bool sticky = false;
      for (const Action& act : seg.path)
        sticky |= act.kind == Action::Kind::Havoc ? lim.havoc_lo > lim.havoc_hi
                                                  : can_stick(act.expr, lim.lo, lim.hi);
      if (!sticky) continue;
      VC vc;
      vc.kind = VC::Kind::NonStuck;
      vc.id = static_cast<int>(out.size());
      vc.source = a.label(seg.source);
      vc.source_left = seg.source;
      vc.target = a.label(seg.target);
      vc.hypothesis = annotation_at(a, anno, spec, seg.source);
      vc.conclusion = ex::bool_lit(true);
      vc.left = seg;
      out.push_back(vc);
    }
  }
  return out;
}

std::vector<AState> successors(const Automaton& a, const AState& s, const Limits& lim,
                               bool* stuck) {
  std::vector<AState> out;
  bool any_stuck = false;
  for (int id : a.outgoing[s.label]) {
    const Segment& seg = a.segments[id];
    bool st = false;
    for (Store& t : exec_segment(seg, s.store, lim, st)) out.push_back({seg.target, std::move(t)});
    any_stuck |= st;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (stuck) *stuck = any_stuck;
  return out;
}

std::vector<ATrace> automaton_traces(const Automaton& a, const Store& s, int fuel,
                                     const Limits& lim, std::size_t max_traces) {
  std::vector<ATrace> out;
  std::vector<AState> trace{{kInit, s}};
  struct Frame {
    std::vector<AState> pending;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  auto expand = [&]() {
    const AState& top = trace.back();
    if (top.label == kFin) {
      out.push_back({OutcomeKind::Terminated, trace});
      return false;
    }
    if (static_cast<int>(trace.size()) - 1 >= fuel) {
      out.push_back({OutcomeKind::Cutoff, trace});
      return false;
    }
    std::vector<AState> next = successors(a, top, lim);
    if (next.empty()) {
      out.push_back({OutcomeKind::Stuck, trace});
      return false;
    }
    stack.push_back({std::move(next), 0});
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

std::vector<AState> reachable_states(const Automaton& a, const std::vector<Store>& inits, int fuel,
                                     const Limits& lim) {
  std::unordered_set<AState, AStateHash> seen;
  std::vector<AState> frontier;
  for (const Store& s : inits)
    if (seen.insert({kInit, s}).second) frontier.push_back({kInit, s});
  for (int depth = 0; depth < fuel && !frontier.empty(); ++depth) {
    std::vector<AState> next;
    for (const AState& st : frontier)
      for (AState& n : successors(a, st, lim))
        if (seen.insert(n).second) next.push_back(std::move(n));
    frontier = std::move(next);
  }
  std::vector<AState> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string dump_trace(const Automaton& a, const ATrace& t) {
  std::ostringstream os;
  for (const AState& s : t.states) os << a.label(s.label) << " | " << to_string(s.store) << "\n";
  return os.str();
}

}  // namespace relv

#include "relv/product.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "relv/vars.hpp"

namespace relv {

namespace {

ExprPtr T() { return ex::bool_lit(true); }
ExprPtr F() { return ex::bool_lit(false); }

ExprPtr mk_and(const ExprPtr& a, const ExprPtr& b) {
  if (is_true_lit(*a)) return b;
  if (is_true_lit(*b)) return a;
  if (is_false_lit(*a) || is_false_lit(*b)) return F();
  return ex::conj(a, b);
}

ExprPtr mk_or(const ExprPtr& a, const ExprPtr& b) {
  if (is_false_lit(*a)) return b;
  if (is_false_lit(*b)) return a;
  if (is_true_lit(*a) || is_true_lit(*b)) return T();
  return ex::disj(a, b);
}

ExprPtr mk_not(const ExprPtr& a) {
  if (is_true_lit(*a)) return F();
  if (is_false_lit(*a)) return T();
  return ex::negate(a);
}

}  // namespace

std::string to_string(ProductKind k) {
  switch (k) {
    case ProductKind::OnlyLockstep: return "only-lockstep";
    case ProductKind::EagerLockstep: return "eager-lockstep";
    case ProductKind::Interleaved: return "interleaved";
    case ProductKind::Maximal: return "maximal";
    case ProductKind::Sequenced: return "sequenced";
    case ProductKind::SimpleCondition: return "simple-cond";
    case ProductKind::ThreeCondition: return "3cond";
  }
  return "?";
}

std::optional<ProductKind> parse_product_kind(const std::string& s) {
  for (ProductKind k :
       {ProductKind::OnlyLockstep, ProductKind::EagerLockstep, ProductKind::Interleaved,
        ProductKind::Maximal, ProductKind::Sequenced, ProductKind::SimpleCondition,
        ProductKind::ThreeCondition})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string to_string(Shape s) {
  switch (s) {
    case Shape::Joint: return "joint";
    case Shape::Left: return "left";
    case Shape::Right: return "right";
  }
  return "?";
}

std::string PreProduct::pair_name(int p, int q) const {
  return "(" + left->label(p) + "," + right->label(q) + ")";
}

ExprPtr PreProduct::guard(Shape s, int p, int q) const {
  bool lf = p == kFin, rf = q == kFin;
  if ((s == Shape::Joint && (lf || rf)) || (s == Shape::Left && lf) || (s == Shape::Right && rf))
    return F();
  auto cond = [&](const char* key) {
    ExprPtr c = align.lookup(key, {left->label(p), right->label(q)});
    return c ? c : F();
  };
  switch (kind) {
    case ProductKind::OnlyLockstep:
      return s == Shape::Joint ? T() : F();
    case ProductKind::EagerLockstep:
      if (s == Shape::Joint) return T();
      if (s == Shape::Left) return rf ? T() : F();
      return lf ? T() : F();
    case ProductKind::Interleaved:
      return s == Shape::Joint ? F() : T();
    case ProductKind::Maximal:
      return T();
    case ProductKind::Sequenced:
      if (s == Shape::Left) return q == kInit ? T() : F();
      if (s == Shape::Right) return lf ? T() : F();
      return F();
    case ProductKind::SimpleCondition:
      return s == Shape::Joint ? cond("ac") : mk_not(cond("ac"));
    case ProductKind::ThreeCondition:
      return cond(s == Shape::Left ? "l" : s == Shape::Joint ? "b" : "r");
  }
  return F();
}

PreProduct construct_product(ProductKind kind, std::shared_ptr<const Automaton> left,
                             std::shared_ptr<const Automaton> right, Alignment align) {
  PreProduct p{kind, std::move(left), std::move(right), std::move(align)};
  auto present = [&](const char* key) {
    if (p.align.defaults.count(key)) return true;
    for (const auto& [at, m] : p.align.by_pair)
      if (m.count(key)) return true;
    return false;
  };
  if (kind == ProductKind::SimpleCondition && !present("ac"))
    throw ProductError("simple-condition product needs an `ac` condition");
  if (kind == ProductKind::ThreeCondition)
    for (const char* key : {"l", "r", "b"})
      if (!present(key))
        throw ProductError(std::string("3-condition product needs an `") + key + "` condition");
  auto check = [&](const ExprPtr& f) {
    SidedVars sv = sided_vars(*f);
    for (Var v : sv.left)
      if (!p.left->vars.count(v))
        throw ProductError("alignment condition mentions `" + v.name() +
                           "`, not a variable of the left program");
    for (Var v : sv.right)
      if (!p.right->vars.count(v))
        throw ProductError("alignment condition mentions `" + v.name() +
                           "`, not a variable of the right program");
  };
  for (const auto& [key, f] : p.align.defaults) check(f);
  for (const auto& [at, m] : p.align.by_pair) {
    if (p.left->label_id(at.first) < 0 || p.right->label_id(at.second) < 0)
      throw ProductError("alignment for unknown cutpoint pair (" + at.first + "," + at.second +
                         ")");
    for (const auto& [key, f] : m) check(f);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Concrete product semantics

std::vector<PStep> product_successors(const PreProduct& p, const PState& s, const Domain& d) {
  std::vector<PStep> out;
  std::optional<std::vector<AState>> ls, rs;
  auto lsucc = [&]() -> const std::vector<AState>& {
    if (!ls) ls = successors(*p.left, s.left, d.limits);
    return *ls;
  };
  auto rsucc = [&]() -> const std::vector<AState>& {
    if (!rs) rs = successors(*p.right, s.right, d.limits);
    return *rs;
  };
  for (Shape sh : {Shape::Joint, Shape::Left, Shape::Right}) {
    ExprPtr g = p.guard(sh, s.left.label, s.right.label);
    if (is_false_lit(*g)) continue;
    if (!is_true_lit(*g) && !eval_rel(*g, s.left.store, s.right.store, d)) continue;
    switch (sh) {
      case Shape::Joint:
        for (const AState& a : lsucc())
          for (const AState& b : rsucc()) out.push_back({sh, {a, b}});
        break;
      case Shape::Left:
        for (const AState& a : lsucc()) out.push_back({sh, {a, s.right}});
        break;
      case Shape::Right:
        for (const AState& b : rsucc()) out.push_back({sh, {s.left, b}});
        break;
    }
  }
  return out;
}

std::vector<std::vector<PState>> product_traces(const PreProduct& p, const PState& s, int fuel,
                                                const Domain& d, std::size_t max_traces) {
  std::vector<std::vector<PState>> out;
  std::vector<PState> trace{s};
  std::function<void()> go = [&]() {
    if (out.size() > max_traces) throw std::length_error("too many product traces");
    std::vector<PStep> next;
    if (static_cast<int>(trace.size()) - 1 < fuel) next = product_successors(p, trace.back(), d);
    if (next.empty()) {
      out.push_back(trace);
      return;
    }
    for (const PStep& st : next) {
      trace.push_back(st.to);
      go();
      trace.pop_back();
    }
  };
  go();
  return out;
}

std::vector<AState> destutter(const std::vector<AState>& t) {
  std::vector<AState> out;
  for (const AState& s : t)
    if (out.empty() || !(out.back() == s)) out.push_back(s);
  return out;
}

std::vector<AState> project(const std::vector<PState>& t, bool left) {
  std::vector<AState> m;
  for (const PState& s : t) m.push_back(left ? s.left : s.right);
  return destutter(m);
}

// ---------------------------------------------------------------------------
// Adequacy

std::string to_string(AdequacyReport::Verdict v) {
  switch (v) {
    case AdequacyReport::Verdict::Adequate: return "adequate";
    case AdequacyReport::Verdict::WeaklyAdequate: return "weakly-adequate";
    case AdequacyReport::Verdict::WeaklyAdequateOnly: return "weakly-adequate-only";
    case AdequacyReport::Verdict::Witness: return "witness";
  }
  return "?";
}

namespace {

// Execution tree of one side; node 0 is the root, children follow parents.
struct Tree {
  struct Node {
    AState state;
    int parent;
    int depth;
    std::vector<int> children;
    bool stuck = false;
    bool to_fin = false;  // some descendant (or itself) is at fin
  };
  std::vector<Node> nodes;
  std::vector<int> pre, post;  // preorder interval for ancestor tests

  bool ancestor_or_self(int a, int n) const { return pre[a] <= pre[n] && post[n] <= post[a]; }

  ATrace path(int n) const {
    std::vector<AState> st;
    for (int k = n; k >= 0; k = nodes[k].parent) st.push_back(nodes[k].state);
    std::reverse(st.begin(), st.end());
    const Node& x = nodes[n];
    OutcomeKind kind = x.state.label == kFin ? OutcomeKind::Terminated
                       : x.stuck             ? OutcomeKind::Stuck
                                             : OutcomeKind::Cutoff;
    return {kind, std::move(st)};
  }
};

constexpr std::size_t kMaxTreeNodes = 2'000'000;

Tree build_tree(const Automaton& a, const Store& s, int depth, const Limits& lim) {
  Tree t;
  t.nodes.push_back({{kInit, s}, -1, 0, {}});
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    if (t.nodes[i].state.label == kFin || t.nodes[i].depth >= depth) continue;
    std::vector<AState> next = successors(a, t.nodes[i].state, lim);
    if (next.empty()) t.nodes[i].stuck = true;
    for (AState& n : next) {
      if (t.nodes.size() >= kMaxTreeNodes) throw std::length_error("execution tree too large");
      t.nodes[i].children.push_back(static_cast<int>(t.nodes.size()));
      t.nodes.push_back({std::move(n), static_cast<int>(i), t.nodes[i].depth + 1, {}});
    }
  }
  for (std::size_t i = t.nodes.size(); i-- > 0;) {
    Tree::Node& n = t.nodes[i];
    n.to_fin = n.state.label == kFin;
    for (int c : n.children) n.to_fin |= t.nodes[c].to_fin;
  }
  t.pre.assign(t.nodes.size(), 0);
  t.post.assign(t.nodes.size(), 0);
  int clock = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  t.pre[0] = clock++;
  while (!stack.empty()) {
    auto& [n, k] = stack.back();
    if (k < t.nodes[n].children.size()) {
      int c = t.nodes[n].children[k++];
      t.pre[c] = clock++;
      stack.push_back({c, 0});
    } else {
      t.post[n] = clock++;
      stack.pop_back();
    }
  }
  return t;
}

struct PairResult {
  bool ok = true;
  int left = -1, right = -1;
  std::uint64_t checked = 0;
};

// Product search over node pairs of the two execution trees.
PairResult cover_trees(const PreProduct& p, const Tree& lt, const Tree& rt, int fuel, bool weak,
                       const Domain& d) {
  std::size_t nl = lt.nodes.size(), nr = rt.nodes.size();
  std::vector<std::vector<int>> maximal(nl);
  std::unordered_set<std::uint64_t> seen;
  std::deque<std::pair<int, int>> todo{{0, 0}};
  seen.insert(0);
  auto key = [&](int i, int j) { return static_cast<std::uint64_t>(i) * nr + j; };
  while (!todo.empty()) {
    auto [i, j] = todo.front();
    todo.pop_front();
    for (int a = i; a >= 0; a = lt.nodes[a].parent) maximal[a].push_back(j);
    const AState& ls = lt.nodes[i].state;
    const AState& rs = rt.nodes[j].state;
    auto push = [&](int a, int b) {
      if (seen.insert(key(a, b)).second) todo.push_back({a, b});
    };
    for (Shape sh : {Shape::Joint, Shape::Left, Shape::Right}) {
      ExprPtr g = p.guard(sh, ls.label, rs.label);
      if (is_false_lit(*g)) continue;
      if (!is_true_lit(*g) && !eval_rel(*g, ls.store, rs.store, d)) continue;
      if (sh == Shape::Joint)
        for (int a : lt.nodes[i].children)
          for (int b : rt.nodes[j].children) push(a, b);
      if (sh == Shape::Left)
        for (int a : lt.nodes[i].children) push(a, j);
      if (sh == Shape::Right)
        for (int b : rt.nodes[j].children) push(i, b);
    }
  }
  PairResult res;
  std::vector<char> mark(nr);
  for (std::size_t a = 0; a < nl; ++a) {
    const Tree::Node& na = lt.nodes[a];
    if (na.depth > fuel || (weak && !na.to_fin)) continue;
    std::fill(mark.begin(), mark.end(), 0);
    for (int b : maximal[a])
      for (int k = b; k >= 0 && !mark[k]; k = rt.nodes[k].parent) mark[k] = 1;
    for (std::size_t b = 0; b < nr; ++b) {
      const Tree::Node& nb = rt.nodes[b];
      if (nb.depth > fuel || (weak && !nb.to_fin)) continue;
      ++res.checked;
      if (!mark[b]) {
        res.ok = false;
        res.left = static_cast<int>(a);
        res.right = static_cast<int>(b);
        return res;
      }
    }
  }
  return res;
}

AdequacyReport adequacy_pass(const PreProduct& p, const std::vector<Store>& left_inits,
                             const std::vector<Store>& right_inits, int fuel, bool weak,
                             const Domain& d, const ExprPtr& pre) {
  AdequacyReport rep;
  rep.verdict = weak ? AdequacyReport::Verdict::WeaklyAdequate : AdequacyReport::Verdict::Adequate;
  // A covering trace may run one side past its own bound, e.g. sequenced.
  int depth = 2 * fuel;
  std::vector<Tree> rtrees;
  for (const Store& s2 : right_inits) rtrees.push_back(build_tree(*p.right, s2, depth, d.limits));
  for (const Store& s : left_inits) {
    Tree lt = build_tree(*p.left, s, depth, d.limits);
    for (std::size_t k = 0; k < rtrees.size(); ++k) {
      if (pre && !eval_rel(*pre, s, right_inits[k], d)) continue;
      const Tree& rt = rtrees[k];
      PairResult r = cover_trees(p, lt, rt, fuel, weak, d);
      rep.pairs_checked += r.checked;
      if (!r.ok) {
        rep.verdict = AdequacyReport::Verdict::Witness;
        rep.left = lt.path(r.left);
        rep.right = rt.path(r.right);
        return rep;
      }
    }
  }
  return rep;
}

}  // namespace

AdequacyReport check_adequacy_bounded(const PreProduct& p, const std::vector<Store>& left_inits,
                                      const std::vector<Store>& right_inits, int fuel,
                                      AdequacyMode mode, const Domain& d, const ExprPtr& pre) {
  if (mode == AdequacyMode::Weak)
    return adequacy_pass(p, left_inits, right_inits, fuel, true, d, pre);
  AdequacyReport full = adequacy_pass(p, left_inits, right_inits, fuel, false, d, pre);
  if (full.verdict == AdequacyReport::Verdict::Adequate) return full;
  AdequacyReport weak = adequacy_pass(p, left_inits, right_inits, fuel, true, d, pre);
  if (weak.verdict == AdequacyReport::Verdict::WeaklyAdequate)
    full.verdict = AdequacyReport::Verdict::WeaklyAdequateOnly;
  full.pairs_checked += weak.pairs_checked;
  return full;
}

bool covered(const PreProduct& p, const ATrace& t, const ATrace& t2, const Domain& d,
             int max_steps) {
  const auto& a = t.states;
  const auto& b = t2.states;
  if (a.empty() || b.empty()) return true;
  struct Node {
    PState s;
    std::size_t i, j;  // matched prefix lengths
    int steps;
  };
  PState start{a[0], b[0]};
  std::deque<Node> todo{{start, 1, 1, 0}};
  std::set<std::tuple<PState, std::size_t, std::size_t>> seen{{start, 1, 1}};
  while (!todo.empty()) {
    Node n = todo.front();
    todo.pop_front();
    if (n.i == a.size() && n.j == b.size()) return true;
    if (n.steps >= max_steps) continue;
    for (const PStep& st : product_successors(p, n.s, d)) {
      std::size_t i = n.i, j = n.j;
      bool ok = true;
      if (st.shape != Shape::Right && i < a.size()) {
        if (st.to.left == a[i])
          ++i;
        else
          ok = false;
      }
      if (st.shape != Shape::Left && j < b.size()) {
        if (st.to.right == b[j])
          ++j;
        else
          ok = false;
      }
      if (!ok) continue;
      if (seen.insert({st.to, i, j}).second) todo.push_back({st.to, i, j, n.steps + 1});
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Relational VCs

ExprPtr rel_annotation_at(const PreProduct& p, const RelAnnotation& ranno, const Spec& rspec,
                          int l, int r) {
  if (l == kInit && r == kInit) return rspec.pre;
  if (l == kFin && r == kFin) return rspec.post;
  auto it = ranno.find({p.left->label(l), p.right->label(r)});
  if (it == ranno.end())
    throw VcError("missing annotation at reachable pair " + p.pair_name(l, r));
  return it->second;
}

RelVcs relational_vcs(const PreProduct& p, const RelAnnotation& ranno, const Spec& rspec) {
  for (const auto& [at, f] : ranno) {
    int l = p.left->label_id(at.first), r = p.right->label_id(at.second);
    if (l < 0 || r < 0)
      throw VcError("annotation for unknown cutpoint pair (" + at.first + "," + at.second + ")");
    if (l == kInit && r == kInit && !same(f, rspec.pre))
      throw VcError("annotation at (init,init) differs from the precondition");
    if (l == kFin && r == kFin && !same(f, rspec.post))
      throw VcError("annotation at (fin,fin) differs from the postcondition");
  }
  const Automaton& A = *p.left;
  const Automaton& B = *p.right;
  // Reachable label pairs of the pair graph.
  std::set<std::pair<int, int>> reach{{kInit, kInit}};
  std::deque<std::pair<int, int>> todo{{kInit, kInit}};
  auto visit = [&](int l, int r) {
    if (reach.insert({l, r}).second) todo.push_back({l, r});
  };
  while (!todo.empty()) {
    auto [l, r] = todo.front();
    todo.pop_front();
    if (!is_false_lit(*p.guard(Shape::Joint, l, r)))
      for (int sa : A.outgoing[l])
        for (int sb : B.outgoing[r]) visit(A.segments[sa].target, B.segments[sb].target);
    if (!is_false_lit(*p.guard(Shape::Left, l, r)))
      for (int sa : A.outgoing[l]) visit(A.segments[sa].target, r);
    if (!is_false_lit(*p.guard(Shape::Right, l, r)))
      for (int sb : B.outgoing[r]) visit(l, B.segments[sb].target);
  }
  RelVcs out;
  out.reachable.assign(reach.begin(), reach.end());
  auto emit = [&](int l, int r, Shape sh, const Segment* sa, const Segment* sb) {
    VC vc;
    vc.id = static_cast<int>(out.vcs.size());
    vc.relational = true;
    vc.source = p.pair_name(l, r);
    vc.source_left = l;
    vc.source_right = r;
    int tl = sa ? sa->target : l, tr = sb ? sb->target : r;
    vc.target = p.pair_name(tl, tr);
    vc.shape = to_string(sh);
    vc.hypothesis = mk_and(rel_annotation_at(p, ranno, rspec, l, r), p.guard(sh, l, r));
    vc.conclusion = rel_annotation_at(p, ranno, rspec, tl, tr);
    if (sa) vc.left = *sa;
    if (sb) vc.right = *sb;
    out.vcs.push_back(std::move(vc));
  };
  for (auto [l, r] : out.reachable) {
    if (!is_false_lit(*p.guard(Shape::Joint, l, r)))
      for (int sa : A.outgoing[l])
        for (int sb : B.outgoing[r]) emit(l, r, Shape::Joint, &A.segments[sa], &B.segments[sb]);
    if (!is_false_lit(*p.guard(Shape::Left, l, r)))
      for (int sa : A.outgoing[l]) emit(l, r, Shape::Left, &A.segments[sa], nullptr);
    if (!is_false_lit(*p.guard(Shape::Right, l, r)))
      for (int sb : B.outgoing[r]) emit(l, r, Shape::Right, nullptr, &B.segments[sb]);
  }
  if (p.kind == ProductKind::ThreeCondition) {
    for (auto [l, r] : out.reachable) {
      if (l == kFin && r == kFin) continue;
      ExprPtr any = F();
      for (Shape sh : {Shape::Joint, Shape::Left, Shape::Right}) any = mk_or(any, p.guard(sh, l, r));
      VC vc;
      vc.kind = VC::Kind::Coverage;
      vc.id = static_cast<int>(out.vcs.size());
      vc.relational = true;
      vc.source = vc.target = p.pair_name(l, r);
      vc.source_left = l;
      vc.source_right = r;
      vc.shape = "coverage";
      vc.hypothesis = rel_annotation_at(p, ranno, rspec, l, r);
      vc.conclusion = any;
      out.vcs.push_back(std::move(vc));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Direct checks

namespace {

using FinalCache = std::map<Store, FinalStores>;

const FinalStores& finals_of(FinalCache& cache, const Automaton& a, const Store& s, int fuel,
                             const Limits& lim) {
  auto it = cache.find(s);
  if (it == cache.end()) it = cache.emplace(s, final_stores(a.program, s, fuel, lim)).first;
  return it->second;
}

DirectResult direct(const Automaton& a, const Automaton& b, const Spec& rspec,
                    const std::vector<Store>& left_inits, const std::vector<Store>& right_inits,
                    int fuel, const Domain& d, bool non_stuck) {
  DirectResult res;
  FinalCache ca, cb;
  for (const Store& s : left_inits)
    for (const Store& s2 : right_inits) {
      if (!eval_rel(*rspec.pre, s, s2, d)) continue;
      const FinalStores& fa = finals_of(ca, a, s, fuel, d.limits);
      const FinalStores& fb = finals_of(cb, b, s2, fuel, d.limits);
      res.cutoff |= fa.cutoff || fb.cutoff;
      if (non_stuck && (fa.stuck || fb.stuck)) {
        res.holds = false;
        res.left = s;
        res.right = s2;
        res.reason = std::string(fa.stuck ? "left" : "right") + " run reaches a stuck state";
        return res;
      }
      for (const Store& t : fa.finals)
        for (const Store& t2 : fb.finals)
          if (!eval_rel(*rspec.post, t, t2, d)) {
            res.holds = false;
            res.left = s;
            res.right = s2;
            res.left_final = t;
            res.right_final = t2;
            res.reason = "terminated pair violates the postcondition";
            return res;
          }
    }
  return res;
}

}  // namespace

DirectResult check_rel_direct(const Automaton& a, const Automaton& b, const Spec& rspec,
                              const std::vector<Store>& left_inits,
                              const std::vector<Store>& right_inits, int fuel, const Domain& d) {
  return direct(a, b, rspec, left_inits, right_inits, fuel, d, false);
}

DirectResult check_rel_non_stuck(const Automaton& a, const Automaton& b, const Spec& rspec,
                                 const std::vector<Store>& left_inits,
                                 const std::vector<Store>& right_inits, int fuel, const Domain& d) {
  return direct(a, b, rspec, left_inits, right_inits, fuel, d, true);
}

std::optional<Probe> probe_failing(const PreProduct& p, const VC& vc, const Spec& rspec,
                                   const std::vector<Store>& left_inits,
                                   const std::vector<Store>& right_inits, int fuel,
                                   const Domain& d) {
  std::unordered_map<PState, int, PStateHash> index;
  std::vector<PState> states;
  std::vector<int> parent, depth;
  std::deque<int> todo;
  auto add = [&](const PState& s, int par) {
    if (index.count(s)) return;
    index.emplace(s, static_cast<int>(states.size()));
    states.push_back(s);
    parent.push_back(par);
    depth.push_back(par < 0 ? 0 : depth[par] + 1);
    todo.push_back(static_cast<int>(states.size()) - 1);
  };
  for (const Store& s : left_inits)
    for (const Store& s2 : right_inits)
      if (eval_rel(*rspec.pre, s, s2, d)) add({{kInit, s}, {kInit, s2}}, -1);
  while (!todo.empty()) {
    int k = todo.front();
    todo.pop_front();
    const PState st = states[k];
    if (st.left.label == vc.source_left && st.right.label == vc.source_right &&
        eval_rel(*vc.hypothesis, st.left.store, st.right.store, d)) {
      std::vector<Store> la = vc.left ? exec_segment(*vc.left, st.left.store, d.limits)
                                      : std::vector<Store>{st.left.store};
      std::vector<Store> ra = vc.right ? exec_segment(*vc.right, st.right.store, d.limits)
                                       : std::vector<Store>{st.right.store};
      for (const Store& t : la)
        for (const Store& t2 : ra)
          if (!eval_rel(*vc.conclusion, t, t2, d)) {
            Probe pr;
            for (int j = k; j >= 0; j = parent[j]) pr.trace.push_back(states[j]);
            std::reverse(pr.trace.begin(), pr.trace.end());
            pr.left_after = t;
            pr.right_after = t2;
            return pr;
          }
    }
    if (depth[k] >= fuel) continue;
    for (const PStep& n : product_successors(p, st, d)) add(n.to, k);
  }
  return std::nullopt;
}

std::vector<std::pair<Store, Store>> lockstep_replay(const CommandPtr& a, const CommandPtr& b,
                                                     const Store& s, const Store& s2, int fuel,
                                                     const Limits& lim) {
  auto ra = run_bounded(a, s, fuel, lim, 1);
  auto rb = run_bounded(b, s2, fuel, lim, 1);
  const auto& ta = ra.front().trace;
  const auto& tb = rb.front().trace;
  std::vector<std::pair<Store, Store>> out;
  std::size_t n = std::max(ta.size(), tb.size());
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({ta[std::min(i, ta.size() - 1)].store, tb[std::min(i, tb.size() - 1)].store});
  return out;
}

std::vector<Store> input_stores(const UniversePtr& u, const Domain& d) {
  std::vector<Store> out;
  Store s(u);
  const auto& vs = u->vars();
  for (std::size_t i = 0; i < vs.size(); ++i) s.values[i] = d.of(vs[i]).lo;
  for (;;) {
    out.push_back(s);
    std::size_t k = 0;
    while (k < vs.size() && s.values[k] == d.of(vs[k]).hi) {
      s.values[k] = d.of(vs[k]).lo;
      ++k;
    }
    if (k == vs.size()) return out;
    ++s.values[k];
  }
}

}  // namespace relv

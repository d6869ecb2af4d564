#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relv/discharge.hpp"
#include "relv/parse.hpp"
#include "relv/semantics.hpp"

namespace relv {

// ---------------------------------------------------------------------------
// S-expressions

struct SExpr {
  enum class Kind { Atom, String, List };
  Kind kind = Kind::List;
  std::string text;  // Atom, String
  std::vector<SExpr> items;
  int line = 0;
  int column = 0;

  bool is_atom(std::string_view s) const { return kind == Kind::Atom && text == s; }
  // `(head ...)`
  bool is_form(std::string_view head) const {
    return kind == Kind::List && !items.empty() && items[0].is_atom(head);
  }
};

// Exactly one top-level form; `;` starts a line comment.
SExpr parse_sexpr(std::string_view text);
std::string to_string(const SExpr& s);

// ---------------------------------------------------------------------------
// Judgments and derivations

struct Link {
  CommandPtr callee;
  std::vector<Var> params;
  Var result;
};

struct Judgment {
  bool relational = false;
  CommandPtr left;
  CommandPtr right;           // relational only
  std::optional<Link> link;   // unary `link left with callee`
  std::vector<Var> exists;    // unary: the precondition is `exists vars. pre`
  ExprPtr pre;
  ExprPtr post;
};

std::string to_string(const Judgment& j);

struct Derivation {
  std::string rule;
  Judgment conclusion;
  std::vector<Derivation> premises;
  std::vector<SExpr> side;  // raw side entries, e.g. `(frame "...")`
  std::string base_dir;     // for relative paths in side entries
  int line = 0;
};

// `(derivation (rule R) (conclusion J) (premises D...) (side E...))`.
// Judgments: `(unary C P Q)`, `(relational C C' R S)`; commands are program
// strings, `(file "path")` or `(link C C (params x..) (result z))`;
// a unary precondition may be `(exists (x..) P)`.
Derivation parse_derivation(std::string_view text, const std::string& base_dir = ".");
Derivation load_derivation(const std::string& path);

// Positioned failure while reading a proof file.
class ProofSyntaxError : public std::runtime_error {
 public:
  ProofSyntaxError(int line, int column, const std::string& msg);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// ---------------------------------------------------------------------------
// Rules

enum class Soundness {
  Basic,        // sound in basic semantics
  Termination,  // needs a termination assumption, checked by bounded runs
  Bounded,      // evidence is a bounded semantic or enumerative check
};

struct RuleInfo {
  std::string name;
  int arity;
  bool relational;  // kind of the conclusion
  Soundness soundness;
  bool core;        // listed in the rule catalog, as opposed to a leaf helper
};

const std::vector<RuleInfo>& rule_catalog();
const RuleInfo* find_rule(const std::string& name);
std::string to_string(Soundness s);

// Formula form used for rule matching: agreements and `both` expanded, side
// wrappers, converse and negation pushed to atoms, conjunction and
// disjunction chains flattened, sorted and deduplicated with literal units
// dropped.
ExprPtr normalize(const ExprPtr& f);
bool same_formula(const ExprPtr& a, const ExprPtr& b);

// ---------------------------------------------------------------------------
// Unconditional equivalence laws

enum class EquivLaw { SkipLeft, SkipRight, LoopSplit, LoopSeqSplit, LoopPeel, VarRename };

std::string to_string(EquivLaw l);
std::optional<EquivLaw> parse_equiv_law(const std::string& s);

struct LawStep {
  EquivLaw law;
  std::vector<int> at;  // child indices from the root
  ExprPtr arg;          // e0 for LoopSplit and LoopSeqSplit
  Var from, to;         // VarRename
  bool reverse = false;
};

class RewriteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Children: Seq/Choice/If 0 and 1, While and VarBlock 0.
CommandPtr rewrite_uequiv(const CommandPtr& c, const LawStep& step);

// Destuttered visible store traces of both commands from every store over
// their variables in `d`, up to `fuel` steps, coincide.
bool trace_equivalent(const CommandPtr& a, const CommandPtr& b, const Domain& d, int fuel);

// ---------------------------------------------------------------------------
// Checking

struct ProofResult {
  bool ok = true;
  std::string path;    // `root`, `root/1/0`, ... of the first failing node
  std::string rule;    // at that node
  std::string reason;
  std::vector<std::string> assumptions;  // termination assumptions used
  std::vector<std::string> rules_used;   // sorted, distinct
  int nodes = 0;

  std::string verdict() const;  // proved, proved-modulo-assumptions, error
};

// Side entries `(domain "lo..hi")`, `(bounds "lo..hi")`, `(fuel N)` and
// `(budget N)` override `d` for a node and its subtree.
ProofResult check_derivation(const Derivation& root, const Domain& d);

// Bounded semantic check of a judgment over `d`: terminated runs (pairs of
// runs) from stores satisfying the precondition satisfy the postcondition.
// `cutoff` marks runs cut off by fuel, which `holds` does not cover.
struct SemanticResult {
  bool holds = true;
  bool cutoff = false;
  std::string reason;
};
SemanticResult check_judgment_semantically(const Judgment& j, const Domain& d);

}  // namespace relv

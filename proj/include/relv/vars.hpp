#pragma once

#include <map>

#include "relv/ast.hpp"

namespace relv {

// Simultaneous substitution of program variables.
using Subst = std::map<Var, ExprPtr>;

ExprPtr substitute(const ExprPtr& e, const Subst& s);
ExprPtr subst_unary(const ExprPtr& p, Var x, const ExprPtr& e);

// Left occurrences follow `left`, right occurrences follow `right`.
// Agreements whose two sides would diverge are expanded to L(..) = R(..).
ExprPtr subst_rel(const ExprPtr& r, const Subst& left, const Subst& right);
ExprPtr subst_rel(const ExprPtr& r, Var x, const ExprPtr& e, Var x2, const ExprPtr& e2);

struct CommandVars {
  VarSet read;
  VarSet written;
};
CommandVars command_vars(const Command& c);
// read ∪ written
VarSet all_vars(const Command& c);

bool is_auxiliary(const VarSet& xs, const Command& c);
// Throws std::invalid_argument when xs is not auxiliary in c.
CommandPtr erase_aux(const VarSet& xs, const CommandPtr& c);

// Renames every occurrence of `from` (reads, targets and block locals).
CommandPtr rename_var(const CommandPtr& c, Var from, Var to);

// Definedness of a command expression under value bounds [lo, hi]: every
// divisor is nonzero and every non-variable integer subterm is in range.
// Conjuncts are ordered innermost first, so a left-to-right evaluation
// never computes a term whose operands are out of range.
ExprPtr definedness(const ExprPtr& e, Value lo, Value hi);
bool can_stick(const ExprPtr& e, Value lo, Value hi);

// Embeds a unary formula on one side of a relational formula.
ExprPtr embed(const ExprPtr& p, bool left);

// Removes the one-sided wrapper of a formula that mentions only one side;
// nullptr when it mentions the other side or agreements.
ExprPtr strip_side(const ExprPtr& r, bool left);

}  // namespace relv

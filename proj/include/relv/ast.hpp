#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relv {

using Value = std::int64_t;

// Interned identifier. Ids are process-wide and stable for the lifetime of
// the process; comparison is by id, ordering is by name.
class Var {
 public:
  Var() = default;
  explicit Var(std::string_view name);

  const std::string& name() const;
  std::uint32_t id() const { return id_; }
  bool valid() const { return id_ != 0; }

  friend bool operator==(Var a, Var b) { return a.id_ == b.id_; }
  friend bool operator!=(Var a, Var b) { return a.id_ != b.id_; }
  friend bool operator<(Var a, Var b) { return a.name() < b.name(); }

 private:
  std::uint32_t id_ = 0;
};

using VarSet = std::set<Var>;

enum class Sort { Int, Bool };

enum class Op {
  IntLit,
  BoolLit,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Not,
  And,
  Or,
  Implies,
  App,
  // Relational forms. They never occur in commands or unary formulas.
  Left,
  Right,
  Agree,
  AgreeAll,
  Both,
  Converse,
  Compose,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  Op op;
  Value value = 0;                 // IntLit, BoolLit (0/1)
  Var var;                         // Var
  std::string fn;                  // App
  std::vector<Var> vars;           // AgreeAll
  std::vector<ExprPtr> args;
  std::size_t hash = 0;
};

bool operator==(const Expr& a, const Expr& b);
inline bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
bool same(const ExprPtr& a, const ExprPtr& b);

namespace ex {
ExprPtr int_lit(Value v);
ExprPtr bool_lit(bool b);
ExprPtr var(Var v);
ExprPtr var(std::string_view name);
ExprPtr unary(Op op, ExprPtr a);
ExprPtr binary(Op op, ExprPtr a, ExprPtr b);
ExprPtr app(std::string fn, std::vector<ExprPtr> args);
ExprPtr agree_all(std::vector<Var> vars);

ExprPtr conj(ExprPtr a, ExprPtr b);
ExprPtr disj(ExprPtr a, ExprPtr b);
ExprPtr implies(ExprPtr a, ExprPtr b);
ExprPtr negate(ExprPtr a);
ExprPtr eq(ExprPtr a, ExprPtr b);
ExprPtr left(ExprPtr a);
ExprPtr right(ExprPtr a);
ExprPtr conj_all(const std::vector<ExprPtr>& parts);
ExprPtr disj_all(const std::vector<ExprPtr>& parts);
}  // namespace ex

bool is_true_lit(const Expr& e);
bool is_false_lit(const Expr& e);

// Raised for ill-sorted or ill-formed terms.
class TypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Sort sort_of(const Expr& e);
bool is_relational(const Expr& e);
bool mentions_functions(const Expr& e);
void collect_functions(const Expr& e, std::set<std::string>& out);

// Free program variables of a unary expression.
VarSet free_vars(const Expr& e);

// Free variables of a relational formula split by the store they refer to.
struct SidedVars {
  VarSet left;
  VarSet right;
};
SidedVars sided_vars(const Expr& r);

enum class Cmd { Skip, Assign, Havoc, Seq, If, While, Choice, VarBlock, CallSite };

struct Command;
using CommandPtr = std::shared_ptr<const Command>;

struct Command {
  Cmd kind;
  Var target;                // Assign, Havoc, CallSite result
  ExprPtr expr;              // Assign rhs, If/While guard
  CommandPtr first;          // Seq first, If then, While body, Choice left, VarBlock body
  CommandPtr second;         // Seq second, If else, Choice right
  std::vector<Var> vars;     // VarBlock locals, CallSite args
  std::size_t hash = 0;
};

bool operator==(const Command& a, const Command& b);
inline bool operator!=(const Command& a, const Command& b) { return !(a == b); }
bool same(const CommandPtr& a, const CommandPtr& b);

namespace cmd {
CommandPtr skip();
CommandPtr assign(Var x, ExprPtr e);
CommandPtr havoc(Var x);
CommandPtr seq(CommandPtr a, CommandPtr b);
CommandPtr if_(ExprPtr g, CommandPtr t, CommandPtr e);
CommandPtr while_(ExprPtr g, CommandPtr body);
CommandPtr choice(CommandPtr a, CommandPtr b);
CommandPtr var_block(std::vector<Var> locals, CommandPtr body);
CommandPtr call(Var result, std::vector<Var> args);
}  // namespace cmd

// Well-formedness of a command: guards are boolean, right-hand sides are
// integer, no function applications, distinct block locals.
void check_command(const Command& c);
bool contains_calls(const Command& c);
bool is_deterministic(const Command& c);

std::string to_string(const Expr& e);
std::string to_string(const Command& c);
std::string to_string(Sort s);

}  // namespace relv

template <>
struct std::hash<relv::Var> {
  std::size_t operator()(relv::Var v) const noexcept { return v.id(); }
};

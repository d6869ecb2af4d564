#pragma once

// Seeded generators for property tests.

#include <random>
#include <vector>

#include "relv/ast.hpp"

namespace relv::gen {

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  int below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine); }
  Value range(Value lo, Value hi) { return std::uniform_int_distribution<Value>(lo, hi)(engine); }
  bool coin(int percent = 50) { return below(100) < percent; }
  template <class T>
  const T& pick(const std::vector<T>& xs) {
    return xs[below(static_cast<int>(xs.size()))];
  }
};

inline ExprPtr int_expr(Rng& r, const std::vector<Var>& vars, int depth, bool divisions = true) {
  if (depth <= 0 || r.coin(35)) {
    if (r.coin(60)) return ex::var(r.pick(vars));
    return ex::int_lit(r.range(-3, 3));
  }
  int k = r.below(divisions ? 6 : 4);
  if (k == 0) return ex::unary(Op::Neg, int_expr(r, vars, depth - 1, divisions));
  static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Add, Op::Div, Op::Mod};
  return ex::binary(ops[k], int_expr(r, vars, depth - 1, divisions),
                    int_expr(r, vars, depth - 1, divisions));
}

inline ExprPtr bool_expr(Rng& r, const std::vector<Var>& vars, int depth, bool divisions = true) {
  if (depth <= 0 || r.coin(40)) {
    if (r.coin(8)) return ex::bool_lit(r.coin());
    static const Op cmp[] = {Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge};
    return ex::binary(cmp[r.below(6)], int_expr(r, vars, 1, divisions),
                      int_expr(r, vars, 1, divisions));
  }
  switch (r.below(5)) {
    case 0:
      return ex::negate(bool_expr(r, vars, depth - 1, divisions));
    case 1:
      return ex::conj(bool_expr(r, vars, depth - 1, divisions),
                      bool_expr(r, vars, depth - 1, divisions));
    case 2:
      return ex::disj(bool_expr(r, vars, depth - 1, divisions),
                      bool_expr(r, vars, depth - 1, divisions));
    case 3:
      return ex::implies(bool_expr(r, vars, depth - 1, divisions),
                         bool_expr(r, vars, depth - 1, divisions));
    default:
      return ex::binary(r.coin() ? Op::Eq : Op::Ne, bool_expr(r, vars, 0, divisions),
                        bool_expr(r, vars, 0, divisions));
  }
}

// Uses only the relational forms that need no middle-store domain unless
// `compose` is set.
inline ExprPtr rel_formula(Rng& r, const std::vector<Var>& vars, int depth, bool compose = false) {
  if (depth <= 0 || r.coin(30)) {
    switch (r.below(6)) {
      case 0:
        return ex::left(bool_expr(r, vars, 1));
      case 1:
        return ex::right(bool_expr(r, vars, 1));
      case 2:
        return ex::unary(Op::Agree, int_expr(r, vars, 1));
      case 3: {
        std::vector<Var> vs;
        for (Var v : vars)
          if (r.coin()) vs.push_back(v);
        return ex::agree_all(vs);
      }
      case 4:
        return ex::unary(Op::Both, bool_expr(r, vars, 1));
      default: {
        static const Op cmp[] = {Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge};
        return ex::binary(cmp[r.below(6)], ex::left(int_expr(r, vars, 1)),
                          ex::binary(Op::Add, ex::right(int_expr(r, vars, 1)),
                                     ex::int_lit(r.range(-1, 1))));
      }
    }
  }
  switch (r.below(compose ? 6 : 5)) {
    case 0:
      return ex::negate(rel_formula(r, vars, depth - 1, compose));
    case 1:
      return ex::conj(rel_formula(r, vars, depth - 1, compose),
                      rel_formula(r, vars, depth - 1, compose));
    case 2:
      return ex::disj(rel_formula(r, vars, depth - 1, compose),
                      rel_formula(r, vars, depth - 1, compose));
    case 3:
      return ex::implies(rel_formula(r, vars, depth - 1, compose),
                         rel_formula(r, vars, depth - 1, compose));
    case 4:
      return ex::unary(Op::Converse, rel_formula(r, vars, depth - 1, compose));
    default:
      return ex::binary(Op::Compose, rel_formula(r, vars, 0), rel_formula(r, vars, 0));
  }
}

struct CommandShape {
  bool loops = true;
  bool nondet = true;
  bool blocks = true;
  bool divisions = true;
};

inline CommandPtr command(Rng& r, const std::vector<Var>& vars, int depth,
                          const CommandShape& shape = {}) {
  if (depth <= 0 || r.coin(25)) {
    int k = r.below(10);
    if (k == 0) return cmd::skip();
    if (k == 1 && shape.nondet) return cmd::havoc(r.pick(vars));
    return cmd::assign(r.pick(vars), int_expr(r, vars, 2, shape.divisions));
  }
  switch (r.below(6)) {
    case 0:
    case 1:
      return cmd::seq(command(r, vars, depth - 1, shape), command(r, vars, depth - 1, shape));
    case 2:
      return cmd::if_(bool_expr(r, vars, 1, shape.divisions), command(r, vars, depth - 1, shape),
                      r.coin(30) ? cmd::skip() : command(r, vars, depth - 1, shape));
    case 3:
      if (shape.loops)
        return cmd::while_(bool_expr(r, vars, 1, shape.divisions),
                           command(r, vars, depth - 1, shape));
      return command(r, vars, depth - 1, shape);
    case 4:
      if (shape.nondet)
        return cmd::choice(command(r, vars, depth - 1, shape), command(r, vars, depth - 1, shape));
      return command(r, vars, depth - 1, shape);
    default:
      if (shape.blocks) return cmd::var_block({r.pick(vars)}, command(r, vars, depth - 1, shape));
      return command(r, vars, depth - 1, shape);
  }
}

}  // namespace relv::gen

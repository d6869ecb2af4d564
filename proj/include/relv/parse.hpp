#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "relv/ast.hpp"

namespace relv {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& msg);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

CommandPtr parse_program(std::string_view text);
ExprPtr parse_formula(std::string_view text);
ExprPtr parse_rel_formula(std::string_view text);
// Integer or boolean expression over one store (no relational atoms).
ExprPtr parse_expr(std::string_view text);

struct Spec {
  ExprPtr pre;
  ExprPtr post;
};

using Annotation = std::map<std::string, ExprPtr>;
using PairLabel = std::pair<std::string, std::string>;
using RelAnnotation = std::map<PairLabel, ExprPtr>;

// Alignment conditions keyed by `l`, `r`, `b` or `ac`. Pair-qualified
// entries override the defaults at that cutpoint pair only.
struct Alignment {
  std::map<std::string, ExprPtr> defaults;
  std::map<PairLabel, std::map<std::string, ExprPtr>> by_pair;

  // Condition `key` at `at`; nullptr when neither level defines it.
  ExprPtr lookup(const std::string& key, const PairLabel& at) const;
};

Spec parse_spec(std::string_view text, bool relational);
Annotation parse_annotation(std::string_view text);
RelAnnotation parse_rel_annotation(std::string_view text);
Alignment parse_alignment(std::string_view text);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);

}  // namespace relv

#include "relv/parse.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace relv {

ParseError::ParseError(int line, int column, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + msg),
      line_(line),
      column_(column) {}

namespace {

const std::set<std::string, std::less<>> kReserved = {
    "skip", "havoc", "if",   "then", "else", "fi",   "while", "do",   "od",   "choice",
    "or",   "end",   "var",  "in",   "ni",   "call", "div",   "mod",  "and",  "not",
    "true", "false", "L",    "R",    "A",    "AA",   "both",  "conv", "comp"};

enum class Tok { Ident, Int, Sym, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
};

// Comments are blanked out (newlines kept) so positions stay exact.
std::string strip_comments(std::string_view text) {
  std::string out(text);
  int depth = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i + 1 < out.size() && out[i] == '(' && out[i + 1] == '*') {
      ++depth;
      out[i] = out[i + 1] = ' ';
      ++i;
    } else if (depth > 0 && i + 1 < out.size() && out[i] == '*' && out[i + 1] == ')') {
      --depth;
      out[i] = out[i + 1] = ' ';
      ++i;
    } else if (depth > 0 && out[i] != '\n') {
      out[i] = ' ';
    }
  }
  return out;
}

std::vector<Token> lex(std::string_view raw, int line0) {
  std::string text = strip_comments(raw);
  std::vector<Token> toks;
  int line = line0, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static const char* kSyms[] = {":=", "<>", "<=", ">=", "=>", "/\\", "\\/", "(", ")", "{",
                                "}",  ",",  ";",  ":",  "+",  "-",   "*",   "=", "<", ">",
                                "~",  "[",  "]"};
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    int tl = line, tc = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      toks.push_back({Tok::Ident, text.substr(i, j - i), tl, tc});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      toks.push_back({Tok::Int, text.substr(i, j - i), tl, tc});
      advance(j - i);
      continue;
    }
    bool matched = false;
    for (const char* s : kSyms) {
      std::string_view sv(s);
      if (text.compare(i, sv.size(), sv) == 0) {
        toks.push_back({Tok::Sym, std::string(sv), tl, tc});
        advance(sv.size());
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError(tl, tc, std::string("unexpected character '") + c + "'");
  }
  toks.push_back({Tok::End, "", line, col});
  return toks;
}

enum class Mode { Unary, Relational };

class Parser {
 public:
  Parser(std::string_view text, int line0 = 1) : toks_(lex(text, line0)) {}

  CommandPtr program() {
    CommandPtr c = sequence();
    expect_end();
    return c;
  }

  ExprPtr formula(Mode mode) {
    const Token& start = peek();
    ExprPtr e = expr(mode);
    expect_end();
    check_bool(e, start, "formula");
    return e;
  }

  ExprPtr any_expr() {
    ExprPtr e = expr(Mode::Unary);
    expect_end();
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool no_word_or_ = false;

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at(std::string_view text) const {
    const Token& t = peek();
    return (t.kind == Tok::Sym || t.kind == Tok::Ident) && t.text == text;
  }
  bool accept(std::string_view text) {
    if (!at(text)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.col, msg);
  }
  static std::string describe(const Token& t) {
    return t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
  }
  void expect(std::string_view text) {
    if (!accept(text)) fail(peek(), "expected '" + std::string(text) + "', found " + describe(peek()));
  }
  void expect_end() {
    if (peek().kind != Tok::End) fail(peek(), "unexpected " + describe(peek()));
  }

  Var variable() {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(t, "expected variable, found " + describe(t));
    if (kReserved.count(t.text)) fail(t, "reserved word `" + t.text + "` used as variable");
    next();
    return Var(t.text);
  }

  std::vector<Var> variable_list() {
    std::vector<Var> vs{variable()};
    while (accept(",")) vs.push_back(variable());
    return vs;
  }

  void check_bool(const ExprPtr& e, const Token& where, const char* what) {
    Sort s;
    try {
      s = sort_of(*e);
    } catch (const TypeError& err) {
      fail(where, err.what());
    }
    if (s != Sort::Bool) fail(where, std::string(what) + " must be boolean-typed");
  }

  void check_command_expr(const ExprPtr& e, const Token& where, Sort want, const char* what) {
    if (mentions_functions(*e)) fail(where, "function symbols never appear in commands");
    Sort s;
    try {
      s = sort_of(*e);
    } catch (const TypeError& err) {
      fail(where, err.what());
    }
    if (s != want)
      fail(where, std::string(what) + " must be " +
                      (want == Sort::Bool ? "boolean" : "integer") + "-typed");
  }

  // --- commands -----------------------------------------------------------

  static bool ends_block(const Token& t) {
    if (t.kind == Tok::End) return true;
    if (t.kind == Tok::Sym) return t.text == ")";
    return t.kind == Tok::Ident &&
           (t.text == "fi" || t.text == "od" || t.text == "else" || t.text == "or" ||
            t.text == "end" || t.text == "ni");
  }

  CommandPtr sequence() {
    CommandPtr first = statement();
    if (accept(";")) {
      if (ends_block(peek())) return first;
      return cmd::seq(first, sequence());
    }
    return first;
  }

  ExprPtr command_expr() {
    bool saved = no_word_or_;
    no_word_or_ = true;
    ExprPtr e = expr(Mode::Unary);
    no_word_or_ = saved;
    return e;
  }

  CommandPtr statement() {
    const Token& t = peek();
    if (accept("(")) {
      CommandPtr c = sequence();
      expect(")");
      return c;
    }
    if (accept("skip")) return cmd::skip();
    if (accept("havoc")) return cmd::havoc(variable());
    if (accept("if")) {
      const Token& gt = peek();
      ExprPtr g = expr(Mode::Unary);
      check_command_expr(g, gt, Sort::Bool, "guard");
      expect("then");
      CommandPtr then_c = sequence();
      CommandPtr else_c = cmd::skip();
      if (accept("else")) else_c = sequence();
      expect("fi");
      return cmd::if_(g, then_c, else_c);
    }
    if (accept("while")) {
      const Token& gt = peek();
      ExprPtr g = expr(Mode::Unary);
      check_command_expr(g, gt, Sort::Bool, "guard");
      expect("do");
      CommandPtr body = sequence();
      expect("od");
      return cmd::while_(g, body);
    }
    if (accept("choice")) {
      CommandPtr a = sequence();
      expect("or");
      CommandPtr b = sequence();
      expect("end");
      return cmd::choice(a, b);
    }
    if (accept("var")) {
      const Token& vt = peek();
      std::vector<Var> locals = variable_list();
      VarSet seen;
      for (Var v : locals)
        if (!seen.insert(v).second) fail(vt, "duplicate block local `" + v.name() + "`");
      expect("in");
      CommandPtr body = sequence();
      expect("ni");
      return cmd::var_block(std::move(locals), body);
    }
    if (t.kind == Tok::Ident) {
      Var x = variable();
      expect(":=");
      if (accept("call")) {
        expect("(");
        std::vector<Var> args;
        if (!at(")")) args = variable_list();
        expect(")");
        return cmd::call(x, std::move(args));
      }
      const Token& et = peek();
      ExprPtr e = command_expr();
      check_command_expr(e, et, Sort::Int, "right-hand side");
      return cmd::assign(x, e);
    }
    fail(t, "expected statement, found " + describe(t));
  }

  // --- expressions --------------------------------------------------------

  ExprPtr expr(Mode m) {
    ExprPtr lhs = disjunction(m);
    if (accept("=>")) return ex::implies(lhs, expr(m));
    return lhs;
  }

  ExprPtr disjunction(Mode m) {
    ExprPtr e = conjunction(m);
    while (at("\\/") || (!no_word_or_ && at("or"))) {
      next();
      e = ex::disj(e, conjunction(m));
    }
    return e;
  }

  ExprPtr conjunction(Mode m) {
    ExprPtr e = negation(m);
    while (at("/\\") || at("and")) {
      next();
      e = ex::conj(e, negation(m));
    }
    return e;
  }

  ExprPtr negation(Mode m) {
    if (accept("~") || accept("not")) return ex::negate(negation(m));
    return comparison(m);
  }

  ExprPtr comparison(Mode m) {
    ExprPtr lhs = sum(m);
    static const std::pair<const char*, Op> kOps[] = {{"=", Op::Eq}, {"<>", Op::Ne},
                                                      {"<=", Op::Le}, {">=", Op::Ge},
                                                      {"<", Op::Lt},  {">", Op::Gt}};
    for (auto [text, op] : kOps) {
      if (peek().kind == Tok::Sym && peek().text == text) {
        next();
        ExprPtr rhs = sum(m);
        for (auto [t2, op2] : kOps)
          if (peek().kind == Tok::Sym && peek().text == t2)
            fail(peek(), "comparison operators do not associate; add parentheses");
        return ex::binary(op, lhs, rhs);
      }
    }
    return lhs;
  }

  ExprPtr sum(Mode m) {
    ExprPtr e = product(m);
    for (;;) {
      if (accept("+"))
        e = ex::binary(Op::Add, e, product(m));
      else if (accept("-"))
        e = ex::binary(Op::Sub, e, product(m));
      else
        return e;
    }
  }

  ExprPtr product(Mode m) {
    ExprPtr e = unary_minus(m);
    for (;;) {
      if (accept("*"))
        e = ex::binary(Op::Mul, e, unary_minus(m));
      else if (accept("div"))
        e = ex::binary(Op::Div, e, unary_minus(m));
      else if (accept("mod"))
        e = ex::binary(Op::Mod, e, unary_minus(m));
      else
        return e;
    }
  }

  ExprPtr unary_minus(Mode m) {
    if (accept("-")) {
      if (peek().kind == Tok::Int) return int_literal(true);
      return ex::unary(Op::Neg, unary_minus(m));
    }
    return atom(m);
  }

  ExprPtr int_literal(bool negative) {
    const Token& t = next();
    std::string digits = (negative ? "-" : "") + t.text;
    Value v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      fail(t, "integer literal out of range");
    return ex::int_lit(v);
  }

  ExprPtr nested(Mode inner) {
    bool saved = no_word_or_;
    no_word_or_ = false;
    ExprPtr e = expr(inner);
    no_word_or_ = saved;
    return e;
  }

  ExprPtr atom(Mode m) {
    const Token& t = peek();
    if (t.kind == Tok::Int) return int_literal(false);
    if (accept("true")) return ex::bool_lit(true);
    if (accept("false")) return ex::bool_lit(false);
    if (accept("(")) {
      ExprPtr e = nested(m);
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail(t, "expected expression, found " + describe(t));
    static const std::pair<const char*, Op> kSided[] = {
        {"L", Op::Left}, {"R", Op::Right}, {"A", Op::Agree}, {"both", Op::Both}};
    for (auto [name, op] : kSided) {
      if (t.text == name && peek(1).kind == Tok::Sym && peek(1).text == "(") {
        if (m != Mode::Relational) fail(t, "relational atom in unary context");
        next();
        next();
        ExprPtr e = nested(Mode::Unary);
        expect(")");
        return ex::unary(op, e);
      }
    }
    if (t.text == "AA") {
      if (m != Mode::Relational) fail(t, "relational atom in unary context");
      next();
      expect("{");
      std::vector<Var> vs;
      if (!at("}")) vs = variable_list();
      expect("}");
      return ex::agree_all(std::move(vs));
    }
    if (t.text == "conv" || t.text == "comp") {
      if (m != Mode::Relational) fail(t, "relational operator in unary context");
      bool compose = t.text == "comp";
      next();
      expect("(");
      ExprPtr a = nested(Mode::Relational);
      if (compose) {
        expect(",");
        ExprPtr b = nested(Mode::Relational);
        expect(")");
        return ex::binary(Op::Compose, a, b);
      }
      expect(")");
      return ex::unary(Op::Converse, a);
    }
    if (kReserved.count(t.text)) fail(t, "reserved word `" + t.text + "` used as variable");
    next();
    if (accept("(")) {
      std::vector<ExprPtr> args;
      if (!at(")")) {
        args.push_back(nested(m));
        while (accept(",")) args.push_back(nested(m));
      }
      expect(")");
      return ex::app(t.text, std::move(args));
    }
    if (m == Mode::Relational)
      fail(t, "bare variable `" + t.text + "` in relational formula; use L(" + t.text + ") or R(" +
                  t.text + ")");
    return ex::var(Var(t.text));
  }
};

// A keyed entry of a line-oriented file: `key: text`, continued by any
// following lines that do not start a new key.
struct Entry {
  std::string key;
  std::string text;
  int line;
};

std::vector<Entry> split_entries(std::string_view raw, const std::regex& key_re) {
  std::string text = strip_comments(raw);
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::smatch m;
    if (std::regex_search(line, m, key_re)) {
      out.push_back({m[1].str(), m.suffix().str(), lineno});
    } else if (line.find_first_not_of(" \t\r") == std::string::npos) {
      if (!out.empty()) out.back().text += "\n";
    } else if (out.empty()) {
      throw ParseError(lineno, 1, "expected a `key:` line");
    } else {
      out.back().text += "\n" + line;
    }
  }
  return out;
}

ExprPtr parse_entry(const Entry& e, Mode m) {
  if (e.text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ParseError(e.line, 1, "empty formula for `" + e.key + "`");
  Parser p(e.text, e.line);
  return p.formula(m);
}

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

PairLabel split_pair(const std::string& key) {
  auto comma = key.find(',');
  return {trim(key.substr(1, comma - 1)), trim(key.substr(comma + 1, key.size() - comma - 2))};
}

}  // namespace

CommandPtr parse_program(std::string_view text) { return Parser(text).program(); }
ExprPtr parse_formula(std::string_view text) { return Parser(text).formula(Mode::Unary); }
ExprPtr parse_rel_formula(std::string_view text) {
  return Parser(text).formula(Mode::Relational);
}
ExprPtr parse_expr(std::string_view text) { return Parser(text).any_expr(); }

Spec parse_spec(std::string_view text, bool relational) {
  static const std::regex key_re(R"(^\s*(pre|post)\s*:(?!=))");
  Spec spec;
  for (const Entry& e : split_entries(text, key_re)) {
    ExprPtr f = parse_entry(e, relational ? Mode::Relational : Mode::Unary);
    ExprPtr& slot = e.key == "pre" ? spec.pre : spec.post;
    if (slot) throw ParseError(e.line, 1, "duplicate `" + e.key + "`");
    slot = f;
  }
  if (!spec.pre) spec.pre = ex::bool_lit(true);
  if (!spec.post) throw ParseError(1, 1, "spec has no `post:` line");
  return spec;
}

Annotation parse_annotation(std::string_view text) {
  static const std::regex key_re(R"(^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:(?!=))");
  Annotation out;
  for (const Entry& e : split_entries(text, key_re)) {
    if (!out.emplace(e.key, parse_entry(e, Mode::Unary)).second)
      throw ParseError(e.line, 1, "duplicate annotation for `" + e.key + "`");
  }
  return out;
}

RelAnnotation parse_rel_annotation(std::string_view text) {
  static const std::regex key_re(
      R"(^\s*(\(\s*[A-Za-z_][A-Za-z0-9_]*\s*,\s*[A-Za-z_][A-Za-z0-9_]*\s*\))\s*:(?!=))");
  RelAnnotation out;
  for (const Entry& e : split_entries(text, key_re)) {
    if (!out.emplace(split_pair(e.key), parse_entry(e, Mode::Relational)).second)
      throw ParseError(e.line, 1, "duplicate annotation for `" + e.key + "`");
  }
  return out;
}

Alignment parse_alignment(std::string_view text) {
  static const std::regex key_re(
      R"(^\s*((?:\(\s*[A-Za-z_][A-Za-z0-9_]*\s*,\s*[A-Za-z_][A-Za-z0-9_]*\s*\)\s*)?(?:l|r|b|ac))\s*:(?!=))");
  Alignment out;
  for (const Entry& e : split_entries(text, key_re)) {
    ExprPtr f = parse_entry(e, Mode::Relational);
    std::string key = e.key;
    std::map<std::string, ExprPtr>* target = &out.defaults;
    if (key[0] == '(') {
      auto close = key.find(')');
      target = &out.by_pair[split_pair(key.substr(0, close + 1))];
      key = trim(key.substr(close + 1));
    }
    if (!target->emplace(key, f).second)
      throw ParseError(e.line, 1, "duplicate alignment condition `" + e.key + "`");
  }
  return out;
}

ExprPtr Alignment::lookup(const std::string& key, const PairLabel& at) const {
  if (auto it = by_pair.find(at); it != by_pair.end())
    if (auto jt = it->second.find(key); jt != it->second.end()) return jt->second;
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  return nullptr;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open `" + path + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace relv

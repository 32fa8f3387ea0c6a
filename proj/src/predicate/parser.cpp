#include <cctype>
#include <charconv>
#include <map>

#include "sarc/predicate.hpp"

namespace sarc::predicate {

PredicateError::PredicateError(ErrorKind kind, std::size_t position, const std::string& message)
    : std::runtime_error(message + " (at offset " + std::to_string(position) + ")"),
      kind_(kind),
      position_(position) {}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::or_: return "||";
    case BinaryOp::and_: return "&&";
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
  }
  return "?";
}

namespace {

enum class Tok { end, number, duration, string, ident, kw_true, kw_false, kw_null, op, lparen, rparen, comma };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0;
  std::size_t pos = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      std::from_chars(s.data() + i, s.data() + j, t.number);
      t.text = s.substr(i, j - i);
      t.kind = Tok::number;
      if (j < s.size() && std::string_view("smhd").find(s[j]) != std::string_view::npos &&
          (j + 1 >= s.size() || !ident_char(s[j + 1]))) {
        t.kind = Tok::duration;
        t.text = s.substr(i, j + 1 - i);
        ++j;
      } else if (j < s.size() && ident_char(s[j])) {
        throw PredicateError(ErrorKind::syntax, j, "malformed number literal");
      }
      i = j;
    } else if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      std::string val;
      while (j < s.size() && s[j] != c) {
        if (s[j] == '\\' && j + 1 < s.size()) ++j;
        val += s[j++];
      }
      if (j >= s.size()) throw PredicateError(ErrorKind::syntax, i, "unterminated string literal");
      t.kind = Tok::string;
      t.text = val;
      i = j + 1;
    } else if (ident_start(c)) {
      std::size_t j = i;
      for (;;) {
        while (j < s.size() && ident_char(s[j])) ++j;
        if (j + 1 < s.size() && s[j] == '.' && ident_start(s[j + 1])) {
          ++j;
          continue;
        }
        break;
      }
      t.text = s.substr(i, j - i);
      if (t.text == "true") t.kind = Tok::kw_true;
      else if (t.text == "false") t.kind = Tok::kw_false;
      else if (t.text == "null") t.kind = Tok::kw_null;
      else t.kind = Tok::ident;
      i = j;
    } else if (c == '(') {
      t.kind = Tok::lparen;
      ++i;
    } else if (c == ')') {
      t.kind = Tok::rparen;
      ++i;
    } else if (c == ',') {
      t.kind = Tok::comma;
      ++i;
    } else {
      static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||"};
      bool matched = false;
      for (const char* op : two) {
        if (s.compare(i, 2, op) == 0) {
          t.text = op;
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("<>!+-*/").find(c) == std::string_view::npos)
          throw PredicateError(ErrorKind::syntax, i, std::string("unexpected character '") + c + "'");
        t.text = std::string(1, c);
        ++i;
      }
      t.kind = Tok::op;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

struct BuiltinInfo {
  int min_args;
  int max_args;  // -1 for variadic
};

const std::map<std::string, BuiltinInfo>& predicate_builtins() {
  static const std::map<std::string, BuiltinInfo> b = {
      {"tool", {1, 1}}, {"amount", {1, 1}}, {"rolling_24h_spend", {1, 1}}, {"age", {1, 1}}, {"is_null", {1, 1}}};
  return b;
}

const std::map<std::string, BuiltinInfo>& formula_builtins() {
  static const std::map<std::string, BuiltinInfo> b = {
      {"exp", {1, 1}}, {"log", {1, 1}}, {"abs", {1, 1}}, {"min", {2, -1}}, {"max", {2, -1}}};
  return b;
}

}  // namespace

class Parser {
 public:
  Parser(const std::string& src, Dialect d) : toks_(lex(src)) {
    expr_.source_ = src;
    expr_.dialect_ = d;
  }

  PredicateExpr run() {
    if (peek().kind == Tok::end) throw PredicateError(ErrorKind::syntax, 0, "empty expression");
    expr_.root_ = parse_or();
    if (peek().kind != Tok::end) throw PredicateError(ErrorKind::syntax, peek().pos, "unexpected trailing input");
    return std::move(expr_);
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  Token next() { return toks_[i_++]; }
  bool at_op(const char* op) const { return peek().kind == Tok::op && peek().text == op; }

  std::size_t add(Node n) {
    expr_.nodes_.push_back(std::move(n));
    return expr_.nodes_.size() - 1;
  }

  std::size_t binary(BinaryOp op, std::size_t lhs, std::size_t rhs, std::size_t pos) {
    Node n;
    n.kind = NodeKind::binary;
    n.op = op;
    n.children = {lhs, rhs};
    n.position = pos;
    return add(std::move(n));
  }

  std::size_t parse_or() {
    auto lhs = parse_and();
    while (at_op("||")) {
      auto pos = next().pos;
      lhs = binary(BinaryOp::or_, lhs, parse_and(), pos);
    }
    return lhs;
  }

  std::size_t parse_and() {
    auto lhs = parse_cmp();
    while (at_op("&&")) {
      auto pos = next().pos;
      lhs = binary(BinaryOp::and_, lhs, parse_cmp(), pos);
    }
    return lhs;
  }

  std::size_t parse_cmp() {
    auto lhs = parse_sum();
    static const std::map<std::string, BinaryOp> ops = {{"==", BinaryOp::eq}, {"!=", BinaryOp::ne},
                                                         {"<", BinaryOp::lt},  {"<=", BinaryOp::le},
                                                         {">", BinaryOp::gt},  {">=", BinaryOp::ge}};
    if (peek().kind == Tok::op) {
      auto it = ops.find(peek().text);
      if (it != ops.end()) {
        auto pos = next().pos;
        return binary(it->second, lhs, parse_sum(), pos);
      }
    }
    return lhs;
  }

  std::size_t parse_sum() {
    auto lhs = parse_term();
    while (at_op("+") || at_op("-")) {
      auto t = next();
      lhs = binary(t.text == "+" ? BinaryOp::add : BinaryOp::sub, lhs, parse_term(), t.pos);
    }
    return lhs;
  }

  std::size_t parse_term() {
    auto lhs = parse_unary();
    while (at_op("*") || at_op("/")) {
      auto t = next();
      lhs = binary(t.text == "*" ? BinaryOp::mul : BinaryOp::div, lhs, parse_unary(), t.pos);
    }
    return lhs;
  }

  std::size_t parse_unary() {
    if (at_op("!")) {
      auto pos = next().pos;
      Node n;
      n.kind = NodeKind::logical_not;
      n.position = pos;
      n.children = {parse_unary()};
      return add(std::move(n));
    }
    return parse_atom();
  }

  std::size_t parse_atom() {
    Token t = next();
    Node n;
    n.position = t.pos;
    switch (t.kind) {
      case Tok::number:
        n.literal = Value(t.number);
        return add(std::move(n));
      case Tok::duration:
        n.literal = Value(Duration{parse_duration_text(t.text)});
        return add(std::move(n));
      case Tok::string:
        n.literal = Value(t.text);
        return add(std::move(n));
      case Tok::kw_true:
      case Tok::kw_false:
        n.literal = Value(t.kind == Tok::kw_true);
        return add(std::move(n));
      case Tok::kw_null:
        n.literal = Value();
        return add(std::move(n));
      case Tok::lparen: {
        auto inner = parse_or();
        expect(Tok::rparen, "')'");
        return inner;
      }
      case Tok::ident:
        if (peek().kind == Tok::lparen) return parse_call(t);
        n.kind = NodeKind::path;
        n.name = t.text;
        if (expr_.dialect_ == Dialect::predicate && t.text == "action")
          throw PredicateError(ErrorKind::syntax, t.pos, "bare 'action' is only valid as a tool()/amount() argument");
        return add(std::move(n));
      default:
        throw PredicateError(ErrorKind::syntax, t.pos, "expected an operand");
    }
  }

  std::size_t parse_call(const Token& name) {
    const auto& table = expr_.dialect_ == Dialect::predicate ? predicate_builtins() : formula_builtins();
    auto it = table.find(name.text);
    if (it == table.end()) throw PredicateError(ErrorKind::unknown_builtin, name.pos, "unknown builtin '" + name.text + "'");
    next();  // (
    Node n;
    n.kind = NodeKind::call;
    n.name = name.text;
    n.position = name.pos;
    bool action_arg = expr_.dialect_ == Dialect::predicate && (name.text == "tool" || name.text == "amount");
    int argc = 0;
    if (peek().kind != Tok::rparen) {
      for (;;) {
        if (action_arg) {
          Token a = next();
          if (a.kind != Tok::ident || a.text != "action")
            throw PredicateError(ErrorKind::syntax, a.pos, name.text + "() takes the action as its argument");
        } else {
          n.children.push_back(parse_or());
        }
        ++argc;
        if (peek().kind != Tok::comma) break;
        next();
      }
    }
    expect(Tok::rparen, "')'");
    const auto& info = it->second;
    if (argc < info.min_args || (info.max_args >= 0 && argc > info.max_args))
      throw PredicateError(ErrorKind::syntax, name.pos, "wrong number of arguments to " + name.text + "()");
    return add(std::move(n));
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) throw PredicateError(ErrorKind::syntax, peek().pos, std::string("expected ") + what);
    next();
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  PredicateExpr expr_;
};

PredicateExpr parse_predicate(const std::string& source) { return Parser(source, Dialect::predicate).run(); }
PredicateExpr parse_formula(const std::string& source) { return Parser(source, Dialect::formula).run(); }

}  // namespace sarc::predicate

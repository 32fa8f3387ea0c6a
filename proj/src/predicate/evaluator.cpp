#include <algorithm>
#include <cmath>
#include <variant>

#include "sarc/predicate.hpp"

namespace sarc::predicate {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::fired: return "fired";
    case Outcome::not_fired: return "not_fired";
    case Outcome::undecidable: return "undecidable";
  }
  return "?";
}

// ── Context ──

bool EvalContext::has_path(const std::string& path) const { return lookup(path).has_value(); }

std::optional<Value> EvalContext::lookup(const std::string& path) const {
  if (path == "action.tool") {
    if (!action) return std::nullopt;
    return Value(action->tool);
  }
  static const std::string args_prefix = "action.args.";
  if (path.rfind(args_prefix, 0) == 0) {
    if (!action) return std::nullopt;
    auto it = action->args.find(path.substr(args_prefix.size()));
    if (it == action->args.end()) return std::nullopt;
    return it->second;
  }
  auto it = state_fields.find(path);
  if (it == state_fields.end()) return std::nullopt;
  return it->second;
}

// ── Static analysis ──

FreePaths free_paths(const PredicateExpr& expr) {
  FreePaths out;
  for (const auto& n : expr.nodes()) {
    if (n.kind == NodeKind::path) out.paths.insert(n.name);
    if (n.kind != NodeKind::call) continue;
    if (n.name == "tool") out.paths.insert("action.tool");
    else if (n.name == "amount") out.paths.insert("action.args.amount");
    else if (n.name == "rolling_24h_spend") out.rolling_window = true;
    else if (n.name == "age") out.clock = true;
  }
  return out;
}

namespace {

bool is_tool_ref(const PredicateExpr& e, std::size_t i) {
  const auto& n = e.node(i);
  return (n.kind == NodeKind::path && n.name == "action.tool") || (n.kind == NodeKind::call && n.name == "tool");
}

// Returns the tool named by `action.tool <op> 'x'` in either operand order.
std::optional<std::string> tool_comparison(const PredicateExpr& e, std::size_t i, BinaryOp op) {
  const auto& n = e.node(i);
  if (n.kind != NodeKind::binary || n.op != op) return std::nullopt;
  auto l = n.children[0], r = n.children[1];
  if (is_tool_ref(e, r)) std::swap(l, r);
  const auto& lit = e.node(r);
  if (!is_tool_ref(e, l) || lit.kind != NodeKind::literal || lit.literal.type() != ValueType::text) return std::nullopt;
  return lit.literal.as_text();
}

void flatten(const PredicateExpr& e, std::size_t i, BinaryOp op, std::vector<std::size_t>& out) {
  const auto& n = e.node(i);
  if (n.kind == NodeKind::binary && n.op == op) {
    flatten(e, n.children[0], op, out);
    flatten(e, n.children[1], op, out);
  } else {
    out.push_back(i);
  }
}

}  // namespace

ToolGuard tool_guard(const PredicateExpr& expr) {
  ToolGuard g;
  if (expr.empty()) return g;
  const auto& root = expr.node(expr.root());
  std::vector<std::size_t> parts;
  if (root.kind == NodeKind::binary && root.op == BinaryOp::or_) {
    flatten(expr, expr.root(), BinaryOp::or_, parts);
    std::set<std::string> named;
    for (auto p : parts)
      if (auto t = tool_comparison(expr, p, BinaryOp::ne)) named.insert(*t);
    if (named.size() == 1) g.only = *named.begin();
    return g;
  }
  flatten(expr, expr.root(), BinaryOp::and_, parts);
  std::set<std::string> named;
  for (auto p : parts)
    if (auto t = tool_comparison(expr, p, BinaryOp::eq)) named.insert(*t);
  if (named.size() == 1) g.only = *named.begin();
  if (named.size() > 1) g.contradictory = true;
  return g;
}

std::set<std::string> referenced_args(const PredicateExpr& expr) {
  static const std::string prefix = "action.args.";
  std::set<std::string> out;
  for (const auto& n : expr.nodes()) {
    if (n.kind == NodeKind::path && n.name.rfind(prefix, 0) == 0) out.insert(n.name.substr(prefix.size()));
    if (n.kind == NodeKind::call && n.name == "amount") out.insert("amount");
  }
  return out;
}

// ── Evaluation ──

namespace {

// A poisoned intermediate arises from operating on a null field. It is only
// an error if it decides the root result; boolean operators can absorb it.
struct Poison {
  std::size_t position;
  std::string reason;
};

using Slot = std::variant<Value, Poison>;

class Evaluator {
 public:
  Evaluator(const PredicateExpr& e, const EvalContext& ctx) : e_(e), ctx_(ctx) {}

  Slot eval(std::size_t i) {
    ++visits;
    const Node& n = e_.node(i);
    switch (n.kind) {
      case NodeKind::literal: return n.literal;
      case NodeKind::path: return *ctx_.lookup(n.name);
      case NodeKind::logical_not: {
        Slot v = eval(n.children[0]);
        if (auto* p = std::get_if<Poison>(&v)) return *p;
        const Value& x = std::get<Value>(v);
        if (x.is_null()) return Poison{n.position, "negation of null"};
        require(x, ValueType::boolean, n.position, "!");
        return Value(!x.as_bool());
      }
      case NodeKind::binary: return binary(n);
      case NodeKind::call: return call(n);
    }
    return Value();
  }

  std::size_t visits = 0;

 private:
  [[noreturn]] void mismatch(std::size_t pos, const std::string& what) {
    throw PredicateError(ErrorKind::type_mismatch, pos, what);
  }

  void require(const Value& v, ValueType t, std::size_t pos, const char* op) {
    if (v.type() != t)
      mismatch(pos, std::string("operator ") + op + " expects " + to_string(t) + ", got " + to_string(v.type()));
  }

  static Money to_money(const Value& v) {
    if (v.type() == ValueType::money) return v.as_money();
    return Money{euros_to_cents(v.as_number())};
  }

  static bool money_pair(const Value& a, const Value& b) {
    auto ta = a.type(), tb = b.type();
    return (ta == ValueType::money || tb == ValueType::money) &&
           (ta == ValueType::money || ta == ValueType::number) && (tb == ValueType::money || tb == ValueType::number);
  }

  Slot logical(const Node& n, Slot l, Slot r) {
    auto truth = [&](const Slot& s) -> std::optional<bool> {
      if (std::holds_alternative<Poison>(s)) return std::nullopt;
      const Value& v = std::get<Value>(s);
      if (v.is_null()) return std::nullopt;
      require(v, ValueType::boolean, n.position, to_string(n.op));
      return v.as_bool();
    };
    auto a = truth(l), b = truth(r);
    bool absorbing = n.op == BinaryOp::or_;
    if ((a && *a == absorbing) || (b && *b == absorbing)) return Value(absorbing);
    if (!a || !b) {
      if (auto* p = std::get_if<Poison>(!a ? &l : &r)) return *p;
      return Poison{n.position, "boolean operand is null"};
    }
    return Value(!absorbing);
  }

  Slot binary(const Node& n) {
    Slot ls = eval(n.children[0]);
    Slot rs = eval(n.children[1]);
    if (n.op == BinaryOp::and_ || n.op == BinaryOp::or_) return logical(n, std::move(ls), std::move(rs));
    if (auto* p = std::get_if<Poison>(&ls)) return *p;
    if (auto* p = std::get_if<Poison>(&rs)) return *p;
    const Value& a = std::get<Value>(ls);
    const Value& b = std::get<Value>(rs);
    switch (n.op) {
      case BinaryOp::eq:
      case BinaryOp::ne: {
        bool eq;
        if (a.is_null() || b.is_null()) eq = a.is_null() && b.is_null();
        else if (money_pair(a, b)) eq = to_money(a) == to_money(b);
        else if (a.type() != b.type())
          mismatch(n.position, std::string("cannot compare ") + to_string(a.type()) + " with " + to_string(b.type()));
        else eq = a == b;
        return Value(n.op == BinaryOp::eq ? eq : !eq);
      }
      case BinaryOp::lt:
      case BinaryOp::le:
      case BinaryOp::gt:
      case BinaryOp::ge: {
        if (a.is_null() || b.is_null()) return Poison{n.position, "ordering comparison with null"};
        int c = compare(n, a, b);
        switch (n.op) {
          case BinaryOp::lt: return Value(c < 0);
          case BinaryOp::le: return Value(c <= 0);
          case BinaryOp::gt: return Value(c > 0);
          default: return Value(c >= 0);
        }
      }
      default:
        if (a.is_null() || b.is_null()) return Poison{n.position, "arithmetic on null"};
        return arithmetic(n, a, b);
    }
  }

  template <class T>
  static int cmp3(const T& x, const T& y) {
    return x < y ? -1 : (y < x ? 1 : 0);
  }

  int compare(const Node& n, const Value& a, const Value& b) {
    if (money_pair(a, b)) return cmp3(to_money(a).cents, to_money(b).cents);
    if (a.type() != b.type())
      mismatch(n.position, std::string("cannot order ") + to_string(a.type()) + " against " + to_string(b.type()));
    switch (a.type()) {
      case ValueType::number: return cmp3(a.as_number(), b.as_number());
      case ValueType::text: return cmp3(a.as_text(), b.as_text());
      case ValueType::duration: return cmp3(a.as_duration().seconds, b.as_duration().seconds);
      case ValueType::timestamp: return cmp3(a.as_timestamp().seconds, b.as_timestamp().seconds);
      default: mismatch(n.position, std::string("cannot order values of type ") + to_string(a.type()));
    }
  }

  Value arithmetic(const Node& n, const Value& a, const Value& b) {
    auto ta = a.type(), tb = b.type();
    auto fail = [&]() -> Value {
      mismatch(n.position, std::string("operator ") + to_string(n.op) + " not defined for " + to_string(ta) + " and " +
                               to_string(tb));
    };
    if (ta == ValueType::number && tb == ValueType::number) {
      double x = a.as_number(), y = b.as_number();
      switch (n.op) {
        case BinaryOp::add: return Value(x + y);
        case BinaryOp::sub: return Value(x - y);
        case BinaryOp::mul: return Value(x * y);
        default:
          if (y == 0) mismatch(n.position, "division by zero");
          return Value(x / y);
      }
    }
    if (money_pair(a, b)) {
      if (n.op == BinaryOp::add || n.op == BinaryOp::sub) {
        auto x = to_money(a).cents, y = to_money(b).cents;
        return Value(Money{n.op == BinaryOp::add ? x + y : x - y});
      }
      if (n.op == BinaryOp::mul && (ta == ValueType::number || tb == ValueType::number)) {
        const Value& m = ta == ValueType::money ? a : b;
        double k = ta == ValueType::money ? b.as_number() : a.as_number();
        return Value(Money{static_cast<std::int64_t>(std::llround(static_cast<double>(m.as_money().cents) * k))});
      }
      if (n.op == BinaryOp::div && ta == ValueType::money) {
        if (tb == ValueType::number) {
          if (b.as_number() == 0) mismatch(n.position, "division by zero");
          return Value(Money{static_cast<std::int64_t>(
              std::llround(static_cast<double>(a.as_money().cents) / b.as_number()))});
        }
        if (b.as_money().cents == 0) mismatch(n.position, "division by zero");
        return Value(static_cast<double>(a.as_money().cents) / static_cast<double>(b.as_money().cents));
      }
      return fail();
    }
    if (ta == ValueType::duration && tb == ValueType::duration && (n.op == BinaryOp::add || n.op == BinaryOp::sub)) {
      double x = a.as_duration().seconds, y = b.as_duration().seconds;
      return Value(Duration{n.op == BinaryOp::add ? x + y : x - y});
    }
    if (ta == ValueType::timestamp && tb == ValueType::timestamp && n.op == BinaryOp::sub)
      return Value(Duration{a.as_timestamp().seconds - b.as_timestamp().seconds});
    if (ta == ValueType::timestamp && tb == ValueType::duration && (n.op == BinaryOp::add || n.op == BinaryOp::sub)) {
      double d = b.as_duration().seconds;
      return Value(Timestamp{a.as_timestamp().seconds + (n.op == BinaryOp::add ? d : -d)});
    }
    return fail();
  }

  Slot call(const Node& n) {
    if (n.name == "tool") return *ctx_.lookup("action.tool");
    if (n.name == "amount") return *ctx_.lookup("action.args.amount");
    Slot arg = eval(n.children[0]);
    if (n.name == "is_null") {
      if (std::holds_alternative<Poison>(arg)) return std::get<Poison>(arg);
      return Value(std::get<Value>(arg).is_null());
    }
    if (auto* p = std::get_if<Poison>(&arg)) return *p;
    const Value& v = std::get<Value>(arg);
    if (v.is_null()) return Poison{n.position, n.name + "() of null"};
    if (n.name == "age") {
      if (v.type() != ValueType::timestamp) mismatch(n.position, std::string("age() expects timestamp, got ") + to_string(v.type()));
      return Value(Duration{ctx_.clock_now.seconds - v.as_timestamp().seconds});
    }
    // rolling_24h_spend
    if (v.type() != ValueType::text)
      mismatch(n.position, std::string("rolling_24h_spend() expects a principal id, got ") + to_string(v.type()));
    return Value(ctx_.rolling_window(v.as_text()));
  }

  const PredicateExpr& e_;
  const EvalContext& ctx_;
};

}  // namespace

EvalResult eval_predicate(const PredicateExpr& expr, const EvalContext& ctx) {
  EvalResult r;
  auto fp = free_paths(expr);
  for (const auto& p : fp.paths)
    if (!ctx.has_path(p)) r.missing.insert(p);
  if (fp.rolling_window && !ctx.rolling_window) r.missing.insert(kRollingWindowDependency);
  if (!r.missing.empty()) {
    r.outcome = Outcome::undecidable;
    return r;
  }
  Evaluator ev(expr, ctx);
  Slot s = ev.eval(expr.root());
  r.visits = ev.visits;
  if (auto* p = std::get_if<Poison>(&s)) throw PredicateError(ErrorKind::type_mismatch, p->position, p->reason);
  const Value& v = std::get<Value>(s);
  if (v.type() != ValueType::boolean)
    throw PredicateError(ErrorKind::type_mismatch, 0, std::string("predicate yields ") + to_string(v.type()) + ", not bool");
  r.outcome = v.as_bool() ? Outcome::fired : Outcome::not_fired;
  return r;
}

// ── Formulas ──

namespace {

double formula_node(const PredicateExpr& e, std::size_t i, const std::map<std::string, double>& vars) {
  const Node& n = e.node(i);
  switch (n.kind) {
    case NodeKind::literal:
      if (n.literal.type() != ValueType::number)
        throw PredicateError(ErrorKind::type_mismatch, n.position, "formulas take numeric literals only");
      return n.literal.as_number();
    case NodeKind::path: {
      auto it = vars.find(n.name);
      if (it == vars.end()) throw PredicateError(ErrorKind::syntax, n.position, "unbound formula variable '" + n.name + "'");
      return it->second;
    }
    case NodeKind::logical_not:
      throw PredicateError(ErrorKind::type_mismatch, n.position, "boolean operator in numeric formula");
    case NodeKind::binary: {
      double a = formula_node(e, n.children[0], vars);
      double b = formula_node(e, n.children[1], vars);
      switch (n.op) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div: return a / b;
        default: throw PredicateError(ErrorKind::type_mismatch, n.position, "comparison in numeric formula");
      }
    }
    case NodeKind::call: {
      std::vector<double> xs;
      for (auto c : n.children) xs.push_back(formula_node(e, c, vars));
      if (n.name == "exp") return std::exp(xs[0]);
      if (n.name == "log") return std::log(xs[0]);
      if (n.name == "abs") return std::fabs(xs[0]);
      if (n.name == "min") return *std::min_element(xs.begin(), xs.end());
      return *std::max_element(xs.begin(), xs.end());
    }
  }
  return 0;
}

}  // namespace

double eval_formula(const PredicateExpr& expr, const std::map<std::string, double>& vars) {
  return formula_node(expr, expr.root(), vars);
}

}  // namespace sarc::predicate

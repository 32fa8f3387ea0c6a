#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarc/value.hpp"

namespace sarc::predicate {

// ── Errors ──

enum class ErrorKind { syntax, unknown_builtin, type_mismatch };

class PredicateError : public std::runtime_error {
 public:
  PredicateError(ErrorKind kind, std::size_t position, const std::string& message);
  ErrorKind kind() const { return kind_; }
  std::size_t position() const { return position_; }

 private:
  ErrorKind kind_;
  std::size_t position_;
};

// ── AST ──

enum class NodeKind { literal, path, logical_not, binary, call };

enum class BinaryOp { or_, and_, eq, ne, lt, le, gt, ge, add, sub, mul, div };

const char* to_string(BinaryOp op);

struct Node {
  NodeKind kind = NodeKind::literal;
  BinaryOp op = BinaryOp::eq;
  Value literal;
  std::string name;  // path text or builtin name
  std::vector<std::size_t> children;
  std::size_t position = 0;
};

// Predicates are boolean constraint expressions; formulas are numeric
// expressions such as throttle backoffs and use a separate builtin table.
enum class Dialect { predicate, formula };

class PredicateExpr {
 public:
  PredicateExpr() = default;

  const std::string& source() const { return source_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t root() const { return root_; }
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  Dialect dialect() const { return dialect_; }
  bool empty() const { return nodes_.empty(); }

  // Structural identity of a parsed expression is its source text.
  friend bool operator==(const PredicateExpr& a, const PredicateExpr& b) {
    return a.source_ == b.source_ && a.dialect_ == b.dialect_;
  }

 private:
  friend class Parser;
  std::string source_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
  Dialect dialect_ = Dialect::predicate;
};

PredicateExpr parse_predicate(const std::string& source);
PredicateExpr parse_formula(const std::string& source);

// ── Evaluation ──

struct ActionView {
  std::string tool;
  FieldMap args;
};

using RollingWindowOracle = std::function<Money(const std::string& principal)>;

struct EvalContext {
  FieldMap state_fields;
  std::optional<ActionView> action;
  Timestamp clock_now;
  RollingWindowOracle rolling_window;

  // Paths naming declared-but-empty optional fields (value null) are present;
  // absent paths make a predicate undecidable.
  bool has_path(const std::string& path) const;
  std::optional<Value> lookup(const std::string& path) const;
};

enum class Outcome { fired, not_fired, undecidable };

const char* to_string(Outcome o);

// `fired` means the expression evaluated to true. Whether that is a
// violation depends on the constraint class and is decided by the engine.
struct EvalResult {
  Outcome outcome = Outcome::not_fired;
  std::set<std::string> missing;
  std::size_t visits = 0;
};

EvalResult eval_predicate(const PredicateExpr& expr, const EvalContext& ctx);

// Builtin reserved name used to report the rolling-window oracle as missing.
inline constexpr const char* kRollingWindowDependency = "rolling_24h_spend()";

struct FreePaths {
  std::set<std::string> paths;
  bool rolling_window = false;
  bool clock = false;
};

FreePaths free_paths(const PredicateExpr& expr);

// Formula variables are plain numbers.
double eval_formula(const PredicateExpr& expr, const std::map<std::string, double>& vars);

// ── Guards ──

// Tool guards extracted from the top-level shape of a predicate. `only` is
// set when the predicate constrains actions of exactly one tool, either via a
// conjunct `action.tool == 'x'` or an implication-style disjunct
// `action.tool != 'x'`. `contradictory` marks conjunctions naming two tools.
struct ToolGuard {
  std::optional<std::string> only;
  bool contradictory = false;
};

ToolGuard tool_guard(const PredicateExpr& expr);

// Parameter names referenced through action.args.<name> or amount(action).
std::set<std::string> referenced_args(const PredicateExpr& expr);

}  // namespace sarc::predicate

#include <cctype>
#include <sstream>

#include "sarc/bench.hpp"

namespace sarc::bench {

using boost::multiprecision::cpp_int;

// ── Exact decimals ──

namespace {

cpp_int pow10(long n) {
  cpp_int r = 1;
  for (long i = 0; i < n; ++i) r *= 10;
  return r;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

Rational parse_decimal(const std::string& text, const std::string& whole) {
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
  cpp_int digits = 0;
  long scale = 0;
  bool any = false, dot = false;
  for (; i < text.size(); ++i) {
    char ch = text[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits = digits * 10 + (ch - '0');
      any = true;
      if (dot) ++scale;
    } else if (ch == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) throw std::invalid_argument("not a number: '" + whole + "'");
  long exp = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    std::size_t used = 0;
    try {
      exp = std::stol(text.substr(i + 1), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad exponent in '" + whole + "'");
    }
    i += 1 + used;
  }
  if (i != text.size()) throw std::invalid_argument("not a number: '" + whole + "'");
  long shift = exp - scale;
  Rational r = shift >= 0 ? Rational(digits * pow10(shift)) : Rational(digits, pow10(-shift));
  return neg ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string text = trim(raw);
  auto slash = text.find('/');
  if (slash == std::string::npos) return parse_decimal(text, raw);
  Rational num = parse_decimal(trim(text.substr(0, slash)), raw);
  Rational den = parse_decimal(trim(text.substr(slash + 1)), raw);
  if (den == 0) throw std::invalid_argument("zero denominator in '" + raw + "'");
  return num / den;
}

std::string decimal_string(const Rational& r, int digits) {
  cpp_int num = boost::multiprecision::numerator(r);
  cpp_int den = boost::multiprecision::denominator(r);
  bool neg = num < 0;
  if (neg) num = -num;
  cpp_int scaled = num * pow10(digits);
  cpp_int q = scaled / den;
  if ((scaled % den) * 2 >= den) ++q;  // half away from zero
  std::string s = q.str();
  if (digits > 0) {
    if (static_cast<int>(s.size()) <= digits) s.insert(0, digits - s.size() + 1, '0');
    s.insert(s.size() - digits, ".");
  }
  return (neg && q != 0 ? "-" : "") + s;
}

// ── Finite penalty versus hard constraint ──

Counterexample counterexample_demo(const Rational& G, const Rational& M, const Rational& eps) {
  if (G <= 0) throw std::invalid_argument("G must be positive");
  if (M < 0) throw std::invalid_argument("M must be non-negative");
  if (eps <= 0 || eps >= 1) throw std::invalid_argument("eps must lie in (0,1)");
  Counterexample c;
  c.threshold = G / (G + M);
  c.risky_return = (1 - eps) * G - eps * M;
  // The safe action returns 0; indifference resolves to safe.
  c.shaping_prefers_risky = c.risky_return > 0;
  // A zero cost bound admits no policy with positive violation probability.
  c.cmdp_prefers_risky = false;
  return c;
}

// ── Operating-point economics ──

std::vector<CostPoint> parse_cost_curve(const std::string& csv) {
  std::vector<CostPoint> out;
  std::istringstream in(csv);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(trim(cell));
    if (cells.size() != 4) throw std::invalid_argument("curve line " + std::to_string(lineno) + " needs 4 columns");
    if (out.empty() && cells[0] == "theta") continue;
    CostPoint p{parse_rational(cells[0]), parse_rational(cells[1]), parse_rational(cells[2]), parse_rational(cells[3])};
    for (const auto* v : {&p.p_fp, &p.p_fn, &p.p_esc})
      if (*v < 0 || *v > 1) throw std::invalid_argument("curve line " + std::to_string(lineno) + ": probability outside [0,1]");
    out.push_back(p);
  }
  if (out.empty()) throw std::invalid_argument("cost curve has no rows");
  return out;
}

Rational expected_cost(const Rational& theta, const CostModel& m) {
  for (const auto& p : m.curve)
    if (p.theta == theta) return m.kappa_fp * p.p_fp + m.kappa_fn * p.p_fn + m.kappa_er * p.p_esc;
  throw std::invalid_argument("operating point " + decimal_string(theta) + " is not tabulated");
}

std::optional<Rational> optimal_theta(const CostModel& m) {
  std::optional<Rational> best_theta, best_cost;
  for (const auto& p : m.curve) {
    Rational c = expected_cost(p.theta, m);
    if (!best_cost || c < *best_cost) {
      best_cost = c;
      best_theta = p.theta;
    }
  }
  return best_theta;
}

bool tradeoff_check(const Rational& delta_fp, const Rational& delta_fn, const CostModel& m) {
  return delta_fn * m.kappa_fn > delta_fp * m.kappa_fp;
}

}  // namespace sarc::bench

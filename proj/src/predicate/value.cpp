#include "sarc/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sarc {

const char* to_string(ValueType t) {
  switch (t) {
    case ValueType::null: return "null";
    case ValueType::boolean: return "bool";
    case ValueType::number: return "number";
    case ValueType::money: return "money";
    case ValueType::text: return "text";
    case ValueType::duration: return "duration";
    case ValueType::timestamp: return "timestamp";
  }
  return "?";
}

std::int64_t euros_to_cents(double eur) {
  return static_cast<std::int64_t>(std::llround(eur * 100.0));
}

Value Value::euros(double eur) { return Value(Money{euros_to_cents(eur)}); }

namespace {

std::string shortest(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

std::string cents_text(std::int64_t cents) {
  char buf[64];
  const char* sign = cents < 0 ? "-" : "";
  std::int64_t a = cents < 0 ? -cents : cents;
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", sign, static_cast<long long>(a / 100),
                static_cast<long long>(a % 100));
  return buf;
}

}  // namespace

std::string to_display(const Value& v) {
  switch (v.type()) {
    case ValueType::null: return "null";
    case ValueType::boolean: return v.as_bool() ? "true" : "false";
    case ValueType::number: return shortest(v.as_number());
    case ValueType::money: return "EUR " + cents_text(v.as_money().cents);
    case ValueType::text: return "'" + v.as_text() + "'";
    case ValueType::duration: return format_duration_text(v.as_duration().seconds);
    case ValueType::timestamp: return "t=" + shortest(v.as_timestamp().seconds);
  }
  return "?";
}

Json value_to_json(const Value& v) {
  switch (v.type()) {
    case ValueType::null: return nullptr;
    case ValueType::boolean: return v.as_bool();
    case ValueType::number: return v.as_number();
    case ValueType::money: return Json{{"money_cents", v.as_money().cents}};
    case ValueType::text: return v.as_text();
    case ValueType::duration: return Json{{"duration_s", v.as_duration().seconds}};
    case ValueType::timestamp: return Json{{"timestamp_s", v.as_timestamp().seconds}};
  }
  return nullptr;
}

Value value_from_json(const Json& j) {
  if (j.is_null()) return Value();
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number()) return Value(j.get<double>());
  if (j.is_string()) return Value(j.get<std::string>());
  if (j.is_object() && j.size() == 1) {
    if (j.contains("money_cents")) return Value(Money{j.at("money_cents").get<std::int64_t>()});
    if (j.contains("money")) return Value::euros(j.at("money").get<double>());
    if (j.contains("duration_s")) return Value(Duration{j.at("duration_s").get<double>()});
    if (j.contains("duration")) return Value(Duration{parse_duration_text(j.at("duration").get<std::string>())});
    if (j.contains("timestamp_s")) return Value(Timestamp{j.at("timestamp_s").get<double>()});
  }
  throw std::invalid_argument("unsupported value encoding: " + j.dump());
}

double parse_duration_text(const std::string& text) {
  if (text.size() < 2) throw std::invalid_argument("bad duration: '" + text + "'");
  char unit = text.back();
  double scale = 0;
  switch (unit) {
    case 's': scale = 1; break;
    case 'm': scale = 60; break;
    case 'h': scale = 3600; break;
    case 'd': scale = 86400; break;
    default: throw std::invalid_argument("bad duration unit: '" + text + "'");
  }
  double n = 0;
  auto body = std::string_view(text).substr(0, text.size() - 1);
  auto res = std::from_chars(body.data(), body.data() + body.size(), n);
  if (res.ec != std::errc() || res.ptr != body.data() + body.size())
    throw std::invalid_argument("bad duration: '" + text + "'");
  return n * scale;
}

std::string format_duration_text(double seconds) {
  for (auto [scale, unit] : {std::pair{86400.0, 'd'}, {3600.0, 'h'}, {60.0, 'm'}}) {
    double q = seconds / scale;
    if (seconds != 0 && q == std::floor(q)) return shortest(q) + unit;
  }
  return shortest(seconds) + 's';
}

}  // namespace sarc

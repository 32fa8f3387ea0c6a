#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include <json.hpp>

namespace sarc {

using Json = nlohmann::json;

// Money is held in integer euro cents so threshold comparisons are exact.
struct Money {
  std::int64_t cents = 0;
  friend auto operator<=>(const Money&, const Money&) = default;
};

struct Duration {
  double seconds = 0.0;
  friend auto operator<=>(const Duration&, const Duration&) = default;
};

struct Timestamp {
  double seconds = 0.0;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct Null {
  friend bool operator==(const Null&, const Null&) = default;
};

enum class ValueType { null, boolean, number, money, text, duration, timestamp };

const char* to_string(ValueType t);

class Value {
 public:
  using Storage = std::variant<Null, bool, double, Money, std::string, Duration, Timestamp>;

  Value() = default;
  Value(Null) {}
  Value(bool b) : v_(b) {}
  Value(double d) : v_(d) {}
  Value(int i) : v_(static_cast<double>(i)) {}
  Value(Money m) : v_(m) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(Duration d) : v_(d) {}
  Value(Timestamp t) : v_(t) {}

  static Value euros(double eur);

  ValueType type() const { return static_cast<ValueType>(v_.index()); }
  bool is_null() const { return type() == ValueType::null; }

  bool as_bool() const { return std::get<bool>(v_); }
  double as_number() const { return std::get<double>(v_); }
  Money as_money() const { return std::get<Money>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }
  Duration as_duration() const { return std::get<Duration>(v_); }
  Timestamp as_timestamp() const { return std::get<Timestamp>(v_); }

  const Storage& storage() const { return v_; }
  friend bool operator==(const Value&, const Value&) = default;

 private:
  Storage v_;
};

using FieldMap = std::map<std::string, Value>;

std::string to_display(const Value& v);

// Tagged JSON encoding. Money, durations and timestamps are objects with a
// single discriminating key so the value type survives a round trip.
Json value_to_json(const Value& v);
Value value_from_json(const Json& j);

// Duration text such as "90d", "5m", "24h", "60s". Throws std::invalid_argument.
double parse_duration_text(const std::string& text);
std::string format_duration_text(double seconds);

std::int64_t euros_to_cents(double eur);

}  // namespace sarc

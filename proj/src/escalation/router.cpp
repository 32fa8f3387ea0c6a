#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

#include "sarc/escalation.hpp"

namespace sarc {

Json action_to_json(const Action& a) {
  Json args = Json::object();
  for (const auto& [k, v] : a.args) args[k] = value_to_json(v);
  return Json{{"tool", a.tool}, {"args", args}, {"plan_index", a.plan_index}};
}

Action action_from_json(const Json& j) {
  Action a;
  a.tool = j.at("tool").get<std::string>();
  if (j.contains("args"))
    for (auto it = j["args"].begin(); it != j["args"].end(); ++it) a.args[it.key()] = value_from_json(it.value());
  a.plan_index = j.value("plan_index", 0);
  return a;
}

}  // namespace sarc

namespace sarc::escalation {

const char* to_string(RulingKind k) {
  switch (k) {
    case RulingKind::approve: return "approve";
    case RulingKind::deny: return "deny";
    case RulingKind::modify: return "modify";
    case RulingKind::timeout: return "timeout";
  }
  return "?";
}

std::optional<RulingKind> ruling_from(const std::string& s) {
  for (auto k : {RulingKind::approve, RulingKind::deny, RulingKind::modify, RulingKind::timeout})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

Json ruling_to_json(const Ruling& r) {
  Json j = {{"kind", to_string(r.kind)},
            {"enqueue_time", r.enqueue_time},
            {"decided_at", r.decided_at},
            {"wait_s", r.wait_s},
            {"group", r.group}};
  if (r.modified) j["modified"] = action_to_json(*r.modified);
  return j;
}

Ruling ruling_from_json(const Json& j) {
  Ruling r;
  auto k = ruling_from(j.at("kind").get<std::string>());
  if (!k) throw std::invalid_argument("unknown ruling kind");
  r.kind = *k;
  r.enqueue_time = j.value("enqueue_time", 0.0);
  r.decided_at = j.value("decided_at", 0.0);
  r.wait_s = j.value("wait_s", 0.0);
  r.group = j.value("group", "");
  if (j.contains("modified")) r.modified = action_from_json(j["modified"]);
  return r;
}

// ── Hours ──

Availability weekly_hours(const std::string& schedule) {
  static const std::regex re(R"(^\s*(Mon|Tue|Wed|Thu|Fri|Sat|Sun)-(Mon|Tue|Wed|Thu|Fri|Sat|Sun)\s+(\d\d):(\d\d)-(\d\d):(\d\d)(\s+\S+)?\s*$)");
  std::smatch m;
  if (!std::regex_match(schedule, m, re)) throw std::invalid_argument("unsupported hours '" + schedule + "'");
  static const std::vector<std::string> days = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
  int d0 = static_cast<int>(std::find(days.begin(), days.end(), m[1].str()) - days.begin());
  int d1 = static_cast<int>(std::find(days.begin(), days.end(), m[2].str()) - days.begin());
  double open = std::stoi(m[3]) * 3600.0 + std::stoi(m[4]) * 60.0;
  double close = std::stoi(m[5]) * 3600.0 + std::stoi(m[6]) * 60.0;
  std::vector<std::pair<double, double>> windows;
  for (int d = d0;; d = (d + 1) % 7) {
    windows.push_back({d * 86400.0 + open, d * 86400.0 + close});
    if (d == d1) break;
  }
  std::sort(windows.begin(), windows.end());
  return [windows](double t) -> std::optional<double> {
    constexpr double week = 7 * 86400.0;
    double base = std::floor(t / week) * week;
    for (int w = 0; w < 2; ++w) {
      for (const auto& [a, b] : windows) {
        double lo = base + w * week + a, hi = base + w * week + b;
        if (t < hi) return std::max(t, lo);
      }
    }
    return std::nullopt;
  };
}

// ── Pool ──

OperatorPool::OperatorPool(std::string group, int servers, double mean_service_s, std::uint64_t seed)
    : group_(std::move(group)), mean_service_s_(mean_service_s), free_at_(static_cast<std::size_t>(servers), 0.0), rng_(seed) {
  if (servers < 1) throw std::invalid_argument("pool needs at least one server");
  if (!(mean_service_s > 0)) throw std::invalid_argument("mean service time must be positive");
}

Ruling OperatorPool::route(const Ticket& t, RulingPolicy& policy) {
  if (t.enqueue_time < last_enqueue_) throw std::logic_error("tickets must be routed in time order");
  last_enqueue_ = t.enqueue_time;
  ++routed_;

  std::optional<ScriptedResponse> scripted;
  if (policy.mode == RulingPolicy::Mode::scripted && !policy.script.empty()) {
    scripted = policy.script.front();
    policy.script.pop_front();
  }

  Ruling r;
  r.group = group_;
  r.enqueue_time = t.enqueue_time;
  double deadline = t.enqueue_time + t.reversibility_window_s;

  auto server = std::min_element(free_at_.begin(), free_at_.end());
  double start = std::max(t.enqueue_time, *server);
  std::optional<double> open = availability_ ? availability_(start) : std::optional<double>(start);
  bool starts_in_time = open && *open <= deadline && !(scripted && scripted->silent);

  if (!starts_in_time) {
    ++timeouts_;
    r.kind = RulingKind::timeout;
    r.wait_s = t.reversibility_window_s;
    r.decided_at = deadline;
    return r;
  }
  start = *open;
  double service = scripted && scripted->respond_after_s
                       ? *scripted->respond_after_s
                       : std::exponential_distribution<double>(1.0 / mean_service_s_)(rng_);
  *server = start + service;
  r.wait_s = start - t.enqueue_time;
  r.decided_at = start + service;
  switch (policy.mode) {
    case RulingPolicy::Mode::approve_all: r.kind = RulingKind::approve; break;
    case RulingPolicy::Mode::deny_all: r.kind = RulingKind::deny; break;
    case RulingPolicy::Mode::scripted:
      r.kind = scripted ? scripted->kind : policy.after_script;
      if (r.kind == RulingKind::modify) {
        if (!scripted || !scripted->modified) throw std::invalid_argument("modify ruling needs a replacement action");
        r.modified = scripted->modified;
      }
      break;
  }
  return r;
}

// ── Router ──

namespace {
std::uint64_t mix(std::uint64_t seed, const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

EscalationRouter EscalationRouter::from_spec(const spec::Specification& spec, std::uint64_t seed, bool honor_hours) {
  EscalationRouter r;
  for (const auto& [name, g] : spec.router_groups) {
    OperatorPool pool(name, g.servers.value_or(1), g.mean_service_s.value_or(1.0), mix(seed, name));
    if (honor_hours && g.hours) {
      bool on_call = g.after_hours && g.after_hours->mode == "emergency_on_call";
      if (!on_call) pool.set_availability(weekly_hours(*g.hours));
    }
    r.add_pool(std::move(pool));
  }
  return r;
}

void EscalationRouter::add_pool(OperatorPool pool) {
  auto name = pool.group();
  pools_.erase(name);
  pools_.emplace(name, std::move(pool));
}

OperatorPool& EscalationRouter::pool(const std::string& group) {
  auto it = pools_.find(group);
  if (it == pools_.end()) throw UnknownGroup(group);
  return it->second;
}

Ruling EscalationRouter::route(const Ticket& t) { return pool(t.group).route(t, policy_); }

// ── Analytics ──

QueueAnalytics erlang_c(int c, double lambda, double mu, std::optional<double> tau_rev) {
  if (c < 1 || !(lambda > 0) || !(mu > 0)) throw std::invalid_argument("erlang_c needs c >= 1 and positive rates");
  QueueAnalytics q;
  q.c = c;
  q.lambda = lambda;
  q.mu = mu;
  double a = lambda / mu;
  q.rho = a / c;
  if (q.rho >= 1.0) {
    q.p_wait = 1.0;
    q.divergent = true;
    q.admissible = false;
    return q;
  }
  // Erlang-B recursion, then the standard conversion to Erlang-C.
  double b = 1.0;
  for (int k = 1; k <= c; ++k) b = a * b / (k + a * b);
  q.p_wait = b / (1.0 - q.rho * (1.0 - b));
  q.w_q = q.p_wait / (c * mu - lambda);
  q.admissible = !tau_rev || *q.w_q < *tau_rev;
  return q;
}

std::vector<QueueAnalytics> admissible_region(int c, double mu, const std::vector<double>& lambda_grid, double tau_rev) {
  std::vector<QueueAnalytics> out;
  for (double l : lambda_grid) out.push_back(erlang_c(c, l, mu, tau_rev));
  return out;
}

std::string queue_csv(const std::vector<QueueAnalytics>& rows) {
  std::string s = "c,lambda,mu,rho,p_wait,w_q_s,admissible\n";
  char buf[256];
  for (const auto& q : rows) {
    char wq[64];
    if (q.w_q) std::snprintf(wq, sizeof wq, "%.6f", *q.w_q);
    else std::snprintf(wq, sizeof wq, "divergent");
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.6f,%.6f,%s,%s\n", q.c, q.lambda, q.mu, q.rho, q.p_wait, wq,
                  q.admissible ? "true" : "false");
    s += buf;
  }
  return s;
}

double simulate_mean_wait(int c, double lambda, double mu, std::size_t arrivals, std::uint64_t seed, std::size_t warmup) {
  OperatorPool pool("des", c, 1.0 / mu, seed);
  RulingPolicy policy;
  std::mt19937_64 arrivals_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::exponential_distribution<double> gap(lambda);
  double t = 0, total = 0;
  Ticket tk;
  tk.group = "des";
  tk.reversibility_window_s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < warmup + arrivals; ++i) {
    t += gap(arrivals_rng);
    tk.enqueue_time = t;
    auto r = pool.route(tk, policy);
    if (i >= warmup) total += r.wait_s;
  }
  return total / static_cast<double>(arrivals);
}

}  // namespace sarc::escalation

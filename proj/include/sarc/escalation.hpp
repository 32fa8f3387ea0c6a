#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sarc/action.hpp"
#include "sarc/spec.hpp"

namespace sarc::escalation {

// ── Rulings ──

enum class RulingKind { approve, deny, modify, timeout };

const char* to_string(RulingKind k);
std::optional<RulingKind> ruling_from(const std::string& s);

struct Ruling {
  RulingKind kind = RulingKind::approve;
  double enqueue_time = 0.0;
  double decided_at = 0.0;
  double wait_s = 0.0;
  std::string group;
  std::optional<Action> modified;
};

Json ruling_to_json(const Ruling& r);
Ruling ruling_from_json(const Json& j);

// One scripted operator response. `silent` never picks the ticket up, which
// ends in a timeout; `respond_after_s` fixes the service time.
struct ScriptedResponse {
  RulingKind kind = RulingKind::approve;
  bool silent = false;
  std::optional<double> respond_after_s;
  std::optional<Action> modified;
};

struct RulingPolicy {
  enum class Mode { approve_all, deny_all, scripted };
  Mode mode = Mode::approve_all;
  std::deque<ScriptedResponse> script;
  RulingKind after_script = RulingKind::approve;

  static RulingPolicy approve_all() { return {}; }
  static RulingPolicy deny_all() { return {Mode::deny_all, {}, RulingKind::deny}; }
  static RulingPolicy scripted(std::deque<ScriptedResponse> s) { return {Mode::scripted, std::move(s), RulingKind::approve}; }
};

// ── Operator pool ──

// Returns the earliest time >= t at which operators can pick up tickets, or
// nullopt if they never can. An empty function means always available.
using Availability = std::function<std::optional<double>(double t)>;

// Weekly opening hours such as "Mon-Fri 09:00-18:00 CET". Virtual time 0 is
// Monday 00:00 in the schedule's own zone. Throws std::invalid_argument.
Availability weekly_hours(const std::string& schedule);

struct Ticket {
  Action action;
  std::string constraint_id;
  std::string group;
  double enqueue_time = 0.0;
  double reversibility_window_s = 0.0;
};

class OperatorPool {
 public:
  OperatorPool(std::string group, int servers, double mean_service_s, std::uint64_t seed = 1);

  const std::string& group() const { return group_; }
  int servers() const { return static_cast<int>(free_at_.size()); }
  double mean_service_s() const { return mean_service_s_; }
  void set_availability(Availability a) { availability_ = std::move(a); }

  // FIFO pickup. Tickets must arrive in nondecreasing enqueue time.
  Ruling route(const Ticket& ticket, RulingPolicy& policy);

  std::size_t routed() const { return routed_; }
  std::size_t timeouts() const { return timeouts_; }

 private:
  std::string group_;
  double mean_service_s_;
  std::vector<double> free_at_;
  std::mt19937_64 rng_;
  Availability availability_;
  double last_enqueue_ = 0.0;
  std::size_t routed_ = 0;
  std::size_t timeouts_ = 0;
};

class UnknownGroup : public std::runtime_error {
 public:
  explicit UnknownGroup(const std::string& g) : std::runtime_error("unknown operator group '" + g + "'") {}
};

class EscalationRouter {
 public:
  EscalationRouter() = default;

  // Builds one pool per declared group. Hours are honored only when asked:
  // emergency_on_call keeps a pool available around the clock, the deferring
  // mode waits for the next opening.
  static EscalationRouter from_spec(const spec::Specification& spec, std::uint64_t seed, bool honor_hours = false);

  void add_pool(OperatorPool pool);
  void set_policy(RulingPolicy p) { policy_ = std::move(p); }
  RulingPolicy& policy() { return policy_; }
  OperatorPool& pool(const std::string& group);
  bool has_pool(const std::string& group) const { return pools_.count(group) > 0; }

  Ruling route(const Ticket& ticket);

 private:
  std::map<std::string, OperatorPool> pools_;
  RulingPolicy policy_;
};

// ── Analytics ──

struct QueueAnalytics {
  int c = 1;
  double lambda = 0.0;
  double mu = 0.0;
  double rho = 0.0;
  double p_wait = 0.0;
  std::optional<double> w_q;  // absent when divergent
  bool divergent = false;
  bool admissible = false;
};

QueueAnalytics erlang_c(int c, double lambda, double mu, std::optional<double> tau_rev = std::nullopt);

std::vector<QueueAnalytics> admissible_region(int c, double mu, const std::vector<double>& lambda_grid, double tau_rev);

std::string queue_csv(const std::vector<QueueAnalytics>& rows);

// Mean FIFO wait from a discrete-event run of Poisson arrivals through an
// OperatorPool with exponential service and no reneging.
double simulate_mean_wait(int c, double lambda, double mu, std::size_t arrivals, std::uint64_t seed,
                          std::size_t warmup = 10000);

}  // namespace sarc::escalation

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarc/action.hpp"
#include "sarc/attribution.hpp"
#include "sarc/escalation.hpp"
#include "sarc/spec.hpp"

namespace sarc::engine {

inline constexpr const char* kTraceSchema = "sarc-trace-0.1";

// ── Clock ──

class Clock {
 public:
  explicit Clock(double start = 0.0) : now_(start) {}
  double now() const { return now_; }
  void advance(double dt) { now_ += dt; }
  void set(double t) { now_ = t; }

 private:
  double now_;
};

// ── World ──

// Append-only spend history shared by every episode step. A state snapshot
// refers to a prefix of it by length.
class SpendLedger {
 public:
  void append(double t, const std::string& principal, Money amount);
  std::size_t size() const { return size_; }

  // Sum over the principal's entries with sequence number < upto and time in
  // (now - span, now].
  Money window(const std::string& principal, double now, std::size_t upto, double span = 86400.0) const;

  // Earliest time >= now at which the principal's full window drops below
  // theta, assuming no further entries.
  double release_time(const std::string& principal, double now, Money theta, double span = 86400.0) const;

 private:
  struct Entry {
    double t;
    std::size_t seq;
    std::int64_t prefix;  // cumulative cents including this entry
  };
  std::map<std::string, std::vector<Entry>> by_principal_;
  std::size_t size_ = 0;
};

struct World {
  SpendLedger ledger;
  std::map<std::string, FieldMap> suppliers;  // supplier id -> record fields
  int next_po = 1;
  int next_ticket = 1;
};

struct AgentState {
  FieldMap fields;
  int step = 0;
  double clock = 0.0;
  std::size_t ledger_size = 0;
};

// ── Tools ──

struct ToolContext {
  const Action& action;
  AgentState& post;
  World& world;
  double now;
  // Offers one chunk of streamed output at a cost. Returns false when the
  // runtime interrupts; the chunk is then not delivered.
  std::function<bool(const Json& chunk, double cost)> emit;
  Json observation = Json::object();
};

using ToolFn = std::function<void(ToolContext&)>;

class EnforcementInactive : public std::runtime_error {
 public:
  EnforcementInactive(std::string constraint_id, std::string tool)
      : std::runtime_error("enforcement hook '" + constraint_id + "' is not active on tool '" + tool + "'"),
        constraint_id_(std::move(constraint_id)),
        tool_(std::move(tool)) {}
  const std::string& constraint_id() const { return constraint_id_; }
  const std::string& tool() const { return tool_; }

 private:
  std::string constraint_id_;
  std::string tool_;
};

class UnknownTool : public std::runtime_error {
 public:
  explicit UnknownTool(const std::string& t) : std::runtime_error("unknown tool '" + t + "'") {}
};

class ToolRegistry {
 public:
  void register_tool(const std::string& name, ToolFn fn);
  bool has_tool(const std::string& name) const { return tools_.count(name) > 0; }
  const ToolFn& tool(const std::string& name) const;

  void wire_hook(const std::string& tool, const std::string& constraint_id);
  void unwire_hook(const std::string& tool, const std::string& constraint_id);
  bool hook_wired(const std::string& tool, const std::string& constraint_id) const;
  // Wires every hook the specification declares on a registered tool.
  void wire_declared_hooks(const spec::Specification& spec);

  // Sites each registered tool passes through in this deployment.
  spec::DispatchGraph dispatch_graph(const spec::Specification& spec) const;

 private:
  std::map<std::string, ToolFn> tools_;
  std::map<std::string, std::set<std::string>> hooks_;
};

// erp.create_po, erp.send_to_approver, kyc.lookup_supplier and the
// stream.fetch fixture (emits args.chunks chunks of cost 1 each).
ToolRegistry procurement_tools();

// ── Faults and latency ──

enum class FaultTag { pred_false_negative, exec_failure };
const char* to_string(FaultTag f);

class FaultModel {
 public:
  FaultModel(double eps_pred = 0.0, double eps_exec = 0.0, std::uint64_t seed = 0);
  double eps_pred() const { return eps_pred_; }
  double eps_exec() const { return eps_exec_; }
  bool enabled() const { return eps_pred_ > 0 || eps_exec_ > 0; }

  // Both uniforms are drawn for every fired hard or escalation predicate so
  // the stream position does not depend on the outcome.
  std::optional<FaultTag> draw();

 private:
  double eps_pred_, eps_exec_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> u_{0.0, 1.0};
};

struct LatencyModel {
  double model_ms = 0.0;
  double pag_ms = 0.0;
  double atm_ms = 0.0;
  double paa_ms = 0.0;
  double tool_ms = 0.0;
  double site_cost(spec::Site s) const;
};

// ── Trace ──

enum class EventOutcome { fired, not_fired, undecidable_rescued };
const char* to_string(EventOutcome o);

struct RescueInfo {
  int layer = 0;
  spec::Site site = spec::Site::orchestration;
};

struct ConstraintEvent {
  std::string constraint_id;
  spec::ConstraintClass cls = spec::ConstraintClass::hard;
  spec::Site site = spec::Site::PAG;
  EventOutcome outcome = EventOutcome::not_fired;
  std::optional<spec::ResponseKind> response_taken;  // nullopt: none taken
  std::optional<escalation::Ruling> ruling;
  std::optional<FaultTag> fault;
  std::optional<RescueInfo> rescue;
  bool rescue_fired = false;
  int round = 1;
  Json detail = Json::object();
};

struct Termination {
  std::string constraint_id;  // empty for authority refusals
  spec::Site site = spec::Site::PAG;
  std::string reason;  // block | abort | deny | timeout | throttle | authority
};

struct StateDigest {
  std::string hash;
  FieldMap selected;
};

struct TraceRecord {
  std::string schema_version = kTraceSchema;
  std::size_t index = 0;
  int step = 0;
  double time_s = 0.0;
  StateDigest pre;
  StateDigest post;
  Action action;
  bool dispatched = false;
  std::optional<Termination> terminated_by;
  double reward = 0.0;
  Json observation = Json::object();
  std::vector<ConstraintEvent> evaluated;
  AttributionTuple attribution;
  double latency_ms = 0.0;
  int pag_rounds = 0;
  std::vector<spec::Site> sites_traversed;  // in order; PAG repeats per round
};

Json event_to_json(const ConstraintEvent& e);
ConstraintEvent event_from_json(const Json& j);
Json record_to_json(const TraceRecord& r);
TraceRecord record_from_json(const Json& j);
std::string trace_to_jsonl(const std::vector<TraceRecord>& trace);
std::vector<Json> parse_jsonl(const std::string& text);

// Fields named by trace_fields are kept verbatim (matching a path, its last
// segment, or the path with dots as underscores); the rest is hashed.
StateDigest digest_state(const FieldMap& fields, const std::set<std::string>& keep);

// ── Planners ──

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::optional<Action> propose(const AgentState& s) = 0;
  virtual void on_denied(const Action&) {}
  // The action was held by a throttle and should be proposed again.
  virtual void on_deferred(const Action&) {}
  virtual std::string id() const = 0;
};

class ScriptedPlanner : public Planner {
 public:
  explicit ScriptedPlanner(std::vector<Action> script, std::string id = "scripted");
  std::optional<Action> propose(const AgentState& s) override;
  std::string id() const override { return id_; }

 private:
  std::vector<Action> script_;
  std::size_t next_ = 0;
  std::string id_;
};

struct Order {
  double arrival_s = 0.0;
  Money amount;
  std::string supplier_id;
};

// Places every order at its full requested amount. The proxy it maximizes is
// placed spend; it never self-limits. Supplier records reach the state through
// retrieval, not through a planned lookup.
Action greedy_action(const Order& o, int plan_index);

class GreedySpendPlanner : public Planner {
 public:
  explicit GreedySpendPlanner(std::vector<Order> orders);
  std::optional<Action> propose(const AgentState& s) override;
  void on_deferred(const Action&) override;
  std::string id() const override { return "greedy-spend"; }
  // The order the next proposal will place, so the environment can load its
  // supplier record into the state first.
  const Order* upcoming() const;

 private:
  std::vector<Order> orders_;
  std::size_t next_ = 0;
};

// ── Governor ──

using RewardFn = std::function<double(const AgentState& s, const Action& a, const AgentState& s2)>;

// Placed-spend delta in euros.
double spend_reward(const AgentState& s, const Action& a, const AgentState& s2);

struct GovernorConfig {
  LatencyModel latency;
  RewardFn reward = spend_reward;
  // Wait for operator rulings on the virtual clock. Off when the environment
  // drives time and rulings resolve asynchronously.
  bool block_on_escalation = true;
  int max_pag_rounds = 8;
  // Constraints handled by an enclosing orchestrator; skipped here.
  std::set<std::string> skip;
};

enum class StepKind { dispatched, aborted, denied, deferred, refused };
const char* to_string(StepKind k);

struct StepOutcome {
  StepKind kind = StepKind::dispatched;
  std::optional<Termination> termination;
  std::size_t record_index = 0;
  std::optional<double> throttle_backoff_s;
};

struct PagVerdict {
  enum class Kind { admit, block, escalate };
  Kind kind = Kind::admit;
  std::optional<std::string> constraint_id;
  spec::Site site = spec::Site::PAG;
  std::vector<std::string> missing;  // set when a fail-safe block was forced
};

class Governor {
 public:
  Governor(const spec::Specification& spec, ToolRegistry& tools, World& world, escalation::EscalationRouter& router,
           FaultModel& faults, Clock& clock, GovernorConfig config = {});

  // Runs one pass of the loop body for a proposed action from state s. On
  // dispatch s becomes the post state; the record is appended either way.
  StepOutcome step(AgentState& s, const Action& a, const AttributionTuple& attribution);

  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::vector<TraceRecord> take_trace();

  bool throttled() const { return throttle_.has_value(); }
  std::optional<double> throttle_until() const;

 private:
  struct Throttle {
    std::string constraint_id;
    std::string principal;
    double until;
  };
  struct Plan {
    std::vector<const spec::ConstraintDef*> hard;        // PAG and hosted hooks, by id
    std::vector<const spec::ConstraintDef*> escalation;  // PAG, by precedence
    std::vector<const spec::ConstraintDef*> other_pre;   // soft at PAG
    std::vector<const spec::ConstraintDef*> atm;
    std::vector<const spec::ConstraintDef*> paa;
  };
  const Plan& plan_for(const std::string& tool, const PrincipalChain& chain);
  predicate::EvalContext context(const AgentState& s, const Action& a) const;
  std::optional<double> score(const spec::ConstraintDef& c, const AgentState& s) const;

  const spec::Specification& spec_;
  ToolRegistry& tools_;
  World& world_;
  escalation::EscalationRouter& router_;
  FaultModel& faults_;
  Clock& clock_;
  GovernorConfig config_;
  std::map<std::string, Plan> plans_;
  std::optional<Throttle> throttle_;
  std::vector<TraceRecord> trace_;
  std::size_t next_index_ = 0;
};

// Stateless PAG evaluation without routing or faults: hard constraints (PAG
// and tool-hosted hooks) first, lowest id wins; then escalations by
// precedence. An undecidable predicate forces a block.
PagVerdict pag_check(const spec::Specification& spec, const AgentState& s, const Action& a, const World& world,
                     double now);

// ── Episodes ──

struct Abort {
  Termination termination;
};

struct EpisodeResult {
  std::vector<TraceRecord> trace;
  std::optional<Abort> abort;
};

struct EpisodeOptions {
  AgentState initial;
  GovernorConfig config;
};

EpisodeResult run_episode(const spec::Specification& spec, Planner& planner, ToolRegistry& tools, World& world,
                          int horizon, const AttributionTuple& attribution_root, FaultModel& faults, Clock& clock,
                          escalation::EscalationRouter& router, EpisodeOptions options = {});

// A single principal holding every tool declared by the specification.
AttributionTuple default_attribution(const spec::Specification& spec, const std::string& principal,
                                     const std::string& planner = "planner", const std::string& executor = "executor");

}  // namespace sarc::engine

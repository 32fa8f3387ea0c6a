#pragma once

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarc/attribution.hpp"
#include "sarc/audit.hpp"
#include "sarc/engine.hpp"

namespace sarc::multiagent {

// ── Authority composition ──

struct Principal {
  std::string id;
  std::string role;
  AuthoritySet authority;
  FieldMap attributes;  // readable by qualifiers as principal.<name>
  PrincipalEntry entry() const { return {id, role, authority}; }
};

enum class CompositionKind { all_of, any_of };

struct CompositionRule {
  CompositionKind kind = CompositionKind::all_of;
  std::optional<std::string> qualifier;  // predicate over principal.*; required for any_of
};

class CompositionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Capabilities outside action_class are dropped first unless it is empty.
// any_of unites the principals whose qualifier fires; an undecidable
// qualifier does not qualify. Throws CompositionError for any_of without a
// qualifier or an unparsable one, std::invalid_argument for no principals.
AuthoritySet compose_authority(const std::string& action_class, const std::vector<Principal>& principals,
                               const CompositionRule& rule);

// ── Decidability ──

// Path roots a layer can resolve. `action` and `principal` are always
// present; the rolling-window oracle is held by layers that carry a budget or
// spend ledger modality.
using LayerPaths = std::set<std::string>;

LayerPaths layer_paths(const spec::Specification& spec);
bool covers(const LayerPaths& layer, const std::string& path);
bool decidable_at(const spec::ConstraintDef& c, const LayerPaths& layer);

// Deepest k in [i, j] at which c is decidable; i when none is.
int rescue_layer(const spec::ConstraintDef& c, int i, int j, const std::vector<LayerPaths>& layers);

// The fields of an orchestrator state the layer can see.
FieldMap state_slice(const FieldMap& fields, const LayerPaths& layer);

// ── Constraint composition ──

struct ComposedConstraints {
  std::vector<spec::ConstraintDef> hard;        // all retained, by id
  std::vector<spec::ConstraintDef> soft;        // one per source reference
  std::vector<spec::ConstraintDef> escalation;  // in precedence order
  std::map<std::string, std::vector<std::string>> merged;  // kept id -> dropped ids
  std::vector<spec::ConstraintDef> all() const;
};

// Soft constraints citing the same source reference merge into the one with
// the largest cost (ties: smaller id). Duplicate ids keep the first.
ComposedConstraints compose_constraints(const std::vector<std::vector<spec::ConstraintDef>>& sets);

// Conjunction of the hard members: the first whose predicate does not hold
// (or cannot be decided) blocks.
std::optional<std::string> composed_hard_block(const ComposedConstraints& cc, const predicate::EvalContext& ctx);

// ── Trust gateway ──

struct TrustTag {
  std::string source;
  std::string authentication_context;
  std::string classification;
  bool inside_boundary = false;
};

struct ImportedValue {
  std::string id;
  std::string payload;
  std::optional<TrustTag> tag;
};

class UntaggedImport : public std::logic_error {
 public:
  explicit UntaggedImport(const std::string& id) : std::logic_error("imported value '" + id + "' carries no trust tag") {}
};

enum class Stakes { low, high };
enum class GatewayVerdict { admit, sanitize, escalate, discard };

const char* to_string(Stakes s);
const char* to_string(GatewayVerdict v);
std::optional<Stakes> stakes_from(const std::string& s);

struct GatewayPolicy {
  std::string constraint_id = "trust_boundary";
  // Evaluated over tag.source, tag.authentication_context,
  // tag.classification and tag.inside_boundary.
  std::string trust_predicate = "tag.inside_boundary == true";
  // escalation: escalate; hard: discard.
  spec::ConstraintClass high_stakes_class = spec::ConstraintClass::escalation;
  bool sanitize_low_stakes = true;  // otherwise admit with a logged event
  std::string router_group = "operators";
  double reversibility_window_s = 3600;
};

struct GatewayDecision {
  GatewayVerdict verdict = GatewayVerdict::admit;
  engine::ConstraintEvent event;
  std::string payload;  // what the orchestrator may plan over
  std::vector<std::string> removed_lines;
};

// A line is instruction-like when, trimmed and lowercased, it opens with a
// directive ("ignore", "disregard", "override", "you must", "system:",
// "assistant:", "instruction:") or asks to forget earlier instructions.
bool instruction_like(const std::string& line);
std::string strip_instruction_lines(const std::string& payload, std::vector<std::string>* removed = nullptr);

// Throws UntaggedImport when the value has no tag.
GatewayDecision gateway_check(const ImportedValue& imported, Stakes stakes, const GatewayPolicy& policy);

// ── Workflows ──

struct Agent {
  std::string id;
  Principal principal;
  spec::Specification spec;
};

struct Import {
  ImportedValue value;
  Stakes stakes = Stakes::low;
  // What a planner acting on the payload's instructions would do.
  std::optional<Action> injected;
};

struct SubTask {
  std::string id;
  std::string worker;
  std::vector<Action> plan;
  std::vector<SubTask> children;  // dispatched by the worker once its plan ran
  std::vector<Import> imports;    // returned with the worker's result
  // Approvers whose composed authority the worker acts under, if any.
  std::vector<Principal> principals;
  CompositionRule rule;
  std::string action_class;
};

struct Workflow {
  Principal origin;  // p0
  Agent orchestrator;
  std::map<std::string, Agent> workers;
  std::vector<SubTask> tasks;
  std::vector<Action> orchestrator_plan;  // run before dispatching
  FieldMap state;
  GatewayPolicy gateway;
};

struct Defenses {
  bool propagate_constraints = true;
  bool intersect_authority = true;
  bool gateway = true;
  bool preserve_attribution = true;
};

// C* with the orchestrator's state and tools united with every worker's.
// Throws spec::SpecError when two agents declare the same constraint id
// differently.
spec::Specification composed_spec(const Workflow& w);

// Everything needed to run one worker again on its own.
struct WorkerRun {
  std::string sub_task;
  std::string worker;
  int layer = 1;
  std::shared_ptr<const spec::Specification> spec;  // the worker's effective specification
  engine::AgentState initial;
  AttributionTuple attribution;
  std::set<std::string> skip;
  double clock_start = 0.0;
  engine::World world;
  escalation::EscalationRouter router;
  engine::FaultModel faults;
  std::vector<Action> plan;
  std::vector<engine::TraceRecord> trace;  // as emitted inside the workflow
};

struct OrchestrationResult {
  Json tree;  // {attribution, children}
  std::vector<WorkerRun> runs;
  std::vector<std::pair<std::string, GatewayDecision>> gateway;  // sub-task id, decision
  std::optional<std::string> abort_reason;
  std::size_t executed_injections = 0;
};

// Raised inside the loop for an empty worker authority or an abort response;
// orchestrate() turns it into OrchestrationResult::abort_reason.
class WorkflowAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OrchestrationEnv {
  engine::ToolRegistry& tools;
  engine::World& world;
  escalation::EscalationRouter& router;
  engine::FaultModel& faults;
  engine::Clock& clock;
  engine::GovernorConfig config = {};
};

// An empty worker authority aborts the workflow; the result then carries the
// reason and the tree built so far.
OrchestrationResult orchestrate(const Workflow& w, OrchestrationEnv env, const Defenses& defenses = {});

// Reruns a worker in isolation from its recorded inputs.
std::vector<engine::TraceRecord> replay(const WorkerRun& run, engine::ToolRegistry& tools,
                                        const engine::GovernorConfig& config = {});

// ── Tree inspection ──

// Every record in the tree, depth first.
std::vector<Json> tree_records(const Json& tree);

// Records directly under each dispatch node, keyed by sub-task id.
std::map<std::string, std::vector<Json>> regroup(const Json& tree);

// Leaves whose chain is empty or does not start with p0.
std::size_t attribution_breaks(const Json& tree, const std::string& origin_id);

// Depth of the deepest dispatch node (root children are depth 1).
int dispatch_depth(const Json& tree);

// ── Scenarios ──

struct Scenario {
  std::string name;
  std::string failure_mode;
  std::string defense;  // the Defenses flag that counters the failure mode
  Workflow workflow;
  std::map<std::string, FieldMap> suppliers;
  escalation::RulingPolicy operators;
  std::optional<std::string> violation;  // predicate over a dispatched record's action
};

// Worker and orchestrator spec paths resolve against base_dir. Throws
// std::invalid_argument or spec::SpecError.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& yaml, const std::string& base_dir);

struct ScenarioOutcome {
  OrchestrationResult result;
  std::size_t executed_violations = 0;  // dispatched records matching the violation predicate
  std::size_t attribution_breaks = 0;
  audit::AuditReport audit;  // tree against C*
};

Defenses with_defense(const Defenses& base, const std::string& flag, bool on);
ScenarioOutcome run_scenario(const Scenario& s, const Defenses& defenses, std::uint64_t seed = 1);

}  // namespace sarc::multiagent

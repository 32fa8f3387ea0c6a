#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarc/predicate.hpp"
#include "sarc/value.hpp"

namespace sarc::spec {

// ── Enumerations ──

enum class SourceKind { regulatory, contractual, ethical, operational };
enum class ConstraintClass { hard, soft, escalation };
enum class Site { PAG, ATM, PAA, tool_layer, policy_layer, prompt_layer, orchestration };
enum class ResponseKind { block, abort, log, throttle, suspend_and_route };
enum class OperatingPointKind { exact_predicate, deterministic_threshold, threshold };
enum class OnTimeout { deny, allow };
enum class MemoryKind { stateless, episodic, persistent };
enum class RewardKind { scalarization, lexicographic };
enum class SemanticType { money_eur, text_id, record };

const char* to_string(SourceKind v);
const char* to_string(ConstraintClass v);
const char* to_string(Site v);
const char* to_string(ResponseKind v);
const char* to_string(OperatingPointKind v);
const char* to_string(OnTimeout v);
const char* to_string(MemoryKind v);
const char* to_string(RewardKind v);
const char* to_string(SemanticType v);

// Document spellings. Enforcement sites appear as PAG/ATM/PAA/tool_layer/...
std::optional<SourceKind> source_kind_from(const std::string& s);
std::optional<ConstraintClass> class_from(const std::string& s);
std::optional<Site> site_from(const std::string& s);
std::optional<ResponseKind> response_from(const std::string& s);

// ── Constraint quintuple ──

struct Source {
  SourceKind kind = SourceKind::operational;
  std::string reference;
  Json extra = Json::object();
  friend bool operator==(const Source&, const Source&) = default;
};

struct PredicateSpec {
  std::string lang;
  predicate::PredicateExpr expr;
  Json extra = Json::object();
  friend bool operator==(const PredicateSpec&, const PredicateSpec&) = default;
};

struct OperatingPoint {
  OperatingPointKind kind = OperatingPointKind::exact_predicate;
  std::optional<double> theta;
  std::optional<std::string> calibration_basis;
  double fp_tolerance = 0.0;
  double fn_tolerance = 0.0;
  Json extra = Json::object();
  friend bool operator==(const OperatingPoint&, const OperatingPoint&) = default;
};

struct Verification {
  Site point = Site::PAG;
  std::optional<double> latency_budget_ms;
  std::optional<std::string> tool;
  Json extra = Json::object();
  friend bool operator==(const Verification&, const Verification&) = default;
};

struct Backoff {
  predicate::PredicateExpr formula;
  std::string unit = "seconds";
  Json extra = Json::object();
  friend bool operator==(const Backoff&, const Backoff&) = default;
};

struct Response {
  ResponseKind kind = ResponseKind::block;
  std::optional<std::string> router_group;
  std::optional<Backoff> backoff;
  Json extra = Json::object();
  friend bool operator==(const Response&, const Response&) = default;
};

struct Timeout {
  double reversibility_window_s = 0.0;
  OnTimeout on_timeout = OnTimeout::deny;
  Json extra = Json::object();
  friend bool operator==(const Timeout&, const Timeout&) = default;
};

// Quintuple members are optional in the model so that lints can report an
// incomplete definition built programmatically; the parser rejects them.
struct ConstraintDef {
  std::string id;
  std::optional<Source> src;
  std::optional<ConstraintClass> cls;
  std::optional<PredicateSpec> pred;
  std::optional<Verification> verif;
  std::optional<Response> resp;
  std::optional<OperatingPoint> operating_point;
  std::optional<Timeout> timeout;
  std::optional<std::vector<std::string>> authority_binding;
  std::vector<std::string> trace_fields;
  std::optional<double> cost;
  Json extra = Json::object();
  friend bool operator==(const ConstraintDef&, const ConstraintDef&) = default;
};

// ── Σ components ──

struct RetrievalSource {
  std::string source;
  double freshness_max_s = 0.0;
  friend bool operator==(const RetrievalSource&, const RetrievalSource&) = default;
};

struct StateSpec {
  std::vector<std::string> modalities;
  std::vector<RetrievalSource> retrieval_sources;
  MemoryKind memory_kind = MemoryKind::stateless;
  double freshness_default_s = 0.0;
  Json extra = Json::object();
  friend bool operator==(const StateSpec&, const StateSpec&) = default;

  // Top-level path segments a layer holding this state can resolve.
  std::set<std::string> path_roots() const;
};

struct Param {
  std::string name;
  std::string type_text;  // as written, e.g. "EUR"
  SemanticType semantic = SemanticType::text_id;
  friend bool operator==(const Param&, const Param&) = default;
};

struct ToolSignature {
  std::string name;
  std::vector<Param> params;
  std::string returns;
  std::set<std::string> enforcement_hooks;
  Json extra = Json::object();
  friend bool operator==(const ToolSignature&, const ToolSignature&) = default;

  bool has_param(const std::string& p) const;
  std::string signature_text() const;
};

struct CostTier {
  std::string compute;
  std::string external;
  friend bool operator==(const CostTier&, const CostTier&) = default;
};

struct ActionSpaceSpec {
  std::vector<ToolSignature> tools;
  int max_plan_length = 1;
  std::map<std::string, CostTier> cost_model;
  Json extra = Json::object();
  friend bool operator==(const ActionSpaceSpec&, const ActionSpaceSpec&) = default;

  const ToolSignature* find(const std::string& tool) const;
};

struct RewardComponent {
  std::string name;
  double weight = 0.0;
  friend bool operator==(const RewardComponent&, const RewardComponent&) = default;
};

struct RewardSpec {
  RewardKind kind = RewardKind::scalarization;
  std::vector<RewardComponent> components;
  std::string horizon;
  std::optional<double> fp_cost;
  std::optional<double> fn_cost;
  Json goodhart_note;  // opaque
  Json asymmetry_extra = Json::object();
  Json extra = Json::object();
  friend bool operator==(const RewardSpec&, const RewardSpec&) = default;
};

struct AfterHours {
  std::string mode;  // emergency_on_call | defer_if_within_reversibility_window
  std::optional<std::string> fallback;
  std::string fallback_key = "fallback_if_unavailable";
  Json extra = Json::object();
  friend bool operator==(const AfterHours&, const AfterHours&) = default;
};

struct OperatorGroupSpec {
  std::string name;
  std::string capacity_type = "mmc";
  std::optional<int> servers;
  std::optional<double> mean_service_s;
  std::optional<std::string> hours;
  std::optional<AfterHours> after_hours;
  Json capacity_extra = Json::object();
  Json extra = Json::object();
  friend bool operator==(const OperatorGroupSpec&, const OperatorGroupSpec&) = default;
};

struct AuditEmission {
  std::string schema_version = "sarc-trace-0.1";
  Json fields;  // opaque
  std::optional<std::string> retention;
  std::optional<std::string> destination;
  Json extra = Json::object();
  friend bool operator==(const AuditEmission&, const AuditEmission&) = default;
};

struct EnforcementProperty {
  std::string name;
  std::optional<std::string> description;
  std::optional<std::string> invariant_ref;
  Json extra = Json::object();
  friend bool operator==(const EnforcementProperty&, const EnforcementProperty&) = default;
};

struct Specification {
  std::string spec_version = "sarc-0.1";
  std::string agent_name;
  Json deployment;  // opaque
  StateSpec state_spec;
  ActionSpaceSpec action_space;
  RewardSpec reward_spec;
  std::vector<ConstraintDef> constraints;
  std::map<std::string, OperatorGroupSpec> router_groups;
  std::optional<AuditEmission> audit;
  std::optional<EnforcementProperty> enforcement_property;
  Json extra = Json::object();
  friend bool operator==(const Specification&, const Specification&) = default;

  std::string audit_schema_version() const { return audit ? audit->schema_version : "sarc-trace-0.1"; }
  const ConstraintDef* find(const std::string& id) const;
};

// ── Parsing and serialization ──

class SpecError : public std::runtime_error {
 public:
  enum class Kind { syntax, missing_field, unknown_enum, invalid };
  SpecError(Kind kind, std::string path, const std::string& message);
  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

// Accepts YAML, or JSON when the document starts with '{'.
Specification parse_spec(const std::string& document);
Specification load_spec_file(const std::string& path);

// Canonical form: sorted keys, two-space indent, ASCII-escaped, shortest
// round-trip numbers. It is JSON and therefore also valid YAML.
std::string serialize_spec(const Specification& spec);
Json spec_to_json(const Specification& spec);
Specification spec_from_json(const Json& tree);

// YAML text to a JSON tree. Quoted scalars stay strings; plain scalars get
// null/bool/int/float inference.
Json yaml_to_json(const std::string& document);

// ── Lints ──

using DispatchGraph = std::map<std::string, std::set<Site>>;

struct LintFinding {
  std::string lint;  // i2_completeness | i6_layer_class | i7_no_bypass | escalation_timeout | router_capacity
  std::optional<std::string> constraint_id;
  std::optional<std::string> tool;
  std::string detail;
};

std::vector<LintFinding> validate_spec(const Specification& spec, const DispatchGraph& dispatch_graph);

// Dispatch graph where every declared tool traverses every agent-loop site
// and each hosting tool's declared hooks: the reference deployment.
DispatchGraph full_dispatch_graph(const Specification& spec);
Json dispatch_graph_to_json(const DispatchGraph& g);
DispatchGraph dispatch_graph_from_json(const Json& j);

// Class/site compatibility per the canonical mapping.
bool site_compatible(ConstraintClass cls, Site site);

// ── Applicability ──

// A constraint applies to an action when its predicate's tool guard admits the
// tool, its verification tool (if any) matches, and every action.args
// parameter it references is declared by the tool's signature.
bool constraint_applies(const Specification& spec, const ConstraintDef& c, const std::string& tool);
std::vector<const ConstraintDef*> applicable_constraints(const Specification& spec, const std::string& tool);

// A bound constraint is a check only when every bound principal (by id or
// role) is among `present`; an unbound one always is.
bool binding_satisfied(const ConstraintDef& c, const std::set<std::string>& present);

// Escalation precedence: regulatory > contractual > operational > ethical,
// then source reference and id lexicographically.
bool escalation_precedes(const ConstraintDef& a, const ConstraintDef& b);

// Hard and soft predicates state admissibility (they fire when false);
// escalation predicates state the trigger (they fire when true).
bool fires_when_true(ConstraintClass cls);

}  // namespace sarc::spec

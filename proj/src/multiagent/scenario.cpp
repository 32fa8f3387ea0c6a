#include <filesystem>
#include <fstream>
#include <sstream>

#include "sarc/multiagent.hpp"

namespace sarc::multiagent {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw std::invalid_argument("scenario " + path + ": " + msg);
}

const Json& need(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) bad(path, "missing '" + key + "'");
  return j.at(key);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FieldMap fields_from(const Json& j, const std::string& path) {
  FieldMap out;
  if (j.is_null()) return out;
  if (!j.is_object()) bad(path, "expected a mapping of fields");
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = value_from_json(it.value());
  return out;
}

Principal principal_from(const Json& j, const std::string& path) {
  Principal p;
  p.id = need(j, "id", path).get<std::string>();
  p.role = j.value("role", "");
  for (const auto& c : j.value("authority", Json::array())) p.authority.insert(c.get<std::string>());
  p.attributes = fields_from(j.value("attributes", Json::object()), path + ".attributes");
  return p;
}

std::vector<Action> plan_from(const Json& j, const std::string& path) {
  std::vector<Action> out;
  if (j.is_null()) return out;
  if (!j.is_array()) bad(path, "expected a list of actions");
  for (std::size_t i = 0; i < j.size(); ++i) {
    Json a = j[i];
    if (!a.contains("plan_index")) a["plan_index"] = static_cast<int>(i);
    out.push_back(action_from_json(a));
  }
  return out;
}

Agent agent_from(const Json& j, const std::string& base, const std::string& path) {
  Agent a;
  a.id = need(j, "id", path).get<std::string>();
  std::string rel = need(j, "spec", path).get<std::string>();
  a.spec = spec::load_spec_file((std::filesystem::path(base) / rel).string());
  a.principal = principal_from(need(j, "principal", path), path + ".principal");
  return a;
}

SubTask task_from(const Json& j, const std::string& path) {
  SubTask t;
  t.id = need(j, "id", path).get<std::string>();
  t.worker = need(j, "worker", path).get<std::string>();
  t.plan = plan_from(j.value("plan", Json::array()), path + ".plan");
  t.action_class = j.value("action_class", "");
  for (const auto& p : j.value("principals", Json::array())) t.principals.push_back(principal_from(p, path + ".principals"));
  if (j.contains("rule")) {
    const auto& r = j["rule"];
    std::string kind = need(r, "kind", path + ".rule").get<std::string>();
    if (kind == "all_of") t.rule.kind = CompositionKind::all_of;
    else if (kind == "any_of") t.rule.kind = CompositionKind::any_of;
    else bad(path + ".rule", "unknown composition kind '" + kind + "'");
    if (r.contains("qualifier")) t.rule.qualifier = r["qualifier"].get<std::string>();
  }
  std::size_t n = 0;
  for (const auto& c : j.value("children", Json::array()))
    t.children.push_back(task_from(c, path + ".children[" + std::to_string(n++) + "]"));
  for (const auto& im : j.value("imports", Json::array())) {
    Import imp;
    std::string ipath = path + ".imports";
    imp.value.id = need(im, "id", ipath).get<std::string>();
    imp.value.payload = im.value("payload", "");
    if (im.contains("tag") && !im["tag"].is_null()) {
      const auto& tg = im["tag"];
      imp.value.tag = TrustTag{tg.value("source", ""), tg.value("authentication_context", ""),
                               tg.value("classification", ""), tg.value("inside_boundary", false)};
    }
    auto stakes = stakes_from(im.value("stakes", "low"));
    if (!stakes) bad(ipath, "stakes must be low or high");
    imp.stakes = *stakes;
    if (im.contains("injected")) imp.injected = plan_from(Json::array({im["injected"]}), ipath + ".injected").front();
    t.imports.push_back(std::move(imp));
  }
  return t;
}

}  // namespace

Scenario parse_scenario(const std::string& yaml, const std::string& base_dir) {
  Json j = spec::yaml_to_json(yaml);
  const std::string path = "";
  Scenario s;
  s.name = need(j, "scenario", path).get<std::string>();
  s.failure_mode = j.value("failure_mode", "");
  s.defense = j.value("defense", "");
  if (!s.defense.empty()) with_defense({}, s.defense, true);  // validates the flag name
  auto& w = s.workflow;
  w.origin = principal_from(need(j, "origin", path), "origin");
  w.orchestrator = agent_from(need(j, "orchestrator", path), base_dir, "orchestrator");
  for (const auto& wj : j.value("workers", Json::array())) {
    Agent a = agent_from(wj, base_dir, "workers");
    std::string id = a.id;
    if (!w.workers.emplace(id, std::move(a)).second) bad("workers", "duplicate worker '" + id + "'");
  }
  w.state = fields_from(j.value("state", Json::object()), "state");
  w.orchestrator_plan = plan_from(j.value("orchestrator_plan", Json::array()), "orchestrator_plan");
  std::size_t n = 0;
  for (const auto& tj : j.value("tasks", Json::array())) w.tasks.push_back(task_from(tj, "tasks[" + std::to_string(n++) + "]"));
  if (j.contains("gateway")) {
    const auto& g = j["gateway"];
    auto& gp = w.gateway;
    gp.constraint_id = g.value("constraint_id", gp.constraint_id);
    gp.trust_predicate = g.value("trust_predicate", gp.trust_predicate);
    std::string cls = g.value("high_stakes_class", "escalation");
    if (cls == "escalation") gp.high_stakes_class = spec::ConstraintClass::escalation;
    else if (cls == "hard") gp.high_stakes_class = spec::ConstraintClass::hard;
    else bad("gateway.high_stakes_class", "must be escalation or hard");
    gp.sanitize_low_stakes = g.value("sanitize_low_stakes", gp.sanitize_low_stakes);
    gp.router_group = g.value("router_group", gp.router_group);
    gp.reversibility_window_s = g.value("reversibility_window_s", gp.reversibility_window_s);
  }
  if (j.contains("suppliers"))
    for (auto it = j["suppliers"].begin(); it != j["suppliers"].end(); ++it)
      s.suppliers[it.key()] = fields_from(it.value(), "suppliers." + it.key());
  std::string ops = j.value("operators", "approve_all");
  if (ops == "approve_all") s.operators = escalation::RulingPolicy::approve_all();
  else if (ops == "deny_all") s.operators = escalation::RulingPolicy::deny_all();
  else bad("operators", "must be approve_all or deny_all");
  if (j.contains("violation")) {
    s.violation = j["violation"].get<std::string>();
    predicate::parse_predicate(*s.violation);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  return parse_scenario(read_file(path), std::filesystem::path(path).parent_path().string());
}

Defenses with_defense(const Defenses& base, const std::string& flag, bool on) {
  Defenses d = base;
  if (flag == "propagate_constraints") d.propagate_constraints = on;
  else if (flag == "intersect_authority") d.intersect_authority = on;
  else if (flag == "gateway") d.gateway = on;
  else if (flag == "preserve_attribution") d.preserve_attribution = on;
  else throw std::invalid_argument("unknown defense '" + flag + "'");
  return d;
}

ScenarioOutcome run_scenario(const Scenario& s, const Defenses& defenses, std::uint64_t seed) {
  auto cstar = composed_spec(s.workflow);
  engine::ToolRegistry tools = engine::procurement_tools();
  tools.wire_declared_hooks(cstar);
  engine::World world;
  world.suppliers = s.suppliers;
  auto router = escalation::EscalationRouter::from_spec(cstar, seed);
  router.set_policy(s.operators);
  engine::FaultModel faults(0.0, 0.0, seed);
  engine::Clock clock(0.0);

  ScenarioOutcome out;
  out.result = orchestrate(s.workflow, OrchestrationEnv{tools, world, router, faults, clock}, defenses);
  std::optional<predicate::PredicateExpr> viol;
  if (s.violation) viol = predicate::parse_predicate(*s.violation);
  for (const auto& rj : tree_records(out.result.tree)) {
    if (!viol || !rj.value("dispatched", false)) continue;
    predicate::EvalContext ctx;
    Action a = action_from_json(rj.at("action"));
    ctx.action = predicate::ActionView{a.tool, a.args};
    if (predicate::eval_predicate(*viol, ctx).outcome == predicate::Outcome::fired) ++out.executed_violations;
  }
  out.attribution_breaks = attribution_breaks(out.result.tree, s.workflow.origin.id);
  out.audit = audit::check_tree(cstar, out.result.tree);
  return out;
}

}  // namespace sarc::multiagent

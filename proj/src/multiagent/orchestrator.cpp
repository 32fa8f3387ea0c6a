#include <algorithm>
#include <sstream>

#include "sarc/multiagent.hpp"

namespace sarc::multiagent {

using engine::ConstraintEvent;
using engine::EventOutcome;
using engine::TraceRecord;
using spec::ConstraintClass;
using spec::ConstraintDef;
using spec::ResponseKind;
using spec::Site;

// ── Composed specification ──

spec::Specification composed_spec(const Workflow& w) {
  spec::Specification out = w.orchestrator.spec;
  std::vector<std::vector<ConstraintDef>> sets = {w.orchestrator.spec.constraints};
  std::map<std::string, const ConstraintDef*> by_id;
  for (const auto& c : w.orchestrator.spec.constraints) by_id[c.id] = &c;
  for (const auto& [id, agent] : w.workers) {
    sets.push_back(agent.spec.constraints);
    for (const auto& c : agent.spec.constraints) {
      auto [it, fresh] = by_id.emplace(c.id, &c);
      if (!fresh && !(*it->second == c))
        throw spec::SpecError(spec::SpecError::Kind::invalid, "constraints." + c.id,
                              "constraint '" + c.id + "' is declared differently by agent '" + id + "'");
    }
    for (const auto& t : agent.spec.action_space.tools) {
      auto& tools = out.action_space.tools;
      if (std::none_of(tools.begin(), tools.end(), [&](const auto& x) { return x.name == t.name; })) tools.push_back(t);
    }
    for (const auto& [g, group] : agent.spec.router_groups) out.router_groups.emplace(g, group);
  }
  out.constraints = compose_constraints(sets).all();
  // Unbound non-regulatory constraints bind to the one principal declaring them.
  std::map<std::string, std::set<std::string>> declared_by;
  for (const auto& c : w.orchestrator.spec.constraints) declared_by[c.id].insert(w.orchestrator.principal.id);
  for (const auto& [id, agent] : w.workers)
    for (const auto& c : agent.spec.constraints) declared_by[c.id].insert(agent.principal.id);
  for (auto& c : out.constraints) {
    bool regulatory = c.src && c.src->kind == spec::SourceKind::regulatory;
    const auto& who = declared_by[c.id];
    if (!c.authority_binding && !regulatory && who.size() == 1) c.authority_binding = std::vector<std::string>(who.begin(), who.end());
  }
  return out;
}

namespace {

// ── Worker execution ──

struct WorkerOutcome {
  std::vector<TraceRecord> trace;
  engine::AgentState state;
  bool aborted = false;
};

WorkerOutcome run_worker(const spec::Specification& spec, const std::vector<Action>& plan, const std::string& planner_id,
                         const AttributionTuple& attribution, engine::AgentState initial, engine::ToolRegistry& tools,
                         engine::World& world, escalation::EscalationRouter& router, engine::FaultModel& faults,
                         engine::Clock& clock, const engine::GovernorConfig& config) {
  engine::Governor gov(spec, tools, world, router, faults, clock, config);
  engine::ScriptedPlanner planner(plan, planner_id);
  WorkerOutcome out;
  out.state = std::move(initial);
  out.state.clock = clock.now();
  const int horizon = static_cast<int>(plan.size()) * 4 + 4;
  for (int t = 0; t < horizon; ++t) {
    if (auto until = gov.throttle_until(); until && clock.now() < *until) clock.set(*until);
    auto a = planner.propose(out.state);
    if (!a) break;
    auto o = gov.step(out.state, *a, attribution);
    if (o.kind == engine::StepKind::denied) planner.on_denied(*a);
    else if (o.kind == engine::StepKind::deferred) planner.on_deferred(*a);
    else if (o.kind == engine::StepKind::aborted || o.kind == engine::StepKind::refused) {
      out.aborted = true;
      break;
    }
  }
  out.trace = gov.take_trace();
  return out;
}

bool pre_dispatch_class(const ConstraintDef& c) {
  return c.cls && (*c.cls == ConstraintClass::hard || *c.cls == ConstraintClass::escalation);
}

// A planned action somewhere in a sub-task's subtree, with the layers from the
// root down to the agent that will run it.
struct PlannedAction {
  const Action* action;
  std::vector<LayerPaths> stack;
  std::set<std::string> names;  // principals on the executing chain
};

struct DispatchedRecord {
  TraceRecord record;
  std::vector<LayerPaths> stack;
};

class Orchestrator {
 public:
  Orchestrator(const Workflow& w, OrchestrationEnv& env, const Defenses& d, OrchestrationResult& out)
      : w_(w), env_(env), d_(d), out_(out), cstar_(composed_spec(w)) {}

  void run() {
    root_layer_ = layer_paths(w_.orchestrator.spec);
    root_chain_ = {w_.origin.entry(), w_.orchestrator.principal.entry()};
    root_spec_ = effective_spec(w_.orchestrator.spec, root_layer_, chain_names(root_chain_));
    root_attr_ = AttributionTuple{root_chain_, w_.orchestrator.id, w_.orchestrator.id, "", chain_authority(root_chain_), {}};
    out_.tree = Json{{"attribution", attribution_to_json(root_attr_)}, {"children", Json::array()}};
    root_gov_.emplace(*root_spec_, env_.tools, env_.world, env_.router, env_.faults, env_.clock, env_.config);
    root_state_.fields = w_.state;
    root_state_.clock = env_.clock.now();
    root_state_.ledger_size = env_.world.ledger.size();
    try {
      for (const auto& a : w_.orchestrator_plan) root_step(a);
      for (const auto& t : w_.tasks) {
        Json& root_children = out_.tree["children"];
        dispatch(0, root_state_, root_chain_, {root_layer_}, t, root_children, true);
      }
    } catch (const WorkflowAbort& e) {
      out_.abort_reason = e.what();
    }
    if (!d_.preserve_attribution) summarize_tree();
  }

 private:
  std::shared_ptr<const spec::Specification> effective_spec(const spec::Specification& own, const LayerPaths& layer,
                                                            const std::set<std::string>& names) {
    auto s = std::make_shared<spec::Specification>(own);
    if (d_.propagate_constraints) {
      s->constraints.clear();
      for (const auto& c : cstar_.constraints)
        if (decidable_at(c, layer) && spec::binding_satisfied(c, names)) s->constraints.push_back(c);
      for (const auto& [g, group] : cstar_.router_groups) s->router_groups.emplace(g, group);
    }
    return s;
  }

  void root_step(const Action& a) {
    // Workers may have placed spend since the orchestrator last stepped.
    root_state_.ledger_size = env_.world.ledger.size();
    root_gov_->step(root_state_, a, root_attr_);
    out_.tree["children"].push_back({{"kind", "record"}, {"record", engine::record_to_json(root_gov_->trace().back())}});
  }

  predicate::EvalContext context(const engine::AgentState& s, const Action& a, std::size_t upto) const {
    predicate::EvalContext ctx;
    ctx.state_fields = s.fields;
    ctx.action = predicate::ActionView{a.tool, a.args};
    ctx.clock_now = Timestamp{env_.clock.now()};
    const engine::SpendLedger* ledger = &env_.world.ledger;
    double now = env_.clock.now();
    ctx.rolling_window = [ledger, upto, now](const std::string& p) { return ledger->window(p, now, upto); };
    return ctx;
  }

  // The chain a sub-task's worker acts under.
  PrincipalChain child_chain(const PrincipalChain& parent, const SubTask& t) const {
    PrincipalChain chain;
    if (d_.intersect_authority) {
      chain = parent;
      if (!t.principals.empty()) {
        std::string id = t.rule.kind == CompositionKind::all_of ? "all_of(" : "any_of(";
        for (std::size_t i = 0; i < t.principals.size(); ++i) id += (i ? "," : "") + t.principals[i].id;
        chain.push_back({id + ")", "composed", compose_authority(t.action_class, t.principals, t.rule)});
      }
    }
    chain.push_back(worker(t.worker).principal.entry());
    return chain;
  }

  void collect(const SubTask& t, std::vector<LayerPaths> stack, const PrincipalChain& parent,
               std::vector<PlannedAction>& out) const {
    stack.push_back(layer_paths(worker(t.worker).spec));
    PrincipalChain chain = child_chain(parent, t);
    auto names = chain_names(chain);
    for (const auto& a : t.plan) out.push_back({&a, stack, names});
    for (const auto& c : t.children) collect(c, stack, chain, out);
  }

  const Agent& worker(const std::string& id) const {
    auto it = w_.workers.find(id);
    if (it == w_.workers.end()) throw std::invalid_argument("sub-task names unknown worker '" + id + "'");
    return it->second;
  }

  // Evaluates the constraints that no deeper layer of the subtree can decide.
  // Returns false when the sub-task must not be dispatched.
  bool rescue(int layer, const engine::AgentState& s, const SubTask& t, const std::vector<LayerPaths>& stack,
              const PrincipalChain& parent_chain, Json& events) {
    std::vector<PlannedAction> planned;
    collect(t, stack, parent_chain, planned);
    bool allowed = true;
    for (const auto& c : cstar_.constraints) {
      if (!pre_dispatch_class(c)) continue;
      for (std::size_t k = 0; k < planned.size() && allowed; ++k) {
        const auto& pa = planned[k];
        const Action& a = *pa.action;
        int reach = static_cast<int>(pa.stack.size()) - 1;
        if (!spec::constraint_applies(cstar_, c, a.tool) || !spec::binding_satisfied(c, pa.names)) continue;
        if (rescue_layer(c, 0, reach, pa.stack) != layer) continue;
        allowed = rescue_one(layer, s, c, a, t.id, reach, events);
      }
      if (!allowed) break;
    }
    return allowed;
  }

  bool rescue_one(int layer, const engine::AgentState& s, const ConstraintDef& c, const Action& a,
                  const std::string& task_id, int reach, Json& events) {
    ConstraintEvent e;
    e.constraint_id = c.id;
    e.cls = *c.cls;
    e.site = Site::orchestration;
    e.outcome = EventOutcome::undecidable_rescued;
    e.rescue = engine::RescueInfo{layer, Site::orchestration};
    e.detail = {{"sub_task", task_id}, {"tool", a.tool}, {"plan_index", a.plan_index}, {"reach_layer", reach}};
    auto r = predicate::eval_predicate(c.pred->expr, context(s, a, env_.world.ledger.size()));
    bool allowed = true;
    if (r.outcome == predicate::Outcome::undecidable) {
      e.rescue_fired = true;
      e.response_taken = ResponseKind::block;
      e.detail["undecidable"] = true;
      allowed = false;
    } else {
      bool fired_true = r.outcome == predicate::Outcome::fired;
      e.rescue_fired = spec::fires_when_true(*c.cls) ? fired_true : !fired_true;
    }
    if (e.rescue_fired && !e.response_taken) {
      ResponseKind kind = c.resp ? c.resp->kind : ResponseKind::block;
      e.response_taken = kind;
      if (kind == ResponseKind::block) {
        allowed = false;
      } else if (kind == ResponseKind::abort) {
        events.push_back(engine::event_to_json(e));
        throw WorkflowAbort("constraint " + c.id + " aborted the workflow at sub-task " + task_id);
      } else if (kind == ResponseKind::suspend_and_route) {
        escalation::Ticket ticket{a, c.id, c.resp->router_group.value_or(""), env_.clock.now(),
                                  c.timeout ? c.timeout->reversibility_window_s : 0.0};
        auto ruling = env_.router.route(ticket);
        e.ruling = ruling;
        if (env_.config.block_on_escalation) env_.clock.set(std::max(env_.clock.now(), ruling.decided_at));
        bool allow_timeout = c.timeout && c.timeout->on_timeout == spec::OnTimeout::allow;
        allowed = ruling.kind == escalation::RulingKind::approve ||
                  (ruling.kind == escalation::RulingKind::timeout && allow_timeout);
      }
    }
    events.push_back(engine::event_to_json(e));
    return allowed;
  }

  // Soft constraints a worker could not decide, checked after it returns.
  void deferred_soft(int layer, const engine::AgentState& s, const std::vector<DispatchedRecord>& done,
                     std::size_t ledger_before, Json& events) {
    if (!d_.propagate_constraints) return;
    for (const auto& c : cstar_.constraints) {
      if (!c.cls || *c.cls != ConstraintClass::soft) continue;
      for (const auto& dr : done) {
        int reach = static_cast<int>(dr.stack.size()) - 1;
        if (!dr.record.dispatched || !spec::constraint_applies(cstar_, c, dr.record.action.tool)) continue;
        if (!spec::binding_satisfied(c, chain_names(dr.record.attribution.chain))) continue;
        if (rescue_layer(c, 0, reach, dr.stack) != layer) continue;
        ConstraintEvent e;
        e.constraint_id = c.id;
        e.cls = ConstraintClass::soft;
        e.site = Site::PAA;
        e.outcome = EventOutcome::undecidable_rescued;
        e.rescue = engine::RescueInfo{layer, Site::PAA};
        e.detail = {{"record_index", dr.record.index}, {"tool", dr.record.action.tool}, {"reach_layer", reach}};
        auto r = predicate::eval_predicate(c.pred->expr, context(s, dr.record.action, ledger_before));
        e.rescue_fired = r.outcome != predicate::Outcome::fired;
        if (r.outcome == predicate::Outcome::undecidable) e.detail["undecidable"] = true;
        if (e.rescue_fired) {
          e.response_taken = c.resp ? c.resp->kind : ResponseKind::log;
          if (c.cost) e.detail["cost"] = *c.cost;
        }
        events.push_back(engine::event_to_json(e));
      }
    }
  }

  std::vector<DispatchedRecord> dispatch(int layer, engine::AgentState& parent_state, const PrincipalChain& parent_chain,
                                         const std::vector<LayerPaths>& stack, const SubTask& t, Json& siblings,
                                         bool at_root) {
    const Agent& wk = worker(t.worker);
    LayerPaths wl = layer_paths(wk.spec);
    std::vector<LayerPaths> stack_w = stack;
    stack_w.push_back(wl);

    PrincipalChain chain = child_chain(parent_chain, t);
    AuthoritySet auth = chain_authority(chain);

    Json node = {{"kind", "dispatch"}, {"sub_task", t.id}, {"worker_id", wk.id}, {"layer", layer + 1},
                 {"events", Json::array()}, {"children", Json::array()}};
    AttributionTuple node_attr{chain, parent_chain.empty() ? "" : parent_chain.back().id, wk.id, "", auth, {}};
    auto finish = [&](const std::string& status) {
      for (const auto& e : node["events"]) node_attr.c_eval.push_back(e.at("constraint_id").get<std::string>());
      node["attribution"] = attribution_to_json(node_attr);
      node["status"] = status;
      siblings.push_back(std::move(node));
    };

    if (auth.empty()) {
      finish("aborted");
      throw WorkflowAbort("authority degradation to empty at sub-task " + t.id);
    }
    if (d_.propagate_constraints) {
      bool allowed = false;
      try {
        allowed = rescue(layer, parent_state, t, stack, parent_chain, node["events"]);
      } catch (const WorkflowAbort&) {
        finish("aborted");
        throw;
      }
      if (!allowed) {
        finish("blocked");
        return {};
      }
    }

    // ── Worker ──
    auto spec_w = effective_spec(wk.spec, wl, chain_names(chain));
    engine::AgentState init;
    init.fields = state_slice(parent_state.fields, wl);
    init.clock = env_.clock.now();
    init.ledger_size = env_.world.ledger.size();
    AttributionTuple attr{chain, wk.id, wk.id, "", auth, {}};
    WorkerRun run{t.id,     wk.id,       layer + 1,         spec_w,       init,       attr,    env_.config.skip,
                  env_.clock.now(), env_.world, env_.router, env_.faults, t.plan, {}};
    const std::size_t ledger_before = env_.world.ledger.size();
    auto result = run_worker(*spec_w, t.plan, wk.id, attr, init, env_.tools, env_.world, env_.router, env_.faults,
                             env_.clock, env_.config);
    run.trace = result.trace;
    out_.runs.push_back(std::move(run));

    std::vector<DispatchedRecord> done;
    for (const auto& r : result.trace) {
      node["children"].push_back({{"kind", "record"}, {"record", engine::record_to_json(r)}});
      done.push_back({r, stack_w});
    }
    if (!result.aborted) {
      for (const auto& child : t.children) {
        auto sub = dispatch(layer + 1, result.state, chain, stack_w, child, node["children"], false);
        done.insert(done.end(), sub.begin(), sub.end());
      }
    }
    deferred_soft(layer, parent_state, done, ledger_before, node["events"]);
    if (!t.imports.empty()) {
      if (!at_root) throw std::invalid_argument("imports are accepted only from sub-tasks of the root orchestrator");
      import_results(t, node);
    }
    finish(result.aborted ? "worker_aborted" : "completed");
    return done;
  }

  // ── Imported state ──

  void import_results(const SubTask& t, Json& node) {
    Json list = Json::array();
    std::vector<const Import*> act_on;
    for (const auto& imp : t.imports) {
      std::string payload = imp.value.payload;
      if (d_.gateway) {
        auto dec = gateway_check(imp.value, imp.stakes, w_.gateway);
        if (dec.verdict == GatewayVerdict::escalate) {
          const Action probe = imp.injected.value_or(Action{"gateway.import", {}, 0});
          escalation::Ticket ticket{probe, w_.gateway.constraint_id, w_.gateway.router_group, env_.clock.now(),
                                    w_.gateway.reversibility_window_s};
          auto ruling = env_.router.route(ticket);
          dec.event.ruling = ruling;
          dec.payload = ruling.kind == escalation::RulingKind::approve ? imp.value.payload : "";
          dec.event.detail["admitted"] = ruling.kind == escalation::RulingKind::approve;
        }
        payload = dec.payload;
        list.push_back({{"import", imp.value.id},
                        {"verdict", to_string(dec.verdict)},
                        {"event", engine::event_to_json(dec.event)},
                        {"removed_lines", dec.removed_lines}});
        out_.gateway.emplace_back(t.id, dec);
      }
      std::istringstream in(payload);
      bool carries_instruction = false;
      for (std::string line; std::getline(in, line);) carries_instruction = carries_instruction || instruction_like(line);
      if (imp.injected && carries_instruction) act_on.push_back(&imp);
    }
    if (!list.empty()) node["imports"] = list;
    // The orchestrator plans over what the import told it.
    for (const auto* imp : act_on) {
      root_step(*imp->injected);
      if (out_.tree["children"].back()["record"].value("dispatched", false)) ++out_.executed_injections;
    }
  }

  // ── Attribution summarization (defense off) ──

  void summarize_tree() {
    Json flat = Json::array();
    for (auto rec : tree_records(out_.tree)) {
      auto a = attribution_from_json(rec.at("attribution"));
      if (!a.chain.empty()) a.chain = {a.chain.back()};
      a.auth = chain_authority(a.chain);
      rec["attribution"] = attribution_to_json(a);
      flat.push_back({{"kind", "record"}, {"record", rec}});
    }
    out_.tree["children"] = flat;
  }

  const Workflow& w_;
  OrchestrationEnv& env_;
  const Defenses& d_;
  OrchestrationResult& out_;
  spec::Specification cstar_;
  LayerPaths root_layer_;
  std::shared_ptr<const spec::Specification> root_spec_;
  PrincipalChain root_chain_;
  AttributionTuple root_attr_;
  std::optional<engine::Governor> root_gov_;
  engine::AgentState root_state_;
};

void walk_records(const Json& node, std::vector<Json>& out) {
  for (const auto& child : node.value("children", Json::array())) {
    if (child.value("kind", "") == "record") out.push_back(child.at("record"));
    else walk_records(child, out);
  }
}

void walk_groups(const Json& node, std::map<std::string, std::vector<Json>>& out) {
  for (const auto& child : node.value("children", Json::array())) {
    if (child.value("kind", "") != "dispatch") continue;
    auto& group = out[child.value("sub_task", "")];
    for (const auto& g : child.value("children", Json::array()))
      if (g.value("kind", "") == "record") group.push_back(g.at("record"));
    walk_groups(child, out);
  }
}

int depth_of(const Json& node) {
  int best = 0;
  for (const auto& child : node.value("children", Json::array()))
    if (child.value("kind", "") == "dispatch") best = std::max(best, 1 + depth_of(child));
  return best;
}

}  // namespace

OrchestrationResult orchestrate(const Workflow& w, OrchestrationEnv env, const Defenses& defenses) {
  OrchestrationResult out;
  Orchestrator(w, env, defenses, out).run();
  return out;
}

std::vector<TraceRecord> replay(const WorkerRun& run, engine::ToolRegistry& tools, const engine::GovernorConfig& config) {
  engine::World world = run.world;
  escalation::EscalationRouter router = run.router;
  engine::FaultModel faults = run.faults;
  engine::Clock clock(run.clock_start);
  engine::GovernorConfig cfg = config;
  cfg.skip = run.skip;
  return run_worker(*run.spec, run.plan, run.worker, run.attribution, run.initial, tools, world, router, faults, clock, cfg)
      .trace;
}

// ── Tree inspection ──

std::vector<Json> tree_records(const Json& tree) {
  std::vector<Json> out;
  walk_records(tree, out);
  return out;
}

std::map<std::string, std::vector<Json>> regroup(const Json& tree) {
  std::map<std::string, std::vector<Json>> out;
  walk_groups(tree, out);
  return out;
}

std::size_t attribution_breaks(const Json& tree, const std::string& origin_id) {
  std::size_t n = 0;
  for (const auto& rec : tree_records(tree)) {
    const auto& chain = rec.at("attribution").at("chain");
    if (chain.empty() || chain.front().value("id", "") != origin_id) ++n;
  }
  return n;
}

int dispatch_depth(const Json& tree) { return depth_of(tree); }

}  // namespace sarc::multiagent

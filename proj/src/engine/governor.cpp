#include <algorithm>

#include "sarc/engine.hpp"

namespace sarc::engine {

using spec::ConstraintClass;
using spec::ConstraintDef;
using spec::ResponseKind;
using spec::Site;

namespace {

bool hook_site(Site s) { return s == Site::tool_layer || s == Site::policy_layer; }

std::string principal_of(const FieldMap& f) {
  auto it = f.find("principal");
  return it != f.end() && it->second.type() == ValueType::text ? it->second.as_text() : "";
}

double euros(Money m) { return static_cast<double>(m.cents) / 100.0; }

struct Check {
  bool fired = false;
  bool undecidable = false;
  Json detail = Json::object();
  std::optional<double> score;
  double overage = 0.0;
};

// Applies class polarity and the operating point. Undecidable and ill-typed
// predicates count as fired so the caller can fail safe.
Check check(const ConstraintDef& c, const predicate::EvalContext& ctx, std::optional<double> score) {
  Check k;
  if (c.pred) {
    try {
      auto r = predicate::eval_predicate(c.pred->expr, ctx);
      if (r.outcome == predicate::Outcome::undecidable) {
        k.fired = k.undecidable = true;
        k.detail["undecidable"] = true;
        k.detail["missing"] = std::vector<std::string>(r.missing.begin(), r.missing.end());
      } else {
        bool truth = r.outcome == predicate::Outcome::fired;
        k.fired = spec::fires_when_true(*c.cls) ? truth : !truth;
      }
    } catch (const predicate::PredicateError& e) {
      k.fired = k.undecidable = true;
      k.detail["undecidable"] = true;
      k.detail["error"] = e.what();
    }
  }
  const auto& op = c.operating_point;
  if (score && op && op->kind == spec::OperatingPointKind::threshold && op->theta) {
    k.score = score;
    k.detail["score"] = *score;
    if (*score >= *op->theta) k.fired = true;
    k.overage = std::max(0.0, *score - *op->theta);
  }
  return k;
}

ConstraintEvent base_event(const ConstraintDef& c, Site site, int round) {
  ConstraintEvent e;
  e.constraint_id = c.id;
  e.cls = *c.cls;
  e.site = site;
  e.round = round;
  return e;
}

double backoff_s(const ConstraintDef& c, double overage) {
  if (!c.resp || !c.resp->backoff) return 0.0;
  double v = predicate::eval_formula(c.resp->backoff->formula, {{"overage", overage}});
  const auto& unit = c.resp->backoff->unit;
  if (unit == "ms" || unit == "milliseconds") v /= 1000.0;
  else if (unit == "minutes") v *= 60.0;
  return v;
}

}  // namespace

Governor::Governor(const spec::Specification& spec, ToolRegistry& tools, World& world,
                   escalation::EscalationRouter& router, FaultModel& faults, Clock& clock, GovernorConfig config)
    : spec_(spec), tools_(tools), world_(world), router_(router), faults_(faults), clock_(clock), config_(std::move(config)) {}

std::vector<TraceRecord> Governor::take_trace() {
  std::vector<TraceRecord> out;
  out.swap(trace_);
  return out;
}

std::optional<double> Governor::throttle_until() const {
  if (!throttle_) return std::nullopt;
  return throttle_->until;
}

const Governor::Plan& Governor::plan_for(const std::string& tool, const PrincipalChain& chain) {
  auto names = chain_names(chain);
  std::string key = tool;
  for (const auto& n : names) key += '\x1f' + n;
  auto it = plans_.find(key);
  if (it != plans_.end()) return it->second;
  Plan p;
  for (const auto* c : spec::applicable_constraints(spec_, tool)) {
    if (config_.skip.count(c->id) || !c->cls || !c->verif || !spec::binding_satisfied(*c, names)) continue;
    Site s = c->verif->point;
    if (s == Site::PAG || hook_site(s)) {
      if (*c->cls == ConstraintClass::hard) p.hard.push_back(c);
      else if (*c->cls == ConstraintClass::escalation) p.escalation.push_back(c);
      else p.other_pre.push_back(c);
    } else if (s == Site::ATM) {
      p.atm.push_back(c);
    } else if (s == Site::PAA) {
      p.paa.push_back(c);
    }
  }
  std::sort(p.hard.begin(), p.hard.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::sort(p.escalation.begin(), p.escalation.end(), [](auto* a, auto* b) { return spec::escalation_precedes(*a, *b); });
  return plans_.emplace(key, std::move(p)).first->second;
}

predicate::EvalContext Governor::context(const AgentState& s, const Action& a) const {
  predicate::EvalContext ctx;
  ctx.state_fields = s.fields;
  ctx.action = predicate::ActionView{a.tool, a.args};
  ctx.clock_now = Timestamp{clock_.now()};
  std::size_t upto = s.ledger_size;
  double now = clock_.now();
  const SpendLedger* ledger = &world_.ledger;
  ctx.rolling_window = [ledger, upto, now](const std::string& p) { return ledger->window(p, now, upto); };
  return ctx;
}

std::optional<double> Governor::score(const ConstraintDef& c, const AgentState& s) const {
  if (!c.operating_point || !c.operating_point->calibration_basis) return std::nullopt;
  const std::string& basis = *c.operating_point->calibration_basis;
  if (basis == "rolling_24h_spend")
    return euros(world_.ledger.window(principal_of(s.fields), clock_.now(), s.ledger_size));
  auto it = s.fields.find(basis);
  if (it == s.fields.end()) return std::nullopt;
  if (it->second.type() == ValueType::money) return euros(it->second.as_money());
  if (it->second.type() == ValueType::number) return it->second.as_number();
  return std::nullopt;
}

StepOutcome Governor::step(AgentState& s, const Action& proposed, const AttributionTuple& attribution) {
  TraceRecord rec;
  rec.index = next_index_++;
  rec.step = s.step;
  rec.time_s = clock_.now();
  rec.attribution = attribution;
  if (!attribution.chain.empty()) rec.attribution.auth = chain_authority(attribution.chain);

  const AgentState pre = s;
  AgentState post = pre;
  Action a = proposed;
  auto& ev = rec.evaluated;
  StepOutcome out;

  auto finish = [&](StepKind kind, std::optional<Termination> term) {
    rec.action = a;
    rec.attribution.tool = a.tool;
    rec.attribution.c_eval.clear();
    std::set<std::string> keep;
    for (const auto& e : ev) {
      rec.attribution.c_eval.push_back(e.constraint_id);
      if (const auto* c = spec_.find(e.constraint_id)) keep.insert(c->trace_fields.begin(), c->trace_fields.end());
    }
    rec.pre = digest_state(pre.fields, keep);
    rec.post = digest_state(post.fields, keep);
    rec.terminated_by = term;
    rec.latency_ms = config_.latency.model_ms + (rec.dispatched ? config_.latency.tool_ms : 0.0);
    for (auto site : rec.sites_traversed) rec.latency_ms += config_.latency.site_cost(site);
    if (kind != StepKind::dispatched) rec.reward = 0.0;
    out.kind = kind;
    out.termination = term;
    out.record_index = rec.index;
    s = rec.dispatched ? post : pre;
    s.step = pre.step + 1;
    s.clock = clock_.now();
    trace_.push_back(std::move(rec));
    return out;
  };

  // Routes one fired escalation-style response. Returns a termination, a
  // replacement action, or nothing when the action may proceed.
  struct Routed {
    std::optional<Termination> stop;
    StepKind kind = StepKind::dispatched;
    std::optional<Action> modified;
  };
  auto route = [&](const ConstraintDef& c, ConstraintEvent& e, const Action& act) -> Routed {
    escalation::Ticket t;
    t.action = act;
    t.constraint_id = c.id;
    t.group = c.resp->router_group.value_or("");
    t.enqueue_time = clock_.now();
    t.reversibility_window_s = c.timeout ? c.timeout->reversibility_window_s : 0.0;
    auto ruling = router_.route(t);
    e.ruling = ruling;
    if (config_.block_on_escalation) clock_.set(std::max(clock_.now(), ruling.decided_at));
    switch (ruling.kind) {
      case escalation::RulingKind::approve: return {};
      case escalation::RulingKind::deny: return {Termination{c.id, e.site, "deny"}, StepKind::denied, {}};
      case escalation::RulingKind::modify: return {{}, StepKind::dispatched, ruling.modified};
      case escalation::RulingKind::timeout:
        if (c.timeout && c.timeout->on_timeout == spec::OnTimeout::allow) return {};
        return {Termination{c.id, e.site, "timeout"}, StepKind::aborted, {}};
    }
    return {};
  };

  // ── Throttle gate ──
  // A throttled principal's spend actions wait here before any evaluation;
  // they reach PAG once released.
  if (throttle_) {
    const ConstraintDef* c = spec_.find(throttle_->constraint_id);
    if (c && throttle_->principal == principal_of(pre.fields) && spec::constraint_applies(spec_, *c, a.tool)) {
      double now = clock_.now();
      ConstraintEvent e = base_event(*c, Site::PAA, 1);
      e.outcome = EventOutcome::fired;
      e.response_taken = ResponseKind::throttle;
      if (now < throttle_->until) {
        e.detail = {{"gate", "deferred"}, {"until", throttle_->until}};
        ev.push_back(std::move(e));
        return finish(StepKind::deferred, Termination{c->id, Site::PAA, "throttle"});
      }
      double w = euros(world_.ledger.window(throttle_->principal, now, world_.ledger.size()));
      double theta = c->operating_point && c->operating_point->theta ? *c->operating_point->theta : w + 1;
      if (w >= theta) {
        // Held at least until enough spend ages out of the window.
        double b = backoff_s(*c, w - theta);
        double release = world_.ledger.release_time(throttle_->principal, now, Money{euros_to_cents(theta)});
        throttle_->until = std::max(now + b, release);
        out.throttle_backoff_s = b;
        e.detail = {{"gate", "rearmed"}, {"score", w}, {"overage", w - theta}, {"backoff_s", b}, {"until", throttle_->until}};
        ev.push_back(std::move(e));
        return finish(StepKind::deferred, Termination{c->id, Site::PAA, "throttle"});
      }
      throttle_.reset();
    }
  }

  // ── PAG, including tool-hosted hooks ──
  for (int round = 1;; ++round) {
    rec.pag_rounds = round;
    rec.sites_traversed.push_back(Site::PAG);
    if (round > config_.max_pag_rounds) return finish(StepKind::aborted, Termination{"", Site::PAG, "abort"});
    const Plan& plan = plan_for(a.tool, rec.attribution.chain);
    for (const auto* list : {&plan.hard, &plan.escalation, &plan.other_pre})
      for (const auto* c : *list)
        if (hook_site(c->verif->point) && !tools_.hook_wired(c->verif->tool.value_or(a.tool), c->id))
          throw EnforcementInactive(c->id, a.tool);

    auto ctx = context(pre, a);
    std::set<Site> hooks_seen;
    std::optional<Action> replan;
    auto gated = [&](const ConstraintDef& c) -> std::optional<StepOutcome> {
      Site site = c.verif->point;
      if (hook_site(site) && hooks_seen.insert(site).second) rec.sites_traversed.push_back(site);
      ConstraintEvent e = base_event(c, site, round);
      Check k = check(c, ctx, std::nullopt);
      e.detail = k.detail;
      if (!k.fired) {
        ev.push_back(std::move(e));
        return std::nullopt;
      }
      e.outcome = EventOutcome::fired;
      ResponseKind declared = c.resp ? c.resp->kind : ResponseKind::block;
      if (k.undecidable) {
        // Fail safe: no rescue is available at this layer.
        e.response_taken = ResponseKind::block;
        ev.push_back(std::move(e));
        return finish(StepKind::aborted, Termination{c.id, site, "block"});
      }
      if (*c.cls != ConstraintClass::soft) {
        if (auto f = faults_.draw()) {
          e.fault = f;
          if (*f == FaultTag::pred_false_negative) e.outcome = EventOutcome::not_fired;
          ev.push_back(std::move(e));
          return std::nullopt;
        }
      }
      e.response_taken = declared;
      if (declared == ResponseKind::suspend_and_route) {
        Routed r = route(c, e, a);
        ev.push_back(std::move(e));
        if (r.stop) return finish(r.kind, r.stop);
        if (r.modified) replan = r.modified;
        return std::nullopt;
      }
      ev.push_back(std::move(e));
      if (declared == ResponseKind::block || declared == ResponseKind::abort)
        return finish(StepKind::aborted, Termination{c.id, site, to_string(declared)});
      return std::nullopt;
    };

    bool restarted = false;
    for (const auto* list : {&plan.hard, &plan.escalation, &plan.other_pre}) {
      for (const auto* c : *list) {
        if (auto done = gated(*c)) return *done;
        if (replan) break;
      }
      if (replan) {
        int idx = a.plan_index;
        a = *replan;
        a.plan_index = idx;
        restarted = true;
        break;
      }
    }
    if (!restarted) break;
  }

  // ── Authority ──
  if (!permits(rec.attribution.auth, a)) return finish(StepKind::refused, Termination{"", Site::PAG, "authority"});

  // ── Dispatch with ATM wrapping ──
  const Plan& plan = plan_for(a.tool, rec.attribution.chain);
  rec.dispatched = true;
  rec.sites_traversed.push_back(Site::ATM);
  auto atm_ctx = context(pre, a);
  double chunks = 0, cost = 0;
  std::optional<Termination> interrupted;
  std::map<std::string, ConstraintEvent> atm_events;
  auto atm_eval = [&](double n, double c_total) {
    atm_ctx.state_fields["atm.chunks"] = Value(n);
    atm_ctx.state_fields["atm.cost"] = Value(c_total);
    for (const auto* c : plan.atm) {
      Check k = check(*c, atm_ctx, std::nullopt);
      if (!k.fired) continue;
      ConstraintEvent e = base_event(*c, Site::ATM, rec.pag_rounds);
      e.outcome = EventOutcome::fired;
      e.response_taken = c->resp ? c->resp->kind : ResponseKind::abort;
      e.detail = k.detail;
      e.detail["chunks_delivered"] = chunks;
      e.detail["cost"] = cost;
      atm_events[c->id] = e;
      if (*c->cls == ConstraintClass::hard && !interrupted) {
        interrupted = Termination{c->id, Site::ATM, "abort"};
        return false;
      }
    }
    return true;
  };
  ToolContext tc{a, post, world_, clock_.now(), {}, Json::object()};
  tc.emit = [&](const Json&, double c) {
    if (interrupted) return false;
    if (!atm_eval(chunks + 1, cost + c)) return false;
    chunks += 1;
    cost += c;
    return true;
  };
  tools_.tool(a.tool)(tc);
  if (!interrupted) atm_eval(chunks, cost);
  for (const auto* c : plan.atm) {
    auto it = atm_events.find(c->id);
    if (it != atm_events.end()) {
      ev.push_back(it->second);
    } else {
      ConstraintEvent e = base_event(*c, Site::ATM, rec.pag_rounds);
      e.detail = {{"chunks_delivered", chunks}, {"cost", cost}};
      ev.push_back(std::move(e));
    }
  }
  rec.observation = tc.observation;
  if (interrupted) {
    rec.observation["interrupted"] = true;
    return finish(StepKind::aborted, interrupted);
  }

  // ── PAA ──
  rec.sites_traversed.push_back(Site::PAA);
  auto paa_ctx = context(post, a);
  // The rolling oracle sees the window before this action; the predicate adds
  // the action's own amount.
  {
    std::size_t upto = pre.ledger_size;
    double now = clock_.now();
    const SpendLedger* ledger = &world_.ledger;
    paa_ctx.rolling_window = [ledger, upto, now](const std::string& p) { return ledger->window(p, now, upto); };
  }
  std::optional<Termination> paa_stop;
  StepKind paa_kind = StepKind::dispatched;
  for (const auto* c : plan.paa) {
    ConstraintEvent e = base_event(*c, Site::PAA, rec.pag_rounds);
    Check k = check(*c, paa_ctx, score(*c, post));
    e.detail = k.detail;
    if (!k.fired) {
      ev.push_back(std::move(e));
      continue;
    }
    e.outcome = EventOutcome::fired;
    ResponseKind declared = c->resp ? c->resp->kind : ResponseKind::log;
    e.response_taken = declared;
    if (declared == ResponseKind::throttle) {
      double b = backoff_s(*c, k.overage);
      e.detail["overage"] = k.overage;
      e.detail["backoff_s"] = b;
      throttle_ = Throttle{c->id, principal_of(post.fields), clock_.now() + b};
      out.throttle_backoff_s = b;
    } else if (declared == ResponseKind::suspend_and_route) {
      Routed r = route(*c, e, a);
      if (r.stop && !paa_stop) {
        paa_stop = r.stop;
        paa_kind = r.kind;
      }
    } else if ((declared == ResponseKind::block || declared == ResponseKind::abort) && !paa_stop) {
      paa_stop = Termination{c->id, Site::PAA, to_string(declared)};
      paa_kind = StepKind::aborted;
    }
    ev.push_back(std::move(e));
  }
  if (paa_stop) return finish(paa_kind, paa_stop);
  rec.reward = config_.reward ? config_.reward(pre, a, post) : 0.0;
  return finish(StepKind::dispatched, std::nullopt);
}

// ── Stateless PAG ──

PagVerdict pag_check(const spec::Specification& spec, const AgentState& s, const Action& a, const World& world,
                     double now) {
  predicate::EvalContext ctx;
  ctx.state_fields = s.fields;
  ctx.action = predicate::ActionView{a.tool, a.args};
  ctx.clock_now = Timestamp{now};
  std::size_t upto = s.ledger_size;
  ctx.rolling_window = [&world, upto, now](const std::string& p) { return world.ledger.window(p, now, upto); };

  std::vector<const ConstraintDef*> hard, esc;
  for (const auto* c : spec::applicable_constraints(spec, a.tool)) {
    if (!c->cls || !c->verif) continue;
    Site site = c->verif->point;
    if (site != Site::PAG && !hook_site(site)) continue;
    if (*c->cls == ConstraintClass::hard) hard.push_back(c);
    else if (*c->cls == ConstraintClass::escalation) esc.push_back(c);
  }
  std::sort(hard.begin(), hard.end(), [](auto* x, auto* y) { return x->id < y->id; });
  std::sort(esc.begin(), esc.end(), [](auto* x, auto* y) { return spec::escalation_precedes(*x, *y); });

  auto verdict = [](PagVerdict::Kind kind, const ConstraintDef& c, const Check& k) {
    PagVerdict v{kind, c.id, c.verif->point, {}};
    if (k.undecidable) {
      v.kind = PagVerdict::Kind::block;
      for (const auto& m : k.detail.value("missing", Json::array())) v.missing.push_back(m.get<std::string>());
    }
    return v;
  };
  for (const auto* c : hard) {
    Check k = check(*c, ctx, std::nullopt);
    if (k.fired) return verdict(PagVerdict::Kind::block, *c, k);
  }
  for (const auto* c : esc) {
    Check k = check(*c, ctx, std::nullopt);
    if (k.fired) return verdict(PagVerdict::Kind::escalate, *c, k);
  }
  return {};
}

// ── Episodes ──

EpisodeResult run_episode(const spec::Specification& spec, Planner& planner, ToolRegistry& tools, World& world,
                          int horizon, const AttributionTuple& attribution_root, FaultModel& faults, Clock& clock,
                          escalation::EscalationRouter& router, EpisodeOptions options) {
  AttributionTuple attribution = attribution_root;
  if (attribution.planner_id.empty()) attribution.planner_id = planner.id();
  Governor gov(spec, tools, world, router, faults, clock, options.config);
  AgentState s = options.initial;
  s.clock = clock.now();
  EpisodeResult result;
  for (int t = 0; t < horizon; ++t) {
    // A registered throttle delays the next iteration on the virtual clock.
    if (auto until = gov.throttle_until(); until && clock.now() < *until) clock.set(*until);
    auto a = planner.propose(s);
    if (!a) break;
    StepOutcome o = gov.step(s, *a, attribution);
    if (o.kind == StepKind::denied) {
      planner.on_denied(*a);
    } else if (o.kind == StepKind::deferred) {
      planner.on_deferred(*a);
    } else if (o.kind == StepKind::aborted || o.kind == StepKind::refused) {
      result.abort = Abort{*o.termination};
      break;
    }
  }
  result.trace = gov.take_trace();
  return result;
}

}  // namespace sarc::engine

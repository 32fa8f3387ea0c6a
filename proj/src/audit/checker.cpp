#include <algorithm>
#include <chrono>
#include <map>

#include "sarc/attribution.hpp"
#include "sarc/audit.hpp"
#include "sarc/engine.hpp"

namespace sarc::audit {

using spec::ConstraintClass;
using spec::ConstraintDef;
using spec::Site;

const char* to_string(Pass p) {
  switch (p) {
    case Pass::coverage: return "coverage";
    case Pass::class_placement: return "class_placement";
    case Pass::outcome_consistency: return "outcome_consistency";
    case Pass::attribution: return "attribution";
  }
  return "?";
}

std::size_t AuditReport::count(Pass p) const {
  return static_cast<std::size_t>(
      std::count_if(discrepancies.begin(), discrepancies.end(), [p](const Discrepancy& d) { return d.pass == p; }));
}

Json AuditReport::to_json() const {
  Json list = Json::array();
  for (const auto& d : discrepancies) {
    Json j = {{"record_index", d.record_index}, {"pass", to_string(d.pass)}, {"detail", d.detail}};
    j["constraint_id"] = d.constraint_id ? Json(*d.constraint_id) : Json(nullptr);
    list.push_back(j);
  }
  Json counts = Json::object();
  for (auto p : {Pass::coverage, Pass::class_placement, Pass::outcome_consistency, Pass::attribution})
    counts[to_string(p)] = count(p);
  return Json{{"holds", holds},
              {"records_checked", records_checked},
              {"constraints_checked", constraints_checked},
              {"node_visits", node_visits},
              {"elapsed_ms", elapsed_ms},
              {"counts", counts},
              {"discrepancies", list}};
}

namespace {

bool hook_site(Site s) { return s == Site::tool_layer || s == Site::policy_layer; }
bool pre_site(Site s) { return s == Site::PAG || hook_site(s); }

// Mirrors the governor's evaluation order so that a step terminated in the
// pre-dispatch phase owes events only up to the terminating constraint.
struct ToolPlan {
  std::vector<const ConstraintDef*> applicable;
  std::vector<std::string> pre_order;
  std::vector<std::string> atm;
  std::vector<std::string> paa;
};

class Checker {
 public:
  Checker(const spec::Specification& spec, AuditReport& rep) : spec_(spec), rep_(rep) {}

  const ToolPlan& plan(const std::string& tool, const std::set<std::string>& names) {
    std::string key = tool;
    for (const auto& n : names) key += '\x1f' + n;
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    ToolPlan p;
    for (const auto* c : spec::applicable_constraints(spec_, tool))
      if (spec::binding_satisfied(*c, names)) p.applicable.push_back(c);
    std::vector<const ConstraintDef*> hard, esc, other;
    for (const auto* c : p.applicable) {
      if (!c->cls || !c->verif) continue;
      Site s = c->verif->point;
      if (pre_site(s)) {
        (*c->cls == ConstraintClass::hard ? hard : *c->cls == ConstraintClass::escalation ? esc : other).push_back(c);
      } else if (s == Site::ATM) {
        p.atm.push_back(c->id);
      } else if (s == Site::PAA) {
        p.paa.push_back(c->id);
      }
    }
    std::sort(hard.begin(), hard.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::sort(esc.begin(), esc.end(), [](auto* a, auto* b) { return spec::escalation_precedes(*a, *b); });
    for (const auto* list : {&hard, &esc, &other})
      for (const auto* c : *list) p.pre_order.push_back(c->id);
    return plans_.emplace(key, std::move(p)).first->second;
  }

  // Principal ids and roles on the record's chain; malformed entries are
  // left to the attribution pass.
  static std::set<std::string> record_names(const Json& rec) {
    std::set<std::string> out;
    const Json* chain = nullptr;
    if (rec.contains("attribution") && rec["attribution"].is_object() && rec["attribution"].contains("chain"))
      chain = &rec["attribution"]["chain"];
    if (!chain || !chain->is_array()) return out;
    for (const auto& p : *chain) {
      if (!p.is_object()) continue;
      if (p.contains("id") && p["id"].is_string()) out.insert(p["id"].get<std::string>());
      if (p.contains("role") && p["role"].is_string() && !p["role"].get<std::string>().empty())
        out.insert(p["role"].get<std::string>());
    }
    return out;
  }

  void add(std::size_t idx, std::optional<std::string> id, Pass pass, std::string detail) {
    rep_.discrepancies.push_back({idx, std::move(id), pass, std::move(detail)});
  }

  // Checks placement and outcome of one event. `orchestrator` relaxes the
  // declared-site match for events recorded on dispatch nodes.
  void check_event(std::size_t idx, const engine::ConstraintEvent& e, bool orchestrator) {
    ++rep_.node_visits;
    const ConstraintDef* c = spec_.find(e.constraint_id);
    if (!c || !c->cls) {
      add(idx, e.constraint_id, Pass::class_placement, "event names an undeclared constraint");
      return;
    }
    if (e.cls != *c->cls) {
      add(idx, c->id, Pass::class_placement,
          std::string("recorded class ") + spec::to_string(e.cls) + " differs from declared " + spec::to_string(*c->cls));
    }
    if (!spec::site_compatible(*c->cls, e.site)) {
      add(idx, c->id, Pass::class_placement,
          std::string(spec::to_string(*c->cls)) + " constraint enforced at " + spec::to_string(e.site));
    } else if (c->verif && !spec::site_compatible(*c->cls, c->verif->point)) {
      add(idx, c->id, Pass::class_placement, std::string("declared placement ") + spec::to_string(c->verif->point) +
                                                 " is incompatible with class " + spec::to_string(*c->cls));
    } else if (!orchestrator && c->verif && e.site != c->verif->point && e.site != Site::orchestration) {
      add(idx, c->id, Pass::class_placement,
          std::string("recorded at ") + spec::to_string(e.site) + ", declared at " + spec::to_string(c->verif->point));
    }

    bool fired = e.outcome == engine::EventOutcome::fired ||
                 (e.outcome == engine::EventOutcome::undecidable_rescued && e.rescue_fired);
    if (!fired) return;
    auto declared = c->resp ? std::optional(c->resp->kind) : std::nullopt;
    bool fail_safe = e.detail.is_object() && e.detail.value("undecidable", false);
    bool safe_kind = e.response_taken && (*e.response_taken == spec::ResponseKind::block ||
                                          *e.response_taken == spec::ResponseKind::abort);
    if (fail_safe && safe_kind) return;
    if (e.response_taken != declared) {
      add(idx, c->id, Pass::outcome_consistency,
          std::string("fired with response ") + (e.response_taken ? spec::to_string(*e.response_taken) : "none") +
              ", declared " + (declared ? spec::to_string(*declared) : "none"));
    } else if (declared == spec::ResponseKind::suspend_and_route && !e.ruling) {
      add(idx, c->id, Pass::outcome_consistency, "routed without a recorded ruling");
    }
  }

  void check_record(const Json& rec, std::size_t pos, const std::set<std::string>& upstream,
                    const std::optional<PrincipalChain>& parent_chain) {
    ++rep_.records_checked;
    if (!rec.is_object()) {
      add(pos, std::nullopt, Pass::coverage, "malformed record: not an object");
      return;
    }
    if (!rec.contains("schema_version") || !rec["schema_version"].is_string())
      throw SchemaMismatch("record " + std::to_string(pos) + " has no schema_version");
    if (rec["schema_version"] != spec_.audit_schema_version())
      throw SchemaMismatch("record schema " + rec["schema_version"].get<std::string>() + " does not match " +
                           spec_.audit_schema_version());
    std::size_t idx = rec.contains("index") && rec["index"].is_number_unsigned() ? rec["index"].get<std::size_t>() : pos;

    std::string tool;
    std::vector<engine::ConstraintEvent> events;
    std::set<std::string> sites;
    bool dispatched = false;
    std::optional<engine::Termination> term;
    try {
      tool = rec.at("action").at("tool").get<std::string>();
      for (const auto& e : rec.at("evaluated")) events.push_back(engine::event_from_json(e));
      for (const auto& s : rec.at("sites_traversed")) sites.insert(s.get<std::string>());
      dispatched = rec.at("dispatched").get<bool>();
      if (rec.contains("terminated_by") && !rec["terminated_by"].is_null()) {
        const auto& t = rec["terminated_by"];
        auto site = spec::site_from(t.at("site").get<std::string>());
        term = engine::Termination{t.value("constraint_id", ""), site.value_or(Site::PAG), t.value("reason", "")};
      }
    } catch (const std::exception& ex) {
      add(idx, std::nullopt, Pass::coverage, std::string("malformed record: ") + ex.what());
      return;
    }

    // ── Pass i: coverage ──
    const ToolPlan& p = plan(tool, record_names(rec));
    rep_.constraints_checked += p.applicable.size();
    std::set<std::string> present = upstream;
    for (const auto& e : events) present.insert(e.constraint_id);
    std::vector<std::string> required;
    if (sites.count("PAG")) {
      auto stop = p.pre_order.end();
      if (term && pre_site(term->site)) stop = std::find(p.pre_order.begin(), p.pre_order.end(), term->constraint_id);
      if (stop != p.pre_order.end()) ++stop;
      required.insert(required.end(), p.pre_order.begin(), stop);
    }
    if (sites.count("ATM")) required.insert(required.end(), p.atm.begin(), p.atm.end());
    if (sites.count("PAA")) required.insert(required.end(), p.paa.begin(), p.paa.end());
    for (const auto& id : required) {
      ++rep_.node_visits;
      if (!present.count(id)) add(idx, id, Pass::coverage, "applicable constraint has no event and no recorded rescue");
    }

    // ── Passes ii and iii ──
    for (const auto& e : events) {
      check_event(idx, e, false);
      if (!dispatched || !pre_site(e.site) || e.outcome != engine::EventOutcome::fired) continue;
      bool blocked = e.response_taken && (*e.response_taken == spec::ResponseKind::block ||
                                          *e.response_taken == spec::ResponseKind::abort);
      bool refused = e.ruling && (e.ruling->kind == escalation::RulingKind::deny ||
                                  e.ruling->kind == escalation::RulingKind::timeout);
      if (refused && e.ruling->kind == escalation::RulingKind::timeout) {
        const ConstraintDef* c = spec_.find(e.constraint_id);
        refused = !(c && c->timeout && c->timeout->on_timeout == spec::OnTimeout::allow);
      }
      if (blocked || refused) add(idx, e.constraint_id, Pass::outcome_consistency, "action dispatched despite the response");
    }

    // ── Pass iv: attribution ──
    try {
      auto a = attribution_from_json(rec.at("attribution"));
      ++rep_.node_visits;
      if (a.chain.empty()) {
        add(idx, std::nullopt, Pass::attribution, "principal chain is empty");
      } else {
        if (a.auth.empty()) add(idx, std::nullopt, Pass::attribution, "intersected authority is empty");
        else if (a.auth != chain_authority(a.chain))
          add(idx, std::nullopt, Pass::attribution, "recorded authority is not the chain intersection");
        if (parent_chain) {
          bool nests = a.chain.size() >= parent_chain->size() &&
                       std::equal(parent_chain->begin(), parent_chain->end(), a.chain.begin());
          if (!nests) add(idx, std::nullopt, Pass::attribution, "chain does not extend its dispatch node's chain");
        }
      }
      if (a.tool != tool) add(idx, std::nullopt, Pass::attribution, "attributed tool differs from the action");
    } catch (const std::exception& ex) {
      add(idx, std::nullopt, Pass::attribution, std::string("malformed attribution: ") + ex.what());
    }
  }

  void walk(const Json& node, std::set<std::string> upstream, const PrincipalChain& chain, std::size_t& pos) {
    for (const auto& child : node.value("children", Json::array())) {
      std::string kind = child.value("kind", "");
      if (kind == "record") {
        check_record(child.at("record"), pos++, upstream, chain);
      } else if (kind == "dispatch") {
        ++rep_.node_visits;
        PrincipalChain sub;
        try {
          sub = attribution_from_json(child.at("attribution")).chain;
        } catch (const std::exception& ex) {
          add(pos, std::nullopt, Pass::attribution, std::string("dispatch node attribution malformed: ") + ex.what());
          continue;
        }
        bool nests = sub.size() > chain.size() && std::equal(chain.begin(), chain.end(), sub.begin());
        if (!nests) add(pos, std::nullopt, Pass::attribution, "dispatch node chain does not extend its parent");
        std::set<std::string> covered = upstream;
        for (const auto& ej : child.value("events", Json::array())) {
          try {
            auto e = engine::event_from_json(ej);
            check_event(pos, e, true);
            covered.insert(e.constraint_id);
          } catch (const std::exception& ex) {
            add(pos, std::nullopt, Pass::coverage, std::string("malformed dispatch event: ") + ex.what());
          }
        }
        walk(child, covered, sub, pos);
      } else {
        add(pos, std::nullopt, Pass::attribution, "unknown trace tree node kind '" + kind + "'");
      }
    }
  }

 private:
  const spec::Specification& spec_;
  AuditReport& rep_;
  std::map<std::string, ToolPlan> plans_;
};

}  // namespace

std::set<std::string> applicability(const spec::Specification& spec, const Json& record) {
  std::set<std::string> out;
  if (!record.contains("action") || !record["action"].contains("tool")) return out;
  auto names = Checker::record_names(record);
  for (const auto* c : spec::applicable_constraints(spec, record["action"]["tool"].get<std::string>()))
    if (spec::binding_satisfied(*c, names)) out.insert(c->id);
  return out;
}

struct StreamingAudit::Impl {
  explicit Impl(const spec::Specification& spec) : ck(spec, rep), t0(std::chrono::steady_clock::now()) {}
  AuditReport rep;
  Checker ck;
  std::chrono::steady_clock::time_point t0;
  std::size_t pos = 0;
};

StreamingAudit::StreamingAudit(const spec::Specification& spec) : impl_(std::make_unique<Impl>(spec)) {}
StreamingAudit::~StreamingAudit() = default;

void StreamingAudit::feed(const Json& record) { impl_->ck.check_record(record, impl_->pos++, {}, std::nullopt); }

AuditReport StreamingAudit::finish() {
  AuditReport rep = std::move(impl_->rep);
  rep.holds = rep.discrepancies.empty();
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - impl_->t0).count();
  return rep;
}

AuditReport check_correspondence(const spec::Specification& spec, const std::vector<Json>& records) {
  StreamingAudit audit(spec);
  for (const auto& r : records) audit.feed(r);
  return audit.finish();
}

AuditReport check_tree(const spec::Specification& spec, const Json& tree) {
  auto t0 = std::chrono::steady_clock::now();
  AuditReport rep;
  Checker ck(spec, rep);
  PrincipalChain root;
  try {
    root = attribution_from_json(tree.at("attribution")).chain;
  } catch (const std::exception& ex) {
    rep.discrepancies.push_back({0, std::nullopt, Pass::attribution, std::string("root attribution malformed: ") + ex.what()});
  }
  if (root.empty()) rep.discrepancies.push_back({0, std::nullopt, Pass::attribution, "root chain is empty"});
  std::size_t pos = 0;
  ck.walk(tree, {}, root, pos);
  std::stable_sort(rep.discrepancies.begin(), rep.discrepancies.end(),
                   [](const Discrepancy& a, const Discrepancy& b) { return a.record_index < b.record_index; });
  rep.holds = rep.discrepancies.empty();
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace sarc::audit

#include <cstdio>
#include <sstream>

#include "sarc/engine.hpp"

namespace sarc::engine {

const char* to_string(EventOutcome o) {
  switch (o) {
    case EventOutcome::fired: return "fired";
    case EventOutcome::not_fired: return "not_fired";
    case EventOutcome::undecidable_rescued: return "undecidable_rescued";
  }
  return "?";
}

const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::dispatched: return "dispatched";
    case StepKind::aborted: return "aborted";
    case StepKind::denied: return "denied";
    case StepKind::deferred: return "deferred";
    case StepKind::refused: return "refused";
  }
  return "?";
}

namespace {

std::string need_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw std::invalid_argument(std::string("record field '") + key + "' missing");
  return j[key].get<std::string>();
}

spec::Site need_site(const Json& j, const char* key) {
  auto s = spec::site_from(need_string(j, key));
  if (!s) throw std::invalid_argument(std::string("record field '") + key + "' is not a site");
  return *s;
}

Json fields_to_json(const FieldMap& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = value_to_json(v);
  return j;
}

FieldMap fields_from_json(const Json& j) {
  FieldMap m;
  for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = value_from_json(it.value());
  return m;
}

}  // namespace

Json event_to_json(const ConstraintEvent& e) {
  Json j = {{"constraint_id", e.constraint_id},
            {"class", spec::to_string(e.cls)},
            {"site", spec::to_string(e.site)},
            {"outcome", to_string(e.outcome)},
            {"response_taken", e.response_taken ? spec::to_string(*e.response_taken) : "none"},
            {"round", e.round}};
  if (e.ruling) j["ruling"] = escalation::ruling_to_json(*e.ruling);
  if (e.fault) j["fault"] = to_string(*e.fault);
  if (e.rescue)
    j["rescue"] = {{"layer", e.rescue->layer}, {"site", spec::to_string(e.rescue->site)}, {"fired", e.rescue_fired}};
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

ConstraintEvent event_from_json(const Json& j) {
  ConstraintEvent e;
  e.constraint_id = need_string(j, "constraint_id");
  auto cls = spec::class_from(need_string(j, "class"));
  if (!cls) throw std::invalid_argument("event class unknown");
  e.cls = *cls;
  e.site = need_site(j, "site");
  std::string o = need_string(j, "outcome");
  if (o == "fired") e.outcome = EventOutcome::fired;
  else if (o == "not_fired") e.outcome = EventOutcome::not_fired;
  else if (o == "undecidable_rescued") e.outcome = EventOutcome::undecidable_rescued;
  else throw std::invalid_argument("event outcome unknown");
  std::string r = need_string(j, "response_taken");
  if (r != "none") {
    e.response_taken = spec::response_from(r);
    if (!e.response_taken) throw std::invalid_argument("event response unknown");
  }
  e.round = j.value("round", 1);
  if (j.contains("ruling")) e.ruling = escalation::ruling_from_json(j["ruling"]);
  if (j.contains("fault")) e.fault = j["fault"] == "exec_failure" ? FaultTag::exec_failure : FaultTag::pred_false_negative;
  if (j.contains("rescue")) {
    e.rescue = RescueInfo{j["rescue"].value("layer", 0), need_site(j["rescue"], "site")};
    e.rescue_fired = j["rescue"].value("fired", false);
  }
  if (j.contains("detail")) e.detail = j["detail"];
  return e;
}

Json record_to_json(const TraceRecord& r) {
  Json events = Json::array();
  for (const auto& e : r.evaluated) events.push_back(event_to_json(e));
  Json sites = Json::array();
  for (auto s : r.sites_traversed) sites.push_back(spec::to_string(s));
  Json j = {{"schema_version", r.schema_version},
            {"index", r.index},
            {"step", r.step},
            {"time_s", r.time_s},
            {"pre_state", {{"digest", r.pre.hash}, {"fields", fields_to_json(r.pre.selected)}}},
            {"post_state", {{"digest", r.post.hash}, {"fields", fields_to_json(r.post.selected)}}},
            {"action", action_to_json(r.action)},
            {"dispatched", r.dispatched},
            {"reward", r.reward},
            {"observation", r.observation},
            {"evaluated", events},
            {"attribution", attribution_to_json(r.attribution)},
            {"latency_ms", r.latency_ms},
            {"pag_rounds", r.pag_rounds},
            {"sites_traversed", sites}};
  if (r.terminated_by)
    j["terminated_by"] = {{"constraint_id", r.terminated_by->constraint_id},
                          {"site", spec::to_string(r.terminated_by->site)},
                          {"reason", r.terminated_by->reason}};
  else
    j["terminated_by"] = nullptr;
  return j;
}

TraceRecord record_from_json(const Json& j) {
  TraceRecord r;
  r.schema_version = need_string(j, "schema_version");
  r.index = j.at("index").get<std::size_t>();
  r.step = j.at("step").get<int>();
  r.time_s = j.at("time_s").get<double>();
  r.pre = {j.at("pre_state").at("digest").get<std::string>(), fields_from_json(j["pre_state"].at("fields"))};
  r.post = {j.at("post_state").at("digest").get<std::string>(), fields_from_json(j["post_state"].at("fields"))};
  r.action = action_from_json(j.at("action"));
  r.dispatched = j.at("dispatched").get<bool>();
  r.reward = j.at("reward").get<double>();
  r.observation = j.at("observation");
  for (const auto& e : j.at("evaluated")) r.evaluated.push_back(event_from_json(e));
  r.attribution = attribution_from_json(j.at("attribution"));
  r.latency_ms = j.at("latency_ms").get<double>();
  r.pag_rounds = j.at("pag_rounds").get<int>();
  for (const auto& s : j.at("sites_traversed")) {
    auto site = spec::site_from(s.get<std::string>());
    if (!site) throw std::invalid_argument("record site unknown");
    r.sites_traversed.push_back(*site);
  }
  if (j.contains("terminated_by") && !j["terminated_by"].is_null()) {
    const auto& t = j["terminated_by"];
    r.terminated_by = Termination{t.value("constraint_id", ""), need_site(t, "site"), need_string(t, "reason")};
  }
  return r;
}

std::string trace_to_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<Json> parse_jsonl(const std::string& text) {
  std::vector<Json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw std::invalid_argument("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ── Digests ──

namespace {

bool selected(const std::string& path, const std::set<std::string>& keep) {
  if (keep.count(path)) return true;
  auto dot = path.rfind('.');
  if (dot != std::string::npos && keep.count(path.substr(dot + 1))) return true;
  std::string flat = path;
  for (auto& c : flat)
    if (c == '.') c = '_';
  return keep.count(flat) > 0;
}

}  // namespace

StateDigest digest_state(const FieldMap& fields, const std::set<std::string>& keep) {
  StateDigest d;
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [k, v] : fields) {
    if (selected(k, keep)) {
      d.selected[k] = v;
      continue;
    }
    feed(k);
    feed("=");
    feed(value_to_json(v).dump());
    feed("\n");
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  d.hash = buf;
  return d;
}

}  // namespace sarc::engine

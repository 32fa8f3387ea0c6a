#include <algorithm>
#include <cctype>
#include <sstream>

#include "sarc/multiagent.hpp"

namespace sarc::multiagent {

const char* to_string(Stakes s) { return s == Stakes::high ? "high" : "low"; }

const char* to_string(GatewayVerdict v) {
  switch (v) {
    case GatewayVerdict::admit: return "admit";
    case GatewayVerdict::sanitize: return "sanitize";
    case GatewayVerdict::escalate: return "escalate";
    case GatewayVerdict::discard: return "discard";
  }
  return "?";
}

std::optional<Stakes> stakes_from(const std::string& s) {
  if (s == "low") return Stakes::low;
  if (s == "high") return Stakes::high;
  return std::nullopt;
}

// ── Sanitization ──

bool instruction_like(const std::string& line) {
  std::string l;
  for (char ch : line) l += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  auto b = l.find_first_not_of(" \t\r>-*");
  if (b == std::string::npos) return false;
  l = l.substr(b);
  static const char* openers[] = {"ignore ", "disregard ", "override ", "you must ", "system:", "assistant:",
                                  "instruction:"};
  for (const char* o : openers)
    if (l.rfind(o, 0) == 0) return true;
  for (const char* p : {"previous instructions", "prior instructions", "earlier instructions"})
    if (l.find(p) != std::string::npos && (l.find("forget") != std::string::npos || l.find("ignore") != std::string::npos))
      return true;
  return false;
}

std::string strip_instruction_lines(const std::string& payload, std::vector<std::string>* removed) {
  std::istringstream in(payload);
  std::string out, line;
  bool first = true;
  while (std::getline(in, line)) {
    if (instruction_like(line)) {
      if (removed) removed->push_back(line);
      continue;
    }
    if (!first) out += '\n';
    out += line;
    first = false;
  }
  return out;
}

// ── Gateway ──

GatewayDecision gateway_check(const ImportedValue& imported, Stakes stakes, const GatewayPolicy& policy) {
  if (!imported.tag) throw UntaggedImport(imported.id);
  const TrustTag& tag = *imported.tag;
  predicate::EvalContext ctx;
  ctx.state_fields = {{"tag.source", Value(tag.source)},
                      {"tag.authentication_context", Value(tag.authentication_context)},
                      {"tag.classification", Value(tag.classification)},
                      {"tag.inside_boundary", Value(tag.inside_boundary)}};
  auto r = predicate::eval_predicate(predicate::parse_predicate(policy.trust_predicate), ctx);
  bool trusted = r.outcome == predicate::Outcome::fired;

  GatewayDecision d;
  auto& e = d.event;
  e.constraint_id = policy.constraint_id;
  e.site = spec::Site::orchestration;
  e.cls = stakes == Stakes::high ? policy.high_stakes_class : spec::ConstraintClass::soft;
  e.outcome = trusted ? engine::EventOutcome::not_fired : engine::EventOutcome::fired;
  e.detail = {{"import", imported.id}, {"stakes", to_string(stakes)}, {"source", tag.source}};
  if (r.outcome == predicate::Outcome::undecidable) e.detail["undecidable"] = true;
  if (trusted) {
    d.verdict = GatewayVerdict::admit;
    d.payload = imported.payload;
  } else if (stakes == Stakes::high) {
    bool route = policy.high_stakes_class == spec::ConstraintClass::escalation;
    d.verdict = route ? GatewayVerdict::escalate : GatewayVerdict::discard;
    e.response_taken = route ? spec::ResponseKind::suspend_and_route : spec::ResponseKind::block;
  } else if (policy.sanitize_low_stakes) {
    d.verdict = GatewayVerdict::sanitize;
    d.payload = strip_instruction_lines(imported.payload, &d.removed_lines);
    e.response_taken = spec::ResponseKind::log;
    e.detail["removed_lines"] = d.removed_lines;
  } else {
    d.verdict = GatewayVerdict::admit;
    d.payload = imported.payload;
    e.response_taken = spec::ResponseKind::log;
  }
  e.detail["verdict"] = to_string(d.verdict);
  return d;
}

}  // namespace sarc::multiagent

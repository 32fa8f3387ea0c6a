#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sarc/engine.hpp"

namespace sarc::cli {

// ── Episode scenarios ──

struct EpisodeScenario {
  std::string name;
  std::optional<PrincipalEntry> principal;  // default: holds every declared tool
  double clock_start_s = 0.0;
  bool honor_hours = false;
  bool block_on_escalation = true;
  FieldMap state;
  std::map<std::string, FieldMap> suppliers;
  escalation::RulingPolicy operators;
  std::vector<Action> plan;
  std::optional<int> horizon;
};

// Throws std::invalid_argument on a malformed document.
EpisodeScenario parse_episode(const std::string& yaml);

// True when the document describes a multi-agent workflow.
bool is_workflow_document(const std::string& yaml);

// ── Entry point ──

// Exit codes: 0 success, 1 findings or discrepancies, 2 usage or I/O error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sarc::cli

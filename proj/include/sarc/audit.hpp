#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarc/spec.hpp"
#include "sarc/value.hpp"

namespace sarc::audit {

enum class Pass { coverage, class_placement, outcome_consistency, attribution };

const char* to_string(Pass p);

struct Discrepancy {
  std::size_t record_index = 0;
  std::optional<std::string> constraint_id;
  Pass pass = Pass::coverage;
  std::string detail;
};

struct AuditReport {
  bool holds = true;
  std::vector<Discrepancy> discrepancies;
  std::size_t records_checked = 0;
  std::size_t constraints_checked = 0;
  double elapsed_ms = 0.0;
  std::size_t node_visits = 0;  // unit work items, for the complexity bound

  std::size_t count(Pass p) const;
  Json to_json() const;
};

class SchemaMismatch : public std::runtime_error {
 public:
  explicit SchemaMismatch(const std::string& m) : std::runtime_error(m) {}
};

// Constraints whose guards admit the record's action.
std::set<std::string> applicability(const spec::Specification& spec, const Json& record);

// Checks records given as parsed JSON lines. Malformed records are reported
// and skipped; a schema version other than the specification's throws.
AuditReport check_correspondence(const spec::Specification& spec, const std::vector<Json>& records);

// Incremental form of check_correspondence for traces read line by line.
class StreamingAudit {
 public:
  explicit StreamingAudit(const spec::Specification& spec);
  ~StreamingAudit();
  void feed(const Json& record);
  AuditReport finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Checks a trace tree: leaves are flattened in dispatch order, events on a
// dispatch node cover its subtree, and attribution must nest (pass iv).
AuditReport check_tree(const spec::Specification& spec, const Json& tree);

}  // namespace sarc::audit

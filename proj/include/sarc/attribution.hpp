#pragma once

#include <set>
#include <string>
#include <vector>

#include "sarc/action.hpp"

namespace sarc {

// Capabilities are opaque strings: "tool", "tool:<=BOUND" (euros, checked
// against the action's amount), or "*".
using AuthoritySet = std::set<std::string>;

struct PrincipalEntry {
  std::string id;
  std::string role;
  AuthoritySet authority;
  friend bool operator==(const PrincipalEntry&, const PrincipalEntry&) = default;
};

using PrincipalChain = std::vector<PrincipalEntry>;

struct AttributionTuple {
  PrincipalChain chain;
  std::string planner_id;
  std::string executor_id;
  std::string tool;
  AuthoritySet auth;
  std::vector<std::string> c_eval;
  friend bool operator==(const AttributionTuple&, const AttributionTuple&) = default;
};

AuthoritySet intersect(const AuthoritySet& a, const AuthoritySet& b);
AuthoritySet unite(const AuthoritySet& a, const AuthoritySet& b);

// Running intersection over the chain; empty chain yields the empty set.
AuthoritySet chain_authority(const PrincipalChain& chain);

// Ids and roles of every entry, for authority-binding checks.
std::set<std::string> chain_names(const PrincipalChain& chain);

bool permits(const AuthoritySet& auth, const Action& a);

Json authority_to_json(const AuthoritySet& a);
AuthoritySet authority_from_json(const Json& j);
Json attribution_to_json(const AttributionTuple& a);
AttributionTuple attribution_from_json(const Json& j);

}  // namespace sarc

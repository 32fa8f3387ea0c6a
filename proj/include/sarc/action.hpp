#pragma once

#include <string>

#include "sarc/value.hpp"

namespace sarc {

struct Action {
  std::string tool;
  FieldMap args;
  int plan_index = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

Json action_to_json(const Action& a);
Action action_from_json(const Json& j);

}  // namespace sarc

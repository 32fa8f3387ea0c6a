#include <algorithm>

#include "sarc/multiagent.hpp"

namespace sarc::multiagent {

// ── Authority composition ──

namespace {

AuthoritySet restrict_to(const AuthoritySet& caps, const std::string& action_class) {
  if (action_class.empty()) return caps;
  AuthoritySet out;
  for (const auto& c : caps)
    if (c == "*" || c == action_class || c.rfind(action_class + ":", 0) == 0) out.insert(c);
  return out;
}

FieldMap principal_fields(const Principal& p) {
  FieldMap f;
  for (const auto& [k, v] : p.attributes) f["principal." + k] = v;
  f["principal.id"] = Value(p.id);
  f["principal.role"] = Value(p.role);
  return f;
}

}  // namespace

AuthoritySet compose_authority(const std::string& action_class, const std::vector<Principal>& principals,
                               const CompositionRule& rule) {
  if (principals.empty()) throw std::invalid_argument("authority composition needs at least one principal");
  if (rule.kind == CompositionKind::all_of) {
    AuthoritySet acc = restrict_to(principals.front().authority, action_class);
    for (std::size_t i = 1; i < principals.size(); ++i)
      acc = intersect(acc, restrict_to(principals[i].authority, action_class));
    return acc;
  }
  if (!rule.qualifier || rule.qualifier->empty()) throw CompositionError("any_of composition declares no qualifier");
  predicate::PredicateExpr q;
  try {
    q = predicate::parse_predicate(*rule.qualifier);
  } catch (const std::exception& e) {
    throw CompositionError(std::string("qualifier does not parse: ") + e.what());
  }
  AuthoritySet acc;
  for (const auto& p : principals) {
    predicate::EvalContext ctx;
    ctx.state_fields = principal_fields(p);
    bool qualifies = false;
    try {
      qualifies = predicate::eval_predicate(q, ctx).outcome == predicate::Outcome::fired;
    } catch (const std::exception&) {
      qualifies = false;  // a type error cannot qualify anyone
    }
    if (qualifies) acc = unite(acc, restrict_to(p.authority, action_class));
  }
  return acc;
}

// ── Decidability ──

LayerPaths layer_paths(const spec::Specification& spec) {
  LayerPaths out = spec.state_spec.path_roots();
  out.insert("action");
  out.insert("principal");
  for (const auto& m : spec.state_spec.modalities)
    if (m == "budget_state" || m == "spend" || m == "spend_ledger") out.insert(predicate::kRollingWindowDependency);
  return out;
}

bool covers(const LayerPaths& layer, const std::string& path) {
  if (layer.count(path)) return true;
  for (auto dot = path.find('.'); dot != std::string::npos; dot = path.find('.', dot + 1))
    if (layer.count(path.substr(0, dot))) return true;
  return false;
}

bool decidable_at(const spec::ConstraintDef& c, const LayerPaths& layer) {
  if (!c.pred) return false;
  auto fp = predicate::free_paths(c.pred->expr);
  if (fp.rolling_window && !layer.count(predicate::kRollingWindowDependency)) return false;
  return std::all_of(fp.paths.begin(), fp.paths.end(), [&](const std::string& p) { return covers(layer, p); });
}

int rescue_layer(const spec::ConstraintDef& c, int i, int j, const std::vector<LayerPaths>& layers) {
  for (int k = std::min(j, static_cast<int>(layers.size()) - 1); k > i; --k)
    if (decidable_at(c, layers[k])) return k;
  return i;
}

FieldMap state_slice(const FieldMap& fields, const LayerPaths& layer) {
  FieldMap out;
  for (const auto& [k, v] : fields)
    if (covers(layer, k)) out.emplace(k, v);
  return out;
}

// ── Constraint composition ──

std::vector<spec::ConstraintDef> ComposedConstraints::all() const {
  std::vector<spec::ConstraintDef> out = hard;
  out.insert(out.end(), escalation.begin(), escalation.end());
  out.insert(out.end(), soft.begin(), soft.end());
  return out;
}

ComposedConstraints compose_constraints(const std::vector<std::vector<spec::ConstraintDef>>& sets) {
  ComposedConstraints out;
  std::set<std::string> seen;
  std::map<std::string, std::size_t> soft_by_ref;
  for (const auto& set : sets) {
    for (const auto& c : set) {
      if (!seen.insert(c.id).second || !c.cls) continue;
      switch (*c.cls) {
        case spec::ConstraintClass::hard: out.hard.push_back(c); break;
        case spec::ConstraintClass::escalation: out.escalation.push_back(c); break;
        case spec::ConstraintClass::soft: {
          std::string ref = c.src ? c.src->reference : "id:" + c.id;
          auto it = soft_by_ref.find(ref);
          if (it == soft_by_ref.end()) {
            soft_by_ref[ref] = out.soft.size();
            out.soft.push_back(c);
            break;
          }
          auto& kept = out.soft[it->second];
          double kc = kept.cost.value_or(0.0), cc = c.cost.value_or(0.0);
          bool replace = cc > kc || (cc == kc && c.id < kept.id);
          auto dropped_from = out.merged[kept.id];
          out.merged.erase(kept.id);
          if (replace) {
            dropped_from.push_back(kept.id);
            kept = c;
          } else {
            dropped_from.push_back(c.id);
          }
          std::sort(dropped_from.begin(), dropped_from.end());
          out.merged[kept.id] = dropped_from;
          break;
        }
      }
    }
  }
  std::sort(out.hard.begin(), out.hard.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::stable_sort(out.escalation.begin(), out.escalation.end(),
                   [](const auto& a, const auto& b) { return spec::escalation_precedes(a, b); });
  return out;
}

std::optional<std::string> composed_hard_block(const ComposedConstraints& cc, const predicate::EvalContext& ctx) {
  for (const auto& c : cc.hard) {
    if (!c.pred) return c.id;
    if (predicate::eval_predicate(c.pred->expr, ctx).outcome != predicate::Outcome::fired) return c.id;
  }
  return std::nullopt;
}

}  // namespace sarc::multiagent

#include <algorithm>
#include <cmath>

#include "sarc/engine.hpp"

namespace sarc::engine {

// ── Ledger ──

void SpendLedger::append(double t, const std::string& principal, Money amount) {
  auto& v = by_principal_[principal];
  if (!v.empty() && t < v.back().t) throw std::logic_error("ledger entries must be appended in time order");
  std::int64_t prev = v.empty() ? 0 : v.back().prefix;
  v.push_back({t, size_++, prev + amount.cents});
}

Money SpendLedger::window(const std::string& principal, double now, std::size_t upto, double span) const {
  auto it = by_principal_.find(principal);
  if (it == by_principal_.end()) return {};
  const auto& v = it->second;
  // Entries are sorted by both time and sequence number.
  auto hi = std::partition_point(v.begin(), v.end(), [&](const Entry& e) { return e.seq < upto && e.t <= now; });
  auto lo = std::partition_point(v.begin(), hi, [&](const Entry& e) { return e.t <= now - span; });
  std::int64_t top = hi == v.begin() ? 0 : std::prev(hi)->prefix;
  std::int64_t bottom = lo == v.begin() ? 0 : std::prev(lo)->prefix;
  return Money{top - bottom};
}

double SpendLedger::release_time(const std::string& principal, double now, Money theta, double span) const {
  std::size_t all = size_;
  if (window(principal, now, all, span).cents < theta.cents) return now;
  const auto& v = by_principal_.at(principal);
  std::int64_t total = v.back().prefix;
  // First entry whose expiry brings the remainder below theta.
  auto it = std::partition_point(v.begin(), v.end(), [&](const Entry& e) { return total - e.prefix >= theta.cents; });
  if (it == v.end()) it = std::prev(v.end());
  double t = std::max(now, it->t + span);
  while (window(principal, t, all, span).cents >= theta.cents) t = std::nextafter(t, HUGE_VAL);
  return t;
}

// ── Registry ──

void ToolRegistry::register_tool(const std::string& name, ToolFn fn) { tools_[name] = std::move(fn); }

const ToolFn& ToolRegistry::tool(const std::string& name) const {
  auto it = tools_.find(name);
  if (it == tools_.end()) throw UnknownTool(name);
  return it->second;
}

void ToolRegistry::wire_hook(const std::string& tool, const std::string& id) { hooks_[tool].insert(id); }
void ToolRegistry::unwire_hook(const std::string& tool, const std::string& id) { hooks_[tool].erase(id); }

bool ToolRegistry::hook_wired(const std::string& tool, const std::string& id) const {
  auto it = hooks_.find(tool);
  return it != hooks_.end() && it->second.count(id);
}

void ToolRegistry::wire_declared_hooks(const spec::Specification& spec) {
  for (const auto& t : spec.action_space.tools)
    if (has_tool(t.name))
      for (const auto& h : t.enforcement_hooks) wire_hook(t.name, h);
}

spec::DispatchGraph ToolRegistry::dispatch_graph(const spec::Specification& spec) const {
  spec::DispatchGraph g;
  for (const auto& t : spec.action_space.tools) {
    if (!has_tool(t.name)) continue;
    auto& sites = g[t.name];
    sites.insert({spec::Site::PAG, spec::Site::ATM, spec::Site::PAA});
    for (const auto* c : spec::applicable_constraints(spec, t.name)) {
      if (!c->verif) continue;
      auto p = c->verif->point;
      if ((p == spec::Site::tool_layer || p == spec::Site::policy_layer) && hook_wired(t.name, c->id)) sites.insert(p);
    }
  }
  return g;
}

namespace {

Money arg_money(const Action& a, const std::string& name) {
  auto it = a.args.find(name);
  if (it == a.args.end()) throw std::invalid_argument(a.tool + " needs argument '" + name + "'");
  if (it->second.type() == ValueType::money) return it->second.as_money();
  if (it->second.type() == ValueType::number) return Money{euros_to_cents(it->second.as_number())};
  throw std::invalid_argument(a.tool + " argument '" + name + "' must be money");
}

std::string arg_text(const Action& a, const std::string& name) {
  auto it = a.args.find(name);
  if (it == a.args.end() || it->second.type() != ValueType::text)
    throw std::invalid_argument(a.tool + " needs text argument '" + name + "'");
  return it->second.as_text();
}

std::string principal_of(const AgentState& s) {
  auto it = s.fields.find("principal");
  return it != s.fields.end() && it->second.type() == ValueType::text ? it->second.as_text() : "";
}

}  // namespace

ToolRegistry procurement_tools() {
  ToolRegistry r;
  r.register_tool("erp.create_po", [](ToolContext& c) {
    Money amount = arg_money(c.action, "amount");
    std::string po = "PO-" + std::to_string(c.world.next_po++);
    c.world.ledger.append(c.now, principal_of(c.post), amount);
    c.post.ledger_size = c.world.ledger.size();
    auto& total = c.post.fields["spend.placed_total"];
    Money prev = total.type() == ValueType::money ? total.as_money() : Money{};
    total = Value(Money{prev.cents + amount.cents});
    c.post.fields["po.last_id"] = Value(po);
    c.observation["po_id"] = po;
  });
  r.register_tool("erp.send_to_approver", [](ToolContext& c) {
    std::string ticket = "TK-" + std::to_string(c.world.next_ticket++);
    c.observation["ticket_id"] = ticket;
    c.observation["po_id"] = arg_text(c.action, "po_id");
  });
  r.register_tool("kyc.lookup_supplier", [](ToolContext& c) {
    std::string id = arg_text(c.action, "supplier_id");
    auto it = c.world.suppliers.find(id);
    Json rec = Json::object();
    for (auto k = c.post.fields.begin(); k != c.post.fields.end();)
      k = k->first.rfind("supplier.", 0) == 0 ? c.post.fields.erase(k) : std::next(k);
    c.post.fields["supplier.id"] = Value(id);
    if (it != c.world.suppliers.end()) {
      for (const auto& [k, v] : it->second) {
        c.post.fields["supplier." + k] = v;
        rec[k] = value_to_json(v);
      }
    }
    c.observation["found"] = it != c.world.suppliers.end();
    c.observation["record"] = rec;
  });
  r.register_tool("stream.fetch", [](ToolContext& c) {
    auto it = c.action.args.find("chunks");
    int n = it != c.action.args.end() && it->second.type() == ValueType::number ? static_cast<int>(it->second.as_number()) : 1;
    Json delivered = Json::array();
    bool complete = true;
    for (int i = 0; i < n; ++i) {
      Json chunk = {{"seq", i}};
      if (!c.emit(chunk, 1.0)) {
        complete = false;
        break;
      }
      delivered.push_back(chunk);
    }
    c.observation["chunks"] = delivered;
    c.observation["complete"] = complete;
  });
  return r;
}

// ── Faults and latency ──

const char* to_string(FaultTag f) {
  return f == FaultTag::pred_false_negative ? "pred_false_negative" : "exec_failure";
}

FaultModel::FaultModel(double eps_pred, double eps_exec, std::uint64_t seed)
    : eps_pred_(eps_pred), eps_exec_(eps_exec), rng_(seed) {
  if (eps_pred < 0 || eps_pred > 1 || eps_exec < 0 || eps_exec > 1)
    throw std::invalid_argument("fault probabilities must lie in [0,1]");
}

std::optional<FaultTag> FaultModel::draw() {
  double a = u_(rng_), b = u_(rng_);
  if (a < eps_pred_) return FaultTag::pred_false_negative;
  if (b < eps_exec_) return FaultTag::exec_failure;
  return std::nullopt;
}

double LatencyModel::site_cost(spec::Site s) const {
  switch (s) {
    case spec::Site::PAG: return pag_ms;
    case spec::Site::ATM: return atm_ms;
    case spec::Site::PAA: return paa_ms;
    default: return 0.0;
  }
}

// ── Planners ──

ScriptedPlanner::ScriptedPlanner(std::vector<Action> script, std::string id) : script_(std::move(script)), id_(std::move(id)) {}

std::optional<Action> ScriptedPlanner::propose(const AgentState&) {
  if (next_ >= script_.size()) return std::nullopt;
  Action a = script_[next_];
  a.plan_index = static_cast<int>(next_++);
  return a;
}

Action greedy_action(const Order& o, int plan_index) {
  return Action{"erp.create_po", {{"amount", Value(o.amount)}, {"supplier_id", Value(o.supplier_id)}}, plan_index};
}

GreedySpendPlanner::GreedySpendPlanner(std::vector<Order> orders) : orders_(std::move(orders)) {}

std::optional<Action> GreedySpendPlanner::propose(const AgentState&) {
  if (next_ >= orders_.size()) return std::nullopt;
  int idx = static_cast<int>(next_);
  return greedy_action(orders_[next_++], idx);
}

void GreedySpendPlanner::on_deferred(const Action&) {
  if (next_ > 0) --next_;
}

const Order* GreedySpendPlanner::upcoming() const { return next_ < orders_.size() ? &orders_[next_] : nullptr; }

double spend_reward(const AgentState& s, const Action&, const AgentState& s2) {
  auto get = [](const AgentState& st) {
    auto it = st.fields.find("spend.placed_total");
    return it != st.fields.end() && it->second.type() == ValueType::money ? it->second.as_money().cents : 0;
  };
  return static_cast<double>(get(s2) - get(s)) / 100.0;
}

AttributionTuple default_attribution(const spec::Specification& spec, const std::string& principal,
                                     const std::string& planner, const std::string& executor) {
  AttributionTuple a;
  AuthoritySet all;
  for (const auto& t : spec.action_space.tools) all.insert(t.name);
  a.chain.push_back({principal, "originator", all});
  a.planner_id = planner;
  a.executor_id = executor;
  a.auth = all;
  return a;
}

}  // namespace sarc::engine

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sarc/spec.hpp"

namespace sarc::spec {

SpecError::SpecError(Kind kind, std::string path, const std::string& message)
    : std::runtime_error(path.empty() ? message : path + ": " + message), kind_(kind), path_(std::move(path)) {}

// ── YAML to JSON ──

namespace {

Json scalar_to_json(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  static const std::regex int_re(R"(^[-+]?[0-9]+$)");
  static const std::regex float_re(R"(^[-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?$)");
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (std::regex_match(s, int_re)) {
    try {
      return std::stoll(s);
    } catch (const std::out_of_range&) {
      return std::stod(s);
    }
  }
  if (std::regex_match(s, float_re)) return std::stod(s);
  return s;
}

Json node_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      Json arr = Json::array();
      for (const auto& item : n) arr.push_back(node_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      Json obj = Json::object();
      for (const auto& kv : n) obj[kv.first.Scalar()] = node_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

std::string line_col(const std::string& doc, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < doc.size(); ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Json yaml_to_json(const std::string& document) {
  try {
    return node_to_json(YAML::Load(document));
  } catch (const YAML::ParserException& e) {
    throw SpecError(SpecError::Kind::syntax, "",
                    "syntax error at line " + std::to_string(e.mark.line + 1) + ", column " +
                        std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

// ── Tree reader ──

namespace {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SpecError(SpecError::Kind::invalid, path_, "expected a mapping");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* opt(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const Json& req(const std::string& key) {
    const Json* v = opt(key);
    if (!v) throw SpecError(SpecError::Kind::missing_field, at(key), "missing required field");
    return *v;
  }

  std::string str(const std::string& key) { return as_str(req(key), at(key)); }
  std::optional<std::string> opt_str(const std::string& key) {
    const Json* v = opt(key);
    if (!v) return std::nullopt;
    return as_str(*v, at(key));
  }
  double num(const std::string& key) { return as_num(req(key), at(key)); }
  std::optional<double> opt_num(const std::string& key) {
    const Json* v = opt(key);
    if (!v) return std::nullopt;
    return as_num(*v, at(key));
  }

  std::vector<std::string> str_list(const std::string& key) {
    std::vector<std::string> out;
    const Json* v = opt(key);
    if (!v) return out;
    if (!v->is_array()) throw SpecError(SpecError::Kind::invalid, at(key), "expected a list");
    for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_str((*v)[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  Json rest() const {
    Json out = Json::object();
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) out[it.key()] = it.value();
    return out;
  }

  static std::string as_str(const Json& v, const std::string& path) {
    if (!v.is_string()) throw SpecError(SpecError::Kind::invalid, path, "expected text");
    return v.get<std::string>();
  }
  static double as_num(const Json& v, const std::string& path) {
    if (!v.is_number()) throw SpecError(SpecError::Kind::invalid, path, "expected a number");
    return v.get<double>();
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class E, class F>
E enum_value(const std::string& text, const std::string& path, F from) {
  auto v = from(text);
  if (!v) throw SpecError(SpecError::Kind::unknown_enum, path, "unknown value '" + text + "'");
  return *v;
}

template <class E>
std::optional<E> lookup_enum(const std::string& s, std::initializer_list<E> all) {
  for (E e : all)
    if (s == to_string(e)) return e;
  return std::nullopt;
}

double positive_duration(const std::string& text, const std::string& path) {
  double d;
  try {
    d = parse_duration_text(text);
  } catch (const std::invalid_argument& e) {
    throw SpecError(SpecError::Kind::invalid, path, e.what());
  }
  if (!(d > 0)) throw SpecError(SpecError::Kind::invalid, path, "freshness must be strictly positive");
  return d;
}

predicate::PredicateExpr compile(const std::string& text, const std::string& path, bool formula) {
  try {
    return formula ? predicate::parse_formula(text) : predicate::parse_predicate(text);
  } catch (const predicate::PredicateError& e) {
    throw SpecError(SpecError::Kind::invalid, path, e.what());
  }
}

std::vector<Param> parse_params(const std::string& sig, const std::string& path, std::string& returns) {
  static const std::regex whole(R"(^\s*\((.*)\)\s*->\s*(\S+)\s*$)");
  std::smatch m;
  if (!std::regex_match(sig, m, whole)) throw SpecError(SpecError::Kind::invalid, path, "malformed signature");
  returns = m[2];
  std::vector<Param> params;
  std::string body = m[1];
  std::stringstream ss(body);
  std::string part;
  static const std::regex param_re(R"(^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(\S+)\s*$)");
  while (std::getline(ss, part, ',')) {
    if (part.find_first_not_of(" \t") == std::string::npos) continue;
    std::smatch pm;
    if (!std::regex_match(part, pm, param_re)) throw SpecError(SpecError::Kind::invalid, path, "malformed parameter '" + part + "'");
    Param p;
    p.name = pm[1];
    p.type_text = pm[2];
    p.semantic = p.type_text == "EUR" ? SemanticType::money_eur
                 : p.type_text == "str" ? SemanticType::text_id
                                        : SemanticType::record;
    for (const auto& q : params)
      if (q.name == p.name) throw SpecError(SpecError::Kind::invalid, path, "duplicate parameter '" + p.name + "'");
    params.push_back(p);
  }
  return params;
}

ConstraintDef parse_constraint(const Json& j, const std::string& base) {
  ConstraintDef c;
  std::string path = base;
  if (j.is_object() && j.contains("id") && j["id"].is_string()) path = "constraints[" + j["id"].get<std::string>() + "]";
  Reader r(j, path);
  c.id = r.str("id");

  {
    Reader s(r.req("source"), r.at("source"));
    c.src = Source{enum_value<SourceKind>(s.str("type"), s.at("type"), source_kind_from), s.str("reference"), {}};
    c.src->extra = s.rest();
  }
  c.cls = enum_value<ConstraintClass>(r.str("class"), r.at("class"), class_from);
  {
    Reader p(r.req("predicate"), r.at("predicate"));
    PredicateSpec ps;
    ps.lang = p.opt_str("lang").value_or("spel");
    ps.expr = compile(p.str("expr"), p.at("expr"), false);
    ps.extra = p.rest();
    c.pred = std::move(ps);
  }
  {
    Reader o(r.req("operating_point"), r.at("operating_point"));
    OperatingPoint op;
    op.kind = enum_value<OperatingPointKind>(o.str("type"), o.at("type"), [](const std::string& s) {
      return lookup_enum(s, {OperatingPointKind::exact_predicate, OperatingPointKind::deterministic_threshold,
                             OperatingPointKind::threshold});
    });
    op.theta = o.opt_num("theta");
    op.calibration_basis = o.opt_str("calibration_basis");
    op.fp_tolerance = o.opt_num("false_positive_tolerance").value_or(0.0);
    op.fn_tolerance = o.opt_num("false_negative_tolerance").value_or(0.0);
    for (auto [v, k] : {std::pair{op.fp_tolerance, "false_positive_tolerance"}, {op.fn_tolerance, "false_negative_tolerance"}})
      if (v < 0 || v > 1) throw SpecError(SpecError::Kind::invalid, o.at(k), "tolerance must lie in [0, 1]");
    if (op.kind == OperatingPointKind::exact_predicate && (op.fp_tolerance != 0 || op.fn_tolerance != 0))
      throw SpecError(SpecError::Kind::invalid, r.at("operating_point"), "exact_predicate requires zero tolerances");
    op.extra = o.rest();
    c.operating_point = std::move(op);
  }
  {
    Reader v(r.req("verification"), r.at("verification"));
    Verification vf;
    vf.point = enum_value<Site>(v.str("point"), v.at("point"), site_from);
    vf.latency_budget_ms = v.opt_num("latency_budget_ms");
    vf.tool = v.opt_str("tool");
    vf.extra = v.rest();
    c.verif = std::move(vf);
  }
  {
    Reader p(r.req("response"), r.at("response"));
    Response resp;
    resp.kind = enum_value<ResponseKind>(p.str("type"), p.at("type"), response_from);
    resp.router_group = p.opt_str("router_group");
    if (const Json* b = p.opt("backoff")) {
      Reader br(*b, p.at("backoff"));
      Backoff bo;
      bo.formula = compile(br.str("formula"), br.at("formula"), true);
      bo.unit = br.opt_str("unit").value_or("seconds");
      bo.extra = br.rest();
      resp.backoff = std::move(bo);
    }
    if (resp.kind == ResponseKind::suspend_and_route && !resp.router_group)
      throw SpecError(SpecError::Kind::missing_field, p.at("router_group"), "suspend_and_route requires a router group");
    if (resp.kind == ResponseKind::throttle && !resp.backoff)
      throw SpecError(SpecError::Kind::missing_field, p.at("backoff"), "throttle requires a backoff formula");
    resp.extra = p.rest();
    c.resp = std::move(resp);
  }
  if (const Json* t = r.opt("timeout")) {
    Reader tr(*t, r.at("timeout"));
    Timeout to;
    to.reversibility_window_s = tr.num("reversibility_window_s");
    if (!(to.reversibility_window_s > 0))
      throw SpecError(SpecError::Kind::invalid, tr.at("reversibility_window_s"), "must be positive");
    to.on_timeout = enum_value<OnTimeout>(tr.str("on_timeout"), tr.at("on_timeout"), [](const std::string& s) {
      return lookup_enum(s, {OnTimeout::deny, OnTimeout::allow});
    });
    to.extra = tr.rest();
    c.timeout = std::move(to);
  }
  if (r.opt("authority_binding")) c.authority_binding = r.str_list("authority_binding");
  c.trace_fields = r.str_list("trace_fields");
  c.cost = r.opt_num("cost");
  c.extra = r.rest();
  return c;
}

OperatorGroupSpec parse_group(const std::string& name, const Json& j, const std::string& path) {
  Reader r(j, path);
  OperatorGroupSpec g;
  g.name = name;
  if (const Json* cm = r.opt("capacity_model")) {
    Reader c(*cm, r.at("capacity_model"));
    g.capacity_type = c.opt_str("type").value_or("mmc");
    if (auto n = c.opt_num("c")) {
      if (*n < 1 || *n != std::floor(*n)) throw SpecError(SpecError::Kind::invalid, c.at("c"), "server count must be a positive integer");
      g.servers = static_cast<int>(*n);
    }
    g.mean_service_s = c.opt_num("mean_service_s");
    if (g.mean_service_s && !(*g.mean_service_s > 0))
      throw SpecError(SpecError::Kind::invalid, c.at("mean_service_s"), "must be positive");
    g.capacity_extra = c.rest();
  }
  g.hours = r.opt_str("hours");
  if (const Json* ah = r.opt("after_hours")) {
    Reader a(*ah, r.at("after_hours"));
    AfterHours h;
    h.mode = a.str("mode");
    for (const char* key : {"fallback_if_unavailable", "fallback_if_exceeds_window"}) {
      if (auto f = a.opt_str(key)) {
        h.fallback = f;
        h.fallback_key = key;
      }
    }
    h.extra = a.rest();
    g.after_hours = std::move(h);
  }
  g.extra = r.rest();
  return g;
}

}  // namespace

Specification spec_from_json(const Json& tree) {
  Reader r(tree, "");
  Specification s;
  s.spec_version = r.str("spec_version");
  if (s.spec_version != "sarc-0.1") throw SpecError(SpecError::Kind::invalid, "spec_version", "unsupported version '" + s.spec_version + "'");
  s.agent_name = r.str("agent");
  if (const Json* d = r.opt("deployment")) s.deployment = *d;

  {
    Reader st(r.req("state"), "state");
    s.state_spec.modalities = st.str_list("modalities");
    if (const Json* rs = st.opt("retrieval")) {
      if (!rs->is_array()) throw SpecError(SpecError::Kind::invalid, "state.retrieval", "expected a list");
      for (std::size_t i = 0; i < rs->size(); ++i) {
        std::string p = "state.retrieval[" + std::to_string(i) + "]";
        Reader rr((*rs)[i], p);
        RetrievalSource src;
        src.source = rr.str("source");
        src.freshness_max_s = positive_duration(rr.str("freshness_max"), rr.at("freshness_max"));
        s.state_spec.retrieval_sources.push_back(src);
      }
    }
    auto mem = st.opt_str("memory").value_or("stateless");
    s.state_spec.memory_kind = enum_value<MemoryKind>(mem, "state.memory", [](const std::string& m) {
      return lookup_enum(m, {MemoryKind::stateless, MemoryKind::episodic, MemoryKind::persistent});
    });
    s.state_spec.freshness_default_s = positive_duration(st.str("freshness_default"), "state.freshness_default");
    s.state_spec.extra = st.rest();
  }

  {
    Reader a(r.req("action_space"), "action_space");
    const Json& tools = a.req("tools");
    if (!tools.is_array()) throw SpecError(SpecError::Kind::invalid, "action_space.tools", "expected a list");
    for (std::size_t i = 0; i < tools.size(); ++i) {
      std::string p = "action_space.tools[" + std::to_string(i) + "]";
      Reader tr(tools[i], p);
      ToolSignature t;
      t.name = tr.str("name");
      t.params = parse_params(tr.str("signature"), tr.at("signature"), t.returns);
      for (const auto& h : tr.str_list("enforcement_hooks")) t.enforcement_hooks.insert(h);
      t.extra = tr.rest();
      if (s.action_space.find(t.name)) throw SpecError(SpecError::Kind::invalid, p, "duplicate tool '" + t.name + "'");
      s.action_space.tools.push_back(std::move(t));
    }
    double mpl = a.num("max_plan_length");
    if (mpl < 1 || mpl != std::floor(mpl)) throw SpecError(SpecError::Kind::invalid, "action_space.max_plan_length", "must be a positive integer");
    s.action_space.max_plan_length = static_cast<int>(mpl);
    if (const Json* cm = a.opt("cost_model")) {
      if (!cm->is_object()) throw SpecError(SpecError::Kind::invalid, "action_space.cost_model", "expected a mapping");
      for (auto it = cm->begin(); it != cm->end(); ++it) {
        Reader cr(it.value(), "action_space.cost_model." + it.key());
        s.action_space.cost_model[it.key()] = CostTier{cr.str("compute"), cr.str("external")};
      }
    }
    s.action_space.extra = a.rest();
  }

  {
    Reader rw(r.req("reward"), "reward");
    auto kind = rw.str("type");
    s.reward_spec.kind = enum_value<RewardKind>(kind, "reward.type", [](const std::string& k) {
      return lookup_enum(k, {RewardKind::scalarization, RewardKind::lexicographic});
    });
    if (const Json* comps = rw.opt("components")) {
      if (!comps->is_array()) throw SpecError(SpecError::Kind::invalid, "reward.components", "expected a list");
      for (std::size_t i = 0; i < comps->size(); ++i) {
        Reader cr((*comps)[i], "reward.components[" + std::to_string(i) + "]");
        s.reward_spec.components.push_back({cr.str("name"), cr.opt_num("weight").value_or(0.0)});
      }
    }
    if (s.reward_spec.kind == RewardKind::scalarization && !s.reward_spec.components.empty()) {
      double sum = 0;
      for (const auto& c : s.reward_spec.components) sum += c.weight;
      if (std::fabs(sum - 1.0) > 1e-9) throw SpecError(SpecError::Kind::invalid, "reward.components", "scalarization weights must sum to 1");
    }
    s.reward_spec.horizon = rw.opt_str("horizon").value_or("");
    if (const Json* asym = rw.opt("asymmetry")) {
      Reader ar(*asym, "reward.asymmetry");
      s.reward_spec.fp_cost = ar.opt_num("false_positive_cost");
      s.reward_spec.fn_cost = ar.opt_num("false_negative_cost");
      s.reward_spec.asymmetry_extra = ar.rest();
    }
    if (const Json* g = rw.opt("goodhart_check")) s.reward_spec.goodhart_note = *g;
    s.reward_spec.extra = rw.rest();
  }

  {
    const Json& cs = r.req("constraints");
    if (!cs.is_array()) throw SpecError(SpecError::Kind::invalid, "constraints", "expected a list");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      auto c = parse_constraint(cs[i], "constraints[" + std::to_string(i) + "]");
      if (s.find(c.id)) throw SpecError(SpecError::Kind::invalid, "constraints[" + c.id + "]", "duplicate constraint id");
      s.constraints.push_back(std::move(c));
    }
  }

  if (const Json* er = r.opt("escalation_router")) {
    Reader err(*er, "escalation_router");
    if (const Json* groups = err.opt("groups")) {
      if (!groups->is_object()) throw SpecError(SpecError::Kind::invalid, "escalation_router.groups", "expected a mapping");
      for (auto it = groups->begin(); it != groups->end(); ++it)
        s.router_groups[it.key()] = parse_group(it.key(), it.value(), "escalation_router.groups." + it.key());
    }
    if (!err.rest().empty()) s.extra["escalation_router"] = err.rest();
  }

  if (const Json* ae = r.opt("audit_emission")) {
    Reader ar(*ae, "audit_emission");
    AuditEmission a;
    a.schema_version = ar.str("schema_version");
    if (const Json* f = ar.opt("fields")) a.fields = *f;
    a.retention = ar.opt_str("retention");
    a.destination = ar.opt_str("destination");
    a.extra = ar.rest();
    s.audit = std::move(a);
  }

  if (const Json* ep = r.opt("enforcement_property")) {
    Reader er(*ep, "enforcement_property");
    EnforcementProperty e;
    e.name = er.str("property");
    e.description = er.opt_str("description");
    e.invariant_ref = er.opt_str("invariant_ref");
    e.extra = er.rest();
    s.enforcement_property = std::move(e);
  }

  Json rest = r.rest();
  for (auto it = rest.begin(); it != rest.end(); ++it) s.extra[it.key()] = it.value();

  // Tool- and policy-layer constraints naming a tool are hooks on that tool.
  for (const auto& c : s.constraints) {
    if (c.verif->tool && (c.verif->point == Site::tool_layer || c.verif->point == Site::policy_layer)) {
      for (auto& t : s.action_space.tools)
        if (t.name == *c.verif->tool) t.enforcement_hooks.insert(c.id);
    }
    if (c.resp->router_group && !s.router_groups.count(*c.resp->router_group))
      throw SpecError(SpecError::Kind::invalid, "constraints[" + c.id + "].response.router_group",
                      "unknown router group '" + *c.resp->router_group + "'");
  }
  return s;
}

Specification parse_spec(const std::string& document) {
  auto first = document.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && document[first] == '{') {
    Json tree;
    try {
      tree = Json::parse(document);
    } catch (const Json::parse_error& e) {
      throw SpecError(SpecError::Kind::syntax, "", "syntax error at " + line_col(document, e.byte == 0 ? 0 : e.byte - 1));
    }
    return spec_from_json(tree);
  }
  return spec_from_json(yaml_to_json(document));
}

Specification load_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

// ── Serialization ──

namespace {

void merge(Json& into, const Json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) into[it.key()] = it.value();
}

Json constraint_to_json(const ConstraintDef& c) {
  Json j = Json::object();
  merge(j, c.extra);
  j["id"] = c.id;
  if (c.src) {
    Json s = {{"type", to_string(c.src->kind)}, {"reference", c.src->reference}};
    merge(s, c.src->extra);
    j["source"] = s;
  }
  if (c.cls) j["class"] = to_string(*c.cls);
  if (c.pred) {
    Json p = {{"lang", c.pred->lang}, {"expr", c.pred->expr.source()}};
    merge(p, c.pred->extra);
    j["predicate"] = p;
  }
  if (c.operating_point) {
    const auto& op = *c.operating_point;
    Json o = {{"type", to_string(op.kind)},
              {"false_positive_tolerance", op.fp_tolerance},
              {"false_negative_tolerance", op.fn_tolerance}};
    if (op.theta) o["theta"] = *op.theta;
    if (op.calibration_basis) o["calibration_basis"] = *op.calibration_basis;
    merge(o, op.extra);
    j["operating_point"] = o;
  }
  if (c.verif) {
    Json v = {{"point", to_string(c.verif->point)}};
    if (c.verif->latency_budget_ms) v["latency_budget_ms"] = *c.verif->latency_budget_ms;
    if (c.verif->tool) v["tool"] = *c.verif->tool;
    merge(v, c.verif->extra);
    j["verification"] = v;
  }
  if (c.resp) {
    Json r = {{"type", to_string(c.resp->kind)}};
    if (c.resp->router_group) r["router_group"] = *c.resp->router_group;
    if (c.resp->backoff) {
      Json b = {{"formula", c.resp->backoff->formula.source()}, {"unit", c.resp->backoff->unit}};
      merge(b, c.resp->backoff->extra);
      r["backoff"] = b;
    }
    merge(r, c.resp->extra);
    j["response"] = r;
  }
  if (c.timeout) {
    Json t = {{"reversibility_window_s", c.timeout->reversibility_window_s}, {"on_timeout", to_string(c.timeout->on_timeout)}};
    merge(t, c.timeout->extra);
    j["timeout"] = t;
  }
  if (c.authority_binding) j["authority_binding"] = *c.authority_binding;
  j["trace_fields"] = c.trace_fields;
  if (c.cost) j["cost"] = *c.cost;
  return j;
}

}  // namespace

Json spec_to_json(const Specification& s) {
  Json j = Json::object();
  merge(j, s.extra);
  j["spec_version"] = s.spec_version;
  j["agent"] = s.agent_name;
  if (!s.deployment.is_null()) j["deployment"] = s.deployment;

  Json st = Json::object();
  merge(st, s.state_spec.extra);
  st["modalities"] = s.state_spec.modalities;
  Json retr = Json::array();
  for (const auto& r : s.state_spec.retrieval_sources)
    retr.push_back({{"source", r.source}, {"freshness_max", format_duration_text(r.freshness_max_s)}});
  st["retrieval"] = retr;
  st["memory"] = to_string(s.state_spec.memory_kind);
  st["freshness_default"] = format_duration_text(s.state_spec.freshness_default_s);
  j["state"] = st;

  Json as = Json::object();
  merge(as, s.action_space.extra);
  Json tools = Json::array();
  for (const auto& t : s.action_space.tools) {
    Json tj = Json::object();
    merge(tj, t.extra);
    tj["name"] = t.name;
    tj["signature"] = t.signature_text();
    if (!t.enforcement_hooks.empty()) tj["enforcement_hooks"] = std::vector<std::string>(t.enforcement_hooks.begin(), t.enforcement_hooks.end());
    tools.push_back(tj);
  }
  as["tools"] = tools;
  as["max_plan_length"] = s.action_space.max_plan_length;
  if (!s.action_space.cost_model.empty()) {
    Json cm = Json::object();
    for (const auto& [k, v] : s.action_space.cost_model) cm[k] = {{"compute", v.compute}, {"external", v.external}};
    as["cost_model"] = cm;
  }
  j["action_space"] = as;

  Json rw = Json::object();
  merge(rw, s.reward_spec.extra);
  rw["type"] = to_string(s.reward_spec.kind);
  Json comps = Json::array();
  for (const auto& c : s.reward_spec.components) comps.push_back({{"name", c.name}, {"weight", c.weight}});
  rw["components"] = comps;
  if (!s.reward_spec.horizon.empty()) rw["horizon"] = s.reward_spec.horizon;
  if (s.reward_spec.fp_cost || s.reward_spec.fn_cost || !s.reward_spec.asymmetry_extra.empty()) {
    Json a = Json::object();
    merge(a, s.reward_spec.asymmetry_extra);
    if (s.reward_spec.fp_cost) a["false_positive_cost"] = *s.reward_spec.fp_cost;
    if (s.reward_spec.fn_cost) a["false_negative_cost"] = *s.reward_spec.fn_cost;
    rw["asymmetry"] = a;
  }
  if (!s.reward_spec.goodhart_note.is_null()) rw["goodhart_check"] = s.reward_spec.goodhart_note;
  j["reward"] = rw;

  Json cs = Json::array();
  for (const auto& c : s.constraints) cs.push_back(constraint_to_json(c));
  j["constraints"] = cs;

  if (!s.router_groups.empty() || s.extra.contains("escalation_router")) {
    Json er = s.extra.contains("escalation_router") ? s.extra["escalation_router"] : Json::object();
    Json groups = Json::object();
    for (const auto& [name, g] : s.router_groups) {
      Json gj = Json::object();
      merge(gj, g.extra);
      Json cap = Json::object();
      merge(cap, g.capacity_extra);
      cap["type"] = g.capacity_type;
      if (g.servers) cap["c"] = *g.servers;
      if (g.mean_service_s) cap["mean_service_s"] = *g.mean_service_s;
      gj["capacity_model"] = cap;
      if (g.hours) gj["hours"] = *g.hours;
      if (g.after_hours) {
        Json ah = Json::object();
        merge(ah, g.after_hours->extra);
        ah["mode"] = g.after_hours->mode;
        if (g.after_hours->fallback) ah[g.after_hours->fallback_key] = *g.after_hours->fallback;
        gj["after_hours"] = ah;
      }
      groups[name] = gj;
    }
    er["groups"] = groups;
    j["escalation_router"] = er;
  }

  if (s.audit) {
    Json a = Json::object();
    merge(a, s.audit->extra);
    a["schema_version"] = s.audit->schema_version;
    if (!s.audit->fields.is_null()) a["fields"] = s.audit->fields;
    if (s.audit->retention) a["retention"] = *s.audit->retention;
    if (s.audit->destination) a["destination"] = *s.audit->destination;
    j["audit_emission"] = a;
  }
  if (s.enforcement_property) {
    Json e = Json::object();
    merge(e, s.enforcement_property->extra);
    e["property"] = s.enforcement_property->name;
    if (s.enforcement_property->description) e["description"] = *s.enforcement_property->description;
    if (s.enforcement_property->invariant_ref) e["invariant_ref"] = *s.enforcement_property->invariant_ref;
    j["enforcement_property"] = e;
  }
  return j;
}

std::string serialize_spec(const Specification& spec) { return spec_to_json(spec).dump(2, ' ', true) + "\n"; }

}  // namespace sarc::spec

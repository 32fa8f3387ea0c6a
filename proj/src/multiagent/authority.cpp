#include <algorithm>
#include <charconv>
#include <iterator>

#include "sarc/attribution.hpp"

namespace sarc {

AuthoritySet intersect(const AuthoritySet& a, const AuthoritySet& b) {
  AuthoritySet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

AuthoritySet unite(const AuthoritySet& a, const AuthoritySet& b) {
  AuthoritySet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

AuthoritySet chain_authority(const PrincipalChain& chain) {
  if (chain.empty()) return {};
  AuthoritySet acc = chain.front().authority;
  for (std::size_t i = 1; i < chain.size(); ++i) acc = intersect(acc, chain[i].authority);
  return acc;
}

std::set<std::string> chain_names(const PrincipalChain& chain) {
  std::set<std::string> out;
  for (const auto& p : chain) {
    out.insert(p.id);
    if (!p.role.empty()) out.insert(p.role);
  }
  return out;
}

bool permits(const AuthoritySet& auth, const Action& a) {
  if (auth.count("*") || auth.count(a.tool)) return true;
  const std::string prefix = a.tool + ":<=";
  auto amount = a.args.find("amount");
  for (auto it = auth.lower_bound(prefix); it != auth.end() && it->rfind(prefix, 0) == 0; ++it) {
    if (amount == a.args.end()) continue;
    double bound = 0;
    const std::string& s = *it;
    auto res = std::from_chars(s.data() + prefix.size(), s.data() + s.size(), bound);
    if (res.ec != std::errc()) continue;
    const Value& v = amount->second;
    double eur = v.type() == ValueType::money ? static_cast<double>(v.as_money().cents) / 100.0
                 : v.type() == ValueType::number ? v.as_number()
                                                 : -1.0;
    if (eur >= 0 && euros_to_cents(eur) <= euros_to_cents(bound)) return true;
  }
  return false;
}

Json authority_to_json(const AuthoritySet& a) { return Json(std::vector<std::string>(a.begin(), a.end())); }

AuthoritySet authority_from_json(const Json& j) {
  AuthoritySet out;
  for (const auto& x : j) out.insert(x.get<std::string>());
  return out;
}

Json attribution_to_json(const AttributionTuple& a) {
  Json chain = Json::array();
  for (const auto& p : a.chain) chain.push_back({{"id", p.id}, {"role", p.role}, {"authority", authority_to_json(p.authority)}});
  return Json{{"chain", chain},        {"planner", a.planner_id},         {"executor", a.executor_id},
              {"tool", a.tool},        {"auth", authority_to_json(a.auth)}, {"c_eval", a.c_eval}};
}

AttributionTuple attribution_from_json(const Json& j) {
  AttributionTuple a;
  for (const auto& p : j.at("chain"))
    a.chain.push_back({p.at("id").get<std::string>(), p.value("role", ""), authority_from_json(p.at("authority"))});
  a.planner_id = j.value("planner", "");
  a.executor_id = j.value("executor", "");
  a.tool = j.value("tool", "");
  a.auth = authority_from_json(j.at("auth"));
  for (const auto& c : j.value("c_eval", Json::array())) a.c_eval.push_back(c.get<std::string>());
  return a;
}

}  // namespace sarc

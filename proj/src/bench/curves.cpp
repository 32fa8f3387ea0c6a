#include <cstdio>
#include <sstream>

#include "sarc/bench.hpp"

namespace sarc::bench {

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// ── Violation rate against opportunity rate ──

std::string epsilon_curve_csv(const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw std::invalid_argument("epsilon grid is empty");
  std::ostringstream o;
  o << "epsilon,posthoc_pct,sarc_pct\n";
  // Post-hoc audit executes every opportunity; an exact gate executes none.
  for (double e : eps_grid) o << fmt(e, 4) << ',' << fmt(100.0 * e, 4) << ',' << fmt(0.0, 4) << '\n';
  return o.str();
}

// ── Queue wait against utilization ──

std::string queue_curve_csv(const std::vector<int>& servers, const std::vector<double>& rho_grid, double mu,
                            double tau_rev_s) {
  if (servers.empty() || rho_grid.empty()) throw std::invalid_argument("queue grid is empty");
  std::ostringstream o;
  o << "c,rho,lambda,w_q_s,tau_rev_s,admissible,divergent\n";
  for (int c : servers) {
    for (double rho : rho_grid) {
      double lambda = rho * c * mu;
      auto q = escalation::erlang_c(c, lambda, mu, tau_rev_s);
      o << c << ',' << fmt(rho, 4) << ',' << fmt(lambda, 8) << ',' << (q.w_q ? fmt(*q.w_q, 4) : std::string()) << ','
        << fmt(tau_rev_s, 1) << ',' << (q.admissible ? "true" : "false") << ',' << (q.divergent ? "true" : "false")
        << '\n';
    }
  }
  return o.str();
}

// ── Latency against safety ──

const char* to_string(CheckKind k) {
  switch (k) {
    case CheckKind::none: return "none";
    case CheckKind::deterministic: return "deterministic";
    case CheckKind::retrieval: return "retrieval";
    case CheckKind::model_call: return "model_call";
  }
  return "?";
}

std::vector<LatencyPoint> reference_latency_points() {
  return {{"Audit only", 0, 4.7, CheckKind::none},
          {"Output filter", 8, 2.1, CheckKind::deterministic},
          {"Workflow rules", 15, 0.8, CheckKind::deterministic},
          {"SARC (PAG)", 21, 0.0, CheckKind::deterministic},
          {"SARC + retrieval", 45, 0.0, CheckKind::retrieval},
          {"SARC w/ LLM-judge check", 110, 0.0, CheckKind::model_call}};
}

std::string latency_curve_csv(const std::vector<LatencyPoint>& points) {
  if (points.empty()) throw std::invalid_argument("no latency points");
  std::ostringstream o;
  o << "label,latency_ms,hard_violation_pct,check,boundary_crossing\n";
  for (const auto& p : points)
    o << '"' << p.label << "\"," << fmt(p.latency_ms, 1) << ',' << fmt(p.hard_violation_pct, 2) << ','
      << to_string(p.check) << ',' << (crosses_model_boundary(p) ? "true" : "false") << '\n';
  return o.str();
}

}  // namespace sarc::bench

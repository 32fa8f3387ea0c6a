#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sarc/audit.hpp"
#include "sarc/engine.hpp"

namespace sarc::bench {

// ── Configuration ──

enum class Regime { posthoc_audit, output_filter, workflow_rules, pac_only, sarc };

const char* to_string(Regime r);
std::optional<Regime> regime_from(const std::string& s);
const std::vector<Regime>& all_regimes();

struct ProcurementConfig {
  int orders_per_episode = 1000;
  double mu_ln = 8.5;  // order amounts in euros, log-normal
  double sigma_ln = 1.2;
  double p_first_supplier = 0.135;
  double hard_threshold_eur = 50000;
  double soft_theta_eur = 475000;
  double soft_cap_eur = 500000;
  double inter_arrival_s = 68.6;  // mean of exponential gaps
  int operators = 2;
  double mean_service_s = 360;
  double hard_window_s = 600;     // reversibility window of the high-value review
  double review_window_s = 14400; // reversibility window of the supplier review
  double filter_coverage = 0.25;  // share of over-threshold orders the filter catches
  std::map<Regime, double> latency_ms = {{Regime::posthoc_audit, 0},
                                         {Regime::output_filter, 7},
                                         {Regime::workflow_rules, 12},
                                         {Regime::pac_only, 15},
                                         {Regime::sarc, 21}};
  int seeds = 50;
  unsigned threads = 0;  // 0: hardware concurrency

  // Throws std::invalid_argument.
  void validate() const;
};

// The governed specification the sarc regime runs under.
std::string reference_spec_yaml(const ProcurementConfig& cfg);

struct OrderDraw {
  double arrival_s = 0.0;
  Money amount;
  bool first_time = false;
};

// Arrivals, amounts and supplier novelty for one seed. Every regime sees the
// same stream for a given seed.
std::vector<OrderDraw> draw_orders(const ProcurementConfig& cfg, std::uint64_t seed);

// ── Episodes ──

struct EpisodeMetrics {
  double hard_executed = 0;
  double soft_overages = 0;
  double suppliers_no_review = 0;
  double escalations = 0;
  double latency_per_step_ms = 0;
  double total_spend = 0;  // euros placed
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> n = {"hard_executed", "soft_overages", "suppliers_no_review",
                                             "escalations",   "latency_per_step_ms", "total_spend"};
  return n;
}
double metric(const EpisodeMetrics& m, const std::string& name);

struct Faults {
  double eps_pred = 0.0;
  double eps_exec = 0.0;
};

struct EpisodeRun {
  EpisodeMetrics metrics;
  std::vector<engine::TraceRecord> trace;  // sarc only
};

EpisodeRun run_regime(const ProcurementConfig& cfg, Regime regime, std::uint64_t seed, Faults faults = {});

// ── Statistics ──

struct SummaryStats {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 sd / sqrt(n), sample sd
  int n = 0;
};

SummaryStats summarize(const std::vector<double>& xs);

struct SeedRow {
  std::uint64_t seed = 0;
  Regime regime = Regime::sarc;
  EpisodeMetrics metrics;
};

struct BenchmarkResult {
  std::map<Regime, std::map<std::string, SummaryStats>> summary;
  std::vector<SeedRow> rows;  // ordered by regime, then seed
  std::size_t traces_audited = 0;
  std::size_t traces_holding = 0;
  std::size_t discrepancies = 0;
};

std::vector<std::uint64_t> default_seeds(int n);  // 1..n

// Seeds fan out over threads; the result does not depend on scheduling.
BenchmarkResult run_benchmark(const ProcurementConfig& cfg, const std::vector<Regime>& regimes,
                              const std::vector<std::uint64_t>& seeds);

std::string summary_json(const BenchmarkResult& r);
std::string seeds_csv(const BenchmarkResult& r);

// ── Residual sweep ──

struct SweepCell {
  double eps_pred = 0.0;
  double eps_exec = 0.0;
  SummaryStats hard_executed;
};

std::vector<std::pair<double, double>> reference_grid();

std::vector<SweepCell> residual_sweep(const ProcurementConfig& cfg, const std::vector<std::pair<double, double>>& grid,
                                      const std::vector<std::uint64_t>& seeds);

// Expected share of opportunities that slip through: a predicate miss, or a
// caught one whose enforcement fails.
inline double slip_rate(double eps_pred, double eps_exec) { return eps_pred + (1.0 - eps_pred) * eps_exec; }

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double intercept_ci95 = 0.0;
};

// Ordinary least squares of cell means on the slip rate.
Regression scaling_regression(const std::vector<SweepCell>& cells);

std::string sweep_csv(const std::vector<SweepCell>& cells);

// ── Sensitivity curves ──

std::string epsilon_curve_csv(const std::vector<double>& eps_grid);
std::string queue_curve_csv(const std::vector<int>& servers, const std::vector<double>& rho_grid, double mu,
                            double tau_rev_s);

enum class CheckKind { none, deterministic, retrieval, model_call };
const char* to_string(CheckKind k);

struct LatencyPoint {
  std::string label;
  double latency_ms = 0.0;
  double hard_violation_pct = 0.0;
  CheckKind check = CheckKind::none;
};

std::vector<LatencyPoint> reference_latency_points();

// A check that needs its own model call sits on the model's latency scale
// rather than the tool's.
inline bool crosses_model_boundary(const LatencyPoint& p) { return p.check == CheckKind::model_call; }

std::string latency_curve_csv(const std::vector<LatencyPoint>& points);

// ── Economics ──

using Rational = boost::multiprecision::cpp_rational;

// Parses "0.04", "-3", "1/3" or "2.5e-2" exactly. Throws std::invalid_argument.
Rational parse_rational(const std::string& text);
std::string decimal_string(const Rational& r, int digits = 6);

struct Counterexample {
  Rational threshold;         // G / (G + M)
  Rational risky_return;      // (1 - eps) G - eps M
  bool shaping_prefers_risky; // strict; a tie goes to safe
  bool cmdp_prefers_risky;    // never: the cost bound forbids any violation mass
};

// Throws std::invalid_argument unless G > 0, M >= 0 and eps in (0,1).
Counterexample counterexample_demo(const Rational& G, const Rational& M, const Rational& eps);

struct CostPoint {
  Rational theta, p_fp, p_fn, p_esc;
};

struct CostModel {
  Rational kappa_fp, kappa_fn, kappa_er;
  std::vector<CostPoint> curve;  // tabulated operating points
};

// Reads rows "theta,p_fp,p_fn,p_esc" with an optional header. Throws
// std::invalid_argument.
std::vector<CostPoint> parse_cost_curve(const std::string& csv);

Rational expected_cost(const Rational& theta, const CostModel& m);  // throws if theta is not tabulated
std::optional<Rational> optimal_theta(const CostModel& m);

// Escalation cost is left out, as in the break-even argument it supports.
bool tradeoff_check(const Rational& delta_fp, const Rational& delta_fn, const CostModel& m);

}  // namespace sarc::bench

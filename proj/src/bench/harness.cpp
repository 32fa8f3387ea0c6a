#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "sarc/bench.hpp"

namespace sarc::bench {

// ── Statistics ──

SummaryStats summarize(const std::vector<double>& xs) {
  SummaryStats s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / xs.size();
  if (xs.size() < 2) return s;
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  double sd = std::sqrt(ss / (xs.size() - 1));
  s.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
  return s;
}

std::vector<std::uint64_t> default_seeds(int n) {
  std::vector<std::uint64_t> out;
  for (int i = 1; i <= n; ++i) out.push_back(static_cast<std::uint64_t>(i));
  return out;
}

namespace {

// Runs task(i) for i in [0, n) over a fixed pool. Tasks write to their own
// slots, so results do not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// ── Benchmark ──

BenchmarkResult run_benchmark(const ProcurementConfig& cfg, const std::vector<Regime>& regimes,
                              const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  auto spec = spec::parse_spec(reference_spec_yaml(cfg));
  const std::size_t n = regimes.size() * seeds.size();
  std::vector<SeedRow> rows(n);
  std::vector<std::optional<audit::AuditReport>> reports(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    Regime r = regimes[i / seeds.size()];
    std::uint64_t seed = seeds[i % seeds.size()];
    auto run = run_regime(cfg, r, seed);
    rows[i] = {seed, r, run.metrics};
    if (r == Regime::sarc) {
      audit::StreamingAudit checker(spec);
      for (const auto& rec : run.trace) checker.feed(engine::record_to_json(rec));
      reports[i] = checker.finish();
    }
  });

  BenchmarkResult out;
  out.rows = rows;
  for (const auto& rep : reports) {
    if (!rep) continue;
    ++out.traces_audited;
    if (rep->holds) ++out.traces_holding;
    out.discrepancies += rep->discrepancies.size();
  }
  for (Regime r : regimes) {
    for (const auto& name : metric_names()) {
      std::vector<double> xs;
      for (const auto& row : rows)
        if (row.regime == r) xs.push_back(metric(row.metrics, name));
      out.summary[r][name] = summarize(xs);
    }
  }
  return out;
}

std::string summary_json(const BenchmarkResult& r) {
  Json j = Json::object();
  Json regimes = Json::object();
  for (const auto& [regime, metrics] : r.summary) {
    Json m = Json::object();
    for (const auto& [name, s] : metrics) m[name] = {{"mean", s.mean}, {"ci95", s.ci95}, {"n", s.n}};
    regimes[to_string(regime)] = m;
  }
  j["regimes"] = regimes;
  j["audit"] = {{"traces_audited", r.traces_audited},
                {"traces_holding", r.traces_holding},
                {"discrepancies", r.discrepancies}};
  return j.dump(2) + "\n";
}

std::string seeds_csv(const BenchmarkResult& r) {
  std::ostringstream o;
  o << "seed,regime";
  for (const auto& name : metric_names()) o << ',' << name;
  o << '\n';
  for (const auto& row : r.rows) {
    const auto& m = row.metrics;
    o << row.seed << ',' << to_string(row.regime) << ',' << fmt(m.hard_executed, 0) << ',' << fmt(m.soft_overages, 0)
      << ',' << fmt(m.suppliers_no_review, 0) << ',' << fmt(m.escalations, 0) << ',' << fmt(m.latency_per_step_ms, 2)
      << ',' << fmt(m.total_spend, 2) << '\n';
  }
  return o.str();
}

// ── Residual sweep ──

std::vector<std::pair<double, double>> reference_grid() {
  std::vector<std::pair<double, double>> g;
  for (double p : {0.0, 0.01, 0.05, 0.10})
    for (double e : {0.0, 0.01, 0.05}) g.emplace_back(p, e);
  return g;
}

std::vector<SweepCell> residual_sweep(const ProcurementConfig& cfg, const std::vector<std::pair<double, double>>& grid,
                                      const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  const std::size_t n = grid.size() * seeds.size();
  std::vector<double> hard(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    auto [p, e] = grid[i / seeds.size()];
    hard[i] = run_regime(cfg, Regime::sarc, seeds[i % seeds.size()], Faults{p, e}).metrics.hard_executed;
  });
  std::vector<SweepCell> cells;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<double> xs(hard.begin() + c * seeds.size(), hard.begin() + (c + 1) * seeds.size());
    cells.push_back({grid[c].first, grid[c].second, summarize(xs)});
  }
  return cells;
}

Regression scaling_regression(const std::vector<SweepCell>& cells) {
  Regression r;
  const double n = static_cast<double>(cells.size());
  if (cells.size() < 3) throw std::invalid_argument("regression needs at least three cells");
  double mx = 0, my = 0;
  for (const auto& c : cells) {
    mx += slip_rate(c.eps_pred, c.eps_exec) / n;
    my += c.hard_executed.mean / n;
  }
  double sxx = 0, sxy = 0;
  for (const auto& c : cells) {
    double dx = slip_rate(c.eps_pred, c.eps_exec) - mx;
    sxx += dx * dx;
    sxy += dx * (c.hard_executed.mean - my);
  }
  if (sxx == 0) throw std::invalid_argument("regression needs distinct slip rates");
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0;
  for (const auto& c : cells) {
    double res = c.hard_executed.mean - (r.intercept + r.slope * slip_rate(c.eps_pred, c.eps_exec));
    sse += res * res;
  }
  double s2 = sse / (n - 2);
  r.intercept_ci95 = 1.96 * std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return r;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::ostringstream o;
  o << "eps_pred,eps_exec,mean,ci95\n";
  for (const auto& c : cells)
    o << fmt(c.eps_pred, 2) << ',' << fmt(c.eps_exec, 2) << ',' << fmt(c.hard_executed.mean, 4) << ','
      << fmt(c.hard_executed.ci95, 4) << '\n';
  return o.str();
}

}  // namespace sarc::bench

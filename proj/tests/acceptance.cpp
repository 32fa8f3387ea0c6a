// Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned here.

#include <gmpxx.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "sarc/audit.hpp"
#include "sarc/bench.hpp"
#include "sarc/multiagent.hpp"

using namespace sarc;
namespace fs = std::filesystem;

namespace {

// ── Harness ──

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "ok  " : "MISS ") + what);
  }
};

std::string num(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fixture(const std::string& rel) { return std::string(SARC_FIXTURE_DIR) + "/" + rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / x.size();
    my += std::log(y[i]) / y.size();
  }
  double num_ = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num_ += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return num_ / den;
}

const bench::BenchmarkResult& reference_bench(double* runtime_s = nullptr) {
  static double elapsed = 0.0;
  static const bench::BenchmarkResult r = [] {
    auto t0 = std::chrono::steady_clock::now();
    auto out = bench::run_benchmark(bench::ProcurementConfig{}, bench::all_regimes(), bench::default_seeds(50));
    elapsed = seconds_since(t0);
    return out;
  }();
  if (runtime_s) *runtime_s = elapsed;
  return r;
}

// ── 1. Table reproduction ──

Verdict table_reproduction() {
  using bench::Regime;
  Verdict v;
  double runtime = 0.0;
  const auto& r = reference_bench(&runtime);
  auto m = [&](Regime g, const char* k) { return r.summary.at(g).at(k).mean; };
  auto within = [&](Regime g, const char* k, double ref, double half) {
    double got = m(g, k);
    v.require(std::fabs(got - ref) <= half, std::string(bench::to_string(g)) + " " + k + " " + num(got) + " vs " +
                                                  num(ref) + "+/-" + num(half));
  };
  auto exact_zero = [&](Regime g, const char* k) {
    v.require(m(g, k) == 0.0, std::string(bench::to_string(g)) + " " + k + " " + num(m(g, k)) + " == 0");
  };
  within(Regime::posthoc_audit, "hard_executed", 26.8, 1.4);
  within(Regime::output_filter, "hard_executed", 19.4, 1.1);
  exact_zero(Regime::workflow_rules, "hard_executed");
  exact_zero(Regime::pac_only, "hard_executed");
  exact_zero(Regime::sarc, "hard_executed");
  within(Regime::pac_only, "escalations", 133.8, 2.5);
  within(Regime::sarc, "escalations", 160.2, 3.3);
  exact_zero(Regime::pac_only, "suppliers_no_review");
  exact_zero(Regime::sarc, "suppliers_no_review");
  within(Regime::posthoc_audit, "suppliers_no_review", 132.3, 2.4);
  within(Regime::output_filter, "suppliers_no_review", 132.7, 2.3);
  within(Regime::workflow_rules, "suppliers_no_review", 129.0, 2.6);
  v.require(runtime < 120.0, "50-seed benchmark in " + num(runtime, 1) + " s < 120 s");
  return v;
}

// ── 2. Soft-window reduction ──

Verdict soft_window_reduction() {
  using bench::Regime;
  Verdict v;
  const auto& r = reference_bench();
  double sarc_soft = r.summary.at(Regime::sarc).at("soft_overages").mean;
  double pac_soft = r.summary.at(Regime::pac_only).at("soft_overages").mean;
  double ratio = sarc_soft / pac_soft;
  v.require(ratio <= 0.15, "sarc/pac soft overages " + num(sarc_soft) + "/" + num(pac_soft) + " = " + num(100 * ratio, 1) +
                               "% <= 15%");
  v.notes.push_back("info stretch target 98.8+/-1.0, measured " + num(sarc_soft));
  return v;
}

// ── 3. Residual sweep ──

Verdict residual_sweep() {
  using bench::Regime;
  Verdict v;
  // Reference table: (eps_pred, eps_exec) -> mean, CI half-width.
  struct Cell {
    double p, e, mean, ci;
  };
  const std::vector<Cell> ref = {{0.00, 0.00, 0.00, 0.00}, {0.00, 0.01, 0.26, 0.15}, {0.00, 0.05, 1.20, 0.31},
                                   {0.01, 0.00, 0.20, 0.14}, {0.01, 0.01, 0.46, 0.20}, {0.01, 0.05, 1.38, 0.36},
                                   {0.05, 0.00, 1.32, 0.35}, {0.05, 0.01, 1.58, 0.37}, {0.05, 0.05, 2.50, 0.46},
                                   {0.10, 0.00, 2.52, 0.50}, {0.10, 0.01, 2.78, 0.51}, {0.10, 0.05, 3.66, 0.59}};
  std::vector<std::pair<double, double>> grid;
  for (const auto& c : ref) grid.emplace_back(c.p, c.e);
  bench::ProcurementConfig cfg;
  auto cells = bench::residual_sweep(cfg, grid, bench::default_seeds(50));
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double tol = std::max(ref[i].ci, 0.25 * ref[i].mean);
    double got = cells[i].hard_executed.mean;
    v.require(std::fabs(got - ref[i].mean) <= tol + 1e-12, "cell (" + num(ref[i].p) + "," + num(ref[i].e) + ") " +
                                                                 num(got) + " vs " + num(ref[i].mean) + "+/-" + num(tol));
  }
  // Opportunity rate: hard executions without enforcement, same seeds.
  double opportunity = reference_bench().summary.at(Regime::posthoc_audit).at("hard_executed").mean;
  auto reg = bench::scaling_regression(cells);
  v.require(std::fabs(reg.slope - opportunity) <= 0.2 * opportunity,
            "slope " + num(reg.slope) + " within 20% of opportunity rate " + num(opportunity));
  return v;
}

// ── 4. Decidable audit ──

Verdict decidable_audit() {
  using audit::Pass;
  Verdict v;
  const auto& r = reference_bench();
  v.require(r.traces_audited == 50 && r.traces_holding == 50 && r.discrepancies == 0,
            std::to_string(r.traces_holding) + "/" + std::to_string(r.traces_audited) + " sarc traces hold, " +
                std::to_string(r.discrepancies) + " discrepancies");

  bench::ProcurementConfig cfg;
  auto s = spec::parse_spec(bench::reference_spec_yaml(cfg));
  std::vector<Json> base;
  for (const auto& rec : bench::run_regime(cfg, bench::Regime::sarc, 3).trace) base.push_back(engine::record_to_json(rec));

  auto locate = [&](const std::function<bool(const Json&, const Json&)>& pred) -> std::pair<std::size_t, std::size_t> {
    for (std::size_t i = 0; i < base.size(); ++i)
      for (std::size_t k = 0; k < base[i]["evaluated"].size(); ++k)
        if (pred(base[i], base[i]["evaluated"][k])) return {i, k};
    return {base.size(), 0};
  };
  auto only = [&](const std::vector<Json>& t, Pass p, const std::string& name) {
    auto rep = audit::check_correspondence(s, t);
    bool ok = !rep.holds && rep.count(p) >= 1 && rep.count(p) == rep.discrepancies.size();
    v.require(ok, name + " caught only by " + audit::to_string(p) + " (" + std::to_string(rep.discrepancies.size()) +
                      " discrepancies)");
  };
  auto is_hard_fired = [](const Json&, const Json& e) { return e["class"] == "hard" && e["outcome"] == "fired"; };
  {
    auto [i, k] = locate([](const Json& rec, const Json&) { return rec["dispatched"] == true; });
    auto t = base;
    if (i < t.size()) t[i]["evaluated"].erase(k);
    only(t, Pass::coverage, "deleted event");
  }
  {
    auto [i, k] = locate([](const Json&, const Json& e) { return e["class"] == "hard"; });
    auto t = base;
    if (i < t.size()) t[i]["evaluated"][k]["site"] = "PAA";
    only(t, Pass::class_placement, "hard check moved post-action");
  }
  {
    auto [i, k] = locate(is_hard_fired);
    auto t = base;
    if (i < t.size()) t[i]["evaluated"][k]["response_taken"] = "log";
    only(t, Pass::outcome_consistency, "fired hard logged");
  }
  {
    auto t = base;
    t[5]["attribution"]["chain"] = Json::array();
    only(t, Pass::attribution, "empty principal chain");
  }

  // Cost against |T| * |C|: deterministic work units and wall time.
  std::vector<double> ns, visits, ns_t, times;
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    double best = 1e300;
    std::size_t work = 0;
    for (int rep = 0; rep < 3; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      audit::StreamingAudit a(s);
      for (std::size_t i = 0; i < n; ++i) {
        Json rec = base[i % base.size()];
        rec["index"] = i;
        a.feed(rec);
      }
      auto out = a.finish();
      best = std::min(best, seconds_since(t0));
      work = out.node_visits;
    }
    ns.push_back(n * static_cast<double>(s.constraints.size()));
    visits.push_back(static_cast<double>(work));
    if (n >= 1000) {
      ns_t.push_back(ns.back());
      times.push_back(best);
    }
  }
  double sv = loglog_slope(ns, visits), st = loglog_slope(ns_t, times);
  v.require(std::fabs(sv - 1.0) <= 0.05, "work-unit log-log slope " + num(sv, 3) + " in [0.95, 1.05]");
  v.require(std::fabs(st - 1.0) <= 0.25, "wall-time log-log slope " + num(st, 3) + " in [0.75, 1.25]");
  return v;
}

// ── 5. Queueing ──

// Erlang-C mean wait from the Poisson-sum form.
std::optional<double> oracle_wq(int c, double lambda, double mu) {
  double a = lambda / mu, rho = a / c;
  if (rho >= 1.0) return std::nullopt;
  double sum = 0, term = 1;
  for (int k = 0; k < c; ++k) {
    if (k > 0) term *= a / k;
    sum += term;
  }
  double top = term * a / c / (1 - rho);
  return top / (sum + top) / (c * mu - lambda);
}

Verdict queueing() {
  Verdict v;
  const int c = 2;
  const double mu = 1.0 / 360.0;
  for (double rho : {0.2, 0.42, 0.7, 0.9}) {
    double lambda = rho * c * mu;
    std::size_t arrivals = rho >= 0.9 ? 4000000 : 400000;
    double sim = escalation::simulate_mean_wait(c, lambda, mu, arrivals, 2024);
    auto analytic = escalation::erlang_c(c, lambda, mu);
    double closed = analytic.w_q.value_or(-1);
    double oracle = *oracle_wq(c, lambda, mu);
    v.require(std::fabs(closed - oracle) <= 1e-9 * oracle, "rho " + num(rho) + " closed form " + num(closed, 3) +
                                                               " matches oracle " + num(oracle, 3));
    v.require(std::fabs(sim - closed) <= 0.05 * closed, "rho " + num(rho) + " DES " + num(sim, 2) + " within 5% of " +
                                                            num(closed, 2) + " (" + std::to_string(arrivals) + " arrivals)");
  }
  double w = escalation::erlang_c(c, 0.42 * c * mu, mu).w_q.value_or(-1);
  v.require(std::fabs(w - 77.0) <= 0.02 * 77.0, "W_q at rho 0.42 = " + num(w, 2) + " s ~ 77 s");
  for (double rho : {1.0, 1.0001, 1.5, 3.0}) {
    auto q = escalation::erlang_c(c, rho * c * mu, mu, 600.0);
    v.require(!q.w_q && !q.admissible, "rho " + num(rho, 4) + " flagged divergent and inadmissible");
  }

  // Timeouts deny: no record with a timeout ruling dispatches.
  std::size_t timeouts = 0, leaked = 0;
  auto scan = [&](const std::vector<engine::TraceRecord>& trace) {
    for (const auto& rec : trace)
      for (const auto& e : rec.evaluated)
        if (e.ruling && e.ruling->kind == escalation::RulingKind::timeout) {
          ++timeouts;
          if (rec.dispatched) ++leaked;
        }
  };
  {
    auto s = spec::load_spec_file(fixture("c14_only.yaml"));
    auto sc = cli::parse_episode(slurp(fixture("scenarios/c14_silent.yaml")));
    auto tools = engine::procurement_tools();
    engine::World world;
    world.suppliers = sc.suppliers;
    auto router = escalation::EscalationRouter::from_spec(s, 1);
    router.set_policy(sc.operators);
    engine::FaultModel faults;
    engine::Clock clock;
    engine::ScriptedPlanner planner(sc.plan);
    engine::EpisodeOptions opts;
    opts.initial.fields = sc.state;
    scan(engine::run_episode(s, planner, tools, world, 8, engine::default_attribution(s, "p0"), faults, clock, router, opts)
             .trace);
  }
  {
    // Overloaded operators: one server, arrivals faster than service.
    bench::ProcurementConfig cfg;
    cfg.operators = 1;
    cfg.mean_service_s = 900;
    for (std::uint64_t seed : {1, 2, 3}) scan(bench::run_regime(cfg, bench::Regime::sarc, seed).trace);
  }
  v.require(timeouts > 0 && leaked == 0,
            std::to_string(timeouts) + " timeout rulings, " + std::to_string(leaked) + " dispatched");
  return v;
}

// ── 6. Counterexample ──

Verdict counterexample() {
  Verdict v;
  auto q = [](const bench::Rational& r) {
    return mpq_class(boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str());
  };
  std::size_t checked = 0, wrong_shaping = 0, wrong_cmdp = 0, wrong_threshold = 0;
  for (int gi = -3; gi <= 3; ++gi) {
    for (int mi = -3; mi <= 3; ++mi) {
      // G and M span six decades each: 10^-3 .. 10^3.
      auto pow10 = [](int e) {
        mpq_class x(1);
        for (int k = 0; k < std::abs(e); ++k) x *= 10;
        return e < 0 ? mpq_class(1) / x : x;
      };
      mpq_class G = pow10(gi), M = pow10(mi);
      mpq_class thr = G / (G + M);
      std::vector<mpq_class> eps = {thr, thr / 2, thr * 3 / 2, thr - mpq_class(mpz_class(1), mpz_class("1000000000000")),
                                    thr + mpq_class(mpz_class(1), mpz_class("1000000000000")), mpq_class(1, 2)};
      for (auto e : eps) {
        e.canonicalize();
        if (e <= 0 || e >= 1) continue;
        auto r = bench::counterexample_demo(bench::parse_rational(G.get_str()), bench::parse_rational(M.get_str()),
                                            bench::parse_rational(e.get_str()));
        wrong_threshold += q(r.threshold) != thr;
        wrong_shaping += r.shaping_prefers_risky != (e < thr);
        wrong_cmdp += r.cmdp_prefers_risky;
        ++checked;
      }
    }
  }
  v.require(checked >= 250, std::to_string(checked) + " grid points over six decades of G and M");
  v.require(wrong_threshold == 0, std::to_string(wrong_threshold) + " threshold mismatches against GMP");
  v.require(wrong_shaping == 0, std::to_string(wrong_shaping) + " shaping preferences off the eps < G/(G+M) rule");
  v.require(wrong_cmdp == 0, std::to_string(wrong_cmdp) + " constrained encodings preferring risky");
  auto demo = bench::counterexample_demo(100, 1000, bench::parse_rational("0.05"));
  v.require(demo.shaping_prefers_risky && !demo.cmdp_prefers_risky, "G=100 M=1000 eps=0.05: shaping risky, cmdp safe");
  return v;
}

// ── 7. Multi-agent properties ──

Verdict multiagent_properties() {
  using namespace multiagent;
  Verdict v;
  std::mt19937_64 rng(20260);
  const std::vector<std::string> universe = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  std::size_t bad_oracle = 0, bad_monotone = 0;
  for (int n = 0; n < 1000; ++n) {
    PrincipalChain chain;
    std::size_t len = 1 + rng() % 8;
    for (std::size_t i = 0; i < len; ++i) {
      AuthoritySet s;
      for (const auto& c : universe)
        if (rng() % 5 != 0) s.insert(c);
      chain.push_back({"p" + std::to_string(i), "r", s});
    }
    AuthoritySet prev;
    for (std::size_t k = 1; k <= len; ++k) {
      auto got = chain_authority(PrincipalChain(chain.begin(), chain.begin() + k));
      AuthoritySet oracle;
      for (const auto& c : universe)
        if (std::all_of(chain.begin(), chain.begin() + k, [&](const auto& p) { return p.authority.count(c) > 0; }))
          oracle.insert(c);
      bad_oracle += got != oracle;
      if (k > 1) bad_monotone += !std::includes(prev.begin(), prev.end(), got.begin(), got.end());
      prev = got;
    }
  }
  v.require(bad_oracle == 0 && bad_monotone == 0, "1000 random chains: " + std::to_string(bad_oracle) +
                                                      " oracle mismatches, " + std::to_string(bad_monotone) +
                                                      " monotonicity breaks");

  for (const char* name : {"constraint_laundering", "escalation_via_tool"}) {
    auto s = load_scenario(fixture(std::string("multiagent/") + name + ".yaml"));
    auto on = run_scenario(s, {});
    auto off = run_scenario(s, with_defense({}, s.defense, false));
    v.require(on.executed_violations == 0 && off.executed_violations >= 1,
              std::string(name) + ": " + std::to_string(on.executed_violations) + " violations defended, " +
                  std::to_string(off.executed_violations) + " with " + s.defense + " off");
  }

  std::size_t runs = 0, mismatched = 0;
  for (const char* name : {"constraint_laundering", "escalation_via_tool", "trust_boundary", "attribution_dilution"}) {
    auto s = load_scenario(fixture(std::string("multiagent/") + name + ".yaml"));
    auto out = run_scenario(s, {});
    auto groups = regroup(out.result.tree);
    for (const auto& run : out.result.runs) {
      std::string folded;
      if (groups.count(run.sub_task))
        for (const auto& r : groups.at(run.sub_task)) folded += r.dump() + "\n";
      auto tools = engine::procurement_tools();
      ++runs;
      mismatched += folded != engine::trace_to_jsonl(run.trace) || folded != engine::trace_to_jsonl(replay(run, tools));
    }
  }
  v.require(runs > 0 && mismatched == 0, "tree fold vs worker traces and replays: " + std::to_string(mismatched) + " of " +
                                             std::to_string(runs) + " differ");

  const std::vector<std::string> roots = {"supplier", "budget", "po", "contract", "invoice"};
  std::size_t rescue_bad = 0;
  for (int n = 0; n < 1000; ++n) {
    std::set<std::string> needed;
    std::string expr = "true";
    for (const auto& r : roots)
      if (rng() % 2) {
        needed.insert(r);
        expr += " && " + r + ".flag == true";
      }
    spec::ConstraintDef c;
    c.id = "c";
    c.cls = spec::ConstraintClass::hard;
    c.pred = spec::PredicateSpec{"cel", predicate::parse_predicate(expr), Json::object()};
    int depth = 1 + static_cast<int>(rng() % 7);
    std::vector<LayerPaths> layers;
    for (int k = 0; k <= depth; ++k) {
      LayerPaths l = {"action", "principal"};
      for (const auto& r : roots)
        if (rng() % 3) l.insert(r);
      layers.push_back(l);
    }
    int i = static_cast<int>(rng() % depth), j = i + static_cast<int>(rng() % (depth - i + 1));
    int brute = i;
    for (int k = i; k <= j; ++k)
      if (std::includes(layers[k].begin(), layers[k].end(), needed.begin(), needed.end())) brute = std::max(brute, k);
    rescue_bad += rescue_layer(c, i, j, layers) != brute;
  }
  v.require(rescue_bad == 0, "rescue layer vs brute force on 1000 random stacks: " + std::to_string(rescue_bad) + " differ");
  return v;
}

// ── 8. Economics ──

Verdict economics() {
  Verdict v;
  bench::CostModel m{1, 100, 5, {}};  // kappa_fp, kappa_fn, kappa_er
  auto R = bench::parse_rational;
  v.require(!bench::tradeoff_check(R("4"), R("0.04"), m), "4pp FP vs 0.04pp FN at break-even: keep (strict)");
  v.require(bench::tradeoff_check(R("4"), R("0.0400001"), m), "just above break-even: tighten");
  v.require(!bench::tradeoff_check(R("4"), R("0.0399999"), m), "just below break-even: keep");
  // Oracle: tighten iff delta_fn * kappa_fn > delta_fp * kappa_fp, in GMP.
  std::mt19937_64 rng(88);
  std::size_t bad = 0;
  for (int n = 0; n < 2000; ++n) {
    long a = 1 + rng() % 500, b = 1 + rng() % 500, kf = 1 + rng() % 50, kn = 1 + rng() % 500;
    if (n % 4 == 0) b = a * kf;  // land on equality: a*kf/kn vs b/kn
    mpq_class dfp(a, 100), dfn(b, 100 * kn);
    dfp.canonicalize();
    dfn.canonicalize();
    bool oracle = dfn * kn > dfp * kf;
    bench::CostModel mm{static_cast<long long>(kf), static_cast<long long>(kn), 5, {}};
    bad += bench::tradeoff_check(R(dfp.get_str()), R(dfn.get_str()), mm) != oracle;
  }
  v.require(bad == 0, "2000 random trades against the GMP rule: " + std::to_string(bad) + " differ");
  return v;
}

// ── 9. Determinism ──

int sh(const std::string& cmd) {
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  Verdict v;
  const std::string bin = SARC_BINARY;
  const fs::path root = fs::temp_directory_path() / "sarc_acceptance_determinism";
  fs::remove_all(root);
  const std::string orch = fixture("multiagent/specs/orchestrator.yaml");
  const std::vector<std::string> commands = {
      "validate " + fixture("procurement_approver.yaml") + " > validate.txt",
      "run " + fixture("c14_only.yaml") + " " + fixture("scenarios/c14_approve.yaml") + " --seed 5 --out episode.jsonl > run.txt",
      "run " + fixture("procurement_approver.yaml") + " " + fixture("scenarios/unconstrained.yaml") +
          " --faults 0.1,0.05 --seed 9 --out faulty.jsonl",
      "run " + orch + " " + fixture("multiagent/attribution_dilution.yaml") + " --out tree.json --composed-out composed.yaml",
      "run " + orch + " " + fixture("multiagent/trust_boundary.yaml") + " --defense-off gateway --out tree_off.json",
      "audit " + fixture("c14_only.yaml") + " episode.jsonl > audit.json",
      "audit composed.yaml tree.json > audit_tree.json",
      "bench --seeds 50 --regimes all --out bench > bench.txt",
      "sweep --grid paper --seeds 10 --out sweep > sweep.txt",
      "queue --c 2 --mu 0.002777777777777778 --lambda-grid 0.001,0.002333,0.005,0.005549,0.00555,0.006 --tau 600 "
      "--out queue.csv > queue.txt",
      "demo --G 100 --M 1000 --eps 0.05 > demo.txt",
      "econ --kfp 1 --kfn 100 --ker 5 --delta-fp 4 --delta-fn 0.04 > econ.txt",
  };
  for (int pass = 0; pass < 2; ++pass) {
    fs::path dir = root / ("run" + std::to_string(pass));
    fs::create_directories(dir);
    for (std::size_t i = 0; i < commands.size(); ++i) {
      std::string c = commands[i];
      if (c.find('>') == std::string::npos) c += " > stdout_" + std::to_string(i) + ".txt";
      int code = sh("cd '" + dir.string() + "' && '" + bin + "' " + c + " 2> /dev/null");
      if (pass == 0) v.require(code == 0, "exit " + std::to_string(code) + ": sarc " + c.substr(0, c.find(' ', 12)));
    }
  }
  std::size_t files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "run0")) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), root / "run0");
    ++files;
    if (slurp(e.path()) != slurp(root / "run1" / rel)) {
      ++differing;
      v.notes.push_back("MISS " + rel.string() + " differs");
    }
  }
  v.require(files >= 18 && differing == 0,
            std::to_string(files) + " artifacts compared across re-runs, " + std::to_string(differing) + " differ");
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*check)();
  };
  const Criterion criteria[] = {
      {"table reproduction", table_reproduction},   {"soft-window reduction", soft_window_reduction},
      {"residual sweep", residual_sweep},           {"decidable audit", decidable_audit},
      {"queueing", queueing},                       {"counterexample", counterexample},
      {"multi-agent properties", multiagent_properties}, {"economics", economics},
      {"determinism", determinism},
  };
  int failed = 0, k = 0;
  for (const auto& c : criteria) {
    ++k;
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.require(false, std::string("threw: ") + e.what());
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << k << ". " << c.name << "\n";
    for (const auto& n : v.notes) std::cout << "        " << n << "\n";
    std::cout.flush();
  }
  std::cout << (9 - failed) << "/9 criteria pass\n";
  return failed == 0 ? 0 : 1;
}

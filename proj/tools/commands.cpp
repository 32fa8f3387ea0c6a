#include "commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sarc/audit.hpp"
#include "sarc/bench.hpp"
#include "sarc/multiagent.hpp"

namespace sarc::cli {

namespace fs = std::filesystem;

namespace {

// ── Helpers ──

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("not a number list: '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

FieldMap fields_from(const Json& j) {
  FieldMap out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw std::invalid_argument("expected a mapping of fields");
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = value_from_json(it.value());
  return out;
}

std::vector<Action> plan_from(const Json& j) {
  std::vector<Action> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw std::invalid_argument("plan must be a list of actions");
  for (std::size_t i = 0; i < j.size(); ++i) {
    Json a = j[i];
    if (!a.contains("plan_index")) a["plan_index"] = static_cast<int>(i);
    out.push_back(action_from_json(a));
  }
  return out;
}

}  // namespace

// ── Episode scenarios ──

bool is_workflow_document(const std::string& yaml) {
  Json j = spec::yaml_to_json(yaml);
  return j.is_object() && j.contains("orchestrator");
}

EpisodeScenario parse_episode(const std::string& yaml) {
  Json j;
  try {
    j = spec::yaml_to_json(yaml);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
  if (!j.is_object() || !j.contains("scenario")) throw std::invalid_argument("scenario document needs a 'scenario' name");
  EpisodeScenario s;
  try {
    s.name = j["scenario"].get<std::string>();
    if (j.contains("principal")) {
      const auto& p = j["principal"];
      PrincipalEntry e{p.at("id").get<std::string>(), p.value("role", ""), {}};
      for (const auto& c : p.value("authority", Json::array())) e.authority.insert(c.get<std::string>());
      s.principal = e;
    }
    s.clock_start_s = j.value("clock_start_s", 0.0);
    s.honor_hours = j.value("honor_hours", false);
    s.block_on_escalation = j.value("block_on_escalation", true);
    s.state = fields_from(j.value("state", Json::object()));
    if (j.contains("suppliers"))
      for (auto it = j["suppliers"].begin(); it != j["suppliers"].end(); ++it) s.suppliers[it.key()] = fields_from(it.value());
    s.plan = plan_from(j.value("plan", Json::array()));
    if (j.contains("horizon")) s.horizon = j["horizon"].get<int>();
    const Json ops = j.value("operators", Json::object());
    std::string mode = ops.value("mode", "approve_all");
    if (mode == "approve_all") {
      s.operators = escalation::RulingPolicy::approve_all();
    } else if (mode == "deny_all") {
      s.operators = escalation::RulingPolicy::deny_all();
    } else if (mode == "scripted") {
      std::deque<escalation::ScriptedResponse> script;
      for (const auto& r : ops.value("script", Json::array())) {
        escalation::ScriptedResponse resp;
        resp.silent = r.value("silent", false);
        if (!resp.silent) {
          auto kind = escalation::ruling_from(r.value("ruling", "approve"));
          if (!kind || *kind == escalation::RulingKind::timeout)
            throw std::invalid_argument("scripted ruling must be approve, deny or modify");
          resp.kind = *kind;
        }
        if (r.contains("respond_after_s")) resp.respond_after_s = r["respond_after_s"].get<double>();
        if (r.contains("modified")) resp.modified = action_from_json(r["modified"]);
        if (resp.kind == escalation::RulingKind::modify && !resp.modified)
          throw std::invalid_argument("a modify ruling needs a modified action");
        script.push_back(resp);
      }
      s.operators = escalation::RulingPolicy::scripted(std::move(script));
      if (ops.contains("after_script")) {
        auto k = escalation::ruling_from(ops["after_script"].get<std::string>());
        if (!k) throw std::invalid_argument("unknown after_script ruling");
        s.operators.after_script = *k;
      }
    } else {
      throw std::invalid_argument("operators.mode must be approve_all, deny_all or scripted");
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("malformed scenario: ") + e.what());
  }
  return s;
}

namespace {

// ── Commands ──

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  spec::Specification s;
  try {
    s = spec::parse_spec(read_file(path));
  } catch (const spec::SpecError& e) {
    err << "error: " << e.what() << (e.path().empty() ? "" : " (at " + e.path() + ")") << "\n";
    return 2;
  }
  auto findings = spec::validate_spec(s, spec::full_dispatch_graph(s));
  for (const auto& f : findings)
    out << f.lint << "\t" << f.constraint_id.value_or("-") << "\t" << f.tool.value_or("-") << "\t" << f.detail << "\n";
  if (findings.empty()) out << "ok: " << s.constraints.size() << " constraints, no findings\n";
  return findings.empty() ? 0 : 1;
}

struct RunOptions {
  std::string spec_path, scenario_path, out_path, composed_out;
  std::uint64_t seed = 1;
  std::string faults = "0,0";
  std::vector<std::string> defenses_off;
};

int run_episode_cmd(const RunOptions& o, const spec::Specification& s, const std::string& text, double eps_pred,
                    double eps_exec, std::ostream& out, std::ostream& err) {
  EpisodeScenario sc;
  try {
    sc = parse_episode(text);
  } catch (const std::exception& e) {
    err << "error: invalid scenario: " << e.what() << "\n";
    return 2;
  }
  engine::ToolRegistry tools = engine::procurement_tools();
  tools.wire_declared_hooks(s);
  engine::World world;
  world.suppliers = sc.suppliers;
  auto router = escalation::EscalationRouter::from_spec(s, o.seed, sc.honor_hours);
  router.set_policy(sc.operators);
  engine::FaultModel faults(eps_pred, eps_exec, o.seed);
  engine::Clock clock(sc.clock_start_s);
  AttributionTuple attr = engine::default_attribution(s, sc.principal ? sc.principal->id : "p0");
  if (sc.principal) {
    attr.chain = {*sc.principal};
    attr.auth = chain_authority(attr.chain);
  }
  engine::EpisodeOptions opts;
  opts.initial.fields = sc.state;
  opts.config.block_on_escalation = sc.block_on_escalation;
  engine::ScriptedPlanner planner(sc.plan, "scripted");
  int horizon = sc.horizon.value_or(static_cast<int>(sc.plan.size()) * 4 + 4);
  engine::EpisodeResult r;
  try {
    r = engine::run_episode(s, planner, tools, world, horizon, attr, faults, clock, router, opts);
  } catch (const std::exception& e) {
    err << "error: scenario could not run: " << e.what() << "\n";
    return 2;
  }
  std::string jsonl = engine::trace_to_jsonl(r.trace);
  if (o.out_path.empty()) out << jsonl;
  else write_file(o.out_path, jsonl);

  std::size_t dispatched = 0, events = 0, routed = 0;
  for (const auto& rec : r.trace) {
    dispatched += rec.dispatched;
    events += rec.evaluated.size();
    for (const auto& e : rec.evaluated) routed += e.ruling.has_value();
  }
  std::ostream& summary = o.out_path.empty() ? err : out;
  summary << "scenario " << sc.name << ": " << r.trace.size() << " records, " << dispatched << " dispatched, " << events
          << " events, " << routed << " escalations";
  if (r.abort) summary << ", aborted by " << (r.abort->termination.constraint_id.empty() ? "authority" : r.abort->termination.constraint_id);
  summary << "\n";
  return 0;
}

int run_workflow_cmd(const RunOptions& o, const std::string& text, std::ostream& out, std::ostream& err) {
  multiagent::Scenario sc;
  multiagent::Defenses d;
  try {
    sc = multiagent::parse_scenario(text, fs::path(o.scenario_path).parent_path().string());
    sc.workflow.orchestrator.spec = spec::load_spec_file(o.spec_path);
    for (const auto& flag : o.defenses_off) d = multiagent::with_defense(d, flag, false);
  } catch (const std::exception& e) {
    err << "error: invalid scenario: " << e.what() << "\n";
    return 2;
  }
  multiagent::ScenarioOutcome r;
  try {
    r = multiagent::run_scenario(sc, d, o.seed);
  } catch (const std::exception& e) {
    err << "error: workflow could not run: " << e.what() << "\n";
    return 2;
  }
  std::string tree = r.result.tree.dump(2) + "\n";
  if (o.out_path.empty()) out << tree;
  else write_file(o.out_path, tree);
  if (!o.composed_out.empty()) write_file(o.composed_out, spec::serialize_spec(multiagent::composed_spec(sc.workflow)));
  std::ostream& summary = o.out_path.empty() ? err : out;
  summary << "workflow " << sc.name << ": " << multiagent::tree_records(r.result.tree).size() << " records, depth "
          << multiagent::dispatch_depth(r.result.tree) << ", " << r.executed_violations << " executed violations, "
          << r.attribution_breaks << " attribution breaks, audit " << (r.audit.holds ? "holds" : "fails");
  if (r.result.abort_reason) summary << ", aborted: " << *r.result.abort_reason;
  summary << "\n";
  return 0;
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  auto eps = parse_list(o.faults);
  if (eps.size() != 2 || eps[0] < 0 || eps[0] > 1 || eps[1] < 0 || eps[1] > 1)
    throw UsageError("--faults takes eps_pred,eps_exec in [0,1]");
  std::string text = read_file(o.scenario_path);
  bool workflow = false;
  try {
    workflow = is_workflow_document(text);
  } catch (const std::exception& e) {
    err << "error: invalid scenario: " << e.what() << "\n";
    return 2;
  }
  if (workflow) return run_workflow_cmd(o, text, out, err);
  spec::Specification s;
  try {
    s = spec::parse_spec(read_file(o.spec_path));
  } catch (const spec::SpecError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return run_episode_cmd(o, s, text, eps[0], eps[1], out, err);
}

int cmd_audit(const std::string& spec_path, const std::string& trace_path, bool timing, std::ostream& out,
              std::ostream& err) {
  spec::Specification s;
  try {
    s = spec::parse_spec(read_file(spec_path));
  } catch (const spec::SpecError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  std::string text = read_file(trace_path);
  audit::AuditReport rep;
  try {
    auto first = text.find_first_not_of(" \t\r\n");
    Json tree;
    bool is_tree = false;
    if (first != std::string::npos && text[first] == '{') {
      try {
        tree = Json::parse(text);
        is_tree = tree.is_object() && tree.contains("children");
      } catch (const Json::parse_error&) {
        is_tree = false;  // several lines: a flat trace
      }
    }
    rep = is_tree ? audit::check_tree(s, tree) : audit::check_correspondence(s, engine::parse_jsonl(text));
  } catch (const audit::SchemaMismatch& e) {
    err << "error: schema mismatch: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: unreadable trace: " << e.what() << "\n";
    return 2;
  }
  if (!timing) rep.elapsed_ms = 0;
  out << rep.to_json().dump(2) << "\n";
  return rep.holds ? 0 : 1;
}

std::vector<bench::Regime> parse_regimes(const std::string& text) {
  if (text == "all") return bench::all_regimes();
  std::vector<bench::Regime> out;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) {
    auto r = bench::regime_from(cell);
    if (!r) throw UsageError("unknown regime '" + cell + "'");
    out.push_back(*r);
  }
  if (out.empty()) throw UsageError("no regimes selected");
  return out;
}

std::vector<std::pair<double, double>> parse_grid(const std::string& text) {
  if (text == "paper") return bench::reference_grid();
  // "p:e;p:e"
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ';');) {
    auto colon = cell.find(':');
    if (colon == std::string::npos) throw UsageError("grid cells are eps_pred:eps_exec separated by ';'");
    auto p = parse_list(cell.substr(0, colon)), e = parse_list(cell.substr(colon + 1));
    out.emplace_back(p.at(0), e.at(0));
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

std::string sweep_report(const std::vector<bench::SweepCell>& cells) {
  auto reg = bench::scaling_regression(cells);
  return "slope " + fmt(reg.slope, 3) + ", intercept " + fmt(reg.intercept, 3) + " +/- " + fmt(reg.intercept_ci95, 3) + "\n";
}

int cmd_bench(int seeds, const std::string& regimes, const std::string& out_dir, unsigned threads, bool sweep,
              std::ostream& out) {
  if (seeds < 2) throw UsageError("--seeds must be at least 2");
  bench::ProcurementConfig cfg;
  cfg.seeds = seeds;
  cfg.threads = threads;
  auto rs = parse_regimes(regimes);
  auto seed_list = bench::default_seeds(seeds);
  auto result = bench::run_benchmark(cfg, rs, seed_list);
  fs::path dir(out_dir);
  write_file(dir / "bench_summary.json", bench::summary_json(result));
  write_file(dir / "bench_seeds.csv", bench::seeds_csv(result));
  std::vector<double> eps_grid;
  for (int i = 0; i <= 20; ++i) eps_grid.push_back(i * 0.005);
  write_file(dir / "curves_epsilon.csv", bench::epsilon_curve_csv(eps_grid));
  std::vector<double> rho;
  for (int i = 1; i <= 24; ++i) rho.push_back(i * 0.05);
  write_file(dir / "curves_queue.csv", bench::queue_curve_csv({1, 2, 3, 4}, rho, 1.0 / cfg.mean_service_s, cfg.hard_window_s));
  write_file(dir / "curves_latency.csv", bench::latency_curve_csv(bench::reference_latency_points()));

  out << "regime           hard_executed     soft_overages     no_review         escalations       latency_ms\n";
  for (auto r : rs) {
    const auto& m = result.summary.at(r);
    std::string line = bench::to_string(r);
    line.resize(17, ' ');
    for (const char* k : {"hard_executed", "soft_overages", "suppliers_no_review", "escalations", "latency_per_step_ms"}) {
      std::string cell = fmt(m.at(k).mean, 2) + " +/- " + fmt(m.at(k).ci95, 2);
      cell.resize(18, ' ');
      line += cell;
    }
    out << line << "\n";
  }
  if (result.traces_audited)
    out << "audit: " << result.traces_holding << "/" << result.traces_audited << " sarc traces hold, "
        << result.discrepancies << " discrepancies\n";
  if (sweep) {
    auto cells = bench::residual_sweep(cfg, bench::reference_grid(), seed_list);
    write_file(dir / "sweep.csv", bench::sweep_csv(cells));
    out << "sweep: " << sweep_report(cells);
  }
  out << "wrote " << out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& grid, int seeds, const std::string& out_dir, unsigned threads, std::ostream& out) {
  if (seeds < 2) throw UsageError("--seeds must be at least 2");
  bench::ProcurementConfig cfg;
  cfg.threads = threads;
  auto cells = bench::residual_sweep(cfg, parse_grid(grid), bench::default_seeds(seeds));
  std::string csv = bench::sweep_csv(cells);
  write_file(fs::path(out_dir) / "sweep.csv", csv);
  out << csv;
  if (cells.size() >= 3) out << sweep_report(cells);
  return 0;
}

int cmd_queue(int c, double mu, const std::string& grid, double tau, const std::string& out_path, std::ostream& out) {
  if (c < 1 || !(mu > 0) || !(tau > 0)) throw UsageError("--c must be >= 1, --mu and --tau positive");
  auto lambdas = parse_list(grid);
  for (double l : lambdas)
    if (!(l > 0)) throw UsageError("--lambda-grid values must be positive");
  std::string csv = escalation::queue_csv(escalation::admissible_region(c, mu, lambdas, tau));
  if (!out_path.empty()) write_file(out_path, csv);
  out << csv;
  return 0;
}

int cmd_demo(const std::string& G, const std::string& M, const std::string& eps, std::ostream& out) {
  bench::Counterexample r;
  try {
    r = bench::counterexample_demo(bench::parse_rational(G), bench::parse_rational(M), bench::parse_rational(eps));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  out << "threshold G/(G+M): " << bench::decimal_string(r.threshold, 6) << "\n"
      << "risky expected return: " << bench::decimal_string(r.risky_return, 6) << "\n"
      << "shaping: " << (r.shaping_prefers_risky ? "risky" : "safe") << ", cmdp: "
      << (r.cmdp_prefers_risky ? "risky" : "safe") << "\n";
  return 0;
}

int cmd_econ(const std::string& kfp, const std::string& kfn, const std::string& ker, const std::string& curves,
             const std::string& dfp, const std::string& dfn, std::ostream& out) {
  bench::CostModel m;
  try {
    m.kappa_fp = bench::parse_rational(kfp);
    m.kappa_fn = bench::parse_rational(kfn);
    m.kappa_er = bench::parse_rational(ker);
    if (!curves.empty()) m.curve = bench::parse_cost_curve(read_file(curves));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!m.curve.empty()) {
    out << "theta,p_fp,p_fn,p_esc,expected_cost\n";
    for (const auto& p : m.curve)
      out << bench::decimal_string(p.theta) << ',' << bench::decimal_string(p.p_fp) << ','
          << bench::decimal_string(p.p_fn) << ',' << bench::decimal_string(p.p_esc) << ','
          << bench::decimal_string(bench::expected_cost(p.theta, m)) << "\n";
    out << "optimal theta: " << bench::decimal_string(*bench::optimal_theta(m)) << "\n";
  }
  if (!dfp.empty() || !dfn.empty()) {
    if (dfp.empty() || dfn.empty()) throw UsageError("--delta-fp and --delta-fn go together");
    bench::Rational a, b;
    try {
      a = bench::parse_rational(dfp);
      b = bench::parse_rational(dfn);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    out << "tradeoff: " << (bench::tradeoff_check(a, b, m) ? "tighten" : "keep") << " (avoided FN cost "
        << bench::decimal_string(b * m.kappa_fn) << " vs added FP cost " << bench::decimal_string(a * m.kappa_fp) << ")\n";
  }
  return 0;
}

}  // namespace

// ── Entry point ──

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Specification-driven runtime governance for agents", "sarc"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string v_spec;
  auto* validate = app.add_subcommand("validate", "Parse a specification and run the lints");
  validate->add_option("spec", v_spec, "Specification file (YAML or JSON)")->required();

  RunOptions ro;
  auto* runc = app.add_subcommand("run", "Run a scenario under a specification and write its trace");
  runc->add_option("spec", ro.spec_path, "Specification file; for workflows, the orchestrator's")->required();
  runc->add_option("scenario", ro.scenario_path, "Episode or workflow scenario file")->required();
  runc->add_option("--seed", ro.seed, "Seed for operators and faults")->default_val(1);
  runc->add_option("--faults", ro.faults, "eps_pred,eps_exec fault rates")->default_val("0,0");
  runc->add_option("--out", ro.out_path, "Trace output (JSONL, or a JSON tree for workflows); stdout if absent");
  runc->add_option("--defense-off", ro.defenses_off,
                   "Workflow defense to disable: propagate_constraints, intersect_authority, gateway, "
                   "preserve_attribution");
  runc->add_option("--composed-out", ro.composed_out, "Write the composed workflow specification here");

  std::string a_spec, a_trace;
  bool a_timing = false;
  auto* auditc = app.add_subcommand("audit", "Check a trace against a specification");
  auditc->add_option("spec", a_spec, "Specification file")->required();
  auditc->add_option("trace", a_trace, "Trace file: JSONL records or a JSON trace tree")->required();
  auditc->add_flag("--timing", a_timing, "Report elapsed time in the JSON report");

  int b_seeds = 50;
  std::string b_regimes = "all", b_out = "bench_out";
  unsigned b_threads = 0;
  bool b_skip_sweep = false;
  auto* benchc = app.add_subcommand("bench", "Run the synthetic procurement benchmark");
  benchc->add_option("--seeds", b_seeds, "Number of seeds (1..N)")->default_val(50);
  benchc->add_option("--regimes", b_regimes, "all, or a comma list of posthoc_audit, output_filter, workflow_rules, "
                                             "pac_only, sarc")
      ->default_val("all");
  benchc->add_option("--out", b_out, "Output directory")->default_val("bench_out");
  benchc->add_option("--threads", b_threads, "Worker threads; 0 uses every core")->default_val(0);
  benchc->add_flag("--skip-sweep", b_skip_sweep, "Do not run the residual sweep");

  std::string s_grid = "paper", s_out = "bench_out";
  int s_seeds = 50;
  unsigned s_threads = 0;
  auto* sweepc = app.add_subcommand("sweep", "Run the predicate-noise and enforcement-failure sweep");
  sweepc->add_option("--grid", s_grid, "paper for the reference grid, or cells eps_pred:eps_exec separated by ';'")->default_val("paper");
  sweepc->add_option("--seeds", s_seeds, "Number of seeds (1..N)")->default_val(50);
  sweepc->add_option("--out", s_out, "Output directory")->default_val("bench_out");
  sweepc->add_option("--threads", s_threads, "Worker threads; 0 uses every core")->default_val(0);

  int q_c = 2;
  double q_mu = 1.0 / 360.0, q_tau = 600;
  std::string q_grid, q_out;
  auto* queuec = app.add_subcommand("queue", "Erlang-C waits and admissibility over arrival rates");
  queuec->add_option("--c", q_c, "Operators")->default_val(2);
  queuec->add_option("--mu", q_mu, "Service rate per operator, 1/s")->default_val(1.0 / 360.0);
  queuec->add_option("--lambda-grid", q_grid, "Comma list of arrival rates, 1/s")->required();
  queuec->add_option("--tau", q_tau, "Reversibility window, s")->default_val(600);
  queuec->add_option("--out", q_out, "Also write the CSV here");

  std::string d_G, d_M, d_eps;
  auto* democ = app.add_subcommand("demo", "Finite penalty versus hard constraint on one risky choice");
  democ->add_option("--G", d_G, "Gain of the risky action (exact decimal or p/q)")->required();
  democ->add_option("--M", d_M, "Penalty on violation")->required();
  democ->add_option("--eps", d_eps, "Violation probability, in (0,1)")->required();

  std::string e_kfp = "1", e_kfn = "100", e_ker = "5", e_curves, e_dfp, e_dfn;
  auto* econc = app.add_subcommand("econ", "Expected cost of operating points");
  econc->add_option("--kfp", e_kfp, "Cost of a false positive")->default_val("1");
  econc->add_option("--kfn", e_kfn, "Cost of a false negative")->default_val("100");
  econc->add_option("--ker", e_ker, "Cost of an escalation")->default_val("5");
  econc->add_option("--curves", e_curves, "CSV of theta,p_fp,p_fn,p_esc rows");
  econc->add_option("--delta-fp", e_dfp, "Added false-positive rate of a tighter threshold");
  econc->add_option("--delta-fn", e_dfn, "Removed false-negative rate of a tighter threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(v_spec, out, err);
    if (*runc) return cmd_run(ro, out, err);
    if (*auditc) return cmd_audit(a_spec, a_trace, a_timing, out, err);
    if (*benchc) return cmd_bench(b_seeds, b_regimes, b_out, b_threads, !b_skip_sweep, out);
    if (*sweepc) return cmd_sweep(s_grid, s_seeds, s_out, s_threads, out);
    if (*queuec) return cmd_queue(q_c, q_mu, q_grid, q_tau, q_out, out);
    if (*democ) return cmd_demo(d_G, d_M, d_eps, out);
    if (*econc) return cmd_econ(e_kfp, e_kfn, e_ker, e_curves, e_dfp, e_dfn, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace sarc::cli

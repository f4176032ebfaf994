#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bidplan/experiment.hpp"

using namespace bidplan;

namespace {

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// Writes to `path`, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  write_text_file(path, text);
}

template <class Fn>
void emit_stream(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ostringstream out;
  fn(out);
  write_text_file(path, out.str());
}

double parse_time_arg(const std::string& text) {
  if (auto t = parse_timestamp(text)) return *t;
  try {
    std::size_t used = 0;
    const double h = std::stod(text, &used);
    if (used == text.size()) return h;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("time", "expected an ISO timestamp or hours since the epoch: " + text);
}

const CLI::IsMember kMechanisms({"first", "second", "first_price", "second_price"});

std::optional<Mechanism> mechanism_arg(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return parse_mechanism(text);
}

struct EstimateArgs {
  std::string log, map, out, format = "auto";
  std::vector<std::string> types, window;
  EstimationOptions options;
  double max_bid = 0.0, bandwidth = 0.0, malformed = 0.01;
  int threads = 1;
};

void run_estimate(const EstimateArgs& a) {
  ColumnMapping mapping = a.map.empty() ? ColumnMapping{} : ColumnMapping::parse(a.map);
  const LogFormat format = a.format == "csv" ? LogFormat::Csv : a.format == "jsonl" ? LogFormat::JsonLines : LogFormat::Auto;
  auto log = parse_impressions(resolve_data_path(a.log, {}), mapping, format, a.malformed);
  warn(log.warnings);
  auto records = std::move(log.records);
  if (!a.window.empty()) records = filter_window(records, parse_time_arg(a.window[0]), parse_time_arg(a.window[1]));
  if (records.empty()) throw IngestError("no impressions left to estimate from");
  std::vector<std::string> types = a.types;
  if (types.empty()) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.item_type);
    types.assign(seen.begin(), seen.end());
  }
  EstimationOptions opts = a.options;
  if (a.max_bid > 0.0) opts.max_bid = a.max_bid;
  if (a.bandwidth > 0.0) opts.bandwidth = a.bandwidth;
  const auto curves = estimate_curves(records, types, opts, a.threads);
  warn(curves.warnings);
  emit(a.out, curves_to_json(curves));
  std::cerr << "estimated " << types.size() << " curve(s) from " << records.size() << " impressions\n";
}

struct ConvexifyArgs {
  std::string curves, out, mechanism = "second";
  TabulationOptions tab{256, 32};
};

void run_convexify(const ConvexifyArgs& a) {
  const auto curves = curves_from_json(read_text_file(resolve_data_path(a.curves, {})));
  const auto set = tabulate_set(curves, parse_mechanism(a.mechanism), a.tab);
  double worst = 0.0;
  for (const auto& per_type : set.tables)
    for (const auto& t : per_type) worst = std::max(worst, t.majorant_deviation);
  emit(a.out, tables_to_json(set));
  std::cerr << "tabulated " << set.labels.size() << " type(s); largest majorant lift " << worst << '\n';
}

struct PlanArgs {
  std::string contracts, curves, tables, out, mechanism, mode = "strict";
  int K = 0, grid_segments = 8;
  double origin = 0.0;
  std::optional<double> delta, epsilon;
  TabulationOptions tab{256, 32};
};

void run_plan(const PlanArgs& a) {
  const auto cs = contracts_from_json(read_text_file(resolve_data_path(a.contracts, {})));
  const auto loaded = curves_from_json(read_text_file(resolve_data_path(a.curves, {})));
  std::vector<SupplyCurve> curves;
  for (const auto& label : cs.item_types) curves.push_back(loaded.curves[static_cast<std::size_t>(loaded.index_of(label))]);

  RiskConfig risk{a.delta, a.epsilon};
  risk.validate();
  const auto contracts = inflate_demand(cs.contracts, risk);
  const int K = a.K > 0 ? a.K : static_cast<int>(contracts.size()) + a.grid_segments;
  const auto grid = build_grid(contracts, K);

  AcquisitionTables tables;
  if (!a.tables.empty()) {
    const auto set = tables_from_json(read_text_file(resolve_data_path(a.tables, {})));
    if (!a.mechanism.empty() && parse_mechanism(a.mechanism) != set.mechanism)
      throw CLI::ValidationError("--mechanism", "tables were built for " + std::string(to_string(set.mechanism)) + " price");
    TableSet ordered;
    ordered.mechanism = set.mechanism;
    ordered.period = set.period;
    for (const auto& label : cs.item_types) {
      const auto it = std::find(set.labels.begin(), set.labels.end(), label);
      if (it == set.labels.end()) throw FormatError("tables lack item type '" + label + "'");
      ordered.labels.push_back(label);
      ordered.tables.push_back(set.tables[static_cast<std::size_t>(it - set.labels.begin())]);
    }
    tables = ordered.for_grid(grid, a.origin);
  } else {
    const Mechanism m = a.mechanism.empty() ? Mechanism::SecondPrice : parse_mechanism(a.mechanism);
    tables = tabulate_for_grid(curves, m, grid, a.tab, a.origin);
  }

  PlannerOptions opts;
  opts.mode = parse_plan_mode(a.mode);
  const auto plan = solve_plan(contracts, tables, grid, opts, curves, a.origin);
  if (plan.status == PlanStatus::Infeasible) {
    if (plan.adequacy) std::cerr << plan.adequacy->summary << '\n';
    throw PlanError("no plan meets every contract; retry with --mode best_effort");
  }
  const auto bids = reconstruct_paths(plan, curves, a.origin);
  warn(bids.warnings);
  emit(a.out, plan_to_json(plan, bids, cs.item_types));
  std::cerr << "plan " << to_string(plan.status) << ", expected spend " << plan.objective << '\n';
}

struct SimulateArgs {
  std::string scenario, out, runs, events, mechanism, market, planning, curves;
  std::optional<int> reps, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> update_hours, delta, epsilon, sigma;
};

void run_simulate(const SimulateArgs& a) {
  Scenario s = load_scenario(a.scenario);
  if (auto m = mechanism_arg(a.mechanism)) s.market_mechanism = s.planning_mechanism = *m;
  if (auto m = mechanism_arg(a.market)) s.market_mechanism = *m;
  if (auto m = mechanism_arg(a.planning)) s.planning_mechanism = *m;
  s.sim.market = s.market_mechanism;
  if (a.reps) s.monte_carlo.replications = *a.reps;
  if (a.seed) s.monte_carlo.master_seed = *a.seed;
  if (a.threads) s.monte_carlo.threads = *a.threads;
  if (a.update_hours) s.controller.update_hours = *a.update_hours;
  if (a.sigma) s.sim.sigma_bid = *a.sigma;
  if (!a.curves.empty()) s.curves_file = std::filesystem::absolute(resolve_data_path(a.curves, {}));
  if (a.delta || a.epsilon) {
    s.controller.risk = RiskConfig{a.delta, a.epsilon};
    s.controller.risk.validate();
    s.delta_sweep.clear();
  }
  const int threads = s.monte_carlo.threads;
  const Experiment e(std::move(s), threads);
  warn(e.curves().warnings);
  const auto report = e.run_sweep(e.scenario().monte_carlo);
  emit(a.out, report_to_json(report));
  if (!a.runs.empty()) emit_stream(a.runs, [&](std::ostream& o) { write_runs_csv(o, report); });
  if (!a.events.empty()) {
    SimSetup setup = e.setup(report.points.front().delta, std::nullopt);
    if (e.scenario().delta_sweep.empty()) setup.controller.risk = e.scenario().controller.risk;
    setup.sim.record_events = true;
    const auto result = run_replication(setup, replication_seeds(report.master_seed, 0));
    emit_stream(a.events, [&](std::ostream& o) { write_events_csv(o, result, e.scenario().item_types); });
  }
  for (const auto& p : report.points)
    std::cerr << p.label << ": mean C_avg " << p.summary.mean_c_avg << " over " << p.summary.replications
              << " replications (" << p.summary.failures << " failed)\n";
}

struct ReportArgs {
  std::string summary, sweep = "-", runs;
};

void run_report(const ReportArgs& a) {
  const auto report = report_from_json(read_text_file(resolve_data_path(a.summary, {})));
  emit_stream(a.sweep, [&](std::ostream& o) { write_sweep_csv(o, report); });
  if (!a.runs.empty()) emit_stream(a.runs, [&](std::ostream& o) { write_runs_csv(o, report); });
}

struct SynthArgs {
  std::string scenario, out;
  std::optional<double> hours;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  const Scenario s = load_scenario(a.scenario);
  if (!s.synthetic) throw FormatError("scenario has no synthetic market");
  SyntheticSpec spec = *s.synthetic;
  if (a.hours) spec.hours = *a.hours;
  if (a.seed) spec.seed = *a.seed;
  const auto records = generate_log(spec);
  emit_stream(a.out, [&](std::ostream& o) { write_csv_log(o, records); });
  std::cerr << "wrote " << records.size() << " impressions\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bid planning for guaranteed-delivery contracts in real-time bidding markets"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate supply curves from an impression log");
  e->add_option("log", est.log, "Impression log (CSV with header or JSON lines)")->required();
  e->add_option("-o,--out", est.out, "Curve JSON output (default stdout)");
  e->add_option("-t,--types", est.types, "Item types to estimate (default: every type in the log)")->delimiter(',');
  e->add_option("--map", est.map, "Column mapping such as 'user_tag=item_type,paying_price=price'");
  e->add_option("--window", est.window, "Keep impressions in [FROM, TO)")->expected(2);
  e->add_option("--format", est.format, "Log format")->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  e->add_option("--bid-points", est.options.bid_points, "Bid grid size")->check(CLI::Range(2, 100000));
  e->add_option("--grid-scale", est.options.grid_scale, "Grid top as a multiple of the largest price")
      ->check(CLI::PositiveNumber);
  e->add_option("--max-bid", est.max_bid, "Truncate the curves at this bid")->check(CLI::PositiveNumber);
  e->add_option("--bandwidth", est.bandwidth, "Kernel bandwidth (default: normal reference rule)")
      ->check(CLI::PositiveNumber);
  e->add_option("--knot-step", est.options.knot_step, "Hours between time knots")->check(CLI::PositiveNumber);
  e->add_option("--max-malformed", est.malformed, "Abort when more than this fraction of rows is malformed")
      ->check(CLI::Range(0.0, 1.0));
  e->add_option("--threads", est.threads, "Worker threads")->check(CLI::PositiveNumber);
  e->callback([&] { run_estimate(est); });

  ConvexifyArgs cvx;
  auto* c = app.add_subcommand("convexify", "Tabulate convex acquisition costs from supply curves");
  c->add_option("curves", cvx.curves, "Curve JSON")->required();
  c->add_option("-o,--out", cvx.out, "Table JSON output (default stdout)");
  c->add_option("-m,--mechanism", cvx.mechanism, "Auction mechanism (first|second)")->check(kMechanisms);
  c->add_option("--rate-points", cvx.tab.rate_points, "Samples per table")->check(CLI::Range(3, 2048));
  c->add_option("--segments", cvx.tab.segments, "Affine pieces kept per table")->check(CLI::PositiveNumber);
  c->callback([&] { run_convexify(cvx); });

  PlanArgs pl;
  auto* p = app.add_subcommand("plan", "Solve the bid plan for a set of contracts");
  p->add_option("contracts", pl.contracts, "Contracts or scenario JSON")->required();
  p->add_option("--curves", pl.curves, "Curve JSON (used for bid reconstruction)")->required();
  p->add_option("--tables", pl.tables, "Table JSON from convexify (default: tabulate the curves)");
  p->add_option("-o,--out", pl.out, "Plan JSON output (default stdout)");
  p->add_option("-m,--mechanism", pl.mechanism, "Auction mechanism (first|second)")->check(kMechanisms);
  p->add_option("-K,--grid-k", pl.K, "Time intervals (default: contracts + 8)")->check(CLI::PositiveNumber);
  p->add_option("--mode", pl.mode, "strict or best_effort");
  p->add_option("--origin", pl.origin, "Curve time (hour of day) at the start of the plan");
  p->add_option("--rate-points", pl.tab.rate_points, "Samples per table")->check(CLI::Range(3, 2048));
  p->add_option("--segments", pl.tab.segments, "Affine pieces kept per table")->check(CLI::PositiveNumber);
  auto* pd = p->add_option("--delta", pl.delta, "Uniform supply inflation")->check(CLI::NonNegativeNumber);
  p->add_option("--epsilon", pl.epsilon, "Poisson shortfall tolerance")->check(CLI::Range(0.0, 1.0))->excludes(pd);
  p->callback([&] { run_plan(pl); });

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the Monte Carlo simulation of a scenario");
  s->add_option("scenario", sim.scenario, "Scenario JSON")->required();
  s->add_option("-o,--out", sim.out, "Summary JSON output (default stdout)");
  s->add_option("--curves", sim.curves, "Curve JSON to plan with (default: the scenario's curves)");
  s->add_option("--runs", sim.runs, "Per-replication CSV");
  s->add_option("--events", sim.events, "Event log CSV of the first replication");
  s->add_option("--reps", sim.reps, "Replications per configuration")->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);
  s->add_option("--update-hours", sim.update_hours, "Re-planning interval; 0 re-plans only on fulfillment")
      ->check(CLI::NonNegativeNumber);
  auto* sd = s->add_option("--delta", sim.delta, "Single inflation level instead of the scenario sweep")
                 ->check(CLI::NonNegativeNumber);
  s->add_option("--epsilon", sim.epsilon, "Poisson shortfall tolerance instead of the sweep")
      ->check(CLI::Range(0.0, 1.0))
      ->excludes(sd);
  s->add_option("--sigma", sim.sigma, "Standard deviation of bid noise")->check(CLI::NonNegativeNumber);
  s->add_option("-m,--mechanism", sim.mechanism, "Market and planning mechanism")->check(kMechanisms);
  s->add_option("--market-mechanism", sim.market, "Auction mechanism of the simulated market")->check(kMechanisms);
  s->add_option("--planning-mechanism", sim.planning, "Mechanism assumed by the planner")->check(kMechanisms);
  s->callback([&] { run_simulate(sim); });

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Turn a simulation summary into CSV tables");
  r->add_option("summary", rep.summary, "Summary JSON from simulate")->required();
  r->add_option("--sweep", rep.sweep, "Fulfillment and cost by inflation level (default stdout)");
  r->add_option("--runs", rep.runs, "Per-replication CSV");
  r->callback([&] { run_report(rep); });

  SynthArgs syn;
  auto* y = app.add_subcommand("synth", "Write the synthetic market of a scenario as a CSV log");
  y->add_option("scenario", syn.scenario, "Scenario JSON with a synthetic market")->required();
  y->add_option("-o,--out", syn.out, "CSV output (default stdout)");
  y->add_option("--hours", syn.hours, "Override the duration")->check(CLI::PositiveNumber);
  y->add_option("--seed", syn.seed, "Override the seed");
  y->callback([&] { run_synth(syn); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}

#include "bidplan/experiment.hpp"

#include <cmath>
#include <cstdio>

namespace bidplan {

Experiment::Experiment(Scenario scenario, int threads) : scenario_(std::move(scenario)) {
  records_ = load_market_records(scenario_);
  start_ = simulation_start(scenario_, records_);
  curves_ = scenario_.curves_file ? scenario_curves(scenario_, records_)
                                  : estimate_curves(records_, scenario_.item_types, scenario_.estimation, threads);
  double hour = std::fmod(start_, 24.0);
  if (hour < 0.0) hour += 24.0;
  sampler_ = std::make_unique<MarketSampler>(build_sampler(records_, scenario_.item_types, hour));
}

const TableCache& Experiment::tables(Mechanism planning) const {
  auto& slot = planning == Mechanism::FirstPrice ? first_ : second_;
  if (!slot) slot = std::make_unique<TableCache>(curves_.curves, planning, scenario_.tabulation, scenario_.lattice_hours);
  return *slot;
}

SimSetup Experiment::setup(std::optional<double> delta, std::optional<double> update_hours,
                           std::optional<Mechanism> planning) const {
  SimSetup s;
  s.sampler = sampler_.get();
  s.tables = &tables(planning.value_or(scenario_.planning_mechanism));
  s.contracts = scenario_.contracts;
  s.controller = scenario_.controller;
  if (delta) s.controller.risk = RiskConfig{*delta, std::nullopt};
  if (update_hours) s.controller.update_hours = *update_hours;
  s.sim = scenario_.sim;
  return s;
}

SweepPoint Experiment::run_point(const std::string& label, std::optional<double> delta,
                                 std::optional<double> update_hours, const MonteCarloOptions& options,
                                 std::optional<Mechanism> planning) const {
  const SimSetup s = setup(delta, update_hours, planning);
  SweepPoint p;
  p.label = label;
  p.delta = s.controller.risk.delta.value_or(0.0);
  p.update_hours = s.controller.update_hours;
  p.summary = monte_carlo(s, options);
  return p;
}

SimulationReport Experiment::run_sweep(const MonteCarloOptions& options) const {
  SimulationReport report;
  report.scenario = scenario_.name;
  report.master_seed = options.master_seed;
  if (scenario_.delta_sweep.empty()) {
    const auto& risk = scenario_.controller.risk;
    std::string label = "base";
    if (risk.epsilon) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "epsilon=%g", *risk.epsilon);
      label = buf;
    }
    report.points.push_back(run_point(label, std::nullopt, std::nullopt, options));
    return report;
  }
  for (double d : scenario_.delta_sweep) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "delta=%g", d);
    report.points.push_back(run_point(buf, d, std::nullopt, options));
  }
  return report;
}

}  // namespace bidplan

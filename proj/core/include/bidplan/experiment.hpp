#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bidplan/io.hpp"

namespace bidplan {

/// A scenario made ready to simulate: the market records and the sampler
/// replaying them, the supply curves, and planning tables memoized across
/// replications.
class Experiment {
 public:
  explicit Experiment(Scenario scenario, int threads = 1);

  const Scenario& scenario() const noexcept { return scenario_; }
  const std::vector<ImpressionRecord>& records() const noexcept { return records_; }
  const CurveSet& curves() const noexcept { return curves_; }
  const MarketSampler& sampler() const noexcept { return *sampler_; }
  /// Simulation start in hours since the epoch.
  double start() const noexcept { return start_; }
  /// Hour of day of the simulation start; curve time = this + simulation time.
  double start_hour() const noexcept { return sampler_->start_hour(); }

  /// Tables for a planning mechanism, built on first use.
  const TableCache& tables(Mechanism planning) const;

  /// Setup with the scenario's controller settings and the given overrides.
  SimSetup setup(std::optional<double> delta = std::nullopt, std::optional<double> update_hours = std::nullopt,
                 std::optional<Mechanism> planning = std::nullopt) const;

  SweepPoint run_point(const std::string& label, std::optional<double> delta, std::optional<double> update_hours,
                       const MonteCarloOptions& options, std::optional<Mechanism> planning = std::nullopt) const;

  /// One point per sweep delta (or the scenario's risk setting when the sweep
  /// is empty), all with the same master seed.
  SimulationReport run_sweep(const MonteCarloOptions& options) const;

 private:
  Scenario scenario_;
  std::vector<ImpressionRecord> records_;
  double start_ = 0.0;
  CurveSet curves_;
  std::unique_ptr<MarketSampler> sampler_;
  mutable std::unique_ptr<TableCache> first_;
  mutable std::unique_ptr<TableCache> second_;
};

}  // namespace bidplan

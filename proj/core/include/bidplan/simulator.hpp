#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bidplan/market_model.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/risk.hpp"

namespace bidplan {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Empirical inter-arrival times (hours) and prices observed in one hour of
/// the day for one item type.
struct HourBucket {
  std::vector<double> inter_arrivals;
  std::vector<double> prices;
};

/// Per (type, hour-of-day) datasets sampled uniformly with replacement. Hour h
/// of simulation time t is floor(start_hour + t) mod 24.
class MarketSampler {
 public:
  /// Throws ModelError when a bucket is empty or holds invalid values.
  MarketSampler(std::vector<std::array<HourBucket, 24>> buckets, double start_hour = 0.0);

  /// Picks the hour for time t given U ~ Uniform(0, 1): floor(t) when
  /// t - floor(t) <= U, else floor(t) + 1 (both mod 24).
  int hour_for(double t, double u) const;

  /// (inter-arrival, price) for type j at simulation time t.
  std::pair<double, double> sample(double t, int j, Rng& rng) const;

  int num_types() const noexcept { return static_cast<int>(buckets_.size()); }
  double start_hour() const noexcept { return start_hour_; }
  const HourBucket& bucket(int j, int hour) const { return buckets_[static_cast<std::size_t>(j)][static_cast<std::size_t>(hour)]; }

 private:
  std::vector<std::array<HourBucket, 24>> buckets_;
  double start_hour_;
};

inline std::pair<double, double> sample_event(const MarketSampler& s, double t, int j, Rng& rng) {
  return s.sample(t, j, rng);
}

struct ControllerConfig {
  /// Fixed re-planning interval in hours; 0 re-plans only on fulfillment.
  double update_hours = 0.0;
  RiskConfig risk;
  /// Uniform segments added to the deadlines: K = N + grid_segments.
  int grid_segments = 8;
  PlannerOptions planner;
};

struct ReplanRecord {
  double time = 0.0;
  std::string reason;  // "start", "fulfilled", "scheduled"
  PlanStatus status = PlanStatus::Infeasible;
  bool fell_back = false;  // Strict failed, BestEffort used
  int active_contracts = 0;
  double planned_spend = 0.0;
};

struct ContractState {
  Contract contract;  // original quantity and absolute deadline
  double acquired = 0.0;
  bool retired = false;
};

/// Receding-horizon bidder. Holds the current bid plan and re-plans on the
/// residual contracts (C_i - c_i)(1 + delta) with deadlines T_i - t.
class Controller {
 public:
  /// `tables` supplies planning-side costs (and its mechanism); `curve_offset`
  /// maps simulation time to curve time.
  Controller(const TableCache& tables, ControllerConfig config, double curve_offset, std::uint64_t seed);

  void replan(double t, std::span<const ContractState> states, const std::string& reason);

  /// Planned bid for type j at simulation time t (kNoBid when idle).
  double nominal_bid(int j, double t) const;
  /// Draws the contract (index into the states passed to replan) receiving
  /// an item of type j won at time t; -1 when nothing is allocated.
  int draw_contract(int j, double t);
  double noise(double sigma);

  const ControllerConfig& config() const noexcept { return config_; }
  const std::vector<ReplanRecord>& log() const noexcept { return log_; }
  const std::optional<BidPlan>& current() const noexcept { return bids_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  const TableCache& tables_;
  ControllerConfig config_;
  double offset_;
  Rng rng_;
  std::optional<BidPlan> bids_;
  std::vector<int> plan_to_state_;
  std::vector<ReplanRecord> log_;
  std::vector<std::string> warnings_;
};

struct SpendEntry {
  double time = 0.0;
  int contract = -1;  // -1: won but unallocated
  int type = 0;
  double payment = 0.0;
};

struct EventRecord {
  double time = 0.0;
  int type = 0;
  double price = 0.0;
  double bid = 0.0;
  bool won = false;
  int contract = -1;
};

struct SimResult {
  std::vector<std::vector<std::pair<double, double>>> trajectories;  // per contract: (time, c_i)
  std::vector<double> acquired;
  std::vector<SpendEntry> spend;
  std::vector<ReplanRecord> replans;
  std::vector<EventRecord> events;  // only when requested
  std::vector<std::string> warnings;
  double total_spend = 0.0;
  long long events_processed = 0;
  long long wins = 0;
};

struct SimOptions {
  Mechanism market = Mechanism::SecondPrice;
  double horizon = 0.0;  // 0: latest deadline
  double sigma_bid = 0.0;
  bool record_events = false;
};

/// Event loop: pop the earliest arrival, ask the controller for a bid (plus
/// Normal(0, sigma^2) noise), win when bid >= price, allocate by the plan's
/// fractions, pay the price (second price) or the bid (first price), and
/// schedule the next arrival of that type.
SimResult run_sim(const MarketSampler& sampler, Controller& controller, std::span<const Contract> contracts,
                  const SimOptions& options, std::uint64_t market_seed);

struct FulfillmentMetrics {
  double c_avg = 0.0;
  std::vector<double> fill;  // min(1, c_i / C_i)
  double total_spend = 0.0;
  double items = 0.0;
  double spend_per_item = 0.0;  // NaN when nothing was acquired
  bool fulfilled = false;       // c_avg >= 0.98
};

FulfillmentMetrics fulfillment_metrics(const SimResult& result, std::span<const Contract> contracts);

/// Everything needed to run one replication.
struct SimSetup {
  const MarketSampler* sampler = nullptr;
  const TableCache* tables = nullptr;
  std::vector<Contract> contracts;
  ControllerConfig controller;
  SimOptions sim;
};

struct ReplicationSeeds {
  std::uint64_t market = 0;
  std::uint64_t controller = 0;
};

/// Per-replication seeds derived from the master seed; shared between setups
/// so paired runs see the same event stream.
ReplicationSeeds replication_seeds(std::uint64_t master, int replication) noexcept;

SimResult run_replication(const SimSetup& setup, ReplicationSeeds seeds);

struct RunSummary {
  int replication = 0;
  bool ok = false;
  std::string error;
  FulfillmentMetrics metrics;
  int replans = 0;
  int fallbacks = 0;
};

struct Interval {
  double lo = 0.0;
  double median = 0.0;
  double hi = 0.0;
};

struct MonteCarloSummary {
  std::uint64_t master_seed = 0;
  int replications = 0;
  int failures = 0;
  std::vector<RunSummary> runs;
  double mean_c_avg = 0.0;
  double sd_c_avg = 0.0;
  Interval c_avg_interval;  // 5th / 50th / 95th percentiles
  std::vector<double> mean_fill;  // per contract
  double median_fill = 0.0;       // pooled over contracts and runs
  double mean_spend = 0.0;
  double mean_spend_per_item = 0.0;
  double mean_spend_per_item_fulfilled = 0.0;  // NaN when no run reached 98%
  int fulfilled_runs = 0;
};

struct MonteCarloOptions {
  int replications = 1;
  std::uint64_t master_seed = 1;
  int threads = 1;
};

/// Runs independent replications (optionally on several threads) and
/// aggregates them in replication order, so the summary does not depend on
/// scheduling. Failed runs are recorded and excluded from the aggregates.
MonteCarloSummary monte_carlo(const SimSetup& setup, const MonteCarloOptions& options);

/// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
double percentile(std::vector<double> values, double q);

struct PairedTest {
  int n = 0;
  double mean_difference = 0.0;  // mean(a - b)
  double sd_difference = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;  // one-sided, H1: mean(a - b) > 0
};

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct MeanConfidence {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Mean with a two-sided 95% Student-t confidence interval.
MeanConfidence mean_confidence(std::span<const double> values);

}  // namespace bidplan

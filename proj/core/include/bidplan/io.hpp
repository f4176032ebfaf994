#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bidplan/convexify.hpp"
#include "bidplan/ingest.hpp"
#include "bidplan/market_model.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/risk.hpp"
#include "bidplan/simulator.hpp"

namespace bidplan {

/// Version written into (and required from) every file this library reads.
inline constexpr int kSchemaVersion = 1;

/// Environment variable naming the fallback directory for relative paths.
inline constexpr const char* kDataDirEnv = "BIDPLAN_DATA_DIR";

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Supply curves for a list of item types, index-aligned.
struct CurveSet {
  std::vector<std::string> labels;
  std::vector<SupplyCurve> curves;
  std::vector<std::string> warnings;

  /// Index of a label; throws FormatError when absent.
  int index_of(const std::string& label) const;
};

struct EstimationOptions {
  std::size_t bid_points = 256;
  double grid_scale = 1.25;          // grid top = scale * largest observed price
  std::optional<double> max_bid;     // truncation; default is the grid top
  std::optional<double> bandwidth;   // default: normal reference rule per hour
  double knot_step = 0.25;
};

/// Rate and win-probability estimation for each type on one shared bid grid.
/// Types are estimated in parallel when `threads` > 1; the result does not
/// depend on the thread count.
CurveSet estimate_curves(const std::vector<ImpressionRecord>& records, const std::vector<std::string>& types,
                         const EstimationOptions& options = {}, int threads = 1);

std::string curves_to_json(const CurveSet& set);
CurveSet curves_from_json(const std::string& text);

/// Acquisition cost tables per type at fixed time knots, as written by the
/// convexify step. Lookups use the nearest knot (wrapping when periodic).
struct TableSet {
  Mechanism mechanism = Mechanism::SecondPrice;
  std::vector<std::string> labels;
  std::vector<std::vector<AcquisitionTable>> tables;  // [j], increasing time
  std::optional<double> period;

  const PiecewiseAffineConvex& nearest(int j, double t) const;
  AcquisitionTables for_grid(const TimeGrid& grid, double origin = 0.0) const;
};

/// Tabulates every curve at `times` (default: the curve's own time knots).
TableSet tabulate_set(const CurveSet& curves, Mechanism mechanism, const TabulationOptions& options = {},
                      const std::vector<double>& times = {});

std::string tables_to_json(const TableSet& set);
TableSet tables_from_json(const std::string& text);

/// Item types and contracts, read from a "contracts" document or from the
/// corresponding fields of a scenario.
struct ContractSet {
  std::vector<std::string> item_types;
  std::vector<Contract> contracts;
};

ContractSet contracts_from_json(const std::string& text);
std::string contracts_to_json(const ContractSet& set);

/// Simulation scenario: contracts, market source, and planner/controller and
/// Monte Carlo settings. Relative paths resolve against the scenario file's
/// directory, then against $BIDPLAN_DATA_DIR.
struct Scenario {
  std::filesystem::path base_dir;
  std::string name = "scenario";
  std::vector<std::string> item_types;
  std::vector<Contract> contracts;  // deadlines relative to the simulation start

  // market source: an impression log or a synthetic generator
  std::optional<std::filesystem::path> log;
  ColumnMapping mapping;
  std::optional<std::pair<double, double>> window;  // hours since the epoch
  std::optional<SyntheticSpec> synthetic;
  /// Simulation start in hours since the epoch; default is the first midnight
  /// at or before the first record.
  std::optional<double> start;

  std::optional<std::filesystem::path> curves_file;  // default: estimate from the market
  EstimationOptions estimation;

  Mechanism market_mechanism = Mechanism::SecondPrice;
  Mechanism planning_mechanism = Mechanism::SecondPrice;
  int grid_intervals = 0;  // K for the one-shot plan; 0 means N + grid_segments
  TabulationOptions tabulation{64, 16};
  double lattice_hours = 0.25;

  ControllerConfig controller;
  std::vector<double> delta_sweep;  // empty: only controller.risk
  SimOptions sim;
  MonteCarloOptions monte_carlo;
};

Scenario scenario_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Resolves a scenario-relative path; throws FormatError when not found.
std::filesystem::path resolve_data_path(const std::filesystem::path& p, const std::filesystem::path& base_dir);

/// Records for the scenario's market (read or generated), windowed.
std::vector<ImpressionRecord> load_market_records(const Scenario& s);
double simulation_start(const Scenario& s, const std::vector<ImpressionRecord>& records);

/// Curves from `curves_file` (reordered to item_types) or estimated from the records.
CurveSet scenario_curves(const Scenario& s, const std::vector<ImpressionRecord>& records);

std::string plan_to_json(const Plan& plan, const BidPlan& bids, const std::vector<std::string>& labels);

/// One Monte Carlo configuration of a sweep.
struct SweepPoint {
  std::string label;
  double delta = 0.0;
  double update_hours = 0.0;
  MonteCarloSummary summary;
};

struct SimulationReport {
  std::string scenario;
  std::uint64_t master_seed = 0;
  std::vector<SweepPoint> points;
};

/// Fixed key order and number formatting, so equal reports give equal bytes.
std::string report_to_json(const SimulationReport& report);
SimulationReport report_from_json(const std::string& text);

/// Tables for plotting fulfillment and cost against the inflation level.
void write_sweep_csv(std::ostream& out, const SimulationReport& report);
void write_runs_csv(std::ostream& out, const SimulationReport& report);
void write_events_csv(std::ostream& out, const SimResult& result, const std::vector<std::string>& labels);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace bidplan

#include "bidplan/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace bidplan {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json parse_document(const std::string& text, std::string_view kind) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError(std::string(kind) + ": not a JSON object");
  if (!j.contains("schema_version")) throw FormatError(std::string(kind) + ": missing schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion)
    throw FormatError(std::string(kind) + ": unsupported schema_version " + std::to_string(v));
  if (j.contains("kind") && j.at("kind").get<std::string>() != kind)
    throw FormatError("expected a '" + std::string(kind) + "' document, got '" + j.at("kind").get<std::string>() + "'");
  return j;
}

json header(std::string_view kind) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  return j;
}

// JSON has no infinities or NaN; both map to null and back to NaN/-inf.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json bid_value(double v) { return is_no_bid(v) ? json(nullptr) : number(v); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

double time_value(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    if (auto t = parse_timestamp(j.get<std::string>())) return *t;
    throw FormatError("unparseable timestamp '" + j.get<std::string>() + "'");
  }
  throw FormatError("timestamp must be a string or a number of hours");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json curve_to_json(const std::string& label, const SupplyCurve& c) {
  json j;
  j["label"] = label;
  j["bid_grid"] = c.bid_grid();
  j["time_knots_hours"] = c.time_knots();
  j["win_prob"] = c.win_prob_table();
  j["rate"] = c.rate_table();
  j["max_bid"] = number(c.declared_max_bid());
  j["period"] = c.period() ? json(*c.period()) : json(nullptr);
  return j;
}

SupplyCurve curve_from_json(const json& j) {
  return SupplyCurve(j.at("bid_grid").get<std::vector<double>>(), j.at("time_knots_hours").get<std::vector<double>>(),
                     j.at("win_prob").get<std::vector<std::vector<double>>>(), j.at("rate").get<std::vector<double>>(),
                     number_or(j.value("max_bid", json(nullptr)), kUnbounded),
                     j.contains("period") && !j.at("period").is_null() ? std::optional<double>(j.at("period").get<double>())
                                                                       : std::nullopt);
}

json summary_to_json(const MonteCarloSummary& s) {
  json j;
  j["master_seed"] = s.master_seed;
  j["replications"] = s.replications;
  j["failures"] = s.failures;
  j["mean_c_avg"] = number(s.mean_c_avg);
  j["sd_c_avg"] = number(s.sd_c_avg);
  j["c_avg_interval"] = {{"lo", number(s.c_avg_interval.lo)},
                         {"median", number(s.c_avg_interval.median)},
                         {"hi", number(s.c_avg_interval.hi)}};
  json fills = json::array();
  for (double f : s.mean_fill) fills.push_back(number(f));
  j["mean_fill"] = fills;
  j["median_fill"] = number(s.median_fill);
  j["mean_spend"] = number(s.mean_spend);
  j["mean_spend_per_item"] = number(s.mean_spend_per_item);
  j["mean_spend_per_item_fulfilled"] = number(s.mean_spend_per_item_fulfilled);
  j["fulfilled_runs"] = s.fulfilled_runs;
  json runs = json::array();
  for (const auto& r : s.runs) {
    json fill = json::array();
    for (double f : r.metrics.fill) fill.push_back(number(f));
    runs.push_back({{"replication", r.replication},
                    {"ok", r.ok},
                    {"error", r.error},
                    {"c_avg", number(r.metrics.c_avg)},
                    {"fill", fill},
                    {"total_spend", number(r.metrics.total_spend)},
                    {"items", number(r.metrics.items)},
                    {"spend_per_item", number(r.metrics.spend_per_item)},
                    {"replans", r.replans},
                    {"fallbacks", r.fallbacks}});
  }
  j["runs"] = runs;
  return j;
}

std::vector<double> number_list(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number_or(v, kNaN));
  return out;
}

MonteCarloSummary summary_from_json(const json& j) {
  MonteCarloSummary s;
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  s.replications = j.at("replications").get<int>();
  s.failures = j.at("failures").get<int>();
  s.mean_c_avg = number_or(j.at("mean_c_avg"), kNaN);
  s.sd_c_avg = number_or(j.at("sd_c_avg"), kNaN);
  const auto& ci = j.at("c_avg_interval");
  s.c_avg_interval = {number_or(ci.at("lo"), kNaN), number_or(ci.at("median"), kNaN), number_or(ci.at("hi"), kNaN)};
  s.mean_fill = number_list(j.at("mean_fill"));
  s.median_fill = number_or(j.at("median_fill"), kNaN);
  s.mean_spend = number_or(j.at("mean_spend"), kNaN);
  s.mean_spend_per_item = number_or(j.at("mean_spend_per_item"), kNaN);
  s.mean_spend_per_item_fulfilled = number_or(j.at("mean_spend_per_item_fulfilled"), kNaN);
  s.fulfilled_runs = j.at("fulfilled_runs").get<int>();
  for (const auto& rj : j.at("runs")) {
    RunSummary r;
    r.replication = rj.at("replication").get<int>();
    r.ok = rj.at("ok").get<bool>();
    r.error = rj.at("error").get<std::string>();
    r.metrics.c_avg = number_or(rj.at("c_avg"), kNaN);
    r.metrics.fill = number_list(rj.at("fill"));
    r.metrics.total_spend = number_or(rj.at("total_spend"), kNaN);
    r.metrics.items = number_or(rj.at("items"), kNaN);
    r.metrics.spend_per_item = number_or(rj.at("spend_per_item"), kNaN);
    r.metrics.fulfilled = r.ok && r.metrics.c_avg >= 0.98;
    r.replans = rj.at("replans").get<int>();
    r.fallbacks = rj.at("fallbacks").get<int>();
    s.runs.push_back(std::move(r));
  }
  return s;
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec spec;
  spec.hours = get_or(j, "hours", spec.hours);
  if (j.contains("start")) spec.start = time_value(j.at("start"));
  spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
  for (const auto& tj : j.at("types")) {
    SyntheticType t;
    t.label = tj.at("label").get<std::string>();
    t.base_rate = get_or(tj, "base_rate", t.base_rate);
    t.amplitude = get_or(tj, "amplitude", t.amplitude);
    t.peak_hour = get_or(tj, "peak_hour", t.peak_hour);
    t.log_mean = get_or(tj, "log_mean", t.log_mean);
    t.log_sd = get_or(tj, "log_sd", t.log_sd);
    t.mix_weight = get_or(tj, "mix_weight", t.mix_weight);
    t.mix_log_mean = get_or(tj, "mix_log_mean", t.mix_log_mean);
    t.mix_log_sd = get_or(tj, "mix_log_sd", t.mix_log_sd);
    spec.types.push_back(std::move(t));
  }
  return spec;
}

std::vector<Contract> parse_contracts(const json& list, const std::vector<std::string>& item_types) {
  std::vector<Contract> out;
  int next_id = 0;
  for (const auto& cj : list) {
    Contract c;
    c.id = get_or(cj, "id", next_id);
    next_id = c.id + 1;
    for (const auto& label : cj.at("eligible")) {
      const auto name = label.get<std::string>();
      const auto it = std::find(item_types.begin(), item_types.end(), name);
      if (it == item_types.end())
        throw FormatError("contract " + std::to_string(c.id) + " names unknown item type '" + name + "'");
      c.eligible_types.push_back(static_cast<int>(it - item_types.begin()));
    }
    c.quantity = cj.at("quantity").get<double>();
    c.deadline = cj.at("deadline").get<double>();
    out.push_back(std::move(c));
  }
  validate_contracts(out, static_cast<int>(item_types.size()));
  return out;
}

}  // namespace

int CurveSet::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw FormatError("no supply curve for item type '" + label + "'");
  return static_cast<int>(it - labels.begin());
}

CurveSet estimate_curves(const std::vector<ImpressionRecord>& records, const std::vector<std::string>& types,
                         const EstimationOptions& options, int threads) {
  std::vector<ImpressionRecord> relevant;
  for (const auto& r : records)
    if (std::find(types.begin(), types.end(), r.item_type) != types.end()) relevant.push_back(r);
  const auto grid = default_bid_grid(relevant, options.bid_points, options.grid_scale);
  const double max_bid = options.max_bid.value_or(grid.back());

  const auto n = types.size();
  std::vector<std::optional<SupplyCurve>> curves(n);
  std::vector<std::vector<std::string>> warnings(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t j) {
    try {
      const auto rate = estimate_rate(relevant, types[j]);
      const auto win = estimate_win_prob(relevant, types[j], grid, options.bandwidth);
      curves[j] = compose_supply_curve(rate, win, max_bid, options.knot_step);
      warnings[j] = rate.warnings;
      warnings[j].insert(warnings[j].end(), win.warnings.begin(), win.warnings.end());
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t j = 0; j < n; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < n; j = next++) work(j);
      });
    for (auto& t : pool) t.join();
  }

  CurveSet out;
  for (std::size_t j = 0; j < n; ++j) {
    if (errors[j]) std::rethrow_exception(errors[j]);
    out.labels.push_back(types[j]);
    out.curves.push_back(std::move(*curves[j]));
    out.warnings.insert(out.warnings.end(), warnings[j].begin(), warnings[j].end());
  }
  return out;
}

std::string curves_to_json(const CurveSet& set) {
  json j = header("supply_curves");
  json arr = json::array();
  for (std::size_t i = 0; i < set.curves.size(); ++i) arr.push_back(curve_to_json(set.labels[i], set.curves[i]));
  j["curves"] = arr;
  j["warnings"] = set.warnings;
  return j.dump(1) + "\n";
}

CurveSet curves_from_json(const std::string& text) {
  const json j = parse_document(text, "supply_curves");
  CurveSet set;
  try {
    for (const auto& cj : j.at("curves")) {
      set.labels.push_back(cj.at("label").get<std::string>());
      set.curves.push_back(curve_from_json(cj));
    }
    set.warnings = get_or(j, "warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw FormatError(std::string("supply_curves: ") + e.what());
  }
  return set;
}

const PiecewiseAffineConvex& TableSet::nearest(int j, double t) const {
  const auto& list = tables.at(static_cast<std::size_t>(j));
  if (list.empty()) throw FormatError("no acquisition tables for type " + std::to_string(j));
  double u = t;
  if (period) {
    u = std::fmod(t, *period);
    if (u < 0) u += *period;
  }
  std::size_t best = 0;
  double best_d = kUnbounded;
  for (std::size_t k = 0; k < list.size(); ++k) {
    double d = std::abs(list[k].time - u);
    if (period) d = std::min(d, *period - d);
    if (d < best_d - 1e-12) {
      best_d = d;
      best = k;
    }
  }
  return list[best].cost;
}

AcquisitionTables TableSet::for_grid(const TimeGrid& grid, double origin) const {
  AcquisitionTables out;
  out.at.resize(tables.size());
  for (std::size_t j = 0; j < tables.size(); ++j)
    for (double k : grid.knots) out.at[j].push_back(nearest(static_cast<int>(j), origin + k));
  return out;
}

TableSet tabulate_set(const CurveSet& curves, Mechanism mechanism, const TabulationOptions& options,
                      const std::vector<double>& times) {
  TableSet set;
  set.mechanism = mechanism;
  set.labels = curves.labels;
  for (std::size_t j = 0; j < curves.curves.size(); ++j) {
    const auto& c = curves.curves[j];
    std::vector<double> ts = times;
    if (ts.empty()) {
      ts = c.time_knots();
      if (c.period() && ts.size() > 1) ts.pop_back();  // the last knot repeats the first
    }
    if (c.period()) {
      if (set.period && *set.period != *c.period()) throw FormatError("curves disagree on their period");
      set.period = c.period();
    }
    set.tables.push_back(tabulate_acquisition(c, mechanism, ts, options, static_cast<int>(j)));
  }
  return set;
}

std::string tables_to_json(const TableSet& set) {
  json j = header("acquisition_tables");
  j["mechanism"] = to_string(set.mechanism);
  j["period"] = set.period ? json(*set.period) : json(nullptr);
  json types = json::array();
  for (std::size_t i = 0; i < set.tables.size(); ++i) {
    json list = json::array();
    for (const auto& t : set.tables[i])
      list.push_back({{"time", t.time},
                      {"knots", t.cost.knots()},
                      {"values", t.cost.values()},
                      {"majorant_deviation", number(t.majorant_deviation)}});
    types.push_back({{"label", set.labels[i]}, {"tables", list}});
  }
  j["types"] = types;
  return j.dump(1) + "\n";
}

TableSet tables_from_json(const std::string& text) {
  const json j = parse_document(text, "acquisition_tables");
  TableSet set;
  try {
    set.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
    if (j.contains("period") && !j.at("period").is_null()) set.period = j.at("period").get<double>();
    for (const auto& tj : j.at("types")) {
      set.labels.push_back(tj.at("label").get<std::string>());
      std::vector<AcquisitionTable> list;
      for (const auto& e : tj.at("tables")) {
        AcquisitionTable t;
        t.time = e.at("time").get<double>();
        t.cost = PiecewiseAffineConvex(e.at("knots").get<std::vector<double>>(), e.at("values").get<std::vector<double>>());
        t.majorant_deviation = number_or(e.value("majorant_deviation", json(nullptr)), 0.0);
        list.push_back(std::move(t));
      }
      std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
      set.tables.push_back(std::move(list));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("acquisition_tables: ") + e.what());
  }
  return set;
}

ContractSet contracts_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  const std::string kind = j.is_object() ? j.value("kind", std::string("contracts")) : std::string("contracts");
  if (kind != "contracts" && kind != "scenario") throw FormatError("expected a contracts or scenario document");
  j = parse_document(text, kind);
  ContractSet set;
  try {
    set.item_types = j.at("item_types").get<std::vector<std::string>>();
    set.contracts = parse_contracts(j.at("contracts"), set.item_types);
  } catch (const json::exception& e) {
    throw FormatError(std::string("contracts: ") + e.what());
  } catch (const ModelError& e) {
    throw FormatError(std::string("contracts: ") + e.what());
  }
  return set;
}

std::string contracts_to_json(const ContractSet& set) {
  json j = header("contracts");
  j["item_types"] = set.item_types;
  json list = json::array();
  for (const auto& c : set.contracts) {
    json eligible = json::array();
    for (int t : c.eligible_types) eligible.push_back(set.item_types.at(static_cast<std::size_t>(t)));
    list.push_back({{"id", c.id}, {"eligible", eligible}, {"quantity", c.quantity}, {"deadline", c.deadline}});
  }
  j["contracts"] = list;
  return j.dump(1) + "\n";
}

Scenario scenario_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_document(text, "scenario");
  Scenario s;
  s.base_dir = base_dir;
  try {
    s.name = get_or<std::string>(j, "name", s.name);
    s.item_types = j.at("item_types").get<std::vector<std::string>>();
    if (s.item_types.empty()) throw FormatError("scenario: item_types is empty");

    s.contracts = parse_contracts(j.at("contracts"), s.item_types);

    const json market = j.value("market", json::object());
    if (market.contains("log")) s.log = market.at("log").get<std::string>();
    if (market.contains("column_map")) s.mapping = ColumnMapping::parse(market.at("column_map").get<std::string>());
    if (market.contains("window")) {
      const auto& w = market.at("window");
      s.window = std::make_pair(time_value(w.at(0)), time_value(w.at(1)));
    }
    if (market.contains("synthetic")) s.synthetic = synthetic_from_json(market.at("synthetic"));
    if (market.contains("start")) s.start = time_value(market.at("start"));
    if (!s.log && !s.synthetic) throw FormatError("scenario: market needs a 'log' or a 'synthetic' generator");
    if (s.log && s.synthetic) throw FormatError("scenario: market takes either 'log' or 'synthetic', not both");
    if (s.synthetic)
      for (const auto& label : s.item_types)
        if (std::none_of(s.synthetic->types.begin(), s.synthetic->types.end(),
                         [&](const SyntheticType& t) { return t.label == label; }))
          throw FormatError("scenario: synthetic market lacks item type '" + label + "'");

    if (j.contains("curves")) s.curves_file = j.at("curves").get<std::string>();
    if (j.contains("estimation")) {
      const auto& e = j.at("estimation");
      s.estimation.bid_points = get_or<std::size_t>(e, "bid_points", s.estimation.bid_points);
      s.estimation.grid_scale = get_or(e, "grid_scale", s.estimation.grid_scale);
      if (e.contains("max_bid")) s.estimation.max_bid = e.at("max_bid").get<double>();
      if (e.contains("bandwidth")) s.estimation.bandwidth = e.at("bandwidth").get<double>();
      s.estimation.knot_step = get_or(e, "knot_step", s.estimation.knot_step);
    }

    if (j.contains("mechanism")) s.market_mechanism = s.planning_mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
    if (j.contains("market_mechanism")) s.market_mechanism = parse_mechanism(j.at("market_mechanism").get<std::string>());
    if (j.contains("planning_mechanism"))
      s.planning_mechanism = parse_mechanism(j.at("planning_mechanism").get<std::string>());

    if (j.contains("planner")) {
      const auto& p = j.at("planner");
      s.grid_intervals = get_or(p, "K", s.grid_intervals);
      if (p.contains("mode")) s.controller.planner.mode = parse_plan_mode(p.at("mode").get<std::string>());
      s.controller.planner.seed_segments = get_or(p, "seed_segments", s.controller.planner.seed_segments);
      s.controller.planner.equalize_blocks = get_or(p, "equalize_blocks", s.controller.planner.equalize_blocks);
    }
    if (j.contains("tabulation")) {
      const auto& t = j.at("tabulation");
      s.tabulation.rate_points = get_or<std::size_t>(t, "rate_points", s.tabulation.rate_points);
      s.tabulation.segments = get_or<std::size_t>(t, "segments", s.tabulation.segments);
      s.lattice_hours = get_or(t, "lattice_hours", s.lattice_hours);
    }
    if (j.contains("controller")) {
      const auto& c = j.at("controller");
      s.controller.update_hours = get_or(c, "update_hours", s.controller.update_hours);
      s.controller.grid_segments = get_or(c, "grid_segments", s.controller.grid_segments);
    }
    if (j.contains("risk")) {
      const auto& r = j.at("risk");
      if (r.contains("delta")) s.controller.risk.delta = r.at("delta").get<double>();
      if (r.contains("epsilon")) s.controller.risk.epsilon = r.at("epsilon").get<double>();
      s.controller.risk.validate();
    }
    if (j.contains("sweep")) s.delta_sweep = j.at("sweep").value("deltas", std::vector<double>{});
    for (double d : s.delta_sweep)
      if (!(d >= 0.0)) throw FormatError("scenario: sweep deltas must be >= 0");
    if (j.contains("simulation")) {
      const auto& m = j.at("simulation");
      s.monte_carlo.replications = get_or(m, "replications", s.monte_carlo.replications);
      s.monte_carlo.master_seed = get_or<std::uint64_t>(m, "master_seed", s.monte_carlo.master_seed);
      s.monte_carlo.threads = get_or(m, "threads", s.monte_carlo.threads);
      s.sim.sigma_bid = get_or(m, "sigma_bid", s.sim.sigma_bid);
      s.sim.horizon = get_or(m, "horizon", s.sim.horizon);
    }
    s.sim.market = s.market_mechanism;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  } catch (const ModelError& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const auto resolved = resolve_data_path(path, {});
  return scenario_from_json(read_text_file(resolved), resolved.parent_path());
}

std::filesystem::path resolve_data_path(const std::filesystem::path& p, const std::filesystem::path& base_dir) {
  if (p.is_absolute()) {
    if (std::filesystem::exists(p)) return p;
    throw FormatError("file not found: " + p.string());
  }
  std::vector<std::filesystem::path> candidates;
  if (!base_dir.empty()) candidates.push_back(base_dir / p);
  candidates.push_back(p);
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) candidates.push_back(std::filesystem::path(dir) / p);
  for (const auto& c : candidates)
    if (std::filesystem::exists(c)) return c;
  throw FormatError("file not found: " + p.string() + " (also searched $" + kDataDirEnv + ")");
}

std::vector<ImpressionRecord> load_market_records(const Scenario& s) {
  std::vector<ImpressionRecord> records;
  if (s.log)
    records = parse_impressions(resolve_data_path(*s.log, s.base_dir), s.mapping).records;
  else if (s.synthetic)
    records = generate_log(*s.synthetic);
  else
    throw FormatError("scenario has no market source");
  if (s.window) records = filter_window(records, s.window->first, s.window->second);
  if (records.empty()) throw FormatError("scenario market has no records");
  return records;
}

double simulation_start(const Scenario& s, const std::vector<ImpressionRecord>& records) {
  if (s.start) return *s.start;
  if (s.window) return s.window->first;
  double first = kUnbounded;
  for (const auto& r : records) first = std::min(first, r.time);
  if (!std::isfinite(first)) return 0.0;
  return std::floor(first / 24.0) * 24.0;
}

CurveSet scenario_curves(const Scenario& s, const std::vector<ImpressionRecord>& records) {
  if (!s.curves_file) return estimate_curves(records, s.item_types, s.estimation);
  const CurveSet loaded = curves_from_json(read_text_file(resolve_data_path(*s.curves_file, s.base_dir)));
  CurveSet out;
  for (const auto& label : s.item_types) {
    out.labels.push_back(label);
    out.curves.push_back(loaded.curves[static_cast<std::size_t>(loaded.index_of(label))]);
  }
  out.warnings = loaded.warnings;
  return out;
}

std::string plan_to_json(const Plan& plan, const BidPlan& bids, const std::vector<std::string>& labels) {
  json j = header("plan");
  j["status"] = to_string(plan.status);
  j["objective"] = number(plan.objective);
  j["lp_objective"] = number(plan.lp_objective);
  j["penalty_weight"] = number(plan.penalty_weight);
  j["item_types"] = labels;
  j["grid"] = plan.grid.knots;
  j["origin"] = bids.origin;
  json contracts = json::array();
  for (std::size_t i = 0; i < plan.contracts.size(); ++i) {
    const auto& c = plan.contracts[i];
    json eligible = json::array();
    for (int t : c.eligible_types) eligible.push_back(labels.at(static_cast<std::size_t>(t)));
    json entry = {{"id", c.id}, {"eligible", eligible}, {"quantity", c.quantity}, {"deadline", c.deadline}};
    if (!plan.shortfall.empty()) entry["shortfall"] = plan.shortfall[i];
    if (plan.has_duals) entry["pseudo_bid"] = number(plan.rho[i]);
    entry["allocation"] = plan.allocation[i];
    contracts.push_back(entry);
  }
  j["contracts"] = contracts;
  j["supply"] = plan.supply;
  json bid_rows = json::array();
  for (const auto& row : bids.bids) {
    json r = json::array();
    for (double b : row) r.push_back(bid_value(b));
    bid_rows.push_back(r);
  }
  j["bids"] = bid_rows;
  j["gamma"] = bids.gamma;
  if (plan.has_duals) j["mu"] = plan.mu;
  j["warnings"] = bids.warnings;
  if (plan.adequacy) {
    j["adequacy"] = {{"feasible", plan.adequacy->feasible},
                     {"margin", number(plan.adequacy->margin)},
                     {"slack", plan.adequacy->slack},
                     {"summary", plan.adequacy->summary}};
  }
  j["lp_iterations"] = plan.lp_iterations;
  j["cut_rounds"] = plan.cut_rounds;
  return j.dump(1) + "\n";
}

std::string report_to_json(const SimulationReport& report) {
  json j = header("simulation_summary");
  j["scenario"] = report.scenario;
  j["master_seed"] = report.master_seed;
  json points = json::array();
  for (const auto& p : report.points)
    points.push_back({{"label", p.label},
                      {"delta", p.delta},
                      {"update_hours", p.update_hours},
                      {"summary", summary_to_json(p.summary)}});
  j["points"] = points;
  return j.dump(1) + "\n";
}

SimulationReport report_from_json(const std::string& text) {
  const json j = parse_document(text, "simulation_summary");
  SimulationReport r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& pj : j.at("points")) {
      SweepPoint p;
      p.label = pj.at("label").get<std::string>();
      p.delta = pj.at("delta").get<double>();
      p.update_hours = pj.at("update_hours").get<double>();
      p.summary = summary_from_json(pj.at("summary"));
      r.points.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("simulation_summary: ") + e.what());
  }
  return r;
}

void write_sweep_csv(std::ostream& out, const SimulationReport& report) {
  out << "label,delta,update_hours,replications,failures,mean_c_avg,ci_lo,ci_hi,sd_c_avg,c_avg_p05,c_avg_p50,"
         "c_avg_p95,median_fill,mean_spend,mean_spend_per_item,mean_spend_per_item_fulfilled,fulfilled_runs\n";
  for (const auto& p : report.points) {
    const auto& s = p.summary;
    std::vector<double> c_avg;
    for (const auto& r : s.runs)
      if (r.ok) c_avg.push_back(r.metrics.c_avg);
    MeanConfidence ci{kNaN, kNaN, kNaN};
    if (c_avg.size() >= 2) ci = mean_confidence(c_avg);
    out << p.label << ',' << fmt(p.delta) << ',' << fmt(p.update_hours) << ',' << s.replications << ','
        << s.failures << ',' << fmt(s.mean_c_avg) << ',' << fmt(ci.lo) << ',' << fmt(ci.hi) << ','
        << fmt(s.sd_c_avg) << ',' << fmt(s.c_avg_interval.lo) << ',' << fmt(s.c_avg_interval.median) << ','
        << fmt(s.c_avg_interval.hi) << ',' << fmt(s.median_fill) << ',' << fmt(s.mean_spend) << ','
        << fmt(s.mean_spend_per_item) << ',' << fmt(s.mean_spend_per_item_fulfilled) << ',' << s.fulfilled_runs
        << '\n';
  }
}

void write_runs_csv(std::ostream& out, const SimulationReport& report) {
  out << "label,delta,update_hours,replication,ok,c_avg,total_spend,items,spend_per_item,replans,fallbacks\n";
  for (const auto& p : report.points)
    for (const auto& r : p.summary.runs)
      out << p.label << ',' << fmt(p.delta) << ',' << fmt(p.update_hours) << ',' << r.replication << ','
          << (r.ok ? 1 : 0) << ',' << fmt(r.metrics.c_avg) << ',' << fmt(r.metrics.total_spend) << ','
          << fmt(r.metrics.items) << ',' << fmt(r.metrics.spend_per_item) << ',' << r.replans << ','
          << r.fallbacks << '\n';
}

void write_events_csv(std::ostream& out, const SimResult& result, const std::vector<std::string>& labels) {
  out << "time,item_type,price,bid,won,contract\n";
  for (const auto& e : result.events) {
    const auto& label = e.type >= 0 && static_cast<std::size_t>(e.type) < labels.size()
                            ? labels[static_cast<std::size_t>(e.type)]
                            : std::to_string(e.type);
    out << fmt(e.time) << ',' << label << ',' << fmt(e.price) << ',' << (is_no_bid(e.bid) ? "" : fmt(e.bid)) << ','
        << (e.won ? 1 : 0) << ',' << e.contract << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace bidplan

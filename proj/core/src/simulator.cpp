#include "bidplan/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

namespace bidplan {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

MarketSampler::MarketSampler(std::vector<std::array<HourBucket, 24>> buckets, double start_hour)
    : buckets_(std::move(buckets)), start_hour_(start_hour) {
  if (buckets_.empty()) throw ModelError("market sampler needs at least one item type");
  if (!std::isfinite(start_hour_)) throw ModelError("market sampler start hour must be finite");
  for (std::size_t j = 0; j < buckets_.size(); ++j) {
    for (std::size_t h = 0; h < 24; ++h) {
      const auto& b = buckets_[j][h];
      if (b.inter_arrivals.empty() || b.prices.empty()) {
        throw ModelError("market sampler bucket (type " + std::to_string(j) + ", hour " + std::to_string(h) +
                         ") is empty");
      }
      for (double dt : b.inter_arrivals) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("inter-arrival times must be positive");
      }
      for (double p : b.prices) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ModelError("prices must be finite and non-negative");
      }
    }
  }
}

int MarketSampler::hour_for(double t, double u) const {
  const double tau = start_hour_ + t;
  const double base = std::floor(tau);
  const double p = tau - base;
  const long long h = static_cast<long long>(base) + (p <= u ? 0 : 1);
  return static_cast<int>(((h % 24) + 24) % 24);
}

std::pair<double, double> MarketSampler::sample(double t, int j, Rng& rng) const {
  const int h = hour_for(t, uniform01(rng));
  const auto& b = bucket(j, h);
  const double dt = b.inter_arrivals[uniform_index(rng, b.inter_arrivals.size())];
  const double price = b.prices[uniform_index(rng, b.prices.size())];
  return {dt, price};
}

Controller::Controller(const TableCache& tables, ControllerConfig config, double curve_offset, std::uint64_t seed)
    : tables_(tables), config_(std::move(config)), offset_(curve_offset), rng_(seed) {
  config_.risk.validate();
  if (config_.update_hours < 0.0) throw ModelError("update interval must be >= 0");
  if (config_.grid_segments < 1) throw ModelError("grid_segments must be >= 1");
}

void Controller::replan(double t, std::span<const ContractState> states, const std::string& reason) {
  ReplanRecord rec;
  rec.time = t;
  rec.reason = reason;
  std::vector<Contract> residual;
  plan_to_state_.clear();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& st = states[i];
    if (st.retired || st.contract.deadline <= t + 1e-9) continue;
    Contract c = st.contract;
    c.quantity = std::max(0.0, st.contract.quantity - st.acquired);
    c.deadline = st.contract.deadline - t;
    c.quantity *= 1.0 + config_.risk.delta_for(c.quantity, c.deadline);
    residual.push_back(std::move(c));
    plan_to_state_.push_back(static_cast<int>(i));
  }
  rec.active_contracts = static_cast<int>(residual.size());
  if (residual.empty()) {
    bids_.reset();
    log_.push_back(rec);
    return;
  }

  const double origin = offset_ + t;
  const TimeGrid grid = build_grid(residual, static_cast<int>(residual.size()) + config_.grid_segments);
  const AcquisitionTables tables = tables_.for_grid(grid, origin);
  PlannerOptions opts = config_.planner;
  Plan plan = solve_plan(residual, tables, grid, opts);
  if (plan.status == PlanStatus::Infeasible && opts.mode == PlanMode::Strict) {
    opts.mode = PlanMode::BestEffort;
    plan = solve_plan(residual, tables, grid, opts);
    rec.fell_back = true;
    std::ostringstream os;
    os << "t=" << t << ": strict plan infeasible, switched to best effort";
    warnings_.push_back(os.str());
  }
  if (plan.status == PlanStatus::Infeasible) throw PlanError("controller could not produce a plan");
  rec.status = plan.status;
  rec.planned_spend = plan.objective;
  bids_ = reconstruct_paths(plan, tables_.curves(), origin);
  for (const auto& w : bids_->warnings) warnings_.push_back(w);
  log_.push_back(rec);
}

double Controller::nominal_bid(int j, double t) const {
  return bids_ ? bids_->bid(j, offset_ + t) : kNoBid;
}

int Controller::draw_contract(int j, double t) {
  if (!bids_) return -1;
  const int k = bids_->interval(offset_ + t);
  if (k < 0) return -1;
  double total = 0.0;
  for (const auto& g : bids_->gamma) total += g[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  if (!(total > 0.0)) return -1;
  const double u = uniform01(rng_) * total;
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < bids_->gamma.size(); ++i) {
    const double g = bids_->gamma[i][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    if (g <= 0.0) continue;
    acc += g;
    last = static_cast<int>(i);
    if (u < acc) return plan_to_state_[i];
  }
  return last < 0 ? -1 : plan_to_state_[static_cast<std::size_t>(last)];
}

double Controller::noise(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }

SimResult run_sim(const MarketSampler& sampler, Controller& controller, std::span<const Contract> contracts,
                  const SimOptions& options, std::uint64_t market_seed) {
  if (!(options.sigma_bid >= 0.0)) throw ModelError("sigma_bid must be >= 0");
  SimResult res;
  std::vector<ContractState> states;
  double horizon = options.horizon;
  for (const auto& c : contracts) {
    states.push_back({c, 0.0, c.quantity <= 0.0});
    res.trajectories.push_back({{0.0, 0.0}});
    if (options.horizon <= 0.0) horizon = std::max(horizon, c.deadline);
  }

  auto any_active = [&] {
    return std::any_of(states.begin(), states.end(), [](const ContractState& s) { return !s.retired; });
  };
  auto retire_expired = [&](double t) {
    for (auto& s : states) {
      if (!s.retired && s.contract.deadline <= t) s.retired = true;
    }
  };

  controller.replan(0.0, states, "start");

  struct Event {
    double time;
    long long seq;
    int type;
    double price;
    bool operator>(const Event& o) const { return time > o.time || (time == o.time && seq > o.seq); }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  Rng rng(market_seed);
  long long seq = 0;
  for (int j = 0; j < sampler.num_types(); ++j) {
    const auto [dt, price] = sampler.sample(0.0, j, rng);
    queue.push({dt, seq++, j, price});
  }

  const double every = controller.config().update_hours;
  double next_update = every > 0.0 ? every : std::numeric_limits<double>::infinity();
  while (!queue.empty() && any_active()) {
    const Event ev = queue.top();
    if (ev.time >= horizon) break;
    queue.pop();
    while (next_update <= ev.time) {
      retire_expired(next_update);
      if (any_active()) controller.replan(next_update, states, "scheduled");
      next_update += every;
    }
    const double t = ev.time;
    retire_expired(t);
    ++res.events_processed;

    const double nominal = controller.nominal_bid(ev.type, t);
    double bid = nominal;
    if (!is_no_bid(nominal) && options.sigma_bid > 0.0) bid += controller.noise(options.sigma_bid);
    const bool won = !is_no_bid(nominal) && bid >= ev.price;
    int idx = -1;
    if (won) {
      ++res.wins;
      idx = controller.draw_contract(ev.type, t);
      const double pay = options.market == Mechanism::SecondPrice ? ev.price : bid;
      res.total_spend += pay;
      res.spend.push_back({t, idx, ev.type, pay});
      if (idx >= 0 && !states[static_cast<std::size_t>(idx)].retired) {
        auto& st = states[static_cast<std::size_t>(idx)];
        st.acquired += 1.0;
        res.trajectories[static_cast<std::size_t>(idx)].emplace_back(t, st.acquired);
        if (st.acquired >= st.contract.quantity) {
          st.retired = true;
          if (any_active()) controller.replan(t, states, "fulfilled");
        }
      }
    }
    if (options.record_events) res.events.push_back({t, ev.type, ev.price, bid, won, idx});

    const auto [dt, price] = sampler.sample(t, ev.type, rng);
    queue.push({t + dt, seq++, ev.type, price});
  }

  for (std::size_t i = 0; i < states.size(); ++i) {
    res.acquired.push_back(states[i].acquired);
  }
  res.replans = controller.log();
  res.warnings = controller.warnings();
  return res;
}

FulfillmentMetrics fulfillment_metrics(const SimResult& result, std::span<const Contract> contracts) {
  if (result.acquired.size() != contracts.size()) throw ModelError("result and contracts differ in size");
  FulfillmentMetrics m;
  for (std::size_t i = 0; i < contracts.size(); ++i) {
    const double c = contracts[i].quantity;
    m.fill.push_back(c > 0.0 ? std::min(1.0, result.acquired[i] / c) : 1.0);
    m.items += result.acquired[i];
  }
  if (!m.fill.empty()) {
    double sum = 0.0;
    for (double f : m.fill) sum += f;
    m.c_avg = sum / static_cast<double>(m.fill.size());
  }
  m.total_spend = result.total_spend;
  m.spend_per_item = m.items > 0.0 ? m.total_spend / m.items : std::numeric_limits<double>::quiet_NaN();
  m.fulfilled = m.c_avg >= 0.98;
  return m;
}

ReplicationSeeds replication_seeds(std::uint64_t master, int replication) noexcept {
  const std::uint64_t base = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(replication)));
  return {splitmix64(base ^ 0x6d61726b6574ULL), splitmix64(base ^ 0x636f6e74726cULL)};
}

SimResult run_replication(const SimSetup& setup, ReplicationSeeds seeds) {
  if (!setup.sampler || !setup.tables) throw ModelError("simulation setup needs a sampler and tables");
  Controller controller(*setup.tables, setup.controller, setup.sampler->start_hour(), seeds.controller);
  return run_sim(*setup.sampler, controller, setup.contracts, setup.sim, seeds.market);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

MonteCarloSummary monte_carlo(const SimSetup& setup, const MonteCarloOptions& options) {
  if (options.replications < 1) throw ModelError("monte_carlo needs at least one replication");
  MonteCarloSummary out;
  out.master_seed = options.master_seed;
  out.replications = options.replications;
  out.runs.resize(static_cast<std::size_t>(options.replications));

  auto work = [&](int r) {
    RunSummary& run = out.runs[static_cast<std::size_t>(r)];
    run.replication = r;
    try {
      const SimResult res = run_replication(setup, replication_seeds(options.master_seed, r));
      run.metrics = fulfillment_metrics(res, setup.contracts);
      run.replans = static_cast<int>(res.replans.size());
      run.fallbacks = static_cast<int>(std::count_if(res.replans.begin(), res.replans.end(),
                                                     [](const ReplanRecord& p) { return p.fell_back; }));
      run.ok = true;
    } catch (const std::exception& e) {
      run.ok = false;
      run.error = e.what();
    }
  };
  const int threads = std::clamp(options.threads, 1, options.replications);
  if (threads == 1) {
    for (int r = 0; r < options.replications; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int r = next++; r < options.replications; r = next++) work(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<double> c_avg, fills, per_item, per_item_fulfilled;
  double spend = 0.0;
  out.mean_fill.assign(setup.contracts.size(), 0.0);
  for (const auto& run : out.runs) {
    if (!run.ok) {
      ++out.failures;
      continue;
    }
    c_avg.push_back(run.metrics.c_avg);
    spend += run.metrics.total_spend;
    for (std::size_t i = 0; i < run.metrics.fill.size(); ++i) {
      out.mean_fill[i] += run.metrics.fill[i];
      fills.push_back(run.metrics.fill[i]);
    }
    if (std::isfinite(run.metrics.spend_per_item)) {
      per_item.push_back(run.metrics.spend_per_item);
      if (run.metrics.fulfilled) per_item_fulfilled.push_back(run.metrics.spend_per_item);
    }
    if (run.metrics.fulfilled) ++out.fulfilled_runs;
  }
  const auto ok = static_cast<double>(c_avg.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto mean = [nan](const std::vector<double>& v) {
    if (v.empty()) return nan;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  out.mean_c_avg = mean(c_avg);
  if (c_avg.size() > 1) {
    double ss = 0.0;
    for (double x : c_avg) ss += (x - out.mean_c_avg) * (x - out.mean_c_avg);
    out.sd_c_avg = std::sqrt(ss / (ok - 1.0));
  }
  out.c_avg_interval = {percentile(c_avg, 0.05), percentile(c_avg, 0.5), percentile(c_avg, 0.95)};
  for (double& f : out.mean_fill) f = ok > 0 ? f / ok : nan;
  out.median_fill = percentile(fills, 0.5);
  out.mean_spend = ok > 0 ? spend / ok : nan;
  out.mean_spend_per_item = mean(per_item);
  out.mean_spend_per_item_fulfilled = mean(per_item_fulfilled);
  return out;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ModelError("paired test needs equally long samples");
  PairedTest out;
  out.n = static_cast<int>(a.size());
  if (out.n < 2) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] - b[i];
  out.mean_difference = sum / out.n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - out.mean_difference;
    ss += d * d;
  }
  out.sd_difference = std::sqrt(ss / (out.n - 1));
  if (out.sd_difference == 0.0) {
    out.t_statistic = out.mean_difference > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    out.p_value = out.mean_difference > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.t_statistic = out.mean_difference / (out.sd_difference / std::sqrt(static_cast<double>(out.n)));
  const boost::math::students_t dist(out.n - 1);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t_statistic));
  return out;
}

MeanConfidence mean_confidence(std::span<const double> values) {
  MeanConfidence out;
  const auto n = values.size();
  if (n == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN()};
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(n);
  out.lo = out.hi = out.mean;
  if (n < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  const double q = boost::math::quantile(dist, 0.975);
  out.lo = out.mean - q * se;
  out.hi = out.mean + q * se;
  return out;
}

}  // namespace bidplan

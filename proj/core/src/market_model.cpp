#include "bidplan/market_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace bidplan {

std::string_view to_string(Mechanism m) noexcept {
  return m == Mechanism::FirstPrice ? "first" : "second";
}

Mechanism parse_mechanism(std::string_view text) {
  if (text == "first" || text == "first_price" || text == "FirstPrice") return Mechanism::FirstPrice;
  if (text == "second" || text == "second_price" || text == "SecondPrice") return Mechanism::SecondPrice;
  throw ModelError("unknown mechanism '" + std::string(text) + "' (expected first|second)");
}

void validate_item_types(std::span<const ItemType> types) {
  std::set<std::string> labels;
  for (std::size_t j = 0; j < types.size(); ++j) {
    if (types[j].id != static_cast<int>(j)) {
      throw ModelError("item type ids must be dense 0..M-1; found id " +
                       std::to_string(types[j].id) + " at position " + std::to_string(j));
    }
    if (!labels.insert(types[j].label).second) {
      throw ModelError("duplicate item type label '" + types[j].label + "'");
    }
  }
}

void validate_contracts(std::span<const Contract> contracts, int num_types) {
  for (const auto& c : contracts) {
    const std::string who = "contract " + std::to_string(c.id);
    if (c.eligible_types.empty()) throw ModelError(who + ": no eligible item types");
    for (int j : c.eligible_types) {
      if (j < 0 || j >= num_types) {
        throw ModelError(who + ": unknown item type " + std::to_string(j));
      }
    }
    if (!(c.quantity >= 0.0) || !std::isfinite(c.quantity)) {
      throw ModelError(who + ": quantity must be finite and >= 0");
    }
    if (!(c.deadline > 0.0) || !std::isfinite(c.deadline)) {
      throw ModelError(who + ": deadline must be finite and > 0");
    }
  }
}

std::vector<Contract> sorted_by_deadline(std::vector<Contract> contracts) {
  std::stable_sort(contracts.begin(), contracts.end(),
                   [](const Contract& a, const Contract& b) { return a.deadline < b.deadline; });
  return contracts;
}

SupplyCurve::SupplyCurve(std::vector<double> bid_grid, std::vector<double> time_knots,
                         std::vector<std::vector<double>> win_prob, std::vector<double> rate,
                         double max_bid, std::optional<double> period)
    : bid_grid_(std::move(bid_grid)),
      time_knots_(std::move(time_knots)),
      win_prob_(std::move(win_prob)),
      rate_(std::move(rate)),
      max_bid_(max_bid),
      period_(period) {
  if (bid_grid_.size() < 2) throw ModelError("supply curve needs at least two grid bids");
  if (bid_grid_.front() < 0.0) throw ModelError("bid grid must start at a non-negative bid");
  for (std::size_t g = 1; g < bid_grid_.size(); ++g) {
    if (!(bid_grid_[g] > bid_grid_[g - 1])) throw ModelError("bid grid must be strictly increasing");
  }
  if (time_knots_.empty()) throw ModelError("supply curve needs at least one time knot");
  for (std::size_t k = 1; k < time_knots_.size(); ++k) {
    if (!(time_knots_[k] > time_knots_[k - 1])) {
      throw ModelError("time knots must be strictly increasing");
    }
  }
  if (win_prob_.size() != time_knots_.size() || rate_.size() != time_knots_.size()) {
    throw ModelError("win_prob and rate must have one entry per time knot");
  }
  for (const auto& column : win_prob_) {
    if (column.size() != bid_grid_.size()) {
      throw ModelError("each win_prob row must have one value per grid bid");
    }
    for (std::size_t g = 0; g < column.size(); ++g) {
      if (!(column[g] >= 0.0 && column[g] <= 1.0 + 1e-9)) {
        throw ModelError("win probabilities must lie in [0, 1]");
      }
      if (g > 0 && column[g] < column[g - 1]) {
        throw ModelError("win probabilities must be non-decreasing in the bid");
      }
    }
  }
  for (double r : rate_) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ModelError("rates must be finite and >= 0");
  }
  if (period_) {
    if (!(*period_ > 0.0)) throw ModelError("period must be positive");
    if (time_knots_.size() > 1 &&
        std::abs(time_knots_.back() - time_knots_.front() - *period_) > 1e-9) {
      throw ModelError("periodic curve must span exactly one period of time knots");
    }
  }
  if (!(max_bid_ >= bid_grid_.front())) throw ModelError("max_bid below the bid grid");

  saturation_bid_ = std::min(max_bid_, bid_grid_.back());
  saturation_index_ = 0;
  for (std::size_t g = 0; g < bid_grid_.size(); ++g) {
    if (bid_grid_[g] < saturation_bid_) saturation_index_ = g;
  }

  cumulative_.resize(win_prob_.size());
  for (std::size_t k = 0; k < win_prob_.size(); ++k) {
    const auto& w = win_prob_[k];
    auto& c = cumulative_[k];
    c.resize(w.size());
    c[0] = bid_grid_[0] * w[0];
    for (std::size_t g = 1; g < w.size(); ++g) {
      c[g] = c[g - 1] + 0.5 * (w[g - 1] + w[g]) * (bid_grid_[g] - bid_grid_[g - 1]);
    }
  }
}

SupplyCurve SupplyCurve::time_homogeneous(std::vector<double> bid_grid,
                                          std::vector<double> win_prob, double rate,
                                          double max_bid) {
  return SupplyCurve(std::move(bid_grid), {0.0}, {std::move(win_prob)}, {rate}, max_bid);
}

SupplyCurve::TimePos SupplyCurve::locate_time(double t) const {
  if (time_knots_.size() == 1) return {0, 0, 0.0};
  const double t0 = time_knots_.front();
  double tau = t;
  if (period_) {
    tau = std::fmod(t - t0, *period_);
    if (tau < 0.0) tau += *period_;
    tau += t0;
  }
  if (tau <= t0) return {0, 0, 0.0};
  if (tau >= time_knots_.back()) {
    const std::size_t last = time_knots_.size() - 1;
    return {last, last, 0.0};
  }
  const auto it = std::upper_bound(time_knots_.begin(), time_knots_.end(), tau);
  const std::size_t hi = static_cast<std::size_t>(it - time_knots_.begin());
  const std::size_t lo = hi - 1;
  const double w = (tau - time_knots_[lo]) / (time_knots_[hi] - time_knots_[lo]);
  return {lo, hi, w};
}

double SupplyCurve::column_value(std::size_t k, double x) const {
  const auto& w = win_prob_[k];
  const double xc = std::clamp(x, bid_grid_.front(), saturation_bid_);
  if (xc <= bid_grid_.front()) return w.front();
  const auto it = std::upper_bound(bid_grid_.begin(), bid_grid_.end(), xc);
  if (it == bid_grid_.end()) return w.back();
  const std::size_t g = static_cast<std::size_t>(it - bid_grid_.begin());
  const double x0 = bid_grid_[g - 1];
  const double x1 = bid_grid_[g];
  const double a = (xc - x0) / (x1 - x0);
  return w[g - 1] + a * (w[g] - w[g - 1]);
}

double SupplyCurve::column_integral(std::size_t k, double x) const {
  if (x <= 0.0) return 0.0;
  const auto& w = win_prob_[k];
  const auto& c = cumulative_[k];
  if (x <= bid_grid_.front()) return x * w.front();
  const double xs = std::min(x, saturation_bid_);
  const auto it = std::upper_bound(bid_grid_.begin(), bid_grid_.end(), xs);
  double integral = 0.0;
  if (it == bid_grid_.end()) {
    integral = c.back();
  } else {
    const std::size_t g = static_cast<std::size_t>(it - bid_grid_.begin()) - 1;
    integral = c[g] + 0.5 * (w[g] + column_value(k, xs)) * (xs - bid_grid_[g]);
  }
  if (x > saturation_bid_) integral += (x - saturation_bid_) * column_value(k, saturation_bid_);
  return integral;
}

double SupplyCurve::blended_at(const TimePos& p, std::size_t g) const {
  return (1.0 - p.weight) * win_prob_[p.lo][g] + p.weight * win_prob_[p.hi][g];
}

double SupplyCurve::rate(double t) const {
  const TimePos p = locate_time(t);
  return (1.0 - p.weight) * rate_[p.lo] + p.weight * rate_[p.hi];
}

double SupplyCurve::win_prob(double x, double t) const {
  const TimePos p = locate_time(t);
  return (1.0 - p.weight) * column_value(p.lo, x) + p.weight * column_value(p.hi, x);
}

double SupplyCurve::eval_supply(double x, double t) const { return rate(t) * win_prob(x, t); }

double SupplyCurve::invert_supply(double s, double t) const {
  const TimePos p = locate_time(t);
  const double lambda = (1.0 - p.weight) * rate_[p.lo] + p.weight * rate_[p.hi];
  if (!(lambda > 0.0)) return s <= 0.0 ? bid_grid_.front() : kUnbounded;
  const double target = s / lambda;

  const double top =
      (1.0 - p.weight) * column_value(p.lo, saturation_bid_) + p.weight * column_value(p.hi, saturation_bid_);
  if (target > top + 1e-12 * std::max(1.0, top)) return kUnbounded;
  const double bottom = blended_at(p, 0);
  if (target <= bottom) return bid_grid_.front();
  const double goal = std::min(target, top);

  // Points 0..sat_idx are grid bids, point sat_idx+1 is the saturation bid.
  const std::size_t n = saturation_index_ + 2;
  auto point_x = [&](std::size_t i) {
    return i <= saturation_index_ ? bid_grid_[i] : saturation_bid_;
  };
  auto point_v = [&](std::size_t i) { return i <= saturation_index_ ? blended_at(p, i) : top; };

  std::size_t lo = 0;  // value < goal
  std::size_t hi = n - 1;  // value >= goal
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (point_v(mid) >= goal) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double v0 = point_v(lo);
  const double v1 = point_v(hi);
  const double x0 = point_x(lo);
  const double x1 = point_x(hi);
  if (!(v1 > v0)) return x1;
  return x0 + (goal - v0) / (v1 - v0) * (x1 - x0);
}

double SupplyCurve::supply_integral(double x, double t) const {
  const TimePos p = locate_time(t);
  const double lambda = (1.0 - p.weight) * rate_[p.lo] + p.weight * rate_[p.hi];
  return lambda * ((1.0 - p.weight) * column_integral(p.lo, x) + p.weight * column_integral(p.hi, x));
}

double SupplyCurve::cost_rate(Mechanism m, double x, double t) const {
  if (!(x >= 0.0)) return 0.0;
  const double paid_as_bid = x * eval_supply(x, t);
  if (m == Mechanism::FirstPrice) return paid_as_bid;
  return std::max(0.0, paid_as_bid - supply_integral(x, t));
}

double SupplyCurve::acquisition_cost(Mechanism m, double s, double t) const {
  if (s < eval_supply(0.0, t)) return 0.0;
  const double x = invert_supply(s, t);
  if (is_unbounded(x)) return kUnbounded;
  return cost_rate(m, x, t);
}

std::optional<std::string> SupplyCurve::strict_violation() const {
  for (std::size_t k = 0; k < win_prob_.size(); ++k) {
    const auto& w = win_prob_[k];
    std::ostringstream where;
    where << "time knot " << time_knots_[k];
    for (std::size_t g = 0; g < w.size(); ++g) {
      if (!(w[g] > 0.0)) return where.str() + ": win probability not strictly positive";
    }
    for (std::size_t g = 1; g <= saturation_index_; ++g) {
      if (!(w[g] > w[g - 1])) {
        return where.str() + ": win probability not strictly increasing below the max bid";
      }
    }
    if (!(column_value(k, saturation_bid_) > w[saturation_index_]) &&
        saturation_bid_ > bid_grid_[saturation_index_]) {
      return where.str() + ": win probability flat before the max bid";
    }
    if (!(rate_[k] >= 0.0)) return where.str() + ": negative rate";
  }
  return std::nullopt;
}

}  // namespace bidplan

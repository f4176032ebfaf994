#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bidplan {

/// Distinguished value for rates or bids that cannot be attained. Never
/// produced by arithmetic on finite inputs, so callers test it explicitly.
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Bid value meaning "do not participate in this auction".
inline constexpr double kNoBid = -std::numeric_limits<double>::infinity();

inline bool is_unbounded(double v) noexcept { return std::isinf(v) && v > 0.0; }
inline bool is_no_bid(double v) noexcept { return std::isinf(v) && v < 0.0; }

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mechanism { FirstPrice, SecondPrice };

std::string_view to_string(Mechanism m) noexcept;
/// Accepts "first", "second", "first_price", "second_price".
Mechanism parse_mechanism(std::string_view text);

struct ItemType {
  int id = 0;
  std::string label;
};

struct Contract {
  int id = 0;
  std::vector<int> eligible_types;  // A_i
  double quantity = 0.0;            // C_i, items
  double deadline = 0.0;            // T_i, hours
};

/// Throws ModelError when ids are not dense, labels repeat, or a contract
/// breaks its invariants (empty A_i, negative quantity, non-positive deadline,
/// unknown type).
void validate_item_types(std::span<const ItemType> types);
void validate_contracts(std::span<const Contract> contracts, int num_types);

/// Stable sort by deadline, T_1 <= ... <= T_N.
std::vector<Contract> sorted_by_deadline(std::vector<Contract> contracts);

/// Expected supply rate surface W(x, t) = rate(t) * win_prob(x, t).
///
/// Stored as a table: a shared increasing bid grid and, per time knot, the
/// win probability at each grid bid and the arrival rate. Interpolation is
/// piecewise linear in the bid (which preserves monotonicity) and linear in
/// time. Bids below the first grid point clamp to the first column; bids at or
/// above the saturation bid see a flat curve. When a period is set the time
/// axis wraps, which requires the last knot to sit one period after the first.
///
/// Instances are immutable after construction.
class SupplyCurve {
 public:
  SupplyCurve(std::vector<double> bid_grid, std::vector<double> time_knots,
              std::vector<std::vector<double>> win_prob, std::vector<double> rate,
              double max_bid = kUnbounded, std::optional<double> period = std::nullopt);

  /// Single-knot curve that does not depend on time.
  static SupplyCurve time_homogeneous(std::vector<double> bid_grid,
                                      std::vector<double> win_prob, double rate,
                                      double max_bid = kUnbounded);

  double rate(double t) const;
  double win_prob(double x, double t) const;

  /// W(x, t); monotone in x, equal to sup_rate(t) for x >= saturation_bid().
  double eval_supply(double x, double t) const;

  /// Smallest bid with W(x, t) = s. Rates at or below W(x_min, t) map to the
  /// first grid bid; rates above sup_rate(t) give kUnbounded.
  double invert_supply(double s, double t) const;

  /// Expected spend per hour when bidding x. First price pays the bid, second
  /// price pays the competing bid: x W(x) - integral_0^x W(u) du. Zero for x < 0.
  double cost_rate(Mechanism m, double x, double t) const;

  /// Lambda(s, t) = f(W^-1(s, t), t), extended by 0 below W(0, t) and by
  /// kUnbounded above sup_rate(t).
  double acquisition_cost(Mechanism m, double s, double t) const;

  /// integral_0^x W(u, t) du under the same interpolation (exact trapezoid).
  double supply_integral(double x, double t) const;

  double sup_rate(double t) const { return eval_supply(saturation_bid(), t); }
  double floor_rate(double t) const { return eval_supply(bid_grid_.front(), t); }

  /// Effective x-bar: the declared max bid clipped to the grid.
  double saturation_bid() const noexcept { return saturation_bid_; }
  double declared_max_bid() const noexcept { return max_bid_; }

  const std::vector<double>& bid_grid() const noexcept { return bid_grid_; }
  const std::vector<double>& time_knots() const noexcept { return time_knots_; }
  const std::vector<std::vector<double>>& win_prob_table() const noexcept { return win_prob_; }
  const std::vector<double>& rate_table() const noexcept { return rate_; }
  std::optional<double> period() const noexcept { return period_; }
  bool is_time_homogeneous() const noexcept { return time_knots_.size() == 1; }

  /// Checks the estimation-grade invariants: strictly positive win
  /// probabilities, strictly increasing up to the saturation bid, rates >= 0.
  /// Returns a description of the first violation, or nullopt.
  std::optional<std::string> strict_violation() const;

 private:
  struct TimePos {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double weight = 0.0;  // of hi
  };
  TimePos locate_time(double t) const;
  double column_value(std::size_t k, double x) const;
  double column_integral(std::size_t k, double x) const;
  double blended_at(const TimePos& p, std::size_t g) const;

  std::vector<double> bid_grid_;
  std::vector<double> time_knots_;
  std::vector<std::vector<double>> win_prob_;
  std::vector<double> rate_;
  std::vector<std::vector<double>> cumulative_;  // integral of win_prob from 0 to grid bid
  double max_bid_ = kUnbounded;
  double saturation_bid_ = 0.0;
  std::size_t saturation_index_ = 0;  // last grid index strictly below saturation_bid_
  std::optional<double> period_;
};

/// Free-function spellings of the curve queries.
inline double eval_supply(const SupplyCurve& c, double x, double t) { return c.eval_supply(x, t); }
inline double invert_supply(const SupplyCurve& c, double s, double t) { return c.invert_supply(s, t); }
inline double cost_rate(const SupplyCurve& c, Mechanism m, double x, double t) {
  return c.cost_rate(m, x, t);
}
inline double acquisition_cost(const SupplyCurve& c, Mechanism m, double s, double t) {
  return c.acquisition_cost(m, s, t);
}

}  // namespace bidplan

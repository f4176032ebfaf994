#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bidplan/market_model.hpp"

namespace bidplan {

/// Supply inflation. Exactly one of `delta` (uniform) or `epsilon` (Poisson
/// tolerance, applied per contract with its own C_i and T_i) may be set;
/// neither means no inflation.
struct RiskConfig {
  std::optional<double> delta;
  std::optional<double> epsilon;

  void validate() const;
  /// Inflation fraction for a contract with quantity C and deadline T.
  double delta_for(double quantity, double deadline) const;
};

/// C_i -> (1 + delta) C_i, everything else unchanged.
std::vector<Contract> inflate_demand(std::span<const Contract> contracts, double delta);
std::vector<Contract> inflate_demand(std::span<const Contract> contracts, const RiskConfig& risk);

/// Lower branch W_{-1}(v) for v in [-1/e, 0): the solution x <= -1 of
/// x e^x = v. Throws std::domain_error outside the domain.
double lambert_w_minus1(double v);

/// delta = -W_{-1}(-eps^{T/C} / e) - 1, the Chernoff-bound inflation for
/// Poisson supply.
double poisson_delta(double epsilon, double quantity, double deadline);

/// (e W)^a e^-W / a^a with a = C/T: the Poisson Chernoff bound on
/// P(Po(W) < a), valid for W >= a.
double poisson_chernoff(double rate, double quantity, double deadline);

class InfeasibleBid : public std::runtime_error {
 public:
  InfeasibleBid(const std::string& what, double best_probability)
      : std::runtime_error(what), best_probability_(best_probability) {}
  /// Tail probability reached at the top of the bid range.
  double best_probability() const noexcept { return best_probability_; }

 private:
  double best_probability_;
};

/// tail(x, a) = P(W(x) >= a); must be non-decreasing in x.
using TailFunction = std::function<double(double bid, double required_rate)>;

/// Smallest bid in [lo, hi] with tail(x, C/T) >= 1 - eps, by bisection to
/// `resolution`. Throws InfeasibleBid when even hi fails.
double chance_bid(double epsilon, double quantity, double deadline, const TailFunction& tail, double lo,
                  double hi, double resolution = 1e-6);

}  // namespace bidplan

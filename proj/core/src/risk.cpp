#include "bidplan/risk.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace bidplan {

void RiskConfig::validate() const {
  if (delta && epsilon) throw ModelError("set either delta or epsilon, not both");
  if (delta && !(*delta >= 0.0)) throw ModelError("delta must be >= 0");
  if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0)) throw ModelError("epsilon must lie in (0, 1)");
}

double RiskConfig::delta_for(double quantity, double deadline) const {
  validate();
  if (delta) return *delta;
  if (epsilon && quantity > 0.0 && deadline > 0.0) return poisson_delta(*epsilon, quantity, deadline);
  return 0.0;
}

std::vector<Contract> inflate_demand(std::span<const Contract> contracts, double delta) {
  if (!(delta >= 0.0)) throw ModelError("delta must be >= 0");
  std::vector<Contract> out(contracts.begin(), contracts.end());
  for (auto& c : out) c.quantity *= 1.0 + delta;
  return out;
}

std::vector<Contract> inflate_demand(std::span<const Contract> contracts, const RiskConfig& risk) {
  std::vector<Contract> out(contracts.begin(), contracts.end());
  for (auto& c : out) c.quantity *= 1.0 + risk.delta_for(c.quantity, c.deadline);
  return out;
}

double lambert_w_minus1(double v) {
  constexpr double kBranch = -1.0 / std::numbers::e;
  if (!(v >= kBranch - 1e-15 && v < 0.0)) {
    throw std::domain_error("lambert_w_minus1 needs v in [-1/e, 0), got " + std::to_string(v));
  }
  if (v <= kBranch) return -1.0;
  // Root of g(x) = x + ln(-x) - ln(-v), increasing on (-inf, -1].
  const double target = std::log(-v);
  auto g = [&](double x) { return x + std::log(-x) - target; };
  double hi = -1.0;  // g(hi) >= 0
  double lo = -2.0;
  while (g(lo) > 0.0) lo *= 2.0;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gx = g(x);
    if (gx > 0.0) hi = x; else lo = x;
    const double dg = 1.0 + 1.0 / x;
    double next = dg != 0.0 ? x - gx / dg : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::abs(x) || hi - lo <= 1e-15 * std::abs(x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double poisson_delta(double epsilon, double quantity, double deadline) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ModelError("epsilon must lie in (0, 1)");
  if (!(quantity > 0.0 && deadline > 0.0)) throw ModelError("poisson_delta needs C > 0 and T > 0");
  const double v = -std::exp(std::log(epsilon) * deadline / quantity - 1.0);
  return std::max(0.0, -lambert_w_minus1(v) - 1.0);
}

double poisson_chernoff(double rate, double quantity, double deadline) {
  const double a = quantity / deadline;
  return std::exp(a * (1.0 + std::log(rate)) - rate - a * std::log(a));
}

double chance_bid(double epsilon, double quantity, double deadline, const TailFunction& tail, double lo,
                  double hi, double resolution) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ModelError("epsilon must lie in (0, 1)");
  if (!(deadline > 0.0)) throw ModelError("chance_bid needs T > 0");
  if (!(hi >= lo)) throw ModelError("chance_bid needs lo <= hi");
  const double a = quantity / deadline;
  const double need = 1.0 - epsilon;
  const double top = tail(hi, a);
  if (top < need) {
    throw InfeasibleBid("no bid up to " + std::to_string(hi) + " reaches probability " + std::to_string(need) +
                            " (best " + std::to_string(top) + ")",
                        top);
  }
  if (tail(lo, a) >= need) return lo;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (tail(mid, a) >= need) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace bidplan

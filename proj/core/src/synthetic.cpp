#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "bidplan/ingest.hpp"

namespace bidplan {

double synthetic_rate(const SyntheticType& type, double hour_of_day) {
  return type.base_rate * (1.0 + type.amplitude * std::cos(2.0 * std::numbers::pi * (hour_of_day - type.peak_hour) / 24.0));
}

std::vector<ImpressionRecord> generate_log(const SyntheticSpec& spec) {
  if (!(spec.hours > 0.0)) throw IngestError("synthetic log needs a positive duration");
  std::vector<ImpressionRecord> out;
  for (std::size_t j = 0; j < spec.types.size(); ++j) {
    const auto& type = spec.types[j];
    if (!(type.base_rate > 0.0) || type.amplitude < 0.0 || type.amplitude >= 1.0 || !(type.log_sd > 0.0) ||
        type.mix_weight < 0.0 || type.mix_weight > 1.0)
      throw IngestError("invalid synthetic parameters for type '" + type.label + "'");
    Rng rng(splitmix64(spec.seed ^ splitmix64(j + 1)));
    const double peak = type.base_rate * (1.0 + type.amplitude);
    std::exponential_distribution<double> gap(peak);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::lognormal_distribution<double> main_price(type.log_mean, type.log_sd);
    std::lognormal_distribution<double> mix_price(type.mix_log_mean, type.mix_log_sd);
    double t = 0.0;
    for (;;) {
      t += gap(rng);
      if (t >= spec.hours) break;
      const double abs_t = spec.start + t;
      const double h = std::fmod(abs_t, 24.0);
      if (unit(rng) * peak > synthetic_rate(type, h < 0 ? h + 24.0 : h)) continue;
      const bool second = type.mix_weight > 0.0 && unit(rng) < type.mix_weight;
      const double price = second ? mix_price(rng) : main_price(rng);
      out.push_back({abs_t, type.label, price});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

void write_csv_log(std::ostream& out, const std::vector<ImpressionRecord>& records) {
  out << "timestamp,item_type,price\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.4f", r.price);
    out << format_timestamp(r.time) << ',' << r.item_type << ',' << buf << '\n';
  }
}

}  // namespace bidplan

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bidplan/market_model.hpp"
#include "bidplan/simulator.hpp"

namespace bidplan {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImpressionRecord {
  double time = 0.0;  // hours since 1970-01-01T00:00:00Z
  std::string item_type;
  double price = 0.0;

  friend bool operator==(const ImpressionRecord&, const ImpressionRecord&) = default;
};

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm]" (a space may replace the T)
/// or the compact "YYYYMMDDHHMMSSfff" form into hours since the Unix epoch.
/// Returns nullopt for malformed input.
std::optional<double> parse_timestamp(std::string_view text);
std::string format_timestamp(double hours);

/// Maps source column (CSV header or JSON key) names onto the three fields.
struct ColumnMapping {
  std::string timestamp = "timestamp";
  std::string item_type = "item_type";
  std::string price = "price";

  /// Parses "source=field,..." such as "user_tag=item_type,market_price=price".
  static ColumnMapping parse(std::string_view spec);
};

struct ImpressionLog {
  std::vector<ImpressionRecord> records;
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::vector<std::string> warnings;
};

enum class LogFormat { Auto, Csv, JsonLines };

/// Streams a CSV (with header) or JSON-lines log. Malformed rows (unparseable
/// fields, negative prices, missing columns) are skipped and counted; more
/// than `max_malformed_fraction` of the rows aborts with IngestError.
ImpressionLog parse_impressions(const std::filesystem::path& path, const ColumnMapping& mapping = {},
                                LogFormat format = LogFormat::Auto, double max_malformed_fraction = 0.01);
ImpressionLog parse_impressions(std::istream& in, LogFormat format, const ColumnMapping& mapping = {},
                                double max_malformed_fraction = 0.01);

/// Keeps records with time in [from, to) (hours since the epoch).
std::vector<ImpressionRecord> filter_window(const std::vector<ImpressionRecord>& records, double from, double to);

/// Hour of day (0..23) of an absolute time in hours.
int hour_of_day(double hours);

/// 24-periodic C1 Hermite interpolant of hourly values placed at t = 0, 1,
/// ..., 23. Slopes are harmonic means of the adjacent secants (zero at local
/// extrema), so each piece stays within the range of its two end values and
/// the curve stays non-negative.
class PeriodicHourly {
 public:
  PeriodicHourly() = default;
  explicit PeriodicHourly(std::array<double, 24> values);
  double operator()(double t) const;
  const std::array<double, 24>& values() const noexcept { return values_; }

 private:
  std::array<double, 24> values_{};
  std::array<double, 24> slopes_{};
};

struct RateEstimate {
  std::array<double, 24> hourly{};       // items per hour
  std::array<double, 24> mean_gap{};     // hours, outliers censored at the cutoff
  std::array<int, 24> samples{};         // inter-arrivals at or below the cutoff
  std::array<int, 24> outliers{};        // inter-arrivals above the cutoff
  std::array<bool, 24> borrowed{};       // used the global mean
  PeriodicHourly curve;
  std::vector<std::string> warnings;
};

/// Raw inter-arrival times per hour of day, each gap assigned to the hour of
/// the earlier arrival.
std::array<std::vector<double>, 24> hourly_inter_arrivals(const std::vector<ImpressionRecord>& records,
                                                           const std::string& type);

/// Hourly rate = 1 / mean gap. Gaps above 5x the hour's median are outliers:
/// they count as censored at the cutoff (sum of min(gap, cutoff) over the
/// number of gaps within it), which keeps the estimate unbiased for Poisson
/// arrivals. Hours with fewer than two gaps use the global mean. Throws
/// IngestError when the type is absent.
RateEstimate estimate_rate(const std::vector<ImpressionRecord>& records, const std::string& type);

struct WinProbEstimate {
  std::vector<double> bid_grid;
  std::array<std::vector<double>, 24> hourly;  // W~ on the grid per hour
  std::array<double, 24> bandwidth{};
  std::array<int, 24> pooled_radius{};  // neighbouring hours pooled on each side
  std::array<int, 24> observations{};
  std::vector<std::string> warnings;
};

/// 1.06 min(sd, IQR / 1.34) n^(-1/5).
double normal_reference_bandwidth(std::vector<double> sample);

/// Gaussian-kernel estimate of P(price <= x) per hour of day. Hours with
/// fewer than 30 prices pool neighbouring hours, widening until the floor
/// is met. Throws IngestError when the type has no prices.
WinProbEstimate estimate_win_prob(const std::vector<ImpressionRecord>& records, const std::string& type,
                                  const std::vector<double>& bid_grid,
                                  std::optional<double> bandwidth = std::nullopt);

/// W(x, t) = rate(t) W~(x, t) on time knots every `knot_step` hours over one
/// day (24-periodic), W~ linear between hours, truncated at `max_bid`.
/// Throws IngestError when the result fails the curve validators.
SupplyCurve compose_supply_curve(const RateEstimate& rate, const WinProbEstimate& win, double max_bid,
                                 double knot_step = 0.25);

/// Shared bid grid [0, scale * largest price] with `points` entries.
std::vector<double> default_bid_grid(const std::vector<ImpressionRecord>& records, std::size_t points = 256,
                                     double scale = 1.25);

/// Sampler buckets holding the raw inter-arrivals and prices per hour, so the
/// simulated market replays the log; empty hours borrow from the nearest
/// non-empty hours.
MarketSampler build_sampler(const std::vector<ImpressionRecord>& records, const std::vector<std::string>& types,
                            double start_hour = 0.0);

/// Synthetic impression logs: non-homogeneous Poisson arrivals (thinning) with
/// a diurnal cosine rate and log-normal (optionally two-component) prices.
struct SyntheticType {
  std::string label;
  double base_rate = 100.0;     // items per hour
  double amplitude = 0.3;       // relative diurnal swing in [0, 1)
  double peak_hour = 20.0;
  double log_mean = 3.0;        // of the main price component
  double log_sd = 0.5;
  double mix_weight = 0.0;      // weight of the second component
  double mix_log_mean = 4.0;
  double mix_log_sd = 0.3;
};

struct SyntheticSpec {
  std::vector<SyntheticType> types;
  double hours = 168.0;
  double start = 0.0;  // hours since the epoch
  std::uint64_t seed = 1;
};

double synthetic_rate(const SyntheticType& type, double hour_of_day);
std::vector<ImpressionRecord> generate_log(const SyntheticSpec& spec);
void write_csv_log(std::ostream& out, const std::vector<ImpressionRecord>& records);

}  // namespace bidplan

#include "bidplan/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace bidplan {

namespace {

constexpr double kHoursPerDay = 24.0;

template <class T>
bool parse_number(std::string_view s, T& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

std::optional<double> civil_hours(int y, int mo, int d, int h, int mi, double sec) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec < 0.0 || sec >= 61.0) return std::nullopt;
  const auto days_since = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days_since) * kHoursPerDay + h + mi / 60.0 + sec / 3600.0;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<double> json_time(const nlohmann::json& v) {
  if (v.is_string()) return parse_timestamp(v.get<std::string>());
  if (v.is_number_unsigned() || v.is_number_integer()) return parse_timestamp(std::to_string(v.get<long long>()));
  return std::nullopt;
}

std::optional<std::string> json_label(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return std::nullopt;
}

std::optional<double> json_price(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    double p = 0.0;
    if (parse_number(v.get<std::string>(), p)) return p;
  }
  return std::nullopt;
}

bool valid_record(const ImpressionRecord& r) {
  return std::isfinite(r.time) && std::isfinite(r.price) && r.price >= 0.0 && !r.item_type.empty();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

std::vector<ImpressionRecord> of_type(const std::vector<ImpressionRecord>& records, const std::string& type) {
  std::vector<ImpressionRecord> out;
  for (const auto& r : records)
    if (r.item_type == type) out.push_back(r);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

std::optional<double> parse_timestamp(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;

  // compact YYYYMMDDHHMMSS[fff]
  if ((s.size() == 17 || s.size() == 14) && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    int ms = 0;
    digits(s, 0, 4, y);
    digits(s, 4, 2, mo);
    digits(s, 6, 2, d);
    digits(s, 8, 2, h);
    digits(s, 10, 2, mi);
    digits(s, 12, 2, sec);
    if (s.size() == 17) digits(s, 14, 3, ms);
    return civil_hours(y, mo, d, h, mi, sec + ms / 1000.0);
  }

  if (s.size() < 19 || !digits(s, 0, 4, y) || s[4] != '-' || !digits(s, 5, 2, mo) || s[7] != '-' ||
      !digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') || !digits(s, 11, 2, h) || s[13] != ':' ||
      !digits(s, 14, 2, mi) || s[16] != ':' || !digits(s, 17, 2, sec))
    return std::nullopt;
  std::size_t pos = 19;
  double frac = 0.0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    double scale = 0.1;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      frac += (s[pos] - '0') * scale;
      scale *= 0.1;
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }
  double offset_hours = 0.0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      ++pos;
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!digits(s, pos + 1, 2, oh) || !digits(s, pos + 4, 2, om)) return std::nullopt;
      offset_hours = (s[pos] == '+' ? 1.0 : -1.0) * (oh + om / 60.0);
      pos = s.size();
    } else {
      return std::nullopt;
    }
  }
  auto base = civil_hours(y, mo, d, h, mi, sec + frac);
  if (!base) return std::nullopt;
  return *base - offset_hours;
}

std::string format_timestamp(double hours) {
  using namespace std::chrono;
  const auto total_ms = static_cast<long long>(std::llround(hours * 3600.0 * 1000.0));
  long long days_count = total_ms / 86'400'000LL;
  long long rem = total_ms % 86'400'000LL;
  if (rem < 0) {
    rem += 86'400'000LL;
    --days_count;
  }
  const year_month_day ymd{sys_days{days{days_count}}};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3'600'000LL,
                (rem / 60'000LL) % 60, (rem / 1000LL) % 60, rem % 1000LL);
  return buf;
}

ColumnMapping ColumnMapping::parse(std::string_view spec) {
  ColumnMapping m;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t end = std::min(spec.find(',', start), spec.size());
    const std::string item = trim(spec.substr(start, end - start));
    start = end + 1;
    if (item.empty()) {
      if (end >= spec.size()) break;
      continue;
    }
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw IngestError("column mapping entry without '=': " + item);
    const std::string source = trim(std::string_view(item).substr(0, eq));
    const std::string field = trim(std::string_view(item).substr(eq + 1));
    if (source.empty()) throw IngestError("empty source column in mapping: " + item);
    if (field == "timestamp")
      m.timestamp = source;
    else if (field == "item_type")
      m.item_type = source;
    else if (field == "price")
      m.price = source;
    else
      throw IngestError("unknown target field in column mapping: " + field);
    if (end >= spec.size()) break;
  }
  return m;
}

ImpressionLog parse_impressions(std::istream& in, LogFormat format, const ColumnMapping& mapping,
                                double max_malformed_fraction) {
  ImpressionLog log;
  std::string line;

  if (in.peek() == std::char_traits<char>::eof()) {
    log.warnings.push_back("log is empty");
    return log;
  }
  if (format == LogFormat::Auto) {
    const int c = in.peek();
    format = (c == '{') ? LogFormat::JsonLines : LogFormat::Csv;
  }

  if (format == LogFormat::Csv) {
    if (!std::getline(in, line)) throw IngestError("empty log: missing CSV header");
    const auto header = split_csv(line);
    auto index_of = [&](const std::string& name) -> std::size_t {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (trim(header[i]) == name) return i;
      throw IngestError("CSV header lacks column '" + name + "'");
    };
    const std::size_t it = index_of(mapping.timestamp);
    const std::size_t ii = index_of(mapping.item_type);
    const std::size_t ip = index_of(mapping.price);
    const std::size_t need = std::max({it, ii, ip});
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++log.rows;
      const auto f = split_csv(line);
      ImpressionRecord r;
      bool ok = f.size() > need;
      if (ok) {
        const auto t = parse_timestamp(f[it]);
        r.item_type = trim(f[ii]);
        ok = t.has_value() && parse_number(f[ip], r.price);
        if (ok) r.time = *t;
      }
      if (ok && valid_record(r))
        log.records.push_back(std::move(r));
      else
        ++log.malformed;
    }
  } else {
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      ++log.rows;
      ImpressionRecord r;
      bool ok = false;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_object() && j.contains(mapping.timestamp) && j.contains(mapping.item_type) && j.contains(mapping.price)) {
        const auto t = json_time(j[mapping.timestamp]);
        const auto l = json_label(j[mapping.item_type]);
        const auto p = json_price(j[mapping.price]);
        if (t && l && p) {
          r.time = *t;
          r.item_type = *l;
          r.price = *p;
          ok = true;
        }
      }
      if (ok && valid_record(r))
        log.records.push_back(std::move(r));
      else
        ++log.malformed;
    }
  }

  if (log.rows > 0 && static_cast<double>(log.malformed) > max_malformed_fraction * static_cast<double>(log.rows)) {
    std::ostringstream msg;
    msg << log.malformed << " of " << log.rows << " rows malformed, above the allowed fraction "
        << max_malformed_fraction;
    throw IngestError(msg.str());
  }
  if (log.malformed > 0) log.warnings.push_back(std::to_string(log.malformed) + " malformed rows skipped");
  std::stable_sort(log.records.begin(), log.records.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return log;
}

ImpressionLog parse_impressions(const std::filesystem::path& path, const ColumnMapping& mapping, LogFormat format,
                                double max_malformed_fraction) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open log " + path.string());
  if (format == LogFormat::Auto) {
    const auto ext = path.extension().string();
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") format = LogFormat::JsonLines;
    else if (ext == ".csv") format = LogFormat::Csv;
  }
  return parse_impressions(in, format, mapping, max_malformed_fraction);
}

std::vector<ImpressionRecord> filter_window(const std::vector<ImpressionRecord>& records, double from, double to) {
  std::vector<ImpressionRecord> out;
  for (const auto& r : records)
    if (r.time >= from && r.time < to) out.push_back(r);
  return out;
}

int hour_of_day(double hours) {
  const double h = std::fmod(std::floor(hours), kHoursPerDay);
  return static_cast<int>(h < 0 ? h + kHoursPerDay : h) % 24;
}

PeriodicHourly::PeriodicHourly(std::array<double, 24> values) : values_(values) {
  for (int h = 0; h < 24; ++h) {
    const double left = values_[static_cast<std::size_t>(h)] - values_[static_cast<std::size_t>((h + 23) % 24)];
    const double right = values_[static_cast<std::size_t>((h + 1) % 24)] - values_[static_cast<std::size_t>(h)];
    slopes_[static_cast<std::size_t>(h)] = (left * right > 0.0) ? 2.0 * left * right / (left + right) : 0.0;
  }
}

double PeriodicHourly::operator()(double t) const {
  double u = std::fmod(t, kHoursPerDay);
  if (u < 0) u += kHoursPerDay;
  const int h = std::min(23, static_cast<int>(std::floor(u)));
  const double a = u - h;
  const auto i0 = static_cast<std::size_t>(h);
  const auto i1 = static_cast<std::size_t>((h + 1) % 24);
  const double a2 = a * a, a3 = a2 * a;
  const double h00 = 2 * a3 - 3 * a2 + 1, h10 = a3 - 2 * a2 + a, h01 = -2 * a3 + 3 * a2, h11 = a3 - a2;
  return h00 * values_[i0] + h10 * slopes_[i0] + h01 * values_[i1] + h11 * slopes_[i1];
}

std::array<std::vector<double>, 24> hourly_inter_arrivals(const std::vector<ImpressionRecord>& records,
                                                           const std::string& type) {
  const auto rs = of_type(records, type);
  std::array<std::vector<double>, 24> gaps;
  for (std::size_t i = 0; i + 1 < rs.size(); ++i)
    gaps[static_cast<std::size_t>(hour_of_day(rs[i].time))].push_back(rs[i + 1].time - rs[i].time);
  return gaps;
}

RateEstimate estimate_rate(const std::vector<ImpressionRecord>& records, const std::string& type) {
  const auto gaps = hourly_inter_arrivals(records, type);
  RateEstimate est;
  std::array<double, 24> exposure{};
  double total_exposure = 0.0;
  int total_kept = 0;
  for (std::size_t h = 0; h < 24; ++h) {
    const double cutoff = 5.0 * median_of(gaps[h]);
    for (double g : gaps[h]) {
      if (cutoff > 0.0 && g > cutoff) {
        exposure[h] += cutoff;
        ++est.outliers[h];
      } else {
        exposure[h] += g;
        ++est.samples[h];
      }
    }
    total_exposure += exposure[h];
    total_kept += est.samples[h];
  }
  if (total_kept + std::accumulate(est.outliers.begin(), est.outliers.end(), 0) == 0)
    throw IngestError("item type '" + type + "' needs at least two arrivals");
  if (total_kept == 0 || !(total_exposure > 0.0))
    throw IngestError("item type '" + type + "' has no positive inter-arrival times");
  const double global = total_exposure / total_kept;

  int borrowed = 0;
  for (std::size_t h = 0; h < 24; ++h) {
    double mean = est.samples[h] > 0 ? exposure[h] / est.samples[h] : 0.0;
    if (est.samples[h] < 2 || !(mean > 0.0)) {
      mean = global;
      est.borrowed[h] = true;
      ++borrowed;
    }
    est.mean_gap[h] = mean;
    est.hourly[h] = 1.0 / mean;
  }
  if (borrowed > 0)
    est.warnings.push_back("type '" + type + "': " + std::to_string(borrowed) + " hours used the global mean gap");
  est.curve = PeriodicHourly(est.hourly);
  return est;
}

double normal_reference_bandwidth(std::vector<double> sample) {
  const auto n = sample.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double iqr = (percentile(sample, 0.75) - percentile(sample, 0.25)) / 1.34;
  const double spread = iqr > 0.0 ? std::min(sd, iqr) : sd;
  return 1.06 * spread * std::pow(static_cast<double>(n), -0.2);
}

WinProbEstimate estimate_win_prob(const std::vector<ImpressionRecord>& records, const std::string& type,
                                  const std::vector<double>& bid_grid, std::optional<double> bandwidth) {
  if (bid_grid.size() < 2) throw IngestError("bid grid needs at least two points");
  if (bandwidth && !(*bandwidth > 0.0)) throw IngestError("bandwidth must be positive");
  std::array<std::vector<double>, 24> prices;
  std::size_t total = 0;
  for (const auto& r : records)
    if (r.item_type == type) {
      prices[static_cast<std::size_t>(hour_of_day(r.time))].push_back(r.price);
      ++total;
    }
  if (total == 0) throw IngestError("item type '" + type + "' has no prices");

  constexpr std::size_t kFloor = 30;
  const double span = bid_grid.back() - bid_grid.front();
  WinProbEstimate est;
  est.bid_grid = bid_grid;
  const auto G = bid_grid.size();
  int pooled = 0;
  for (int h = 0; h < 24; ++h) {
    std::vector<double> sample;
    int radius = 0;
    for (;; ++radius) {
      sample.clear();
      for (int d = -radius; d <= radius; ++d) {
        if (radius == 12 && d == 12) break;  // -12 and +12 are the same hour
        const auto& p = prices[static_cast<std::size_t>((h + d + 48) % 24)];
        sample.insert(sample.end(), p.begin(), p.end());
      }
      if (sample.size() >= kFloor || radius == 12) break;
    }
    if (radius > 0) ++pooled;
    const auto hh = static_cast<std::size_t>(h);
    est.pooled_radius[hh] = radius;
    est.observations[hh] = static_cast<int>(sample.size());

    double bw = bandwidth.value_or(normal_reference_bandwidth(sample));
    if (!(bw > 0.0) || !std::isfinite(bw)) bw = 1e-3 * std::max(1.0, span);
    est.bandwidth[hh] = bw;

    auto& w = est.hourly[hh];
    w.resize(G);
    const double inv_n = 1.0 / static_cast<double>(sample.size());
    for (std::size_t g = 0; g < G; ++g) {
      double acc = 0.0;
      for (double p : sample) acc += normal_cdf((bid_grid[g] - p) / bw);
      // a tiny ramp keeps the column strictly increasing and positive where
      // the kernel tails underflow
      w[g] = (1.0 - 1e-9) * std::min(1.0, acc * inv_n) + 1e-9 * static_cast<double>(g + 1) / static_cast<double>(G);
    }
  }
  if (pooled > 0)
    est.warnings.push_back("type '" + type + "': " + std::to_string(pooled) +
                           " hours pooled neighbouring hours to reach 30 prices");
  return est;
}

SupplyCurve compose_supply_curve(const RateEstimate& rate, const WinProbEstimate& win, double max_bid,
                                 double knot_step) {
  if (!(knot_step > 0.0) || knot_step > kHoursPerDay) throw IngestError("knot step must lie in (0, 24]");
  const int n = static_cast<int>(std::lround(kHoursPerDay / knot_step));
  if (n < 1 || std::abs(n * knot_step - kHoursPerDay) > 1e-9)
    throw IngestError("knot step must divide 24 hours evenly");
  std::vector<double> knots, rates;
  std::vector<std::vector<double>> columns;
  const auto G = win.bid_grid.size();
  for (int k = 0; k <= n; ++k) {
    const double t = k * knot_step;
    knots.push_back(t);
    rates.push_back(std::max(0.0, rate.curve(t)));
    const double tt = std::fmod(t, kHoursPerDay);
    const int h0 = static_cast<int>(std::floor(tt)) % 24;
    const int h1 = (h0 + 1) % 24;
    const double a = tt - std::floor(tt);
    std::vector<double> col(G);
    for (std::size_t g = 0; g < G; ++g)
      col[g] = (1.0 - a) * win.hourly[static_cast<std::size_t>(h0)][g] + a * win.hourly[static_cast<std::size_t>(h1)][g];
    columns.push_back(std::move(col));
  }
  SupplyCurve curve(win.bid_grid, std::move(knots), std::move(columns), std::move(rates), max_bid, kHoursPerDay);
  if (auto why = curve.strict_violation()) throw IngestError("estimated curve is invalid: " + *why);
  return curve;
}

std::vector<double> default_bid_grid(const std::vector<ImpressionRecord>& records, std::size_t points, double scale) {
  if (points < 2) throw IngestError("bid grid needs at least two points");
  double top = 0.0;
  for (const auto& r : records) top = std::max(top, r.price);
  top = top > 0.0 ? scale * top : 1.0;
  std::vector<double> grid(points);
  for (std::size_t g = 0; g < points; ++g) grid[g] = top * static_cast<double>(g) / static_cast<double>(points - 1);
  return grid;
}

MarketSampler build_sampler(const std::vector<ImpressionRecord>& records, const std::vector<std::string>& types,
                            double start_hour) {
  constexpr double kMinGap = 1e-6;  // hours; coincident timestamps would stall the clock
  std::vector<std::array<HourBucket, 24>> buckets;
  for (const auto& type : types) {
    auto gaps = hourly_inter_arrivals(records, type);
    std::array<std::vector<double>, 24> prices;
    for (const auto& r : records)
      if (r.item_type == type) prices[static_cast<std::size_t>(hour_of_day(r.time))].push_back(r.price);

    auto fill_nearest = [&](std::array<std::vector<double>, 24>& data, const char* what) {
      const auto source = data;
      for (int h = 0; h < 24; ++h) {
        if (!source[static_cast<std::size_t>(h)].empty()) continue;
        for (int r = 1; r <= 12; ++r) {
          auto& out = data[static_cast<std::size_t>(h)];
          for (int d : {-r, r}) {
            const auto& s = source[static_cast<std::size_t>((h + d + 48) % 24)];
            out.insert(out.end(), s.begin(), s.end());
            if (r == 12) break;
          }
          if (!out.empty()) break;
        }
        if (data[static_cast<std::size_t>(h)].empty())
          throw IngestError("item type '" + type + "' has no " + what);
      }
    };
    fill_nearest(gaps, "inter-arrival times");
    fill_nearest(prices, "prices");

    std::array<HourBucket, 24> b;
    for (std::size_t h = 0; h < 24; ++h) {
      for (double& g : gaps[h]) g = std::max(g, kMinGap);
      b[h].inter_arrivals = std::move(gaps[h]);
      b[h].prices = std::move(prices[h]);
    }
    buckets.push_back(std::move(b));
  }
  return MarketSampler(std::move(buckets), start_hour);
}

}  // namespace bidplan

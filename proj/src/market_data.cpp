#include "dycop/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dycop::md {

std::int64_t Date::serial() const {
  // days_from_civil (Howard Hinnant), valid over the whole Gregorian range
  const int y = year - (month <= 2);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int Date::day_of_week() const {
  const std::int64_t s = serial();
  return static_cast<int>(((s % 7) + 11) % 7);  // 1970-01-01 was a Thursday
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

Date date_from_serial(std::int64_t days) {
  // civil_from_days (Howard Hinnant)
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

Date parse_date(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
      d > 31) {
    throw std::invalid_argument("bad date: " + iso);
  }
  return Date{y, m, d};
}

Timestamp parse_timestamp(const std::string& iso) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int n =
      std::sscanf(iso.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (n < 6 || (sep != 'T' && sep != 't' && sep != ' ')) {
    throw std::invalid_argument("bad timestamp: " + iso);
  }
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    throw std::invalid_argument("bad time of day: " + iso);
  }
  return Timestamp{Date{y, mo, d}, h * 3600 + mi * 60 + s};
}

namespace {

bool is_year_end_break(const Date& d) {
  if (d.month == 12 && d.day >= 24 && d.day <= 26) return true;
  if (d.month == 12 && d.day == 31) return true;
  if (d.month == 1 && (d.day == 1 || d.day == 2)) return true;
  return false;
}

}  // namespace

std::vector<IntradayBar> filter_calendar(std::vector<IntradayBar> bars,
                                         const std::set<Date>& holidays) {
  std::stable_sort(bars.begin(), bars.end(),
                   [](const IntradayBar& a, const IntradayBar& b) { return a.ts < b.ts; });

  std::vector<IntradayBar> out;
  out.reserve(bars.size());
  for (const IntradayBar& bar : bars) {
    if (!(bar.price > 0.0)) throw std::invalid_argument("bar price must be positive");
    const Date& d = bar.ts.date;
    const int dow = d.day_of_week();
    if (dow == 0 || dow == 6) continue;
    if (is_year_end_break(d)) continue;
    if (holidays.count(d)) continue;
    // duplicate timestamp: keep the last price seen
    if (!out.empty() && out.back().ts == bar.ts) {
      out.back().price = bar.price;
      continue;
    }
    out.push_back(bar);
  }
  if (out.empty()) throw std::runtime_error("calendar filter removed every bar");
  return out;
}

double daily_return(const std::vector<IntradayBar>& bars_one_day) {
  if (bars_one_day.size() < 2) throw std::invalid_argument("daily_return: need >= 2 bars");
  double sum = 0.0;
  for (std::size_t k = 1; k < bars_one_day.size(); ++k) {
    sum += std::log(bars_one_day[k].price / bars_one_day[k - 1].price);
  }
  return sum;
}

double realized_variance(const std::vector<IntradayBar>& bars_one_day) {
  if (bars_one_day.size() < 2) throw std::invalid_argument("realized_variance: need >= 2 bars");
  double sum = 0.0;
  for (std::size_t k = 1; k < bars_one_day.size(); ++k) {
    const double r = std::log(bars_one_day[k].price / bars_one_day[k - 1].price);
    sum += r * r;
  }
  return sum;
}

double annualized_vol(double rv) {
  if (rv < 0.0) throw std::domain_error("annualized_vol: rv must be >= 0");
  return 100.0 * std::sqrt(250.0 * rv);
}

std::vector<DailyObservation> build_daily(const std::vector<IntradayBar>& bars,
                                          std::vector<std::string>* warnings) {
  std::map<std::int64_t, std::vector<IntradayBar>> by_day;
  std::map<std::int64_t, Date> day_dates;
  for (const IntradayBar& bar : bars) {
    by_day[bar.ts.date.serial()].push_back(bar);
    day_dates.emplace(bar.ts.date.serial(), bar.ts.date);
  }

  std::vector<DailyObservation> out;
  out.reserve(by_day.size());
  for (auto& [serial, day_bars] : by_day) {
    if (day_bars.size() < 2) {
      if (warnings) {
        warnings->push_back("dropping " + day_dates[serial].to_string() +
                            ": fewer than two bars");
      }
      continue;
    }
    DailyObservation obs;
    obs.date = day_dates[serial];
    obs.ret = daily_return(day_bars);
    obs.rv = std::max(realized_variance(day_bars), kRvFloor);
    out.push_back(obs);
  }
  return out;
}

ReturnPanel align_panel(const std::vector<DailyObservation>& a,
                        const std::vector<DailyObservation>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("align_panel: empty input");

  std::map<std::int64_t, DailyObservation> bmap;
  for (const auto& obs : b) bmap.emplace(obs.date.serial(), obs);

  ReturnPanel panel;
  for (const auto& obs : a) {
    auto it = bmap.find(obs.date.serial());
    if (it == bmap.end()) continue;
    panel.dates.push_back(obs.date);
    panel.asset1.push_back(obs);
    panel.asset2.push_back(it->second);
  }
  if (panel.size() < kMinPanelLength) {
    throw std::runtime_error("aligned panel too short for estimation: " +
                             std::to_string(panel.size()) + " < " +
                             std::to_string(kMinPanelLength) + " days");
  }
  return panel;
}

std::vector<IntradayBar> read_bars_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<IntradayBar> bars;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.back() == '\r') {
      if (!line.empty()) line.pop_back();
      if (line.empty()) continue;
    }
    if (first) {
      first = false;
      if (line.rfind("timestamp", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": bad line: " + line);
    IntradayBar bar;
    bar.ts = parse_timestamp(line.substr(0, comma));
    bar.price = std::stod(line.substr(comma + 1));
    if (!(bar.price > 0.0)) throw std::runtime_error(path + ": nonpositive price: " + line);
    bars.push_back(bar);
  }
  if (bars.empty()) throw std::runtime_error(path + ": no bars");
  return bars;
}

std::set<Date> read_holiday_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open holiday file " + path);
  std::set<Date> days;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    days.insert(parse_date(line));
  }
  return days;
}

void write_panel_csv(std::ostream& os, const ReturnPanel& panel) {
  os << "date,ret1,rv1,ret2,rv2\n";
  char buf[160];
  for (std::size_t t = 0; t < panel.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n",
                  panel.dates[t].to_string().c_str(), panel.asset1[t].ret, panel.asset1[t].rv,
                  panel.asset2[t].ret, panel.asset2[t].rv);
    os << buf;
  }
}

ReturnPanel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel " + path);
  ReturnPanel panel;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("date", 0) == 0) continue;
    }
    std::istringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() != 5) throw std::runtime_error(path + ": bad panel row: " + line);
    const Date d = parse_date(cols[0]);
    DailyObservation a{d, std::stod(cols[1]), std::stod(cols[2])};
    DailyObservation b{d, std::stod(cols[3]), std::stod(cols[4])};
    panel.dates.push_back(d);
    panel.asset1.push_back(a);
    panel.asset2.push_back(b);
  }
  if (panel.dates.empty()) throw std::runtime_error(path + ": empty panel");
  return panel;
}

}  // namespace dycop::md

#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace dycop::md {

// Calendar date; serial() follows the proleptic Gregorian civil-day count so
// ordering and weekday math are integer operations.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  std::int64_t serial() const;
  int day_of_week() const;  // 0 = Sunday ... 6 = Saturday
  std::string to_string() const;

  friend bool operator==(const Date&, const Date&) = default;
  friend auto operator<=>(const Date& a, const Date& b) { return a.serial() <=> b.serial(); }
};

Date parse_date(const std::string& iso);  // YYYY-MM-DD
Date date_from_serial(std::int64_t days);

struct Timestamp {
  Date date;
  int seconds_of_day = 0;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp& a, const Timestamp& b) {
    if (auto c = a.date <=> b.date; c != 0) return c;
    return a.seconds_of_day <=> b.seconds_of_day;
  }
};

Timestamp parse_timestamp(const std::string& iso);  // YYYY-MM-DD[Tt ]HH:MM[:SS]

struct IntradayBar {
  Timestamp ts;
  double price = 0.0;  // must be > 0
};

struct DailyObservation {
  Date date;
  double ret = 0.0;  // daily open-close log return
  double rv = 0.0;   // realized variance, floored away from zero
};

struct ReturnPanel {
  std::vector<Date> dates;
  std::vector<DailyObservation> asset1;
  std::vector<DailyObservation> asset2;

  std::size_t size() const { return dates.size(); }
};

inline constexpr double kRvFloor = 1e-12;
inline constexpr std::size_t kMinPanelLength = 50;

// Drops weekends, listed holidays, Dec 24-26 and Dec 31-Jan 2. Bars are
// sorted within each day; duplicate timestamps keep the last price.
std::vector<IntradayBar> filter_calendar(std::vector<IntradayBar> bars,
                                         const std::set<Date>& holidays);

// Sum of intraday log returns == log(last/first). Requires >= 2 bars.
double daily_return(const std::vector<IntradayBar>& bars_one_day);

// Sum of squared intraday log returns.
double realized_variance(const std::vector<IntradayBar>& bars_one_day);

// 100 * sqrt(250 * rv)
double annualized_vol(double rv);

// Collapse filtered bars into one observation per day; days with fewer than
// two bars are dropped (a warning per dropped day goes to `warnings` when
// non-null). rv below kRvFloor is raised to the floor.
std::vector<DailyObservation> build_daily(const std::vector<IntradayBar>& bars,
                                          std::vector<std::string>* warnings = nullptr);

// Inner join on dates, order preserved. Throws if the join is shorter than
// kMinPanelLength.
ReturnPanel align_panel(const std::vector<DailyObservation>& a,
                        const std::vector<DailyObservation>& b);

std::vector<IntradayBar> read_bars_csv(const std::string& path);
std::set<Date> read_holiday_file(const std::string& path);
void write_panel_csv(std::ostream& os, const ReturnPanel& panel);
ReturnPanel read_panel_csv(const std::string& path);

}  // namespace dycop::md

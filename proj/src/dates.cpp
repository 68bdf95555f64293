#include "fleetlife/dates.hpp"

#include <charconv>
#include <chrono>
#include <stdexcept>

namespace fleetlife {

namespace {

namespace chr = std::chrono;

chr::year_month_day to_ymd(const Date& d) {
  return chr::year_month_day{chr::year{d.year}, chr::month{static_cast<unsigned>(d.month)},
                             chr::day{static_cast<unsigned>(d.day)}};
}

Date from_ymd(const chr::year_month_day& ymd) {
  return Date{int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
}

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad date component '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Date parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    throw std::invalid_argument("bad date '" + std::string(s) + "' (expected YYYY-MM-DD)");
  }
  Date d{parse_int(s.substr(0, 4)), parse_int(s.substr(5, 2)), parse_int(s.substr(8, 2))};
  if (!to_ymd(d).ok()) {
    throw std::invalid_argument("invalid calendar date '" + std::string(s) + "'");
  }
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::int64_t to_days(const Date& d) {
  return chr::sys_days(to_ymd(d)).time_since_epoch().count();
}

Date from_days(std::int64_t days) {
  return from_ymd(chr::year_month_day{chr::sys_days{chr::days{days}}});
}

double years_between(const Date& a, const Date& b) {
  return double(to_days(b) - to_days(a)) / kDaysPerYear;
}

Date add_months(const Date& d, int months) {
  auto ymd = to_ymd(d) + chr::months{months};
  if (!ymd.ok()) {  // day overflowed the target month
    ymd = ymd.year() / ymd.month() / chr::last;
  }
  return from_ymd(ymd);
}

Date end_of_month(const Date& d) {
  return from_ymd(chr::year{d.year} / chr::month{static_cast<unsigned>(d.month)} / chr::last);
}

}  // namespace fleetlife

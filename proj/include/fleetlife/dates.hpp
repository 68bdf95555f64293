#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fleetlife {

/// Calendar date (proleptic Gregorian). Ages are computed as exact day
/// counts divided by 365.25.
struct Date {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  auto operator<=>(const Date&) const = default;
};

inline constexpr double kDaysPerYear = 365.25;

/// Parse an ISO-8601 date "YYYY-MM-DD". Throws std::invalid_argument on
/// malformed input or an impossible calendar day.
Date parse_date(std::string_view s);

std::string format_date(const Date& d);

/// Days since 1970-01-01.
std::int64_t to_days(const Date& d);
Date from_days(std::int64_t days);

/// Signed year count from a to b, day count / 365.25.
double years_between(const Date& a, const Date& b);

/// Calendar-aware month shift; day-of-month clamped to the target month.
Date add_months(const Date& d, int months);

Date end_of_month(const Date& d);

}  // namespace fleetlife

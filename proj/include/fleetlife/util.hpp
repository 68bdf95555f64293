#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fleetlife {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Split on a delimiter; fields are not quoted in any fleetlife format.
std::vector<std::string> split(std::string_view s, char delim);

/// FNV-1a over bytes; used for input digests and run ids.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// Shortest exact decimal form of a double (round-trips bit-for-bit).
std::string format_double(double v);

double parse_double(std::string_view s);
long parse_long(std::string_view s);

/// Run fn(i) for i in [0, n) on at most `jobs` threads. Results must be
/// written to per-index slots; the aggregation order then cannot depend
/// on the schedule.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace fleetlife

#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace fleetlife {

inline constexpr const char* kToolVersion = "0.1.0";

/// Reproducibility record written next to every command's outputs. The
/// run id is a pure function of command, inputs, and seed; the timestamp
/// is informational only and excluded from byte-identity checks.
struct RunManifest {
  std::string command;
  std::string tool_version = kToolVersion;
  std::map<std::string, std::string> input_digests;  // path -> fnv64 hex
  std::string config_hash;
  std::uint64_t seed = 0;
  bool seeded = false;
  std::string run_id;
  std::string created;  // ISO-8601 UTC

  void finalize();  // computes run_id from the fields above
  std::string to_json() const;
};

std::string digest_hex(const std::string& bytes);

}  // namespace fleetlife

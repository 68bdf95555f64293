#include "fleetlife/manifest.hpp"

#include <ctime>
#include <sstream>

#include <json.hpp>

#include "fleetlife/util.hpp"

namespace fleetlife {

std::string digest_hex(const std::string& bytes) { return hex64(fnv1a64(bytes)); }

void RunManifest::finalize() {
  std::ostringstream key;
  key << command << '\n' << tool_version << '\n' << config_hash << '\n';
  for (const auto& [path, digest] : input_digests) key << path << '=' << digest << '\n';
  if (seeded) key << "seed=" << seed << '\n';
  run_id = hex64(fnv1a64(key.str()));

  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  created = buf;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["inputs"] = input_digests;
  j["config_hash"] = config_hash;
  if (seeded) j["seed"] = seed;
  j["run_id"] = run_id;
  j["created"] = created;
  return j.dump(2) + "\n";
}

}  // namespace fleetlife

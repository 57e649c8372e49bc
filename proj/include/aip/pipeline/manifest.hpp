#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace aip {

struct Artifact {
  std::string path;  // relative to the output directory
  std::string sha256;

  bool operator==(const Artifact&) const = default;
};

struct StageRecord {
  std::string name;
  std::string key;     // digest of everything the stage depends on
  std::string status;  // done | failed
  std::string error;
  std::vector<Artifact> artifacts;
};

// manifest.json: one record per stage in execution order.
struct Manifest {
  std::string config_sha256;
  std::vector<StageRecord> stages;
  std::string last_good_stage;

  const StageRecord* find(const std::string& stage) const;
  void put(StageRecord record);
};

nlohmann::json to_json_value(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
std::optional<Manifest> read_manifest(const std::string& out_dir);
void write_manifest(const Manifest& m, const std::string& out_dir);

/// Hashes `relative_paths` under `out_dir`.
std::vector<Artifact> hash_artifacts(const std::string& out_dir, const std::vector<std::string>& relative_paths);
/// True when every artifact still exists with its recorded digest.
bool artifacts_intact(const std::string& out_dir, const std::vector<Artifact>& artifacts);

}  // namespace aip

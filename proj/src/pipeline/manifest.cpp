#include "aip/pipeline/manifest.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <iomanip>
#include <memory>
#include <sstream>

#include "aip/binary_io.hpp"
#include "aip/error.hpp"
#include "aip/pipeline/hash.hpp"

namespace aip {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1)
    fail(ErrorKind::Io, "SHA-256 computation failed");
  std::ostringstream out;
  for (unsigned int k = 0; k < length; ++k) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return out.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

const StageRecord* Manifest::find(const std::string& stage) const {
  for (const auto& s : stages)
    if (s.name == stage) return &s;
  return nullptr;
}

void Manifest::put(StageRecord record) {
  for (auto& s : stages)
    if (s.name == record.name) {
      s = std::move(record);
      return;
    }
  stages.push_back(std::move(record));
}

json to_json_value(const Manifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages) {
    json artifacts = json::array();
    for (const auto& a : s.artifacts) artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}});
    json record{{"name", s.name}, {"key", s.key}, {"status", s.status}, {"artifacts", artifacts}};
    if (!s.error.empty()) record["error"] = s.error;
    stages.push_back(record);
  }
  return {{"config", {{"path", "config.json"}, {"sha256", m.config_sha256}}}, {"last_good_stage", m.last_good_stage}, {"stages", stages}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  if (j.contains("config")) m.config_sha256 = j.at("config").value("sha256", "");
  m.last_good_stage = j.value("last_good_stage", "");
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.key = s.at("key").get<std::string>();
    r.status = s.at("status").get<std::string>();
    r.error = s.value("error", "");
    for (const auto& a : s.at("artifacts")) r.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>()});
    m.stages.push_back(std::move(r));
  }
  return m;
}

std::optional<Manifest> read_manifest(const std::string& out_dir) {
  const auto path = std::filesystem::path(out_dir) / "manifest.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return manifest_from_json(json::parse(read_file(path.string())));
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void write_manifest(const Manifest& m, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file((std::filesystem::path(out_dir) / "manifest.json").string(), to_json_value(m).dump(2) + "\n");
}

std::vector<Artifact> hash_artifacts(const std::string& out_dir, const std::vector<std::string>& relative_paths) {
  std::vector<Artifact> out;
  out.reserve(relative_paths.size());
  for (const auto& p : relative_paths) out.push_back({p, sha256_file((std::filesystem::path(out_dir) / p).string())});
  return out;
}

bool artifacts_intact(const std::string& out_dir, const std::vector<Artifact>& artifacts) {
  for (const auto& a : artifacts) {
    const auto path = std::filesystem::path(out_dir) / a.path;
    if (!std::filesystem::exists(path) || sha256_file(path.string()) != a.sha256) return false;
  }
  return true;
}

}  // namespace aip

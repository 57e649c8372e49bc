#pragma once

#include <json.hpp>

#include <memory>
#include <string>

#include "aip/recommenders/bpr.hpp"
#include "aip/recommenders/dvbpr.hpp"
#include "aip/recommenders/simrank.hpp"
#include "aip/recommenders/vbpr.hpp"

namespace aip {

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// `.rec` container: 8-byte magic, u64 header length, JSON header (kind,
// dims, training config, seed), the parameter block as float64 LE, then an
// embedded `.fex` extractor (u64 length, zero when absent).
struct RecordHeader {
  std::string kind;  // bpr | simrank | vbpr | amr | dvbpr
  nlohmann::json header;
};

RecordHeader read_record_header(const std::string& path);

void save_bpr(const BprModel& model, const std::string& path);
BprModel load_bpr(const std::string& path);

void save_ranker(const VisualRanker& model, const std::string& path);
/// Rebuilds a second-stage ranker; catalog caches are recomputed from `ds`.
std::unique_ptr<VisualRanker> load_ranker(const std::string& path, const InteractionDataset& ds);

/// Stable digest of every parameter a ranker scores with.
std::string model_digest(const VisualRanker& model);

}  // namespace aip

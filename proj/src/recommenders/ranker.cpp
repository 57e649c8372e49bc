#include "aip/recommenders/ranker.hpp"

namespace aip {

std::string to_string(RankerKind kind) {
  switch (kind) {
    case RankerKind::SimRank: return "simrank";
    case RankerKind::Vbpr: return "vbpr";
    case RankerKind::Dvbpr: return "dvbpr";
  }
  return "unknown";
}

RankerKind ranker_kind_from_string(const std::string& name) {
  if (name == "simrank") return RankerKind::SimRank;
  if (name == "vbpr" || name == "amr") return RankerKind::Vbpr;
  if (name == "dvbpr") return RankerKind::Dvbpr;
  fail(ErrorKind::Config, "unknown ranker '" + name + "'");
}

FeatureExtractor fixed_extractor(const InteractionDataset& ds, const std::string& descriptor, std::uint64_t seed) {
  auto fx = FeatureExtractor::create(descriptor, ds.image_shape(), seed);
  std::vector<Image> catalog;
  for (int i = 0; i < ds.num_items; ++i)
    if (!ds.is_cold(i)) catalog.push_back(ds.images[static_cast<std::size_t>(i)]);
  normalize_output_spread(fx, catalog);
  return fx;
}

}  // namespace aip

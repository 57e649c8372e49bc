#pragma once

#include <Eigen/Core>

#include <string>

#include "aip/data/dataset.hpp"
#include "aip/diffcore/extractor.hpp"

namespace aip {

enum class RankerKind { SimRank, Vbpr, Dvbpr };

std::string to_string(RankerKind kind);
RankerKind ranker_kind_from_string(const std::string& name);

/// The frozen image model shared by SimRank, VBPR and the classifier:
/// randomly initialised, then rescaled to unit feature spread over the
/// non-cold catalog images.
FeatureExtractor fixed_extractor(const InteractionDataset& ds, const std::string& descriptor, std::uint64_t seed);

// Second-stage ranker over a candidate set. Catalog items are scored with
// whatever identity parameters the model learned; images outside the catalog
// (cold or adversarial) are scored through their embedding alone.
class VisualRanker {
 public:
  virtual ~VisualRanker() = default;

  virtual RankerKind kind() const = 0;
  virtual int num_users() const = 0;
  /// The image model whose output this ranker consumes (fixed or trained).
  virtual const FeatureExtractor& extractor() const = 0;

  virtual double score_catalog(int user, int item) const = 0;
  virtual double score_embedding(int user, const Eigen::VectorXd& embedding) const = 0;

  Eigen::VectorXd embed(const Image& image) const { return extractor().forward(image); }
  double score_image(int user, const Image& image) const { return score_embedding(user, embed(image)); }
};

}  // namespace aip

#pragma once

#include <vector>

#include "aip/data/dataset.hpp"
#include "aip/recommenders/ranker.hpp"

namespace aip {

/// p_ui = -(1/|I_u+|) * sum_{j in I_u+} ||phi(X_i) - phi(X_j)||^2, always <= 0.
double simrank_score(const FeatureExtractor& extractor, const InteractionDataset& ds, int user, const Image& image);

// Nearest-neighbour ranker over fixed image features. Caches the feature of
// every catalog image and each user's training positives.
class SimRankModel final : public VisualRanker {
 public:
  SimRankModel(FeatureExtractor extractor, const InteractionDataset& ds);

  RankerKind kind() const override { return RankerKind::SimRank; }
  int num_users() const override { return static_cast<int>(profiles_.size()); }
  const FeatureExtractor& extractor() const override { return extractor_; }

  double score_catalog(int user, int item) const override;
  double score_embedding(int user, const Eigen::VectorXd& embedding) const override;

  const std::vector<int>& profile(int user) const { return profiles_[static_cast<std::size_t>(user)]; }
  const Eigen::MatrixXd& item_features() const { return features_; }

 private:
  FeatureExtractor extractor_;
  std::vector<std::vector<int>> profiles_;
  Eigen::MatrixXd features_;  // |I| x F
};

}  // namespace aip

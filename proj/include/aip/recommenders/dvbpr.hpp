#pragma once

#include <Eigen/Core>

#include <vector>

#include "aip/data/dataset.hpp"
#include "aip/recommenders/ranker.hpp"
#include "aip/recommenders/training.hpp"

namespace aip {

// p_ui = <theta_u, phi_e(X_i)> with phi_e trained jointly with theta.
class DvbprModel final : public VisualRanker {
 public:
  DvbprModel() = default;
  DvbprModel(Eigen::MatrixXd user_visual, FeatureExtractor extractor);

  RankerKind kind() const override { return RankerKind::Dvbpr; }
  int num_users() const override { return static_cast<int>(user_visual_.rows()); }
  const FeatureExtractor& extractor() const override { return extractor_; }

  double score_catalog(int user, int item) const override;
  double score_embedding(int user, const Eigen::VectorXd& embedding) const override;

  const Eigen::MatrixXd& user_visual() const { return user_visual_; }
  Eigen::MatrixXd& user_visual() { return user_visual_; }
  FeatureExtractor& mutable_extractor() { return extractor_; }

  /// Embeds every catalog image with the current extractor; required before score_catalog.
  void refresh_item_embeddings(const InteractionDataset& ds);
  const Eigen::MatrixXd& item_embeddings() const { return embeddings_; }

  TrainConfig config;

 private:
  Eigen::MatrixXd user_visual_;  // |U| x F
  FeatureExtractor extractor_;
  Eigen::MatrixXd embeddings_;   // |I| x F
};

/// Architecture used for phi_e: cfg.extractor with its final fc layer sized to cfg.factors.
std::string dvbpr_architecture(const TrainConfig& cfg);

DvbprModel dvbpr_train(const InteractionDataset& ds, const TrainConfig& cfg);
double dvbpr_score(const DvbprModel& model, int user, const Image& image);
/// Mean pairwise loss over a batch, embedding images with the model's current extractor.
double dvbpr_batch_loss(const DvbprModel& model, const InteractionDataset& ds, const std::vector<Triple>& batch);

}  // namespace aip

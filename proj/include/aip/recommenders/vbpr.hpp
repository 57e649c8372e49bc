#pragma once

#include <Eigen/Core>

#include <vector>

#include "aip/data/dataset.hpp"
#include "aip/recommenders/ranker.hpp"
#include "aip/recommenders/training.hpp"

namespace aip {

// p_ui = alpha + beta_u + beta_i + <gamma_u, gamma_i> + <theta_u, E phi(X_i)>
// with phi a fixed extractor. All parameters live in one flat vector laid
// out as [alpha | beta_u | beta_i | gamma_u | gamma_i | theta_u | E]; the
// accessors are column-major views into it. Images outside the catalog score
// with beta_i = 0 and gamma_i = 0.
class VbprModel final : public VisualRanker {
 public:
  using MatrixView = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixView = Eigen::Map<const Eigen::MatrixXd>;
  using VectorView = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

  VbprModel() = default;
  VbprModel(int users, int items, int factors, FeatureExtractor extractor);

  RankerKind kind() const override { return RankerKind::Vbpr; }
  int num_users() const override { return users_; }
  int num_items() const { return items_; }
  int factors() const { return factors_; }
  const FeatureExtractor& extractor() const override { return extractor_; }

  double score_catalog(int user, int item) const override;
  double score_embedding(int user, const Eigen::VectorXd& embedding) const override;

  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& parameters() { return params_; }

  double offset() const { return params_[0]; }
  double& offset() { return params_[0]; }
  ConstVectorView user_bias() const { return {params_.data() + user_bias_at(), users_}; }
  VectorView user_bias() { return {params_.data() + user_bias_at(), users_}; }
  ConstVectorView item_bias() const { return {params_.data() + item_bias_at(), items_}; }
  VectorView item_bias() { return {params_.data() + item_bias_at(), items_}; }
  ConstMatrixView user_factors() const { return {params_.data() + user_factors_at(), users_, factors_}; }
  MatrixView user_factors() { return {params_.data() + user_factors_at(), users_, factors_}; }
  ConstMatrixView item_factors() const { return {params_.data() + item_factors_at(), items_, factors_}; }
  MatrixView item_factors() { return {params_.data() + item_factors_at(), items_, factors_}; }
  ConstMatrixView user_visual() const { return {params_.data() + user_visual_at(), users_, factors_}; }
  MatrixView user_visual() { return {params_.data() + user_visual_at(), users_, factors_}; }
  ConstMatrixView projection() const { return {params_.data() + projection_at(), factors_, feature_dim()}; }
  MatrixView projection() { return {params_.data() + projection_at(), factors_, feature_dim()}; }

  /// Offset and length of the visual branch (theta_u followed by E) in parameters().
  Eigen::Index visual_offset() const { return user_visual_at(); }
  Eigen::Index visual_size() const { return params_.size() - user_visual_at(); }

  /// Computes phi for every catalog image; required before score_catalog.
  void set_item_features(Eigen::MatrixXd features);
  const Eigen::MatrixXd& item_features() const { return features_; }

  int feature_dim() const { return extractor_.output_dim(); }
  Eigen::Index user_bias_at() const { return 1; }
  Eigen::Index item_bias_at() const { return 1 + users_; }
  Eigen::Index user_factors_at() const { return item_bias_at() + items_; }
  Eigen::Index item_factors_at() const { return user_factors_at() + Eigen::Index(users_) * factors_; }
  Eigen::Index user_visual_at() const { return item_factors_at() + Eigen::Index(items_) * factors_; }
  Eigen::Index projection_at() const { return user_visual_at() + Eigen::Index(users_) * factors_; }

  TrainConfig config;
  bool adversarially_trained = false;

 private:
  int users_ = 0, items_ = 0, factors_ = 0;
  FeatureExtractor extractor_;
  Eigen::VectorXd params_;
  Eigen::MatrixXd features_;  // |I| x F, phi of catalog images
};

Eigen::MatrixXd catalog_features(const FeatureExtractor& extractor, const InteractionDataset& ds);

VbprModel vbpr_train(const InteractionDataset& ds, const FeatureExtractor& extractor, const TrainConfig& cfg);
/// VBPR with on-the-fly parameter perturbation of the visual branch; cfg.adv_weight is lambda_adv.
VbprModel amr_train(const InteractionDataset& ds, const FeatureExtractor& extractor, const TrainConfig& cfg);

double vbpr_score(const VbprModel& model, int user, const Image& image);

/// Mean pairwise loss over a batch.
double vbpr_batch_loss(const VbprModel& model, const std::vector<Triple>& batch);
/// Gradient of the mean pairwise loss with respect to parameters() (no L2 term).
Eigen::VectorXd vbpr_batch_gradient(const VbprModel& model, const std::vector<Triple>& batch);
/// eta * g / ||g|| over the visual branch of the batch-loss gradient g; zero elsewhere.
Eigen::VectorXd amr_perturbation(const VbprModel& model, const std::vector<Triple>& batch, double eta);

}  // namespace aip

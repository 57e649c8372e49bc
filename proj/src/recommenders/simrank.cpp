#include "aip/recommenders/simrank.hpp"

namespace aip {

namespace {

double mean_negative_sqdist(const Eigen::VectorXd& f, const std::vector<int>& profile, const auto& feature_of) {
  if (profile.empty()) fail(ErrorKind::Scoring, "user has no interacted items");
  double total = 0.0;
  for (int j : profile) total -= (f - feature_of(j)).squaredNorm();
  return total / static_cast<double>(profile.size());
}

}  // namespace

double simrank_score(const FeatureExtractor& extractor, const InteractionDataset& ds, int user, const Image& image) {
  if (user < 0 || user >= ds.num_users) fail(ErrorKind::Scoring, "user " + std::to_string(user) + " out of range");
  const auto& profile = ds.positives[static_cast<std::size_t>(user)];
  if (profile.empty()) fail(ErrorKind::Scoring, "user " + std::to_string(user) + " has no interacted items");
  const Eigen::VectorXd f = extractor.forward(image);
  return mean_negative_sqdist(f, profile, [&](int j) { return extractor.forward(ds.images[static_cast<std::size_t>(j)]); });
}

SimRankModel::SimRankModel(FeatureExtractor extractor, const InteractionDataset& ds)
    : extractor_(std::move(extractor)), profiles_(ds.positives) {
  features_.resize(ds.num_items, extractor_.output_dim());
  for (int i = 0; i < ds.num_items; ++i) features_.row(i) = extractor_.forward(ds.images[static_cast<std::size_t>(i)]).transpose();
}

double SimRankModel::score_catalog(int user, int item) const {
  return score_embedding(user, features_.row(item).transpose());
}

double SimRankModel::score_embedding(int user, const Eigen::VectorXd& embedding) const {
  const auto& profile = profiles_.at(static_cast<std::size_t>(user));
  if (profile.empty()) fail(ErrorKind::Scoring, "user " + std::to_string(user) + " has no interacted items");
  return mean_negative_sqdist(embedding, profile, [&](int j) { return features_.row(j).transpose(); });
}

}  // namespace aip

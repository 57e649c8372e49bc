#pragma once

#include <Eigen/Core>

#include <vector>

#include "aip/recommenders/training.hpp"

namespace aip {

// Pure collaborative-filtering first stage: score(u,i) = alpha + beta_i + <gamma_u, gamma_i>.
struct BprModel {
  Eigen::MatrixXd user_factors;  // |U| x d
  Eigen::MatrixXd item_factors;  // |I| x d
  Eigen::VectorXd item_bias;
  double offset = 0.0;
  TrainConfig config;

  double score(int user, int item) const {
    return offset + item_bias[item] + user_factors.row(user).dot(item_factors.row(item));
  }
  Eigen::VectorXd scores(int user) const;
  double squared_norm() const;
};

/// Per-triple SGD on sum -ln sigma(x_uij) + l2 * ||Theta||^2.
BprModel bpr_train(const InteractionDataset& ds, const TrainConfig& cfg);

/// Mean pairwise loss of `model` over `triples`.
double bpr_loss(const BprModel& model, const std::vector<Triple>& triples);

/// The K highest-scoring non-cold items outside the user's training
/// positives, ordered by (score desc, id asc).
std::vector<int> bpr_candidates(const BprModel& model, const InteractionDataset& ds, int user, int k);

}  // namespace aip

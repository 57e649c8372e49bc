#include <algorithm>
#include <numeric>

#include "aip/recommenders/bpr.hpp"

namespace aip {

Eigen::VectorXd BprModel::scores(int user) const {
  return (item_factors * user_factors.row(user).transpose() + item_bias).array() + offset;
}

double BprModel::squared_norm() const {
  return user_factors.squaredNorm() + item_factors.squaredNorm() + item_bias.squaredNorm() + offset * offset;
}

double bpr_loss(const BprModel& model, const std::vector<Triple>& triples) {
  if (triples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : triples) total += pairwise_loss(model.score(t.user, t.pos) - model.score(t.user, t.neg));
  return total / static_cast<double>(triples.size());
}

BprModel bpr_train(const InteractionDataset& ds, const TrainConfig& cfg) {
  validate_train_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 0.1);
  BprModel m;
  m.config = cfg;
  m.user_factors = Eigen::MatrixXd::NullaryExpr(ds.num_users, cfg.factors, [&] { return init(rng); });
  m.item_factors = Eigen::MatrixXd::NullaryExpr(ds.num_items, cfg.factors, [&] { return init(rng); });
  m.item_bias = Eigen::VectorXd::Zero(ds.num_items);

  const double lr = cfg.step_size;
  const double reg = 2.0 * cfg.l2;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto triples = epoch_triples(ds, rng);
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const auto [u, i, j] = triples[k];
      const double x = m.score(u, i) - m.score(u, j);
      if (!std::isfinite(x))
        fail(ErrorKind::Training, "non-finite BPR loss at epoch " + std::to_string(epoch) + ", triple " + std::to_string(k));
      const double s = pairwise_weight(x);
      const Eigen::RowVectorXd gu = m.user_factors.row(u);
      const Eigen::RowVectorXd diff = m.item_factors.row(i) - m.item_factors.row(j);
      m.user_factors.row(u) += lr * (s * diff - reg * gu);
      m.item_factors.row(i) += lr * (s * gu - reg * m.item_factors.row(i));
      m.item_factors.row(j) += lr * (-s * gu - reg * m.item_factors.row(j));
      m.item_bias[i] += lr * (s - reg * m.item_bias[i]);
      m.item_bias[j] += lr * (-s - reg * m.item_bias[j]);
    }
  }
  return m;
}

std::vector<int> bpr_candidates(const BprModel& model, const InteractionDataset& ds, int user, int k) {
  if (user < 0 || user >= ds.num_users) fail(ErrorKind::Argument, "user " + std::to_string(user) + " out of range");
  std::vector<int> rankable;
  for (int i = 0; i < ds.num_items; ++i)
    if (!ds.is_cold(i) && !ds.is_positive(user, i)) rankable.push_back(i);
  if (k < 0 || k > static_cast<int>(rankable.size()))
    fail(ErrorKind::Argument, "K=" + std::to_string(k) + " exceeds the " + std::to_string(rankable.size()) +
                                  " rankable items of user " + std::to_string(user));
  const Eigen::VectorXd s = model.scores(user);
  std::partial_sort(rankable.begin(), rankable.begin() + k, rankable.end(),
                    [&](int a, int b) { return s[a] > s[b] || (s[a] == s[b] && a < b); });
  rankable.resize(static_cast<std::size_t>(k));
  return rankable;
}

}  // namespace aip

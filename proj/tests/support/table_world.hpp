#pragma once

// A hand-built two-stage world small enough to re-rank by brute force.

#include <algorithm>
#include <memory>
#include <random>

#include "aip/eval/eval.hpp"
#include "support/oracles.hpp"

namespace aip::oracle {


// Catalog scores come from a table; outside images score w_u * pixel.
class TableRanker final : public VisualRanker {
 public:
  TableRanker(Eigen::MatrixXd table, Eigen::VectorXd weights)
      : table_(std::move(table)), weights_(std::move(weights)), fx_({{LayerKind::Fc, 1}}, {1, 1, 1}) {
    fx_.set_parameters(Eigen::Vector2d(1.0, 0.0));
  }
  RankerKind kind() const override { return RankerKind::Dvbpr; }
  int num_users() const override { return int(table_.rows()); }
  const FeatureExtractor& extractor() const override { return fx_; }
  double score_catalog(int u, int i) const override { return table_(u, i); }
  double score_embedding(int u, const Eigen::VectorXd& e) const override { return weights_[u] * e[0]; }

 private:
  Eigen::MatrixXd table_;
  Eigen::VectorXd weights_;
  FeatureExtractor fx_;
};

struct World {
  InteractionDataset ds;
  BprModel bpr;
  std::unique_ptr<TableRanker> ranker;
};

// 5 users, catalog items 0..9, cold items 10 and 11. Scores are drawn from a
// coarse grid so ties occur.
inline World make_world(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> grid(0, 6);
  World w;
  auto& ds = w.ds;
  ds.num_users = 5;
  ds.num_items = 12;
  ds.positives = {{0, 3}, {1}, {2, 5, 7}, {4}, {8, 9}};
  ds.test_item = {6, 3, 0, 9, 1};
  ds.cold_items = {10, 11};
  for (int i = 0; i < 12; ++i) ds.images.push_back(quantize(Image({1, 1, 1}, (i + 1) / 13.0)));
  w.bpr.user_factors = Eigen::MatrixXd::Zero(5, 1);
  w.bpr.item_factors = Eigen::MatrixXd::Zero(12, 1);
  w.bpr.item_bias = Eigen::VectorXd::Zero(12);
  for (int u = 0; u < 5; ++u) w.bpr.user_factors(u, 0) = grid(rng) - 3;
  for (int i = 0; i < 12; ++i) {
    w.bpr.item_factors(i, 0) = 0.5 * grid(rng);
    w.bpr.item_bias[i] = 0.25 * grid(rng);
  }
  Eigen::MatrixXd table(5, 12);
  for (int u = 0; u < 5; ++u)
    for (int i = 0; i < 12; ++i) table(u, i) = 0.1 * grid(rng);
  Eigen::VectorXd weights(5);
  for (int u = 0; u < 5; ++u) weights[u] = 0.2 * grid(rng);
  w.ranker = std::make_unique<TableRanker>(table, weights);
  return w;
}

// Candidate generation, injection and ranking done from scratch.
inline std::vector<std::vector<int>> oracle_lists(const World& w, int cold, double pixel, int k) {
  std::vector<std::vector<int>> out;
  for (int u = 0; u < w.ds.num_users; ++u) {
    std::vector<int> pool;
    std::vector<double> bpr_scores;
    for (int i = 0; i < w.ds.num_items; ++i) {
      const auto& p = w.ds.positives[std::size_t(u)];
      if (std::find(p.begin(), p.end(), i) != p.end()) continue;
      if (std::find(w.ds.cold_items.begin(), w.ds.cold_items.end(), i) != w.ds.cold_items.end()) continue;
      pool.push_back(i);
      bpr_scores.push_back(w.bpr.offset + w.bpr.item_bias[i] + w.bpr.user_factors(u, 0) * w.bpr.item_factors(i, 0));
    }
    auto ranked = brute_rank(pool, bpr_scores);
    std::vector<int> items(ranked.begin(), ranked.begin() + k);
    const int t = w.ds.test_item[std::size_t(u)];
    if (std::find(items.begin(), items.end(), t) == items.end()) items.push_back(t);
    items.push_back(cold);
    std::vector<double> scores;
    for (int i : items) scores.push_back(i == cold ? w.ranker->score_embedding(u, Eigen::VectorXd::Constant(1, pixel))
                                                   : w.ranker->score_catalog(u, i));
    out.push_back(brute_rank(items, scores));
  }
  return out;
}

inline double oracle_hr(const std::vector<std::vector<int>>& lists, int item, int n) {
  int hits = 0;
  for (const auto& l : lists) {
    const auto pos = std::find(l.begin(), l.end(), item) - l.begin();
    hits += pos < n;
  }
  return double(hits) / double(lists.size());
}

}  // namespace aip::oracle

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <random>

#include "aip/eval/eval.hpp"
#include "aip/recommenders/checkpoint.hpp"
#include "support/oracles.hpp"

using namespace aip;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.users = 60;
  c.items = 80;
  c.reserved_cold = 10;
  c.interactions_per_user = 6;
  c.image = {16, 16, 3};
  return c;
}

const InteractionDataset& small_ds() {
  static const InteractionDataset ds = [] {
    auto split = leave_one_out_split(generate_synthetic(small_config()), 2);
    return with_cold_items(split, select_cold_items(split, 10, 3), 3);
  }();
  return ds;
}

const InteractionDataset& desk_ds() {
  static const InteractionDataset ds = [] {
    auto split = leave_one_out_split(generate_synthetic(SynthConfig{}), 2);
    return with_cold_items(split, select_cold_items(split, 50, 3), 3);
  }();
  return ds;
}

TrainConfig quick(double step = 0.01, int epochs = 5) {
  TrainConfig c;
  c.epochs = epochs;
  c.step_size = step;
  return c;
}

// 1x1x1 images; features are 2 * pixel.
FeatureExtractor doubling() {
  FeatureExtractor fx({{LayerKind::Fc, 1}}, {1, 1, 1});
  fx.set_parameters(Eigen::Vector2d(2.0, 0.0));
  return fx;
}

}  // namespace

TEST(PairwiseLoss, ZeroMarginIsLn2) {
  EXPECT_NEAR(pairwise_loss(0.0), 0.693147180559945, 1e-12);
  EXPECT_NEAR(pairwise_loss(800.0), 0.0, 1e-300);
  EXPECT_NEAR(pairwise_loss(-800.0), 800.0, 1e-9);
  EXPECT_NEAR(pairwise_weight(0.0), 0.5, 1e-15);
}

TEST(Triples, SatisfyDefinition) {
  const auto& ds = small_ds();
  EXPECT_TRUE(sample_triples(ds, 0, 1).empty());
  for (const auto& t : sample_triples(ds, 2000, 1)) {
    EXPECT_TRUE(ds.is_positive(t.user, t.pos));
    EXPECT_FALSE(ds.is_positive(t.user, t.neg));
    EXPECT_FALSE(ds.is_cold(t.neg));
  }
  EXPECT_EQ(sample_triples(ds, 100, 9), sample_triples(ds, 100, 9));
}

TEST(Triples, SaturatedUserNeverSampled) {
  InteractionDataset ds;
  ds.num_users = 2;
  ds.num_items = 3;
  ds.positives = {{0, 1, 2}, {0}};
  for (const auto& t : sample_triples(ds, 500, 4)) EXPECT_EQ(t.user, 1);
  ds.positives = {{0, 1, 2}, {0, 1, 2}};
  try {
    sample_triples(ds, 5, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Sampling);
  }
}

// Each non-interacted item should be drawn with probability 1/|I \ I_u+|.
TEST(Triples, NegativesAreUniform) {
  InteractionDataset ds;
  ds.num_users = 1;
  ds.num_items = 21;
  ds.positives = {{3}};
  const int draws = 100000;
  std::map<int, int> counts;
  for (const auto& t : sample_triples(ds, draws, 12)) ++counts[t.neg];
  const double p = 1.0 / 20.0;
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  EXPECT_EQ(counts.size(), 20u);
  for (const auto& [item, n] : counts) EXPECT_LT(std::abs(n - draws * p), 3.0 * sigma) << "item " << item;
}

TEST(Bpr, LossDecreasesAndRegularisationShrinks) {
  const auto& ds = small_ds();
  auto cfg = quick(0.05, 20);
  cfg.l2 = 0.01;
  const auto probe = sample_triples(ds, 500, 77);
  auto short_cfg = cfg;
  short_cfg.epochs = 1;
  const auto m0 = bpr_train(ds, short_cfg);
  const auto m1 = bpr_train(ds, cfg);
  EXPECT_LT(bpr_loss(m1, probe), bpr_loss(m0, probe));
  EXPECT_LT(bpr_loss(m1, probe), std::log(2.0));
  auto heavy = cfg;
  heavy.l2 = 0.02;
  EXPECT_LT(bpr_train(ds, heavy).squared_norm(), m1.squared_norm());
}

TEST(Bpr, DeskAucAboveThreshold) {
  const auto& ds = desk_ds();
  TrainConfig cfg;
  cfg.step_size = 0.05;
  const auto m = bpr_train(ds, cfg);
  const double auc = leave_one_out_auc(ds, [&](int u, int i) { return m.score(u, i); }, 100, 5);
  EXPECT_GT(auc, 0.75);
}

TEST(Bpr, CandidatesAreNestedAndBounded) {
  const auto& ds = small_ds();
  const auto m = bpr_train(ds, quick(0.05, 3));
  const int u = 4;
  const int rankable = ds.num_items - int(ds.cold_items.size()) - int(ds.positives[u].size());
  const auto all = bpr_candidates(m, ds, u, rankable);
  EXPECT_EQ(int(all.size()), rankable);
  for (int i : all) {
    EXPECT_FALSE(ds.is_positive(u, i));
    EXPECT_FALSE(ds.is_cold(i));
  }
  try {
    bpr_candidates(m, ds, u, rankable + 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Argument);
  }
  const auto top = bpr_candidates(m, ds, u, 1);
  const auto scores = m.scores(u);
  for (int i : all) EXPECT_LE(scores[i], scores[top[0]]);
  for (int k1 = 1; k1 < 30; k1 += 7) {
    const auto a = bpr_candidates(m, ds, u, k1), b = bpr_candidates(m, ds, u, k1 + 5);
    for (int i : a) EXPECT_NE(std::find(b.begin(), b.end(), i), b.end());
  }
}

TEST(SimRank, ScoreIsNegativeMeanSquaredDistance) {
  InteractionDataset ds;
  ds.num_users = 1;
  ds.num_items = 3;
  ds.positives = {{1, 2}};
  ds.images = {Image({1, 1, 1}, 0.0), Image({1, 1, 1}, std::sqrt(2.0) / 2.0), Image({1, 1, 1}, 1.0)};
  const auto fx = doubling();
  EXPECT_NEAR(simrank_score(fx, ds, 0, ds.images[0]), -3.0, 1e-12);
  ds.positives = {{2, 1}};
  EXPECT_NEAR(simrank_score(fx, ds, 0, ds.images[0]), -3.0, 1e-12);
  ds.positives = {{2}};
  EXPECT_EQ(simrank_score(fx, ds, 0, ds.images[2]), 0.0);
  ds.positives = {{}};
  try {
    simrank_score(fx, ds, 0, ds.images[2]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Scoring);
  }
}

TEST(SimRank, ScoresNeverPositive) {
  const auto& ds = small_ds();
  const SimRankModel m(fixed_extractor(ds, "conv-small", 3), ds);
  for (int u = 0; u < ds.num_users; u += 7)
    for (int i = 0; i < ds.num_items; i += 5) EXPECT_LE(m.score_catalog(u, i), 0.0);
}

TEST(Vbpr, ZeroParametersScoreZero) {
  const auto& ds = small_ds();
  VbprModel m(ds.num_users, ds.num_items, 4, fixed_extractor(ds, "linear-8", 1));
  m.parameters().setZero();
  EXPECT_EQ(vbpr_score(m, 3, ds.images[5]), 0.0);
}

TEST(Vbpr, VisualTermIsLinearInFeatures) {
  std::mt19937_64 rng(6);
  const auto& ds = small_ds();
  VbprModel m(ds.num_users, ds.num_items, 4, fixed_extractor(ds, "linear-8", 1));
  m.parameters().setZero();
  m.user_visual() = Eigen::MatrixXd::Random(ds.num_users, 4);
  m.projection() = Eigen::MatrixXd::Random(4, 8);
  const auto f1 = oracle::random_vector(8, rng), f2 = oracle::random_vector(8, rng);
  for (int u = 0; u < 5; ++u)
    EXPECT_NEAR(m.score_embedding(u, f1 + f2), m.score_embedding(u, f1) + m.score_embedding(u, f2), 1e-12);
}

TEST(Vbpr, ProbeLossDecreases) {
  const auto& ds = small_ds();
  const auto fx = fixed_extractor(ds, "conv-small", 3);
  const auto probe = sample_triples(ds, 300, 8);
  auto cfg = quick(0.01, 1);
  const auto m0 = vbpr_train(ds, fx, cfg);
  cfg.epochs = 10;
  const auto m1 = vbpr_train(ds, fx, cfg);
  EXPECT_LT(vbpr_batch_loss(m1, probe), vbpr_batch_loss(m0, probe));
  EXPECT_LT(vbpr_batch_loss(m1, probe), std::log(2.0));
}

TEST(Vbpr, BatchGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const auto& ds = small_ds();
  auto m = vbpr_train(ds, fixed_extractor(ds, "linear-8", 3), quick(0.01, 1));
  const auto batch = sample_triples(ds, 32, 4);
  const auto g = vbpr_batch_gradient(m, batch);
  std::uniform_int_distribution<Eigen::Index> pick(0, m.parameters().size() - 1);
  for (int probe = 0; probe < 20; ++probe) {
    const auto k = pick(rng);
    const double h = 1e-5, keep = m.parameters()[k];
    m.parameters()[k] = keep + h;
    const double up = vbpr_batch_loss(m, batch);
    m.parameters()[k] = keep - h;
    const double down = vbpr_batch_loss(m, batch);
    m.parameters()[k] = keep;
    EXPECT_LT(oracle::relative_error(g[k], (up - down) / (2 * h), 1e-7), 1e-4);
  }
}

TEST(Amr, ZeroAdversarialWeightReproducesVbpr) {
  const auto& ds = small_ds();
  const auto fx = fixed_extractor(ds, "conv-small", 3);
  auto cfg = quick(0.01, 3);
  cfg.adv_weight = 0.0;
  const auto v = vbpr_train(ds, fx, cfg);
  const auto a = amr_train(ds, fx, cfg);
  ASSERT_EQ(v.parameters().size(), a.parameters().size());
  EXPECT_EQ(std::memcmp(v.parameters().data(), a.parameters().data(), sizeof(double) * std::size_t(v.parameters().size())), 0);
}

TEST(Amr, PerturbationRaisesBatchLoss) {
  const auto& ds = small_ds();
  const auto m = vbpr_train(ds, fixed_extractor(ds, "conv-small", 3), quick(0.01, 2));
  const auto batch = sample_triples(ds, 64, 5);
  const auto delta = amr_perturbation(m, batch, 1e-3);
  EXPECT_NEAR(delta.norm(), 1e-3, 1e-12);
  EXPECT_TRUE(delta.head(m.visual_offset()).isZero());
  auto perturbed = m;
  perturbed.parameters() += delta;
  EXPECT_GE(vbpr_batch_loss(perturbed, batch), vbpr_batch_loss(m, batch) - 1e-6);
}

TEST(Amr, AdversarialTrainingChangesParameters) {
  const auto& ds = small_ds();
  const auto fx = fixed_extractor(ds, "conv-small", 3);
  auto cfg = quick(0.01, 2);
  const auto v = vbpr_train(ds, fx, cfg);
  cfg.adv_weight = 1.0;
  const auto a = amr_train(ds, fx, cfg);
  EXPECT_FALSE(v.parameters() == a.parameters());
  EXPECT_TRUE(a.adversarially_trained);
}

TEST(Dvbpr, ScoreIsBilinear) {
  const auto& ds = small_ds();
  auto cfg = quick(0.01, 1);
  auto m = dvbpr_train(ds, cfg);
  const auto& img = ds.images[3];
  const double s = dvbpr_score(m, 2, img);
  m.user_visual() *= 2.0;
  EXPECT_NEAR(dvbpr_score(m, 2, img), 2.0 * s, 1e-12 * std::max(1.0, std::abs(s)));
  m.user_visual().setZero();
  EXPECT_EQ(dvbpr_score(m, 2, img), 0.0);
}

TEST(Dvbpr, ProbeLossDecreases) {
  const auto& ds = small_ds();
  const auto probe = sample_triples(ds, 300, 8);
  auto cfg = quick(0.01, 1);
  const auto m0 = dvbpr_train(ds, cfg);
  cfg.epochs = 5;
  const auto m1 = dvbpr_train(ds, cfg);
  EXPECT_LT(dvbpr_batch_loss(m1, ds, probe), dvbpr_batch_loss(m0, ds, probe));
}

// Cold items from a user's own cluster should outscore the rest on average.
TEST(Dvbpr, PrefersOwnClusterColdItems) {
  const auto& ds = desk_ds();
  auto cfg = quick(0.01, 5);
  const auto m = dvbpr_train(ds, cfg);
  double own = 0.0, other = 0.0;
  int n_own = 0, n_other = 0;
  for (int u = 0; u < ds.num_users; ++u)
    for (int c : ds.cold_items) {
      const double s = m.score_image(u, ds.images[std::size_t(c)]);
      if (ds.item_cluster[std::size_t(c)] == ds.user_cluster[std::size_t(u)]) {
        own += s;
        ++n_own;
      } else {
        other += s;
        ++n_other;
      }
    }
  EXPECT_GT(own / n_own, other / n_other);
}

TEST(Ranking, MonotoneTransformPreservesOrder) {
  std::mt19937_64 rng(3);
  std::vector<int> items(40);
  std::iota(items.begin(), items.end(), 100);
  std::shuffle(items.begin(), items.end(), rng);
  std::vector<double> scores, transformed;
  std::uniform_int_distribution<int> coarse(-5, 5);
  for (std::size_t k = 0; k < items.size(); ++k) {
    scores.push_back(0.5 * coarse(rng));  // plenty of ties
    transformed.push_back(std::exp(3.0 * scores.back()) + 7.0);
  }
  EXPECT_EQ(make_ranked_list(0, items, scores).items, make_ranked_list(0, items, transformed).items);
  EXPECT_EQ(make_ranked_list(0, items, scores).items, oracle::brute_rank(items, scores));
}

TEST(Scoring, IsReadOnly) {
  const auto& ds = small_ds();
  const auto m = vbpr_train(ds, fixed_extractor(ds, "linear-8", 3), quick(0.01, 1));
  const auto before = model_digest(m);
  double sink = 0.0;
  for (int k = 0; k < 10000; ++k) sink += m.score_catalog(k % ds.num_users, k % (ds.num_items - 10));
  EXPECT_TRUE(std::isfinite(sink));
  EXPECT_EQ(model_digest(m), before);
}

TEST(Checkpoint, RoundTripsEveryKind) {
  const auto& ds = small_ds();
  const auto dir = std::filesystem::temp_directory_path() / "aip_unit_rec";
  std::filesystem::create_directories(dir);
  const auto fx = fixed_extractor(ds, "conv-small", 3);

  const auto bpr = bpr_train(ds, quick(0.05, 1));
  save_bpr(bpr, (dir / "bpr.rec").string());
  const auto bpr2 = load_bpr((dir / "bpr.rec").string());
  EXPECT_EQ(bpr2.user_factors, bpr.user_factors);
  EXPECT_EQ(bpr2.item_bias, bpr.item_bias);

  const SimRankModel sim(fx, ds);
  const auto vbpr = vbpr_train(ds, fx, quick(0.01, 1));
  auto amr_cfg = quick(0.01, 1);
  amr_cfg.adv_weight = 0.5;
  const auto amr = amr_train(ds, fx, amr_cfg);
  const auto dvbpr = dvbpr_train(ds, quick(0.01, 1));
  const std::vector<std::pair<std::string, const VisualRanker*>> models{
      {"sim", &sim}, {"vbpr", &vbpr}, {"amr", &amr}, {"dvbpr", &dvbpr}};
  for (const auto& [name, model] : models) {
    const auto path = (dir / (name + ".rec")).string();
    save_ranker(*model, path);
    const auto back = load_ranker(path, ds);
    EXPECT_EQ(model_digest(*back), model_digest(*model)) << name;
    EXPECT_EQ(back->score_catalog(1, 2), model->score_catalog(1, 2)) << name;
  }
  EXPECT_EQ(read_record_header((dir / "amr.rec").string()).kind, "amr");
  std::filesystem::remove_all(dir);
}

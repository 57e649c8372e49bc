#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "aip/eval/eval.hpp"
#include "support/table_world.hpp"

using namespace aip;

using oracle::make_world;
using oracle::oracle_hr;
using oracle::oracle_lists;


TEST(BruteForceOracle, ListsAndHitRatesMatchExactly) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto w = make_world(seed);
    for (int k : {0, 1, 4, 7}) {
      const InjectionContext ctx(*w.ranker, w.bpr, w.ds, k);
      for (int cold : {10, 11}) {
        const auto& img = w.ds.images[std::size_t(cold)];
        const auto lists = ctx.inject_and_rank(cold, img);
        const auto expect = oracle_lists(w, cold, img.pixels()[0], k);
        ASSERT_EQ(lists.size(), expect.size());
        for (std::size_t u = 0; u < lists.size(); ++u) EXPECT_EQ(lists[u].items, expect[u]) << "seed " << seed << " user " << u;
        for (int n : {1, 3, 5}) {
          EXPECT_EQ(hit_rate(lists, cold, n), oracle_hr(expect, cold, n));
          std::vector<std::vector<int>> by_user;
          double test_hits = 0.0;
          for (std::size_t u = 0; u < expect.size(); ++u)
            test_hits += oracle_hr({expect[u]}, w.ds.test_item[u], n);
          EXPECT_EQ(test_item_hit_rate(lists, w.ds, n), test_hits / 5.0);
          EXPECT_TRUE(slot_conservation_violations(lists, n).empty());
        }
      }
    }
  }
}

TEST(BruteForceOracle, PredictionShiftMatches) {
  const auto w = make_world(3);
  const auto& a = w.ds.images[10];
  const auto& b = w.ds.images[11];
  double expect = 0.0;
  for (int u = 0; u < 5; ++u)
    expect += w.ranker->score_embedding(u, b.pixels()) - w.ranker->score_embedding(u, a.pixels());
  EXPECT_EQ(prediction_shift(*w.ranker, a, b), expect / 5.0);
  EXPECT_EQ(prediction_shift(*w.ranker, a, a), 0.0);
}

TEST(BruteForceOracle, ConditionRowsMatch) {
  const auto w = make_world(5);
  const InjectionContext ctx(*w.ranker, w.bpr, w.ds, 4);
  const std::vector<int> cold{10, 11};
  const std::vector<Image> coop{w.ds.images[10], w.ds.images[11]};
  const std::vector<Image> adv{quantize(Image({1, 1, 1}, 1.0)), quantize(Image({1, 1, 1}, 0.9))};
  const auto rep = evaluate_condition(ctx, cold, coop, adv, 3);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto c = oracle_lists(w, cold[k], coop[k].pixels()[0], 4);
    const auto a = oracle_lists(w, cold[k], adv[k].pixels()[0], 4);
    EXPECT_EQ(rep.rows[k].hr_cooperative, oracle_hr(c, cold[k], 3));
    EXPECT_EQ(rep.rows[k].hr_adversarial, oracle_hr(a, cold[k], 3));
    EXPECT_EQ(rep.rows[k].delta_p, prediction_shift(*w.ranker, coop[k], adv[k]));
  }
  EXPECT_EQ(rep.slot_violations, 0);
}

TEST(Injection, EdgeCases) {
  const auto w = make_world(7);
  const InjectionContext ctx(*w.ranker, w.bpr, w.ds, 0);
  const auto lists = ctx.inject_and_rank(10, w.ds.images[10]);
  for (std::size_t u = 0; u < lists.size(); ++u) {
    ASSERT_EQ(lists[u].items.size(), 2u);
    EXPECT_NE(std::find(lists[u].items.begin(), lists[u].items.end(), w.ds.test_item[u]), lists[u].items.end());
  }
  EXPECT_EQ(hit_rate(lists, 10, 2), 1.0);
  EXPECT_EQ(hit_rate(lists, 10, 50), 1.0);
  try {
    hit_rate(lists, 11, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Evaluation);
    EXPECT_NE(std::string(e.what()).find("user 0"), std::string::npos);
  }
  EXPECT_THROW(ctx.inject_and_rank(10, Image()), Error);
}

TEST(Injection, TopScoredColdItemRanksFirst) {
  const auto w = make_world(8);
  const InjectionContext ctx(*w.ranker, w.bpr, w.ds, 5);
  const auto lists = ctx.inject_and_rank_embedding(11, Eigen::VectorXd::Constant(1, 1e6));
  for (std::size_t u = 0; u < lists.size(); ++u)
    if (w.ranker->score_embedding(int(u), Eigen::VectorXd::Constant(1, 1.0)) > 0.0) EXPECT_EQ(lists[u].items[0], 11);
}

TEST(Injection, NoAttackLeavesRowsIdentical) {
  const auto w = make_world(9);
  const InjectionContext ctx(*w.ranker, w.bpr, w.ds, 3);
  const std::vector<Image> imgs{w.ds.images[10], w.ds.images[11]};
  const auto rep = evaluate_condition(ctx, {10, 11}, imgs, imgs, 3);
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.hr_adversarial, r.hr_cooperative);
    EXPECT_EQ(r.test_hr_adversarial, r.test_hr_cooperative);
    EXPECT_EQ(r.delta_p, 0.0);
  }
  EXPECT_FALSE(rep.p_integrity.has_value());
}

TEST(Injection, UserOrderDoesNotMatter) {
  const auto w = make_world(11);
  const InjectionContext ctx(*w.ranker, w.bpr, w.ds, 4);
  auto lists = ctx.inject_and_rank(10, w.ds.images[10]);
  const double hr = hit_rate(lists, 10, 3), thr = test_item_hit_rate(lists, w.ds, 3);
  std::reverse(lists.begin(), lists.end());
  EXPECT_EQ(hit_rate(lists, 10, 3), hr);
  EXPECT_EQ(test_item_hit_rate(lists, w.ds, 3), thr);
}

TEST(PairedTTest, MatchesFrozenReference) {
  // scipy.stats.ttest_rel(after, before).pvalue
  EXPECT_NEAR(paired_t_test({0, 0, 0, 0, 0}, {1, 1, 1, 1, -1}), 0.20799999999999982, 1e-6);
  EXPECT_NEAR(paired_t_test({0.1, 0.2, 0.0, 0.05, 0.3, 0.12}, {0.4, 0.25, 0.3, 0.1, 0.5, 0.33}), 0.010189027725554587,
              1e-6);
}

TEST(PairedTTest, MatchesIncompleteBetaOracle) {
  EXPECT_NEAR(oracle::paired_t_p({0, 0, 0, 0, 0}, {1, 1, 1, 1, -1}), 0.20799999999999982, 1e-9);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 60;
    std::vector<double> a, b;
    const double shift = 0.3 * g(rng);
    for (int k = 0; k < n; ++k) {
      a.push_back(g(rng));
      b.push_back(a.back() + shift + g(rng));
    }
    EXPECT_NEAR(paired_t_test(a, b), oracle::paired_t_p(a, b), 1e-6) << "n=" << n;
  }
}

TEST(PairedTTest, DegenerateAndExtremeInputs) {
  try {
    paired_t_test({1, 2, 3}, {1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Statistics);
  }
  EXPECT_THROW(paired_t_test({1}, {2}), Error);
  EXPECT_THROW(paired_t_test({1, 2}, {2}), Error);
  std::vector<double> before(30, 0.0), after;
  for (int k = 0; k < 30; ++k) after.push_back(10.0 + 1e-3 * (k % 3));
  EXPECT_LT(paired_t_test(before, after), 1e-6);
}

TEST(Sweep, IdenticalImagesNeutralisedAtMildestLevel) {
  const auto w = make_world(12);
  const InjectionContext ctx(*w.ranker, w.bpr, w.ds, 3);
  const std::vector<Image> imgs{quantize(Image({1, 1, 1}, 0.4)), quantize(Image({1, 1, 1}, 0.6))};
  const auto base = evaluate_condition(ctx, {10, 11}, imgs, imgs, 3).hr_cooperative;
  const auto r = defense_sweep(ctx, {10, 11}, imgs, imgs, base, DefenseKind::BitDepth, 3, true);
  ASSERT_TRUE(r.level.has_value());
  EXPECT_EQ(*r.level, 7);
  EXPECT_EQ(r.levels.size(), 6u);
}

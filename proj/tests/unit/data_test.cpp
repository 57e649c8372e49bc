#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include "aip/data/dataset.hpp"
#include "support/oracles.hpp"

using namespace aip;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.users = 40;
  c.items = 60;
  c.reserved_cold = 10;
  c.interactions_per_user = 5;
  c.image = {8, 8, 3};
  return c;
}

InteractionDataset tiny(std::vector<std::vector<int>> positives, int items) {
  InteractionDataset ds;
  ds.num_users = int(positives.size());
  ds.num_items = items;
  ds.positives = std::move(positives);
  for (int i = 0; i < items; ++i) ds.images.push_back(quantize(Image({4, 4, 3}, 0.5)));
  ds.item_cluster.assign(std::size_t(items), 0);
  ds.user_cluster.assign(std::size_t(ds.num_users), 0);
  return ds;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("aip_unit_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Quantize, RoundsHalfAwayFromZero) {
  Image img({1, 1, 1}, 0.5);
  EXPECT_DOUBLE_EQ(quantize(img).pixels()[0], 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(quantize(Image({1, 1, 1}, 1.0)).pixels()[0], 1.0);
  EXPECT_TRUE(quantize(img).quantized());
}

TEST(Quantize, IsIdempotent) {
  std::mt19937_64 rng(1);
  const auto q = quantize(oracle::random_image({8, 8, 3}, rng, 0.0, 1.0));
  EXPECT_EQ(quantize(q), q);
  EXPECT_TRUE(on_grid(q));
}

TEST(Quantize, RejectsOutOfRange) {
  Image img({1, 2, 1}, 0.5);
  img.pixels()[1] = 1.01;
  try {
    quantize(img);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(Image, LinfLevels) {
  Image a({2, 2, 1}, 0.0), b({2, 2, 1}, 0.0);
  b.at(1, 0, 0) = 7.0 / 255.0;
  EXPECT_EQ(linf_levels(quantize(a), quantize(b)), 7);
  EXPECT_NEAR(linf(a, b), 7.0 / 255.0, 1e-15);
}

TEST(ImageIo, PngRoundTripIsExact) {
  std::mt19937_64 rng(2);
  const auto q = quantize(oracle::random_image({9, 7, 3}, rng, 0.0, 1.0));
  const auto dir = scratch("png");
  std::filesystem::create_directories(dir);
  save_image(q, (dir / "a.png").string());
  EXPECT_EQ(load_image((dir / "a.png").string()), q);
  EXPECT_THROW(load_image((dir / "missing.png").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(Synthetic, IsDeterministic) {
  EXPECT_EQ(generate_synthetic(small_config()), generate_synthetic(small_config()));
  auto other = small_config();
  other.seed = 8;
  EXPECT_FALSE(generate_synthetic(other) == generate_synthetic(small_config()));
}

TEST(Synthetic, BasicInvariants) {
  const auto c = small_config();
  const auto ds = generate_synthetic(c);
  EXPECT_EQ(ds.num_items, c.items + c.reserved_cold);
  EXPECT_EQ(ds.images.size(), std::size_t(ds.num_items));
  for (const auto& p : ds.positives) {
    EXPECT_EQ(p.size(), std::size_t(c.interactions_per_user));
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    for (int i : p) EXPECT_LT(i, c.items);
  }
  for (const auto& img : ds.images) EXPECT_TRUE(on_grid(img));
  EXPECT_TRUE(validate_dataset(ds).empty());
}

TEST(Synthetic, InfeasibleConfigFails) {
  auto c = small_config();
  c.interactions_per_user = c.items + 1;
  try {
    generate_synthetic(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  c = small_config();
  c.interactions_per_user = 1;
  EXPECT_THROW(generate_synthetic(c), Error);
}

// Chi-square goodness of fit against uniform over 50 items. With affinity 0
// the only non-uniformity could come from the popularity weights.
TEST(Synthetic, ZeroSkewGivesUniformPopularity) {
  SynthConfig c;
  c.users = 600;
  c.items = 50;
  c.reserved_cold = 0;
  c.interactions_per_user = 10;
  c.popularity_skew = 0.0;
  c.affinity = 0.0;
  c.image = {4, 4, 1};
  const auto ds = generate_synthetic(c);
  std::vector<double> counts(50, 0.0);
  for (const auto& p : ds.positives)
    for (int i : p) counts[std::size_t(i)] += 1.0;
  const double expected = 600.0 * 10.0 / 50.0;
  double chi2 = 0.0;
  for (double n : counts) chi2 += (n - expected) * (n - expected) / expected;
  // scipy.stats.chi2.ppf(0.99, 49)
  EXPECT_LT(chi2, 74.91947430847816);

  c.popularity_skew = 1.0;
  const auto skewed = generate_synthetic(c);
  std::fill(counts.begin(), counts.end(), 0.0);
  for (const auto& p : skewed.positives)
    for (int i : p) counts[std::size_t(i)] += 1.0;
  chi2 = 0.0;
  for (double n : counts) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_GT(chi2, 74.91947430847816);
}

TEST(Synthetic, ImagesCarryClusterSignal) {
  const auto ds = generate_synthetic(SynthConfig{});
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (int a = 0; a < 200; ++a)
    for (int b = a + 1; b < 200; ++b) {
      const double d = (ds.images[std::size_t(a)].pixels() - ds.images[std::size_t(b)].pixels()).norm();
      if (ds.item_cluster[std::size_t(a)] == ds.item_cluster[std::size_t(b)]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  EXPECT_LT(intra / n_intra, inter / n_inter);
}

TEST(Split, TwoPositivesLeaveSingleton) {
  const auto ds = leave_one_out_split(tiny({{0, 1}, {1, 2}}, 3), 5);
  for (int u = 0; u < 2; ++u) {
    ASSERT_EQ(ds.positives[std::size_t(u)].size(), 1u);
    EXPECT_NE(ds.positives[std::size_t(u)][0], ds.test_item[std::size_t(u)]);
  }
  EXPECT_TRUE(ds.test_item[0] == 0 || ds.test_item[0] == 1);
}

TEST(Split, ConservesInteractionsAndIsDeterministic) {
  const auto full = generate_synthetic(small_config());
  const auto a = leave_one_out_split(full, 3), b = leave_one_out_split(full, 3);
  EXPECT_EQ(a.training_interactions(), full.training_interactions() - std::size_t(full.num_users));
  EXPECT_EQ(a.test_item, b.test_item);
  for (int u = 0; u < a.num_users; ++u) {
    const auto& orig = full.positives[std::size_t(u)];
    EXPECT_TRUE(std::binary_search(orig.begin(), orig.end(), a.test_item[std::size_t(u)]));
    EXPECT_FALSE(a.is_positive(u, a.test_item[std::size_t(u)]));
  }
  EXPECT_TRUE(validate_dataset(a).empty());
}

TEST(Split, UserWithOneInteractionNamed) {
  try {
    leave_one_out_split(tiny({{0, 1}, {2}}, 3), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Split);
    EXPECT_NE(std::string(e.what()).find("user 1"), std::string::npos) << e.what();
  }
}

TEST(ColdItems, DisjointFromInteractions) {
  const auto ds = leave_one_out_split(generate_synthetic(small_config()), 3);
  EXPECT_TRUE(select_cold_items(ds, 0, 1).empty());
  const auto cold = select_cold_items(ds, 10, 4);
  ASSERT_EQ(cold.size(), 10u);
  EXPECT_EQ(std::set<int>(cold.begin(), cold.end()).size(), 10u);
  for (int u = 0; u < ds.num_users; ++u) {
    for (int c : cold) {
      EXPECT_FALSE(ds.is_positive(u, c));
      EXPECT_NE(ds.test_item[std::size_t(u)], c);
    }
  }
  try {
    select_cold_items(ds, ds.num_items + 1, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Selection);
  }
  const auto with = with_cold_items(ds, cold, 4);
  EXPECT_TRUE(validate_dataset(with).empty());
  EXPECT_TRUE(with.is_cold(cold[0]));
}

TEST(Validator, ReportsBrokenInvariants) {
  auto ds = leave_one_out_split(generate_synthetic(small_config()), 3);
  ds = with_cold_items(ds, select_cold_items(ds, 5, 1), 1);
  auto broken = ds;
  broken.positives[0].push_back(broken.cold_items[0]);
  EXPECT_FALSE(validate_dataset(broken).empty());
  broken = ds;
  broken.images.pop_back();
  EXPECT_FALSE(validate_dataset(broken).empty());
}

TEST(DatasetIo, RoundTrips) {
  auto ds = leave_one_out_split(generate_synthetic(small_config()), 3);
  ds = with_cold_items(ds, select_cold_items(ds, 5, 9), 9);
  const auto dir = scratch("dataset");
  save_dataset(ds, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "images" / "0.png"));
  EXPECT_EQ(load_dataset(dir.string()), ds);
  std::filesystem::remove_all(dir);
}

TEST(Popularity, MostPopularBreaksTiesBySmallerId) {
  auto ds = tiny({{1, 2}, {1, 2}, {0, 3}}, 4);
  EXPECT_EQ(ds.most_popular_item(), 1);
}

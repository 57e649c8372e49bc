#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aip/data/image.hpp"

namespace aip {

struct SynthConfig {
  int users = 200;
  int items = 500;
  int reserved_cold = 50;  // extra items generated with images but never interacted with
  int latent_dim = 8;
  int clusters = 8;
  int interactions_per_user = 10;
  ImageShape image{32, 32, 3};
  double popularity_skew = 0.5;  // Zipf exponent over a random popularity order
  double affinity = 3.0;         // weight of <user latent, item latent> in the interaction odds
  double cluster_spread = 0.8;   // scale of cluster centres
  double item_spread = 1.0;      // item offset from its cluster centre
  double user_spread = 0.5;
  double contrast = 0.09;        // pixel amplitude per unit of latent
  double max_frequency = 8.0;    // highest basis frequency, cycles per image side
  double pixel_noise = 0.05;
  std::uint64_t seed = 7;

  bool operator==(const SynthConfig&) const = default;
};

// Users 0..U-1, items 0..I-1. `positives` holds the training interactions
// (I_u+) for every user; after a leave-one-out split `test_item[u]` holds the
// held-out item, otherwise it is -1. Cold items never interact and are
// excluded from training.
struct InteractionDataset {
  int num_users = 0;
  int num_items = 0;
  std::vector<std::vector<int>> positives;  // sorted ascending
  std::vector<int> test_item;
  std::vector<int> cold_items;  // sorted ascending
  std::vector<Image> images;    // indexed by item id
  std::vector<int> item_cluster;
  std::vector<int> user_cluster;
  SynthConfig config;
  std::uint64_t split_seed = 0;
  std::uint64_t cold_seed = 0;

  bool is_split() const { return !test_item.empty(); }
  bool is_cold(int item) const;
  bool is_positive(int user, int item) const;
  std::size_t training_interactions() const;
  ImageShape image_shape() const { return images.empty() ? ImageShape{} : images.front().shape(); }

  /// Interaction counts per item over training positives plus test items.
  std::vector<int> item_popularity() const;
  /// Most-interacted training item; ties go to the smaller id.
  int most_popular_item() const;

  bool operator==(const InteractionDataset&) const = default;
};

InteractionDataset generate_synthetic(const SynthConfig& config);

/// Holds out one uniformly chosen interaction per user as that user's test item.
InteractionDataset leave_one_out_split(const InteractionDataset& ds, std::uint64_t seed);

/// Draws n distinct interaction-free items (sorted ascending).
std::vector<int> select_cold_items(const InteractionDataset& ds, int n, std::uint64_t seed);
InteractionDataset with_cold_items(InteractionDataset ds, std::vector<int> cold, std::uint64_t seed = 0);

/// Every violated dataset invariant, empty when the dataset is consistent.
std::vector<std::string> validate_dataset(const InteractionDataset& ds);

void save_image(const Image& image, const std::string& path);
Image load_image(const std::string& path);

void save_dataset(const InteractionDataset& ds, const std::string& dir);
InteractionDataset load_dataset(const std::string& dir);

}  // namespace aip

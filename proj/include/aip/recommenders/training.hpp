#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aip/data/dataset.hpp"

namespace aip {

struct TrainConfig {
  int factors = 16;       // latent length (gamma) and visual embedding length (theta)
  double step_size = 0.05;
  double l2 = 1e-4;       // lambda_Theta
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 11;
  double adv_weight = 0.0;   // lambda_adv (AMR only)
  double adv_epsilon = 0.5;  // norm of the parameter perturbation (AMR only)
  std::string extractor = "conv-small";  // architecture of the trainable extractor (DVBPR only)

  bool operator==(const TrainConfig&) const = default;
};

void validate_train_config(const TrainConfig& cfg);

struct Triple {
  int user;
  int pos;
  int neg;
  bool operator==(const Triple&) const = default;
};

/// Bootstrap sample: user uniform over users that have a positive and a
/// valid negative, positive uniform in I_u+, negative uniform over
/// non-cold items outside I_u+ (by rejection).
std::vector<Triple> sample_triples(const InteractionDataset& ds, std::size_t n, std::uint64_t seed);

/// One pass: every training interaction once, in shuffled order, each with one sampled negative.
std::vector<Triple> epoch_triples(const InteractionDataset& ds, std::mt19937_64& rng);

/// Number of items a user can draw as a negative.
int negative_pool_size(const InteractionDataset& ds, int user);

/// -ln sigma(x), computed as softplus(-x).
inline double pairwise_loss(double x) { return std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
/// sigma(-x) = -d/dx pairwise_loss(x)
inline double pairwise_weight(double x) {
  return x >= 0.0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
}

/// Leave-one-out AUC: for each user, the fraction of `negatives` random
/// non-interacted items scored below the held-out test item (ties count half).
template <typename ScoreFn>
double leave_one_out_auc(const InteractionDataset& ds, ScoreFn&& score, int negatives, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> item(0, ds.num_items - 1);
  double total = 0.0;
  int users = 0;
  for (int u = 0; u < ds.num_users; ++u) {
    const int t = ds.test_item[static_cast<std::size_t>(u)];
    if (t < 0) continue;
    const double st = score(u, t);
    double wins = 0.0;
    for (int k = 0; k < negatives; ++k) {
      int j;
      do {
        j = item(rng);
      } while (j == t || ds.is_positive(u, j) || ds.is_cold(j));
      const double sj = score(u, j);
      wins += st > sj ? 1.0 : (st == sj ? 0.5 : 0.0);
    }
    total += wins / negatives;
    ++users;
  }
  return users ? total / users : 0.0;
}

}  // namespace aip

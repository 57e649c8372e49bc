#include <algorithm>

#include "aip/recommenders/training.hpp"

namespace aip {

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.factors <= 0 || cfg.epochs <= 0 || cfg.batch_size <= 0)
    fail(ErrorKind::Config, "factors, epochs and batch size must be positive");
  if (!(cfg.step_size > 0.0)) fail(ErrorKind::Config, "step size must be positive");
  if (cfg.l2 < 0.0) fail(ErrorKind::Config, "l2 weight must be non-negative");
  if (cfg.adv_weight < 0.0 || cfg.adv_epsilon < 0.0)
    fail(ErrorKind::Config, "adversarial weight and perturbation must be non-negative");
}

int negative_pool_size(const InteractionDataset& ds, int user) {
  return ds.num_items - static_cast<int>(ds.cold_items.size()) -
         static_cast<int>(ds.positives[static_cast<std::size_t>(user)].size());
}

namespace {

int draw_negative(const InteractionDataset& ds, int user, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> item(0, ds.num_items - 1);
  int j;
  do {
    j = item(rng);
  } while (ds.is_positive(user, j) || ds.is_cold(j));
  return j;
}

std::vector<int> eligible_users(const InteractionDataset& ds) {
  std::vector<int> users;
  for (int u = 0; u < ds.num_users; ++u)
    if (!ds.positives[static_cast<std::size_t>(u)].empty() && negative_pool_size(ds, u) > 0) users.push_back(u);
  return users;
}

}  // namespace

std::vector<Triple> sample_triples(const InteractionDataset& ds, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  const auto users = eligible_users(ds);
  if (users.empty()) fail(ErrorKind::Sampling, "no user has both a positive and a negative item");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_user(0, users.size() - 1);
  std::vector<Triple> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int u = users[pick_user(rng)];
    const auto& pos = ds.positives[static_cast<std::size_t>(u)];
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
    const int i = pos[pick_pos(rng)];
    out.push_back({u, i, draw_negative(ds, u, rng)});
  }
  return out;
}

std::vector<Triple> epoch_triples(const InteractionDataset& ds, std::mt19937_64& rng) {
  const auto users = eligible_users(ds);
  if (users.empty()) fail(ErrorKind::Sampling, "no user has both a positive and a negative item");
  std::vector<std::pair<int, int>> pairs;
  for (int u : users)
    for (int i : ds.positives[static_cast<std::size_t>(u)]) pairs.emplace_back(u, i);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::vector<Triple> out;
  out.reserve(pairs.size());
  for (const auto& [u, i] : pairs) out.push_back({u, i, draw_negative(ds, u, rng)});
  return out;
}

}  // namespace aip

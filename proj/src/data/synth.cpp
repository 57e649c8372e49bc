#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aip/data/dataset.hpp"

namespace aip {

namespace {

void check_config(const SynthConfig& c) {
  if (c.users <= 0 || c.items <= 0 || c.latent_dim <= 0 || c.clusters <= 0 || c.reserved_cold < 0)
    fail(ErrorKind::Config, "synthetic dataset counts must be positive");
  if (c.image.height <= 0 || c.image.width <= 0 || c.image.channels <= 0)
    fail(ErrorKind::Config, "invalid image shape " + c.image.str());
  if (c.interactions_per_user < 2)
    fail(ErrorKind::Config, "each user needs at least 2 interactions for leave-one-out");
  if (c.interactions_per_user > c.items)
    fail(ErrorKind::Config, "interactions per user (" + std::to_string(c.interactions_per_user) +
                                ") exceed the item count (" + std::to_string(c.items) + ")");
  if (c.popularity_skew < 0.0 || c.contrast < 0.0 || c.pixel_noise < 0.0)
    fail(ErrorKind::Config, "skew, contrast and noise must be non-negative");
  if (!(c.max_frequency >= 0.5)) fail(ErrorKind::Config, "max_frequency must be at least 0.5");
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = normal(rng);
  return v;
}

// One pattern per latent dimension: a few random sinusoids per channel,
// normalised to unit peak.
std::vector<Eigen::VectorXd> basis_images(std::mt19937_64& rng, int count, ImageShape shape, double max_frequency) {
  std::uniform_real_distribution<double> freq(0.5, max_frequency), phase(0.0, 2.0 * M_PI), amp(-1.0, 1.0);
  std::vector<Eigen::VectorXd> basis;
  for (int b = 0; b < count; ++b) {
    Image pattern(shape);
    for (int c = 0; c < shape.channels; ++c) {
      for (int wave = 0; wave < 3; ++wave) {
        const double fy = freq(rng), fx = freq(rng), ph = phase(rng), a = amp(rng);
        for (int y = 0; y < shape.height; ++y)
          for (int x = 0; x < shape.width; ++x)
            pattern.at(y, x, c) += a * std::sin(2.0 * M_PI * (fy * y / shape.height + fx * x / shape.width) + ph);
      }
    }
    Eigen::VectorXd v = pattern.pixels();
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak > 0.0) v /= peak;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace

InteractionDataset generate_synthetic(const SynthConfig& config) {
  check_config(config);
  std::mt19937_64 rng(config.seed);
  const int d = config.latent_dim;
  const int total_items = config.items + config.reserved_cold;

  std::vector<Eigen::VectorXd> centres;
  for (int k = 0; k < config.clusters; ++k) centres.push_back(gaussian(rng, d, config.cluster_spread));

  InteractionDataset ds;
  ds.num_users = config.users;
  ds.num_items = total_items;
  ds.config = config;

  std::vector<Eigen::VectorXd> item_latent;
  for (int i = 0; i < total_items; ++i) {
    const int k = i % config.clusters;
    ds.item_cluster.push_back(k);
    item_latent.push_back(centres[static_cast<std::size_t>(k)] + gaussian(rng, d, config.item_spread));
  }
  std::uniform_int_distribution<int> pick_cluster(0, config.clusters - 1);
  std::vector<Eigen::VectorXd> user_latent;
  for (int u = 0; u < config.users; ++u) {
    const int k = pick_cluster(rng);
    ds.user_cluster.push_back(k);
    user_latent.push_back(centres[static_cast<std::size_t>(k)] + gaussian(rng, d, config.user_spread));
  }

  // Images: 0.5 grey plus the item latent rendered through the shared basis, plus pixel noise.
  const auto basis = basis_images(rng, d, config.image, config.max_frequency);
  std::normal_distribution<double> noise(0.0, config.pixel_noise);
  for (int i = 0; i < total_items; ++i) {
    Eigen::VectorXd px = Eigen::VectorXd::Constant(config.image.size(), 0.5);
    for (int j = 0; j < d; ++j) px += config.contrast * item_latent[static_cast<std::size_t>(i)][j] * basis[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < px.size(); ++k) px[k] = std::clamp(px[k] + noise(rng), 0.0, 1.0);
    ds.images.push_back(quantize(Image(config.image, std::move(px))));
  }

  // Zipf-like popularity over a random ordering of the interactable items.
  std::vector<int> order(static_cast<std::size_t>(config.items));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> log_pop(static_cast<std::size_t>(config.items));
  for (int r = 0; r < config.items; ++r)
    log_pop[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = -config.popularity_skew * std::log(r + 1.0);

  // Weighted sampling without replacement via exponential keys: largest log(u)/w wins.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double inv_sqrt_d = 1.0 / std::sqrt(double(d));
  ds.positives.resize(static_cast<std::size_t>(config.users));
  std::vector<std::pair<double, int>> keys(static_cast<std::size_t>(config.items));
  for (int u = 0; u < config.users; ++u) {
    std::vector<double> logits(static_cast<std::size_t>(config.items));
    for (int i = 0; i < config.items; ++i)
      logits[static_cast<std::size_t>(i)] =
          log_pop[static_cast<std::size_t>(i)] +
          config.affinity * inv_sqrt_d * user_latent[static_cast<std::size_t>(u)].dot(item_latent[static_cast<std::size_t>(i)]);
    const double top = *std::max_element(logits.begin(), logits.end());
    for (int i = 0; i < config.items; ++i) {
      const double w = std::exp(logits[static_cast<std::size_t>(i)] - top);
      double r = unit(rng);
      while (r <= 0.0) r = unit(rng);
      keys[static_cast<std::size_t>(i)] = {w > 0.0 ? std::log(r) / w : -INFINITY, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + config.interactions_per_user, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    auto& pos = ds.positives[static_cast<std::size_t>(u)];
    for (int k = 0; k < config.interactions_per_user; ++k) pos.push_back(keys[static_cast<std::size_t>(k)].second);
    std::sort(pos.begin(), pos.end());
  }
  return ds;
}

}  // namespace aip

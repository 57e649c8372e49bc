#include "aip/recommenders/dvbpr.hpp"

#include <map>

#include "aip/diffcore/optimizer.hpp"

namespace aip {

DvbprModel::DvbprModel(Eigen::MatrixXd user_visual, FeatureExtractor extractor)
    : user_visual_(std::move(user_visual)), extractor_(std::move(extractor)) {
  if (user_visual_.cols() != extractor_.output_dim())
    fail(ErrorKind::Dimension, "user embedding length must equal the extractor output dimension");
}

double DvbprModel::score_catalog(int user, int item) const {
  if (item < 0 || item >= embeddings_.rows()) fail(ErrorKind::Scoring, "DVBPR item embeddings not computed");
  return user_visual_.row(user).dot(embeddings_.row(item));
}

double DvbprModel::score_embedding(int user, const Eigen::VectorXd& embedding) const {
  if (embedding.size() != user_visual_.cols()) fail(ErrorKind::Dimension, "embedding length does not match theta_u");
  return user_visual_.row(user).dot(embedding);
}

void DvbprModel::refresh_item_embeddings(const InteractionDataset& ds) {
  embeddings_.resize(ds.num_items, extractor_.output_dim());
  for (int i = 0; i < ds.num_items; ++i) embeddings_.row(i) = extractor_.forward(ds.images[static_cast<std::size_t>(i)]).transpose();
}

double dvbpr_score(const DvbprModel& model, int user, const Image& image) { return model.score_image(user, image); }

std::string dvbpr_architecture(const TrainConfig& cfg) {
  auto layers = parse_architecture(cfg.extractor);
  if (layers.back().kind != LayerKind::Fc) layers.push_back({LayerKind::Fc, cfg.factors});
  layers.back().out = cfg.factors;
  return format_architecture(layers);
}

double dvbpr_batch_loss(const DvbprModel& model, const InteractionDataset& ds, const std::vector<Triple>& batch) {
  if (batch.empty()) return 0.0;
  double loss = 0.0;
  for (const auto& [u, i, j] : batch) {
    const Eigen::VectorXd d = model.embed(ds.images[static_cast<std::size_t>(i)]) - model.embed(ds.images[static_cast<std::size_t>(j)]);
    loss += pairwise_loss(model.user_visual().row(u).dot(d));
  }
  return loss / static_cast<double>(batch.size());
}

DvbprModel dvbpr_train(const InteractionDataset& ds, const TrainConfig& cfg) {
  validate_train_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  auto extractor = FeatureExtractor::create(dvbpr_architecture(cfg), ds.image_shape(), rng());
  std::normal_distribution<double> init(0.0, 0.1);
  Eigen::MatrixXd theta = Eigen::MatrixXd::NullaryExpr(ds.num_users, cfg.factors, [&] { return init(rng); });
  DvbprModel m(std::move(theta), std::move(extractor));
  m.config = cfg;

  OptimizerState theta_opt = OptimizerState::adam(cfg.step_size);
  OptimizerState fx_opt = OptimizerState::adam(cfg.step_size);
  const double scale_l2 = 2.0 * cfg.l2;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto triples = epoch_triples(ds, rng);
    for (std::size_t start = 0, b = 0; start < triples.size(); start += static_cast<std::size_t>(cfg.batch_size), ++b) {
      const std::size_t stop = std::min(triples.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);

      std::map<int, Eigen::VectorXd> embedding, upstream;
      for (std::size_t k = start; k < stop; ++k)
        for (int item : {triples[k].pos, triples[k].neg})
          if (!embedding.count(item)) embedding.emplace(item, m.embed(ds.images[static_cast<std::size_t>(item)]));

      Eigen::MatrixXd dtheta = Eigen::MatrixXd::Zero(m.user_visual().rows(), m.user_visual().cols());
      for (std::size_t k = start; k < stop; ++k) {
        const auto [u, i, j] = triples[k];
        const Eigen::VectorXd d = embedding[i] - embedding[j];
        const double x = m.user_visual().row(u).dot(d);
        if (!std::isfinite(x))
          fail(ErrorKind::Training, "non-finite DVBPR loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
        const double c = -pairwise_weight(x) * scale;
        dtheta.row(u) += c * d.transpose();
        const Eigen::VectorXd t = c * m.user_visual().row(u).transpose();
        auto add = [&](int item, const Eigen::VectorXd& g) {
          auto [it, fresh] = upstream.emplace(item, g);
          if (!fresh) it->second += g;
        };
        add(i, t);
        add(j, -t);
      }
      Eigen::VectorXd dparams = scale_l2 * m.extractor().parameters();
      for (const auto& [item, g] : upstream)
        dparams += m.extractor().param_gradient(ds.images[static_cast<std::size_t>(item)], g);
      dtheta += scale_l2 * m.user_visual();

      Eigen::Map<Eigen::VectorXd> theta_flat(m.user_visual().data(), m.user_visual().size());
      optimizer_step(theta_opt, theta_flat, Eigen::Map<const Eigen::VectorXd>(dtheta.data(), dtheta.size()), Direction::Descend);
      Eigen::VectorXd params = m.extractor().parameters();
      optimizer_step(fx_opt, params, dparams, Direction::Descend);
      m.mutable_extractor().set_parameters(std::move(params));
    }
  }
  m.refresh_item_embeddings(ds);
  return m;
}

}  // namespace aip

#include "aip/recommenders/vbpr.hpp"

#include "aip/diffcore/optimizer.hpp"

namespace aip {

VbprModel::VbprModel(int users, int items, int factors, FeatureExtractor extractor)
    : users_(users), items_(items), factors_(factors), extractor_(std::move(extractor)) {
  if (users <= 0 || items <= 0 || factors <= 0) fail(ErrorKind::Dimension, "VBPR dimensions must be positive");
  params_ = Eigen::VectorXd::Zero(projection_at() + Eigen::Index(factors_) * feature_dim());
}

void VbprModel::set_item_features(Eigen::MatrixXd features) {
  if (features.rows() != items_ || features.cols() != feature_dim())
    fail(ErrorKind::Dimension, "item feature table must be |I| x F");
  features_ = std::move(features);
}

double VbprModel::score_catalog(int user, int item) const {
  if (features_.rows() != items_) fail(ErrorKind::Scoring, "VBPR item features not computed");
  return offset() + user_bias()[user] + item_bias()[item] + user_factors().row(user).dot(item_factors().row(item)) +
         user_visual().row(user).dot(projection() * features_.row(item).transpose());
}

double VbprModel::score_embedding(int user, const Eigen::VectorXd& embedding) const {
  if (embedding.size() != feature_dim()) fail(ErrorKind::Dimension, "embedding length does not match the extractor");
  return offset() + user_bias()[user] + user_visual().row(user).dot(projection() * embedding);
}

double vbpr_score(const VbprModel& model, int user, const Image& image) { return model.score_image(user, image); }

Eigen::MatrixXd catalog_features(const FeatureExtractor& extractor, const InteractionDataset& ds) {
  Eigen::MatrixXd features(ds.num_items, extractor.output_dim());
  for (int i = 0; i < ds.num_items; ++i) features.row(i) = extractor.forward(ds.images[static_cast<std::size_t>(i)]).transpose();
  return features;
}

namespace {

// Mean pairwise loss and its gradient for the parameters `params` laid out as in `model`.
double batch_gradient(const VbprModel& model, const Eigen::VectorXd& params, const std::vector<Triple>& batch,
                      Eigen::VectorXd* grad) {
  const int U = model.num_users(), I = model.num_items(), K = model.factors(), F = model.feature_dim();
  Eigen::Map<const Eigen::VectorXd> bi(params.data() + model.item_bias_at(), I);
  Eigen::Map<const Eigen::MatrixXd> gu(params.data() + model.user_factors_at(), U, K);
  Eigen::Map<const Eigen::MatrixXd> gi(params.data() + model.item_factors_at(), I, K);
  Eigen::Map<const Eigen::MatrixXd> tu(params.data() + model.user_visual_at(), U, K);
  Eigen::Map<const Eigen::MatrixXd> E(params.data() + model.projection_at(), K, F);
  const auto& feats = model.item_features();

  if (grad) grad->setZero(params.size());
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& [u, i, j] : batch) {
    const Eigen::VectorXd fd = (feats.row(i) - feats.row(j)).transpose();
    const Eigen::VectorXd v = E * fd;
    const double x = bi[i] - bi[j] + gu.row(u).dot(gi.row(i) - gi.row(j)) + tu.row(u).dot(v);
    if (!std::isfinite(x)) return x;
    loss += pairwise_loss(x);
    if (!grad) continue;
    const double c = -pairwise_weight(x) * scale;
    auto& g = *grad;
    g[model.item_bias_at() + i] += c;
    g[model.item_bias_at() + j] -= c;
    Eigen::Map<Eigen::MatrixXd> dgu(g.data() + model.user_factors_at(), U, K);
    Eigen::Map<Eigen::MatrixXd> dgi(g.data() + model.item_factors_at(), I, K);
    Eigen::Map<Eigen::MatrixXd> dtu(g.data() + model.user_visual_at(), U, K);
    Eigen::Map<Eigen::MatrixXd> dE(g.data() + model.projection_at(), K, F);
    dgu.row(u) += c * (gi.row(i) - gi.row(j));
    dgi.row(i) += c * gu.row(u);
    dgi.row(j) -= c * gu.row(u);
    dtu.row(u) += c * v.transpose();
    dE.noalias() += (c * tu.row(u).transpose()) * fd.transpose();
  }
  return loss * scale;
}

Eigen::VectorXd visual_perturbation(const VbprModel& model, const Eigen::VectorXd& grad, double eta) {
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(grad.size());
  const auto g = grad.segment(model.visual_offset(), model.visual_size());
  const double norm = g.norm();
  if (norm > 0.0) delta.segment(model.visual_offset(), model.visual_size()) = eta * g / norm;
  return delta;
}

VbprModel train_visual_bpr(const InteractionDataset& ds, const FeatureExtractor& extractor, const TrainConfig& cfg,
                           double adv_weight) {
  validate_train_config(cfg);
  VbprModel m(ds.num_users, ds.num_items, cfg.factors, extractor);
  m.config = cfg;
  m.adversarially_trained = adv_weight > 0.0;
  m.set_item_features(catalog_features(extractor, ds));

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 0.1);
  for (Eigen::Index k = m.user_factors_at(); k < m.parameters().size(); ++k) m.parameters()[k] = init(rng);

  OptimizerState opt = OptimizerState::adam(cfg.step_size);
  Eigen::VectorXd grad, adv_grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto triples = epoch_triples(ds, rng);
    for (std::size_t start = 0, b = 0; start < triples.size(); start += static_cast<std::size_t>(cfg.batch_size), ++b) {
      const std::vector<Triple> batch(triples.begin() + static_cast<std::ptrdiff_t>(start),
                                      triples.begin() + static_cast<std::ptrdiff_t>(std::min(triples.size(), start + static_cast<std::size_t>(cfg.batch_size))));
      const double loss = batch_gradient(m, m.parameters(), batch, &grad);
      if (!std::isfinite(loss))
        fail(ErrorKind::Training, "non-finite VBPR loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      if (adv_weight > 0.0) {
        const Eigen::VectorXd perturbed = m.parameters() + visual_perturbation(m, grad, cfg.adv_epsilon);
        const double adv_loss = batch_gradient(m, perturbed, batch, &adv_grad);
        if (!std::isfinite(adv_loss))
          fail(ErrorKind::Training, "non-finite AMR loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
        grad += adv_weight * adv_grad;
      }
      grad += 2.0 * cfg.l2 * m.parameters();
      optimizer_step(opt, m.parameters(), grad, Direction::Descend);
    }
  }
  return m;
}

}  // namespace

double vbpr_batch_loss(const VbprModel& model, const std::vector<Triple>& batch) {
  if (batch.empty()) return 0.0;
  return batch_gradient(model, model.parameters(), batch, nullptr);
}

Eigen::VectorXd vbpr_batch_gradient(const VbprModel& model, const std::vector<Triple>& batch) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.parameters().size());
  if (!batch.empty()) batch_gradient(model, model.parameters(), batch, &grad);
  return grad;
}

Eigen::VectorXd amr_perturbation(const VbprModel& model, const std::vector<Triple>& batch, double eta) {
  return visual_perturbation(model, vbpr_batch_gradient(model, batch), eta);
}

VbprModel vbpr_train(const InteractionDataset& ds, const FeatureExtractor& extractor, const TrainConfig& cfg) {
  return train_visual_bpr(ds, extractor, cfg, 0.0);
}

VbprModel amr_train(const InteractionDataset& ds, const FeatureExtractor& extractor, const TrainConfig& cfg) {
  return train_visual_bpr(ds, extractor, cfg, cfg.adv_weight);
}

}  // namespace aip

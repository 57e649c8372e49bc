#include <chrono>
#include <cmath>
#include <random>

#include "aip/attacks/attacks.hpp"
#include "aip/diffcore/optimizer.hpp"

namespace aip {

Eigen::VectorXd Classifier::logits(const Image& image) const { return weight * extractor.forward(image) + bias; }

int Classifier::predict(const Image& image) const {
  Eigen::Index best;
  logits(image).maxCoeff(&best);
  return static_cast<int>(best);
}

namespace {

// Softmax cross-entropy and d(loss)/d(logits).
double cross_entropy(const Eigen::VectorXd& z, int target, Eigen::VectorXd* dz) {
  const double top = z.maxCoeff();
  const Eigen::VectorXd e = (z.array() - top).exp().matrix();
  const double total = e.sum();
  if (dz) {
    *dz = e / total;
    (*dz)[target] -= 1.0;
  }
  return -(z[target] - top - std::log(total));
}

}  // namespace

double Classifier::loss(const Image& image, int target, Eigen::VectorXd* pixel_gradient) const {
  if (target < 0 || target >= classes()) fail(ErrorKind::Argument, "target class out of range");
  const Eigen::VectorXd f = extractor.forward(image);
  Eigen::VectorXd dz;
  const double value = cross_entropy(weight * f + bias, target, &dz);
  if (pixel_gradient) *pixel_gradient = extractor.input_gradient(image, weight.transpose() * dz);
  return value;
}

Classifier train_classifier(const FeatureExtractor& extractor, const InteractionDataset& ds, int epochs, double step_size,
                            std::uint64_t seed) {
  if (ds.item_cluster.size() != static_cast<std::size_t>(ds.num_items))
    fail(ErrorKind::Training, "dataset carries no class labels");
  const int classes = *std::max_element(ds.item_cluster.begin(), ds.item_cluster.end()) + 1;
  std::vector<int> items;
  for (int i = 0; i < ds.num_items; ++i)
    if (!ds.is_cold(i)) items.push_back(i);
  Eigen::MatrixXd features(static_cast<Eigen::Index>(items.size()), extractor.output_dim());
  for (std::size_t k = 0; k < items.size(); ++k)
    features.row(static_cast<Eigen::Index>(k)) = extractor.forward(ds.images[static_cast<std::size_t>(items[k])]).transpose();

  Classifier clf{extractor, Eigen::MatrixXd::Zero(classes, extractor.output_dim()), Eigen::VectorXd::Zero(classes)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.01);
  clf.weight = clf.weight.unaryExpr([&](double) { return init(rng); });

  const Eigen::Index n_w = clf.weight.size();
  OptimizerState opt = OptimizerState::adam(step_size);
  Eigen::VectorXd params(n_w + classes);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(clf.weight.rows(), clf.weight.cols());
    Eigen::VectorXd db = Eigen::VectorXd::Zero(classes);
    for (std::size_t k = 0; k < items.size(); ++k) {
      const Eigen::VectorXd f = features.row(static_cast<Eigen::Index>(k)).transpose();
      Eigen::VectorXd dz;
      cross_entropy(clf.weight * f + clf.bias, ds.item_cluster[static_cast<std::size_t>(items[k])], &dz);
      dw += dz * f.transpose();
      db += dz;
    }
    const double scale = 1.0 / static_cast<double>(items.size());
    Eigen::VectorXd grad(n_w + classes);
    grad << Eigen::Map<const Eigen::VectorXd>(dw.data(), n_w) * scale, db * scale;
    params << Eigen::Map<const Eigen::VectorXd>(clf.weight.data(), n_w), clf.bias;
    optimizer_step(opt, params, grad, Direction::Descend);
    clf.weight = Eigen::Map<const Eigen::MatrixXd>(params.data(), clf.weight.rows(), clf.weight.cols());
    clf.bias = params.tail(classes);
  }
  return clf;
}

int most_popular_class(const InteractionDataset& ds) {
  if (ds.item_cluster.empty()) fail(ErrorKind::Argument, "dataset carries no class labels");
  const int classes = *std::max_element(ds.item_cluster.begin(), ds.item_cluster.end()) + 1;
  std::vector<long> counts(static_cast<std::size_t>(classes), 0);
  for (const auto& pos : ds.positives)
    for (int i : pos) ++counts[static_cast<std::size_t>(ds.item_cluster[static_cast<std::size_t>(i)])];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

AttackResult classifier_targeted(const Image& image, const Classifier& classifier, const AttackConfig& cfg) {
  validate_attack_config(cfg);
  if (cfg.kind != AttackKind::Fgsm && cfg.kind != AttackKind::Pgd)
    fail(ErrorKind::Config, "classifier_targeted called with a " + to_string(cfg.kind) + " config");
  const auto start = std::chrono::steady_clock::now();
  const Image original = quantize(image);
  const bool fgsm = cfg.kind == AttackKind::Fgsm;
  const int steps = fgsm ? 1 : cfg.iterations;
  const double step = fgsm ? cfg.epsilon / 255.0 : cfg.step_size;

  AttackResult result;
  Image x = original;
  for (int k = 0; k < steps; ++k) {
    Eigen::VectorXd grad;
    const double value = classifier.loss(x, cfg.target_class, &grad);
    if (!std::isfinite(value)) fail(ErrorKind::Attack, "non-finite classifier loss at iteration " + std::to_string(k));
    result.trace.push_back(value);
    const Eigen::VectorXd stepped = x.pixels() - step * grad.array().sign().matrix();
    x = project_and_clip(original, Image(x.shape(), stepped), cfg.epsilon);
  }
  result.trace.push_back(classifier.loss(x, cfg.target_class));
  result.image = quantize(x);
  result.linf = linf(result.image, original);
  result.linf_levels = linf_levels(result.image, original);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace aip

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "aip/data/dataset.hpp"
#include "aip/diffcore/extractor.hpp"
#include "aip/diffcore/optimizer.hpp"
#include "aip/recommenders/ranker.hpp"

namespace aip {

enum class AttackKind { Insa, Expa, CSema, Fgsm, Pgd };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& name);

struct AttackConfig {
  AttackKind kind = AttackKind::Insa;
  int epsilon = 32;        // L-inf budget in 8-bit levels; pixel scale is epsilon / 255
  int iterations = 10;
  double step_size = 0.01;
  OptimizerKind optimizer = OptimizerKind::AdaptiveMoment;
  int hook = -1;           // hook item id (EXPA, c-SEMA)
  int target_class = -1;   // FGSM, PGD
  int user_batch = 0;      // INSA users per step; 0 means all users
  std::uint64_t seed = 0;

  bool operator==(const AttackConfig&) const = default;
};

/// Every violated invariant of the config; empty when valid.
std::vector<std::string> attack_config_errors(const AttackConfig& cfg);
void validate_attack_config(const AttackConfig& cfg);

struct AttackResult {
  Image image;                 // quantized
  std::vector<double> trace;   // objective at the start and after every iteration
  double linf = 0.0;           // final distance from the original, pixel scale
  int linf_levels = 0;         // the same in 8-bit levels
  double seconds = 0.0;
};

/// Clamps (perturbed - original) into [-epsilon/255, epsilon/255], adds it
/// back and clamps to [0,1].
template <typename Scalar>
ImageT<Scalar> project_and_clip(const ImageT<Scalar>& original, const ImageT<Scalar>& perturbed, int epsilon) {
  if (original.shape() != perturbed.shape())
    fail(ErrorKind::Dimension, "shape mismatch " + original.shape().str() + " vs " + perturbed.shape().str());
  const Scalar radius = Scalar(epsilon) / Scalar(255);
  const auto delta = (perturbed.pixels() - original.pixels()).cwiseMax(-radius).cwiseMin(radius);
  return ImageT<Scalar>(original.shape(), (original.pixels() + delta).cwiseMax(Scalar(0)).cwiseMin(Scalar(1)));
}

/// Insider attack: projected ascent on the ranker's summed user preference
/// for the image. SimRank maximises the negative mean squared feature
/// distance to every user's history, VBPR the summed visual term, DVBPR the
/// summed exp(theta_u . phi(X)). The DVBPR trace is recorded in log space.
AttackResult insa(const VisualRanker& ranker, const Image& image, const AttackConfig& cfg);

/// Expert attack: projected descent on ||phi(X + delta) - phi(hook)||_2. The trace holds the distance.
AttackResult expa(const FeatureExtractor& extractor, const Image& image, const Image& hook, const AttackConfig& cfg);

enum class Corner { TopLeft, TopRight, BottomLeft, BottomRight };

struct CsemaLayout {
  double scale = 0.4;             // inset side as a fraction of the canvas side
  Corner anchor = Corner::BottomRight;
  double caption_height = 0.0;    // fraction of the canvas height; 0 disables the band
  double caption_level = 1.0;     // grey level of the band
};

/// Semantic composite: the hook image, nearest-neighbour resized, pasted into the original.
Image csema(const Image& image, const Image& hook, const CsemaLayout& layout);

// Softmax head over a fixed extractor.
struct Classifier {
  FeatureExtractor extractor;
  Eigen::MatrixXd weight;  // classes x F
  Eigen::VectorXd bias;

  int classes() const { return static_cast<int>(weight.rows()); }
  Eigen::VectorXd logits(const Image& image) const;
  int predict(const Image& image) const;
  /// Cross-entropy of `target`; fills the pixel gradient when asked.
  double loss(const Image& image, int target, Eigen::VectorXd* pixel_gradient = nullptr) const;
};

/// Fits the head on the dataset's item cluster labels (non-cold items).
Classifier train_classifier(const FeatureExtractor& extractor, const InteractionDataset& ds, int epochs, double step_size,
                            std::uint64_t seed);
/// Class with the most training interactions.
int most_popular_class(const InteractionDataset& ds);

/// FGSM: one signed step of epsilon/255 towards `target_class`. PGD:
/// `iterations` signed steps of `step_size`, each projected into the ball.
AttackResult classifier_targeted(const Image& image, const Classifier& classifier, const AttackConfig& cfg);

}  // namespace aip

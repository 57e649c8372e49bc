#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "aip/data/image.hpp"

namespace aip {

enum class LayerKind { Conv3x3, Relu, Pool2, MaxPool2, Fc };

struct Layer {
  LayerKind kind;
  int out = 0;  // output channels (conv) or units (fc); unused otherwise

  bool operator==(const Layer&) const = default;
};

/// Parses a layer list such as "conv3x3:8,relu,maxpool2,fc:64" (pool2 averages,
/// maxpool2 keeps the largest of each 2x2 window). The aliases
/// "linear-<F>" and "conv-small" expand to the two stock architectures.
std::vector<Layer> parse_architecture(const std::string& descriptor);
std::string format_architecture(const std::vector<Layer>& layers);

struct ExtractorGradients {
  Eigen::VectorXd input;   // same length as the image pixel vector
  Eigen::VectorXd params;  // same length as parameters()
};

// Small differentiable image-to-vector map built from 3x3 "same" convolutions,
// rectifiers, 2x2 average or max pooling and fully-connected layers. Parameters are
// one flat vector; layers own contiguous slices of it in declaration order.
// Convolution weights are (9*Cin) x Cout column-major followed by Cout biases;
// fc weights are out x in column-major followed by out biases. The fc layer
// reads its input in H,W,C order, the same order as Image::pixels().
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(std::vector<Layer> layers, ImageShape input);

  /// Builds the architecture and draws weights uniformly in +-sqrt(6/(fan_in+fan_out)); biases start at zero.
  static FeatureExtractor create(const std::string& descriptor, ImageShape input, std::uint64_t seed);

  Eigen::VectorXd forward(const Image& image) const;
  Eigen::VectorXd input_gradient(const Image& image, const Eigen::VectorXd& upstream) const;
  Eigen::VectorXd param_gradient(const Image& image, const Eigen::VectorXd& upstream) const;
  /// One forward/backward pass producing both gradients of <upstream, forward(image)>.
  ExtractorGradients gradients(const Image& image, const Eigen::VectorXd& upstream, bool want_input = true,
                               bool want_params = true) const;

  const Eigen::VectorXd& parameters() const { return params_; }
  void set_parameters(Eigen::VectorXd params);
  /// Multiplies every output by `factor` (> 0) by rescaling the last weighted layer.
  void scale_output(double factor);
  Eigen::Index parameter_count() const { return params_.size(); }

  const std::vector<Layer>& layers() const { return layers_; }
  std::string descriptor() const { return format_architecture(layers_); }
  ImageShape input_shape() const { return input_; }
  int output_dim() const { return output_dim_; }

  bool operator==(const FeatureExtractor& other) const {
    return layers_ == other.layers_ && input_ == other.input_ && params_ == other.params_;
  }

 private:
  struct Plan {
    Layer layer;
    int in_h, in_w, in_c;
    int out_h, out_w, out_c;
    Eigen::Index offset;  // into params_
    Eigen::Index count;
  };
  using Map = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  void check_image(const Image& image) const;
  std::vector<Map> run_forward(const Image& image) const;

  std::vector<Layer> layers_;
  std::vector<Plan> plan_;
  ImageShape input_;
  int output_dim_ = 0;
  Eigen::VectorXd params_;
};

/// Rescales the outputs so the mean distance of `images`' features from their
/// centroid is 1. Returns the factor applied.
double normalize_output_spread(FeatureExtractor& extractor, const std::vector<Image>& images);

/// Writes/reads the `.fex` container: magic, architecture string, shape list
/// (H, W, C, F), then the parameters as little-endian float64.
void save_extractor(const FeatureExtractor& extractor, const std::string& path);
FeatureExtractor load_extractor(const std::string& path);
std::string encode_extractor(const FeatureExtractor& extractor);
FeatureExtractor decode_extractor(const std::string& bytes);

}  // namespace aip

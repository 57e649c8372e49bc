#include "aip/diffcore/extractor.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace aip {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, sep)) {
    const auto first = part.find_first_not_of(' ');
    const auto last = part.find_last_not_of(' ');
    if (first != std::string::npos) parts.push_back(part.substr(first, last - first + 1));
  }
  return parts;
}

int parse_count(const std::string& token, const std::string& text) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used == text.size() && value > 0) return value;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Config, "bad layer size in '" + token + "'");
}

}  // namespace

std::vector<Layer> parse_architecture(const std::string& descriptor) {
  if (descriptor == "conv-small") return parse_architecture("conv3x3:8,relu,pool2,conv3x3:16,relu,pool2,fc:64");
  if (descriptor.rfind("linear-", 0) == 0) return parse_architecture("fc:" + descriptor.substr(7));

  std::vector<Layer> layers;
  for (const auto& token : split(descriptor, ',')) {
    if (token == "relu") {
      layers.push_back({LayerKind::Relu});
    } else if (token == "pool2") {
      layers.push_back({LayerKind::Pool2});
    } else if (token == "maxpool2") {
      layers.push_back({LayerKind::MaxPool2});
    } else if (token.rfind("conv3x3:", 0) == 0) {
      layers.push_back({LayerKind::Conv3x3, parse_count(token, token.substr(8))});
    } else if (token.rfind("fc:", 0) == 0) {
      layers.push_back({LayerKind::Fc, parse_count(token, token.substr(3))});
    } else {
      fail(ErrorKind::Config, "unknown layer '" + token + "' in architecture '" + descriptor + "'");
    }
  }
  if (layers.empty()) fail(ErrorKind::Config, "empty architecture descriptor");
  return layers;
}

std::string format_architecture(const std::vector<Layer>& layers) {
  std::string out;
  for (const auto& layer : layers) {
    if (!out.empty()) out += ',';
    switch (layer.kind) {
      case LayerKind::Conv3x3: out += "conv3x3:" + std::to_string(layer.out); break;
      case LayerKind::Relu: out += "relu"; break;
      case LayerKind::Pool2: out += "pool2"; break;
      case LayerKind::MaxPool2: out += "maxpool2"; break;
      case LayerKind::Fc: out += "fc:" + std::to_string(layer.out); break;
    }
  }
  return out;
}

FeatureExtractor::FeatureExtractor(std::vector<Layer> layers, ImageShape input)
    : layers_(std::move(layers)), input_(input) {
  if (input.height <= 0 || input.width <= 0 || input.channels <= 0)
    fail(ErrorKind::Dimension, "invalid extractor input shape " + input.str());
  int h = input.height, w = input.width, c = input.channels;
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    Plan p{layer, h, w, c, h, w, c, offset, 0};
    switch (layer.kind) {
      case LayerKind::Conv3x3:
        p.out_c = layer.out;
        p.count = Eigen::Index(9) * c * layer.out + layer.out;
        break;
      case LayerKind::Relu: break;
      case LayerKind::Pool2:
      case LayerKind::MaxPool2:
        if (h < 2 || w < 2) fail(ErrorKind::Dimension, "pooling below 2x2 in architecture");
        p.out_h = h / 2;
        p.out_w = w / 2;
        break;
      case LayerKind::Fc:
        p.out_h = 1;
        p.out_w = 1;
        p.out_c = layer.out;
        p.count = Eigen::Index(h) * w * c * layer.out + layer.out;
        break;
    }
    offset += p.count;
    h = p.out_h;
    w = p.out_w;
    c = p.out_c;
    plan_.push_back(p);
  }
  output_dim_ = h * w * c;
  params_ = Eigen::VectorXd::Zero(offset);
}

FeatureExtractor FeatureExtractor::create(const std::string& descriptor, ImageShape input, std::uint64_t seed) {
  FeatureExtractor fx(parse_architecture(descriptor), input);
  std::mt19937_64 rng(seed);
  for (const auto& p : fx.plan_) {
    if (p.count == 0) continue;
    Eigen::Index weights = 0;
    double bound = 0.0;
    if (p.layer.kind == LayerKind::Conv3x3) {
      weights = Eigen::Index(9) * p.in_c * p.out_c;
      bound = std::sqrt(6.0 / (9.0 * p.in_c + 9.0 * p.out_c));
    } else {
      const double fan_in = double(p.in_h) * p.in_w * p.in_c;
      weights = Eigen::Index(fan_in) * p.out_c;
      bound = std::sqrt(6.0 / (fan_in + p.out_c));
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < weights; ++k) fx.params_[p.offset + k] = dist(rng);
  }
  return fx;
}

void FeatureExtractor::set_parameters(Eigen::VectorXd params) {
  if (params.size() != params_.size())
    fail(ErrorKind::Dimension, "expected " + std::to_string(params_.size()) + " parameters, got " +
                                   std::to_string(params.size()));
  params_ = std::move(params);
}

void FeatureExtractor::scale_output(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) fail(ErrorKind::Domain, "output scale must be positive and finite");
  for (auto it = plan_.rbegin(); it != plan_.rend(); ++it) {
    if (it->count == 0) continue;
    params_.segment(it->offset, it->count) *= factor;
    return;
  }
  fail(ErrorKind::Layout, "architecture has no weighted layer");
}

double normalize_output_spread(FeatureExtractor& extractor, const std::vector<Image>& images) {
  if (images.empty()) fail(ErrorKind::Argument, "no images to normalize against");
  Eigen::MatrixXd features(static_cast<Eigen::Index>(images.size()), extractor.output_dim());
  for (std::size_t k = 0; k < images.size(); ++k) features.row(static_cast<Eigen::Index>(k)) = extractor.forward(images[k]).transpose();
  const Eigen::RowVectorXd centre = features.colwise().mean();
  const double spread = (features.rowwise() - centre).rowwise().norm().mean();
  if (!(spread > 0.0)) fail(ErrorKind::Domain, "features do not vary across the images");
  extractor.scale_output(1.0 / spread);
  return 1.0 / spread;
}

void FeatureExtractor::check_image(const Image& image) const {
  if (image.shape() != input_)
    fail(ErrorKind::Dimension, "image shape " + image.shape().str() + " does not match extractor input " + input_.str());
  for (Eigen::Index k = 0; k < image.size(); ++k)
    if (!std::isfinite(image.pixels()[k])) fail(ErrorKind::Domain, "non-finite pixel at index " + std::to_string(k));
}

namespace {

using RowMap = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMap im2col(const RowMap& in, int h, int w, int c) {
  RowMap patches = RowMap::Zero(Eigen::Index(h) * w, Eigen::Index(9) * c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= w) continue;
          patches.row(Eigen::Index(y) * w + x).segment((ky * 3 + kx) * c, c) = in.row(Eigen::Index(yy) * w + xx);
        }
      }
  return patches;
}

RowMap col2im(const RowMap& dpatches, int h, int w, int c) {
  RowMap din = RowMap::Zero(Eigen::Index(h) * w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ky = 0; ky < 3; ++ky) {
        const int yy = y + ky - 1;
        if (yy < 0 || yy >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int xx = x + kx - 1;
          if (xx < 0 || xx >= w) continue;
          din.row(Eigen::Index(yy) * w + xx) += dpatches.row(Eigen::Index(y) * w + x).segment((ky * 3 + kx) * c, c);
        }
      }
  return din;
}

}  // namespace

std::vector<FeatureExtractor::Map> FeatureExtractor::run_forward(const Image& image) const {
  check_image(image);
  std::vector<Map> acts;
  acts.reserve(plan_.size() + 1);
  acts.emplace_back(Eigen::Map<const Map>(image.pixels().data(), Eigen::Index(input_.height) * input_.width,
                                          input_.channels));
  for (const auto& p : plan_) {
    const Map& in = acts.back();
    Map out;
    switch (p.layer.kind) {
      case LayerKind::Conv3x3: {
        Eigen::Map<const Eigen::MatrixXd> weight(params_.data() + p.offset, Eigen::Index(9) * p.in_c, p.out_c);
        Eigen::Map<const Eigen::RowVectorXd> bias(params_.data() + p.offset + weight.size(), p.out_c);
        out = im2col(in, p.in_h, p.in_w, p.in_c) * weight;
        out.rowwise() += bias;
        break;
      }
      case LayerKind::Relu: out = in.cwiseMax(0.0); break;
      case LayerKind::Pool2: {
        out = Map::Zero(Eigen::Index(p.out_h) * p.out_w, p.out_c);
        for (int y = 0; y < p.out_h; ++y)
          for (int x = 0; x < p.out_w; ++x) {
            auto row = out.row(Eigen::Index(y) * p.out_w + x);
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) row += in.row(Eigen::Index(2 * y + a) * p.in_w + 2 * x + b);
            row *= 0.25;
          }
        break;
      }
      case LayerKind::MaxPool2: {
        out = Map::Zero(Eigen::Index(p.out_h) * p.out_w, p.out_c);
        for (int y = 0; y < p.out_h; ++y)
          for (int x = 0; x < p.out_w; ++x) {
            auto row = out.row(Eigen::Index(y) * p.out_w + x);
            row = in.row(Eigen::Index(2 * y) * p.in_w + 2 * x);
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) row = row.cwiseMax(in.row(Eigen::Index(2 * y + a) * p.in_w + 2 * x + b));
          }
        break;
      }
      case LayerKind::Fc: {
        const Eigen::Index fan_in = Eigen::Index(p.in_h) * p.in_w * p.in_c;
        Eigen::Map<const Eigen::MatrixXd> weight(params_.data() + p.offset, p.out_c, fan_in);
        Eigen::Map<const Eigen::VectorXd> bias(params_.data() + p.offset + weight.size(), p.out_c);
        Eigen::Map<const Eigen::VectorXd> flat(in.data(), fan_in);
        out = (weight * flat + bias).transpose();
        break;
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

Eigen::VectorXd FeatureExtractor::forward(const Image& image) const {
  const auto acts = run_forward(image);
  return Eigen::Map<const Eigen::VectorXd>(acts.back().data(), output_dim_);
}

ExtractorGradients FeatureExtractor::gradients(const Image& image, const Eigen::VectorXd& upstream, bool want_input,
                                               bool want_params) const {
  if (upstream.size() != output_dim_)
    fail(ErrorKind::Dimension, "upstream has " + std::to_string(upstream.size()) + " components, extractor emits " +
                                   std::to_string(output_dim_));
  const auto acts = run_forward(image);
  ExtractorGradients grads;
  if (want_params) grads.params = Eigen::VectorXd::Zero(params_.size());

  const auto& last = plan_.back();
  Map delta = Eigen::Map<const Map>(upstream.data(), Eigen::Index(last.out_h) * last.out_w, last.out_c);
  for (std::size_t li = plan_.size(); li-- > 0;) {
    const auto& p = plan_[li];
    const Map& in = acts[li];
    // The first layer's input gradient is only needed for the pixel gradient.
    const bool need_din = li > 0 || want_input;
    Map din;
    switch (p.layer.kind) {
      case LayerKind::Conv3x3: {
        Eigen::Map<const Eigen::MatrixXd> weight(params_.data() + p.offset, Eigen::Index(9) * p.in_c, p.out_c);
        if (want_params) {
          const Map patches = im2col(in, p.in_h, p.in_w, p.in_c);
          Eigen::Map<Eigen::MatrixXd> dweight(grads.params.data() + p.offset, weight.rows(), weight.cols());
          dweight = patches.transpose() * delta;
          grads.params.segment(p.offset + weight.size(), p.out_c) = delta.colwise().sum().transpose();
        }
        if (need_din) din = col2im(delta * weight.transpose(), p.in_h, p.in_w, p.in_c);
        break;
      }
      case LayerKind::Relu:
        din = delta.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
        break;
      case LayerKind::Pool2: {
        din = Map::Zero(Eigen::Index(p.in_h) * p.in_w, p.in_c);
        for (int y = 0; y < p.out_h; ++y)
          for (int x = 0; x < p.out_w; ++x) {
            const auto g = 0.25 * delta.row(Eigen::Index(y) * p.out_w + x);
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) din.row(Eigen::Index(2 * y + a) * p.in_w + 2 * x + b) += g;
          }
        break;
      }
      case LayerKind::MaxPool2: {
        // Gradient goes to the first maximum of each window.
        din = Map::Zero(Eigen::Index(p.in_h) * p.in_w, p.in_c);
        for (int y = 0; y < p.out_h; ++y)
          for (int x = 0; x < p.out_w; ++x)
            for (int ch = 0; ch < p.in_c; ++ch) {
              Eigen::Index best = Eigen::Index(2 * y) * p.in_w + 2 * x;
              for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                  const Eigen::Index at = Eigen::Index(2 * y + a) * p.in_w + 2 * x + b;
                  if (in(at, ch) > in(best, ch)) best = at;
                }
              din(best, ch) += delta(Eigen::Index(y) * p.out_w + x, ch);
            }
        break;
      }
      case LayerKind::Fc: {
        const Eigen::Index fan_in = Eigen::Index(p.in_h) * p.in_w * p.in_c;
        Eigen::Map<const Eigen::MatrixXd> weight(params_.data() + p.offset, p.out_c, fan_in);
        Eigen::Map<const Eigen::VectorXd> d(delta.data(), p.out_c);
        if (want_params) {
          Eigen::Map<const Eigen::VectorXd> flat(in.data(), fan_in);
          Eigen::Map<Eigen::MatrixXd> dweight(grads.params.data() + p.offset, p.out_c, fan_in);
          dweight.noalias() = d * flat.transpose();
          grads.params.segment(p.offset + weight.size(), p.out_c) = d;
        }
        if (need_din) {
          const Eigen::VectorXd dflat = weight.transpose() * d;
          din = Eigen::Map<const Map>(dflat.data(), Eigen::Index(p.in_h) * p.in_w, p.in_c);
        }
        break;
      }
    }
    if (!need_din) break;
    delta = std::move(din);
  }
  if (want_input) grads.input = Eigen::Map<const Eigen::VectorXd>(delta.data(), image.size());
  return grads;
}

Eigen::VectorXd FeatureExtractor::input_gradient(const Image& image, const Eigen::VectorXd& upstream) const {
  return gradients(image, upstream, true, false).input;
}

Eigen::VectorXd FeatureExtractor::param_gradient(const Image& image, const Eigen::VectorXd& upstream) const {
  return gradients(image, upstream, false, true).params;
}

}  // namespace aip

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>

#include "aip/error.hpp"

namespace aip {

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  Eigen::Index size() const { return Eigen::Index(height) * width * channels; }
  bool operator==(const ImageShape&) const = default;
  std::string str() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
  }
};

// H x W x C pixel array, row-major with interleaved channels (the layout PNG
// and JPEG codecs use). Pixels live in [0,1].
template <typename Scalar>
class ImageT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  ImageT() = default;
  explicit ImageT(ImageShape shape, Scalar fill = Scalar(0))
      : shape_(shape), pixels_(Vector::Constant(shape.size(), fill)) {}
  ImageT(ImageShape shape, Vector pixels) : shape_(shape), pixels_(std::move(pixels)) {
    if (pixels_.size() != shape_.size())
      fail(ErrorKind::Dimension, "pixel count " + std::to_string(pixels_.size()) + " does not match shape " +
                                     shape_.str());
  }

  const ImageShape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  Eigen::Index size() const { return pixels_.size(); }

  const Vector& pixels() const { return pixels_; }
  Vector& pixels() {
    quantized_ = false;
    return pixels_;
  }

  Scalar at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }
  Scalar& at(int y, int x, int c) {
    quantized_ = false;
    return pixels_[index(y, x, c)];
  }
  Eigen::Index index(int y, int x, int c) const {
    return (Eigen::Index(y) * shape_.width + x) * shape_.channels + c;
  }

  bool quantized() const { return quantized_; }
  void mark_quantized() { quantized_ = true; }

  bool operator==(const ImageT& other) const {
    return shape_ == other.shape_ && pixels_ == other.pixels_;
  }

 private:
  ImageShape shape_;
  Vector pixels_;
  bool quantized_ = false;
};

using Image = ImageT<double>;

/// Maps each pixel to round(p * 255) / 255, rounding half away from zero.
/// Throws a domain error for pixels outside [0,1] or non-finite pixels.
template <typename Scalar>
ImageT<Scalar> quantize(const ImageT<Scalar>& image) {
  typename ImageT<Scalar>::Vector q(image.size());
  for (Eigen::Index k = 0; k < image.size(); ++k) {
    const Scalar p = image.pixels()[k];
    if (!std::isfinite(p) || p < Scalar(0) || p > Scalar(1))
      fail(ErrorKind::Domain, "pixel " + std::to_string(k) + " outside [0,1]");
    q[k] = std::round(p * Scalar(255)) / Scalar(255);
  }
  ImageT<Scalar> out(image.shape(), std::move(q));
  out.mark_quantized();
  return out;
}

/// Pixel values as integer 8-bit levels; requires the image to lie on the grid.
std::vector<std::uint8_t> to_bytes(const Image& image);
Image from_bytes(ImageShape shape, const std::vector<std::uint8_t>& bytes);

/// True when every pixel equals k/255 for integer k in [0,255].
bool on_grid(const Image& image);

/// L-infinity distance in 8-bit units between two grid images.
int linf_levels(const Image& a, const Image& b);
double linf(const Image& a, const Image& b);

void check_pixels(const Image& image);

}  // namespace aip

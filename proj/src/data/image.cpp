#include "aip/data/image.hpp"

#include <algorithm>
#include <cstdlib>

namespace aip {

namespace {

int level_of(double p) { return static_cast<int>(std::lround(p * 255.0)); }

}  // namespace

std::vector<std::uint8_t> to_bytes(const Image& image) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(image.size()));
  for (Eigen::Index k = 0; k < image.size(); ++k) {
    const double p = image.pixels()[k];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) fail(ErrorKind::Domain, "pixel outside [0,1]");
    bytes[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(level_of(p));
  }
  return bytes;
}

Image from_bytes(ImageShape shape, const std::vector<std::uint8_t>& bytes) {
  if (static_cast<Eigen::Index>(bytes.size()) != shape.size())
    fail(ErrorKind::Dimension, "byte count does not match shape " + shape.str());
  Image::Vector px(shape.size());
  for (Eigen::Index k = 0; k < px.size(); ++k) px[k] = bytes[static_cast<std::size_t>(k)] / 255.0;
  Image out(shape, std::move(px));
  out.mark_quantized();
  return out;
}

bool on_grid(const Image& image) {
  for (Eigen::Index k = 0; k < image.size(); ++k) {
    const double p = image.pixels()[k];
    if (!(p >= 0.0 && p <= 1.0)) return false;
    if (level_of(p) / 255.0 != p) return false;
  }
  return true;
}

int linf_levels(const Image& a, const Image& b) {
  if (a.shape() != b.shape()) fail(ErrorKind::Dimension, "shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  int worst = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(level_of(a.pixels()[k]) - level_of(b.pixels()[k])));
  return worst;
}

double linf(const Image& a, const Image& b) {
  if (a.shape() != b.shape()) fail(ErrorKind::Dimension, "shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  return (a.pixels() - b.pixels()).cwiseAbs().maxCoeff();
}

void check_pixels(const Image& image) {
  for (Eigen::Index k = 0; k < image.size(); ++k) {
    const double p = image.pixels()[k];
    if (!std::isfinite(p)) fail(ErrorKind::Domain, "non-finite pixel at index " + std::to_string(k));
    if (p < 0.0 || p > 1.0) fail(ErrorKind::Domain, "pixel at index " + std::to_string(k) + " outside [0,1]");
  }
}

}  // namespace aip

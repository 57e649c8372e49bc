#include <cmath>

#include "aip/attacks/attacks.hpp"

namespace aip {

Image csema(const Image& image, const Image& hook, const CsemaLayout& layout) {
  if (image.channels() != hook.channels()) fail(ErrorKind::Layout, "image and hook have different channel counts");
  if (!(layout.scale > 0.0) || layout.scale > 1.0) fail(ErrorKind::Layout, "inset scale must lie in (0,1]");
  if (layout.caption_height < 0.0 || layout.caption_height > 1.0) fail(ErrorKind::Layout, "caption height must lie in [0,1]");
  if (layout.caption_level < 0.0 || layout.caption_level > 1.0) fail(ErrorKind::Domain, "caption level outside [0,1]");
  check_pixels(image);
  check_pixels(hook);

  const int H = image.height(), W = image.width(), C = image.channels();
  const int h = std::max(1, static_cast<int>(std::lround(layout.scale * H)));
  const int w = std::max(1, static_cast<int>(std::lround(layout.scale * W)));
  if (h > H || w > W) fail(ErrorKind::Layout, "inset larger than the canvas");
  const bool top = layout.anchor == Corner::TopLeft || layout.anchor == Corner::TopRight;
  const bool left = layout.anchor == Corner::TopLeft || layout.anchor == Corner::BottomLeft;
  const int y0 = top ? 0 : H - h;
  const int x0 = left ? 0 : W - w;

  Image out = image;
  const int band = static_cast<int>(std::lround(layout.caption_height * H));
  for (int y = top ? H - band : 0; y < (top ? H : band); ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) out.at(y, x, c) = layout.caption_level;
  for (int y = 0; y < h; ++y) {
    const int sy = static_cast<int>(static_cast<long>(y) * hook.height() / h);
    for (int x = 0; x < w; ++x) {
      const int sx = static_cast<int>(static_cast<long>(x) * hook.width() / w);
      for (int c = 0; c < C; ++c) out.at(y0 + y, x0 + x, c) = hook.at(sy, sx, c);
    }
  }
  return quantize(out);
}

}  // namespace aip

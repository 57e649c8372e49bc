#include "aip/defenses/defenses.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <memory>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

namespace aip {

std::string to_string(DefenseKind kind) { return kind == DefenseKind::Jpeg ? "jpeg" : "bitdepth"; }

DefenseKind defense_kind_from_string(const std::string& name) {
  if (name == "jpeg") return DefenseKind::Jpeg;
  if (name == "bitdepth" || name == "bit-depth") return DefenseKind::BitDepth;
  fail(ErrorKind::Config, "unknown defense kind '" + name + "'");
}

const std::vector<int>& defense_menu(DefenseKind kind) {
  static const std::vector<int> jpeg{90, 70, 50, 30, 10};
  static const std::vector<int> bits{7, 6, 5, 4, 3, 2};
  return kind == DefenseKind::Jpeg ? jpeg : bits;
}

void validate_defense_config(const DefenseConfig& cfg) {
  const auto& menu = defense_menu(cfg.kind);
  if (std::find(menu.begin(), menu.end(), cfg.level) == menu.end())
    fail(ErrorKind::Config, "level " + std::to_string(cfg.level) + " is not on the " + to_string(cfg.kind) + " menu");
}

Image bit_depth_reduce(const Image& image, int bits) {
  if (bits < 1 || bits > 8) fail(ErrorKind::Argument, "bit depth must be in [1,8], got " + std::to_string(bits));
  check_pixels(image);
  const double levels = std::ldexp(1.0, bits) - 1.0;
  Image out(image.shape(), ((image.pixels() * levels).array().round() / levels).matrix());
  return quantize(out);
}

namespace {

struct JpegError {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

std::vector<unsigned char> encode_jpeg(const std::vector<std::uint8_t>& rgb, int height, int width, int quality) {
  jpeg_compress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_jpeg_error;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    fail(ErrorKind::Codec, std::string("JPEG encode failed: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(rgb.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<unsigned char> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

std::vector<std::uint8_t> decode_jpeg(const std::vector<unsigned char>& data, int height, int width) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_jpeg_error;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorKind::Codec, std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  if (static_cast<int>(cinfo.output_width) != width || static_cast<int>(cinfo.output_height) != height ||
      cinfo.output_components != 3) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorKind::Codec, "JPEG decode changed the image geometry");
  }
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return rgb;
}

}  // namespace

Image jpeg_roundtrip(const Image& image, int quality) {
  if (quality < 1 || quality > 100) fail(ErrorKind::Argument, "JPEG quality must be in [1,100]");
  if (image.channels() != 1 && image.channels() != 3) fail(ErrorKind::Codec, "JPEG defense supports 1 or 3 channels");
  const auto bytes = to_bytes(quantize(image));
  const int H = image.height(), W = image.width();
  std::vector<std::uint8_t> rgb;
  if (image.channels() == 3) {
    rgb = bytes;
  } else {
    rgb.reserve(bytes.size() * 3);
    for (auto b : bytes) rgb.insert(rgb.end(), {b, b, b});
  }
  const auto decoded = decode_jpeg(encode_jpeg(rgb, H, W, quality), H, W);
  if (image.channels() == 3) return from_bytes(image.shape(), decoded);
  std::vector<std::uint8_t> grey(bytes.size());
  for (std::size_t k = 0; k < grey.size(); ++k)
    grey[k] = static_cast<std::uint8_t>((decoded[3 * k] + decoded[3 * k + 1] + decoded[3 * k + 2] + 1) / 3);
  return from_bytes(image.shape(), grey);
}

Image apply_defense(const Image& image, const DefenseConfig& cfg) {
  return cfg.kind == DefenseKind::Jpeg ? jpeg_roundtrip(image, cfg.level) : bit_depth_reduce(image, cfg.level);
}

}  // namespace aip

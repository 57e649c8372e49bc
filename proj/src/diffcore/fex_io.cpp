#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aip/binary_io.hpp"
#include "aip/diffcore/extractor.hpp"

namespace aip {

namespace {
constexpr char kMagic[8] = {'A', 'I', 'P', 'F', 'E', 'X', '0', '1'};
}

std::string encode_extractor(const FeatureExtractor& extractor) {
  ByteWriter out;
  out.raw(kMagic, sizeof kMagic);
  out.string(extractor.descriptor());
  const auto shape = extractor.input_shape();
  out.u32(4);
  for (const std::int64_t dim : {std::int64_t(shape.height), std::int64_t(shape.width), std::int64_t(shape.channels),
                                 std::int64_t(extractor.output_dim())})
    out.i64(dim);
  out.f64_block(extractor.parameters());
  return out.take();
}

FeatureExtractor decode_extractor(const std::string& bytes) {
  ByteReader in(bytes);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) fail(ErrorKind::Io, "not a .fex extractor file");
  const std::string descriptor = in.string();
  if (in.u32() != 4) fail(ErrorKind::Io, "unexpected .fex shape list length");
  ImageShape shape;
  shape.height = static_cast<int>(in.i64());
  shape.width = static_cast<int>(in.i64());
  shape.channels = static_cast<int>(in.i64());
  const auto features = in.i64();
  FeatureExtractor fx(parse_architecture(descriptor), shape);
  if (fx.output_dim() != features) fail(ErrorKind::Io, ".fex output dimension disagrees with its architecture");
  fx.set_parameters(in.f64_block());
  return fx;
}

void save_extractor(const FeatureExtractor& extractor, const std::string& path) {
  write_file(path, encode_extractor(extractor));
}

FeatureExtractor load_extractor(const std::string& path) { return decode_extractor(read_file(path)); }

}  // namespace aip

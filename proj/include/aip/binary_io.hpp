#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <string>

#include "aip/error.hpp"

namespace aip {

// Little-endian byte helpers shared by the .fex and .rec containers.
class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) { buf_.append(static_cast<const char*>(data), n); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put(bits);
  }
  void string(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void f64_block(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) f64(v[k]);
  }
  std::string take() { return std::move(buf_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
  double f64() {
    const auto bits = get<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string string() {
    const auto n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::VectorXd f64_block() {
    const auto n = u64();
    need(n * 8);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = f64();
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorKind::Io, "truncated binary container");
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += sizeof(U);
    return v;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace aip

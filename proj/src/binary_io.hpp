#pragma once

// Little-endian byte streams for the weight and optimizer-state formats.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "footandball/errors.hpp"

namespace fnb::detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  void f64(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    u64(bits);
  }
  void raw(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + len);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::uint32_t u32(const std::string& field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const std::string& field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(const std::string& field) {
    const std::uint32_t bits = u32(field);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  double f64(const std::string& field) {
    const std::uint64_t bits = u64(field);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string str(const std::string& field, std::size_t max_len = 4096) {
    const std::uint32_t len = u32(field + " length");
    if (len > max_len) throw FormatError("implausible length " + std::to_string(len) + " for " + field);
    need(len, field);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  void expect_magic(const char* magic, const std::string& what) {
    need(4, what + " magic");
    if (std::memcmp(in_.data() + pos_, magic, 4) != 0) {
      throw FormatError("bad magic: not a " + what + " file (expected \"" + std::string(magic, 4) + "\")");
    }
    pos_ += 4;
  }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n, const std::string& field) const {
    if (in_.size() - pos_ < n) {
      throw FormatError("truncated file while reading " + field + " at offset " + std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace fnb::detail

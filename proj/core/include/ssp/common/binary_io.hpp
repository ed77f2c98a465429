#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ssp/common/error.hpp"

namespace ssp::io {

// Little-endian writer into an in-memory buffer.
class ByteWriter {
 public:
  void bytes(const void* src, std::size_t n);
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f32s(std::span<const float> v);
  void str(const std::string& s);  // u32 length + raw bytes

  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  std::vector<std::uint8_t> release() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader. Every read names the field so a
// truncated or corrupt file reports where it broke.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  void bytes(void* dst, std::size_t n, const std::string& field);
  std::uint8_t u8(const std::string& field);
  std::uint16_t u16(const std::string& field);
  std::uint32_t u32(const std::string& field);
  std::uint64_t u64(const std::string& field);
  float f32(const std::string& field);
  void f32s(std::span<float> out, const std::string& field);
  std::string str(const std::string& field, std::uint32_t max_len = 1u << 20);

  std::uint64_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  std::uint64_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::uint64_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
// Writes atomically via a temporary sibling file; creates parent directories.
void write_file(const std::string& path, std::span<const std::uint8_t> data);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace ssp::io

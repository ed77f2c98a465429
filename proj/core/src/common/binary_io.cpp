#include "ssp/common/binary_io.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ssp::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void ByteWriter::bytes(const void* src, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(src);
  buf_.insert(buf_.end(), p, p + n);
}

void ByteWriter::u16(std::uint16_t v) { bytes(&v, sizeof v); }
void ByteWriter::u32(std::uint32_t v) { bytes(&v, sizeof v); }
void ByteWriter::u64(std::uint64_t v) { bytes(&v, sizeof v); }
void ByteWriter::f32(float v) { bytes(&v, sizeof v); }
void ByteWriter::f32s(std::span<const float> v) { bytes(v.data(), v.size_bytes()); }

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

void ByteReader::bytes(void* dst, std::size_t n, const std::string& field) {
  if (n > remaining()) {
    throw FormatError("unexpected end of file: need " + std::to_string(n) + " bytes, have " +
                          std::to_string(remaining()),
                      pos_, field);
  }
  std::memcpy(dst, data_.data() + pos_, n);
  pos_ += n;
}

std::uint8_t ByteReader::u8(const std::string& field) {
  std::uint8_t v;
  bytes(&v, sizeof v, field);
  return v;
}

std::uint16_t ByteReader::u16(const std::string& field) {
  std::uint16_t v;
  bytes(&v, sizeof v, field);
  return v;
}

std::uint32_t ByteReader::u32(const std::string& field) {
  std::uint32_t v;
  bytes(&v, sizeof v, field);
  return v;
}

std::uint64_t ByteReader::u64(const std::string& field) {
  std::uint64_t v;
  bytes(&v, sizeof v, field);
  return v;
}

float ByteReader::f32(const std::string& field) {
  float v;
  bytes(&v, sizeof v, field);
  return v;
}

void ByteReader::f32s(std::span<float> out, const std::string& field) {
  bytes(out.data(), out.size_bytes(), field);
}

std::string ByteReader::str(const std::string& field, std::uint32_t max_len) {
  const auto start = pos_;
  const std::uint32_t n = u32(field + ".length");
  if (n > max_len) throw FormatError("string length " + std::to_string(n) + " exceeds limit", start, field);
  std::string s(n, '\0');
  bytes(s.data(), n, field);
  return s;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

void write_text_file(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ssp::io

#include "ssp/synthdata/dataset_io.hpp"

#include <cmath>

#include "ssp/common/binary_io.hpp"

namespace ssp::synth {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'D'};

}  // namespace

std::vector<std::uint8_t> encode_dataset(std::span<const ImageSample> samples) {
  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kDatasetVersion);
  w.u64(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.image.height > 65535 || s.image.width > 65535) {
      throw Error("record " + std::to_string(i) + ": image extents exceed 16 bits");
    }
    if (s.mask.height != s.image.height || s.mask.width != s.image.width) {
      throw ShapeError("record " + std::to_string(i) + ": mask shape differs from image shape");
    }
    w.u64(s.seed);
    w.u16(static_cast<std::uint16_t>(s.image.height));
    w.u16(static_cast<std::uint16_t>(s.image.width));
    w.f32s(s.image.values);
    w.u32(static_cast<std::uint32_t>(s.keypoints.size()));
    for (const auto& kp : s.keypoints) {
      w.f32(static_cast<float>(kp.row));
      w.f32(static_cast<float>(kp.col));
      w.f32(static_cast<float>(kp.score));
    }
    w.bytes(s.mask.values.data(), s.mask.values.size());
  }
  return w.release();
}

std::vector<ImageSample> decode_dataset(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("not a dataset file", 0, "magic");
  const auto version_at = r.offset();
  const std::uint16_t version = r.u16("version");
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version), version_at, "version");
  }
  const std::uint64_t count = r.u64("record_count");
  // Each record needs at least its 16-byte header; reject absurd counts early.
  if (count > r.remaining() / 16) {
    throw FormatError("record count " + std::to_string(count) + " exceeds file size", r.offset() - 8,
                      "record_count");
  }

  std::vector<ImageSample> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string rec = "record[" + std::to_string(i) + "].";
    ImageSample s;
    s.seed = r.u64(rec + "seed");
    const int H = r.u16(rec + "height");
    const int W = r.u16(rec + "width");
    s.image = Image(H, W);
    r.f32s(s.image.values, rec + "image");
    const auto kp_at = r.offset();
    const std::uint32_t n = r.u32(rec + "keypoint_count");
    if (n > r.remaining() / 12) {
      throw FormatError("keypoint count " + std::to_string(n) + " exceeds file size", kp_at, rec + "keypoint_count");
    }
    s.keypoints.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto at = r.offset();
      const std::string f = rec + "keypoints[" + std::to_string(k) + "]";
      geom::Keypoint kp;
      kp.row = r.f32(f);
      kp.col = r.f32(f);
      kp.score = r.f32(f);
      if (!(kp.row >= 0 && kp.col >= 0 && kp.row <= H - 1 && kp.col <= W - 1)) {
        throw FormatError("keypoint outside the image", at, f);
      }
      s.keypoints.push_back(kp);
    }
    s.mask = ClassMask(H, W, 0);
    r.bytes(s.mask.values.data(), s.mask.values.size(), rec + "mask");
    out.push_back(std::move(s));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after the last record", r.offset(), "end");
  return out;
}

void write_dataset(std::span<const ImageSample> samples, const std::string& path) {
  io::write_file(path, encode_dataset(samples));
}

std::vector<ImageSample> read_dataset(const std::string& path) { return decode_dataset(io::read_file(path)); }

}  // namespace ssp::synth

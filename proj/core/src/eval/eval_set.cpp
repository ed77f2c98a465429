#include "ssp/eval/eval_set.hpp"

#include "ssp/common/binary_io.hpp"
#include "ssp/common/rng.hpp"
#include "ssp/geometry/warp.hpp"

namespace ssp::eval {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'E'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::vector<EvalPair> make_eval_set(const EvalSetConfig& config, std::size_t count, std::uint64_t seed) {
  config.scene.validate();
  config.homography.validate();
  config.photometric.validate();
  synth::AugmentConfig strong = config.photometric;
  strong.brightness_min = -config.illumination_brightness;
  strong.brightness_max = config.illumination_brightness;
  strong.contrast_min = 1.0 - config.illumination_contrast;
  strong.contrast_max = 1.0 + config.illumination_contrast;

  std::vector<EvalPair> pairs(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& p = pairs[i];
    p.seed = derive_seed(seed, 3 * i);
    p.a = synth::render_scene(config.scene, p.seed).image;
    Rng photo(derive_seed(seed, 3 * i + 1));
    if (i % 2 == 0) {
      p.kind = PairKind::Illumination;
      p.h = geom::Homography::identity();
      p.b = synth::photometric_augment(p.a, photo, strong);
    } else {
      p.kind = PairKind::Viewpoint;
      Rng geo(derive_seed(seed, 3 * i + 2));
      p.h = geom::sample_homography(config.homography, p.a.height, p.a.width, geo);
      p.b = synth::photometric_augment(geom::warp_image(p.a, p.h, p.a.height, p.a.width), photo, config.photometric);
    }
  }
  return pairs;
}

std::vector<std::uint8_t> encode_eval_set(const std::vector<EvalPair>& pairs) {
  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u64(pairs.size());
  for (const auto& p : pairs) {
    if (p.a.height != p.b.height || p.a.width != p.b.width) throw ShapeError("eval pair images differ in shape");
    w.u8(static_cast<std::uint8_t>(p.kind));
    w.u64(p.seed);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        double v = p.h(r, c);
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        w.u64(bits);
      }
    }
    w.u16(static_cast<std::uint16_t>(p.a.height));
    w.u16(static_cast<std::uint16_t>(p.a.width));
    w.f32s(p.a.values);
    w.f32s(p.b.values);
  }
  return w.release();
}

std::vector<EvalPair> decode_eval_set(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("not an eval-set file", 0, "magic");
  const auto version_at = r.offset();
  if (r.u16("version") != kVersion) throw FormatError("unsupported eval-set version", version_at, "version");
  const auto count = r.u64("pair_count");
  if (count > r.remaining() / 82) throw FormatError("pair count exceeds file size", r.offset() - 8, "pair_count");
  std::vector<EvalPair> pairs;
  pairs.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string f = "pair[" + std::to_string(i) + "].";
    EvalPair p;
    const auto kind_at = r.offset();
    const auto kind = r.u8(f + "kind");
    if (kind > 1) throw FormatError("unknown pair kind", kind_at, f + "kind");
    p.kind = static_cast<PairKind>(kind);
    p.seed = r.u64(f + "seed");
    Eigen::Matrix3d m;
    const auto h_at = r.offset();
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const std::uint64_t bits = r.u64(f + "homography");
        std::memcpy(&m(a, b), &bits, 8);
      }
    }
    try {
      p.h = geom::Homography::from_matrix(m);
    } catch (const Error& e) {
      throw FormatError(e.what(), h_at, f + "homography");
    }
    const int h = r.u16(f + "height");
    const int w = r.u16(f + "width");
    p.a = Image(h, w);
    p.b = Image(h, w);
    r.f32s(p.a.values, f + "image_a");
    r.f32s(p.b.values, f + "image_b");
    pairs.push_back(std::move(p));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after the last pair", r.offset(), "end");
  return pairs;
}

void write_eval_set(const std::vector<EvalPair>& pairs, const std::string& path) {
  io::write_file(path, encode_eval_set(pairs));
}

std::vector<EvalPair> read_eval_set(const std::string& path) { return decode_eval_set(io::read_file(path)); }

}  // namespace ssp::eval

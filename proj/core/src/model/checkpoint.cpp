#include "ssp/model/checkpoint.hpp"

#include "ssp/common/binary_io.hpp"

namespace ssp::model {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'C'};
constexpr std::uint32_t kFlagSemantic = 1u;
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

const ad::Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kCheckpointVersion);
  const auto& c = ckpt.config;
  w.u32(static_cast<std::uint32_t>(c.c_enc));
  w.u32(static_cast<std::uint32_t>(c.desc_dim));
  w.u32(static_cast<std::uint32_t>(c.num_classes));
  w.u32(static_cast<std::uint32_t>(c.head_width));
  w.u32(static_cast<std::uint32_t>(c.widths.size()));
  for (int v : c.widths) w.u32(static_cast<std::uint32_t>(v));
  w.u32(c.semantic_head ? kFlagSemantic : 0u);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    w.f32s(t.values());
  }
  return w.release();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("not a checkpoint file", 0, "magic");
  const auto version_at = r.offset();
  const auto version = r.u16("version");
  if (version != kCheckpointVersion) {
    throw FormatError("incompatible checkpoint version " + std::to_string(version), version_at, "version");
  }
  Checkpoint ckpt;
  auto& c = ckpt.config;
  c.c_enc = static_cast<int>(r.u32("config.c_enc"));
  c.desc_dim = static_cast<int>(r.u32("config.desc_dim"));
  c.num_classes = static_cast<int>(r.u32("config.num_classes"));
  c.head_width = static_cast<int>(r.u32("config.head_width"));
  const auto nw_at = r.offset();
  const auto nw = r.u32("config.width_count");
  if (nw > 64) throw FormatError("implausible width count", nw_at, "config.width_count");
  c.widths.resize(nw);
  for (auto& v : c.widths) v = static_cast<int>(r.u32("config.widths"));
  c.semantic_head = (r.u32("config.flags") & kFlagSemantic) != 0;

  const auto count = r.u32("tensor_count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string f = "tensor[" + std::to_string(i) + "]";
    std::string name = r.str(f + ".name", 4096);
    const auto rank_at = r.offset();
    const auto rank = r.u32(f + ".rank");
    if (rank > kMaxRank) throw FormatError("tensor rank " + std::to_string(rank) + " too large", rank_at, f + ".rank");
    ad::Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& e : shape) {
      e = r.u32(f + ".extent");
      n *= static_cast<std::uint64_t>(e);
    }
    if (n > r.remaining() / 4) throw FormatError("tensor payload exceeds file size", r.offset(), f + ".data");
    std::vector<float> data(n);
    r.f32s(data, f + ".data");
    ckpt.tensors.emplace_back(std::move(name), ad::Tensor<float>::from(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after the last tensor", r.offset(), "end");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) { io::write_file(path, encode_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

Checkpoint snapshot(const Network<float>& net, std::vector<std::pair<std::string, ad::Tensor<float>>> extra) {
  Checkpoint ckpt;
  ckpt.config = net.config();
  for (const auto& p : net.parameters()) ckpt.tensors.emplace_back(p.name, p.tensor.detach());
  for (auto& [name, t] : extra) ckpt.tensors.emplace_back(name, t.detach());
  return ckpt;
}

void restore(Network<float>& net, const Checkpoint& ckpt) {
  if (!(ckpt.config == net.config())) {
    throw ConfigError("model", "checkpoint configuration does not match the network");
  }
  for (auto& p : net.parameters()) {
    const auto* t = ckpt.find(p.name);
    if (!t) throw FormatError("checkpoint is missing tensor '" + p.name + "'", 0, p.name);
    if (t->shape() != p.tensor.shape()) {
      throw ShapeError("tensor '" + p.name + "' has shape " + ad::to_string(t->shape()) + ", expected " +
                       ad::to_string(p.tensor.shape()));
    }
    p.tensor.values() = t->values();
  }
}

Network<float> instantiate(const Checkpoint& ckpt) {
  Network<float> net(ckpt.config, 0);
  restore(net, ckpt);
  return net;
}

}  // namespace ssp::model

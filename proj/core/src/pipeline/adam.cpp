#include "ssp/pipeline/adam.hpp"

#include <bit>
#include <cmath>

#include "ssp/common/binary_io.hpp"

namespace ssp::pipeline {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'A'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void AdamConfig::validate() const {
  if (!(beta1 >= 0 && beta1 < 1)) throw ConfigError("adam.beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) throw ConfigError("adam.beta2", "must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("adam.epsilon", "must be > 0");
}

template <class T>
AdamState make_adam_state(std::span<const ad::Tensor<T>> params, const AdamConfig& config) {
  config.validate();
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.names.push_back(p.name());
    s.m.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    s.v.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
  }
  return s;
}

template <class T>
void check_adam_state(const AdamState& state, std::span<const ad::Tensor<T>> params) {
  if (state.names.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw FormatError("optimizer state holds " + std::to_string(state.names.size()) + " tensors, expected " +
                          std::to_string(params.size()),
                      0, "count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<std::size_t>(params[i].numel());
    if (state.names[i] != params[i].name() || state.m[i].size() != n || state.v[i].size() != n) {
      throw FormatError("optimizer state does not match tensor '" + params[i].name() + "'", 0, state.names[i]);
    }
  }
}

template <class T>
bool adam_step(std::span<ad::Tensor<T>> params, AdamState& state, double lr) {
  check_adam_state<T>(state, params);
  for (const auto& p : params) {
    for (T g : p.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        ++state.skipped;
        return false;
      }
    }
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].data();
    const auto grad = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double g = grad.empty() ? 0.0 : static_cast<double>(grad[k]);
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
      const double update = lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.epsilon);
      values[k] = static_cast<T>(static_cast<double>(values[k]) - update);
    }
  }
  return true;
}

std::vector<std::uint8_t> encode_adam_state(const AdamState& s) {
  io::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u64(static_cast<std::uint64_t>(s.step));
  w.u64(static_cast<std::uint64_t>(s.skipped));
  for (double x : {s.config.beta1, s.config.beta2, s.config.epsilon}) w.u64(std::bit_cast<std::uint64_t>(x));
  w.u32(static_cast<std::uint32_t>(s.names.size()));
  for (std::size_t i = 0; i < s.names.size(); ++i) {
    w.str(s.names[i]);
    w.u64(s.m[i].size());
    for (double x : s.m[i]) w.u64(std::bit_cast<std::uint64_t>(x));
    for (double x : s.v[i]) w.u64(std::bit_cast<std::uint64_t>(x));
  }
  return w.release();
}

AdamState decode_adam_state(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("not an optimizer state file", 0, "magic");
  const auto version = r.u16("version");
  if (version != kVersion) {
    throw FormatError("unsupported optimizer state version " + std::to_string(version), 4, "version");
  }
  AdamState s;
  s.step = static_cast<std::int64_t>(r.u64("step"));
  s.skipped = static_cast<std::int64_t>(r.u64("skipped"));
  s.config.beta1 = std::bit_cast<double>(r.u64("beta1"));
  s.config.beta2 = std::bit_cast<double>(r.u64("beta2"));
  s.config.epsilon = std::bit_cast<double>(r.u64("epsilon"));
  const auto count = r.u32("count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string field = "tensor[" + std::to_string(i) + "]";
    s.names.push_back(r.str(field + ".name"));
    const auto n = r.u64(field + ".size");
    if (n > r.remaining() / 16) throw FormatError("moment size exceeds file", r.offset(), field + ".size");
    std::vector<double> m(n), v(n);
    for (auto& x : m) x = std::bit_cast<double>(r.u64(field + ".m"));
    for (auto& x : v) x = std::bit_cast<double>(r.u64(field + ".v"));
    s.m.push_back(std::move(m));
    s.v.push_back(std::move(v));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after optimizer state", r.offset(), "end");
  return s;
}

template AdamState make_adam_state<float>(std::span<const ad::Tensor<float>>, const AdamConfig&);
template AdamState make_adam_state<double>(std::span<const ad::Tensor<double>>, const AdamConfig&);
template bool adam_step<float>(std::span<ad::Tensor<float>>, AdamState&, double);
template bool adam_step<double>(std::span<ad::Tensor<double>>, AdamState&, double);
template void check_adam_state<float>(const AdamState&, std::span<const ad::Tensor<float>>);
template void check_adam_state<double>(const AdamState&, std::span<const ad::Tensor<double>>);

}  // namespace ssp::pipeline

#pragma once

#include <cstdint>
#include <string_view>

namespace ssp::pipeline {

enum class LrKind { Fixed, Polynomial };

struct LrSchedule {
  LrKind kind = LrKind::Polynomial;
  double fixed = 0.001;
  double start = 0.0025;
  double end = 0.001;
  double power = 1.0;

  static LrSchedule constant(double lr);
  static LrSchedule polynomial(double start, double end, double power = 1.0);
  void validate() const;  // throws ConfigError
};

std::string_view lr_kind_name(LrKind kind);
LrKind parse_lr_kind(std::string_view name);

// Fixed: the constant. Polynomial: end + (start - end) (1 - t / total)^power,
// with t clamped to [0, total].
double lr_at(std::int64_t iteration, std::int64_t total, const LrSchedule& schedule);

}  // namespace ssp::pipeline

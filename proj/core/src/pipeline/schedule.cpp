#include "ssp/pipeline/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssp/common/error.hpp"

namespace ssp::pipeline {

LrSchedule LrSchedule::constant(double lr) {
  LrSchedule s;
  s.kind = LrKind::Fixed;
  s.fixed = lr;
  return s;
}

LrSchedule LrSchedule::polynomial(double start, double end, double power) {
  LrSchedule s;
  s.kind = LrKind::Polynomial;
  s.start = start;
  s.end = end;
  s.power = power;
  return s;
}

void LrSchedule::validate() const {
  if (kind == LrKind::Fixed) {
    if (!(fixed > 0)) throw ConfigError("lr.fixed", "must be > 0");
    return;
  }
  if (!(end > 0)) throw ConfigError("lr.end", "must be > 0");
  if (!(start >= end)) throw ConfigError("lr.start", "must be >= lr.end");
  if (!(power > 0)) throw ConfigError("lr.power", "must be > 0");
}

std::string_view lr_kind_name(LrKind kind) { return kind == LrKind::Fixed ? "fixed" : "polynomial"; }

LrKind parse_lr_kind(std::string_view name) {
  if (name == "fixed") return LrKind::Fixed;
  if (name == "polynomial") return LrKind::Polynomial;
  throw ConfigError("lr.kind", "expected 'fixed' or 'polynomial', got '" + std::string(name) + "'");
}

double lr_at(std::int64_t iteration, std::int64_t total, const LrSchedule& s) {
  if (s.kind == LrKind::Fixed) return s.fixed;
  if (total <= 0) return s.end;
  const double t = static_cast<double>(std::clamp<std::int64_t>(iteration, 0, total));
  const double remaining = 1.0 - t / static_cast<double>(total);
  return s.end + (s.start - s.end) * std::pow(remaining, s.power);
}

}  // namespace ssp::pipeline

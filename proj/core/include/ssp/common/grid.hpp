#pragma once

#include <cstdint>
#include <vector>

#include "ssp/common/error.hpp"

namespace ssp {

// Row-major 2D array. Images are Grid<float> with values in [0, 1].
template <class T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int h, int w, T fill = T{}) : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw ShapeError("grid extents must be non-negative");
  }

  T& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  const T& at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
  bool contains(int r, int c) const { return r >= 0 && c >= 0 && r < height && c < width; }
  std::size_t size() const { return values.size(); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

using Image = Grid<float>;
using ClassMask = Grid<std::uint8_t>;

}  // namespace ssp

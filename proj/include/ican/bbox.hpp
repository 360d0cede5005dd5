// Copyright 2026 The ican Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ican {

/// Axis-aligned box in image pixel coordinates. Construction enforces
/// x1 < x2, y1 < y2 and finite coordinates.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 1.0;
  double y2 = 1.0;

  BBox() = default;
  BBox(double x1_, double y1_, double x2_, double y2_)
      : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
    if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
          std::isfinite(y2))) {
      throw std::invalid_argument("BBox: coordinates must be finite");
    }
    if (!(x1 < x2 && y1 < y2)) {
      throw std::invalid_argument(
          "BBox: requires x1 < x2 and y1 < y2, got [" + std::to_string(x1) +
          ", " + std::to_string(y1) + ", " + std::to_string(x2) + ", " +
          std::to_string(y2) + "]");
    }
  }

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  bool operator==(const BBox& o) const {
    return x1 == o.x1 && y1 == o.y1 && x2 == o.x2 && y2 == o.y2;
  }
};

inline BBox union_box(const BBox& a, const BBox& b) {
  return BBox(std::min(a.x1, b.x1), std::min(a.y1, b.y1),
              std::max(a.x2, b.x2), std::max(a.y2, b.y2));
}

/// Point membership with half-open semantics: [x1, x2) x [y1, y2).
inline bool box_contains(const BBox& b, double x, double y) {
  return x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
}

}  // namespace ican

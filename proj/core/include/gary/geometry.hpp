#pragma once

#include <algorithm>
#include <span>
#include <vector>

namespace gary {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle in screen pixels, origin top-left.
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  Point center() const { return {x + w / 2.0, y + h / 2.0}; }

  // Boundaries are inclusive.
  bool contains(Point p) const { return p.x >= x && p.x <= right() && p.y >= y && p.y <= bottom(); }

  bool contains(const Rect& r) const {
    return r.x >= x && r.y >= y && r.right() <= right() && r.bottom() <= bottom();
  }

  bool intersects(const Rect& r) const {
    return r.x < right() && x < r.right() && r.y < bottom() && y < r.bottom();
  }

  Rect expanded(double pad) const { return {x - pad, y - pad, w + 2.0 * pad, h + 2.0 * pad}; }

  Rect united(const Rect& r) const {
    const double l = std::min(x, r.x);
    const double t = std::min(y, r.y);
    return {l, t, std::max(right(), r.right()) - l, std::max(bottom(), r.bottom()) - t};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

using RectSet = std::vector<Rect>;

/// True iff `p` lies inside any rectangle of `region`.
inline bool hit_test(Point p, std::span<const Rect> region) {
  return std::any_of(region.begin(), region.end(), [p](const Rect& r) { return r.contains(p); });
}

}  // namespace gary

#include "gv/representation.hpp"

#include <algorithm>
#include <cmath>

namespace gv {

static double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

GlidingRep clamp_rep(const GlidingRep& rep) {
  GlidingRep out = rep;
  for (double& a : out.alpha) a = clamp01(a);
  out.r = clamp01(out.r);
  return out;
}

GlidingRep encode(const Quad& obj) {
  if (!finite(obj)) fail(errc::invalid_input, "non-finite quad");
  const auto& v = obj.v;
  double l = v[0].x, r = v[0].x, t = v[0].y, b = v[0].y;
  for (int i = 1; i < 4; ++i) {
    l = std::min(l, v[i].x);
    r = std::max(r, v[i].x);
    t = std::min(t, v[i].y);
    b = std::max(b, v[i].y);
  }
  const double w = r - l;
  const double h = b - t;
  if (w < kAreaEps || h < kAreaEps) {
    fail(errc::degenerate_geometry, "quad collapses to zero width or height");
  }

  // Extreme vertices v1..v4 = topmost / rightmost / bottommost / leftmost,
  // ties broken toward the gliding direction (+x, +y, -x, -y respectively).
  int i1 = 0, i2 = 0, i3 = 0, i4 = 0;
  for (int i = 1; i < 4; ++i) {
    if (v[i].y < v[i1].y || (v[i].y == v[i1].y && v[i].x > v[i1].x)) i1 = i;
    if (v[i].x > v[i2].x || (v[i].x == v[i2].x && v[i].y > v[i2].y)) i2 = i;
    if (v[i].y > v[i3].y || (v[i].y == v[i3].y && v[i].x < v[i3].x)) i3 = i;
    if (v[i].x < v[i4].x || (v[i].x == v[i4].x && v[i].y < v[i4].y)) i4 = i;
  }

  GlidingRep rep;
  rep.hbox = HBox{0.5 * (l + r), 0.5 * (t + b), w, h};
  rep.alpha = {clamp01((v[i1].x - l) / w), clamp01((v[i2].y - t) / h),
               clamp01((r - v[i3].x) / w), clamp01((b - v[i4].y) / h)};
  const double obj_area = area(obj);
  if (obj_area < kAreaEps) fail(errc::degenerate_geometry, "quad has (near) zero area");
  rep.r = std::min(1.0, obj_area / (w * h));
  return rep;
}

Quad decode(const GlidingRep& rep) {
  const GlidingRep c = clamp_rep(rep);
  const double l = c.hbox.left();
  const double t = c.hbox.top();
  const double rr = c.hbox.right();
  const double bb = c.hbox.bottom();
  const double w = c.hbox.w;
  const double h = c.hbox.h;
  return Quad{{Point{l + c.alpha[0] * w, t},     // v1 on the top side
               Point{rr, t + c.alpha[1] * h},    // v2 on the right side
               Point{rr - c.alpha[2] * w, bb},   // v3 on the bottom side
               Point{l, bb - c.alpha[3] * h}}};  // v4 on the left side
}

Quad select(const GlidingRep& rep, const SelectionPolicy& policy) {
  if (rep.r > policy.t_r) return hbox_quad(rep.hbox);
  return decode(rep);
}

double obliquity(const Quad& obj, const HBox& box) {
  if (box.w < kAreaEps || box.h < kAreaEps) {
    fail(errc::degenerate_geometry, "zero-area box");
  }
  const double slack = 1e-6;
  for (const Point& p : obj.v) {
    if (p.x < box.left() - slack || p.x > box.right() + slack || p.y < box.top() - slack ||
        p.y > box.bottom() + slack) {
      fail(errc::invalid_input, "box does not enclose the object");
    }
  }
  return std::min(1.0, area(obj) / (box.w * box.h));
}

}  // namespace gv

#include "gv/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace gv {

bool finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

bool finite(const Quad& q) {
  return finite(q.v[0]) && finite(q.v[1]) && finite(q.v[2]) && finite(q.v[3]);
}

double signed_area_2x(const Point* pts, int n) {
  // Shoelace with two canonicalizations: translate to the min corner and
  // start the sum at the lexicographically smallest vertex. The translation
  // keeps products exact for axis-aligned rectangles (the ratio r must come
  // out exactly 1 for them); the canonical start makes the float rounding
  // invariant to cyclic vertex relabeling.
  if (n < 3) return 0.0;
  Point o = pts[0];
  int m = 0;
  for (int i = 1; i < n; ++i) {
    o.x = std::min(o.x, pts[i].x);
    o.y = std::min(o.y, pts[i].y);
    if (pts[i].x < pts[m].x || (pts[i].x == pts[m].x && pts[i].y < pts[m].y)) m = i;
  }
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const Point a = pts[(m + k) % n] - o;
    const Point b = pts[(m + k + 1) % n] - o;
    s += cross(a, b);
  }
  return s;
}

static void check_finite(const Point* pts, int n) {
  for (int i = 0; i < n; ++i) {
    if (!finite(pts[i])) fail(errc::invalid_input, "non-finite polygon coordinate");
  }
}

double area(const Polygon& poly) {
  check_finite(poly.data(), static_cast<int>(poly.size()));
  return 0.5 * std::abs(signed_area_2x(poly.data(), static_cast<int>(poly.size())));
}

double area(const Quad& q) {
  check_finite(q.v.data(), 4);
  return 0.5 * std::abs(signed_area_2x(q.v.data(), 4));
}

bool is_clockwise(const Quad& q) { return signed_area_2x(q.v.data(), 4) > 0.0; }

bool is_convex(const Quad& q) {
  for (int i = 0; i < 4; ++i) {
    const Point a = q.v[i];
    const Point b = q.v[(i + 1) % 4];
    const Point c = q.v[(i + 2) % 4];
    if (cross(b - a, c - b) <= 0.0) return false;
  }
  return true;
}

// Monotone-chain convex hull with strict turns (collinear points dropped).
// Output has positive shoelace, i.e. canonical orientation.
static Polygon convex_hull(Polygon pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](Point a, Point b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) return pts;
  Polygon hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (int i = n - 2, lo = k + 1; i >= 0; --i) {  // upper chain
    while (k >= lo && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

Quad canonicalize_quad(const Quad& q) {
  check_finite(q.v.data(), 4);
  // Fast path: already simple, convex arrangement; fix orientation only.
  Quad fwd = q;
  if (is_clockwise(fwd) && is_convex(fwd)) return fwd;
  Quad rev{{q.v[0], q.v[3], q.v[2], q.v[1]}};
  if (is_clockwise(rev) && is_convex(rev)) return rev;
  // Repair via convex hull; reject if the hull is no longer a quadrilateral.
  Polygon hull = convex_hull({q.v.begin(), q.v.end()});
  if (hull.size() != 4) {
    fail(errc::invalid_input, "quad is degenerate or not repairable to a convex quadrilateral");
  }
  return Quad{{hull[0], hull[1], hull[2], hull[3]}};
}

HBox aabb(const Point* pts, int n) {
  if (n < 3) fail(errc::invalid_input, "aabb needs at least 3 vertices");
  check_finite(pts, n);
  double l = pts[0].x, r = pts[0].x, t = pts[0].y, b = pts[0].y;
  for (int i = 1; i < n; ++i) {
    l = std::min(l, pts[i].x);
    r = std::max(r, pts[i].x);
    t = std::min(t, pts[i].y);
    b = std::max(b, pts[i].y);
  }
  const double w = r - l;
  const double h = b - t;
  if (w < kAreaEps || h < kAreaEps) {
    fail(errc::degenerate_geometry, "polygon has (near) zero extent along an axis");
  }
  return HBox{0.5 * (l + r), 0.5 * (t + b), w, h};
}

HBox aabb(const Quad& q) { return aabb(q.v.data(), 4); }
HBox aabb(const Polygon& poly) { return aabb(poly.data(), static_cast<int>(poly.size())); }

Quad hbox_quad(const HBox& b) {
  return Quad{{Point{b.left(), b.top()}, Point{b.right(), b.top()},
               Point{b.right(), b.bottom()}, Point{b.left(), b.bottom()}}};
}

Polygon to_polygon(const Quad& q) { return {q.v.begin(), q.v.end()}; }

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  Polygon out = subject;
  const int cn = static_cast<int>(clip.size());
  for (int e = 0; e < cn && !out.empty(); ++e) {
    const Point a = clip[e];
    const Point b = clip[(e + 1) % cn];
    const Point edge = b - a;
    Polygon in;
    in.swap(out);
    const int n = static_cast<int>(in.size());
    for (int i = 0; i < n; ++i) {
      const Point cur = in[i];
      const Point nxt = in[(i + 1) % n];
      // Interior of a clockwise-on-screen polygon lies on the cross >= 0 side.
      const double dc = cross(edge, cur - a);
      const double dn = cross(edge, nxt - a);
      if (dc >= 0.0) out.push_back(cur);
      if ((dc >= 0.0) != (dn >= 0.0)) {
        const double t = dc / (dc - dn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
  }
  if (out.size() < 3 || 0.5 * std::abs(signed_area_2x(out.data(), static_cast<int>(out.size()))) < kAreaEps) {
    return {};
  }
  return out;
}

static bool poly_less(const Polygon& a, const Polygon& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].x != b[i].x) return a[i].x < b[i].x;
    if (a[i].y != b[i].y) return a[i].y < b[i].y;
  }
  return false;
}

double iou(const Polygon& a, const Polygon& b) {
  // Fix the operand order so both argument orders run the identical float
  // program; this makes iou exactly symmetric.
  const Polygon* p = &a;
  const Polygon* q = &b;
  if (poly_less(b, a)) std::swap(p, q);
  const double ap = area(*p);
  const double aq = area(*q);
  const Polygon inter = clip_convex(*p, *q);
  const double ai =
      inter.empty() ? 0.0
                    : 0.5 * std::abs(signed_area_2x(inter.data(), static_cast<int>(inter.size())));
  const double uni = ap + aq - ai;
  if (uni < kAreaEps) return 0.0;
  const double v = ai / uni;
  return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

double iou(const Quad& a, const Quad& b) { return iou(to_polygon(a), to_polygon(b)); }

Quad rbox_to_quad(const RBox& rb) {
  const double c = std::cos(rb.theta);
  const double s = std::sin(rb.theta);
  const double hw = 0.5 * rb.w;
  const double hh = 0.5 * rb.h;
  // Local corners in TL,TR,BR,BL screen order (y-down), rotated then shifted.
  const Point local[4] = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
  Quad out;
  for (int i = 0; i < 4; ++i) {
    out.v[i] = Point{rb.x + c * local[i].x - s * local[i].y,
                     rb.y + s * local[i].x + c * local[i].y};
  }
  return out;
}

RBox min_area_rbox(const Polygon& pts) {
  Polygon hull = convex_hull(pts);
  if (hull.size() < 3) fail(errc::degenerate_geometry, "min_area_rbox on collinear points");
  // Work relative to one hull vertex to keep projections at object scale.
  const Point o = hull[0];
  for (auto& p : hull) p = p - o;
  const int n = static_cast<int>(hull.size());
  double best = -1.0;
  double bx = 0, by = 0, bw = 0, bh = 0, btheta = 0;
  for (int i = 0; i < n; ++i) {
    const Point e = hull[(i + 1) % n] - hull[i];
    const double len = std::hypot(e.x, e.y);
    if (len < kAreaEps) continue;
    const Point u{e.x / len, e.y / len};
    const Point v{-u.y, u.x};
    double umin = dot(u, hull[0]), umax = umin;
    double vmin = dot(v, hull[0]), vmax = vmin;
    for (int j = 1; j < n; ++j) {
      const double pu = dot(u, hull[j]);
      const double pv = dot(v, hull[j]);
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const double w = umax - umin;
    const double h = vmax - vmin;
    if (best < 0.0 || w * h < best) {
      best = w * h;
      const double cu = 0.5 * (umin + umax);
      const double cv = 0.5 * (vmin + vmax);
      bx = cu * u.x + cv * v.x;
      by = cu * u.y + cv * v.y;
      bw = w;
      bh = h;
      btheta = std::atan2(u.y, u.x);
    }
  }
  // A rectangle is pi-symmetric, so reduce theta into [-pi/2, pi/2).
  while (btheta >= 0.5 * M_PI) btheta -= M_PI;
  while (btheta < -0.5 * M_PI) btheta += M_PI;
  return RBox{bx + o.x, by + o.y, bw, bh, btheta};
}

RBox min_area_rbox(const Quad& q) { return min_area_rbox(to_polygon(q)); }

}  // namespace gv

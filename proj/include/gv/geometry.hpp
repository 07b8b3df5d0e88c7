#pragma once

// 2-D polygon primitives in image coordinates (y grows downward).
// Canonical polygon orientation is clockwise on screen, which under y-down
// gives a positive raw shoelace sum. All functions are pure.

#include <array>
#include <vector>

#include "gv/errors.hpp"

namespace gv {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

// Ordered 4-vertex polygon. Plain aggregate: invariants (simple, convex,
// canonical orientation) are established by canonicalize_quad, not the type.
struct Quad {
  std::array<Point, 4> v{};
};

// Axis-aligned box as center + size.
struct HBox {
  double x = 0.0;  // center
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double left() const { return x - 0.5 * w; }
  double top() const { return y - 0.5 * h; }
  double right() const { return x + 0.5 * w; }
  double bottom() const { return y + 0.5 * h; }
};

// Rotated rectangle: center, size, angle in radians within [-pi/2, pi/2).
struct RBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;
};

using Polygon = std::vector<Point>;

// Intersections with area below this are treated as empty.
inline constexpr double kAreaEps = 1e-12;

bool finite(Point p);
bool finite(const Quad& q);

// Twice the signed shoelace area, evaluated after translating by the first
// vertex so that axis-aligned rectangles come out exactly as 2*w*h.
double signed_area_2x(const Point* pts, int n);

// Absolute polygon area; orientation-independent. Throws on non-finite input.
double area(const Polygon& poly);
double area(const Quad& q);

// Positive shoelace <=> clockwise on screen under y-down.
bool is_clockwise(const Quad& q);
bool is_convex(const Quad& q);  // assumes canonical (clockwise) orientation

// Establish the Quad invariants: finite coordinates, clockwise orientation,
// convex and simple. Non-convex / self-intersecting inputs are repaired via
// convex hull when the hull still has 4 distinct vertices, else rejected.
Quad canonicalize_quad(const Quad& q);

// Tightest axis-aligned box containing every vertex. Throws
// degenerate_geometry when either extent collapses.
HBox aabb(const Point* pts, int n);
HBox aabb(const Quad& q);
HBox aabb(const Polygon& poly);

Quad hbox_quad(const HBox& b);  // axis-aligned quad TL,TR,BR,BL

// Sutherland-Hodgman intersection of two convex polygons in canonical
// orientation. Returns an empty polygon when the overlap area is < kAreaEps.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

// Exact intersection-over-union via convex clipping. Symmetric bit-for-bit:
// the operands are ordered canonically before clipping so iou(a,b) and
// iou(b,a) execute the same float program.
double iou(const Polygon& a, const Polygon& b);
double iou(const Quad& a, const Quad& b);

Polygon to_polygon(const Quad& q);

// Corners of the rotated rectangle in canonical clockwise order.
Quad rbox_to_quad(const RBox& rb);

// Minimum-area enclosing rotated rectangle (rotating calipers over the
// convex hull). theta is reduced to [-pi/2, pi/2).
RBox min_area_rbox(const Polygon& pts);
RBox min_area_rbox(const Quad& q);

}  // namespace gv

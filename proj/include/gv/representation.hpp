#pragma once

// Gliding-vertex representation of an oriented object: the horizontal
// bounding box plus four length ratios alpha that slide one vertex along
// each box side, plus the obliquity factor r = area(object)/area(hbox).
//
// Corner correspondence and gliding directions (y-down screen coords):
//   v1 glides from TL along +x on the top side    (alpha1 * w)
//   v2 glides from TR along +y on the right side  (alpha2 * h)
//   v3 glides from BR along -x on the bottom side (alpha3 * w)
//   v4 glides from BL along -y on the left side   (alpha4 * h)
// alpha = 1 (and r = 1) for axis-aligned rectangles, exactly.

#include <array>

#include "gv/geometry.hpp"

namespace gv {

struct GlidingRep {
  HBox hbox;
  std::array<double, 4> alpha{1.0, 1.0, 1.0, 1.0};
  double r = 1.0;
};

struct SelectionPolicy {
  double t_r = 0.8;  // obliquity threshold; r > t_r picks the horizontal box
};

// Clamp alpha and r into [0,1]; guards file-loaded or raw-model values.
GlidingRep clamp_rep(const GlidingRep& rep);

// Extract the representation from a quad. Extreme-point ties are broken by
// picking the vertex furthest along the gliding direction, which makes the
// axis-aligned case come out at alpha = (1,1,1,1), r = 1 with no rounding.
GlidingRep encode(const Quad& obj);

// Reconstruct the quad (v1..v4 as documented above). alpha is clamped first;
// never throws.
Quad decode(const GlidingRep& rep);

// r > t_r: the object is nearly horizontal, return the axis-aligned quad of
// the hbox; otherwise return the decoded oriented quad. Equality stays
// oriented (strict comparison).
Quad select(const GlidingRep& rep, const SelectionPolicy& policy);

// Area ratio area(obj)/area(box) in (0,1]. box must enclose obj (1e-6 slack).
double obliquity(const Quad& obj, const HBox& box);

}  // namespace gv

#pragma once

// Synthetic ground truth plus the desk-scale simulations behind the
// representation claims: angle-error vs offset-error sensitivity at matched
// mean vertex displacement, and the vertex-ordering discontinuity.

#include <vector>

#include "gv/dataio.hpp"
#include "gv/geometry.hpp"
#include "gv/representation.hpp"
#include "gv/rng.hpp"

namespace gv {

struct SceneSpec {
  int width = 1024;
  int height = 1024;
  int min_objects = 6;
  int max_objects = 14;
  double min_aspect = 1.0;
  double max_aspect = 9.0;
  double min_size = 60.0;   // long side, pixels
  double max_size = 220.0;
  double angle_min = -M_PI / 2;  // uniform angle range...
  double angle_max = M_PI / 2;
  double axis_aligned_frac = 0.0;  // ...mixed with exactly-horizontal objects
  double overlap_cap = 0.05;       // max pairwise IoU
  uint64_t seed = 0;
};

// Class label derived from the aspect ratio, so classification is learnable
// from geometric features alone.
const char* class_of_aspect(double aspect);
std::vector<std::string> class_names();

// Rotated-rectangle objects, deterministic for a fixed seed, all inside the
// image, pairwise IoU <= overlap_cap (rejection sampling).
std::vector<GtRecord> gen_scene(const SceneSpec& spec);

enum class PerturbKind { rbox, vertex, gliding };

struct PerturbSpec {
  PerturbKind kind = PerturbKind::gliding;
  double eps = 0.0;  // radians for rbox, fraction-of-side for vertex/gliding
  uint64_t seed = 0;
};

// Representation-specific corruption of a ground-truth quad:
//  rbox    - fit the min-area rotated rect, add eps to theta, re-emit
//  vertex  - displace each vertex by a random direction, length
//            eps * (mean side length)
//  gliding - encode, add one sign-random eps to every alpha (clamped), decode
Quad perturb(const Quad& gt, PerturbKind kind, double eps, Rng& rng);
Quad perturb(const Quad& gt, const PerturbSpec& spec);

// Mean vertex displacement a rotation by eps about the center induces on a
// w x h rectangle (every corner moves along a chord of the same length).
double rotation_displacement(double w, double h, double eps);

// Gliding noise magnitude that produces the same mean vertex displacement d
// on a box with sides bw, bh: each alpha_i moves its vertex by eps*side, so
// the mean over the four vertices is eps*(bw+bh)/2.
double matched_gliding_eps(double d, double bw, double bh);

struct SweepCell {
  PerturbKind kind;
  double aspect = 0.0;
  double eps_deg = 0.0;  // the angle-error grid value this cell is matched to
  double mean_iou = 0.0;
  double std_iou = 0.0;
  int trials = 0;
};

// Mean IoU between original and perturbed rectangles per (kind, aspect,
// eps) cell. The eps grid is in degrees of angle error; vertex and gliding
// noise are matched to the displacement that angle error induces per trial.
// Trials are paired across kinds (same rectangles) to sharpen comparisons.
// Trial rectangles: long side U(60,160), angle U(-pi/2, pi/2), centered.
std::vector<SweepCell> robustness_sweep(const std::vector<double>& aspects,
                                        const std::vector<double>& eps_deg,
                                        const std::vector<PerturbKind>& kinds, int trials,
                                        uint64_t seed);

std::string sweep_csv(const std::vector<SweepCell>& cells);

struct DiscontinuitySample {
  double theta_deg = 0.0;
  double vertex_jump = 0.0;   // L2 between ordered 8-coordinate targets
  double gliding_jump = 0.0;  // L2 between (x,y,w,h,alpha1..4) targets
};

struct DiscontinuityReport {
  std::vector<DiscontinuitySample> sweep;
  double max_vertex_jump = 0.0;
  double theta_at_max_deg = 0.0;  // where the vertex-order flip lands
  double max_gliding_jump = 0.0;
};

// Regression-target jump |T(theta+delta) - T(theta)| over an angle sweep
// for a rectangle of the given aspect. The vertex baseline orders vertices
// "topmost first (ties toward smaller x), then clockwise".
DiscontinuityReport vertex_order_discontinuity(double aspect, double theta_min_deg,
                                               double theta_max_deg, int steps, double delta_deg,
                                               double long_side = 160.0);

struct SelectionBenchResult {
  double map_selected = 0.0;  // t_r = 0.8 selection
  double map_oriented = 0.0;  // always-decode variant
  double iou_thresh = 0.7;
};

// Fixed benchmark for the obliquity-guided selection: scenes mixing
// horizontal and oriented objects, detections = ground truth with noisy
// alpha, evaluated at IoU 0.7 with and without selection.
SelectionBenchResult selection_benchmark(uint64_t seed);

}  // namespace gv

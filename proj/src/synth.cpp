#include "gv/synth.hpp"

#include <algorithm>
#include <cmath>

#include "gv/eval.hpp"

namespace gv {

const char* class_of_aspect(double aspect) {
  if (aspect < 2.5) return "compact";
  if (aspect < 5.5) return "midsize";
  return "elongated";
}

std::vector<std::string> class_names() { return {"compact", "midsize", "elongated"}; }

std::vector<GtRecord> gen_scene(const SceneSpec& spec) {
  if (spec.min_objects < 0 || spec.max_objects < spec.min_objects) {
    fail(errc::invalid_input, "gen_scene: bad object count range");
  }
  if (spec.overlap_cap < 0.0 || spec.overlap_cap >= 1.0) {
    fail(errc::invalid_input, "gen_scene: overlap cap must be in [0,1)");
  }
  if (spec.min_aspect < 1.0 || spec.max_aspect < spec.min_aspect) {
    fail(errc::invalid_input, "gen_scene: bad aspect range");
  }
  Rng rng(spec.seed);
  const int count = rng.uniform_int(spec.min_objects, spec.max_objects);
  std::vector<GtRecord> out;
  std::vector<Polygon> placed;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 20000) {
      fail(errc::invalid_input, "gen_scene: could not place objects under the overlap cap");
    }
    const double aspect = rng.uniform(spec.min_aspect, spec.max_aspect);
    const double w = rng.uniform(spec.min_size, spec.max_size);
    const double h = w / aspect;
    const bool axis_aligned = rng.uniform01() < spec.axis_aligned_frac;
    const double theta = axis_aligned ? 0.0 : rng.uniform(spec.angle_min, spec.angle_max);
    // Keep the whole rotated rect inside the image.
    const double bw = w * std::abs(std::cos(theta)) + h * std::abs(std::sin(theta));
    const double bh = w * std::abs(std::sin(theta)) + h * std::abs(std::cos(theta));
    if (bw >= spec.width || bh >= spec.height) continue;
    const double cx = rng.uniform(0.5 * bw, spec.width - 0.5 * bw);
    const double cy = rng.uniform(0.5 * bh, spec.height - 0.5 * bh);
    const Quad q = rbox_to_quad(RBox{cx, cy, w, h, theta});
    const Polygon poly = to_polygon(q);
    bool ok = true;
    for (const Polygon& p : placed) {
      if (iou(poly, p) > spec.overlap_cap) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    placed.push_back(poly);
    out.push_back(GtRecord{q, class_of_aspect(aspect), false});
  }
  return out;
}

double rotation_displacement(double w, double h, double eps) {
  return std::hypot(w, h) * std::abs(std::sin(0.5 * eps));
}

double matched_gliding_eps(double d, double bw, double bh) {
  return std::min(1.0, 2.0 * d / (bw + bh));
}

Quad perturb(const Quad& gt, PerturbKind kind, double eps, Rng& rng) {
  if (eps < 0.0) fail(errc::invalid_input, "perturb: eps must be >= 0");
  switch (kind) {
    case PerturbKind::rbox: {
      RBox rb = min_area_rbox(gt);
      rb.theta += eps;
      return rbox_to_quad(rb);
    }
    case PerturbKind::vertex: {
      double perimeter = 0.0;
      for (int i = 0; i < 4; ++i) {
        const Point e = gt.v[(i + 1) % 4] - gt.v[i];
        perimeter += std::hypot(e.x, e.y);
      }
      const double step = eps * 0.25 * perimeter;  // eps * mean side length
      Quad out = gt;
      for (int i = 0; i < 4; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        out.v[i] = out.v[i] + Point{step * std::cos(phi), step * std::sin(phi)};
      }
      return out;
    }
    case PerturbKind::gliding: {
      GlidingRep rep = encode(gt);
      const double s = rng.sign();
      for (double& a : rep.alpha) a = std::clamp(a + s * eps, 0.0, 1.0);
      return decode(rep);
    }
  }
  fail(errc::invalid_input, "perturb: unknown kind");
}

Quad perturb(const Quad& gt, const PerturbSpec& spec) {
  Rng rng(spec.seed);
  return perturb(gt, spec.kind, spec.eps, rng);
}

std::vector<SweepCell> robustness_sweep(const std::vector<double>& aspects,
                                        const std::vector<double>& eps_deg,
                                        const std::vector<PerturbKind>& kinds, int trials,
                                        uint64_t seed) {
  if (trials < 1) fail(errc::invalid_input, "robustness_sweep: trials must be >= 1");
  if (aspects.empty() || eps_deg.empty() || kinds.empty()) {
    fail(errc::invalid_input, "robustness_sweep: empty grid");
  }
  std::vector<SweepCell> cells;
  const Rng base(seed);
  for (size_t ai = 0; ai < aspects.size(); ++ai) {
    for (size_t ei = 0; ei < eps_deg.size(); ++ei) {
      const double eps = eps_deg[ei] * M_PI / 180.0;
      // One rectangle stream per (aspect, eps) cell shared by all kinds, a
      // separate noise stream per kind: paired trials, order-independent.
      Rng rect_rng = base.fork(1000 + ai * 97 + ei);
      std::vector<Rng> noise;
      for (size_t ki = 0; ki < kinds.size(); ++ki) {
        noise.push_back(base.fork(5000 + (ai * 97 + ei) * 13 + ki));
      }
      std::vector<double> sum(kinds.size(), 0.0), sumsq(kinds.size(), 0.0);
      for (int t = 0; t < trials; ++t) {
        const double w = rect_rng.uniform(60.0, 160.0);
        const double h = w / aspects[ai];
        const double theta = rect_rng.uniform(-M_PI / 2, M_PI / 2);
        const Quad q = rbox_to_quad(RBox{0.0, 0.0, w, h, theta});
        const double d = rotation_displacement(w, h, eps);
        for (size_t ki = 0; ki < kinds.size(); ++ki) {
          double kind_eps = eps;
          if (kinds[ki] != PerturbKind::rbox) {
            // Convert the angle error to the matched offset magnitude.
            if (kinds[ki] == PerturbKind::gliding) {
              const HBox box = aabb(q);
              kind_eps = matched_gliding_eps(d, box.w, box.h);
            } else {
              const double mean_side = 0.5 * (w + h);
              kind_eps = eps == 0.0 ? 0.0 : d / mean_side;
            }
          }
          const Quad p = perturb(q, kinds[ki], kind_eps, noise[ki]);
          const double v = iou(q, p);
          sum[ki] += v;
          sumsq[ki] += v * v;
        }
      }
      for (size_t ki = 0; ki < kinds.size(); ++ki) {
        const double mean = sum[ki] / trials;
        const double var = std::max(0.0, sumsq[ki] / trials - mean * mean);
        cells.push_back(SweepCell{kinds[ki], aspects[ai], eps_deg[ei], mean, std::sqrt(var),
                                  trials});
      }
    }
  }
  return cells;
}

static const char* kind_name(PerturbKind k) {
  switch (k) {
    case PerturbKind::rbox: return "rbox";
    case PerturbKind::vertex: return "vertex";
    case PerturbKind::gliding: return "gliding";
  }
  return "?";
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string s = "kind,aspect,epsilon,mean_iou,std_iou,trials\n";
  for (const auto& c : cells) {
    s += kind_name(c.kind);
    s += ',' + fmt6(c.aspect) + ',' + fmt6(c.eps_deg) + ',' + fmt6(c.mean_iou) + ',' +
         fmt6(c.std_iou) + ',' + std::to_string(c.trials) + '\n';
  }
  return s;
}

// Ordered vertex targets for the vertex-regression baseline: topmost vertex
// first (ties toward smaller x), cyclic order preserved.
static std::array<Point, 4> ordered_vertices(const Quad& q) {
  int first = 0;
  for (int i = 1; i < 4; ++i) {
    if (q.v[i].y < q.v[first].y || (q.v[i].y == q.v[first].y && q.v[i].x < q.v[first].x)) {
      first = i;
    }
  }
  std::array<Point, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = q.v[(first + i) % 4];
  return out;
}

DiscontinuityReport vertex_order_discontinuity(double aspect, double theta_min_deg,
                                               double theta_max_deg, int steps, double delta_deg,
                                               double long_side) {
  if (steps < 2 || delta_deg <= 0.0 || aspect < 1.0) {
    fail(errc::invalid_input, "vertex_order_discontinuity: bad sweep parameters");
  }
  const double w = long_side;
  const double h = long_side / aspect;
  const double delta = delta_deg * M_PI / 180.0;

  auto vertex_target = [&](double theta) {
    return ordered_vertices(rbox_to_quad(RBox{0.0, 0.0, w, h, theta}));
  };
  auto gliding_target = [&](double theta) {
    const GlidingRep rep = encode(rbox_to_quad(RBox{0.0, 0.0, w, h, theta}));
    return std::array<double, 9>{rep.hbox.x,   rep.hbox.y,   rep.hbox.w,
                                 rep.hbox.h,   rep.alpha[0], rep.alpha[1],
                                 rep.alpha[2], rep.alpha[3], rep.r};
  };

  DiscontinuityReport rep;
  for (int k = 0; k < steps; ++k) {
    const double theta_deg = theta_min_deg + (theta_max_deg - theta_min_deg) * k / (steps - 1);
    const double theta = theta_deg * M_PI / 180.0;

    const auto va = vertex_target(theta);
    const auto vb = vertex_target(theta + delta);
    double vj = 0.0;
    for (int i = 0; i < 4; ++i) {
      const Point dpt = vb[i] - va[i];
      vj += dot(dpt, dpt);
    }
    vj = std::sqrt(vj);

    const auto ga = gliding_target(theta);
    const auto gb = gliding_target(theta + delta);
    double gj = 0.0;
    for (int i = 0; i < 9; ++i) gj += (gb[i] - ga[i]) * (gb[i] - ga[i]);
    gj = std::sqrt(gj);

    rep.sweep.push_back(DiscontinuitySample{theta_deg, vj, gj});
    if (vj > rep.max_vertex_jump) {
      rep.max_vertex_jump = vj;
      rep.theta_at_max_deg = theta_deg;
    }
    rep.max_gliding_jump = std::max(rep.max_gliding_jump, gj);
  }
  return rep;
}

SelectionBenchResult selection_benchmark(uint64_t seed) {
  SelectionBenchResult res;
  res.iou_thresh = 0.7;
  const SelectionPolicy with_selection{0.8};

  std::vector<DetInstance> dets_selected, dets_oriented;
  std::vector<GtInstance> gts;
  Rng noise_rng = Rng(seed).fork(77);

  for (int img = 0; img < 20; ++img) {
    SceneSpec spec;
    spec.seed = seed + 1000 * (img + 1);
    spec.axis_aligned_frac = 0.4;  // mix of horizontal and oriented objects
    spec.min_aspect = 1.0;
    spec.max_aspect = 8.0;
    const std::string image = "bench_" + std::to_string(img);
    for (const GtRecord& g : gen_scene(spec)) {
      gts.push_back(GtInstance{image, g.cls, to_polygon(g.quad), g.difficult});
      // Detections are the ground truth seen through noisy alpha heads;
      // each head output carries its own error. 0.25 is large enough that
      // a clamped all-inward draw pushes an axis-aligned decode below IoU
      // 0.7, which is exactly the failure mode selection guards against.
      GlidingRep rep = encode(g.quad);
      for (double& a : rep.alpha) a = std::clamp(a + noise_rng.sign() * 0.25, 0.0, 1.0);
      const double score = noise_rng.uniform(0.7, 1.0);
      dets_selected.push_back(
          DetInstance{image, g.cls, score, to_polygon(select(rep, with_selection))});
      dets_oriented.push_back(DetInstance{image, g.cls, score, to_polygon(decode(rep))});
    }
  }
  res.map_selected = eval_map(dets_selected, gts, res.iou_thresh, ApMode::voc07).map;
  res.map_oriented = eval_map(dets_oriented, gts, res.iou_thresh, ApMode::voc07).map;
  return res;
}

}  // namespace gv

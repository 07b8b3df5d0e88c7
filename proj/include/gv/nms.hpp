#pragma once

// Greedy oriented non-maximum suppression over polygon detections using
// exact polygon IoU. A detection is suppressed iff some already-kept
// detection overlaps it with IoU >= thresh (and IoU > 0, so thresh = 0
// keeps exactly the non-overlapping set).

#include <vector>

#include "gv/geometry.hpp"

namespace gv {

struct ScoredPoly {
  Quad poly;
  double score = 0.0;
  int cls = 0;
};

// Single-class invocation: sort by descending score (stable; equal scores
// keep input order), then greedy suppression. Output preserves the
// descending score order.
std::vector<ScoredPoly> oriented_nms(const std::vector<ScoredPoly>& dets, double iou_thresh);

// Convenience wrapper that groups by cls and suppresses each class
// independently; output is ordered by class then descending score.
std::vector<ScoredPoly> oriented_nms_per_class(const std::vector<ScoredPoly>& dets,
                                               double iou_thresh);

}  // namespace gv

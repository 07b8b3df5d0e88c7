#include "gv/nms.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace gv {

std::vector<ScoredPoly> oriented_nms(const std::vector<ScoredPoly>& dets, double iou_thresh) {
  if (iou_thresh < 0.0 || iou_thresh > 1.0) {
    fail(errc::invalid_input, "nms iou_thresh must be in [0,1]");
  }
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });

  std::vector<ScoredPoly> kept;
  std::vector<Polygon> kept_polys;
  for (int idx : order) {
    bool suppressed = false;
    const Polygon poly = to_polygon(dets[idx].poly);
    for (const Polygon& k : kept_polys) {
      // Suppress on IoU >= thresh, but only by detections that actually
      // overlap; with thresh = 0 this keeps exactly the non-overlapping set.
      const double v = iou(poly, k);
      if (v >= iou_thresh && v > 0.0) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(dets[idx]);
      kept_polys.push_back(poly);
    }
  }
  return kept;
}

std::vector<ScoredPoly> oriented_nms_per_class(const std::vector<ScoredPoly>& dets,
                                               double iou_thresh) {
  std::map<int, std::vector<ScoredPoly>> by_class;
  for (const auto& d : dets) by_class[d.cls].push_back(d);
  std::vector<ScoredPoly> out;
  for (auto& [cls, group] : by_class) {
    auto kept = oriented_nms(group, iou_thresh);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

}  // namespace gv

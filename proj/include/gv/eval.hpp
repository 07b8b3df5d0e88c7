#pragma once

// Detection evaluation protocols at desk scale:
//  - VOC-style greedy matching and AP/mAP (11-point or all-points modes)
//  - precision / recall / F-measure with one-to-one IoU matching
//  - miss-rate vs FPPI curve and log-average miss rate (LAMR)
// Difficult ground truth is ignored everywhere: it never counts toward
// recall denominators, and a detection whose best match is difficult is
// neither TP nor FP.

#include <string>
#include <vector>

#include "gv/geometry.hpp"

namespace gv {

struct DetInstance {
  std::string image;
  std::string cls;
  double score = 0.0;
  Polygon poly;
};

struct GtInstance {
  std::string image;
  std::string cls;
  Polygon poly;
  bool difficult = false;
};

// Per-detection outcome of greedy matching within one image/class group.
struct MatchResult {
  std::vector<int8_t> det_label;  // 1 = TP, 0 = FP, -1 = ignored (difficult)
  std::vector<int> det_gt;        // matched gt index or -1
  std::vector<uint8_t> gt_matched;
};

// Greedy highest-score-first matching. dets must already be sorted by
// descending score; each det takes its max-IoU ground truth (difficult ones
// included in the argmax) and is TP iff that IoU >= thresh and the gt is
// unmatched and not difficult.
MatchResult match(const std::vector<Polygon>& dets, const std::vector<Polygon>& gts,
                  const std::vector<uint8_t>& difficult, double iou_thresh);

enum class ApMode { voc07, all_points };

struct PrCurve {
  std::vector<double> recall;     // non-decreasing
  std::vector<double> precision;
  std::string cls;
  double iou_thresh = 0.5;
};

double average_precision(const PrCurve& curve, ApMode mode);

struct ClassEval {
  std::string cls;
  int npos = 0;  // non-difficult ground truths
  PrCurve curve;
  double ap = 0.0;
};

struct MapReport {
  std::vector<ClassEval> classes;  // classes with npos >= 1, sorted by name
  double map = 0.0;
  double iou_thresh = 0.5;
  ApMode mode = ApMode::voc07;
};

MapReport eval_map(const std::vector<DetInstance>& dets, const std::vector<GtInstance>& gts,
                   double iou_thresh, ApMode mode);

struct PrfReport {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  int tp = 0;
  int det_counted = 0;  // detections minus ignored ones
  int npos = 0;
};

// One-to-one matching in IoU-descending order within each image/class
// group; symmetric in dets vs gts when no difficult flags are present.
PrfReport f_measure(const std::vector<DetInstance>& dets, const std::vector<GtInstance>& gts,
                    double iou_thresh = 0.5);

struct LamrReport {
  std::vector<double> fppi;  // operating points, one per counted detection
  std::vector<double> mr;
  std::vector<double> ref_fppi;  // 9 log-spaced reference points in [1e-2, 1]
  std::vector<double> ref_mr;
  double lamr = 1.0;
  int n_images = 0;
};

// Score-threshold sweep over all images. n_images is the image universe
// size (images with no ground truth still absorb false positives).
LamrReport lamr(const std::vector<DetInstance>& dets, const std::vector<GtInstance>& gts,
                double iou_thresh, int n_images);

}  // namespace gv

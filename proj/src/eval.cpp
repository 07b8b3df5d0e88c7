#include "gv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace gv {

MatchResult match(const std::vector<Polygon>& dets, const std::vector<Polygon>& gts,
                  const std::vector<uint8_t>& difficult, double iou_thresh) {
  if (difficult.size() != gts.size()) {
    fail(errc::invalid_input, "match: difficult flags must align with gts");
  }
  MatchResult res;
  res.det_label.assign(dets.size(), 0);
  res.det_gt.assign(dets.size(), -1);
  res.gt_matched.assign(gts.size(), 0);
  for (size_t d = 0; d < dets.size(); ++d) {
    double best = -1.0;
    int best_g = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(dets[d], gts[g]);
      if (v > best) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0 && best >= iou_thresh) {
      if (difficult[best_g]) {
        res.det_label[d] = -1;  // neither TP nor FP
      } else if (!res.gt_matched[best_g]) {
        res.det_label[d] = 1;
        res.det_gt[d] = best_g;
        res.gt_matched[best_g] = 1;
      }  // else: duplicate on an already-claimed gt -> FP (label stays 0)
    }
  }
  return res;
}

double average_precision(const PrCurve& curve, ApMode mode) {
  const auto& rec = curve.recall;
  const auto& pre = curve.precision;
  if (rec.size() != pre.size()) fail(errc::invalid_input, "pr curve length mismatch");
  if (mode == ApMode::voc07) {
    // Mean of interpolated precision at recalls {0, 0.1, ..., 1}.
    double ap = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double t = 0.1 * k;
      double p = 0.0;
      for (size_t i = 0; i < rec.size(); ++i) {
        if (rec[i] >= t - 1e-12) p = std::max(p, pre[i]);
      }
      ap += p / 11.0;
    }
    return ap;
  }
  // All-points: area under the monotone-interpolated curve.
  std::vector<double> mrec{0.0};
  mrec.insert(mrec.end(), rec.begin(), rec.end());
  mrec.push_back(rec.empty() ? 0.0 : 1.0);
  std::vector<double> mpre{0.0};
  mpre.insert(mpre.end(), pre.begin(), pre.end());
  mpre.push_back(0.0);
  for (int i = static_cast<int>(mpre.size()) - 2; i >= 0; --i) {
    mpre[i] = std::max(mpre[i], mpre[i + 1]);
  }
  double ap = 0.0;
  for (size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

// Rank a class's detections globally by score (stable on ties), run
// per-image greedy matching, and build the cumulative PR curve.
static ClassEval eval_class(const std::string& cls, const std::vector<const DetInstance*>& dets,
                            const std::map<std::string, std::vector<const GtInstance*>>& gt_by_img,
                            double iou_thresh) {
  ClassEval ce;
  ce.cls = cls;
  ce.curve.cls = cls;
  ce.curve.iou_thresh = iou_thresh;

  std::map<std::string, std::vector<uint8_t>> claimed;
  for (const auto& [img, gts] : gt_by_img) {
    claimed[img].assign(gts.size(), 0);
    for (const auto* g : gts) ce.npos += g->difficult ? 0 : 1;
  }

  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a]->score > dets[b]->score; });

  int tp = 0, fp = 0;
  for (int idx : order) {
    const DetInstance* d = dets[idx];
    const auto it = gt_by_img.find(d->image);
    double best = -1.0;
    int best_g = -1;
    if (it != gt_by_img.end()) {
      for (size_t g = 0; g < it->second.size(); ++g) {
        const double v = iou(d->poly, it->second[g]->poly);
        if (v > best) {
          best = v;
          best_g = static_cast<int>(g);
        }
      }
    }
    if (best_g >= 0 && best >= iou_thresh) {
      const GtInstance* g = it->second[best_g];
      auto& flags = claimed[d->image];
      if (g->difficult) continue;  // ignored: no PR point for this det
      if (!flags[best_g]) {
        flags[best_g] = 1;
        ++tp;
      } else {
        ++fp;
      }
    } else {
      ++fp;
    }
    ce.curve.recall.push_back(ce.npos > 0 ? static_cast<double>(tp) / ce.npos : 0.0);
    ce.curve.precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  return ce;
}

MapReport eval_map(const std::vector<DetInstance>& dets, const std::vector<GtInstance>& gts,
                   double iou_thresh, ApMode mode) {
  MapReport rep;
  rep.iou_thresh = iou_thresh;
  rep.mode = mode;

  std::map<std::string, std::map<std::string, std::vector<const GtInstance*>>> gt_by_cls_img;
  for (const auto& g : gts) gt_by_cls_img[g.cls][g.image].push_back(&g);
  std::map<std::string, std::vector<const DetInstance*>> det_by_cls;
  for (const auto& d : dets) det_by_cls[d.cls].push_back(&d);

  double sum = 0.0;
  int counted = 0;
  for (const auto& [cls, by_img] : gt_by_cls_img) {
    static const std::vector<const DetInstance*> none;
    const auto dit = det_by_cls.find(cls);
    ClassEval ce = eval_class(cls, dit == det_by_cls.end() ? none : dit->second, by_img, iou_thresh);
    if (ce.npos < 1) continue;  // only difficult gts: recall undefined, skip
    ce.ap = average_precision(ce.curve, mode);
    sum += ce.ap;
    ++counted;
    rep.classes.push_back(std::move(ce));
  }
  rep.map = counted > 0 ? sum / counted : 0.0;
  return rep;
}

PrfReport f_measure(const std::vector<DetInstance>& dets, const std::vector<GtInstance>& gts,
                    double iou_thresh) {
  PrfReport rep;
  // Group both sides by (image, class).
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<const DetInstance*>,
                                                          std::vector<const GtInstance*>>>
      groups;
  for (const auto& d : dets) groups[{d.image, d.cls}].first.push_back(&d);
  for (const auto& g : gts) {
    groups[{g.image, g.cls}].second.push_back(&g);
    rep.npos += g.difficult ? 0 : 1;
  }

  int ignored = 0;
  for (const auto& [key, dg] : groups) {
    const auto& ds = dg.first;
    const auto& gs = dg.second;
    // All candidate pairs above threshold, best overlaps first.
    struct Pair {
      double v;
      int d, g;
    };
    std::vector<Pair> pairs;
    for (size_t i = 0; i < ds.size(); ++i) {
      for (size_t j = 0; j < gs.size(); ++j) {
        const double v = iou(ds[i]->poly, gs[j]->poly);
        if (v >= iou_thresh) pairs.push_back({v, static_cast<int>(i), static_cast<int>(j)});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.v != b.v) return a.v > b.v;
      if (a.d != b.d) return a.d < b.d;
      return a.g < b.g;
    });
    std::vector<uint8_t> dused(ds.size(), 0), gused(gs.size(), 0);
    for (const auto& p : pairs) {
      if (dused[p.d] || gused[p.g]) continue;
      dused[p.d] = 1;
      gused[p.g] = 1;
      if (gs[p.g]->difficult) {
        ++ignored;  // matched a difficult gt: drop from both counts
      } else {
        ++rep.tp;
      }
    }
  }
  rep.det_counted = static_cast<int>(dets.size()) - ignored;
  rep.precision = rep.det_counted > 0 ? static_cast<double>(rep.tp) / rep.det_counted : 0.0;
  rep.recall = rep.npos > 0 ? static_cast<double>(rep.tp) / rep.npos : 0.0;
  rep.f = (rep.precision + rep.recall) > 0.0
              ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
              : 0.0;
  return rep;
}

LamrReport lamr(const std::vector<DetInstance>& dets, const std::vector<GtInstance>& gts,
                double iou_thresh, int n_images) {
  if (n_images < 1) fail(errc::invalid_input, "lamr needs n_images >= 1");
  LamrReport rep;
  rep.n_images = n_images;

  std::map<std::pair<std::string, std::string>, std::vector<const GtInstance*>> gt_by_img_cls;
  int npos = 0;
  for (const auto& g : gts) {
    gt_by_img_cls[{g.image, g.cls}].push_back(&g);
    npos += g.difficult ? 0 : 1;
  }
  std::map<std::pair<std::string, std::string>, std::vector<uint8_t>> claimed;
  for (const auto& [key, v] : gt_by_img_cls) claimed[key].assign(v.size(), 0);

  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });

  int tp = 0, fp = 0;
  for (int idx : order) {
    const auto& d = dets[idx];
    const auto it = gt_by_img_cls.find({d.image, d.cls});
    double best = -1.0;
    int best_g = -1;
    if (it != gt_by_img_cls.end()) {
      for (size_t g = 0; g < it->second.size(); ++g) {
        const double v = iou(d.poly, it->second[g]->poly);
        if (v > best) {
          best = v;
          best_g = static_cast<int>(g);
        }
      }
    }
    if (best_g >= 0 && best >= iou_thresh) {
      const GtInstance* g = it->second[best_g];
      auto& flags = claimed[{d.image, d.cls}];
      if (g->difficult) continue;  // ignored detection: no operating point
      if (!flags[best_g]) {
        flags[best_g] = 1;
        ++tp;
      } else {
        ++fp;
      }
    } else {
      ++fp;
    }
    rep.fppi.push_back(static_cast<double>(fp) / n_images);
    rep.mr.push_back(npos > 0 ? 1.0 - static_cast<double>(tp) / npos : 0.0);
  }

  // 9 reference FPPI points log-spaced over [1e-2, 1]; for each take the
  // miss rate at the largest achieved FPPI <= ref (1.0 if none).
  double sum_log = 0.0;
  for (int i = 0; i < 9; ++i) {
    const double ref = std::pow(10.0, -2.0 + 2.0 * i / 8.0);
    rep.ref_fppi.push_back(ref);
    double m = 1.0;
    for (size_t k = 0; k < rep.fppi.size(); ++k) {
      if (rep.fppi[k] <= ref) m = rep.mr[k];
    }
    rep.ref_mr.push_back(m);
    sum_log += std::log(std::max(m, 1e-10));
  }
  rep.lamr = std::exp(sum_log / 9.0);
  return rep;
}

}  // namespace gv

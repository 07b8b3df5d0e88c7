#pragma once

// Training objective of the detection head:
//   L = (1/N_cls) sum_i L_cls + (1/N_reg) sum_i p*_i * L_reg
//   L_reg = lambda1 * L_h + lambda2 * L_alpha + lambda3 * L_r
// with smooth-L1 regression parts and softmax cross-entropy classification.
// Every operation returns analytic gradients; all are verified against
// central finite differences in the tests.

#include <array>
#include <vector>

#include "gv/errors.hpp"
#include "gv/geometry.hpp"

namespace gv {

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 16.0;
  double smooth_l1_beta = 1.0;
};

// Quadratic inside |d| < beta, linear outside.
double smooth_l1(double d, double beta);
double smooth_l1_grad(double d, double beta);  // d/beta clipped to [-1, 1]

// R-CNN box deltas relative to an anchor/proposal box:
//   t_x=(x-x_a)/w_a, t_y=(y-y_a)/h_a, t_w=log(w/w_a), t_h=log(h/h_a)
std::array<double, 4> box_delta_encode(const HBox& gt, const HBox& anchor);
HBox box_delta_decode(const std::array<double, 4>& d, const HBox& anchor);

// Per-part losses. A null grad skips gradient output. Gradients are with
// respect to pred and overwrite the destination.
double l_alpha(const std::array<double, 4>& pred, const std::array<double, 4>& target,
               double beta, std::array<double, 4>* grad = nullptr);
double l_r(double pred, double target, double beta, double* grad = nullptr);
double l_cls(const std::vector<double>& logits, int cls, std::vector<double>* grad = nullptr);

// One proposal's head output. deltas has one 4-vector per class (class 0 =
// background, never regressed); alpha and r are post-sigmoid values.
struct HeadPrediction {
  std::vector<double> logits;
  std::vector<std::array<double, 4>> deltas;
  std::array<double, 4> alpha{};
  double r = 0.0;
};

struct HeadTarget {
  std::array<double, 4> deltas{};
  std::array<double, 4> alpha{};
  double r = 0.0;
};

struct BatchLabels {
  std::vector<int> cls;            // 0 = background
  std::vector<uint8_t> positive;   // p*_i; positives must have cls > 0
  int n_cls() const { return static_cast<int>(cls.size()); }
  int n_reg() const;
  static BatchLabels from_classes(const std::vector<int>& classes);
};

// Combined objective. Regression runs on the labeled class's delta slot for
// positives only; when grads is non-null it is resized/overwritten with
// d(loss)/d(prediction) in the same layout as preds.
double l_total(const std::vector<HeadPrediction>& preds, const std::vector<HeadTarget>& targets,
               const BatchLabels& labels, const LossWeights& weights,
               std::vector<HeadPrediction>* grads = nullptr);

}  // namespace gv

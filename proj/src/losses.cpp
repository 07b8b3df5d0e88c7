#include "gv/losses.hpp"

#include <algorithm>
#include <cmath>

namespace gv {

double smooth_l1(double d, double beta) {
  if (beta <= 0.0) fail(errc::invalid_input, "smooth_l1 beta must be > 0");
  const double ad = std::abs(d);
  if (ad < beta) return 0.5 * d * d / beta;
  return ad - 0.5 * beta;
}

double smooth_l1_grad(double d, double beta) {
  if (beta <= 0.0) fail(errc::invalid_input, "smooth_l1 beta must be > 0");
  return std::clamp(d / beta, -1.0, 1.0);
}

std::array<double, 4> box_delta_encode(const HBox& gt, const HBox& anchor) {
  if (gt.w <= 0.0 || gt.h <= 0.0 || anchor.w <= 0.0 || anchor.h <= 0.0) {
    fail(errc::invalid_input, "box_delta_encode needs positive box sizes");
  }
  return {(gt.x - anchor.x) / anchor.w, (gt.y - anchor.y) / anchor.h, std::log(gt.w / anchor.w),
          std::log(gt.h / anchor.h)};
}

HBox box_delta_decode(const std::array<double, 4>& d, const HBox& anchor) {
  if (anchor.w <= 0.0 || anchor.h <= 0.0) {
    fail(errc::invalid_input, "box_delta_decode needs a positive anchor size");
  }
  return HBox{anchor.x + d[0] * anchor.w, anchor.y + d[1] * anchor.h, anchor.w * std::exp(d[2]),
              anchor.h * std::exp(d[3])};
}

double l_alpha(const std::array<double, 4>& pred, const std::array<double, 4>& target,
               double beta, std::array<double, 4>* grad) {
  double loss = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double d = pred[i] - target[i];
    loss += smooth_l1(d, beta);
    if (grad) (*grad)[i] = smooth_l1_grad(d, beta);
  }
  return loss;
}

double l_r(double pred, double target, double beta, double* grad) {
  const double d = pred - target;
  if (grad) *grad = smooth_l1_grad(d, beta);
  return smooth_l1(d, beta);
}

double l_cls(const std::vector<double>& logits, int cls, std::vector<double>* grad) {
  const int n = static_cast<int>(logits.size());
  if (n < 2 || cls < 0 || cls >= n) fail(errc::invalid_input, "l_cls: bad logits/class");
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  if (grad) {
    grad->resize(n);
    for (int i = 0; i < n; ++i) {
      (*grad)[i] = std::exp(logits[i] - lse) - (i == cls ? 1.0 : 0.0);
    }
  }
  return lse - logits[cls];
}

int BatchLabels::n_reg() const {
  int n = 0;
  for (uint8_t p : positive) n += p;
  return n;
}

BatchLabels BatchLabels::from_classes(const std::vector<int>& classes) {
  BatchLabels lab;
  lab.cls = classes;
  lab.positive.reserve(classes.size());
  for (int c : classes) lab.positive.push_back(c > 0 ? 1 : 0);
  return lab;
}

double l_total(const std::vector<HeadPrediction>& preds, const std::vector<HeadTarget>& targets,
               const BatchLabels& labels, const LossWeights& weights,
               std::vector<HeadPrediction>* grads) {
  const size_t n = preds.size();
  if (targets.size() != n || labels.cls.size() != n || labels.positive.size() != n) {
    fail(errc::invalid_input, "l_total: mismatched batch lengths");
  }
  if (n == 0) fail(errc::invalid_input, "l_total: empty batch");
  const int n_cls = labels.n_cls();
  const int n_reg = labels.n_reg();
  const double reg_norm = n_reg > 0 ? 1.0 / n_reg : 0.0;
  const double beta = weights.smooth_l1_beta;

  if (grads) {
    grads->resize(n);
    for (size_t i = 0; i < n; ++i) {
      (*grads)[i].logits.assign(preds[i].logits.size(), 0.0);
      (*grads)[i].deltas.assign(preds[i].deltas.size(), {0.0, 0.0, 0.0, 0.0});
      (*grads)[i].alpha = {0.0, 0.0, 0.0, 0.0};
      (*grads)[i].r = 0.0;
    }
  }

  double loss = 0.0;
  std::vector<double> gl;
  for (size_t i = 0; i < n; ++i) {
    const int c = labels.cls[i];
    if (labels.positive[i] && c <= 0) fail(errc::invalid_input, "positive proposal labeled background");
    loss += l_cls(preds[i].logits, c, grads ? &gl : nullptr) / n_cls;
    if (grads) {
      for (size_t j = 0; j < gl.size(); ++j) (*grads)[i].logits[j] = gl[j] / n_cls;
    }
    if (!labels.positive[i]) continue;

    if (c >= static_cast<int>(preds[i].deltas.size())) {
      fail(errc::invalid_input, "l_total: class index outside delta slots");
    }
    double l_h = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double d = preds[i].deltas[c][j] - targets[i].deltas[j];
      l_h += smooth_l1(d, beta);
      if (grads) (*grads)[i].deltas[c][j] = weights.lambda1 * smooth_l1_grad(d, beta) * reg_norm;
    }
    std::array<double, 4> ga{};
    const double la = l_alpha(preds[i].alpha, targets[i].alpha, beta, grads ? &ga : nullptr);
    double gr = 0.0;
    const double lr = l_r(preds[i].r, targets[i].r, beta, grads ? &gr : nullptr);
    if (grads) {
      for (int j = 0; j < 4; ++j) (*grads)[i].alpha[j] = weights.lambda2 * ga[j] * reg_norm;
      (*grads)[i].r = weights.lambda3 * gr * reg_norm;
    }
    loss += (weights.lambda1 * l_h + weights.lambda2 * la + weights.lambda3 * lr) * reg_norm;
  }
  return loss;
}

}  // namespace gv

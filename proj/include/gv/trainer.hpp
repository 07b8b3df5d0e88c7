#pragma once

// Desk-scale trainable head: a 2-layer MLP mapping proposal features to
// class logits, per-class box deltas, and sigmoid-normalized alpha / r,
// trained with SGD + momentum on the combined objective and evaluated
// end-to-end (delta decode -> select -> NMS -> mAP).
//
// Proposals come from jittering ground-truth boxes plus background boxes
// (an RPN stand-in). Features are an RoIAlign stand-in: the proposal box
// (normalized), a noisy view of the underlying object's extreme vertices
// relative to the proposal frame, and a bias term -- 13 dims total.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "gv/losses.hpp"
#include "gv/nms.hpp"
#include "gv/representation.hpp"
#include "gv/rng.hpp"
#include "gv/synth.hpp"

namespace gv {

struct Proposal {
  HBox box;
  double iou_with_gt = 0.0;
  int gt = -1;  // index of the assigned gt, -1 = background
};

struct TrainConfig {
  double lr = 7.5e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int steps = 20000;
  std::vector<int> decay_steps{12000, 17000};  // lr is divided by 10 at each
  int batch = 64;
  uint64_t seed = 7;
  LossWeights weights;
  double pos_iou = 0.5;      // positive threshold
  double neg_per_pos = 3.0;  // batch composition 1:3
  int hidden = 64;
  double feature_noise = 0.05;  // vertex observation noise, fraction of object scale
  int jitters_per_gt = 6;
  int backgrounds_per_image = 18;
};

struct HeadModel {
  int in_dim = 0;
  int hidden = 0;
  int num_classes = 0;  // foreground classes K; logits span K+1
  Eigen::MatrixXd W1, W2;
  Eigen::VectorXd b1, b2;
  // Output layout: [K+1 logits][4(K+1) deltas][4 alpha][1 r].
  int out_dim() const { return 5 * (num_classes + 1) + 5; }
  static HeadModel init(int in_dim, int hidden, int num_classes, Rng& rng);
};

// One featurized proposal with its training label.
struct TrainExample {
  Eigen::VectorXd x;
  int cls = 0;  // 0 = background
  HeadTarget target;
};

struct DemoImage {
  std::string name;
  std::vector<GtRecord> gts;
  std::vector<int> gt_cls;  // 1..K, aligned with gts
  std::vector<Proposal> proposals;
  std::vector<Eigen::VectorXd> features;  // aligned with proposals
};

struct DemoDataset {
  std::vector<DemoImage> images;
  std::vector<TrainExample> examples;
  int feature_dim = 13;
  int num_classes = 3;
  int image_w = 1024;
  int image_h = 1024;
};

// RoIAlign stand-in. observed is the object quad under the proposal (its
// extreme vertices in encode's v1..v4 role order) or null for background.
Eigen::VectorXd featurize(const Proposal& p, const Quad* observed, int image_w, int image_h,
                          double noise, Rng& rng);

// Jittered proposals + features + targets for n_images fresh scenes.
DemoDataset make_demo_dataset(int n_images, uint64_t seed, const TrainConfig& cfg,
                              double axis_aligned_frac = 0.3);

// Combined loss of a fixed mini-batch with analytic parameter gradients
// (backprop through sigmoid/tanh); the same path sgd_fit steps on.
double head_loss(const HeadModel& m, const std::vector<const TrainExample*>& batch,
                 const LossWeights& weights, HeadModel* grads);

HeadPrediction head_forward(const HeadModel& m, const Eigen::VectorXd& x);

// One SGD + momentum + weight-decay update; exposed for the convex-case test.
void sgd_step(Eigen::Ref<Eigen::VectorXd> param, Eigen::Ref<Eigen::VectorXd> velocity,
              const Eigen::VectorXd& grad, double lr, double momentum, double weight_decay);

struct TrainResult {
  HeadModel model;
  std::vector<double> loss_trace;  // one entry per step
};

// Deterministic single-threaded training loop; throws training_diverged
// (with the step index) if the loss goes non-finite.
TrainResult sgd_fit(const HeadModel& m0, const DemoDataset& data, const TrainConfig& cfg);

struct Detection {
  std::string cls;
  double score = 0.0;
  GlidingRep rep;
  Quad shape;  // post-selection quad
};

// Head outputs -> delta-decoded hbox -> GlidingRep -> select -> per-class
// oriented NMS. Scores are softmax probabilities of the best foreground
// class; detections below score_thresh are dropped before NMS.
std::vector<Detection> infer(const HeadModel& m, const DemoImage& img,
                             const SelectionPolicy& policy, double nms_thresh,
                             double score_thresh);

// Checkpoint serialization (JSON tensor dump, versioned).
std::string model_to_json(const HeadModel& m);
HeadModel model_from_json(const std::string& text);

}  // namespace gv

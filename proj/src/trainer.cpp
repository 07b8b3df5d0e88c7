#include "gv/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace gv {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Axis-aligned IoU used for proposal assignment (the regression target is
// the horizontal box, so assignment follows it too).
double rect_iou(const HBox& a, const HBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

HeadPrediction split_raw(const Eigen::VectorXd& raw, int num_classes) {
  const int k1 = num_classes + 1;
  HeadPrediction p;
  p.logits.assign(raw.data(), raw.data() + k1);
  p.deltas.resize(k1);
  for (int c = 0; c < k1; ++c)
    for (int j = 0; j < 4; ++j) p.deltas[c][j] = raw(k1 + 4 * c + j);
  const int ao = 5 * k1;
  for (int j = 0; j < 4; ++j) p.alpha[j] = sigmoid(raw(ao + j));
  p.r = sigmoid(raw(ao + 4));
  return p;
}

Eigen::VectorXd forward_raw(const HeadModel& m, const Eigen::VectorXd& x, Eigen::VectorXd* h_out) {
  Eigen::VectorXd h = (m.W1 * x + m.b1).array().tanh();
  Eigen::VectorXd raw = m.W2 * h + m.b2;
  if (h_out) *h_out = std::move(h);
  return raw;
}

HeadModel zeros_like(const HeadModel& m) {
  HeadModel z = m;
  z.W1.setZero();
  z.b1.setZero();
  z.W2.setZero();
  z.b2.setZero();
  return z;
}

}  // namespace

HeadModel HeadModel::init(int in_dim, int hidden, int num_classes, Rng& rng) {
  if (in_dim < 1 || hidden < 1 || num_classes < 1)
    fail(errc::invalid_input, "model dimensions must be positive");
  HeadModel m;
  m.in_dim = in_dim;
  m.hidden = hidden;
  m.num_classes = num_classes;
  m.W1.resize(hidden, in_dim);
  m.W2.resize(m.out_dim(), hidden);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.b2 = Eigen::VectorXd::Zero(m.out_dim());
  const double s1 = std::sqrt(6.0 / (in_dim + hidden));
  for (int i = 0; i < m.W1.rows(); ++i)
    for (int j = 0; j < m.W1.cols(); ++j) m.W1(i, j) = rng.uniform(-s1, s1);
  const double s2 = std::sqrt(6.0 / (hidden + m.out_dim()));
  for (int i = 0; i < m.W2.rows(); ++i)
    for (int j = 0; j < m.W2.cols(); ++j) m.W2(i, j) = rng.uniform(-s2, s2);
  return m;
}

HeadPrediction head_forward(const HeadModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.in_dim) fail(errc::invalid_input, "feature dimension mismatch");
  return split_raw(forward_raw(m, x, nullptr), m.num_classes);
}

Eigen::VectorXd featurize(const Proposal& p, const Quad* observed, int image_w, int image_h,
                          double noise, Rng& rng) {
  if (p.box.w <= 0.0 || p.box.h <= 0.0) fail(errc::invalid_input, "empty proposal box");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(13);
  x(0) = p.box.x / image_w;
  x(1) = p.box.y / image_h;
  x(2) = p.box.w / image_w;
  x(3) = p.box.h / image_h;
  if (observed) {
    // Extreme vertices in gliding role order (top, right, bottom, left) so
    // the regression targets are smooth functions of the features. The
    // observation frame is scaled isotropically (one scale for both axes):
    // per-axis scaling would distort shape and make the aspect-ratio class
    // boundaries far harder to learn.
    const Quad roles = decode(encode(*observed));
    const double s = std::sqrt(p.box.w * p.box.h);
    double perim = 0.0;
    for (int i = 0; i < 4; ++i) {
      const Point d = roles.v[(i + 1) % 4] - roles.v[i];
      perim += std::sqrt(dot(d, d));
    }
    const double scale = noise * perim / 4.0;
    for (int i = 0; i < 4; ++i) {
      const double vx = roles.v[i].x + rng.normal(0.0, scale);
      const double vy = roles.v[i].y + rng.normal(0.0, scale);
      x(4 + 2 * i) = (vx - p.box.x) / s;
      x(5 + 2 * i) = (vy - p.box.y) / s;
    }
  }
  x(12) = 1.0;
  return x;
}

DemoDataset make_demo_dataset(int n_images, uint64_t seed, const TrainConfig& cfg,
                              double axis_aligned_frac) {
  if (n_images < 1) fail(errc::invalid_input, "need at least one image");
  DemoDataset data;
  data.num_classes = static_cast<int>(class_names().size());
  std::map<std::string, int> cls_index;
  {
    int k = 1;
    for (const auto& name : class_names()) cls_index[name] = k++;
  }
  Rng master(seed);
  for (int i = 0; i < n_images; ++i) {
    SceneSpec sp;
    sp.axis_aligned_frac = axis_aligned_frac;
    sp.seed = master.bits();
    DemoImage img;
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%03d", i);
    img.name = buf;
    img.gts = gen_scene(sp);
    data.image_w = sp.width;
    data.image_h = sp.height;

    std::vector<HBox> gt_boxes;
    std::vector<GlidingRep> gt_reps;
    for (const auto& g : img.gts) {
      img.gt_cls.push_back(cls_index.at(g.cls));
      gt_reps.push_back(encode(g.quad));
      gt_boxes.push_back(gt_reps.back().hbox);
    }

    auto assign = [&](const HBox& box) {
      Proposal p;
      p.box = box;
      for (size_t g = 0; g < gt_boxes.size(); ++g) {
        const double v = rect_iou(box, gt_boxes[g]);
        if (v > p.iou_with_gt) {
          p.iou_with_gt = v;
          p.gt = static_cast<int>(g);
        }
      }
      return p;
    };

    // Jittered copies of each gt box (an RPN stand-in).
    for (size_t g = 0; g < gt_boxes.size(); ++g) {
      const HBox& gb = gt_boxes[g];
      for (int j = 0; j < cfg.jitters_per_gt; ++j) {
        HBox box;
        box.x = gb.x + master.uniform(-0.12, 0.12) * gb.w;
        box.y = gb.y + master.uniform(-0.12, 0.12) * gb.h;
        box.w = gb.w * std::exp(master.uniform(-0.15, 0.15));
        box.h = gb.h * std::exp(master.uniform(-0.15, 0.15));
        img.proposals.push_back(assign(box));
      }
    }
    // Background boxes: re-drawn until they truly miss every object.
    int kept = 0, attempts = 0;
    while (kept < cfg.backgrounds_per_image && attempts < cfg.backgrounds_per_image * 40) {
      ++attempts;
      HBox box;
      box.w = std::exp(master.uniform(std::log(40.0), std::log(260.0)));
      box.h = std::exp(master.uniform(std::log(40.0), std::log(260.0)));
      box.x = master.uniform(box.w / 2, sp.width - box.w / 2);
      box.y = master.uniform(box.h / 2, sp.height - box.h / 2);
      Proposal p = assign(box);
      if (p.iou_with_gt >= 0.3) continue;
      p.gt = -1;  // below the observation floor: the head sees no object
      img.proposals.push_back(p);
      ++kept;
    }

    for (const auto& p : img.proposals) {
      const bool observed = p.gt >= 0 && p.iou_with_gt >= 0.3;
      const Quad* q = observed ? &img.gts[p.gt].quad : nullptr;
      img.features.push_back(
          featurize(p, q, sp.width, sp.height, cfg.feature_noise, master));

      TrainExample ex;
      ex.x = img.features.back();
      if (p.gt >= 0 && p.iou_with_gt >= cfg.pos_iou) {
        ex.cls = img.gt_cls[p.gt];
        ex.target.deltas = box_delta_encode(gt_boxes[p.gt], p.box);
        ex.target.alpha = gt_reps[p.gt].alpha;
        ex.target.r = gt_reps[p.gt].r;
      }
      data.examples.push_back(std::move(ex));
    }
    data.images.push_back(std::move(img));
  }
  bool any_pos = false;
  for (const auto& ex : data.examples) any_pos |= ex.cls > 0;
  if (!any_pos) fail(errc::invalid_input, "dataset contains no positive proposals");
  return data;
}

double head_loss(const HeadModel& m, const std::vector<const TrainExample*>& batch,
                 const LossWeights& weights, HeadModel* grads) {
  if (batch.empty()) fail(errc::invalid_input, "empty batch");
  const int n = static_cast<int>(batch.size());
  const int k1 = m.num_classes + 1;
  std::vector<HeadPrediction> preds(n);
  std::vector<HeadTarget> targets(n);
  std::vector<int> classes(n);
  std::vector<Eigen::VectorXd> hs(n), raws(n);
  for (int i = 0; i < n; ++i) {
    raws[i] = forward_raw(m, batch[i]->x, &hs[i]);
    preds[i] = split_raw(raws[i], m.num_classes);
    targets[i] = batch[i]->target;
    classes[i] = batch[i]->cls;
  }
  const BatchLabels labels = BatchLabels::from_classes(classes);
  std::vector<HeadPrediction> pg;
  const double loss = l_total(preds, targets, labels, weights, grads ? &pg : nullptr);
  if (!grads) return loss;

  *grads = zeros_like(m);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd draw = Eigen::VectorXd::Zero(m.out_dim());
    for (int c = 0; c < k1; ++c) draw(c) = pg[i].logits[c];
    for (int c = 0; c < k1; ++c)
      for (int j = 0; j < 4; ++j) draw(k1 + 4 * c + j) = pg[i].deltas[c][j];
    const int ao = 5 * k1;
    for (int j = 0; j < 4; ++j) {
      const double s = preds[i].alpha[j];
      draw(ao + j) = pg[i].alpha[j] * s * (1.0 - s);
    }
    draw(ao + 4) = pg[i].r * preds[i].r * (1.0 - preds[i].r);

    grads->W2.noalias() += draw * hs[i].transpose();
    grads->b2 += draw;
    Eigen::VectorXd dz =
        (m.W2.transpose() * draw).cwiseProduct((1.0 - hs[i].array().square()).matrix());
    grads->W1.noalias() += dz * batch[i]->x.transpose();
    grads->b1 += dz;
  }
  return loss;
}

void sgd_step(Eigen::Ref<Eigen::VectorXd> param, Eigen::Ref<Eigen::VectorXd> velocity,
              const Eigen::VectorXd& grad, double lr, double momentum, double weight_decay) {
  velocity = momentum * velocity + grad + weight_decay * param;
  param -= lr * velocity;
}

TrainResult sgd_fit(const HeadModel& m0, const DemoDataset& data, const TrainConfig& cfg) {
  if (cfg.lr <= 0.0 || cfg.batch < 4 || cfg.steps < 0)
    fail(errc::invalid_input, "bad training configuration");
  std::vector<int> pos, neg;
  for (size_t i = 0; i < data.examples.size(); ++i)
    (data.examples[i].cls > 0 ? pos : neg).push_back(static_cast<int>(i));
  if (pos.empty()) fail(errc::invalid_input, "dataset contains no positive proposals");

  TrainResult out{m0, {}};
  HeadModel vel = zeros_like(m0);
  Rng rng(cfg.seed);
  const int want_pos = std::max(1, static_cast<int>(std::lround(cfg.batch / (1.0 + cfg.neg_per_pos))));

  auto as_vec = [](Eigen::MatrixXd& m) {
    return Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
  };

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<const TrainExample*> batch;
    batch.reserve(cfg.batch);
    for (int i = 0; i < cfg.batch; ++i) {
      const bool take_pos = i < want_pos || neg.empty();
      const auto& pool = take_pos ? pos : neg;
      batch.push_back(&data.examples[pool[rng.below(pool.size())]]);
    }
    HeadModel g;
    const double loss = head_loss(out.model, batch, cfg.weights, &g);
    if (!std::isfinite(loss))
      fail(errc::training_diverged, "loss became non-finite at step " + std::to_string(step));
    out.loss_trace.push_back(loss);

    double lr = cfg.lr;
    for (int ds : cfg.decay_steps)
      if (step >= ds) lr *= 0.1;

    sgd_step(as_vec(out.model.W1), as_vec(vel.W1), as_vec(g.W1), lr, cfg.momentum,
             cfg.weight_decay);
    sgd_step(out.model.b1, vel.b1, g.b1, lr, cfg.momentum, 0.0);
    sgd_step(as_vec(out.model.W2), as_vec(vel.W2), as_vec(g.W2), lr, cfg.momentum,
             cfg.weight_decay);
    sgd_step(out.model.b2, vel.b2, g.b2, lr, cfg.momentum, 0.0);
  }
  return out;
}

std::vector<Detection> infer(const HeadModel& m, const DemoImage& img,
                             const SelectionPolicy& policy, double nms_thresh,
                             double score_thresh) {
  if (img.features.size() != img.proposals.size())
    fail(errc::invalid_input, "image features not materialized");
  const auto names = class_names();
  std::vector<Detection> dets;
  for (size_t i = 0; i < img.proposals.size(); ++i) {
    const HeadPrediction p = head_forward(m, img.features[i]);
    // Softmax probabilities (the logits are unnormalized).
    double mx = *std::max_element(p.logits.begin(), p.logits.end());
    double denom = 0.0;
    for (double v : p.logits) denom += std::exp(v - mx);
    int best = 1;
    for (size_t c = 2; c < p.logits.size(); ++c)
      if (p.logits[c] > p.logits[best]) best = static_cast<int>(c);
    const double score = std::exp(p.logits[best] - mx) / denom;
    if (score < score_thresh) continue;

    Detection d;
    d.cls = names[best - 1];
    d.score = score;
    d.rep.hbox = box_delta_decode(p.deltas[best], img.proposals[i].box);
    d.rep.alpha = p.alpha;
    d.rep.r = p.r;
    d.shape = select(d.rep, policy);
    dets.push_back(std::move(d));
  }
  // Class-aware oriented NMS on the post-selection shapes. cls carries the
  // index into dets so kept entries map back to full detections.
  std::map<std::string, std::vector<ScoredPoly>> by_class;
  for (size_t i = 0; i < dets.size(); ++i)
    by_class[dets[i].cls].push_back({dets[i].shape, dets[i].score, static_cast<int>(i)});
  std::vector<Detection> out;
  for (auto& [cls, group] : by_class)
    for (const auto& kept : oriented_nms(group, nms_thresh)) out.push_back(dets[kept.cls]);
  return out;
}

std::string model_to_json(const HeadModel& m) {
  nlohmann::json j;
  j["format"] = "gv-head-v1";
  j["in_dim"] = m.in_dim;
  j["hidden"] = m.hidden;
  j["num_classes"] = m.num_classes;
  auto mat = [](const Eigen::MatrixXd& w) {
    std::vector<std::vector<double>> rows(w.rows());
    for (int i = 0; i < w.rows(); ++i) {
      rows[i].resize(w.cols());
      for (int j = 0; j < w.cols(); ++j) rows[i][j] = w(i, j);
    }
    return rows;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["W1"] = mat(m.W1);
  j["b1"] = vec(m.b1);
  j["W2"] = mat(m.W2);
  j["b2"] = vec(m.b2);
  return j.dump(1) + "\n";
}

HeadModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, std::string("bad checkpoint: ") + e.what());
  }
  try {
    if (j.at("format") != "gv-head-v1") fail(errc::parse_error, "unknown checkpoint format");
    HeadModel m;
    m.in_dim = j.at("in_dim");
    m.hidden = j.at("hidden");
    m.num_classes = j.at("num_classes");
    if (m.in_dim < 1 || m.hidden < 1 || m.num_classes < 1)
      fail(errc::parse_error, "bad checkpoint dimensions");
    auto mat = [](const nlohmann::json& rows, int r, int c) {
      Eigen::MatrixXd w(r, c);
      if (static_cast<int>(rows.size()) != r) fail(errc::parse_error, "tensor shape mismatch");
      for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c)
          fail(errc::parse_error, "tensor shape mismatch");
        for (int jj = 0; jj < c; ++jj) w(i, jj) = rows[i][jj];
      }
      return w;
    };
    auto vec = [](const nlohmann::json& vals, int n) {
      Eigen::VectorXd v(n);
      if (static_cast<int>(vals.size()) != n) fail(errc::parse_error, "tensor shape mismatch");
      for (int i = 0; i < n; ++i) v(i) = vals[i];
      return v;
    };
    m.W1 = mat(j.at("W1"), m.hidden, m.in_dim);
    m.b1 = vec(j.at("b1"), m.hidden);
    m.W2 = mat(j.at("W2"), m.out_dim(), m.hidden);
    m.b2 = vec(j.at("b2"), m.out_dim());
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, std::string("bad checkpoint: ") + e.what());
  }
}

}  // namespace gv

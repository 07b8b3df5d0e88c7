#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gv/eval.hpp"
#include "gv/trainer.hpp"
#include "oracles.hpp"

using namespace gv;

namespace {

Proposal make_proposal(const HBox& box, const HBox& gt_box, int gt_index) {
  Proposal p;
  p.box = box;
  // axis-aligned IoU, computed independently of the library helper
  const double iw = std::min(box.right(), gt_box.right()) - std::max(box.left(), gt_box.left());
  const double ih = std::min(box.bottom(), gt_box.bottom()) - std::max(box.top(), gt_box.top());
  if (iw > 0 && ih > 0) {
    const double inter = iw * ih;
    p.iou_with_gt = inter / (box.w * box.h + gt_box.w * gt_box.h - inter);
    p.gt = gt_index;
  }
  return p;
}

// Single-object dataset for the overfit test: one oriented rectangle, a
// handful of jittered positives, far-away backgrounds, zero feature noise.
DemoDataset single_object_dataset() {
  DemoDataset data;
  data.num_classes = 3;
  DemoImage img;
  img.name = "solo";
  const Quad gt_quad = rbox_to_quad(RBox{400, 500, 150, 50, 0.5});  // aspect 3 -> midsize
  img.gts.push_back(GtRecord{gt_quad, "midsize", false});
  img.gt_cls.push_back(2);
  const GlidingRep rep = encode(gt_quad);

  std::vector<HBox> boxes{rep.hbox};
  Rng jig(99);
  for (int j = 0; j < 8; ++j) {
    HBox b = rep.hbox;
    b.x += jig.uniform(-0.08, 0.08) * b.w;
    b.y += jig.uniform(-0.08, 0.08) * b.h;
    b.w *= std::exp(jig.uniform(-0.1, 0.1));
    b.h *= std::exp(jig.uniform(-0.1, 0.1));
    boxes.push_back(b);
  }
  for (int j = 0; j < 6; ++j) {  // backgrounds far from the object
    boxes.push_back(HBox{80.0 + 40.0 * j, 80.0, 70, 60});
  }

  Rng feat(3);
  for (const HBox& b : boxes) {
    const Proposal p = make_proposal(b, rep.hbox, 0);
    const bool observed = p.gt >= 0 && p.iou_with_gt >= 0.3;
    img.proposals.push_back(p);
    img.features.push_back(featurize(p, observed ? &gt_quad : nullptr, 1024, 1024, 0.0, feat));
    TrainExample ex;
    ex.x = img.features.back();
    if (p.gt >= 0 && p.iou_with_gt >= 0.5) {
      ex.cls = 2;
      ex.target.deltas = box_delta_encode(rep.hbox, p.box);
      ex.target.alpha = rep.alpha;
      ex.target.r = rep.r;
    }
    data.examples.push_back(ex);
  }
  data.images.push_back(std::move(img));
  return data;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("featurize: background slots, bias, determinism, validation") {
  Proposal p;
  p.box = HBox{100, 200, 50, 40};
  Rng rng(1);
  const Eigen::VectorXd x = featurize(p, nullptr, 1000, 800, 0.05, rng);
  REQUIRE(x.size() == 13);
  CHECK(x(0) == 0.1);
  CHECK(x(1) == 0.25);
  CHECK(x(2) == 0.05);
  CHECK(x(3) == 0.05);
  for (int i = 4; i < 12; ++i) CHECK(x(i) == 0.0);  // no object observed
  CHECK(x(12) == 1.0);

  const Quad obj = rbox_to_quad(RBox{100, 200, 40, 20, 0.4});
  Rng ra(77), rb(77);
  const Eigen::VectorXd xa = featurize(p, &obj, 1000, 800, 0.05, ra);
  const Eigen::VectorXd xb = featurize(p, &obj, 1000, 800, 0.05, rb);
  for (int i = 0; i < 13; ++i) CHECK(xa(i) == xb(i));  // same seed, same floats

  Proposal bad;
  bad.box = HBox{0, 0, 0, 10};
  CHECK_THROWS_AS(featurize(bad, nullptr, 1000, 800, 0.05, rng), error);
}

TEST_CASE("zero-noise features determine the object box by least squares") {
  // With no observation noise the gt hbox center/size in the isotropic
  // proposal frame are exactly linear in the features, so an LS fit must
  // reproduce them to float precision.
  Rng rng(702);
  const int n = 300;
  Eigen::MatrixXd A(n, 13);
  Eigen::MatrixXd targets(n, 4);
  for (int i = 0; i < n; ++i) {
    double th;
    do {
      th = rng.uniform(-M_PI / 2, M_PI / 2);
    } while (std::fabs(th) < 0.01);
    const Quad q = rbox_to_quad(RBox{rng.uniform(200, 800), rng.uniform(200, 800),
                                     rng.uniform(60, 200), rng.uniform(30, 60), th});
    const GlidingRep rep = encode(q);
    HBox box = rep.hbox;
    box.x += rng.uniform(-0.1, 0.1) * box.w;
    box.y += rng.uniform(-0.1, 0.1) * box.h;
    box.w *= std::exp(rng.uniform(-0.12, 0.12));
    box.h *= std::exp(rng.uniform(-0.12, 0.12));
    const Proposal p = make_proposal(box, rep.hbox, 0);
    A.row(i) = featurize(p, &q, 1024, 1024, 0.0, rng).transpose();
    const double s = std::sqrt(box.w * box.h);
    targets(i, 0) = (rep.hbox.x - box.x) / s;
    targets(i, 1) = (rep.hbox.y - box.y) / s;
    targets(i, 2) = rep.hbox.w / s;
    targets(i, 3) = rep.hbox.h / s;
  }
  const auto qr = A.colPivHouseholderQr();
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd coef = qr.solve(targets.col(k));
    const double resid = (A * coef - targets.col(k)).cwiseAbs().maxCoeff();
    CHECK(resid < 1e-9);
  }
}

TEST_CASE("head model shape, init, and forward layout") {
  Rng rng(703);
  const HeadModel m = HeadModel::init(13, 16, 3, rng);
  CHECK(m.out_dim() == 5 * 4 + 5);
  CHECK(m.W1.rows() == 16);
  CHECK(m.W1.cols() == 13);
  CHECK(m.W2.rows() == m.out_dim());
  CHECK(m.b1.isZero());
  CHECK(m.b2.isZero());
  CHECK(m.W1.allFinite());

  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(13, -0.5, 0.7);
  const HeadPrediction p = head_forward(m, x);
  REQUIRE(p.logits.size() == 4);
  REQUIRE(p.deltas.size() == 4);
  // recompute by hand with explicit loops
  Eigen::VectorXd h(16), raw(m.out_dim());
  for (int i = 0; i < 16; ++i) {
    double acc = m.b1(i);
    for (int j = 0; j < 13; ++j) acc += m.W1(i, j) * x(j);
    h(i) = std::tanh(acc);
  }
  for (int i = 0; i < m.out_dim(); ++i) {
    double acc = m.b2(i);
    for (int j = 0; j < 16; ++j) acc += m.W2(i, j) * h(j);
    raw(i) = acc;
  }
  for (int c = 0; c < 4; ++c) CHECK(p.logits[c] == doctest::Approx(raw(c)).epsilon(1e-12));
  CHECK(p.deltas[2][1] == doctest::Approx(raw(4 + 8 + 1)).epsilon(1e-12));
  for (int j = 0; j < 4; ++j) {
    CHECK(p.alpha[j] == doctest::Approx(1.0 / (1.0 + std::exp(-raw(20 + j)))).epsilon(1e-12));
    CHECK(p.alpha[j] > 0.0);
    CHECK(p.alpha[j] < 1.0);
  }
  CHECK(p.r == doctest::Approx(1.0 / (1.0 + std::exp(-raw(24)))).epsilon(1e-12));

  CHECK_THROWS_AS(head_forward(m, Eigen::VectorXd::Zero(7)), error);
  CHECK_THROWS_AS(HeadModel::init(0, 4, 2, rng), error);
}

TEST_CASE("head_loss parameter gradients match finite differences") {
  Rng rng(704);
  HeadModel m = HeadModel::init(13, 8, 3, rng);
  // small random batch with a mix of positives and backgrounds
  std::vector<TrainExample> examples;
  for (int i = 0; i < 6; ++i) {
    TrainExample ex;
    ex.x = Eigen::VectorXd::NullaryExpr(13, [&](Eigen::Index) { return rng.uniform(-1, 1); });
    ex.cls = (i % 2 == 0) ? rng.uniform_int(1, 3) : 0;
    if (ex.cls > 0) {
      ex.target.deltas = {rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                          rng.uniform(-0.4, 0.4)};
      ex.target.alpha = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1),
                         rng.uniform(0, 1)};
      ex.target.r = rng.uniform(0, 1);
    }
    examples.push_back(ex);
  }
  std::vector<const TrainExample*> batch;
  for (const auto& ex : examples) batch.push_back(&ex);

  const LossWeights weights;
  HeadModel grads;
  head_loss(m, batch, weights, &grads);

  auto fd_on = [&](double* slot, double analytic) {
    const double x0 = *slot;
    const double fd = oracle::central_diff(
        [&](double v) {
          *slot = v;
          const double loss = head_loss(m, batch, weights, nullptr);
          *slot = x0;
          return loss;
        },
        x0);
    CHECK(oracle::rel_err(analytic, fd) < 1e-4);
  };

  // sample coordinates from every tensor
  for (int t = 0; t < 40; ++t) {
    const int i = rng.uniform_int(0, static_cast<int>(m.W1.rows()) - 1);
    const int j = rng.uniform_int(0, static_cast<int>(m.W1.cols()) - 1);
    fd_on(&m.W1(i, j), grads.W1(i, j));
  }
  for (int t = 0; t < 40; ++t) {
    const int i = rng.uniform_int(0, static_cast<int>(m.W2.rows()) - 1);
    const int j = rng.uniform_int(0, static_cast<int>(m.W2.cols()) - 1);
    fd_on(&m.W2(i, j), grads.W2(i, j));
  }
  for (int t = 0; t < 8; ++t) {
    const int i = rng.uniform_int(0, static_cast<int>(m.b1.size()) - 1);
    fd_on(&m.b1(i), grads.b1(i));
  }
  for (int t = 0; t < 8; ++t) {
    const int i = rng.uniform_int(0, static_cast<int>(m.b2.size()) - 1);
    fd_on(&m.b2(i), grads.b2(i));
  }
  CHECK_THROWS_AS(head_loss(m, {}, weights, nullptr), error);
}

TEST_CASE("sgd_step solves a quadratic toy problem") {
  // minimize 0.5*|x - c|^2; gradient is (x - c)
  Eigen::VectorXd x(3), c(3), vel = Eigen::VectorXd::Zero(3);
  x << 5.0, -2.0, 0.5;
  c << 1.0, 2.0, 3.0;
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXd grad = x - c;
    sgd_step(x, vel, grad, 0.1, 0.9, 0.0);
  }
  CHECK((x - c).norm() < 1e-6);

  // weight decay pulls parameters toward zero when the gradient vanishes
  Eigen::VectorXd w(1), wv = Eigen::VectorXd::Zero(1);
  w << 4.0;
  for (int it = 0; it < 200; ++it) sgd_step(w, wv, Eigen::VectorXd::Zero(1), 0.1, 0.5, 0.1);
  CHECK(std::fabs(w(0)) < 1.0);
}

TEST_CASE("sgd_fit basics: zero steps, trace length, reproducibility, divergence") {
  const DemoDataset data = single_object_dataset();
  Rng rng(705);
  const HeadModel m0 = HeadModel::init(13, 8, 3, rng);

  TrainConfig cfg;
  cfg.steps = 0;
  const TrainResult same = sgd_fit(m0, data, cfg);
  CHECK(same.loss_trace.empty());
  CHECK((same.model.W1 - m0.W1).cwiseAbs().maxCoeff() == 0.0);  // bitwise untouched
  CHECK((same.model.b2 - m0.b2).cwiseAbs().maxCoeff() == 0.0);

  cfg.steps = 40;
  cfg.batch = 8;
  const TrainResult a = sgd_fit(m0, data, cfg);
  const TrainResult b = sgd_fit(m0, data, cfg);
  CHECK(a.loss_trace.size() == 40);
  // bit-reproducible given the seed
  CHECK((a.model.W1 - b.model.W1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.loss_trace == b.loss_trace);

  TrainConfig explode = cfg;
  explode.lr = 1e9;
  explode.steps = 200;
  try {
    sgd_fit(m0, data, explode);
    FAIL("expected training_diverged");
  } catch (const error& e) {
    CHECK(e.code() == errc::training_diverged);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }

  TrainConfig bad = cfg;
  bad.batch = 2;
  CHECK_THROWS_AS(sgd_fit(m0, data, bad), error);

  DemoDataset no_pos;
  no_pos.examples.push_back(TrainExample{Eigen::VectorXd::Zero(13), 0, {}});
  CHECK_THROWS_AS(sgd_fit(m0, no_pos, cfg), error);
}

TEST_CASE("make_demo_dataset is deterministic and internally consistent") {
  TrainConfig cfg;
  const DemoDataset a = make_demo_dataset(3, 11, cfg);
  const DemoDataset b = make_demo_dataset(3, 11, cfg);
  REQUIRE(a.images.size() == 3);
  CHECK(a.feature_dim == 13);
  CHECK(a.num_classes == 3);

  size_t total_props = 0;
  int positives = 0;
  for (size_t i = 0; i < a.images.size(); ++i) {
    const DemoImage& img = a.images[i];
    CHECK(img.proposals.size() == img.features.size());
    CHECK(img.gts.size() == img.gt_cls.size());
    total_props += img.proposals.size();
    for (size_t j = 0; j < img.features.size(); ++j) {
      for (int d = 0; d < 13; ++d) CHECK(img.features[j](d) == b.images[i].features[j](d));
    }
  }
  CHECK(a.examples.size() == total_props);

  for (const auto& ex : a.examples) {
    CHECK(ex.x.size() == 13);
    CHECK(ex.cls >= 0);
    CHECK(ex.cls <= 3);
    positives += ex.cls > 0;
  }
  CHECK(positives > 0);

  // positive targets replay the encoder outputs for the assigned gt
  const DemoImage& img0 = a.images[0];
  int checked = 0;
  size_t ex_base = 0;
  for (size_t j = 0; j < img0.proposals.size(); ++j) {
    const Proposal& p = img0.proposals[j];
    const TrainExample& ex = a.examples[ex_base + j];
    if (p.gt >= 0 && p.iou_with_gt >= cfg.pos_iou) {
      const GlidingRep want = encode(img0.gts[p.gt].quad);
      CHECK(ex.cls == img0.gt_cls[p.gt]);
      for (int i = 0; i < 4; ++i) CHECK(ex.target.alpha[i] == want.alpha[i]);
      CHECK(ex.target.r == want.r);
      const auto want_d = box_delta_encode(want.hbox, p.box);
      for (int i = 0; i < 4; ++i) CHECK(ex.target.deltas[i] == want_d[i]);
      ++checked;
    } else if (p.gt < 0) {
      for (int d = 4; d < 12; ++d) CHECK(ex.x(d) == 0.0);  // background slots
      CHECK(ex.cls == 0);
    }
  }
  CHECK(checked > 0);
  CHECK_THROWS_AS(make_demo_dataset(0, 1, cfg), error);
}

TEST_CASE("overfitting a single object yields one accurate detection") {
  const DemoDataset data = single_object_dataset();
  Rng rng(706);
  const HeadModel m0 = HeadModel::init(13, 32, 3, rng);
  TrainConfig cfg;
  cfg.steps = 6000;
  cfg.decay_steps = {4000, 5200};
  cfg.batch = 16;
  cfg.seed = 5;
  const TrainResult res = sgd_fit(m0, data, cfg);
  CHECK(res.loss_trace.back() < res.loss_trace.front());

  const auto dets = infer(res.model, data.images[0], SelectionPolicy{0.8}, 0.5, 0.5);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].cls == "midsize");
  CHECK(iou(dets[0].shape, data.images[0].gts[0].quad) >= 0.9);
}

TEST_CASE("infer: empty input and selection-threshold plumbing") {
  Rng rng(707);
  const HeadModel m = HeadModel::init(13, 8, 3, rng);
  DemoImage empty;
  CHECK(infer(m, empty, SelectionPolicy{0.8}, 0.5, 0.05).empty());

  const DemoDataset data = single_object_dataset();
  // t_r = 1: r <= 1 can never exceed it, so every shape is the oriented decode
  const auto oriented = infer(m, data.images[0], SelectionPolicy{1.0}, 0.5, 0.0);
  for (const auto& d : oriented) {
    CHECK(oracle::quad_match_error(d.shape, decode(d.rep)) == 0.0);
  }
  // t_r = 0: r > 0 always, so every shape is the horizontal box
  const auto horizontal = infer(m, data.images[0], SelectionPolicy{0.0}, 0.5, 0.0);
  for (const auto& d : horizontal) {
    CHECK(oracle::quad_match_error(d.shape, hbox_quad(d.rep.hbox)) == 0.0);
  }
  CHECK(!oriented.empty());
}

TEST_CASE("training beats the untrained model end to end") {
  TrainConfig cfg;  // shipped defaults
  const DemoDataset train = make_demo_dataset(16, 71, cfg);
  const DemoDataset held_out = make_demo_dataset(4, 1234, cfg);
  Rng rng(708);
  const HeadModel m0 = HeadModel::init(train.feature_dim, cfg.hidden, train.num_classes, rng);
  const TrainResult res = sgd_fit(m0, train, cfg);

  auto score = [&](const HeadModel& m) {
    std::vector<DetInstance> dets;
    std::vector<GtInstance> gts;
    for (const auto& img : held_out.images) {
      for (const auto& g : img.gts) gts.push_back({img.name, g.cls, to_polygon(g.quad), false});
      for (const auto& d : infer(m, img, SelectionPolicy{0.8}, 0.5, 0.05)) {
        dets.push_back({img.name, d.cls, d.score, to_polygon(d.shape)});
      }
    }
    return eval_map(dets, gts, 0.5, ApMode::voc07).map;
  };
  const double trained = score(res.model);
  const double untrained = score(m0);
  CHECK(trained >= 0.5);
  CHECK(untrained <= 0.2);
  CHECK(trained > untrained + 0.3);
}

TEST_CASE("model json roundtrip and rejection of malformed checkpoints") {
  Rng rng(709);
  const HeadModel m = HeadModel::init(13, 8, 3, rng);
  const std::string text = model_to_json(m);
  const HeadModel back = model_from_json(text);
  CHECK(back.in_dim == 13);
  // json doubles roundtrip exactly
  CHECK((back.W1 - m.W1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.W2 - m.W2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.b1 - m.b1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.b2 - m.b2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(model_from_json("{ not json"), error);
  CHECK_THROWS_AS(model_from_json("{}"), error);

  // wrong format marker
  std::string bad = text;
  const auto pos = bad.find("gv-head-v1");
  bad.replace(pos, 10, "gv-head-v9");
  CHECK_THROWS_AS(model_from_json(bad), error);

  // declared dims no longer match the stored tensors
  std::string chopped = text;
  const auto hp = chopped.find("\"hidden\": 8");
  REQUIRE(hp != std::string::npos);
  chopped.replace(hp, 11, "\"hidden\": 9");
  CHECK_THROWS_AS(model_from_json(chopped), error);
}

}  // TEST_SUITE

#include "gv/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gv/config.hpp"
#include "gv/dataio.hpp"
#include "gv/errors.hpp"
#include "gv/eval.hpp"
#include "gv/manifest.hpp"
#include "gv/nms.hpp"
#include "gv/representation.hpp"
#include "gv/synth.hpp"
#include "gv/trainer.hpp"

namespace fs = std::filesystem;

namespace gv {
namespace {

// ---------------------------------------------------------------- plumbing

// Tracks artifacts so a failed run leaves nothing half-written behind.
class Outputs {
 public:
  void track_file(const std::string& p) { files_.push_back(p); }
  // mkdir -p that remembers which directories this run created.
  void make_dirs(const std::string& p) {
    fs::path cur;
    for (const auto& part : fs::path(p)) {
      cur /= part;
      if (cur.empty() || fs::exists(cur)) continue;
      std::error_code ec;
      if (!fs::create_directory(cur, ec) || ec)
        fail(errc::io_error, "cannot create directory " + cur.string());
      made_.push_back(cur);
    }
  }
  void cleanup() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    for (auto it = made_.rbegin(); it != made_.rend(); ++it) fs::remove(*it, ec);
  }

 private:
  std::vector<fs::path> files_;
  std::vector<fs::path> made_;
};

void write_artifact(Outputs& out, const std::string& path, const std::string& content) {
  out.track_file(path);
  write_file(path, content);
}

// One subcommand's parameters with three-level precedence:
// built-in default < config file < command-line flag.
class Params {
 public:
  explicit Params(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_, "key=value config file (flags override it)");
  }

  void add(const std::string& key, const std::string& def, const std::string& help) {
    keys_.push_back(key);
    defaults_[key] = def;
    std::string flag = "--" + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    opts_[key] = cmd_->add_option(flag, vals_[key], help + " [default: " + def + "]");
  }

  // Resolve after parsing; the result is echoed into the manifest.
  Config resolve() const {
    Config file;
    if (!config_path_.empty()) file = Config::load(config_path_);
    file.restrict_keys(keys_);
    Config out;
    for (const auto& k : keys_) {
      std::string v = defaults_.at(k);
      if (file.has(k)) v = file.get_str(k, v);
      if (opts_.at(k)->count() > 0) v = vals_.at(k);
      out.set(k, v);
    }
    return out;
  }

  const std::string& config_path() const { return config_path_; }

 private:
  CLI::App* cmd_;
  std::string config_path_;
  std::vector<std::string> keys_;
  std::map<std::string, std::string> defaults_;
  std::map<std::string, std::string> vals_;
  std::map<std::string, CLI::Option*> opts_;
};

// Config echo for manifests. The output path is skipped: it is the one
// flag that may differ between two otherwise identical runs, and manifests
// must stay byte-identical across reruns.
std::string manifest_echo(const Config& cfg) {
  std::string out;
  for (const auto& [key, value] : cfg.entries())
    if (key != "out") out += key + "=" + value + "\n";
  return out;
}

double need_double(const Config& c, const std::string& key) { return c.get_double(key, 0.0); }
int need_int(const Config& c, const std::string& key) { return c.get_int(key, 0); }

std::string need_path(const Config& c, const std::string& key) {
  const std::string v = c.get_str(key, "");
  if (v.empty()) fail(errc::invalid_input, "missing required --" + key);
  return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string tok = s.substr(pos, comma - pos);
    if (tok.empty()) fail(errc::parse_error, what + ": empty element in list '" + s + "'");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || !std::isfinite(v))
      fail(errc::parse_error, what + ": not a number: '" + tok + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  if (out.empty()) fail(errc::parse_error, what + ": empty list");
  return out;
}

// ------------------------------------------------------------- subcommands

// Records loaded per image plus how they should be written back.
bool single_image_input(const std::string& path, bool concat) {
  return !concat && !fs::is_directory(path);
}

void cmd_encode(const Config& cfg) {
  Outputs outs;
  try {
    const std::string in = need_path(cfg, "in");
    const std::string out = need_path(cfg, "out");
    const auto gts = load_gt(in, cfg.get_bool("concat", false));
    std::string csv = "image,class,difficult,x,y,w,h,alpha1,alpha2,alpha3,alpha4,r\n";
    for (const auto& [image, recs] : gts) {
      for (const auto& rec : recs) {
        if (rec.cls.find(',') != std::string::npos)
          fail(errc::invalid_input, "class names may not contain commas: " + rec.cls);
        const GlidingRep rep = encode(rec.quad);
        csv += image + "," + rec.cls + "," + (rec.difficult ? "1" : "0");
        const double nums[] = {rep.hbox.x, rep.hbox.y,   rep.hbox.w,   rep.hbox.h,  rep.alpha[0],
                               rep.alpha[1], rep.alpha[2], rep.alpha[3], rep.r};
        for (double v : nums) csv += "," + fmt6(v);
        csv += "\n";
      }
    }
    write_artifact(outs, out, csv);
    write_artifact(outs, out + ".manifest",
                   make_manifest("encode", manifest_echo(cfg), {{"gts", in}}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

void cmd_decode(const Config& cfg) {
  Outputs outs;
  try {
    const std::string in = need_path(cfg, "in");
    const std::string out = need_path(cfg, "out");
    const bool use_select = cfg.get_bool("select", false);
    const SelectionPolicy policy{cfg.get_double("tr", 0.8)};
    const std::string text = read_file(in);

    std::string result;
    size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
      size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#' || line.rfind("image,", 0) == 0) continue;
      const std::string where = in + ":" + std::to_string(lineno);

      std::vector<std::string> f;
      size_t p = 0;
      while (p <= line.size()) {
        size_t c = line.find(',', p);
        if (c == std::string::npos) c = line.size();
        f.push_back(line.substr(p, c - p));
        p = c + 1;
      }
      if (f.size() != 12) fail(errc::parse_error, where + ": expected 12 CSV fields");
      auto num = [&](int i) {
        char* end = nullptr;
        const double v = std::strtod(f[i].c_str(), &end);
        if (end == f[i].c_str() || *end != '\0' || !std::isfinite(v))
          fail(errc::parse_error, where + ": not a number: '" + f[i] + "'");
        return v;
      };
      if (f[2] != "0" && f[2] != "1")
        fail(errc::parse_error, where + ": difficult flag must be 0 or 1");
      GlidingRep rep;
      rep.hbox = {num(3), num(4), num(5), num(6)};
      if (rep.hbox.w <= 0 || rep.hbox.h <= 0)
        fail(errc::invalid_input, where + ": box sides must be positive");
      rep.alpha = {num(7), num(8), num(9), num(10)};
      rep.r = num(11);
      const Quad q = use_select ? select(clamp_rep(rep), policy) : decode(rep);
      GtRecord rec{q, f[1], f[2] == "1"};
      result += f[0] + " " + emit_gt_line(rec) + "\n";
    }
    write_artifact(outs, out, result);
    write_artifact(outs, out + ".manifest",
                   make_manifest("decode", manifest_echo(cfg), {{"reps", in}}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

std::vector<DetRecord> nms_records(const std::vector<DetRecord>& recs, double iou_thresh) {
  std::map<std::string, std::vector<ScoredPoly>> groups;
  for (size_t i = 0; i < recs.size(); ++i)
    groups[recs[i].cls].push_back({recs[i].quad, recs[i].score, static_cast<int>(i)});
  std::vector<DetRecord> out;
  for (auto& [cls, group] : groups)
    for (const auto& kept : oriented_nms(group, iou_thresh)) out.push_back(recs[kept.cls]);
  return out;
}

void cmd_nms(const Config& cfg) {
  Outputs outs;
  try {
    const std::string in = need_path(cfg, "dets");
    const std::string out = need_path(cfg, "out");
    const double iou_thresh = need_double(cfg, "iou");
    if (iou_thresh < 0.0 || iou_thresh > 1.0)
      fail(errc::invalid_input, "iou must lie in [0,1]");
    const bool concat = cfg.get_bool("concat", false);
    const auto dets = load_det(in, concat);
    std::string result;
    const bool plain = single_image_input(in, concat);
    for (const auto& [image, recs] : dets)
      for (const auto& rec : nms_records(recs, iou_thresh))
        result += (plain ? "" : image + " ") + emit_det_line(rec) + "\n";
    write_artifact(outs, out, result);
    write_artifact(outs, out + ".manifest",
                   make_manifest("nms", manifest_echo(cfg), {{"dets", in}}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

std::vector<DetInstance> det_instances(const std::map<std::string, std::vector<DetRecord>>& m) {
  std::vector<DetInstance> out;
  for (const auto& [image, recs] : m)
    for (const auto& r : recs) out.push_back({image, r.cls, r.score, to_polygon(r.quad)});
  return out;
}

std::vector<GtInstance> gt_instances(const std::map<std::string, std::vector<GtRecord>>& m) {
  std::vector<GtInstance> out;
  for (const auto& [image, recs] : m)
    for (const auto& r : recs) out.push_back({image, r.cls, to_polygon(r.quad), r.difficult});
  return out;
}

void cmd_eval(const Config& cfg, const std::string& protocol) {
  Outputs outs;
  try {
    const std::string dets_path = need_path(cfg, "dets");
    const std::string gts_path = need_path(cfg, "gts");
    const std::string out = need_path(cfg, "out");
    const double iou_thresh = need_double(cfg, "iou");
    if (iou_thresh <= 0.0 || iou_thresh > 1.0)
      fail(errc::invalid_input, "iou must lie in (0,1]");
    const auto dets_map = load_det(dets_path, cfg.get_bool("dets_concat", false));
    const auto gts_map = load_gt(gts_path, cfg.get_bool("gts_concat", false));
    const auto dets = det_instances(dets_map);
    const auto gts = gt_instances(gts_map);

    std::string report;
    if (protocol == "map") {
      const std::string mode_s = cfg.get_str("mode", "voc07");
      ApMode mode;
      if (mode_s == "voc07")
        mode = ApMode::voc07;
      else if (mode_s == "allpoints")
        mode = ApMode::all_points;
      else
        fail(errc::invalid_input, "mode must be voc07 or allpoints, got '" + mode_s + "'");
      const MapReport rep = eval_map(dets, gts, iou_thresh, mode);
      report = "protocol: map mode=" + mode_s + " iou=" + fmt6(iou_thresh) + "\n";
      for (const auto& c : rep.classes)
        report += "class " + c.cls + " ap=" + fmt6(c.ap) +
                  " npos=" + std::to_string(c.npos) + "\n";
      report += "map=" + fmt6(rep.map) + "\n";
    } else if (protocol == "fmeasure") {
      const PrfReport rep = f_measure(dets, gts, iou_thresh);
      report = "protocol: fmeasure iou=" + fmt6(iou_thresh) + "\n";
      report += "precision=" + fmt6(rep.precision) + "\n";
      report += "recall=" + fmt6(rep.recall) + "\n";
      report += "f=" + fmt6(rep.f) + "\n";
      report += "tp=" + std::to_string(rep.tp) + "\n";
      report += "detections=" + std::to_string(rep.det_counted) + "\n";
      report += "npos=" + std::to_string(rep.npos) + "\n";
    } else {
      // Image universe: everything mentioned by either input.
      std::map<std::string, int> images;
      for (const auto& kv : gts_map) images[kv.first] = 1;
      for (const auto& kv : dets_map) images[kv.first] = 1;
      const LamrReport rep = lamr(dets, gts, iou_thresh, static_cast<int>(images.size()));
      report = "protocol: lamr iou=" + fmt6(iou_thresh) + "\n";
      report += "images=" + std::to_string(rep.n_images) + "\n";
      report += "lamr=" + fmt6(rep.lamr) + "\n";
      for (size_t i = 0; i < rep.ref_fppi.size(); ++i)
        report += "ref fppi=" + fmt6(rep.ref_fppi[i]) + " mr=" + fmt6(rep.ref_mr[i]) + "\n";
    }
    write_artifact(outs, out, report);
    write_artifact(outs, out + ".manifest",
                   make_manifest("eval " + protocol, manifest_echo(cfg),
                                 {{"dets", dets_path}, {"gts", gts_path}}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

void cmd_synth(const Config& cfg) {
  Outputs outs;
  try {
    const std::string out = need_path(cfg, "out");
    const int n_images = need_int(cfg, "images");
    if (n_images < 1) fail(errc::invalid_input, "images must be >= 1");
    SceneSpec sp;
    sp.width = need_int(cfg, "width");
    sp.height = need_int(cfg, "height");
    sp.min_objects = need_int(cfg, "min_objects");
    sp.max_objects = need_int(cfg, "max_objects");
    sp.min_aspect = need_double(cfg, "aspect_min");
    sp.max_aspect = need_double(cfg, "aspect_max");
    sp.min_size = need_double(cfg, "size_min");
    sp.max_size = need_double(cfg, "size_max");
    sp.angle_min = need_double(cfg, "angle_min_deg") * M_PI / 180.0;
    sp.angle_max = need_double(cfg, "angle_max_deg") * M_PI / 180.0;
    sp.axis_aligned_frac = need_double(cfg, "axis_aligned_frac");
    sp.overlap_cap = need_double(cfg, "overlap_cap");
    Rng master(cfg.get_u64("seed", 0));
    outs.make_dirs(out + "/gt");
    for (int i = 0; i < n_images; ++i) {
      sp.seed = master.bits();
      char buf[32];
      std::snprintf(buf, sizeof buf, "img_%03d", i);
      write_artifact(outs, out + "/gt/" + buf + ".txt", emit_gt_file(gen_scene(sp)));
    }
    write_artifact(outs, out + "/manifest.txt", make_manifest("synth", manifest_echo(cfg), {}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

void cmd_robustness(const Config& cfg) {
  Outputs outs;
  try {
    const std::string out = need_path(cfg, "out");
    const int trials = need_int(cfg, "trials");
    if (trials < 1) fail(errc::invalid_input, "trials must be >= 1");
    const auto aspects = parse_list(cfg.get_str("aspects", ""), "aspects");
    const auto eps = parse_list(cfg.get_str("eps_deg", ""), "eps_deg");
    std::vector<PerturbKind> kinds;
    const std::string kinds_str = cfg.get_str("kinds", "");
    size_t kp = 0;
    while (kp <= kinds_str.size()) {
      size_t comma = kinds_str.find(',', kp);
      if (comma == std::string::npos) comma = kinds_str.size();
      const std::string tok = kinds_str.substr(kp, comma - kp);
      if (tok == "rbox")
        kinds.push_back(PerturbKind::rbox);
      else if (tok == "vertex")
        kinds.push_back(PerturbKind::vertex);
      else if (tok == "gliding")
        kinds.push_back(PerturbKind::gliding);
      else
        fail(errc::invalid_input, "kinds must list rbox, vertex, gliding; got '" + tok + "'");
      kp = comma + 1;
    }
    const auto cells = robustness_sweep(aspects, eps, kinds, trials, cfg.get_u64("seed", 0));
    write_artifact(outs, out, sweep_csv(cells));
    write_artifact(outs, out + ".manifest", make_manifest("robustness", manifest_echo(cfg), {}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

void cmd_confusion(const Config& cfg) {
  Outputs outs;
  try {
    const std::string out = need_path(cfg, "out");
    const int steps = need_int(cfg, "steps");
    if (steps < 2) fail(errc::invalid_input, "steps must be >= 2");
    const DiscontinuityReport rep = vertex_order_discontinuity(
        need_double(cfg, "aspect"), need_double(cfg, "theta_min_deg"),
        need_double(cfg, "theta_max_deg"), steps, need_double(cfg, "delta_deg"),
        need_double(cfg, "long_side"));
    std::string csv;
    csv += "# max_vertex_jump=" + fmt6(rep.max_vertex_jump) +
           " theta_at_max_deg=" + fmt6(rep.theta_at_max_deg) +
           " max_gliding_jump=" + fmt6(rep.max_gliding_jump) + "\n";
    csv += "theta_deg,vertex_jump,gliding_jump\n";
    for (const auto& s : rep.sweep)
      csv += fmt6(s.theta_deg) + "," + fmt6(s.vertex_jump) + "," + fmt6(s.gliding_jump) + "\n";
    write_artifact(outs, out, csv);
    write_artifact(outs, out + ".manifest", make_manifest("confusion", manifest_echo(cfg), {}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.lr = need_double(cfg, "lr");
  tc.momentum = need_double(cfg, "momentum");
  tc.weight_decay = need_double(cfg, "weight_decay");
  tc.steps = need_int(cfg, "steps");
  tc.batch = need_int(cfg, "batch");
  tc.hidden = need_int(cfg, "hidden");
  tc.feature_noise = need_double(cfg, "feature_noise");
  tc.pos_iou = need_double(cfg, "pos_iou");
  tc.neg_per_pos = need_double(cfg, "neg_per_pos");
  tc.jitters_per_gt = need_int(cfg, "jitters_per_gt");
  tc.backgrounds_per_image = need_int(cfg, "backgrounds_per_image");
  tc.weights.lambda1 = need_double(cfg, "lambda1");
  tc.weights.lambda2 = need_double(cfg, "lambda2");
  tc.weights.lambda3 = need_double(cfg, "lambda3");
  tc.decay_steps.clear();
  for (double v : parse_list(cfg.get_str("decay_steps", ""), "decay_steps"))
    tc.decay_steps.push_back(static_cast<int>(v));
  if (tc.lr <= 0 || tc.momentum < 0 || tc.momentum >= 1 || tc.weight_decay < 0 ||
      tc.steps < 0 || tc.batch < 4 || tc.hidden < 1 || tc.feature_noise < 0 ||
      tc.pos_iou <= 0 || tc.pos_iou > 1 || tc.neg_per_pos < 0 || tc.jitters_per_gt < 1 ||
      tc.backgrounds_per_image < 0)
    fail(errc::invalid_input, "training hyperparameters out of range");
  return tc;
}

std::string loss_csv(const std::vector<double>& trace) {
  std::string csv = "step,loss\n";
  for (size_t i = 0; i < trace.size(); ++i)
    csv += std::to_string(i) + "," + fmt6(trace[i]) + "\n";
  return csv;
}

void cmd_train_demo(const Config& cfg) {
  Outputs outs;
  try {
    const std::string out = need_path(cfg, "out");
    const uint64_t seed = cfg.get_u64("seed", 7);
    TrainConfig tc = train_config_from(cfg);
    const int n_images = need_int(cfg, "images");
    const double aaf = need_double(cfg, "axis_aligned_frac");
    const DemoDataset data = make_demo_dataset(n_images, mix_seed(seed, 0xA), tc, aaf);
    Rng init_rng(mix_seed(seed, 0xB));
    HeadModel m0 = HeadModel::init(data.feature_dim, tc.hidden, data.num_classes, init_rng);
    tc.seed = mix_seed(seed, 0xC);
    const TrainResult result = sgd_fit(m0, data, tc);

    outs.make_dirs(out);
    write_artifact(outs, out + "/model.json", model_to_json(result.model));
    write_artifact(outs, out + "/loss.csv", loss_csv(result.loss_trace));
    int n_pos = 0;
    for (const auto& ex : data.examples) n_pos += ex.cls > 0;
    std::string rep = "images=" + std::to_string(n_images) + "\n";
    rep += "examples=" + std::to_string(data.examples.size()) + "\n";
    rep += "positives=" + std::to_string(n_pos) + "\n";
    rep += "steps=" + std::to_string(tc.steps) + "\n";
    if (!result.loss_trace.empty()) {
      rep += "loss_initial=" + fmt6(result.loss_trace.front()) + "\n";
      rep += "loss_final=" + fmt6(result.loss_trace.back()) + "\n";
    }
    write_artifact(outs, out + "/train_report.txt", rep);
    write_artifact(outs, out + "/manifest.txt", make_manifest("train-demo", manifest_echo(cfg), {}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

void cmd_pipeline(const Config& cfg) {
  Outputs outs;
  try {
    const std::string out = need_path(cfg, "out");
    const uint64_t seed = cfg.get_u64("seed", 7);
    TrainConfig tc = train_config_from(cfg);
    const int n_train = need_int(cfg, "images");
    const int n_test = need_int(cfg, "test_images");
    if (n_test < 1) fail(errc::invalid_input, "test_images must be >= 1");
    const double aaf = need_double(cfg, "axis_aligned_frac");
    const SelectionPolicy policy{cfg.get_double("tr", 0.8)};
    const double nms_iou = need_double(cfg, "nms_iou");
    const double score_floor = need_double(cfg, "score_floor");
    const double display_thresh = need_double(cfg, "display_thresh");
    const double eval_iou = need_double(cfg, "eval_iou");

    // Train on one split, hold out a fresh one.
    const DemoDataset train = make_demo_dataset(n_train, mix_seed(seed, 0xA), tc, aaf);
    Rng init_rng(mix_seed(seed, 0xB));
    HeadModel m0 = HeadModel::init(train.feature_dim, tc.hidden, train.num_classes, init_rng);
    tc.seed = mix_seed(seed, 0xC);
    const TrainResult result = sgd_fit(m0, train, tc);
    const DemoDataset test = make_demo_dataset(n_test, mix_seed(seed, 0xD), tc, aaf);

    outs.make_dirs(out + "/gt");
    std::string dets_text, display_text;
    std::vector<DetInstance> det_inst;
    std::vector<GtInstance> gt_inst;
    for (const auto& img : test.images) {
      write_artifact(outs, out + "/gt/" + img.name + ".txt", emit_gt_file(img.gts));
      for (const auto& g : img.gts) gt_inst.push_back({img.name, g.cls, to_polygon(g.quad), false});
      for (const auto& d : infer(result.model, img, policy, nms_iou, score_floor)) {
        DetRecord rec{d.cls, d.score, d.shape};
        dets_text += img.name + " " + emit_det_line(rec) + "\n";
        if (d.score > display_thresh) display_text += img.name + " " + emit_det_line(rec) + "\n";
        det_inst.push_back({img.name, d.cls, d.score, to_polygon(d.shape)});
      }
    }
    write_artifact(outs, out + "/model.json", model_to_json(result.model));
    write_artifact(outs, out + "/loss.csv", loss_csv(result.loss_trace));
    write_artifact(outs, out + "/dets.txt", dets_text);
    write_artifact(outs, out + "/dets_display.txt", display_text);

    const MapReport m50 = eval_map(det_inst, gt_inst, eval_iou, ApMode::voc07);
    const MapReport m70 = eval_map(det_inst, gt_inst, 0.7, ApMode::voc07);
    std::string metrics;
    metrics += "images_train=" + std::to_string(n_train) + "\n";
    metrics += "images_test=" + std::to_string(n_test) + "\n";
    metrics += "steps=" + std::to_string(tc.steps) + "\n";
    if (!result.loss_trace.empty()) {
      metrics += "loss_initial=" + fmt6(result.loss_trace.front()) + "\n";
      metrics += "loss_final=" + fmt6(result.loss_trace.back()) + "\n";
    }
    metrics += "detections=" + std::to_string(det_inst.size()) + "\n";
    for (const auto& c : m50.classes)
      metrics += "class " + c.cls + " ap50=" + fmt6(c.ap) + " npos=" + std::to_string(c.npos) +
                 "\n";
    metrics += "map50=" + fmt6(m50.map) + "\n";
    metrics += "map70=" + fmt6(m70.map) + "\n";
    write_artifact(outs, out + "/metrics.txt", metrics);
    write_artifact(outs, out + "/manifest.txt", make_manifest("pipeline", manifest_echo(cfg), {}));
  } catch (...) {
    outs.cleanup();
    throw;
  }
}

// ------------------------------------------------------------------ wiring

void add_train_params(Params& p) {
  p.add("seed", "7", "run seed (sub-streams are derived from it)");
  p.add("images", "30", "training images to synthesize");
  p.add("steps", "20000", "SGD steps");
  p.add("lr", "0.0075", "learning rate");
  p.add("momentum", "0.9", "SGD momentum");
  p.add("weight_decay", "0.0005", "L2 weight decay");
  p.add("batch", "64", "batch size");
  p.add("hidden", "64", "hidden layer width");
  p.add("decay_steps", "12000,17000", "steps at which lr is divided by 10");
  p.add("feature_noise", "0.05", "vertex observation noise, fraction of object scale");
  p.add("pos_iou", "0.5", "positive proposal IoU threshold");
  p.add("neg_per_pos", "3", "negatives per positive in each batch");
  p.add("jitters_per_gt", "6", "jittered proposals per ground-truth box");
  p.add("backgrounds_per_image", "18", "background proposals per image");
  p.add("axis_aligned_frac", "0.3", "fraction of exactly-horizontal objects");
  p.add("lambda1", "1", "box-delta loss weight");
  p.add("lambda2", "1", "alpha loss weight");
  p.add("lambda3", "16", "obliquity loss weight");
}

struct Pending {
  Params* params = nullptr;
  std::function<void(const Config&)> fn;
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"gliding-vertex oriented object detection toolkit"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Params>> storage;
  std::vector<std::unique_ptr<Pending>> pending;

  auto reg = [&](CLI::App* cmd, std::function<void(const Config&)> fn) -> Params& {
    storage.push_back(std::make_unique<Params>(cmd));
    pending.push_back(std::make_unique<Pending>(Pending{storage.back().get(), std::move(fn)}));
    Pending* slot = pending.back().get();
    cmd->callback([slot]() { slot->fn(slot->params->resolve()); });
    return *storage.back();
  };

  {
    auto* c = app.add_subcommand("encode", "annotation quads -> gliding representation CSV");
    Params& p = reg(c, cmd_encode);
    p.add("in", "", "ground-truth file or directory");
    p.add("out", "", "output CSV path");
    p.add("concat", "false", "input file carries an image-id first column");
  }
  {
    auto* c = app.add_subcommand("decode", "representation CSV -> quad annotation lines");
    Params& p = reg(c, cmd_decode);
    p.add("in", "", "representation CSV (encode output)");
    p.add("out", "", "output annotation file (image-id prefixed lines)");
    p.add("select", "false", "apply obliquity-guided selection instead of raw decode");
    p.add("tr", "0.8", "obliquity threshold for --select");
  }
  {
    auto* c = app.add_subcommand("nms", "class-aware oriented non-maximum suppression");
    Params& p = reg(c, cmd_nms);
    p.add("dets", "", "detection file or directory");
    p.add("out", "", "output detection file");
    p.add("iou", "0.5", "suppression IoU threshold");
    p.add("concat", "false", "input file carries an image-id first column");
  }
  {
    auto* ev = app.add_subcommand("eval", "detection evaluation protocols");
    ev->require_subcommand(1);
    const struct {
      const char* name;
      const char* help;
    } protos[] = {{"map", "per-class AP and mAP"},
                  {"fmeasure", "precision / recall / F-measure"},
                  {"lamr", "log-average miss rate"}};
    for (const auto& pr : protos) {
      auto* c = ev->add_subcommand(pr.name, pr.help);
      const std::string proto = pr.name;
      Params& p = reg(c, [proto](const Config& cfg) { cmd_eval(cfg, proto); });
      p.add("dets", "", "detection file or directory");
      p.add("gts", "", "ground-truth file or directory");
      p.add("out", "", "report path");
      p.add("iou", "0.5", "match IoU threshold");
      p.add("dets_concat", "false", "detections carry an image-id first column");
      p.add("gts_concat", "false", "ground truth carries an image-id first column");
      if (proto == "map") p.add("mode", "voc07", "AP mode: voc07 | allpoints");
    }
  }
  {
    auto* c = app.add_subcommand("synth", "generate synthetic oriented ground truth");
    Params& p = reg(c, cmd_synth);
    p.add("out", "", "output directory (gt files under <out>/gt)");
    p.add("seed", "0", "scene seed");
    p.add("images", "1", "number of images");
    p.add("width", "1024", "image width");
    p.add("height", "1024", "image height");
    p.add("min_objects", "6", "minimum objects per image");
    p.add("max_objects", "14", "maximum objects per image");
    p.add("aspect_min", "1", "minimum aspect ratio");
    p.add("aspect_max", "9", "maximum aspect ratio");
    p.add("size_min", "60", "minimum long side, pixels");
    p.add("size_max", "220", "maximum long side, pixels");
    p.add("angle_min_deg", "-90", "minimum angle, degrees");
    p.add("angle_max_deg", "90", "maximum angle, degrees");
    p.add("axis_aligned_frac", "0", "fraction of exactly-horizontal objects");
    p.add("overlap_cap", "0.05", "maximum pairwise IoU between objects");
  }
  {
    auto* c = app.add_subcommand("robustness",
                                 "angle-vs-offset noise sweep at matched displacement");
    Params& p = reg(c, cmd_robustness);
    p.add("out", "", "output CSV path");
    p.add("seed", "0", "sweep seed");
    p.add("trials", "1000", "trials per cell");
    p.add("aspects", "4,8,16", "comma-separated aspect ratios");
    p.add("eps_deg", "1,2,4,8", "comma-separated angle errors, degrees");
    p.add("kinds", "rbox,vertex,gliding", "perturbation kinds to sweep");
  }
  {
    auto* c = app.add_subcommand("confusion",
                                 "regression-target discontinuity across the angle seam");
    Params& p = reg(c, cmd_confusion);
    p.add("out", "", "output CSV path");
    p.add("aspect", "8", "rectangle aspect ratio");
    p.add("theta_min_deg", "-10", "sweep start, degrees");
    p.add("theta_max_deg", "10", "sweep end, degrees");
    p.add("steps", "81", "grid points");
    p.add("delta_deg", "0.25", "finite step between neighbouring targets, degrees");
    p.add("long_side", "160", "rectangle long side, pixels");
  }
  {
    auto* c = app.add_subcommand("train-demo", "train the demo head on synthetic scenes");
    Params& p = reg(c, cmd_train_demo);
    p.add("out", "", "output directory");
    add_train_params(p);
  }
  {
    auto* c = app.add_subcommand("pipeline",
                                 "synth -> train-demo -> infer -> eval, all seeded");
    Params& p = reg(c, cmd_pipeline);
    p.add("out", "", "output directory");
    add_train_params(p);
    p.add("test_images", "12", "held-out images to evaluate on");
    p.add("tr", "0.8", "obliquity threshold for selection");
    p.add("nms_iou", "0.5", "inference NMS IoU threshold");
    p.add("score_floor", "0.05", "minimum score kept for evaluation");
    p.add("display_thresh", "0.6", "score threshold for the display subset");
    p.add("eval_iou", "0.5", "primary evaluation IoU threshold");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: usage: " << e.what() << std::endl;
    return 2;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace gv

#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "gv/dataio.hpp"
#include "gv/rng.hpp"
#include "oracles.hpp"

using namespace gv;

namespace {

const std::vector<std::string> kClasses{"plane", "ship", "storage-tank"};

std::vector<GtRecord> random_gts(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<GtRecord> out;
  for (int i = 0; i < n; ++i) {
    GtRecord r;
    for (int j = 0; j < 4; ++j) {
      r.quad.v[j] = {rng.uniform(-1000, 5000), rng.uniform(-1000, 5000)};
    }
    r.cls = kClasses[rng.uniform_int(0, 2)];
    r.difficult = rng.uniform01() < 0.3;
    out.push_back(r);
  }
  return out;
}

std::vector<DetRecord> random_dets(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<DetRecord> out;
  for (int i = 0; i < n; ++i) {
    DetRecord r;
    r.cls = kClasses[rng.uniform_int(0, 2)];
    r.score = rng.uniform01();
    for (int j = 0; j < 4; ++j) {
      r.quad.v[j] = {rng.uniform(-1000, 5000), rng.uniform(-1000, 5000)};
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("fmt6 fixed-point formatting") {
  CHECK(fmt6(1.0) == "1.000000");
  CHECK(fmt6(-0.5) == "-0.500000");
  CHECK(fmt6(1234.5678901) == "1234.567890");
  CHECK(fmt6(0.0000004) == "0.000000");
  CHECK(fmt6(-123456.125) == "-123456.125000");
}

TEST_CASE("parse_gt_line reads the annotation grammar") {
  const GtRecord r = parse_gt_line("0 0 10 0 10 5 0 5 plane 0");
  CHECK(r.quad.v[0].x == 0.0);
  CHECK(r.quad.v[1].x == 10.0);
  CHECK(r.quad.v[1].y == 0.0);
  CHECK(r.quad.v[2].x == 10.0);
  CHECK(r.quad.v[2].y == 5.0);
  CHECK(r.quad.v[3].y == 5.0);
  CHECK(r.cls == "plane");
  CHECK(!r.difficult);

  const GtRecord d = parse_gt_line("0 0 10 0 10 5 0 5 small-vehicle 1");
  CHECK(d.cls == "small-vehicle");
  CHECK(d.difficult);

  // scientific notation and signs are legal numbers
  const GtRecord s = parse_gt_line("-1.5 2e2 1 0 1 1 0 1 ship 0");
  CHECK(s.quad.v[0].x == -1.5);
  CHECK(s.quad.v[0].y == 200.0);
}

TEST_CASE("parse_gt_line rejects malformed records with located messages") {
  auto expect_parse_error = [](const std::string& line, const char* needle) {
    try {
      parse_gt_line(line, "gt.txt:7");
      FAIL_CHECK("expected parse_error for: " << line);
    } catch (const error& e) {
      CHECK(e.code() == errc::parse_error);
      const std::string msg = e.what();
      CHECK(msg.find("gt.txt:7") != std::string::npos);
      CHECK(msg.find(needle) != std::string::npos);
    }
  };
  expect_parse_error("0 0 10 0 10 5 0 5 plane", "expected 10 fields");        // difficulty missing
  expect_parse_error("0 0 10 0 10 5 0 5 plane 0 9", "expected 10 fields");    // trailing junk
  expect_parse_error("0 0 xx 0 10 5 0 5 plane 0", "bad coordinate");
  expect_parse_error("0 0 1.5x 0 10 5 0 5 plane 0", "bad coordinate");
  expect_parse_error("0 0 inf 0 10 5 0 5 plane 0", "non-finite");
  expect_parse_error("0 0 10 0 10 5 0 5 plane 2", "difficulty must be 0 or 1");
  expect_parse_error("0 0 10 0 10 5 0 5 plane yes", "difficulty must be 0 or 1");
}

TEST_CASE("parse_det_line reads and validates detections") {
  const DetRecord r = parse_det_line("ship 0.875 1 2 3 4 5 6 7 8");
  CHECK(r.cls == "ship");
  CHECK(r.score == 0.875);
  CHECK(r.quad.v[0].x == 1.0);
  CHECK(r.quad.v[3].y == 8.0);

  auto parse_fails = [](const std::string& line) {
    try {
      parse_det_line(line, "det.txt:3");
      return false;
    } catch (const error& e) {
      CHECK(e.code() == errc::parse_error);
      return true;
    }
  };
  CHECK(parse_fails("ship 1.5 1 2 3 4 5 6 7 8"));   // score > 1
  CHECK(parse_fails("ship -0.1 1 2 3 4 5 6 7 8"));  // score < 0
  CHECK(parse_fails("ship nope 1 2 3 4 5 6 7 8"));
  CHECK(parse_fails("ship 0.5 1 2 3 4 5 6 7"));     // 7 coords
  CHECK(!parse_fails("ship 0.5 1 2 3 4 5 6 7 8"));
  CHECK(!parse_fails("ship 0.0 1 2 3 4 5 6 7 8"));  // boundary scores
  CHECK(!parse_fails("ship 1.0 1 2 3 4 5 6 7 8"));
}

TEST_CASE("file parsing skips comments/blanks, tolerates CRLF, counts lines") {
  const std::string text =
      "# imagesource:GoogleEarth\r\n"
      "\r\n"
      "0 0 10 0 10 5 0 5 car 0\r\n"
      "\n"
      "1 1 11 1 11 6 1 6 bus 1\n";
  const auto recs = parse_gt_text(text, "demo.txt");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].cls == "car");
  CHECK(recs[1].cls == "bus");
  CHECK(recs[1].difficult);

  CHECK(parse_gt_text("", "empty.txt").empty());
  CHECK(parse_gt_text("# only a header\n\n", "hdr.txt").empty());

  // the reported line number matches the raw file, comments included
  try {
    parse_gt_text("# header\n\nbroken line\n", "src.txt");
    FAIL_CHECK("expected parse_error");
  } catch (const error& e) {
    CHECK(std::string(e.what()).find("src.txt:3") != std::string::npos);
  }
}

TEST_CASE("emit -> parse -> emit is byte-identical") {
  const auto gts = random_gts(10000, 41);
  const std::string once = emit_gt_file(gts);
  const auto parsed = parse_gt_text(once, "mem");
  REQUIRE(parsed.size() == gts.size());
  CHECK(emit_gt_file(parsed) == once);

  const auto dets = random_dets(10000, 42);
  const std::string donce = emit_det_file(dets);
  const auto dparsed = parse_det_text(donce, "mem");
  REQUIRE(dparsed.size() == dets.size());
  CHECK(emit_det_file(dparsed) == donce);

  // single-line shape: 6-decimal numbers, space separated
  const GtRecord g = parse_gt_line("0 0 10 0 10 5 0 5 plane 0");
  CHECK(emit_gt_line(g) ==
        "0.000000 0.000000 10.000000 0.000000 10.000000 5.000000 0.000000 5.000000 plane 0");
  DetRecord d;
  d.cls = "plane";
  d.score = 0.25;
  d.quad = g.quad;
  CHECK(emit_det_line(d) ==
        "plane 0.250000 0.000000 0.000000 10.000000 0.000000 10.000000 5.000000 0.000000 "
        "5.000000");
}

TEST_CASE("concatenated variants group by the image-id column") {
  const std::string text =
      "img_07 0 0 10 0 10 5 0 5 car 0\n"
      "img_02 1 1 11 1 11 6 1 6 bus 1\n"
      "img_07 2 2 12 2 12 7 2 7 car 0\n";
  const auto by_img = parse_gt_text_concat(text, "all.txt");
  REQUIRE(by_img.size() == 2);
  CHECK(by_img.at("img_07").size() == 2);
  CHECK(by_img.at("img_02").size() == 1);
  CHECK(by_img.at("img_02")[0].cls == "bus");
  CHECK(by_img.at("img_07")[1].quad.v[0].x == 2.0);

  const auto dets = parse_det_text_concat("im1 car 0.5 1 2 3 4 5 6 7 8\n", "d.txt");
  CHECK(dets.at("im1")[0].score == 0.5);

  try {
    parse_gt_text_concat("lonely-token\n", "bad.txt");
    FAIL_CHECK("expected parse_error");
  } catch (const error& e) {
    CHECK(e.code() == errc::parse_error);
    CHECK(std::string(e.what()).find("image-id") != std::string::npos);
  }
}

TEST_CASE("load_gt/load_det: directory, single file, and concat file layouts") {
  const std::string root = oracle::scratch_dir("dataio_load");

  const std::string dir = root + "/gts";
  std::filesystem::create_directories(dir);
  oracle::write_text(dir + "/P0001.txt", "0 0 10 0 10 5 0 5 car 0\n");
  oracle::write_text(dir + "/P0002.txt",
                     "# header\n1 1 11 1 11 6 1 6 bus 0\n2 2 12 2 12 7 2 7 car 1\n");
  const auto by_dir = load_gt(dir, false);
  REQUIRE(by_dir.size() == 2);
  CHECK(by_dir.at("P0001").size() == 1);
  CHECK(by_dir.at("P0002").size() == 2);
  CHECK(by_dir.at("P0002")[1].difficult);

  oracle::write_text(root + "/single.txt", "0 0 10 0 10 5 0 5 car 0\n");
  const auto one = load_gt(root + "/single.txt", false);
  REQUIRE(one.size() == 1);
  CHECK(one.count("single") == 1);

  oracle::write_text(root + "/merged.txt",
                     "imgA car 0.75 1 2 3 4 5 6 7 8\nimgB car 0.25 1 2 3 4 5 6 7 8\n");
  const auto merged = load_det(root + "/merged.txt", true);
  REQUIRE(merged.size() == 2);
  CHECK(merged.at("imgA")[0].score == 0.75);

  // a directory with concat=true still reads one file per image
  const std::string ddir = root + "/dets";
  std::filesystem::create_directories(ddir);
  oracle::write_text(ddir + "/x.txt", "car 0.5 1 2 3 4 5 6 7 8\n");
  CHECK(load_det(ddir, true).count("x") == 1);

  try {
    load_gt(root + "/nope.txt", false);
    FAIL_CHECK("expected io_error");
  } catch (const error& e) {
    CHECK(e.code() == errc::io_error);
  }
}

TEST_CASE("read_file/write_file binary roundtrip and missing-file error") {
  const std::string root = oracle::scratch_dir("dataio_rw");
  const std::string path = root + "/blob.bin";
  std::string payload = "line1\nline2\r\n\ttab";
  payload.push_back('\0');
  payload += "after-nul";
  write_file(path, payload);
  CHECK(read_file(path) == payload);

  try {
    read_file(root + "/missing.txt");
    FAIL_CHECK("expected io_error");
  } catch (const error& e) {
    CHECK(e.code() == errc::io_error);
    CHECK(std::string(e.what()).find("missing.txt") != std::string::npos);
  }
}

}  // TEST_SUITE

#include "gv/dataio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace gv {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

static std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

static double parse_real(const std::string& tok, const std::string& where, const char* what) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    fail(errc::parse_error, where + ": bad " + what + " '" + tok + "'");
  }
  if (!std::isfinite(v)) fail(errc::parse_error, where + ": non-finite " + what);
  return v;
}

static Quad parse_quad(const std::vector<std::string>& toks, size_t off, const std::string& where) {
  Quad q;
  for (int i = 0; i < 4; ++i) {
    q.v[i].x = parse_real(toks[off + 2 * i], where, "coordinate");
    q.v[i].y = parse_real(toks[off + 2 * i + 1], where, "coordinate");
  }
  return q;
}

GtRecord parse_gt_line(const std::string& line, const std::string& where) {
  const auto toks = split_ws(line);
  if (toks.size() != 10) {
    fail(errc::parse_error,
         where + ": expected 10 fields (8 coordinates, class, difficulty), got " +
             std::to_string(toks.size()));
  }
  GtRecord rec;
  rec.quad = parse_quad(toks, 0, where);
  rec.cls = toks[8];
  if (toks[9] == "0") {
    rec.difficult = false;
  } else if (toks[9] == "1") {
    rec.difficult = true;
  } else {
    fail(errc::parse_error, where + ": difficulty must be 0 or 1, got '" + toks[9] + "'");
  }
  return rec;
}

DetRecord parse_det_line(const std::string& line, const std::string& where) {
  const auto toks = split_ws(line);
  if (toks.size() != 10) {
    fail(errc::parse_error,
         where + ": expected 10 fields (class, score, 8 coordinates), got " +
             std::to_string(toks.size()));
  }
  DetRecord rec;
  rec.cls = toks[0];
  rec.score = parse_real(toks[1], where, "score");
  if (rec.score < 0.0 || rec.score > 1.0) {
    fail(errc::parse_error, where + ": score out of [0,1]");
  }
  rec.quad = parse_quad(toks, 2, where);
  return rec;
}

// Iterate payload lines of a text blob: strips CR, skips blanks and
// '#'-prefixed headers, and hands each line to fn with a "source:line" tag.
template <typename Fn>
static void for_each_line(const std::string& text, const std::string& source, Fn&& fn) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(line, source + ":" + std::to_string(lineno));
  }
}

std::vector<GtRecord> parse_gt_text(const std::string& text, const std::string& source) {
  std::vector<GtRecord> out;
  for_each_line(text, source,
                [&](const std::string& line, const std::string& where) {
                  out.push_back(parse_gt_line(line, where));
                });
  return out;
}

std::vector<DetRecord> parse_det_text(const std::string& text, const std::string& source) {
  std::vector<DetRecord> out;
  for_each_line(text, source,
                [&](const std::string& line, const std::string& where) {
                  out.push_back(parse_det_line(line, where));
                });
  return out;
}

// Concatenated variants: strip the image-id first column, parse the rest.
static std::pair<std::string, std::string> split_first(const std::string& line,
                                                       const std::string& where) {
  const size_t i = line.find_first_not_of(" \t");
  const size_t j = line.find_first_of(" \t", i);
  if (i == std::string::npos || j == std::string::npos) {
    fail(errc::parse_error, where + ": expected image-id followed by a record");
  }
  return {line.substr(i, j - i), line.substr(j + 1)};
}

std::map<std::string, std::vector<GtRecord>> parse_gt_text_concat(const std::string& text,
                                                                  const std::string& source) {
  std::map<std::string, std::vector<GtRecord>> out;
  for_each_line(text, source, [&](const std::string& line, const std::string& where) {
    auto [id, rest] = split_first(line, where);
    out[id].push_back(parse_gt_line(rest, where));
  });
  return out;
}

std::map<std::string, std::vector<DetRecord>> parse_det_text_concat(const std::string& text,
                                                                    const std::string& source) {
  std::map<std::string, std::vector<DetRecord>> out;
  for_each_line(text, source, [&](const std::string& line, const std::string& where) {
    auto [id, rest] = split_first(line, where);
    out[id].push_back(parse_det_line(rest, where));
  });
  return out;
}

static void emit_quad(std::string& s, const Quad& q) {
  for (int i = 0; i < 4; ++i) {
    s += fmt6(q.v[i].x);
    s += ' ';
    s += fmt6(q.v[i].y);
    if (i < 3) s += ' ';
  }
}

std::string emit_gt_line(const GtRecord& r) {
  std::string s;
  emit_quad(s, r.quad);
  s += ' ';
  s += r.cls;
  s += r.difficult ? " 1" : " 0";
  return s;
}

std::string emit_det_line(const DetRecord& r) {
  std::string s = r.cls;
  s += ' ';
  s += fmt6(r.score);
  s += ' ';
  emit_quad(s, r.quad);
  return s;
}

std::string emit_gt_file(const std::vector<GtRecord>& recs) {
  std::string s;
  for (const auto& r : recs) {
    s += emit_gt_line(r);
    s += '\n';
  }
  return s;
}

std::string emit_det_file(const std::vector<DetRecord>& recs) {
  std::string s;
  for (const auto& r : recs) {
    s += emit_det_line(r);
    s += '\n';
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(errc::io_error, "cannot write " + path);
  f << content;
  if (!f.good()) fail(errc::io_error, "short write to " + path);
}

// Directory: one file per image, stem = image id. Single file: one image.
template <typename Rec, typename ParseText>
static std::map<std::string, std::vector<Rec>> load_records(const std::string& path,
                                                            ParseText&& parse_text) {
  std::map<std::string, std::vector<Rec>> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      out[f.stem().string()] = parse_text(read_file(f.string()), f.filename().string());
    }
    return out;
  }
  if (!fs::exists(path)) fail(errc::io_error, "no such file or directory: " + path);
  out[fs::path(path).stem().string()] =
      parse_text(read_file(path), fs::path(path).filename().string());
  return out;
}

std::map<std::string, std::vector<GtRecord>> load_gt(const std::string& path, bool concat) {
  if (concat && !fs::is_directory(path)) {
    return parse_gt_text_concat(read_file(path), fs::path(path).filename().string());
  }
  return load_records<GtRecord>(path, [](const std::string& t, const std::string& s) {
    return parse_gt_text(t, s);
  });
}

std::map<std::string, std::vector<DetRecord>> load_det(const std::string& path, bool concat) {
  if (concat && !fs::is_directory(path)) {
    return parse_det_text_concat(read_file(path), fs::path(path).filename().string());
  }
  return load_records<DetRecord>(path, [](const std::string& t, const std::string& s) {
    return parse_det_text(t, s);
  });
}

}  // namespace gv

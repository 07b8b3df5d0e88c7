#pragma once

// DOTA-style plain-text annotation and detection I/O.
//
// Ground-truth line:  x1 y1 x2 y2 x3 y3 x4 y4 class difficult
// Detection line:     class score x1 y1 x2 y2 x3 y3 x4 y4
// Lines starting with '#' are headers/comments; blank lines are skipped.
// The concatenated variants carry an image-id first column on every line.
// All numbers are emitted with 6 decimal places, so emit(parse(emit(x)))
// is byte-identical.

#include <map>
#include <string>
#include <vector>

#include "gv/geometry.hpp"

namespace gv {

struct GtRecord {
  Quad quad;
  std::string cls;
  bool difficult = false;
};

struct DetRecord {
  std::string cls;
  double score = 0.0;
  Quad quad;
};

// Single-record parsers; "where" names the source and line for error text.
GtRecord parse_gt_line(const std::string& line, const std::string& where = "");
DetRecord parse_det_line(const std::string& line, const std::string& where = "");

// Whole-file parsers (comments/blanks skipped, CRLF tolerated). When
// with_image_id is true every line starts with an image-id column.
std::vector<GtRecord> parse_gt_text(const std::string& text, const std::string& source);
std::vector<DetRecord> parse_det_text(const std::string& text, const std::string& source);
std::map<std::string, std::vector<GtRecord>> parse_gt_text_concat(const std::string& text,
                                                                  const std::string& source);
std::map<std::string, std::vector<DetRecord>> parse_det_text_concat(const std::string& text,
                                                                    const std::string& source);

std::string emit_gt_line(const GtRecord& r);
std::string emit_det_line(const DetRecord& r);
std::string emit_gt_file(const std::vector<GtRecord>& recs);
std::string emit_det_file(const std::vector<DetRecord>& recs);

// Filesystem entry points. A directory means one file per image (the image
// id is the file stem); a regular file holds either one image's records or,
// with concat=true, id-prefixed lines for many images.
std::map<std::string, std::vector<GtRecord>> load_gt(const std::string& path, bool concat);
std::map<std::string, std::vector<DetRecord>> load_det(const std::string& path, bool concat);

std::string read_file(const std::string& path);             // throws io_error
void write_file(const std::string& path, const std::string& content);

// Fixed-point 6-decimal formatting used for every emitted number.
std::string fmt6(double v);

}  // namespace gv

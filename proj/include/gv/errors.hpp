#pragma once

#include <stdexcept>
#include <string>

namespace gv {

// Error categories surfaced by the library. The CLI maps any of these to a
// single-line "error: <code>: <message>" on stderr and a non-zero exit.
enum class errc {
  invalid_input,
  degenerate_geometry,
  parse_error,
  training_diverged,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_input: return "invalid-input";
    case errc::degenerate_geometry: return "degenerate-geometry";
    case errc::parse_error: return "parse-error";
    case errc::training_diverged: return "training-diverged";
    case errc::io_error: return "io-error";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

}  // namespace gv

#pragma once

// Run manifests: the resolved configuration plus a content hash of every
// input, written beside each command's outputs. Deliberately contains no
// timestamps, hostnames, or output paths so a rerun with the same inputs
// and flags is byte-identical.

#include <string>
#include <vector>

namespace gv {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);  // throws io_error

struct ManifestInput {
  std::string role;  // e.g. "gts", "dets", "config"
  std::string path;
};

std::string make_manifest(const std::string& command, const std::string& config_echo,
                          const std::vector<ManifestInput>& inputs);

}  // namespace gv

#include "gv/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>

#include "gv/dataio.hpp"
#include "gv/errors.hpp"

namespace gv {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(errc::io_error, "sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[md[i] >> 4];
    out[2 * i + 1] = hex[md[i] & 0xf];
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string make_manifest(const std::string& command, const std::string& config_echo,
                          const std::vector<ManifestInput>& inputs) {
  std::string out = "command: " + command + "\nconfig:\n";
  // Echo is already sorted key=value lines; indent them.
  size_t pos = 0;
  while (pos < config_echo.size()) {
    size_t nl = config_echo.find('\n', pos);
    if (nl == std::string::npos) nl = config_echo.size();
    out += "  " + config_echo.substr(pos, nl - pos) + "\n";
    pos = nl + 1;
  }
  for (const auto& in : inputs) {
    if (std::filesystem::is_directory(in.path)) {
      // Hash every regular file in sorted order so directory inputs pin
      // their full contents.
      std::vector<std::string> files;
      for (const auto& e : std::filesystem::directory_iterator(in.path))
        if (e.is_regular_file()) files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
      for (const auto& f : files)
        out += "input: " + in.role + " sha256:" + sha256_file(f) + " " + f + "\n";
    } else {
      out += "input: " + in.role + " sha256:" + sha256_file(in.path) + " " + in.path + "\n";
    }
  }
  return out;
}

}  // namespace gv

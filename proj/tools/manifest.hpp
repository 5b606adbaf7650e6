#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "a2lh/error.hpp"

namespace a2lh::cli {

inline std::string to_hex(const unsigned char* data, unsigned int len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error("sha256 initialisation failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes) { EVP_DigestUpdate(ctx_, bytes.data(), bytes.size()); }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &len);
    return to_hex(md.data(), len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline std::string sha256_of(std::string_view text) {
  Sha256 h;
  h.update(text);
  return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

/// Records command, config hash, seed and a checksum per artifact.
class Manifest {
 public:
  Manifest(std::string command, std::string canonical_config, std::uint64_t seed)
      : command_(std::move(command)), config_(std::move(canonical_config)), seed_(seed) {}

  void add(const std::filesystem::path& artifact) { artifacts_.push_back(artifact); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command_;
    j["seed"] = seed_;
    j["config_sha256"] = sha256_of(config_);
    j["config"] = config_;
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : artifacts_)
      arts.push_back({{"path", a.filename().string()},
                      {"bytes", std::filesystem::file_size(a)},
                      {"sha256", sha256_file(a)}});
    j["artifacts"] = arts;
    return j;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
  }

 private:
  std::string command_;
  std::string config_;
  std::uint64_t seed_;
  std::vector<std::filesystem::path> artifacts_;
};

}  // namespace a2lh::cli

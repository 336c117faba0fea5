#pragma once

// Run manifest: config echo, seed, preset and the SHA-256 of every artifact.
// Needs OpenSSL (libcrypto).

#include "cgpe/core/config.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe::harness {

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount())) != 1) {
      throw std::runtime_error("sha256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw std::runtime_error("sha256 final failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

inline nlohmann::json ptree_to_json(const boost::property_tree::ptree& t) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : t) {
    if (v.empty()) j[k] = v.data();
    else j[k] = ptree_to_json(v);
  }
  return j;
}

/// Writes manifest.json into `out_dir` listing `artifacts` (relative to out_dir).
inline void write_manifest(const std::filesystem::path& out_dir, const ExperimentConfig& c,
                           const std::vector<std::string>& artifacts, int exit_code,
                           const std::string& message) {
  nlohmann::json j;
  j["kind"] = c.kind;
  j["preset"] = preset_name(c.preset);
  j["seed"] = c.seed;
  j["config"] = ptree_to_json(c.source);
  j["model"] = {{"alpha", c.model.alpha}, {"sigma", c.model.sigma}, {"R", c.model.pump_radius},
                {"kappa", c.model.kappa}, {"b", c.model.b}, {"trap", c.trap}};
  j["exit_code"] = exit_code;
  j["message"] = message;
  j["artifacts"] = nlohmann::json::array();
  for (const auto& a : artifacts) {
    const auto p = out_dir / a;
    if (!std::filesystem::exists(p)) continue;
    j["artifacts"].push_back({{"path", a}, {"sha256", sha256_file(p)}, {"bytes", std::filesystem::file_size(p)}});
  }
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in '" + out_dir.string() + "'");
  out << std::setw(2) << j << '\n';
}

}  // namespace cgpe::harness

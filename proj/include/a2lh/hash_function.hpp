#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "a2lh/error.hpp"
#include "a2lh/kernel.hpp"
#include "a2lh/linalg.hpp"
#include "a2lh/matrix_io.hpp"
#include "a2lh/optimizer.hpp"

namespace a2lh {

/// Deployable step-two artifact: per modality an optional RBF kernel map and a
/// k x q linear projection. Modalities without a kernel consume raw features.
struct HashModel {
  std::vector<Eigen::MatrixXd> W;
  std::vector<std::optional<KernelModel>> kernels;
  Eigen::Index k = 0;
  Variant variant = Variant::full;

  Eigen::Index modalities() const noexcept { return static_cast<Eigen::Index>(W.size()); }

  /// Raw feature dimension expected by modality m.
  Eigen::Index input_dim(Eigen::Index m) const {
    const auto& km = kernels.at(static_cast<std::size_t>(m));
    return km ? km->dim() : W.at(static_cast<std::size_t>(m)).cols();
  }

  void validate() const {
    if (W.size() != kernels.size()) throw ShapeError("hash model: W/kernel count mismatch");
    for (std::size_t m = 0; m < W.size(); ++m) {
      if (W[m].rows() != k) throw ShapeError("hash model: W rows differ from k");
      if (kernels[m] && kernels[m]->num_anchors() != W[m].cols())
        throw ShapeError("hash model: W columns differ from anchor count");
    }
  }
};

/// Ridge regression W = B phi^T (phi phi^T + omega I)^-1.
inline Eigen::MatrixXd learn_hash_function(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& phi,
                                           double omega) {
  if (codes.cols() != phi.cols())
    throw ShapeError("learn_hash_function: codes have " + std::to_string(codes.cols()) +
                     " columns, features " + std::to_string(phi.cols()));
  if (!(omega > 0.0)) throw ValueError("learn_hash_function: omega must be > 0");
  if (!codes.allFinite() || !phi.allFinite())
    throw ValueError("learn_hash_function: non-finite input");
  Eigen::MatrixXd gram = phi * phi.transpose();
  gram.diagonal().array() += omega;
  return solve_right(codes * phi.transpose(), std::move(gram), 0.0);
}

/// Features as seen by W_m: the kernel map when present, raw otherwise.
inline Eigen::MatrixXd hash_input(const HashModel& hm, Eigen::Index m, const Eigen::MatrixXd& x) {
  if (m < 0 || m >= hm.modalities())
    throw ValueError("modality index " + std::to_string(m) + " out of range [0, " +
                     std::to_string(hm.modalities()) + ")");
  if (x.rows() != hm.input_dim(m))
    throw ShapeError("modality " + std::to_string(m) + " expects dimension " +
                     std::to_string(hm.input_dim(m)) + ", got " + std::to_string(x.rows()));
  const auto& km = hm.kernels[static_cast<std::size_t>(m)];
  return km ? apply_kernel(*km, x) : x;
}

/// codes = sgn(W_m phi_m(x)), sgn(0) = +1.
inline Eigen::MatrixXd encode(const HashModel& hm, Eigen::Index m, const Eigen::MatrixXd& x_raw) {
  const Eigen::MatrixXd phi = hash_input(hm, m, x_raw);
  return sign_of(hm.W[static_cast<std::size_t>(m)] * phi);
}

inline Eigen::MatrixXd encode(const HashModel& hm, Eigen::Index m, const FeatureMatrix& x) {
  return encode(hm, m, x.values());
}

// Model file: one line of JSON, then the binary matrix containers. Offsets in
// the header count bytes from the first byte after the header line.

inline void save_model(const HashModel& hm, const std::filesystem::path& path) {
  hm.validate();
  using nlohmann::json;
  std::ostringstream payload(std::ios::binary);
  json mods = json::array();
  for (std::size_t m = 0; m < hm.W.size(); ++m) {
    json entry;
    entry["modality"] = m;
    entry["q"] = hm.W[m].cols();
    if (const auto& km = hm.kernels[m]) {
      entry["kernel"] = "rbf";
      entry["dim"] = km->dim();
      entry["rho"] = km->width;
      entry["anchors"] = {{"offset", static_cast<std::uint64_t>(payload.tellp())},
                          {"rows", km->anchors.rows()},
                          {"cols", km->anchors.cols()}};
      write_container(payload, km->anchors);
    } else {
      entry["kernel"] = "none";
      entry["dim"] = hm.W[m].cols();
    }
    entry["W"] = {{"offset", static_cast<std::uint64_t>(payload.tellp())},
                  {"rows", hm.W[m].rows()},
                  {"cols", hm.W[m].cols()}};
    write_container(payload, hm.W[m]);
    mods.push_back(std::move(entry));
  }
  json header = {{"format", "a2lh-model"}, {"version", 1},         {"M", hm.W.size()},
                 {"k", hm.k},              {"variant", to_string(hm.variant)}, {"modalities", mods}};

  if (path.empty()) throw IoError("empty model path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << header.dump() << '\n';
  const std::string bytes = payload.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline HashModel load_model(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("model file has no header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model header is not valid JSON: ") + e.what());
  }
  if (header.value("format", "") != "a2lh-model" || header.value("version", 0) != 1)
    throw ParseError("not an a2lh-model version 1 file");
  const std::streamoff base = in.tellg();

  auto read_at = [&](const json& ref) {
    in.clear();
    in.seekg(base + static_cast<std::streamoff>(ref.at("offset").get<std::uint64_t>()));
    Eigen::MatrixXd m = read_container(in);
    if (m.rows() != ref.at("rows").get<Eigen::Index>() || m.cols() != ref.at("cols").get<Eigen::Index>())
      throw ParseError("model payload shape disagrees with header");
    return m;
  };

  HashModel hm;
  try {
    hm.k = header.at("k").get<Eigen::Index>();
    hm.variant = parse_variant(header.at("variant").get<std::string>());
    for (const auto& entry : header.at("modalities")) {
      if (entry.at("kernel") == "rbf") {
        KernelModel km;
        km.modality_id = entry.at("modality").get<int>();
        km.width = entry.at("rho").get<double>();
        km.anchors = read_at(entry.at("anchors"));
        hm.kernels.emplace_back(std::move(km));
      } else {
        hm.kernels.emplace_back(std::nullopt);
      }
      hm.W.push_back(read_at(entry.at("W")));
    }
    if (hm.W.size() != header.at("M").get<std::size_t>())
      throw ParseError("model header M disagrees with modality list");
  } catch (const json::exception& e) {
    throw ParseError(std::string("model header field error: ") + e.what());
  }
  hm.validate();
  return hm;
}

}  // namespace a2lh

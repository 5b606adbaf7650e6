#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "a2lh/data.hpp"
#include "a2lh/error.hpp"

namespace a2lh {

/// Bit-packed +-1 codes. Bit j of code i is bit (j % 64) of word
/// i * words_per_code + j / 64; +1 maps to 1, -1 to 0, padding bits are 0.
class PackedCodes {
 public:
  PackedCodes() = default;
  PackedCodes(Eigen::Index bits, Eigen::Index count)
      : bits_(bits), count_(count), words_per_code_((bits + 63) / 64),
        words_(static_cast<std::size_t>(words_per_code_ * count), 0) {}

  Eigen::Index bits() const noexcept { return bits_; }
  Eigen::Index size() const noexcept { return count_; }
  Eigen::Index words_per_code() const noexcept { return words_per_code_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  std::span<const std::uint64_t> code(Eigen::Index i) const noexcept {
    return {words_.data() + i * words_per_code_, static_cast<std::size_t>(words_per_code_)};
  }
  std::span<std::uint64_t> code(Eigen::Index i) noexcept {
    return {words_.data() + i * words_per_code_, static_cast<std::size_t>(words_per_code_)};
  }

 private:
  Eigen::Index bits_ = 0;
  Eigen::Index count_ = 0;
  Eigen::Index words_per_code_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Packs a k x n +-1 matrix column by column.
inline PackedCodes pack_codes(const Eigen::MatrixXd& codes) {
  PackedCodes out(codes.rows(), codes.cols());
  for (Eigen::Index i = 0; i < codes.cols(); ++i) {
    auto words = out.code(i);
    for (Eigen::Index j = 0; j < codes.rows(); ++j) {
      const double v = codes(j, i);
      if (v == 1.0)
        words[static_cast<std::size_t>(j / 64)] |= std::uint64_t{1} << (j % 64);
      else if (v != -1.0)
        throw ValueError("pack_codes: entry (" + std::to_string(j) + ", " + std::to_string(i) +
                         ") is not +-1");
    }
  }
  return out;
}

inline Eigen::MatrixXd unpack_codes(const PackedCodes& packed) {
  Eigen::MatrixXd out(packed.bits(), packed.size());
  for (Eigen::Index i = 0; i < packed.size(); ++i) {
    const auto words = packed.code(i);
    for (Eigen::Index j = 0; j < packed.bits(); ++j)
      out(j, i) = (words[static_cast<std::size_t>(j / 64)] >> (j % 64)) & 1U ? 1.0 : -1.0;
  }
  return out;
}

/// popcount(a XOR b).
inline int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance: code length mismatch");
  int d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

/// Database indices by ascending Hamming distance; ties keep ascending index.
/// Counting sort over the k+1 possible distances.
inline std::vector<Eigen::Index> rank_database(std::span<const std::uint64_t> query,
                                               const PackedCodes& db) {
  if (static_cast<Eigen::Index>(query.size()) != db.words_per_code())
    throw ShapeError("rank_database: query/database code length mismatch");
  const auto n = db.size();
  const auto k = db.bits();
  std::vector<int> dist(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> bucket(static_cast<std::size_t>(k + 2), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int d = hamming_distance(query, db.code(i));
    dist[static_cast<std::size_t>(i)] = d;
    ++bucket[static_cast<std::size_t>(d + 1)];
  }
  for (std::size_t b = 1; b < bucket.size(); ++b) bucket[b] += bucket[b - 1];
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    order[static_cast<std::size_t>(bucket[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)])]++)] = i;
  return order;
}

/// Average precision of a ranking: the mean, over relevant positions, of the
/// precision at that position, divided by the total relevant count. With a
/// cutoff only the first `cutoff` positions count and the normalizer is the
/// number of relevant items inside the cutoff. Returns nullopt when the
/// database holds no relevant item.
inline std::optional<double> average_precision(std::span<const Eigen::Index> ranking,
                                               std::span<const std::uint8_t> relevance,
                                               std::optional<Eigen::Index> cutoff = std::nullopt) {
  if (ranking.size() != relevance.size())
    throw ShapeError("average_precision: ranking and relevance lengths differ");
  std::size_t total = 0;
  for (auto r : relevance) total += r ? 1 : 0;
  if (total == 0) return std::nullopt;
  const std::size_t limit =
      cutoff ? std::min<std::size_t>(static_cast<std::size_t>(*cutoff), ranking.size()) : ranking.size();
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < limit; ++pos) {
    if (relevance[static_cast<std::size_t>(ranking[pos])]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  if (hits == 0) return 0.0;
  return sum / static_cast<double>(cutoff ? hits : total);
}

enum class Task { I2T, T2I };

inline std::string_view to_string(Task t) { return t == Task::I2T ? "I2T" : "T2I"; }

inline Task parse_task(std::string_view s) {
  if (s == "I2T" || s == "i2t") return Task::I2T;
  if (s == "T2I" || s == "t2i") return Task::T2I;
  throw ValueError("unknown task '" + std::string(s) + "' (expected I2T or T2I)");
}

/// Query modality index of a task; the database side is the other modality.
inline Eigen::Index query_modality(Task t) { return t == Task::I2T ? 0 : 1; }
inline Eigen::Index database_modality(Task t) { return t == Task::I2T ? 1 : 0; }

struct EvalOptions {
  std::vector<Eigen::Index> precision_grid = default_precision_grid();
  std::optional<Eigen::Index> map_cutoff;

  static std::vector<Eigen::Index> default_precision_grid() {
    std::vector<Eigen::Index> g;
    for (Eigen::Index v = 50; v <= 1000; v += 50) g.push_back(v);
    return g;
  }
};

struct EvalReport {
  Task task = Task::I2T;
  Eigen::Index k = 0;
  double mAP = 0.0;
  std::vector<std::pair<Eigen::Index, double>> precision_at;
  Eigen::Index queries = 0;
  /// Queries without any relevant database item; excluded from all averages.
  Eigen::Index excluded = 0;
  double elapsed_ms = 0.0;
};

/// relevance[j] = 1 iff database item j shares at least one label with the query.
inline std::vector<std::uint8_t> label_relevance(const Eigen::VectorXd& query_labels,
                                                 const Eigen::MatrixXd& db_labels) {
  const Eigen::VectorXd overlap = db_labels.transpose() * query_labels;
  std::vector<std::uint8_t> rel(static_cast<std::size_t>(overlap.size()));
  for (Eigen::Index j = 0; j < overlap.size(); ++j) rel[static_cast<std::size_t>(j)] = overlap(j) > 0.0;
  return rel;
}

/// Hamming-ranks the database for every query and averages AP and P@n over
/// queries that have at least one relevant item.
inline EvalReport evaluate(const PackedCodes& query_codes, const LabelMatrix& query_labels,
                           const PackedCodes& db_codes, const LabelMatrix& db_labels, Task task,
                           const EvalOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (query_codes.size() == 0) throw ValueError("evaluate: empty query set");
  if (query_codes.bits() != db_codes.bits()) throw ShapeError("evaluate: code length mismatch");
  if (query_codes.size() != query_labels.size() || db_codes.size() != db_labels.size())
    throw ShapeError("evaluate: codes and labels disagree on instance count");
  if (query_labels.classes() != db_labels.classes())
    throw ShapeError("evaluate: query and database label spaces differ");

  std::vector<Eigen::Index> grid = opts.precision_grid;
  std::sort(grid.begin(), grid.end());
  EvalReport rep;
  rep.task = task;
  rep.k = db_codes.bits();
  rep.queries = query_codes.size();
  std::vector<double> precision_sum(grid.size(), 0.0);
  double ap_sum = 0.0;
  Eigen::Index counted = 0;
  for (Eigen::Index qi = 0; qi < query_codes.size(); ++qi) {
    const auto rel = label_relevance(query_labels.values().col(qi), db_labels.values());
    const auto ranking = rank_database(query_codes.code(qi), db_codes);
    const auto ap = average_precision(ranking, rel, opts.map_cutoff);
    if (!ap) {
      ++rep.excluded;
      continue;
    }
    ++counted;
    ap_sum += *ap;
    std::size_t hits = 0;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto top = std::min<std::size_t>(static_cast<std::size_t>(grid[g]), ranking.size());
      for (; pos < top; ++pos) hits += rel[static_cast<std::size_t>(ranking[pos])];
      precision_sum[g] += top ? static_cast<double>(hits) / static_cast<double>(top) : 0.0;
    }
  }
  if (counted == 0) throw ValueError("evaluate: no query has a relevant database item");
  rep.mAP = ap_sum / static_cast<double>(counted);
  for (std::size_t g = 0; g < grid.size(); ++g)
    rep.precision_at.emplace_back(grid[g], precision_sum[g] / static_cast<double>(counted));
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["task"] = to_string(r.task);
  j["k"] = r.k;
  j["mAP"] = r.mAP;
  j["queries"] = r.queries;
  j["excluded_queries"] = r.excluded;
  j["elapsed_ms"] = r.elapsed_ms;
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [n, v] : r.precision_at) p["P@" + std::to_string(n)] = v;
  j["precision_at"] = p;
  return j;
}

/// task,k,mAP,P@n...,elapsed_ms
inline void write_report_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
  if (reports.empty()) return;
  os << "task,k,mAP";
  for (const auto& [n, v] : reports.front().precision_at) os << ",P@" << n;
  os << ",elapsed_ms\n";
  os.precision(10);
  for (const auto& r : reports) {
    os << to_string(r.task) << ',' << r.k << ',' << r.mAP;
    for (const auto& [n, v] : r.precision_at) os << ',' << v;
    os << ',' << r.elapsed_ms << '\n';
  }
}

inline void write_precision_curve_csv(std::ostream& os, const EvalReport& r) {
  os << "n,precision\n";
  os.precision(10);
  for (const auto& [n, v] : r.precision_at) os << n << ',' << v << '\n';
}

}  // namespace a2lh

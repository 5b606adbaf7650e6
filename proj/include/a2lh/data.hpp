#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "a2lh/error.hpp"
#include "a2lh/matrix_io.hpp"
#include "a2lh/rng.hpp"

namespace a2lh {

/// One modality's features, d x n with instances as columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(Eigen::MatrixXd values, int modality_id = 0)
      : values_(std::move(values)), modality_id_(modality_id) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw ShapeError("feature matrix must be at least 1x1");
    check_finite(values_, "feature matrix");
  }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  Eigen::Index size() const noexcept { return values_.cols(); }
  int modality_id() const noexcept { return modality_id_; }

 private:
  Eigen::MatrixXd values_;
  int modality_id_ = 0;
};

/// Binary c x n label matrix; every instance carries at least one label.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  explicit LabelMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw ShapeError("label matrix must be at least 1x1");
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      bool any = false;
      for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        const double v = values_(i, j);
        if (v != 0.0 && v != 1.0)
          throw ValueError("label entry at row " + std::to_string(i) + ", col " +
                           std::to_string(j) + " is not 0/1");
        any = any || v == 1.0;
      }
      if (!any) throw ValueError("instance " + std::to_string(j) + " carries no label");
    }
  }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index classes() const noexcept { return values_.rows(); }
  Eigen::Index size() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
};

struct Dataset {
  std::vector<FeatureMatrix> modalities;
  LabelMatrix labels;

  Eigen::Index size() const noexcept { return labels.size(); }

  void validate() const {
    if (modalities.empty()) throw ShapeError("dataset has no modalities");
    for (const auto& m : modalities)
      if (m.size() != labels.size())
        throw ShapeError("modality " + std::to_string(m.modality_id()) + " has " +
                         std::to_string(m.size()) + " instances, labels have " +
                         std::to_string(labels.size()));
  }
};

inline FeatureMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format,
                                 int modality_id = 0) {
  return FeatureMatrix(read_matrix(path, format), modality_id);
}

inline void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path,
                         MatrixFormat format) {
  write_raw_matrix(m.values(), path, format);
}

inline LabelMatrix load_labels(const std::filesystem::path& path, MatrixFormat format) {
  return LabelMatrix(read_matrix(path, format));
}

inline void write_labels(const LabelMatrix& l, const std::filesystem::path& path,
                         MatrixFormat format) {
  write_raw_matrix(l.values(), path, format);
}

/// Parameters of the synthetic bimodal generator.
struct SynthSpec {
  Eigen::Index n = 1000;
  Eigen::Index c = 2;
  Eigen::Index d1 = 32;
  Eigen::Index d2 = 24;
  double noise = 0.0;
  /// Noise of modality 2 when >= 0; otherwise modality 2 uses `noise`.
  double noise2 = -1.0;
  bool multilabel = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (c < 2 || n < c) throw ValueError("synthetic spec requires n >= c >= 2");
    if (d1 < 1 || d2 < 1) throw ValueError("synthetic spec requires positive dimensions");
    if (!(noise >= 0.0)) throw ValueError("synthetic noise must be >= 0");
  }
};

/// Class prototypes plus Gaussian noise. Single-label labels are balanced
/// (instance i initially gets class i mod c) and then shuffled.
inline Dataset make_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "synth");
  const Eigen::Index n = spec.n;
  const Eigen::Index c = spec.c;

  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(c, n);
  if (!spec.multilabel) {
    std::vector<Eigen::Index> cls(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = i % c;
    std::shuffle(cls.begin(), cls.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i) labels(cls[static_cast<std::size_t>(i)], i) = 1.0;
  } else {
    const int max_labels = static_cast<int>(std::min<Eigen::Index>(3, c));
    std::uniform_int_distribution<int> count_dist(1, max_labels);
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(c));
    for (Eigen::Index i = 0; i < n; ++i) {
      std::iota(pool.begin(), pool.end(), Eigen::Index{0});
      std::shuffle(pool.begin(), pool.end(), rng);
      const int count = count_dist(rng);
      for (int t = 0; t < count; ++t) labels(pool[static_cast<std::size_t>(t)], i) = 1.0;
    }
  }

  Dataset ds;
  const std::array<Eigen::Index, 2> dims = {spec.d1, spec.d2};
  const std::array<double, 2> noise = {spec.noise, spec.noise2 >= 0.0 ? spec.noise2 : spec.noise};
  for (int m = 0; m < 2; ++m) {
    const Eigen::MatrixXd prototypes = gaussian_matrix(dims[m], c, 1.0, rng);
    Eigen::MatrixXd x = prototypes * labels;
    const Eigen::RowVectorXd counts = labels.colwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) x.col(i) /= counts(i);
    if (noise[m] > 0.0) x += gaussian_matrix(dims[m], n, noise[m], rng);
    ds.modalities.emplace_back(std::move(x), m);
  }
  ds.labels = LabelMatrix(std::move(labels));
  return ds;
}

/// Column subset of a dataset, preserving modality/label alignment.
inline Dataset select(const Dataset& ds, const std::vector<Eigen::Index>& idx) {
  Dataset out;
  for (const auto& m : ds.modalities) out.modalities.emplace_back(m.values()(Eigen::all, idx), m.modality_id());
  out.labels = LabelMatrix(ds.labels.values()(Eigen::all, idx));
  return out;
}

struct Split {
  Dataset database;
  Dataset query;
  std::vector<Eigen::Index> database_index;
  std::vector<Eigen::Index> query_index;
};

/// Random disjoint query/database partition. Each side keeps ascending
/// original order.
inline Split split(const Dataset& ds, double query_fraction, std::uint64_t seed) {
  ds.validate();
  if (!(query_fraction > 0.0 && query_fraction < 1.0))
    throw ValueError("query fraction must lie in (0,1)");
  const Eigen::Index n = ds.size();
  const auto n_query = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) * query_fraction));
  if (n_query < 1 || n_query >= n)
    throw ValueError("query fraction leaves an empty query or database split");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng = make_rng(seed, "split");
  std::shuffle(perm.begin(), perm.end(), rng);

  Split s;
  s.query_index.assign(perm.begin(), perm.begin() + n_query);
  s.database_index.assign(perm.begin() + n_query, perm.end());
  std::sort(s.query_index.begin(), s.query_index.end());
  std::sort(s.database_index.begin(), s.database_index.end());
  s.query = select(ds, s.query_index);
  s.database = select(ds, s.database_index);
  return s;
}

}  // namespace a2lh

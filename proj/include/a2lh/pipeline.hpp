#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Core>

#include "a2lh/data.hpp"
#include "a2lh/hash_function.hpp"
#include "a2lh/kernel.hpp"
#include "a2lh/optimizer.hpp"
#include "a2lh/retrieval.hpp"
#include "a2lh/train.hpp"

namespace a2lh {

struct PipelineConfig {
  Hyperparams hyper;
  Variant variant = Variant::full;
  /// Anchors per modality, capped at n.
  Eigen::Index anchors = 2500;
  TrainOptions options;
};

struct TrainedModel {
  HashModel model;
  Eigen::MatrixXd codes;  // step-one codes of the training instances
  TrainTrace trace;
};

/// Kernelize every modality (skipped for no_kernel), run step one, then fit
/// one hash function per modality on the step-one codes.
inline TrainedModel train_model(const Dataset& ds, const PipelineConfig& cfg) {
  ds.validate();
  cfg.hyper.validate();
  if (!(cfg.hyper.omega > 0.0)) throw ValueError("omega must be > 0");

  HashModel hm;
  hm.k = cfg.hyper.k;
  hm.variant = cfg.variant;
  std::vector<Eigen::MatrixXd> phi;
  for (const auto& x : ds.modalities) {
    if (cfg.variant == Variant::no_kernel) {
      hm.kernels.emplace_back(std::nullopt);
      phi.push_back(x.values());
    } else {
      const Eigen::Index q = std::min(cfg.anchors, ds.size());
      KernelModel km = fit_kernel(x, q, cfg.hyper.seed);
      phi.push_back(apply_kernel(km, x.values()));
      hm.kernels.emplace_back(std::move(km));
    }
  }

  StepOneResult step1 = train_step1(phi, ds.labels, cfg.hyper, cfg.variant, cfg.options);
  for (std::size_t m = 0; m < phi.size(); ++m)
    hm.W.push_back(learn_hash_function(step1.B, phi[m], cfg.hyper.omega));
  return TrainedModel{std::move(hm), std::move(step1.B), std::move(step1.trace)};
}

/// Cross-modal evaluation of one task. Queries are encoded through W of the
/// query modality. The database uses the step-one codes unless `reencode_db`
/// is set, in which case it is encoded through W of the database modality.
inline EvalReport evaluate_task(const HashModel& hm, const Eigen::MatrixXd& db_codes,
                                const Dataset& database, const Dataset& query, Task task,
                                const EvalOptions& opts = {}, bool reencode_db = false) {
  if (hm.modalities() < 2 || static_cast<Eigen::Index>(query.modalities.size()) < 2)
    throw ShapeError("cross-modal evaluation needs two modalities");
  const Eigen::Index qm = query_modality(task);
  const Eigen::Index dm = database_modality(task);
  const PackedCodes q = pack_codes(encode(hm, qm, query.modalities[static_cast<std::size_t>(qm)]));
  const PackedCodes d =
      reencode_db ? pack_codes(encode(hm, dm, database.modalities[static_cast<std::size_t>(dm)]))
                  : pack_codes(db_codes);
  return evaluate(q, query.labels, d, database.labels, task, opts);
}

}  // namespace a2lh

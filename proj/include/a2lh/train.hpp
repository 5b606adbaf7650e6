#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "a2lh/error.hpp"
#include "a2lh/optimizer.hpp"

namespace a2lh {

/// Per-sweep record of a step-one run. Index 0 holds the initial state.
struct TrainTrace {
  Variant variant = Variant::full;
  std::vector<double> objective;
  std::vector<double> normalized;
  std::vector<Eigen::VectorXd> mu;
  std::vector<double> seconds;
  /// Objective after the mu, R, C, B and U steps of each sweep (only filled
  /// when requested; the V/K/Lambda block optimizes an augmented function).
  std::vector<std::array<double, 5>> substeps;

  std::size_t iterations() const noexcept { return objective.empty() ? 0 : objective.size() - 1; }

  /// normalized[i] = objective[i] / max_j objective[j], in [0, 1] for
  /// nonnegative objectives.
  void normalize() {
    normalized.assign(objective.size(), 0.0);
    if (objective.empty()) return;
    const double top = *std::max_element(objective.begin(), objective.end());
    for (std::size_t i = 0; i < objective.size(); ++i)
      normalized[i] = top > 0.0 ? std::clamp(objective[i] / top, 0.0, 1.0) : 0.0;
  }
};

struct TrainOptions {
  bool record_substeps = false;
};

struct StepOneResult {
  Eigen::MatrixXd B;  // final +-1 codes
  TrainState state;
  TrainTrace trace;
};

/// Alternating minimization: per sweep mu, R, C, B, U, then V_m, K_m, Lambda_m
/// for every modality. Stops after max_iter sweeps or when the relative change
/// of the objective drops below tol.
inline StepOneResult train_step1(std::vector<Eigen::MatrixXd> phiX, const LabelMatrix& labels,
                                 const Hyperparams& h, Variant variant = Variant::full,
                                 const TrainOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  TrainState s = init_state(std::move(phiX), labels, h, variant);
  TrainTrace trace;
  trace.variant = variant;

  UProducts p = u_products(s);
  trace.objective.push_back(objective(s, h, p));
  trace.mu.push_back(s.mu);
  trace.seconds.push_back(0.0);

  for (int it = 1; it <= h.max_iter; ++it) {
    const auto start = clock::now();
    std::array<double, 5> sub{};
    auto mark = [&](std::size_t slot) {
      if (opts.record_substeps) sub[slot] = objective(s, h, p);
    };
    update_mu(s, h, p);
    mark(0);
    update_R(s, h);
    mark(1);
    update_C(s, h, p);
    mark(2);
    update_B(s, h);
    mark(3);
    update_U(s, h);
    p = u_products(s);
    mark(4);
    for (Eigen::Index m = 0; m < s.modalities(); ++m) {
      update_V(s, h, m, p);
      update_K(s, h, m, p);
      update_lambda(s, h, m);
    }
    const double f = objective(s, h, p);
    const double secs = std::chrono::duration<double>(clock::now() - start).count();

    if (!std::isfinite(f)) throw ValueError("objective became non-finite at sweep " + std::to_string(it));
    const double prev = trace.objective.back();
    trace.objective.push_back(f);
    trace.mu.push_back(s.mu);
    trace.seconds.push_back(secs);
    if (opts.record_substeps) trace.substeps.push_back(sub);

    const double rel = std::abs(prev - f) / std::max(std::abs(prev), std::numeric_limits<double>::min());
    if (h.tol > 0.0 && rel < h.tol) break;
  }
  trace.normalize();

  Eigen::MatrixXd codes = variant == Variant::relaxed_B ? sign_of(s.B) : s.B;
  return StepOneResult{std::move(codes), std::move(s), std::move(trace)};
}

/// iteration,raw_objective,normalized_objective,mu_1..mu_M,seconds,variant
inline void write_trace_csv(std::ostream& os, const TrainTrace& t) {
  const std::size_t M = t.mu.empty() ? 0 : static_cast<std::size_t>(t.mu.front().size());
  os << "iteration,raw_objective,normalized_objective";
  for (std::size_t m = 0; m < M; ++m) os << ",mu_" << (m + 1);
  os << ",seconds,variant\n";
  os.precision(17);
  for (std::size_t i = 0; i < t.objective.size(); ++i) {
    os << i << ',' << t.objective[i] << ',' << (i < t.normalized.size() ? t.normalized[i] : 0.0);
    for (std::size_t m = 0; m < M; ++m) os << ',' << t.mu[i](static_cast<Eigen::Index>(m));
    os << ',' << t.seconds[i] << ',' << to_string(t.variant) << '\n';
  }
}

inline void write_trace_csv(const std::filesystem::path& path, const TrainTrace& t) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_trace_csv(out, t);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace a2lh

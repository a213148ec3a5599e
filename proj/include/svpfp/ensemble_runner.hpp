#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/eulerian_solver.hpp"
#include "svpfp/hypo_energy.hpp"
#include "svpfp/noise_model.hpp"
#include "svpfp/phase_space.hpp"

namespace svpfp {

struct EnsembleConfig {
  int realizations = 8;
  std::uint64_t base_seed = 0;
  StepPlan plan;
  NoiseSpec noise;
  std::uint64_t noise_substeps = 1;  // fine Brownian steps per solver step
  std::uint64_t steps = 100;
  std::uint64_t cadence = 10;
  WeightedNormSpec stopping_norm{2, 2.0};
  std::vector<double> stopping_levels{};
  std::vector<double> moments{2.0, 4.0};
  int bootstrap_samples = 1000;
  // E_sigma monitored along every run
  int energy_sigma = 0;
  double energy_epsilon = 0.5;
  double energy_m = 0.0;

  void validate() const;
};

struct SeriesPoint {
  double t = 0.0;
  double mass = 0.0;
  double l2 = 0.0;
  double norm = 0.0;  // ||f(t)||_{H^{s0}_{m0}}
  double e_sigma = 0.0;
  double theta = 1.0;
};

struct RunRecord {
  int realization = 0;
  std::vector<SeriesPoint> series;
  std::vector<StepRecord> log;
  std::vector<double> stopping_times;  // +inf when never crossed
  bool completed = false;
  std::string failure;
  double max_mass_drift = 0.0;
  bool l2_bound_ok = true;
  double sup_norm = 0.0;
  bool invalid = false;
};

struct MomentRow {
  double p = 2.0;
  double mean = 0.0;  // E[sup_t ||f||^p]
  double ci_low = 0.0;
  double ci_high = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct StoppingSummary {
  double level = 0.0;
  double hit_fraction = 0.0;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;  // +inf when fewer runs crossed
};

struct EnsembleSummary {
  int realizations = 0;
  int completed = 0;
  std::vector<std::pair<int, std::string>> failures;
  std::vector<StoppingSummary> stopping;
  std::vector<MomentRow> moments;
  double max_mass_drift = 0.0;
  bool l2_bound_ok = true;
  double mean_sup_norm_sq = 0.0;
};

struct EnsembleResult {
  std::vector<RunRecord> records;
  EnsembleSummary summary;
};

/// First time the norm series exceeds each level (linear scan).
std::vector<double> detect_stopping(const std::vector<double>& times, const std::vector<double>& norms,
                                    const std::vector<double>& levels);

/// Empirical E[sup_t ||f||^p] with a percentile bootstrap interval drawn from
/// the counter-based generator, so the result is deterministic.
std::vector<MomentRow> moment_summary(const std::vector<RunRecord>& records, const std::vector<double>& ps,
                                      int bootstrap_samples = 1000, std::uint64_t seed = 0);

/// Realization r uses the noise path (base_seed, r). Records come back in
/// realization order whatever the thread count.
EnsembleResult run_ensemble(const DistributionField& f0, const EnsembleConfig& config);

void write_ensemble_summary(const std::string& path, const EnsembleConfig& config, const EnsembleSummary& summary);

}  // namespace svpfp

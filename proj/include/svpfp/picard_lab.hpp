#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/eulerian_solver.hpp"
#include "svpfp/noise_model.hpp"
#include "svpfp/phase_space.hpp"

namespace svpfp {

enum class PicardBackend { Eulerian, LagrangianFk };

struct PicardConfig {
  int j_max = 5;
  double T = 0.25;
  double delta = 1.0 / 12.0;
  PicardBackend backend = PicardBackend::Eulerian;
  // dt, nu, cutoff R, mollifier width, field sign and the norm (s0, m0)
  StepPlan plan;
  int fk_replicas = 8;
  std::uint64_t fk_seed = 1;
  bool keep_trajectories = false;
  bool compare_direct = false;

  std::uint64_t steps() const;
  void validate() const;
};

struct EnvelopeFit {
  bool degenerate = false;
  std::string notice;
  double log_prefactor = 0.0;  // least-squares intercept
  double k0t = 0.0;            // least-squares K0 T
  double k0 = 0.0;             // k0t / T
  std::vector<double> residuals;
  std::vector<double> envelope;  // calibrated on j = 1
  std::vector<double> ratio;     // envelope_j / d_j
};

/// Calibrated envelope d_1 j^{4 delta j} / j! (exact at j = 1) and the
/// least-squares fit of log d_j = c + j log(K0 T) + 4 delta j log j - log j!.
EnvelopeFit fit_envelope(const std::vector<double>& diffs, double T, double delta);

struct PicardReport {
  std::vector<double> diffs;  // d_j for j = 1..J
  EnvelopeFit fit;
  bool cauchy_flag = false;
  bool aborted = false;
  std::string abort_reason;
  int completed_iterates = 0;  // iterates f^0..f^{completed-1} finished
  double max_norm = 0.0;       // max over iterates and steps of ||f^j||_{H^{s0+1}_{m0}}
  double direct_gap = -1.0;    // ||f^J(T) - f_direct(T)||, -1 when not computed
  Warnings warnings;
};

struct PicardResult {
  PicardReport report;
  std::vector<DistributionField> finals;                   // f^j(T)
  std::vector<std::vector<DistributionField>> trajectories;  // when kept
};

/// f^0 solves the linear equation without field; f^{j+1} uses the drift of
/// f^j frozen on the shared step grid. Every iterate reuses the same noise.
PicardResult run_iteration(const DistributionField& f0, const PicardConfig& config,
                           std::shared_ptr<const NoiseSource> noise);

std::vector<std::string> picard_report_header();
void write_picard_report(const std::string& path, const PicardReport& report);

}  // namespace svpfp

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/field_solver.hpp"
#include "svpfp/noise_model.hpp"
#include "svpfp/phase_space.hpp"

namespace svpfp {

enum class SplittingOrder { Lie, Strang };

struct StepPlan {
  double dt = 0.01;
  double nu = 0.0;
  CutoffSpec cutoff{std::numeric_limits<double>::infinity()};
  WeightedNormSpec cutoff_norm{2, 2.0};  // (s0, m0)
  double mollifier_epsilon = 0.0;        // 0 disables the mollifier
  SplittingOrder splitting = SplittingOrder::Strang;
  bool self_field = true;                // false forces E = 0
  // +1 uses E = grad (-Lap)^{-1}(rho - 1) as written; -1 flips to the
  // repulsive plasma convention.
  double field_sign = 1.0;
  std::optional<KernelMultiplier> kernel;  // empty: Coulomb

  void validate() const;
};

/// Drift acceleration theta_R * (phi_eps * E) assembled for one step.
struct DriftEvaluation {
  std::vector<double> accel;  // node-major d components; empty means zero
  double norm = 0.0;          // ||f||_{H^{s0}_{m0}} of the evaluated state
  double theta = 1.0;
  double field_energy = 0.0;  // 1/2 ||accel||^2
  Warnings warnings;
};

/// Produces the drift for the mid-step state of step `step`.
using FieldProvider = std::function<DriftEvaluation(const DistributionField&, std::uint64_t)>;

/// Default self-consistent drift: norm, cutoff, Poisson (or kernel) solve,
/// mollifier, dealiasing mask.
DriftEvaluation evaluate_drift(const DistributionField& f, const StepPlan& plan);

// Exact substeps. The in-place forms are used by the stepper.
void transport_x(DistributionField& f, double dt);
DistributionField substep_transport_x(const DistributionField& f, double dt);

/// f(x, v) -> f(x, v - a(x)) with a node-major d-vector field.
void shift_v(DistributionField& f, std::span<const double> a_total);
DistributionField substep_accel_v(const DistributionField& f, std::span<const double> a_total);

/// Pure diffusion exp(-nu |eta|^2 dt).
DistributionField diffuse_v(const DistributionField& f, double nu, double dt);
/// Drift-only flow f(v) -> e^{d nu dt} f(v e^{nu dt}).
DistributionField dilate_v(const DistributionField& f, double nu, double dt);

struct FokkerPlanckResult {
  DistributionField field;
  double mass_defect = 0.0;  // relative
  Warnings warnings;
};

/// Exact Ornstein-Uhlenbeck velocity flow of nu (Lap_v f + div_v(v f)).
FokkerPlanckResult substep_fokker_planck(const DistributionField& f, double nu, double dt);

struct SolverState {
  DistributionField f;
  std::uint64_t step_index = 0;
  double last_theta = 1.0;
  double last_norm = 0.0;
};

struct StepRecord {
  std::uint64_t step = 0;
  double t = 0.0;
  double mass = 0.0;
  double l2 = 0.0;
  double norm = 0.0;
  double theta = 1.0;
  double min_f = 0.0;
  double e_energy = 0.0;
};

struct StepOutcome {
  StepRecord record;
  Warnings warnings;
};

class EulerianSolver {
 public:
  EulerianSolver(StepPlan plan, std::shared_ptr<const NoiseSource> noise, FieldProvider provider = {});

  const StepPlan& plan() const { return plan_; }
  StepOutcome step(SolverState& state) const;
  /// Record for the current state without stepping (drift from the default
  /// evaluation or the provider at the current step index).
  StepRecord diagnostics(const SolverState& state) const;

 private:
  DriftEvaluation drift(const DistributionField& f, std::uint64_t step) const;

  StepPlan plan_;
  std::shared_ptr<const NoiseSource> noise_;
  FieldProvider provider_;
};

struct RunOptions {
  std::uint64_t steps = 1;
  std::uint64_t cadence = 1;
  std::function<void(const SolverState&, const StepRecord&)> observer;
};

struct RunResult {
  SolverState final_state;
  std::vector<StepRecord> log;
  Warnings warnings;
  bool aborted = false;
  std::string abort_reason;
  bool invalid = false;            // velocity tail above threshold
  double max_tail_fraction = 0.0;
  double max_mass_drift = 0.0;     // relative
};

/// Runs `steps` steps from f0; on non-finite values stops and returns the
/// last good state with aborted = true.
RunResult run_eulerian(const DistributionField& f0, const StepPlan& plan,
                       std::shared_ptr<const NoiseSource> noise, const RunOptions& options,
                       FieldProvider provider = {});

std::vector<std::string> step_log_header();
std::vector<double> step_log_row(const StepRecord& r);
void write_step_log(const std::string& path, const std::vector<StepRecord>& log);

inline constexpr double kTailThreshold = 1e-10;

}  // namespace svpfp

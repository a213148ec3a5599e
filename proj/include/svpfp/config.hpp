#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "svpfp/eulerian_solver.hpp"
#include "svpfp/lagrangian_solver.hpp"
#include "svpfp/noise_model.hpp"
#include "svpfp/phase_space.hpp"
#include "svpfp/picard_lab.hpp"

namespace svpfp {

enum class Backend { Eulerian, LagrangianFk, Pic };

struct InitialConfig {
  std::string kind = "perturbed_maxwellian";  // maxwellian, perturbed_maxwellian, two_stream, rough, snapshot
  double amplitude = 0.05;
  int mode = 1;
  double drift = 0.0;
  double thermal = 1.0;
  double beam_velocity = 2.0;
  int log2_kmax = 20;
  std::uint64_t seed = 0;
  std::string path;
  int regularize = 0;  // n of R^n, 0 = off
};

struct NoiseConfig {
  NoiseSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
  std::uint64_t substeps = 1;
  std::string coloring_csv;
};

struct SolverConfig {
  Backend backend = Backend::Eulerian;
  StepPlan plan;
  std::uint64_t steps = 100;
  std::string kernel_csv;
  int fk_replicas = 32;
  std::uint64_t fk_seed = 1;
  PushScheme scheme = PushScheme::StratonovichHeun;
  std::size_t particles = 0;
  InitStrategy particle_init = InitStrategy::GridWeighted;
};

struct PicardSection {
  int j_max = 5;
  double T = 0.25;
  double delta = 1.0 / 12.0;
  PicardBackend backend = PicardBackend::Eulerian;
  int fk_replicas = 8;
  bool compare_direct = false;
};

struct HypoSection {
  double epsilon = 0.5;
  int sigma = 0;
  double m = 0.0;
  double nu = 0.5;
  int log2_kmax = 20;
  double amplitude = 1.0;
  double t_min = 1e-3;
  double t_max = 1e-1;
  int samples = 12;
  std::string source = "propagator";  // propagator or grid
  std::uint64_t seed = 0;
};

struct EnsembleSection {
  int realizations = 8;
  std::uint64_t base_seed = 0;
  std::uint64_t cadence = 10;
  std::vector<double> levels;
  std::vector<double> moments{2.0, 4.0};
  int bootstrap = 1000;
  int energy_sigma = 0;
  double energy_epsilon = 0.5;
};

struct ConvergenceSection {
  int dt_levels = 4;
  std::vector<std::size_t> nx_levels;
  double t_final = 0.25;
};

struct OutputConfig {
  std::string dir = "out";
  std::uint64_t cadence = 1;
  std::vector<double> snapshot_times;
};

struct RunConfig {
  GridSpec grid;
  InitialConfig initial;
  NoiseConfig noise;
  SolverConfig solver;
  PicardSection picard;
  HypoSection hypo;
  EnsembleSection ensemble;
  ConvergenceSection convergence;
  OutputConfig output;
  std::vector<std::string> sections;  // present in the source document
};

/// Applies "section.key=value" overrides; value is read as JSON when it
/// parses, else as a string.
std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& overrides);

/// Parses and validates a configuration document; errors are Config errors
/// naming the offending field.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Initial distribution described by the [initial] section.
DistributionField make_initial(const RunConfig& config);
std::shared_ptr<const NoiseSource> make_noise(const RunConfig& config, std::uint64_t horizon);

}  // namespace svpfp

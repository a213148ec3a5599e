#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/field_solver.hpp"
#include "svpfp/noise_model.hpp"
#include "svpfp/phase_space.hpp"

namespace svpfp {

struct ParticleEnsemble {
  int dim = 1;
  std::vector<double> X;  // N x d
  std::vector<double> V;  // N x d
  std::vector<double> w;  // N
  int replicas = 1;
  double time = 0.0;

  std::size_t size() const { return w.size(); }
};

enum class InitStrategy { GridWeighted, RejectionSampled };
enum class PushScheme { EulerMaruyama, StratonovichHeun };

/// grid_weighted places one particle per node (N must be 0 or the node
/// count); rejection_sampled draws N particles from f0 read as a piecewise
/// constant density.
ParticleEnsemble init_particles(const DistributionField& f0, std::size_t n, InitStrategy strategy,
                                std::uint64_t seed = 0);

/// Trigonometric interpolant of a gridded distribution at off-grid points;
/// zero outside the velocity box.
class PhaseInterpolant {
 public:
  explicit PhaseInterpolant(const DistributionField& f);
  double operator()(std::span<const double> x, std::span<const double> v) const;

 private:
  GridSpec grid_;
  std::vector<std::complex<double>> coefficients_;
};

struct PushContext {
  double dt = 0.01;
  double nu = 0.0;
  PushScheme scheme = PushScheme::StratonovichHeun;
  bool exact_friction = false;
  bool internal_noise = true;
  bool wrap = true;
  const TrigField* accel = nullptr;         // frozen drift, null = 0
  const BasisSet* basis = nullptr;          // external noise basis
  std::span<const double> amplitudes;       // sigma_k Delta W_k for this step
  const NoisePath* internal = nullptr;      // internal Brownian path
  std::uint64_t step = 0;
  int replica = 0;
  // d = 3 magnetic increment sum sigma^B e_k(x) Delta W^B (optional)
  std::span<const double> magnetic_amplitudes;
  double speed_of_light = 1.0;
  bool exact_rotation = true;
};

/// One step of the stochastic characteristics for every particle.
void push(ParticleEnsemble& ens, const PushContext& ctx);

/// Cloud-in-cell deposition onto the spatial grid divided by the cell
/// volume. Particles are reduced in fixed chunks, so the result does not
/// depend on the thread count.
std::vector<double> deposit_density(const ParticleEnsemble& ens, const GridSpec& g);

/// Drift field active during coarse step n (null = zero).
using DriftSchedule = std::function<const TrigField*(std::uint64_t)>;

struct FeynmanKacConfig {
  int replicas = 32;
  double nu = 0.0;
  std::uint64_t internal_seed = 1;
  PushScheme scheme = PushScheme::StratonovichHeun;
};

struct FeynmanKacResult {
  DistributionField field;
  Warnings warnings;
};

/// Mild solution at t = steps * noise.path.dt() by backward characteristics
/// from every grid node, integrated on the fine (stride 1) steps of the same
/// Brownian path, averaged over internal replicas. With friction the pullback
/// is weighted by the Jacobian e^{d nu t}.
FeynmanKacResult feynman_kac_density(const DistributionField& f0, const NoiseSource* noise,
                                     std::uint64_t steps, double dt, const FeynmanKacConfig& config,
                                     const DriftSchedule& drift = {});

struct FlowDiagnostics {
  double initial_volume = 0.0;
  double final_volume = 0.0;
  double ratio = 1.0;
  double ci_half_width = 0.0;  // zero for the polygon estimate
  bool self_intersection = false;
  bool monte_carlo = false;
  double mean_v2 = 0.0;
  double max_v2 = 0.0;
};

struct FlowCheckConfig {
  std::size_t boundary_samples = 10000;
  std::size_t mc_samples = 20000;
  PushScheme scheme = PushScheme::StratonovichHeun;
  std::uint64_t mc_seed = 7;
};

/// Advects the boundary of the box [x0,x1] x [v0,v1] (d = 1) for `steps`
/// steps of the noise path with frozen drift and nu = 0, and compares the
/// enclosed area with the initial one.
FlowDiagnostics flow_volume_check(std::span<const double> box, const NoiseSource* noise,
                                  std::uint64_t steps, double dt, const FlowCheckConfig& config,
                                  const DriftSchedule& drift = {});

/// Shoelace area of a closed polygon given by interleaved (x, v) vertices.
double polygon_area(std::span<const double> xy);
bool polygon_self_intersects(std::span<const double> xy);

/// Self-consistent particle-in-cell loop (deposit, Poisson, push).
struct PicResult {
  ParticleEnsemble ensemble;
  std::vector<double> field_energy;  // per step
};

PicResult run_pic(ParticleEnsemble ens, const GridSpec& g, const NoiseSource* noise, std::uint64_t steps,
                  double dt, double nu, PushScheme scheme, double field_sign = 1.0);

void save_particles(const ParticleEnsemble& ens, const std::string& json_path);
ParticleEnsemble load_particles(const std::string& json_path);

}  // namespace svpfp

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "svpfp/rng.hpp"

namespace svpfp {

struct ModeIndex {
  std::vector<int> ell;
  int polarization = 1;

  bool operator==(const ModeIndex&) const = default;
};

enum class ColoringLaw { Power, Gaussian, Custom, None };

struct ColoringEntry {
  ModeIndex mode;
  double sigma = 0.0;
};

struct NoiseSpec {
  int dim = 1;
  int max_wavenumber = 1;
  ColoringLaw law = ColoringLaw::Power;
  double power = 6.0;
  double gaussian_lambda = 1.0;
  std::vector<ColoringEntry> custom_table;
  int regularity_target = 4;
  // Overall amplitude multiplying every sigma_k.
  double amplitude = 1.0;

  bool include_magnetic = false;
  // sigma^(B;i)_l = magnetic_scale[i-1] * sigma_(l,i) for the two transverse
  // polarizations; requires dim == 3.
  std::array<double, 2> magnetic_scale{1.0, 1.0};
  double speed_of_light = 1.0;
};

struct BasisMode {
  ModeIndex index;
  bool positive = true;  // ell in Z^d_+ (sine) or Z^d_- (cosine)
  std::array<double, 3> gamma{0.0, 0.0, 0.0};
  double abs_k = 0.0;    // Euclidean |ell|
  int shell = 0;         // |ell|_inf
  std::uint64_t stream_id = 0;
};

class BasisSet {
 public:
  BasisSet(int dim, int max_wavenumber, std::vector<BasisMode> modes);

  int dim() const { return dim_; }
  int max_wavenumber() const { return max_wavenumber_; }
  double normalization() const { return c_d_; }
  std::size_t size() const { return modes_.size(); }
  const std::vector<BasisMode>& modes() const { return modes_; }
  const BasisMode& mode(std::size_t i) const { return modes_[i]; }

  /// Scalar factor c_d sin(l.x) or c_d cos(l.x); e_k(x) = factor * gamma.
  double scalar_part(std::size_t i, std::span<const double> x) const;
  /// e_k(x) written into out[0..d).
  void evaluate(std::size_t i, std::span<const double> x, std::span<double> out) const;
  /// out = sum_k amplitude[k] e_k(x).
  void combine(std::span<const double> amplitudes, std::span<const double> x,
               std::span<double> out) const;
  std::optional<std::size_t> find(const ModeIndex& index) const;

 private:
  int dim_;
  int max_wavenumber_;
  double c_d_;
  std::vector<BasisMode> modes_;
};

/// Every l with 0 < |l|_inf <= K, with d polarizations each, in lexicographic
/// order of l then polarization.
BasisSet build_basis(const NoiseSpec& spec);

/// Membership of a nonzero lattice vector in Z^d_+.
bool in_positive_half(std::span<const int> ell);

/// Polarization vector gamma_l^i (first d entries meaningful).
std::array<double, 3> polarization_vector(std::span<const int> ell, int polarization);

struct ColoringTable {
  std::vector<double> sigma;           // per basis mode
  std::vector<double> magnetic_sigma;  // per basis mode, empty without magnetic noise
  int regularity_target = 0;
  double weighted_sum = 0.0;           // sum |k|^{2 sigma'} sigma_k^2
  std::vector<double> shell_sums;      // shell s = |l|_inf at index s-1
  bool tail_decreasing = false;        // every consecutive shell ratio < 1
};

ColoringTable coloring(const NoiseSpec& spec, const BasisSet& basis);
ColoringTable coloring(const NoiseSpec& spec);

void write_coloring_csv(const std::string& path, const BasisSet& basis, const ColoringTable& table);
std::vector<ColoringEntry> read_coloring_csv(const std::string& path, int dim);

/// Brownian increments on a fine base grid of width base_dt. A path with
/// stride s reports increments over s consecutive fine steps, so paths that
/// differ only in stride are coarsenings of one Brownian motion.
struct NoisePath {
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;
  double base_dt = 1e-2;
  std::uint64_t stride = 1;
  std::uint64_t horizon = 0;  // number of steps at this stride; 0 = unbounded

  double dt() const { return base_dt * static_cast<double>(stride); }
  rng::Key key() const { return rng::make_key(seed, realization); }
  NoisePath with_stride(std::uint64_t new_stride) const;

  /// Delta W over step `step` of the mode with the given stream id.
  double increment(std::uint64_t step, std::uint64_t stream_id,
                   rng::Stream stream = rng::kExternal) const;
};

/// Basis, coloring and path bundled for the solvers.
struct NoiseSource {
  NoiseSpec spec;
  BasisSet basis;
  ColoringTable table;
  NoisePath path;

  NoiseSource(const NoiseSpec& s, const NoisePath& p);

  /// False when every coefficient vanishes.
  bool active() const;
  std::vector<double> amplitudes(std::uint64_t step) const;
  /// Delta W_n on the [n]^d grid, node-major; zeros when inactive.
  std::vector<double> field(std::uint64_t step, std::size_t n) const;
};

/// sigma_k * Delta W^(k)_n for every basis mode.
std::vector<double> mode_amplitudes(const NoisePath& path, std::uint64_t step,
                                    const BasisSet& basis, const ColoringTable& table,
                                    rng::Stream stream = rng::kExternal);

/// Delta W_n(x) on the [n]^grid_dim spatial grid, node-major with d
/// components per node.
std::vector<double> sample_field_increment(const NoisePath& path, std::uint64_t step,
                                           const BasisSet& basis, const ColoringTable& table,
                                           int grid_dim, std::size_t n);

/// Same as above from precomputed amplitudes.
std::vector<double> field_from_amplitudes(std::span<const double> amplitudes,
                                          const BasisSet& basis, int grid_dim, std::size_t n);

/// Magnetic increment Delta W_B(x) (d=3 only).
std::vector<double> sample_magnetic_increment(const NoisePath& path, std::uint64_t step,
                                              const BasisSet& basis, const ColoringTable& table,
                                              std::size_t n);

/// dW_E + v x dW_B / c. Requires three components.
std::array<double, 3> lorentz_noise_term(std::span<const double> v, std::span<const double> dw_e,
                                         std::span<const double> dw_b, double c);

/// Exact rotation of v generated by v x dW_B / c (preserves |v|).
std::array<double, 3> magnetic_rotation(std::span<const double> v, std::span<const double> dw_b,
                                        double c);

}  // namespace svpfp

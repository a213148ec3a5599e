#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/spectral.hpp"

namespace svpfp {

/// Phase-space grid on [0, 2pi)^d x [-V_max, V_max)^d, both periodic. Storage
/// is row-major with the d spatial axes first, so a flat index is
/// spatial_index * velocity_size() + velocity_index.
struct GridSpec {
  int dim = 1;
  std::size_t nx = 32;
  std::size_t nv = 64;
  double vmax = 8.0;
  double dealias_fraction = 2.0 / 3.0;

  void validate() const;
  spectral::Shape shape() const;
  spectral::Shape spatial_shape() const;
  std::size_t spatial_size() const;
  std::size_t velocity_size() const;
  std::size_t size() const { return spatial_size() * velocity_size(); }
  double dx() const { return kTwoPi / static_cast<double>(nx); }
  double dv() const { return 2.0 * vmax / static_cast<double>(nv); }
  double x(std::size_t i) const { return dx() * static_cast<double>(i); }
  double v(std::size_t j) const { return -vmax + dv() * static_cast<double>(j); }
  double spatial_cell() const;
  double velocity_cell() const;
  /// Angular wavenumber of half-spectrum index j on axis (x axes: integers,
  /// v axes: pi j / V_max).
  double wavenumber(std::size_t axis, long j) const;
  /// Spatial coordinates of the spatial node and velocity of the velocity node.
  void coordinates(std::size_t spatial_index, std::span<double> x_out) const;
  void velocity(std::size_t velocity_index, std::span<double> v_out) const;

  bool operator==(const GridSpec&) const = default;
};

struct DistributionField {
  GridSpec grid;
  std::vector<double> values;
  double time = 0.0;

  DistributionField() = default;
  explicit DistributionField(const GridSpec& g);

  /// Samples fn(x, v) at every node.
  static DistributionField from_function(
      const GridSpec& g,
      const std::function<double(std::span<const double>, std::span<const double>)>& fn);

  double& at(std::size_t spatial_index, std::size_t velocity_index) {
    return values[spatial_index * grid.velocity_size() + velocity_index];
  }
  double at(std::size_t spatial_index, std::size_t velocity_index) const {
    return values[spatial_index * grid.velocity_size() + velocity_index];
  }
};

struct WeightedNormSpec {
  int sigma = 0;
  double m = 0.0;
};

struct CutoffSpec {
  double R = 1.0;
};

void check_finite(std::span<const double> values, const char* what);

/// Spectral derivative of order orders[a] along every axis a (2d entries).
std::vector<double> derivative(const DistributionField& f, std::span<const int> orders);

/// Calls fn(orders, field) for every multi-index with total order in
/// [0, max_order], each derivative field produced once.
void for_each_derivative(
    const DistributionField& f, int max_order,
    const std::function<void(std::span<const int>, std::span<const double>)>& fn);

/// <v>^m at every velocity node.
std::vector<double> velocity_weight(const GridSpec& g, double m);

/// Trapezoid integral of |g|^2 <v>^m over the box.
double weighted_l2_squared(const GridSpec& g, std::span<const double> values, double m);
/// Trapezoid integral of g h <v>^m over the box.
double weighted_inner(const GridSpec& g, std::span<const double> a, std::span<const double> b, double m);

double weighted_sobolev_norm(const DistributionField& f, const WeightedNormSpec& spec);
double weighted_sobolev_norm_squared(const DistributionField& f, const WeightedNormSpec& spec);

/// rho(x) = integral of f over v.
std::vector<double> density(const DistributionField& f);
double total_mass(const DistributionField& f);
double l2_norm(const DistributionField& f);
double lp_norm(const DistributionField& f, double p);

/// Mass of f at nodes with |v| >= V_max / 2.
double velocity_tail_mass(const DistributionField& f);

/// Fourier transform of the unit-mass radial bump exp(-1/(1-r^2)) on the unit
/// ball in R^dim, at frequency magnitude xi.
double bump_transform(int dim, double xi);

/// Multiplies the spatial spectrum of every velocity slice by mult(k).
void apply_spatial_multiplier(DistributionField& f,
                              const std::function<double(std::span<const long>)>& mult);

/// Spatial field version of the above ([nx]^d array).
std::vector<double> apply_spatial_multiplier(const GridSpec& g, std::span<const double> field,
                                             const std::function<double(std::span<const long>)>& mult);

DistributionField mollify(const DistributionField& f, double epsilon);
std::vector<double> mollify_spatial(const GridSpec& g, std::span<const double> field, double epsilon);

/// Smooth nonincreasing profile: 1 on [0,1], 0 on [2,inf), |theta'| <= 2.
double theta_profile(double x);
double theta_profile_derivative(double x);
double cutoff_theta(double x, const CutoffSpec& spec);

struct RegularizeResult {
  DistributionField field;
  Warnings warnings;
};

RegularizeResult regularize_initial(const DistributionField& f, int n);

/// Spectral-coefficient L^2 norm squared (Parseval).
double spectral_l2_squared(const DistributionField& f);

void save_snapshot(const DistributionField& f, const std::string& json_path);
DistributionField load_snapshot(const std::string& json_path);

}  // namespace svpfp

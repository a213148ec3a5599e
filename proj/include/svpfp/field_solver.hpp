#pragma once

#include <complex>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/phase_space.hpp"

namespace svpfp {

/// K^(k) evaluated at a signed integer wave vector (never called with k = 0).
using KernelMultiplier = std::function<double(std::span<const long>)>;

enum class KernelKind { Coulomb, Custom };

struct FieldSolution {
  std::vector<double> E;  // node-major, dim components per spatial node
  double rho_bar = 0.0;
  KernelKind kernel = KernelKind::Coulomb;
  Warnings warnings;
};

KernelMultiplier coulomb_kernel();

/// Multiplier table keyed by wave vector; lookups fall back to -k.
struct KernelTable {
  int dim = 1;
  std::map<std::vector<long>, double> entries;
};

KernelMultiplier table_kernel(const KernelTable& table);
KernelTable read_kernel_csv(const std::string& path, int dim);
void write_kernel_csv(const std::string& path, const GridSpec& g, const KernelMultiplier& kernel);

FieldSolution solve_poisson(const GridSpec& g, std::span<const double> rho);
FieldSolution solve_kernel(const GridSpec& g, std::span<const double> rho, const KernelMultiplier& kernel,
                           KernelKind kind = KernelKind::Custom);

/// Zeroes every Fourier mode with some |k_a| > dealias_fraction * nx / 2 in
/// each component of a node-major vector field.
void dealias(const GridSpec& g, std::vector<double>& vector_field);

/// Multiplies each component's spectrum by mult(k).
std::vector<double> filter_vector_field(const GridSpec& g, std::span<const double> vector_field,
                                        const std::function<double(std::span<const long>)>& mult);

/// 1/2 integral |E|^2 dx.
double field_energy(const GridSpec& g, std::span<const double> E);

/// Trigonometric interpolant of a node-major vector field on the torus.
class TrigField {
 public:
  TrigField(const GridSpec& g, std::span<const double> vector_field);
  TrigField(int dim, std::size_t nx, std::span<const double> vector_field, int components);

  int components() const { return components_; }
  void evaluate(std::span<const double> x, std::span<double> out) const;

 private:
  int dim_;
  std::size_t n_;
  int components_;
  std::vector<std::vector<std::complex<double>>> coefficients_;  // per component, flat spectral index
};

}  // namespace svpfp

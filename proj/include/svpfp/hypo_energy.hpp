#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svpfp/common.hpp"
#include "svpfp/phase_space.hpp"

namespace svpfp {

struct EnergyCoefficients {
  double epsilon = 0.5;
  double theta = 0.0;
  double m2 = 1.5;
  double m3 = 1.75;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  double slack = 0.0;  // rhs - lhs (or the smallest gap for the ordering)
};

/// The six admissibility inequalities, evaluated directly.
std::vector<InequalityCheck> check_constants(const EnergyCoefficients& k);
bool admissible(const EnergyCoefficients& k);

/// m2 = 1.5, m3 = 1.75, theta = eps^8 (moved down by ulps if rounding breaks
/// an inequality that holds with equality).
EnergyCoefficients choose_constants(double epsilon);

/// Pieces of E_1 for one field.
struct E1Terms {
  double l2 = 0.0;     // ||g||^2_m
  double grad_v = 0.0; // ||grad_v g||^2_m
  double cross = 0.0;  // <grad_v g, grad_x g>_m
  double grad_x = 0.0; // ||grad_x g||^2_m
};

double combine_e1(double t, const EnergyCoefficients& k, const E1Terms& terms);

E1Terms e1_terms(const DistributionField& f, double m);
double energy_E1(double t, const DistributionField& f, const EnergyCoefficients& k, double m);

struct EnergyComponent {
  int p = 0;  // x derivatives
  int q = 0;  // v derivatives
  E1Terms terms;
  double value = 0.0;
};

struct EnergyBreakdown {
  double total = 0.0;
  std::vector<EnergyComponent> components;  // q = 0..sigma
};

/// Sum over q of E_1[t, grad_x^{sigma-q} grad_v^q f], derivatives taken as
/// full tensors.
EnergyBreakdown energy_Esigma(double t, const DistributionField& f, const EnergyCoefficients& k, int sigma, double m);

double dissipation_Dsigma(double t, const DistributionField& f, const EnergyCoefficients& k, int sigma, double m);

/// ||f||^2 + t ||grad_v f||^2_{H^sigma_m} + t^3 ||grad_x f||^2_{H^sigma_m}
/// with the coefficients a and c, the b-free comparison sum.
double bfree_sum(double t, const EnergyBreakdown& e, const EnergyCoefficients& k);

/// ||grad_x^order f||_m (velocity = false) or ||grad_v^order f||_m as full
/// tensors.
double gradient_tensor_norm(const DistributionField& f, bool velocity, int order, double m);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::vector<double> residuals;
};

/// Ordinary least squares of log(norm) against log(t).
RateFit regularization_rate_fit(const std::vector<double>& times, const std::vector<double>& norms);

/// Exact solution of the linear kinetic Fokker-Planck equation (no field, no
/// noise) in d = 1 for data A(x) M(v), M the unit Maxwellian, by Fourier
/// characteristics. Norms are unweighted (m = 0).
class LinearKfpPropagator {
 public:
  /// power[k] = |A_k|^2 for k = 0..K (the -k mode mirrors k).
  LinearKfpPropagator(double nu, std::vector<double> power);

  /// Rough random-phase data with |A_k|^2 = amplitude^2 k^{-1}, 1 <= k <= 2^log2_kmax.
  static LinearKfpPropagator rough(double nu, int log2_kmax, double amplitude);

  double nu() const { return nu_; }
  const std::vector<double>& power() const { return power_; }

  /// Integral of (ik)^px (i eta)^qv ... reduced to sum_k k^px |f_k|^2 E[eta^qv]
  /// with px + qv even; <d_x^p1 d_v^q1 f, d_x^p2 d_v^q2 f> = moment(p1+p2, q1+q2).
  double moment(double t, int px, int qv) const;

  double l2_squared(double t) const { return moment(t, 0, 0); }
  /// ||d_x^{p} d_v^{q} f||^2
  double derivative_squared(double t, int p, int q) const { return moment(t, 2 * p, 2 * q); }

  EnergyBreakdown energy(double t, const EnergyCoefficients& k, int sigma) const;
  double dissipation(double t, const EnergyCoefficients& k, int sigma) const;
  double sobolev_squared(double t, int sigma) const;

  /// Random-phase realization on a grid of nx points (modes k < nx / 2),
  /// times the Maxwellian.
  DistributionField sample(const GridSpec& g, std::uint64_t seed) const;

 private:
  double nu_;
  std::vector<double> power_;
};

struct EnergyTraceRow {
  double t = 0.0;
  EnergyBreakdown energy;
  double dissipation = 0.0;
  double grad_x_norm = 0.0;  // ||grad_x^{sigma+1} f||
  double grad_v_norm = 0.0;  // ||grad_v^{sigma+1} f||
};

std::vector<std::string> energy_trace_header(int sigma);
void write_energy_trace(const std::string& path, int sigma, const std::vector<EnergyTraceRow>& rows);

}  // namespace svpfp

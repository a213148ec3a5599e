#include "svpfp/hypo_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svpfp/io.hpp"
#include "svpfp/rng.hpp"

namespace svpfp {

std::vector<InequalityCheck> check_constants(const EnergyCoefficients& k) {
  const double e = k.epsilon;
  auto le = [](std::string name, double lhs, double rhs) {
    return InequalityCheck{std::move(name), lhs, rhs, lhs <= rhs, rhs - lhs};
  };
  std::vector<InequalityCheck> out;
  out.push_back(le("a/eps <= 1", k.a / e, 1.0));
  out.push_back(le("b/eps^2 <= a/eps", k.b / (e * e), k.a / e));
  out.push_back(le("c/eps^3 <= b/eps^2", k.c / (e * e * e), k.b / (e * e)));
  out.push_back(le("a <= eps sqrt(b)", k.a, e * std::sqrt(k.b)));
  out.push_back(le("b <= eps sqrt(ac)", k.b, e * std::sqrt(k.a * k.c)));
  InequalityCheck order{"0 < c < b < a", 0.0, 0.0, 0.0 < k.c && k.c < k.b && k.b < k.a,
                        std::min({k.c, k.b - k.c, k.a - k.b})};
  out.push_back(order);
  return out;
}

bool admissible(const EnergyCoefficients& k) {
  const auto checks = check_constants(k);
  return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.holds; });
}

EnergyCoefficients choose_constants(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorKind::Domain, "epsilon must lie in (0, 1)");
  EnergyCoefficients k;
  k.epsilon = epsilon;
  k.theta = std::pow(epsilon, 8.0);
  for (int i = 0; i < 256; ++i) {
    k.a = k.theta;
    k.b = std::pow(k.theta, k.m2);
    k.c = std::pow(k.theta, k.m3);
    if (admissible(k)) return k;
    k.theta = std::nextafter(k.theta, 0.0);
  }
  fail(ErrorKind::NumericAbort, "no admissible theta near eps^8");
}

double combine_e1(double t, const EnergyCoefficients& k, const E1Terms& s) {
  return s.l2 + k.a * t * s.grad_v + k.b * t * t * s.cross + k.c * t * t * t * s.grad_x;
}

namespace {

// Ordered-tuple multiplicity of a multi-index: n! / prod(alpha_i!).
double multiplicity(std::span<const int> alpha) {
  int n = 0;
  double denom = 1.0;
  for (int a : alpha) {
    n += a;
    denom *= std::tgamma(a + 1.0);
  }
  return std::tgamma(n + 1.0) / denom;
}

// Every multi-index of total order n in dim components.
void multi_indices(int dim, int n, std::vector<std::vector<int>>& out, std::vector<int>& cur, int axis = 0) {
  if (axis == dim - 1) {
    cur[static_cast<std::size_t>(axis)] = n;
    out.push_back(cur);
    return;
  }
  for (int k = n; k >= 0; --k) {
    cur[static_cast<std::size_t>(axis)] = k;
    multi_indices(dim, n - k, out, cur, axis + 1);
  }
}

std::vector<std::vector<int>> multi_indices(int dim, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(dim), 0);
  multi_indices(dim, n, out, cur);
  return out;
}

// Derivative of f with base orders plus extra unit orders on the listed axes.
std::vector<double> deriv(const DistributionField& f, const std::vector<int>& base, std::initializer_list<std::size_t> extra) {
  std::vector<int> orders = base;
  for (auto a : extra) orders[a] += 1;
  if (std::all_of(orders.begin(), orders.end(), [](int o) { return o == 0; })) return f.values;
  return derivative(f, orders);
}

struct Piece {
  std::vector<int> orders;  // 2d entries
  double weight = 1.0;
  int p = 0;
  int q = 0;
};

std::vector<Piece> mixed_pieces(int dim, int sigma) {
  std::vector<Piece> out;
  const auto d = static_cast<std::size_t>(dim);
  for (int q = 0; q <= sigma; ++q) {
    for (const auto& ax : multi_indices(dim, sigma - q))
      for (const auto& av : multi_indices(dim, q)) {
        Piece pc;
        pc.orders.assign(2 * d, 0);
        for (std::size_t i = 0; i < d; ++i) {
          pc.orders[i] = ax[i];
          pc.orders[d + i] = av[i];
        }
        pc.weight = multiplicity(ax) * multiplicity(av);
        pc.p = sigma - q;
        pc.q = q;
        out.push_back(std::move(pc));
      }
  }
  return out;
}

E1Terms terms_for(const DistributionField& f, const std::vector<int>& orders, double m) {
  const auto& g = f.grid;
  const auto d = static_cast<std::size_t>(g.dim);
  E1Terms s;
  const auto base = deriv(f, orders, {});
  s.l2 = weighted_l2_squared(g, base, m);
  for (std::size_t i = 0; i < d; ++i) {
    const auto dv = deriv(f, orders, {d + i});
    const auto dx = deriv(f, orders, {i});
    s.grad_v += weighted_l2_squared(g, dv, m);
    s.grad_x += weighted_l2_squared(g, dx, m);
    s.cross += weighted_inner(g, dv, dx, m);
  }
  return s;
}

void check_sigma(const DistributionField& f, int sigma) {
  if (sigma < 0) fail(ErrorKind::Domain, "sigma must be nonnegative");
  if (static_cast<std::size_t>(sigma + 2) > std::min(f.grid.nx, f.grid.nv) / 4)
    fail(ErrorKind::Domain, "sigma too large for the grid resolution");
}

}  // namespace

E1Terms e1_terms(const DistributionField& f, double m) {
  return terms_for(f, std::vector<int>(2 * static_cast<std::size_t>(f.grid.dim), 0), m);
}

double energy_E1(double t, const DistributionField& f, const EnergyCoefficients& k, double m) {
  if (t < 0.0) fail(ErrorKind::Domain, "time must be nonnegative");
  return combine_e1(t, k, e1_terms(f, m));
}

EnergyBreakdown energy_Esigma(double t, const DistributionField& f, const EnergyCoefficients& k, int sigma, double m) {
  if (t < 0.0) fail(ErrorKind::Domain, "time must be nonnegative");
  check_sigma(f, sigma);
  EnergyBreakdown out;
  for (int q = 0; q <= sigma; ++q) out.components.push_back({sigma - q, q, {}, 0.0});
  for (const auto& pc : mixed_pieces(f.grid.dim, sigma)) {
    const E1Terms s = terms_for(f, pc.orders, m);
    auto& c = out.components[static_cast<std::size_t>(pc.q)];
    c.terms.l2 += pc.weight * s.l2;
    c.terms.grad_v += pc.weight * s.grad_v;
    c.terms.cross += pc.weight * s.cross;
    c.terms.grad_x += pc.weight * s.grad_x;
  }
  for (auto& c : out.components) {
    c.value = combine_e1(t, k, c.terms);
    out.total += c.value;
  }
  return out;
}

double dissipation_Dsigma(double t, const DistributionField& f, const EnergyCoefficients& k, int sigma, double m) {
  if (t < 0.0) fail(ErrorKind::Domain, "time must be nonnegative");
  check_sigma(f, sigma);
  const auto& g = f.grid;
  const auto d = static_cast<std::size_t>(g.dim);
  double total = 0.0;
  for (const auto& pc : mixed_pieces(g.dim, sigma)) {
    double gv = 0.0, gvv = 0.0, gx = 0.0, gvx = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      gv += weighted_l2_squared(g, deriv(f, pc.orders, {d + i}), m);
      gx += weighted_l2_squared(g, deriv(f, pc.orders, {i}), m);
      for (std::size_t j = 0; j < d; ++j) {
        gvv += weighted_l2_squared(g, deriv(f, pc.orders, {d + i, d + j}), m);
        gvx += weighted_l2_squared(g, deriv(f, pc.orders, {d + i, j}), m);
      }
    }
    total += pc.weight * (gv + k.a * t * gvv + 0.5 * k.b * t * t * gx + k.c * t * t * t * gvx);
  }
  return total;
}

double gradient_tensor_norm(const DistributionField& f, bool velocity, int order, double m) {
  const auto d = static_cast<std::size_t>(f.grid.dim);
  double total = 0.0;
  for (const auto& alpha : multi_indices(f.grid.dim, order)) {
    std::vector<int> orders(2 * d, 0);
    for (std::size_t i = 0; i < d; ++i) orders[(velocity ? d : 0) + i] = alpha[i];
    total += multiplicity(alpha) * weighted_l2_squared(f.grid, deriv(f, orders, {}), m);
  }
  return std::sqrt(total);
}

double bfree_sum(double t, const EnergyBreakdown& e, const EnergyCoefficients& k) {
  double s = 0.0;
  for (const auto& c : e.components) s += c.terms.l2 + k.a * t * c.terms.grad_v + k.c * t * t * t * c.terms.grad_x;
  return s;
}

RateFit regularization_rate_fit(const std::vector<double>& times, const std::vector<double>& norms) {
  if (times.size() != norms.size()) fail(ErrorKind::Shape, "times and norms differ in length");
  if (times.size() < 8) fail(ErrorKind::Domain, "rate fit needs at least 8 sample times");
  double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !(norms[i] > 0.0)) fail(ErrorKind::LogDomain, "rate fit needs positive times and norms");
    tmin = std::min(tmin, times[i]);
    tmax = std::max(tmax, times[i]);
  }
  if (tmax < 10.0 * tmin * (1.0 - 1e-12)) fail(ErrorKind::Domain, "rate fit needs samples spanning a decade");
  const double n = static_cast<double>(times.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    mx += std::log(times[i]);
    my += std::log(norms[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double x = std::log(times[i]) - mx;
    sxx += x * x;
    sxy += x * (std::log(norms[i]) - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double r = std::log(norms[i]) - (fit.intercept + fit.slope * std::log(times[i]));
    fit.residuals.push_back(r);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

namespace {

// 3 - 4 e^{-s} + e^{-2s} - 2s without cancellation.
double hypo_exponent(double s) {
  if (s >= 1.0) return 3.0 - 4.0 * std::exp(-s) + std::exp(-2.0 * s) - 2.0 * s;
  double sum = 0.0;
  double term = s * s / 2.0;  // s^n / n! at n = 2
  for (int n = 3; n < 40; ++n) {
    term *= s / n;
    const double c = (n % 2 ? -1.0 : 1.0) * (std::ldexp(1.0, n) - 4.0);
    sum += c * term;
  }
  return sum;
}

// E[eta^n] for eta ~ N(mu, 1/2).
double gaussian_moment(double mu, int n) {
  double sum = 0.0;
  double binom = 1.0;  // C(n, j)
  double dfact = 1.0;  // (j-1)!!
  for (int j = 0; j <= n; ++j) {
    if (j > 0) binom *= static_cast<double>(n - j + 1) / j;
    if (j % 2 == 0) {
      if (j >= 2) dfact *= j - 1;
      sum += binom * std::pow(mu, n - j) * dfact * std::pow(0.5, j / 2);
    }
  }
  return sum;
}

}  // namespace

LinearKfpPropagator::LinearKfpPropagator(double nu, std::vector<double> power) : nu_(nu), power_(std::move(power)) {
  if (!(nu > 0.0)) fail(ErrorKind::Domain, "the propagator needs nu > 0");
  if (power_.empty()) fail(ErrorKind::Shape, "empty spectrum");
  for (double p : power_)
    if (p < 0.0) fail(ErrorKind::Domain, "spectral power must be nonnegative");
}

LinearKfpPropagator LinearKfpPropagator::rough(double nu, int log2_kmax, double amplitude) {
  if (log2_kmax < 1 || log2_kmax > 24) fail(ErrorKind::Config, "log2_kmax must lie in [1, 24]");
  const std::size_t K = std::size_t{1} << log2_kmax;
  std::vector<double> power(K + 1, 0.0);
  power[0] = 1.0;
  for (std::size_t k = 1; k <= K; ++k) power[k] = amplitude * amplitude / static_cast<double>(k);
  return LinearKfpPropagator(nu, std::move(power));
}

double LinearKfpPropagator::moment(double t, int px, int qv) const {
  if (t < 0.0) fail(ErrorKind::Domain, "time must be nonnegative");
  if ((px + qv) % 2 != 0) return 0.0;
  const double s = nu_ * t;
  const double g = hypo_exponent(s);
  const double em = std::expm1(-s);
  const double root_pi = std::sqrt(kPi);
  double sum = px == 0 ? power_[0] * gaussian_moment(0.0, qv) : 0.0;
  for (std::size_t k = 1; k < power_.size(); ++k) {
    if (power_[k] == 0.0) continue;
    const double kn = static_cast<double>(k) / nu_;
    const double damp = std::exp(g * kn * kn);
    if (damp == 0.0) break;
    sum += 2.0 * std::pow(static_cast<double>(k), px) * power_[k] * damp * gaussian_moment(kn * em, qv);
  }
  return root_pi * sum;
}

EnergyBreakdown LinearKfpPropagator::energy(double t, const EnergyCoefficients& k, int sigma) const {
  EnergyBreakdown out;
  for (int q = 0; q <= sigma; ++q) {
    const int p = sigma - q;
    EnergyComponent c{p, q, {}, 0.0};
    c.terms.l2 = moment(t, 2 * p, 2 * q);
    c.terms.grad_v = moment(t, 2 * p, 2 * q + 2);
    c.terms.cross = moment(t, 2 * p + 1, 2 * q + 1);
    c.terms.grad_x = moment(t, 2 * p + 2, 2 * q);
    c.value = combine_e1(t, k, c.terms);
    out.total += c.value;
    out.components.push_back(c);
  }
  return out;
}

double LinearKfpPropagator::dissipation(double t, const EnergyCoefficients& k, int sigma) const {
  double total = 0.0;
  for (int q = 0; q <= sigma; ++q) {
    const int p = sigma - q;
    total += moment(t, 2 * p, 2 * q + 2) + k.a * t * moment(t, 2 * p, 2 * q + 4) +
             0.5 * k.b * t * t * moment(t, 2 * p + 2, 2 * q) + k.c * t * t * t * moment(t, 2 * p + 2, 2 * q + 2);
  }
  return total;
}

double LinearKfpPropagator::sobolev_squared(double t, int sigma) const {
  double total = 0.0;
  for (int n = 0; n <= sigma; ++n)
    for (int q = 0; q <= n; ++q) total += moment(t, 2 * (n - q), 2 * q);
  return total;
}

DistributionField LinearKfpPropagator::sample(const GridSpec& g, std::uint64_t seed) const {
  if (g.dim != 1) fail(ErrorKind::UnsupportedDimension, "the propagator runs in d = 1");
  const rng::Key key = rng::make_key(seed, 0);
  const std::size_t kmax = std::min(power_.size() - 1, g.nx / 2 - 1);
  std::vector<double> A(g.nx, std::sqrt(power_[0]));
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double phase = kTwoPi * rng::uniform(key, rng::kSampling, k, 0);
    const double amp = 2.0 * std::sqrt(power_[k]);
    for (std::size_t i = 0; i < g.nx; ++i) A[i] += amp * std::cos(static_cast<double>(k) * g.x(i) + phase);
  }
  DistributionField f(g);
  const std::size_t nv = g.velocity_size();
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      const double v = g.v(j);
      f.at(i, j) = A[i] * std::exp(-0.5 * v * v) / std::sqrt(kTwoPi);
    }
  return f;
}

std::vector<std::string> energy_trace_header(int sigma) {
  std::vector<std::string> h{"t", "E_sigma", "D_sigma"};
  for (int q = 0; q <= sigma; ++q) h.push_back("E_p" + std::to_string(sigma - q) + "_q" + std::to_string(q));
  h.push_back("grad_x_norm");
  h.push_back("grad_v_norm");
  return h;
}

void write_energy_trace(const std::string& path, int sigma, const std::vector<EnergyTraceRow>& rows) {
  io::CsvWriter out(path, energy_trace_header(sigma));
  for (const auto& r : rows) {
    std::vector<double> row{r.t, r.energy.total, r.dissipation};
    for (const auto& c : r.energy.components) row.push_back(c.value);
    row.push_back(r.grad_x_norm);
    row.push_back(r.grad_v_norm);
    out.row(row);
  }
}

}  // namespace svpfp

#include "svpfp/eulerian_solver.hpp"

#include <algorithm>
#include <cmath>

#include "svpfp/io.hpp"
#include "svpfp/spectral.hpp"

namespace svpfp {

namespace {

using spectral::Complex;

// v_a for every velocity index, per velocity axis.
std::vector<std::vector<double>> velocity_components(const GridSpec& g) {
  const auto d = static_cast<std::size_t>(g.dim);
  std::vector<std::vector<double>> comps(d, std::vector<double>(g.velocity_size()));
  std::vector<double> v(d);
  for (std::size_t j = 0; j < g.velocity_size(); ++j) {
    g.velocity(j, v);
    for (std::size_t a = 0; a < d; ++a) comps[a][j] = v[a];
  }
  return comps;
}

double min_value(std::span<const double> values) {
  double m = values.empty() ? 0.0 : values[0];
  for (double v : values) m = std::min(m, v);
  return m;
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

// Periodic trigonometric interpolation weights S_N(u) for an even number of
// nodes on a period L (Nyquist mode split symmetrically).
double dirichlet_weight(std::size_t n, double u, double period) {
  const double arg = kPi * u / period;
  const double s = std::sin(arg);
  if (std::abs(s) < 1e-14) {
    const double turns = std::round(u / period);
    return (static_cast<long long>(turns) % 2 == 0 || n % 2 == 0) ? 1.0 : -1.0;
  }
  return std::sin(static_cast<double>(n) * arg) * std::cos(arg) / (static_cast<double>(n) * s);
}

void dilate_in_place(DistributionField& f, double nu, double dt) {
  const auto& g = f.grid;
  const double lambda = std::exp(nu * dt);
  const std::size_t n = g.nv;
  const double period = 2.0 * g.vmax;
  std::vector<double> matrix(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = lambda * g.v(i);
    if (!(y > -g.vmax && y < g.vmax)) continue;
    for (std::size_t j = 0; j < n; ++j) matrix[i * n + j] = lambda * dirichlet_weight(n, y - g.v(j), period);
  }
  const auto shape = g.shape();
  for (int a = 0; a < g.dim; ++a) {
    spectral::map_lines(f.values, shape, static_cast<std::size_t>(g.dim + a), [&](std::size_t, std::span<double> line) {
      std::vector<double> out(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = matrix.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) s += row[j] * line[j];
        out[i] = s;
      }
      std::copy(out.begin(), out.end(), line.begin());
    });
  }
}

void gaussian_smooth_v(DistributionField& f, double variance) {
  const auto& g = f.grid;
  const auto shape = g.shape();
  std::vector<double> mult(g.nv / 2 + 1);
  for (std::size_t j = 0; j < mult.size(); ++j) {
    const double eta = g.wavenumber(static_cast<std::size_t>(g.dim), static_cast<long>(j));
    mult[j] = std::exp(-0.5 * eta * eta * variance);
  }
  for (int a = 0; a < g.dim; ++a) {
    spectral::transform_lines(f.values, shape, static_cast<std::size_t>(g.dim + a),
                              [&](std::size_t, std::span<Complex> spec) {
                                for (std::size_t j = 0; j < spec.size(); ++j) spec[j] *= mult[j];
                              });
  }
}

}  // namespace

void StepPlan::validate() const {
  if (!(dt > 0.0)) fail(ErrorKind::Config, "solver.dt must be positive");
  if (!(nu >= 0.0)) fail(ErrorKind::Config, "solver.nu must be nonnegative");
  if (!(cutoff.R > 0.0)) fail(ErrorKind::Config, "solver.R must be positive");
  if (cutoff_norm.sigma < 0 || cutoff_norm.m < 0.0) fail(ErrorKind::Config, "solver norm orders must be nonnegative");
  if (!(mollifier_epsilon >= 0.0)) fail(ErrorKind::Config, "solver.epsilon must be nonnegative");
  if (field_sign != 1.0 && field_sign != -1.0) fail(ErrorKind::Config, "solver.field_sign must be +1 or -1");
}

DriftEvaluation evaluate_drift(const DistributionField& f, const StepPlan& plan) {
  DriftEvaluation out;
  out.norm = weighted_sobolev_norm(f, plan.cutoff_norm);
  out.theta = std::isinf(plan.cutoff.R) ? 1.0 : cutoff_theta(out.norm, plan.cutoff);
  if (!plan.self_field || out.theta == 0.0) return out;
  const auto& g = f.grid;
  const auto rho = density(f);
  FieldSolution sol = plan.kernel ? solve_kernel(g, rho, *plan.kernel) : solve_poisson(g, rho);
  out.warnings = sol.warnings;
  std::vector<double> e = std::move(sol.E);
  if (plan.mollifier_epsilon > 0.0) {
    const double eps = plan.mollifier_epsilon;
    e = filter_vector_field(g, e, [&](std::span<const long> k) {
      double k2 = 0.0;
      for (long c : k) k2 += static_cast<double>(c) * c;
      return bump_transform(g.dim, eps * std::sqrt(k2));
    });
  }
  dealias(g, e);
  const double scale = out.theta * plan.field_sign;
  if (scale != 1.0)
    for (double& c : e) c *= scale;
  out.field_energy = field_energy(g, e);
  out.accel = std::move(e);
  return out;
}

void transport_x(DistributionField& f, double dt) {
  const auto& g = f.grid;
  const auto shape = g.shape();
  const auto vel = velocity_components(g);
  const std::size_t nvs = g.velocity_size();
  for (int a = 0; a < g.dim; ++a) {
    const auto& va = vel[static_cast<std::size_t>(a)];
    spectral::transform_lines(f.values, shape, static_cast<std::size_t>(a), [&](std::size_t base, std::span<Complex> spec) {
      const double shift = va[base % nvs] * dt;
      if (shift == 0.0) return;
      for (std::size_t j = 1; j < spec.size(); ++j) spec[j] *= std::polar(1.0, -static_cast<double>(j) * shift);
    });
  }
}

DistributionField substep_transport_x(const DistributionField& f, double dt) {
  DistributionField out = f;
  transport_x(out, dt);
  return out;
}

void shift_v(DistributionField& f, std::span<const double> a_total) {
  const auto& g = f.grid;
  const auto d = static_cast<std::size_t>(g.dim);
  if (a_total.size() != g.spatial_size() * d) fail(ErrorKind::Shape, "velocity shift field has wrong size");
  double worst = 0.0;
  for (double a : a_total) {
    if (!std::isfinite(a)) fail(ErrorKind::NanInput, "velocity shift is not finite");
    worst = std::max(worst, std::abs(a));
  }
  if (worst > 0.5 * g.vmax) fail(ErrorKind::ShiftTooLarge, "velocity shift exceeds V_max/2");
  if (worst == 0.0) return;
  const auto shape = g.shape();
  const std::size_t nvs = g.velocity_size();
  for (std::size_t a = 0; a < d; ++a) {
    spectral::transform_lines(f.values, shape, d + a, [&](std::size_t base, std::span<Complex> spec) {
      const double s = a_total[(base / nvs) * d + a];
      if (s == 0.0) return;
      for (std::size_t j = 1; j < spec.size(); ++j)
        spec[j] *= std::polar(1.0, -g.wavenumber(d + a, static_cast<long>(j)) * s);
    });
  }
}

DistributionField substep_accel_v(const DistributionField& f, std::span<const double> a_total) {
  DistributionField out = f;
  shift_v(out, a_total);
  return out;
}

DistributionField diffuse_v(const DistributionField& f, double nu, double dt) {
  if (!(nu >= 0.0)) fail(ErrorKind::Domain, "nu must be nonnegative");
  DistributionField out = f;
  if (nu > 0.0) gaussian_smooth_v(out, 2.0 * nu * dt);
  return out;
}

DistributionField dilate_v(const DistributionField& f, double nu, double dt) {
  if (!(nu >= 0.0)) fail(ErrorKind::Domain, "nu must be nonnegative");
  DistributionField out = f;
  if (nu > 0.0) dilate_in_place(out, nu, dt);
  return out;
}

FokkerPlanckResult substep_fokker_planck(const DistributionField& f, double nu, double dt) {
  if (!(nu >= 0.0)) fail(ErrorKind::Domain, "nu must be nonnegative");
  FokkerPlanckResult r{f, 0.0, {}};
  if (nu == 0.0) return r;
  const double m0 = total_mass(f);
  dilate_in_place(r.field, nu, dt);
  gaussian_smooth_v(r.field, -std::expm1(-2.0 * nu * dt));
  const double m1 = total_mass(r.field);
  r.mass_defect = m0 != 0.0 ? std::abs(m1 - m0) / std::abs(m0) : std::abs(m1);
  if (r.mass_defect > 1e-12)
    r.warnings.push_back({"truncation-loss", "Fokker-Planck dilation lost relative mass " + io::format_double(r.mass_defect)});
  return r;
}

EulerianSolver::EulerianSolver(StepPlan plan, std::shared_ptr<const NoiseSource> noise, FieldProvider provider)
    : plan_(std::move(plan)), noise_(std::move(noise)), provider_(std::move(provider)) {
  plan_.validate();
  if (noise_ && noise_->active()) {
    if (std::abs(noise_->path.dt() - plan_.dt) > 1e-12 * plan_.dt)
      fail(ErrorKind::Config, "noise path step differs from solver dt");
  }
}

DriftEvaluation EulerianSolver::drift(const DistributionField& f, std::uint64_t step) const {
  if (provider_) return provider_(f, step);
  return evaluate_drift(f, plan_);
}

StepOutcome EulerianSolver::step(SolverState& state) const {
  auto& f = state.f;
  const double dt = plan_.dt;
  const bool strang = plan_.splitting == SplittingOrder::Strang;
  StepOutcome out;
  if (noise_ && noise_->basis.dim() != f.grid.dim) fail(ErrorKind::Shape, "noise dimension differs from grid");

  transport_x(f, strang ? 0.5 * dt : dt);
  DriftEvaluation ev = drift(f, state.step_index);
  out.warnings.insert(out.warnings.end(), ev.warnings.begin(), ev.warnings.end());

  std::vector<double> a_total;
  if (noise_ && noise_->active()) {
    a_total = noise_->field(state.step_index, f.grid.nx);
  } else {
    a_total.assign(f.grid.spatial_size() * static_cast<std::size_t>(f.grid.dim), 0.0);
  }
  if (!ev.accel.empty()) {
    if (ev.accel.size() != a_total.size()) fail(ErrorKind::Shape, "drift field has wrong size");
    for (std::size_t i = 0; i < a_total.size(); ++i) a_total[i] += ev.accel[i] * dt;
  }
  shift_v(f, a_total);

  if (plan_.nu > 0.0) {
    const double m0 = total_mass(f);
    dilate_in_place(f, plan_.nu, dt);
    gaussian_smooth_v(f, -std::expm1(-2.0 * plan_.nu * dt));
    const double m1 = total_mass(f);
    const double defect = m0 != 0.0 ? std::abs(m1 - m0) / std::abs(m0) : std::abs(m1);
    if (defect > 1e-12)
      out.warnings.push_back({"truncation-loss", "Fokker-Planck dilation lost relative mass " + io::format_double(defect)});
  }
  if (strang) transport_x(f, 0.5 * dt);

  state.step_index += 1;
  f.time = static_cast<double>(state.step_index) * dt;
  state.last_theta = ev.theta;
  state.last_norm = ev.norm;

  auto& r = out.record;
  r.step = state.step_index;
  r.t = f.time;
  r.mass = total_mass(f);
  r.l2 = l2_norm(f);
  r.norm = ev.norm;
  r.theta = ev.theta;
  r.min_f = min_value(f.values);
  r.e_energy = ev.field_energy;
  return out;
}

StepRecord EulerianSolver::diagnostics(const SolverState& state) const {
  StepRecord r;
  const auto& f = state.f;
  r.step = state.step_index;
  r.t = f.time;
  r.mass = total_mass(f);
  r.l2 = l2_norm(f);
  r.min_f = min_value(f.values);
  if (provider_) {
    r.norm = weighted_sobolev_norm(f, plan_.cutoff_norm);
    r.theta = std::isinf(plan_.cutoff.R) ? 1.0 : cutoff_theta(r.norm, plan_.cutoff);
  } else {
    const auto ev = evaluate_drift(f, plan_);
    r.norm = ev.norm;
    r.theta = ev.theta;
    r.e_energy = ev.field_energy;
  }
  return r;
}

RunResult run_eulerian(const DistributionField& f0, const StepPlan& plan,
                       std::shared_ptr<const NoiseSource> noise, const RunOptions& options,
                       FieldProvider provider) {
  if (options.cadence < 1) fail(ErrorKind::Config, "cadence must be >= 1");
  check_finite(f0.values, "initial data");
  EulerianSolver solver(plan, std::move(noise), std::move(provider));
  RunResult result;
  SolverState state{f0, 0, 1.0, 0.0};
  state.f.time = 0.0;
  const double m0 = total_mass(f0);
  auto tail_fraction = [](const DistributionField& f) {
    double abs_mass = 0.0;
    for (double v : f.values) abs_mass += std::abs(v);
    abs_mass *= f.grid.spatial_cell() * f.grid.velocity_cell();
    return abs_mass > 0.0 ? velocity_tail_mass(f) / abs_mass : 0.0;
  };
  auto track = [&](const SolverState& s, const StepRecord& r, bool logged) {
    const double drift = m0 != 0.0 ? std::abs(r.mass - m0) / std::abs(m0) : std::abs(r.mass);
    result.max_mass_drift = std::max(result.max_mass_drift, drift);
    if (logged) {
      result.max_tail_fraction = std::max(result.max_tail_fraction, tail_fraction(s.f));
      result.log.push_back(r);
    }
  };

  const StepRecord first = solver.diagnostics(state);
  track(state, first, true);
  if (options.observer) options.observer(state, first);

  for (std::uint64_t n = 0; n < options.steps; ++n) {
    SolverState next = state;
    StepOutcome outcome;
    try {
      outcome = solver.step(next);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ShiftTooLarge && e.kind() != ErrorKind::NanInput) throw;
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }
    if (!all_finite(next.f.values)) {
      result.aborted = true;
      result.abort_reason = "numeric-abort: non-finite values at step " + std::to_string(next.step_index);
      break;
    }
    for (auto& w : outcome.warnings)
      if (!has_warning(result.warnings, w.code)) result.warnings.push_back(w);
    state = std::move(next);
    const bool logged = state.step_index % options.cadence == 0 || n + 1 == options.steps;
    track(state, outcome.record, logged);
    if (options.observer) options.observer(state, outcome.record);
  }
  result.invalid = result.max_tail_fraction > kTailThreshold;
  if (result.invalid)
    result.warnings.push_back({"velocity-truncation", "mass fraction beyond V_max/2 exceeded 1e-10"});
  result.final_state = std::move(state);
  return result;
}

std::vector<std::string> step_log_header() {
  return {"step", "t", "mass", "L2", "Hs0m0_norm", "theta_R", "min_f", "E_energy"};
}

std::vector<double> step_log_row(const StepRecord& r) {
  return {static_cast<double>(r.step), r.t, r.mass, r.l2, r.norm, r.theta, r.min_f, r.e_energy};
}

void write_step_log(const std::string& path, const std::vector<StepRecord>& log) {
  io::CsvWriter out(path, step_log_header());
  for (const auto& r : log) out.row(step_log_row(r));
}

}  // namespace svpfp

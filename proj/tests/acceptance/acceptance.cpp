#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "../oracles.hpp"
#include "svpfp/commands.hpp"
#include "svpfp/ensemble_runner.hpp"
#include "svpfp/eulerian_solver.hpp"
#include "svpfp/field_solver.hpp"
#include "svpfp/hypo_energy.hpp"
#include "svpfp/io.hpp"
#include "svpfp/lagrangian_solver.hpp"
#include "svpfp/picard_lab.hpp"

using namespace svpfp;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", x);
  return b;
}

double maxwellian(double v) { return std::exp(-0.5 * v * v) / std::sqrt(kTwoPi); }

GridSpec grid(std::size_t nx, std::size_t nv, double vmax) {
  GridSpec g;
  g.nx = nx;
  g.nv = nv;
  g.vmax = vmax;
  return g;
}

DistributionField perturbed(const GridSpec& g, double amp, double drift = 0.0) {
  return DistributionField::from_function(
      g, [&](auto x, auto v) { return (1.0 + amp * std::cos(x[0])) * maxwellian(v[0] - drift); });
}

std::shared_ptr<NoiseSource> noise(double amplitude, int kmax, std::uint64_t seed, double base_dt,
                                   std::uint64_t stride = 1) {
  NoiseSpec s;
  s.max_wavenumber = kmax;
  s.amplitude = amplitude;
  s.power = 2.0;
  return std::make_shared<NoiseSource>(s, NoisePath{seed, 0, base_dt, stride, 0});
}

double l2_diff(const DistributionField& a, const DistributionField& b) {
  DistributionField d(a.grid);
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
  return l2_norm(d);
}

void mass_conservation() {
  const GridSpec g = grid(64, 128, 16.0);
  const auto f0 = perturbed(g, 0.05);
  double worst[2] = {0, 0};
  const double nus[2] = {0.0, 0.5};
  for (int i = 0; i < 2; ++i) {
    StepPlan plan;
    plan.dt = 0.01;
    plan.nu = nus[i];
    plan.field_sign = -1.0;
    RunOptions o;
    o.steps = 1000;
    o.cadence = 100;
    const auto r = run_eulerian(f0, plan, noise(0.05, 2, 7, 0.01), o);
    worst[i] = r.aborted ? INFINITY : r.max_mass_drift;
  }
  report("mass_conservation", worst[0] <= 1e-10 && worst[1] <= 1e-8,
         "nu=0 drift " + num(worst[0]) + " (<=1e-10), nu=0.5 drift " + num(worst[1]) + " (<=1e-8)");
}

void l2_conservation() {
  const GridSpec g = grid(64, 128, 16.0);
  const auto f0 = perturbed(g, 0.05);
  StepPlan plan;
  plan.dt = 0.01;
  plan.field_sign = -1.0;
  RunOptions o;
  o.steps = 100;
  o.cadence = 1;
  const auto r = run_eulerian(f0, plan, noise(0.1, 2, 3, 0.01), o);
  const double l0 = l2_norm(f0);
  double worst = 0.0;
  for (const auto& rec : r.log) worst = std::max(worst, std::abs(rec.l2 - l0) / l0);
  report("l2_pathwise_conservation", !r.aborted && worst <= 1e-8, "max relative drift on [0,1] " + num(worst) + " (<=1e-8)");
}

void lp_growth_bound() {
  const GridSpec g = grid(32, 128, 16.0);
  const auto f0 = perturbed(g, 0.1);
  EnsembleConfig c;
  c.realizations = 8;
  c.base_seed = 11;
  c.plan.dt = 0.01;
  c.plan.nu = 0.5;
  c.plan.field_sign = -1.0;
  c.noise.max_wavenumber = 2;
  c.noise.amplitude = 0.2;
  c.noise.power = 2.0;
  c.steps = 50;
  c.cadence = 1;
  c.bootstrap_samples = 50;
  const auto res = run_ensemble(f0, c);
  const double l0 = l2_norm(f0);
  int violations = 0, points = 0;
  double worst = 0.0;
  for (const auto& rec : res.records)
    for (const auto& p : rec.series) {
      const double bound = std::exp(c.plan.nu * p.t) * l0;
      worst = std::max(worst, p.l2 / bound);
      ++points;
      if (p.l2 > bound * (1.0 + 1e-6)) ++violations;
    }
  report("lp_growth_bound", violations == 0 && res.summary.completed == c.realizations,
         std::to_string(violations) + " violations in " + std::to_string(points) + " points, max ratio " + num(worst));
}

void poisson_oracle() {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  int count = 0;
  for (std::size_t nx : {32u, 64u, 128u}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> a(5), b(5);
      for (int k = 1; k <= 4; ++k) {
        a[k] = 0.3 * nd(gen) / k;
        b[k] = 0.3 * nd(gen) / k;
      }
      auto rho = [&](double x) {
        double s = 1.0;
        for (int k = 1; k <= 4; ++k) s += a[k] * std::cos(k * x) + b[k] * std::sin(k * x);
        return s;
      };
      const GridSpec g = grid(nx, 8, 4.0);
      std::vector<double> r(nx);
      for (std::size_t i = 0; i < nx; ++i) r[i] = rho(g.x(i));
      const auto E = solve_poisson(g, r).E;
      const auto ref = oracle::fd_field_extrapolated(rho, nx);
      double num2 = 0.0, den2 = 0.0;
      for (std::size_t i = 0; i < nx; ++i) {
        num2 += (E[i] - ref[i]) * (E[i] - ref[i]);
        den2 += ref[i] * ref[i];
      }
      worst = std::max(worst, std::sqrt(num2 / den2));
      ++count;
    }
  }
  report("poisson_fd_oracle", worst <= 1e-10, std::to_string(count) + " densities, max relative error " + num(worst) + " (<=1e-10)");
}

void density_interpolation() {
  const double m = 2.0;
  const GridSpec g = grid(16, 64, 8.0);
  const double C = std::sqrt(oracle::simpson([&](double v) { return std::pow(1.0 + v * v, -m / 2); }, -g.vmax, g.vmax, 20000));
  std::mt19937_64 gen(99);
  std::normal_distribution<double> nd;
  int violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cx(4), sx(4), hv(4);
    for (int k = 0; k < 4; ++k) {
      cx[k] = nd(gen);
      sx[k] = nd(gen);
      hv[k] = nd(gen);
    }
    const double width = 0.5 + 2.0 * std::abs(nd(gen));
    const auto f = DistributionField::from_function(g, [&](auto x, auto v) {
      double ax = 0.0;
      for (int k = 0; k < 4; ++k) ax += cx[k] * std::cos(k * x[0]) + sx[k] * std::sin(k * x[0]);
      const double u = v[0] / width;
      double hvv = 0.0, hp = 1.0;
      for (int n = 0; n < 4; ++n) {
        hvv += hv[n] * hp;
        hp *= u;
      }
      return ax * hvv * std::exp(-0.5 * u * u);
    });
    const auto rho = density(f);
    double rho2 = 0.0;
    for (double r : rho) rho2 += r * r;
    const double lhs = std::sqrt(rho2 * g.spatial_cell());
    const double rhs = C * std::sqrt(weighted_l2_squared(g, f.values, m));
    worst = std::max(worst, lhs / rhs);
    if (lhs > rhs) ++violations;
  }
  report("density_interpolation", violations == 0,
         "C=" + num(C) + ", " + std::to_string(violations) + " violations in 100 fields, max lhs/rhs " + num(worst));
}

void regularization_operators() {
  const GridSpec g = grid(32, 64, 8.0);
  const auto f = DistributionField::from_function(g, [&](auto x, auto v) {
    return (1.0 + 0.5 * std::cos(x[0]) + 0.2 * std::sin(2 * x[0])) * maxwellian(v[0]) * (1.0 + 0.3 * v[0]);
  });
  const WeightedNormSpec hs{1, 2.0}, hs_minus{0, 2.0};
  const double base = weighted_sobolev_norm(f, hs);
  double cmin = INFINITY, cmax = 0.0;
  for (int n = 1; n <= 32; ++n) {
    const double c = weighted_sobolev_norm(regularize_initial(f, n).field, hs) / base;
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  std::vector<double> seq;
  for (int n : {4, 8, 16, 32}) {
    auto r = regularize_initial(f, n).field;
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= f.values[i];
    seq.push_back(n * weighted_sobolev_norm(r, hs_minus));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < seq.size(); ++i) decreasing = decreasing && seq[i] < seq[i - 1];
  report("regularization_operators", cmax / cmin <= 2.0 && decreasing,
         "C_n in [" + num(cmin) + ", " + num(cmax) + "] ratio " + num(cmax / cmin) + "; n||R^n f - f|| = " + num(seq[0]) +
             ", " + num(seq[1]) + ", " + num(seq[2]) + ", " + num(seq[3]));
}

void picard_decay() {
  const GridSpec g = grid(32, 128, 16.0);
  PicardConfig pc;
  pc.j_max = 5;
  pc.T = 0.25;
  pc.plan.dt = 0.01;
  pc.plan.cutoff.R = 1e6;
  pc.validate();
  const auto nz = noise(0.3, 4, 1, 0.01);
  const auto main = run_iteration(perturbed(g, 0.05), pc, nz).report;
  const auto& d = main.diffs;
  bool decreasing = d.size() == 5;
  for (std::size_t j = 1; j < d.size(); ++j) decreasing = decreasing && d[j] < d[j - 1];
  const double ratio51 = d.size() == 5 ? d[4] / d[0] : INFINITY;
  bool dominated = !main.fit.degenerate;
  for (std::size_t j = 1; j < main.fit.ratio.size(); ++j) dominated = dominated && main.fit.ratio[j] >= 1.0;

  const auto uniform = run_iteration(DistributionField::from_function(g, [](auto, auto v) { return maxwellian(v[0]); }), pc,
                                     noise(0.0, 1, 1, 0.01))
                           .report;
  PicardConfig off = pc;
  off.plan.cutoff.R = 1e-3;
  const auto zero_theta = run_iteration(perturbed(g, 0.05), off, nz).report;
  double trivial = 0.0;
  for (double x : uniform.diffs) trivial = std::max(trivial, x);
  for (double x : zero_theta.diffs) trivial = std::max(trivial, x);
  const bool trivial_ok = trivial <= 1e-12 && uniform.diffs.size() == 5 && zero_theta.diffs.size() == 5;
  report("picard_cauchy_decay", decreasing && ratio51 <= 1e-3 && dominated && trivial_ok,
         "d5/d1 " + num(ratio51) + " (<=1e-3), strictly decreasing " + std::to_string(decreasing) +
             ", envelope dominates j>=2 " + std::to_string(dominated) + ", trivial configs max d_j " + num(trivial));
}

void cross_backend() {
  const GridSpec g = grid(32, 64, 8.0);
  const auto f0 = perturbed(g, 0.3, 0.5);
  std::vector<double> acc(g.nx);
  for (std::size_t i = 0; i < g.nx; ++i) acc[i] = -0.3 * std::sin(g.x(i));
  const TrigField field(g, acc);
  FieldProvider frozen = [&](const DistributionField&, std::uint64_t) {
    DriftEvaluation d;
    d.accel = acc;
    return d;
  };
  const double T = 0.25, base = 0.003125;
  auto eulerian = [&](double dt) {
    StepPlan plan;
    plan.dt = dt;
    RunOptions o;
    o.steps = static_cast<std::uint64_t>(std::llround(T / dt));
    o.cadence = o.steps;
    return run_eulerian(f0, plan, noise(0.3, 2, 3, base, std::llround(dt / base)), o, frozen).final_state.f;
  };
  const double dt = 0.0125;
  const auto coarse = eulerian(dt), fine = eulerian(dt / 2);
  const auto nz = noise(0.3, 2, 3, base, std::llround(dt / base));
  FeynmanKacConfig fk;
  fk.replicas = 32;
  const auto rec = feynman_kac_density(f0, nz.get(), std::llround(T / dt), dt, fk, [&](std::uint64_t) { return &field; });
  const double refine = l2_diff(coarse, fine);
  const double gap = l2_diff(rec.field, fine);
  report("cross_backend_fk", gap <= 2.0 * refine,
         "||f_FK - f_E(dt/2)|| " + num(gap) + " <= 2 x ||f_E(dt) - f_E(dt/2)|| = " + num(2.0 * refine));
}

void integrator_order() {
  NoiseSpec spec;
  spec.max_wavenumber = 1;
  spec.amplitude = 0.5;
  const BasisSet basis = build_basis(spec);
  const ColoringTable table = coloring(spec, basis);
  const GridSpec g = grid(16, 8, 4.0);
  std::vector<double> acc(g.nx);
  for (std::size_t i = 0; i < g.nx; ++i) acc[i] = 0.4 * std::sin(g.x(i));
  const TrigField field(g, acc);
  const double T = 0.5;
  const std::vector<double> dts{0.05, 0.025, 0.0125, 0.00625};
  const double dt_ref = dts.back() / 64.0;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ux(0.0, kTwoPi), uv(-2.0, 2.0);
  const std::size_t n = 200;
  ParticleEnsemble start;
  for (std::size_t p = 0; p < n; ++p) {
    start.X.push_back(ux(gen));
    start.V.push_back(uv(gen));
    start.w.push_back(1.0);
  }
  auto integrate = [&](std::uint64_t seed, double dt, PushScheme scheme) {
    const auto stride = static_cast<std::uint64_t>(std::llround(dt / dt_ref));
    const NoisePath path{seed, 0, dt_ref, stride, 0};
    ParticleEnsemble e = start;
    const auto steps = static_cast<std::uint64_t>(std::llround(T / dt));
    for (std::uint64_t s = 0; s < steps; ++s) {
      const auto amps = mode_amplitudes(path, s, basis, table);
      PushContext ctx;
      ctx.dt = dt;
      ctx.scheme = scheme;
      ctx.internal_noise = false;
      ctx.wrap = false;
      ctx.accel = &field;
      ctx.basis = &basis;
      ctx.amplitudes = amps;
      ctx.step = s;
      push(e, ctx);
    }
    return e;
  };
  auto rms = [&](const ParticleEnsemble& a, const ParticleEnsemble& b) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
      s += (a.X[p] - b.X[p]) * (a.X[p] - b.X[p]) + (a.V[p] - b.V[p]) * (a.V[p] - b.V[p]);
    return s / static_cast<double>(a.size());
  };
  const int paths = 8;
  std::vector<double> err_em(dts.size(), 0.0), err_heun(dts.size(), 0.0), gap(dts.size(), 0.0);
  for (int s = 0; s < paths; ++s) {
    const auto ref = integrate(100 + s, dt_ref, PushScheme::StratonovichHeun);
    for (std::size_t i = 0; i < dts.size(); ++i) {
      const auto em = integrate(100 + s, dts[i], PushScheme::EulerMaruyama);
      const auto he = integrate(100 + s, dts[i], PushScheme::StratonovichHeun);
      err_em[i] += rms(em, ref) / paths;
      err_heun[i] += rms(he, ref) / paths;
      gap[i] += rms(em, he) / paths;
    }
  }
  std::vector<double> lx, le, lh, lg;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    lx.push_back(std::log(dts[i]));
    le.push_back(0.5 * std::log(err_em[i]));
    lh.push_back(0.5 * std::log(err_heun[i]));
    lg.push_back(0.5 * std::log(gap[i]));
  }
  const double oe = oracle::slope(lx, le), oh = oracle::slope(lx, lh), og = oracle::slope(lx, lg);
  report("stochastic_integrator_order", oe >= 0.9 && oh >= 0.9 && og >= 0.9,
         "strong order euler_maruyama " + num(oe) + ", stratonovich_heun " + num(oh) + ", scheme gap slope " + num(og) +
             " (all >=0.9)");
}

void flow_volume() {
  const GridSpec g = grid(16, 8, 4.0);
  std::vector<double> acc(g.nx);
  for (std::size_t i = 0; i < g.nx; ++i) acc[i] = -0.3 * std::sin(g.x(i));
  const TrigField field(g, acc);
  const double box[4] = {1.0, 2.0, -0.5, 0.5};
  const auto nz = noise(0.3, 2, 3, 0.01);
  FlowCheckConfig cfg;
  cfg.boundary_samples = 10000;
  const auto flow = flow_volume_check(box, nz.get(), 50, 0.01, cfg, [&](std::uint64_t) { return &field; });
  const auto shear = flow_volume_check(box, nullptr, 50, 0.01, cfg);
  std::vector<double> poly;
  const int side = 2500;
  for (int i = 0; i < side; ++i) poly.insert(poly.end(), {1.0 + double(i) / side, -0.5});
  for (int i = 0; i < side; ++i) poly.insert(poly.end(), {2.0, -0.5 + double(i) / side});
  for (int i = 0; i < side; ++i) poly.insert(poly.end(), {2.0 - double(i) / side, 0.5});
  for (int i = 0; i < side; ++i) poly.insert(poly.end(), {1.0, 0.5 - double(i) / side});
  const double a0 = polygon_area(poly);
  for (std::size_t i = 0; i < poly.size(); i += 2) poly[i] += 0.5 * poly[i + 1];
  const double shear_poly = std::abs(polygon_area(poly) / a0 - 1.0);
  const double dev = std::abs(flow.ratio - 1.0), dev_shear = std::abs(shear.ratio - 1.0);
  report("flow_volume_preservation", dev <= 0.02 && dev_shear <= 1e-10 && shear_poly <= 1e-10,
         "t=0.5 ratio " + num(flow.ratio) + (flow.monte_carlo ? " (monte carlo)" : " (polygon)") + ", shear deviation " +
             num(std::max(dev_shear, shear_poly)) + " (<=1e-10)");
}

void hypo_constants() {
  bool all = true;
  for (double eps : {0.5, 0.25, 0.1, 0.05, 0.01}) {
    const auto k = choose_constants(eps);
    for (const auto& c : check_constants(k)) all = all && c.holds;
  }
  const auto k = choose_constants(0.5);
  const GridSpec g = grid(16, 32, 6.0);
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  int violations = 0;
  double worst = INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> c(12);
    for (auto& x : c) x = nd(gen);
    const double t = ut(gen);
    const auto f = DistributionField::from_function(g, [&](auto x, auto v) {
      double s = 0.0;
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 2; ++n)
          s += c[2 * (2 * m + n)] * std::cos(m * x[0]) * std::pow(v[0], n) + c[2 * (2 * m + n) + 1] * std::sin((m + 1) * x[0]) * std::pow(v[0], 2 * n);
      return s * std::exp(-0.5 * v[0] * v[0]);
    });
    const auto e = energy_Esigma(t, f, k, 1, 0.0);
    const double ratio = e.total / bfree_sum(t, e, k);
    worst = std::min(worst, ratio);
    if (ratio < 0.5) ++violations;
  }
  report("hypocoercivity_constants", all && violations == 0,
         std::string("admissible for all eps ") + (all ? "yes" : "no") + ", coercivity violations " + std::to_string(violations) +
             "/1000, min E/bfree " + num(worst));
}

void hypo_rates() {
  const auto prop = LinearKfpPropagator::rough(0.5, 20, 1.0);
  const auto k = choose_constants(0.5);
  std::vector<double> ts, gx, gv;
  double sup = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double t = 1e-3 * std::pow(100.0, i / 11.0);
    ts.push_back(t);
    gx.push_back(std::sqrt(prop.derivative_squared(t, 1, 0)));
    gv.push_back(std::sqrt(prop.derivative_squared(t, 0, 1)));
    sup = std::max(sup, prop.energy(t, k, 0).total);
  }
  const auto fx = regularization_rate_fit(ts, gx), fv = regularization_rate_fit(ts, gv);
  const double f0 = prop.sobolev_squared(0.0, 0);
  const bool ok = fx.slope >= -1.8 && fx.slope <= -1.2 && fv.slope >= -0.7 && fv.slope <= -0.3 && sup <= 10.0 * f0;
  report("hypoelliptic_rates", ok,
         "grad_x slope " + num(fx.slope) + " in [-1.8,-1.2], grad_v slope " + num(fv.slope) + " in [-0.7,-0.3], sup E " +
             num(sup) + " <= 10 x " + num(f0));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<std::string> na, nb;
  for (const auto& e : fs::directory_iterator(a)) na.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) nb.push_back(e.path().filename().string());
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  if (na != nb || na.empty()) {
    why = "file lists differ in " + a.string();
    return false;
  }
  for (const auto& n : na)
    if (slurp(a / n) != slurp(b / n)) {
      why = n + " differs";
      return false;
    }
  return true;
}

void reproducibility(const fs::path& work) {
  const std::string common =
      R"("grid": {"nx": 16, "nv": 64, "vmax": 12.0}, "noise": {"amplitude": 0.2, "max_wavenumber": 2, "seed": 4},)";
  const std::vector<std::pair<std::string, std::string>> cases{
      {"run", "{" + common + R"("solver": {"dt": 0.02, "steps": 20, "nu": 0.3, "field_sign": -1}, "output": {"cadence": 5, "snapshot_times": [0.2]}})"},
      {"run", "{" + common + R"("solver": {"backend": "lagrangian_fk", "dt": 0.02, "steps": 5, "nu": 0.3, "fk_replicas": 4}, "output": {"cadence": 5}})"},
      {"run", "{" + common + R"("solver": {"backend": "pic", "dt": 0.02, "steps": 10, "particles": 5000, "particle_init": "rejection_sampled", "nu": 0.2}})"},
      {"ensemble", "{" + common + R"("solver": {"dt": 0.02, "steps": 10, "nu": 0.2}, "ensemble": {"realizations": 4, "cadence": 2, "levels": [1.0], "bootstrap": 50}})"},
      {"picard", "{" + common + R"("solver": {"dt": 0.02, "R": 1e6}, "picard": {"j_max": 3, "T": 0.1}})"},
      {"hypo", "{" + common + R"("hypo": {"epsilon": 0.5, "source": "grid", "t_min": 0.02, "t_max": 0.2, "samples": 8}, "solver": {"dt": 0.0025}})"},
      {"convergence", "{" + common + R"("solver": {"dt": 0.05}, "convergence": {"dt_levels": 2, "nx_levels": [8], "t_final": 0.1}})"},
  };
  bool ok = true;
  std::string detail = std::to_string(cases.size()) + " subcommand configs, threads 1/3/1 byte-identical";
  for (std::size_t i = 0; i < cases.size() && ok; ++i) {
    const fs::path cfg = work / ("repro_" + std::to_string(i) + ".json");
    io::write_text(cfg.string(), cases[i].second);
    std::vector<fs::path> dirs;
    for (int threads : {1, 3, 1}) {
      CommandOptions o;
      o.config_path = cfg.string();
      o.output_dir = (work / ("repro_" + std::to_string(i) + "_" + std::to_string(dirs.size()))).string();
      o.seed = 7;
      o.threads = threads;
      std::ostringstream out, err;
      const int code = run_command(cases[i].first, o, out, err);
      if (code != 0) {
        ok = false;
        detail = cases[i].first + " exited " + std::to_string(code) + ": " + err.str();
        break;
      }
      dirs.push_back(*o.output_dir);
    }
    std::string why;
    if (ok && !(same_tree(dirs[0], dirs[1], why) && same_tree(dirs[0], dirs[2], why))) {
      ok = false;
      detail = cases[i].first + " case " + std::to_string(i) + ": " + why;
    }
  }
  set_num_threads(1);
  report("reproducibility", ok, detail);
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "svpfp_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  set_num_threads(1);
  mass_conservation();
  l2_conservation();
  lp_growth_bound();
  poisson_oracle();
  density_interpolation();
  regularization_operators();
  picard_decay();
  cross_backend();
  integrator_order();
  flow_volume();
  hypo_constants();
  hypo_rates();
  reproducibility(work);
  std::printf("%d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

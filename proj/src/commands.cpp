#include "svpfp/commands.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <thread>

#include "svpfp/ensemble_runner.hpp"
#include "svpfp/hypo_energy.hpp"
#include "svpfp/io.hpp"
#include "svpfp/lagrangian_solver.hpp"
#include "svpfp/picard_lab.hpp"

namespace svpfp {

using json = nlohmann::json;

namespace {

std::string path_in(const RunConfig& c, const std::string& name) { return io::join_path(c.output.dir, name); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json warnings_json(const Warnings& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back({{"code", w.code}, {"message", w.message}});
  return a;
}

std::string fmt(double x) { return io::format_double(x); }

std::uint64_t step_of(double t, double dt) { return static_cast<std::uint64_t>(std::llround(t / dt)); }

void final_line(std::ostream& out, const StepRecord& r) {
  out << "final t=" << fmt(r.t) << " mass=" << fmt(r.mass) << " L2=" << fmt(r.l2) << " norm=" << fmt(r.norm)
      << " theta=" << fmt(r.theta) << "\n";
}

StepRecord record_of(const DistributionField& f, std::uint64_t step, const StepPlan& plan, double e_energy) {
  StepRecord r;
  r.step = step;
  r.t = f.time;
  r.mass = total_mass(f);
  r.l2 = l2_norm(f);
  r.norm = weighted_sobolev_norm(f, plan.cutoff_norm);
  r.theta = std::isinf(plan.cutoff.R) ? 1.0 : cutoff_theta(r.norm, plan.cutoff);
  r.min_f = *std::min_element(f.values.begin(), f.values.end());
  r.e_energy = e_energy;
  return r;
}

int run_eulerian_backend(const RunConfig& c, const DistributionField& f0, std::ostream& out, std::ostream& err) {
  const auto& s = c.solver;
  auto noise = make_noise(c, s.steps);
  std::vector<std::uint64_t> snap_steps;
  for (double t : c.output.snapshot_times) snap_steps.push_back(step_of(t, s.plan.dt));
  RunOptions opts;
  opts.steps = s.steps;
  opts.cadence = c.output.cadence;
  opts.observer = [&](const SolverState& st, const StepRecord&) {
    if (std::find(snap_steps.begin(), snap_steps.end(), st.step_index) != snap_steps.end())
      save_snapshot(st.f, path_in(c, "snapshot_" + std::to_string(st.step_index) + ".json"));
  };
  RunResult run = run_eulerian(f0, s.plan, noise, opts);
  write_step_log(path_in(c, "step_log.csv"), run.log);
  json summary{{"backend", "eulerian"},
               {"steps", run.final_state.step_index},
               {"t", run.final_state.f.time},
               {"mass0", total_mass(f0)},
               {"max_mass_drift", run.max_mass_drift},
               {"max_tail_fraction", run.max_tail_fraction},
               {"invalid", run.invalid},
               {"aborted", run.aborted},
               {"warnings", warnings_json(run.warnings)}};
  for (const auto& w : run.warnings) err << "warning: " << w.code << ": " << w.message << "\n";
  if (run.aborted) {
    const std::string last = path_in(c, "last_good.json");
    save_snapshot(run.final_state.f, last);
    summary["abort_reason"] = run.abort_reason;
    io::write_text(path_in(c, "run_summary.json"), summary.dump(2) + "\n");
    err << "numeric abort: " << run.abort_reason << "; last good snapshot: " << last << "\n";
    return kExitNumeric;
  }
  save_snapshot(run.final_state.f, path_in(c, "final.json"));
  io::write_text(path_in(c, "run_summary.json"), summary.dump(2) + "\n");
  final_line(out, run.log.back());
  return kExitOk;
}

int run_fk_backend(const RunConfig& c, const DistributionField& f0, std::ostream& out, std::ostream& err) {
  const auto& s = c.solver;
  auto noise = make_noise(c, s.steps);
  // Linear problem with the field of f0 held fixed.
  std::unique_ptr<TrigField> field;
  double e_energy = 0.0;
  if (s.plan.self_field) {
    DriftEvaluation ev = evaluate_drift(f0, s.plan);
    e_energy = ev.field_energy;
    if (!ev.accel.empty()) field = std::make_unique<TrigField>(f0.grid, ev.accel);
  }
  DriftSchedule schedule = [&](std::uint64_t) { return static_cast<const TrigField*>(field.get()); };
  FeynmanKacConfig fk{s.fk_replicas, s.plan.nu, s.fk_seed, s.scheme};
  std::vector<std::uint64_t> out_steps{0};
  for (std::uint64_t n = c.output.cadence; n < s.steps; n += c.output.cadence) out_steps.push_back(n);
  for (double t : c.output.snapshot_times) out_steps.push_back(std::min(step_of(t, s.plan.dt), s.steps));
  out_steps.push_back(s.steps);
  std::sort(out_steps.begin(), out_steps.end());
  out_steps.erase(std::unique(out_steps.begin(), out_steps.end()), out_steps.end());

  std::vector<StepRecord> log;
  Warnings warnings;
  DistributionField last = f0;
  for (std::uint64_t n : out_steps) {
    DistributionField f = f0;
    if (n > 0) {
      auto res = feynman_kac_density(f0, noise.get(), n, s.plan.dt, fk, schedule);
      for (auto& w : res.warnings)
        if (!has_warning(warnings, w.code)) warnings.push_back(w);
      f = std::move(res.field);
    }
    const bool finite = std::all_of(f.values.begin(), f.values.end(), [](double v) { return std::isfinite(v); });
    if (!finite) {
      write_step_log(path_in(c, "step_log.csv"), log);
      const std::string p = path_in(c, "last_good.json");
      save_snapshot(last, p);
      err << "numeric abort: non-finite reconstruction at step " << n << "; last good snapshot: " << p << "\n";
      return kExitNumeric;
    }
    log.push_back(record_of(f, n, s.plan, e_energy));
    if (std::find_if(c.output.snapshot_times.begin(), c.output.snapshot_times.end(),
                     [&](double t) { return step_of(t, s.plan.dt) == n; }) != c.output.snapshot_times.end())
      save_snapshot(f, path_in(c, "snapshot_" + std::to_string(n) + ".json"));
    last = std::move(f);
  }
  for (const auto& w : warnings) err << "warning: " << w.code << ": " << w.message << "\n";
  write_step_log(path_in(c, "step_log.csv"), log);
  save_snapshot(last, path_in(c, "final.json"));
  json summary{{"backend", "lagrangian_fk"}, {"steps", s.steps}, {"t", last.time}, {"replicas", s.fk_replicas},
               {"warnings", warnings_json(warnings)}};
  io::write_text(path_in(c, "run_summary.json"), summary.dump(2) + "\n");
  final_line(out, log.back());
  return kExitOk;
}

int run_pic_backend(const RunConfig& c, const DistributionField& f0, std::ostream& out, std::ostream& err) {
  const auto& s = c.solver;
  auto noise = make_noise(c, s.steps);
  ParticleEnsemble ens = init_particles(f0, s.particles, s.particle_init, c.initial.seed);
  PicResult res = run_pic(std::move(ens), c.grid, noise.get(), s.steps, s.plan.dt, s.plan.nu, s.scheme, s.plan.field_sign);
  {
    io::CsvWriter log(path_in(c, "pic_log.csv"), {"step", "t", "E_energy"});
    for (std::size_t n = 0; n < res.field_energy.size(); ++n)
      if (n % c.output.cadence == 0 || n + 1 == res.field_energy.size())
        log.row(std::vector<double>{static_cast<double>(n), static_cast<double>(n) * s.plan.dt, res.field_energy[n]});
  }
  const auto& e = res.ensemble;
  const bool finite = std::all_of(e.X.begin(), e.X.end(), [](double v) { return std::isfinite(v); }) &&
                      std::all_of(e.V.begin(), e.V.end(), [](double v) { return std::isfinite(v); });
  if (!finite) {
    err << "numeric abort: non-finite particle state\n";
    return kExitNumeric;
  }
  save_particles(e, path_in(c, "particles.json"));
  double mass = 0.0;
  for (double w : e.w) mass += w;
  out << "final t=" << fmt(e.time) << " mass=" << fmt(mass) << " particles=" << e.size() << "\n";
  return kExitOk;
}

}  // namespace

int cmd_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  io::ensure_directory(c.output.dir);
  const DistributionField f0 = make_initial(c);
  switch (c.solver.backend) {
    case Backend::Eulerian: return run_eulerian_backend(c, f0, out, err);
    case Backend::LagrangianFk: return run_fk_backend(c, f0, out, err);
    case Backend::Pic: return run_pic_backend(c, f0, out, err);
  }
  return kExitFailure;
}

int cmd_ensemble(const RunConfig& c, std::ostream& out, std::ostream& err) {
  io::ensure_directory(c.output.dir);
  const DistributionField f0 = make_initial(c);
  EnsembleConfig ec;
  ec.realizations = c.ensemble.realizations;
  ec.base_seed = c.ensemble.base_seed;
  ec.plan = c.solver.plan;
  ec.noise = c.noise.spec;
  ec.noise_substeps = c.noise.substeps;
  ec.steps = c.solver.steps;
  ec.cadence = c.ensemble.cadence;
  ec.stopping_norm = c.solver.plan.cutoff_norm;
  ec.stopping_levels = c.ensemble.levels;
  ec.moments = c.ensemble.moments;
  ec.bootstrap_samples = c.ensemble.bootstrap;
  ec.energy_sigma = c.ensemble.energy_sigma;
  ec.energy_epsilon = c.ensemble.energy_epsilon;
  EnsembleResult res = run_ensemble(f0, ec);
  for (const auto& rec : res.records) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04d.csv", rec.realization);
    write_step_log(path_in(c, name), rec.log);
  }
  {
    io::CsvWriter series(path_in(c, "series.csv"), {"realization", "t", "mass", "L2", "Hs0m0_norm", "E_sigma", "theta_R"});
    for (const auto& rec : res.records)
      for (const auto& p : rec.series)
        series.row(std::vector<double>{static_cast<double>(rec.realization), p.t, p.mass, p.l2, p.norm, p.e_sigma, p.theta});
  }
  write_ensemble_summary(path_in(c, "summary.json"), ec, res.summary);
  for (const auto& [id, msg] : res.summary.failures) err << "realization " << id << " failed: " << msg << "\n";
  if (res.summary.completed == 0) fail(ErrorKind::EmptySummary, "every realization failed");
  out << "ensemble completed=" << res.summary.completed << "/" << res.summary.realizations
      << " max_mass_drift=" << fmt(res.summary.max_mass_drift) << " l2_bound_ok=" << (res.summary.l2_bound_ok ? 1 : 0)
      << "\n";
  return kExitOk;
}

int cmd_picard(const RunConfig& c, std::ostream& out, std::ostream& err) {
  io::ensure_directory(c.output.dir);
  const DistributionField f0 = make_initial(c);
  PicardConfig pc;
  pc.j_max = c.picard.j_max;
  pc.T = c.picard.T;
  pc.delta = c.picard.delta;
  pc.backend = c.picard.backend;
  pc.plan = c.solver.plan;
  pc.fk_replicas = c.picard.fk_replicas;
  pc.fk_seed = c.solver.fk_seed;
  pc.compare_direct = c.picard.compare_direct;
  pc.validate();
  auto noise = make_noise(c, pc.steps());
  PicardResult res = run_iteration(f0, pc, noise);
  const auto& rep = res.report;
  write_picard_report(path_in(c, "picard_report.csv"), rep);
  json residuals = json::array();
  for (double r : rep.fit.residuals) residuals.push_back(finite_or_null(r));
  json j{{"kind", "picard_report"},
         {"j_max", pc.j_max},
         {"T", pc.T},
         {"delta", pc.delta},
         {"completed_iterates", rep.completed_iterates},
         {"cauchy_flag", rep.cauchy_flag},
         {"degenerate", rep.fit.degenerate},
         {"notice", rep.fit.notice},
         {"k0t_fit", rep.fit.k0t},
         {"k0_fit", rep.fit.k0},
         {"log_prefactor_fit", rep.fit.log_prefactor},
         {"residuals", residuals},
         {"max_norm_s0_plus_1", rep.max_norm},
         {"direct_gap", finite_or_null(rep.direct_gap < 0 ? NAN : rep.direct_gap)},
         {"aborted", rep.aborted},
         {"abort_reason", rep.abort_reason},
         {"warnings", warnings_json(rep.warnings)}};
  io::write_text(path_in(c, "picard_summary.json"), j.dump(2) + "\n");
  if (!rep.fit.notice.empty()) out << "notice: " << rep.fit.notice << "\n";
  if (rep.aborted) err << "iteration stopped: " << rep.abort_reason << "\n";
  out << "picard iterates=" << rep.completed_iterates << " cauchy_flag=" << (rep.cauchy_flag ? 1 : 0);
  if (!rep.diffs.empty()) out << " d_1=" << fmt(rep.diffs.front()) << " d_last=" << fmt(rep.diffs.back());
  out << "\n";
  return kExitOk;
}

int cmd_hypo(const RunConfig& c, std::ostream& out, std::ostream& err) {
  io::ensure_directory(c.output.dir);
  const auto& h = c.hypo;
  const EnergyCoefficients k = choose_constants(h.epsilon);
  const auto checks = check_constants(k);
  json constants{{"epsilon", k.epsilon}, {"theta", k.theta}, {"m2", k.m2}, {"m3", k.m3},
                 {"a", k.a}, {"b", k.b}, {"c", k.c}, {"admissible", admissible(k)}};
  json cj = json::array();
  for (const auto& ch : checks)
    cj.push_back({{"name", ch.name}, {"lhs", ch.lhs}, {"rhs", ch.rhs}, {"holds", ch.holds}, {"slack", ch.slack}});
  constants["checks"] = cj;

  std::vector<double> times;
  for (int i = 0; i < h.samples; ++i)
    times.push_back(h.t_min * std::pow(h.t_max / h.t_min, static_cast<double>(i) / (h.samples - 1)));

  std::vector<EnergyTraceRow> rows;
  double initial_sq = 0.0;
  if (h.source == "propagator") {
    const auto prop = LinearKfpPropagator::rough(h.nu, h.log2_kmax, h.amplitude);
    if (h.m != 0.0) err << "warning: the propagator reports unweighted norms; hypo.m ignored\n";
    initial_sq = prop.sobolev_squared(0.0, h.sigma);
    for (double t : times) {
      EnergyTraceRow r;
      r.t = t;
      r.energy = prop.energy(t, k, h.sigma);
      r.dissipation = prop.dissipation(t, k, h.sigma);
      r.grad_x_norm = std::sqrt(prop.derivative_squared(t, h.sigma + 1, 0));
      r.grad_v_norm = std::sqrt(prop.derivative_squared(t, 0, h.sigma + 1));
      rows.push_back(std::move(r));
    }
  } else {
    const DistributionField f0 = make_initial(c);
    initial_sq = weighted_sobolev_norm_squared(f0, {h.sigma, h.m});
    StepPlan plan = c.solver.plan;
    plan.nu = h.nu;
    plan.self_field = false;
    std::vector<std::uint64_t> want;
    for (double t : times) want.push_back(std::max<std::uint64_t>(1, step_of(t, plan.dt)));
    want.erase(std::unique(want.begin(), want.end()), want.end());
    if (want.size() < 8)
      fail(ErrorKind::Config, "hypo.samples: sample times fall on fewer than 8 distinct solver steps; reduce solver.dt");
    RunOptions opts;
    opts.steps = want.back();
    opts.cadence = opts.steps;
    opts.observer = [&](const SolverState& st, const StepRecord&) {
      if (std::find(want.begin(), want.end(), st.step_index) == want.end()) return;
      if (!rows.empty() && rows.back().t == st.f.time) return;
      EnergyTraceRow r;
      r.t = st.f.time;
      r.energy = energy_Esigma(r.t, st.f, k, h.sigma, h.m);
      r.dissipation = dissipation_Dsigma(r.t, st.f, k, h.sigma, h.m);
      r.grad_x_norm = gradient_tensor_norm(st.f, false, h.sigma + 1, h.m);
      r.grad_v_norm = gradient_tensor_norm(st.f, true, h.sigma + 1, h.m);
      rows.push_back(std::move(r));
    };
    RunResult run = run_eulerian(f0, plan, nullptr, opts);
    if (run.aborted) {
      err << "numeric abort: " << run.abort_reason << "\n";
      return kExitNumeric;
    }
  }
  write_energy_trace(path_in(c, "energy_trace.csv"), h.sigma, rows);

  std::vector<double> ts, nx, nv;
  double sup_e = 0.0;
  for (const auto& r : rows) {
    ts.push_back(r.t);
    nx.push_back(r.grad_x_norm);
    nv.push_back(r.grad_v_norm);
    sup_e = std::max(sup_e, r.energy.total);
  }
  const RateFit fx = regularization_rate_fit(ts, nx);
  const RateFit fv = regularization_rate_fit(ts, nv);
  auto fit_json = [](const RateFit& f) {
    return json{{"slope", f.slope}, {"intercept", f.intercept}, {"residual_rms", f.residual_rms}, {"residuals", f.residuals}};
  };
  json report{{"kind", "hypo_report"},
              {"source", h.source},
              {"sigma", h.sigma},
              {"m", h.m},
              {"nu", h.nu},
              {"constants", constants},
              {"rate_fit", {{"grad_x", fit_json(fx)}, {"grad_v", fit_json(fv)}}},
              {"sup_E_sigma", sup_e},
              {"initial_norm_sq", initial_sq},
              {"energy_bound_ok", sup_e <= 10.0 * initial_sq}};
  io::write_text(path_in(c, "hypo_report.json"), report.dump(2) + "\n");
  out << "hypo admissible=" << (admissible(k) ? 1 : 0) << " grad_x_slope=" << fmt(fx.slope)
      << " grad_v_slope=" << fmt(fv.slope) << " sup_E_sigma=" << fmt(sup_e) << "\n";
  return kExitOk;
}

int cmd_convergence(const RunConfig& c, std::ostream& out, std::ostream& err) {
  io::ensure_directory(c.output.dir);
  const auto& cv = c.convergence;
  const DistributionField f0 = make_initial(c);
  const StepPlan base = c.solver.plan;
  const double dt0 = base.dt;
  const int L = cv.dt_levels;
  const double dt_ref = std::ldexp(dt0, -L);
  {
    const double n = cv.t_final / dt0;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
      fail(ErrorKind::Config, "convergence.t_final: must be a multiple of solver.dt");
  }
  auto solve = [&](const DistributionField& init, double dt, std::uint64_t stride, double base_dt) {
    StepPlan plan = base;
    plan.dt = dt;
    const auto steps = static_cast<std::uint64_t>(std::llround(cv.t_final / dt));
    NoisePath path{c.noise.seed, c.noise.realization, base_dt, stride, steps};
    auto noise = std::make_shared<NoiseSource>(c.noise.spec, path);
    RunOptions opts;
    opts.steps = steps;
    opts.cadence = std::max<std::uint64_t>(steps, 1);
    RunResult run = run_eulerian(init, plan, noise, opts);
    if (run.aborted) fail(ErrorKind::NumericAbort, "convergence run aborted: " + run.abort_reason);
    return run.final_state.f;
  };
  auto l2_diff = [](const DistributionField& a, const DistributionField& b) {
    DistributionField d(a.grid);
    for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
    return l2_norm(d);
  };

  struct Row {
    std::string kind;
    double parameter, error, order;
    bool exact;
  };
  std::vector<Row> rows;
  const DistributionField ref = solve(f0, dt_ref, 1, dt_ref);
  const double floor = 1e-12 * std::max(1.0, l2_norm(ref));
  for (int i = 0; i < L; ++i) {
    const double dt = std::ldexp(dt0, -i);
    const auto stride = static_cast<std::uint64_t>(1) << (L - i);
    const double e = l2_diff(solve(f0, dt, stride, dt_ref), ref);
    const double order = rows.empty() ? NAN : std::log2(rows.back().error / e);
    rows.push_back({"dt", dt, e, order, e <= floor});
  }

  if (!cv.nx_levels.empty()) {
    const std::size_t nref = 2 * *std::max_element(cv.nx_levels.begin(), cv.nx_levels.end());
    auto at_grid = [&](std::size_t nx) {
      RunConfig cc = c;
      cc.grid.nx = nx;
      return make_initial(cc);
    };
    const DistributionField fine = solve(at_grid(nref), dt0, 1, dt0);
    double prev = NAN;
    for (std::size_t nx : cv.nx_levels) {
      const DistributionField coarse = solve(at_grid(nx), dt0, 1, dt0);
      const std::size_t r = nref / nx;
      DistributionField sub(coarse.grid);
      const std::size_t nv = coarse.grid.velocity_size();
      for (std::size_t s = 0; s < coarse.grid.spatial_size(); ++s) {
        // coarse spatial node -> fine spatial node with every index scaled by r
        std::size_t rest = s, fine_s = 0, mul = 1;
        for (int a = 0; a < coarse.grid.dim; ++a) {
          fine_s += (rest % nx) * r * mul;
          rest /= nx;
          mul *= nref;
        }
        for (std::size_t j = 0; j < nv; ++j) sub.at(s, j) = fine.at(fine_s, j);
      }
      const double e = l2_diff(coarse, sub);
      rows.push_back({"nx", static_cast<double>(nx), e, std::isnan(prev) ? NAN : std::log2(prev / e), e <= floor});
      prev = e;
    }
  }

  io::CsvWriter table(path_in(c, "convergence.csv"), {"kind", "parameter", "error", "order", "flag"});
  for (const auto& r : rows) table.row(std::vector<std::string>{r.kind, fmt(r.parameter), fmt(r.error), fmt(r.order), r.exact ? "exact" : ""});

  auto fitted = [&](const std::string& kind) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
      if (r.kind == kind && !r.exact && r.error > 0.0) {
        xs.push_back(std::log(r.parameter));
        ys.push_back(std::log(r.error));
      }
    if (xs.size() < 2) return json(nullptr);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    return json(kind == "nx" ? -slope : slope);
  };
  const bool dt_exact = std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.kind != "dt" || r.exact; });
  json summary{{"kind", "convergence"},
               {"dt_order", fitted("dt")},
               {"nx_order", fitted("nx")},
               {"dt_all_exact", dt_exact},
               {"floor", floor}};
  io::write_text(path_in(c, "convergence_summary.json"), summary.dump(2) + "\n");
  (void)err;
  out << "convergence rows=" << rows.size() << " dt_order=" << summary["dt_order"].dump()
      << " dt_all_exact=" << (dt_exact ? 1 : 0) << "\n";
  return kExitOk;
}

std::vector<std::string> command_names() { return {"run", "ensemble", "picard", "hypo", "convergence"}; }

int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, int (*)(const RunConfig&, std::ostream&, std::ostream&)> table{
      {"run", cmd_run}, {"ensemble", cmd_ensemble}, {"picard", cmd_picard}, {"hypo", cmd_hypo}, {"convergence", cmd_convergence}};
  const auto it = table.find(name);
  if (it == table.end()) {
    err << "error: unknown subcommand " << name << "\n";
    return kExitConfig;
  }
  try {
    std::vector<std::string> overrides = options.overrides;
    if (options.seed) {
      overrides.push_back("noise.seed=" + std::to_string(*options.seed));
      overrides.push_back("ensemble.base_seed=" + std::to_string(*options.seed));
    }
    if (options.output_dir) overrides.push_back("output.dir=" + json(*options.output_dir).dump());
    set_num_threads(options.threads > 0 ? options.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    const RunConfig config = load_config(options.config_path, overrides);
    if (name != "run" && std::find(config.sections.begin(), config.sections.end(), name) == config.sections.end())
      fail(ErrorKind::Config, name + ": section required by this subcommand is missing");
    return it->second(config, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::NanInput:
      case ErrorKind::ShiftTooLarge:
      case ErrorKind::NumericAbort:
      case ErrorKind::EmptySummary:
        return kExitNumeric;
      default:
        return kExitConfig;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace svpfp

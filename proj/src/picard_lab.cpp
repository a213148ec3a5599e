#include "svpfp/picard_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svpfp/io.hpp"
#include "svpfp/lagrangian_solver.hpp"

namespace svpfp {

namespace {

constexpr double kRoundOff = 1e-12;

double diff_norm(const DistributionField& a, const DistributionField& b, const WeightedNormSpec& spec) {
  DistributionField d(a.grid);
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] = a.values[i] - b.values[i];
  return weighted_sobolev_norm(d, spec);
}

}  // namespace

std::uint64_t PicardConfig::steps() const {
  return static_cast<std::uint64_t>(std::llround(T / plan.dt));
}

void PicardConfig::validate() const {
  if (j_max < 2) fail(ErrorKind::Config, "picard.j_max must be >= 2");
  if (!(T > 0.0)) fail(ErrorKind::Config, "picard.T must be positive");
  if (!(delta > 0.0 && delta < 1.0 / 6.0)) fail(ErrorKind::Config, "picard.delta must lie in (0, 1/6)");
  plan.validate();
  const double n = T / plan.dt;
  if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n))
    fail(ErrorKind::Config, "picard.T must be a multiple of solver.dt");
  if (fk_replicas < 1) fail(ErrorKind::Config, "picard.fk_replicas must be >= 1");
}

EnvelopeFit fit_envelope(const std::vector<double>& diffs, double T, double delta) {
  EnvelopeFit fit;
  const std::size_t J = diffs.size();
  for (double d : diffs)
    if (!(d >= 0.0)) fail(ErrorKind::Domain, "differences must be nonnegative");
  if (J == 0) fail(ErrorKind::Domain, "no differences to fit");

  const double d1 = diffs[0];
  fit.envelope.resize(J);
  fit.ratio.resize(J);
  for (std::size_t i = 0; i < J; ++i) {
    const double j = static_cast<double>(i + 1);
    fit.envelope[i] = d1 * std::exp(4.0 * delta * j * std::log(j) - std::lgamma(j + 1.0));
    fit.ratio[i] = diffs[i] > 0.0 ? fit.envelope[i] / diffs[i] : std::numeric_limits<double>::infinity();
  }
  fit.residuals.assign(J, std::numeric_limits<double>::quiet_NaN());

  if (std::all_of(diffs.begin(), diffs.end(), [](double d) { return d <= kRoundOff; })) {
    fit.degenerate = true;
    fit.notice = "degenerate fit: every difference is at round-off (trivial convergence)";
    return fit;
  }
  std::vector<double> xs, ys;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < J; ++i) {
    if (diffs[i] <= 0.0) continue;
    const double j = static_cast<double>(i + 1);
    xs.push_back(j);
    ys.push_back(std::log(diffs[i]) - 4.0 * delta * j * std::log(j) + std::lgamma(j + 1.0));
    idx.push_back(i);
  }
  if (xs.size() < 3) {
    fit.degenerate = true;
    fit.notice = "degenerate fit: fewer than three nonzero differences";
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  fit.log_prefactor = my - slope * mx;
  fit.k0t = std::exp(slope);
  fit.k0 = fit.k0t / T;
  for (std::size_t i = 0; i < xs.size(); ++i) fit.residuals[idx[i]] = ys[i] - (fit.log_prefactor + slope * xs[i]);
  return fit;
}

PicardResult run_iteration(const DistributionField& f0, const PicardConfig& config,
                           std::shared_ptr<const NoiseSource> noise) {
  config.validate();
  const std::uint64_t steps = config.steps();
  StepPlan plan = config.plan;
  const WeightedNormSpec norm = plan.cutoff_norm;
  const WeightedNormSpec norm_up{norm.sigma + 1, norm.m};
  PicardResult result;
  PicardReport& rep = result.report;

  std::vector<DistributionField> prev_traj;
  std::vector<DriftEvaluation> prev_drift;

  for (int j = 0; j <= config.j_max; ++j) {
    std::vector<DistributionField> traj;
    traj.reserve(steps + 1);
    std::vector<DriftEvaluation> drift(steps);
    bool ok = true;

    if (config.backend == PicardBackend::Eulerian) {
      FieldProvider provider = [&](const DistributionField& f, std::uint64_t n) {
        DriftEvaluation own = evaluate_drift(f, plan);
        DriftEvaluation use;
        if (j > 0) {
          use = prev_drift[n];
        } else {
          use.norm = own.norm;
          use.theta = own.theta;
        }
        use.warnings = own.warnings;
        drift[n] = std::move(own);
        return use;
      };
      RunOptions opts;
      opts.steps = steps;
      opts.cadence = std::max<std::uint64_t>(steps, 1);
      opts.observer = [&](const SolverState& s, const StepRecord&) { traj.push_back(s.f); };
      RunResult run = run_eulerian(f0, plan, noise, opts, provider);
      for (auto& w : run.warnings)
        if (!has_warning(rep.warnings, w.code)) rep.warnings.push_back(w);
      if (run.aborted) {
        rep.aborted = true;
        rep.abort_reason = "iterate " + std::to_string(j) + ": " + run.abort_reason;
        ok = false;
      }
    } else {
      // Drift of the previous iterate at every step time.
      std::vector<std::unique_ptr<TrigField>> fields(steps);
      if (j > 0)
        for (std::uint64_t n = 0; n < steps; ++n)
          if (!prev_drift[n].accel.empty()) fields[n] = std::make_unique<TrigField>(f0.grid, prev_drift[n].accel);
      DriftSchedule schedule = [&](std::uint64_t n) -> const TrigField* {
        return n < fields.size() ? fields[n].get() : nullptr;
      };
      FeynmanKacConfig fk{config.fk_replicas, plan.nu, config.fk_seed, PushScheme::StratonovichHeun};
      traj.push_back(f0);
      try {
        for (std::uint64_t n = 1; n <= steps; ++n) {
          auto res = feynman_kac_density(f0, noise.get(), n, plan.dt, fk, schedule);
          for (auto& w : res.warnings)
            if (!has_warning(rep.warnings, w.code)) rep.warnings.push_back(w);
          check_finite(res.field.values, "feynman-kac iterate");
          traj.push_back(std::move(res.field));
        }
        for (std::uint64_t n = 0; n < steps; ++n) drift[n] = evaluate_drift(traj[n], plan);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NanInput) throw;
        rep.aborted = true;
        rep.abort_reason = "iterate " + std::to_string(j) + ": " + e.what();
        ok = false;
      }
    }
    if (!ok) break;

    for (const auto& f : traj) rep.max_norm = std::max(rep.max_norm, weighted_sobolev_norm(f, norm_up));
    if (j > 0) {
      double d = 0.0;
      for (std::size_t n = 0; n < traj.size(); ++n) d = std::max(d, diff_norm(traj[n], prev_traj[n], norm));
      rep.diffs.push_back(d);
    }
    result.finals.push_back(traj.back());
    rep.completed_iterates = j + 1;
    prev_drift = std::move(drift);
    if (config.keep_trajectories) result.trajectories.push_back(traj);
    prev_traj = std::move(traj);
  }

  if (!rep.diffs.empty()) {
    rep.fit = fit_envelope(rep.diffs, config.T, config.delta);
    bool decreasing = true;
    for (std::size_t i = 1; i < rep.diffs.size(); ++i) decreasing = decreasing && rep.diffs[i] < rep.diffs[i - 1];
    bool dominated = true;
    for (std::size_t i = 1; i < rep.diffs.size(); ++i) dominated = dominated && rep.fit.ratio[i] >= 1.0;
    rep.cauchy_flag = !rep.fit.degenerate && decreasing && dominated;
  }

  if (config.compare_direct && !rep.aborted && !result.finals.empty()) {
    RunOptions opts;
    opts.steps = steps;
    opts.cadence = std::max<std::uint64_t>(steps, 1);
    RunResult direct = run_eulerian(f0, plan, noise, opts);
    if (!direct.aborted) rep.direct_gap = diff_norm(result.finals.back(), direct.final_state.f, norm);
  }
  return result;
}

std::vector<std::string> picard_report_header() { return {"j", "d_j", "envelope_j", "ratio_j"}; }

void write_picard_report(const std::string& path, const PicardReport& report) {
  io::CsvWriter out(path, picard_report_header());
  for (std::size_t i = 0; i < report.diffs.size(); ++i) {
    const double env = i < report.fit.envelope.size() ? report.fit.envelope[i] : 0.0;
    const double ratio = i < report.fit.ratio.size() ? report.fit.ratio[i] : 0.0;
    out.row(std::vector<double>{static_cast<double>(i + 1), report.diffs[i], env, ratio});
  }
}

}  // namespace svpfp

#include "svpfp/ensemble_runner.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <memory>

#include "svpfp/io.hpp"
#include "svpfp/rng.hpp"

namespace svpfp {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double nearest_rank(std::vector<double> xs, double q) {
  if (xs.empty()) return kInf;
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(q * n) - 1.0));
  return xs[std::min(idx, xs.size() - 1)];
}

}  // namespace

void EnsembleConfig::validate() const {
  if (realizations < 1) fail(ErrorKind::Config, "ensemble.realizations must be >= 1");
  if (cadence < 1) fail(ErrorKind::Config, "ensemble.cadence must be >= 1");
  if (noise_substeps < 1) fail(ErrorKind::Config, "noise.substeps must be >= 1");
  if (bootstrap_samples < 1) fail(ErrorKind::Config, "ensemble.bootstrap must be >= 1");
  for (double p : moments)
    if (!(p > 0.0)) fail(ErrorKind::Config, "ensemble.moments must be positive");
  plan.validate();
}

std::vector<double> detect_stopping(const std::vector<double>& times, const std::vector<double>& norms,
                                    const std::vector<double>& levels) {
  if (times.size() != norms.size()) fail(ErrorKind::Shape, "times and norms differ in length");
  std::vector<double> out;
  out.reserve(levels.size());
  for (double level : levels) {
    double tau = kInf;
    for (std::size_t i = 0; i < times.size(); ++i)
      if (norms[i] > level) {
        tau = times[i];
        break;
      }
    out.push_back(tau);
  }
  return out;
}

std::vector<MomentRow> moment_summary(const std::vector<RunRecord>& records, const std::vector<double>& ps,
                                      int bootstrap_samples, std::uint64_t seed) {
  std::vector<double> sups;
  for (const auto& r : records)
    if (r.completed) sups.push_back(r.sup_norm);
  if (sups.empty()) fail(ErrorKind::EmptySummary, "no completed realizations to summarize");
  const std::size_t n = sups.size();
  const rng::Key key = rng::make_key(seed, 0xB007);
  std::vector<MomentRow> rows;
  for (double p : ps) {
    MomentRow row;
    row.p = p;
    row.count = n;
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
      vals[i] = std::pow(sups[i], p);
      row.mean += vals[i];
      row.max = std::max(row.max, vals[i]);
    }
    row.mean /= static_cast<double>(n);
    if (n < 2) {
      row.ci_low = row.ci_high = row.mean;
    } else {
      std::vector<double> means(static_cast<std::size_t>(bootstrap_samples));
      for (std::size_t b = 0; b < means.size(); ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto pick = std::min(n - 1, static_cast<std::size_t>(rng::uniform(key, rng::kSampling, b, i) * static_cast<double>(n)));
          s += vals[pick];
        }
        means[b] = s / static_cast<double>(n);
      }
      row.ci_low = nearest_rank(means, 0.025);
      row.ci_high = nearest_rank(means, 0.975);
    }
    rows.push_back(row);
  }
  return rows;
}

EnsembleResult run_ensemble(const DistributionField& f0, const EnsembleConfig& config) {
  config.validate();
  EnsembleResult result;
  const auto M = static_cast<std::size_t>(config.realizations);
  result.records.resize(M);
  const EnergyCoefficients coeffs = choose_constants(config.energy_epsilon);
  const double l2_0 = l2_norm(f0);
  const double dnu = static_cast<double>(f0.grid.dim) * config.plan.nu;

  parallel_for(M, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      RunRecord& rec = result.records[r];
      rec.realization = static_cast<int>(r);
      try {
        NoisePath path{config.base_seed, r, config.plan.dt / static_cast<double>(config.noise_substeps),
                       config.noise_substeps, config.steps};
        auto noise = std::make_shared<NoiseSource>(config.noise, path);
        RunOptions opts;
        opts.steps = config.steps;
        opts.cadence = config.cadence;
        opts.observer = [&](const SolverState& s, const StepRecord& sr) {
          const double t = s.f.time;
          if (sr.l2 > std::exp(dnu * t) * l2_0 * (1.0 + 1e-6)) rec.l2_bound_ok = false;
          if (s.step_index % config.cadence != 0 && s.step_index != config.steps) return;
          SeriesPoint pt;
          pt.t = t;
          pt.mass = sr.mass;
          pt.l2 = sr.l2;
          pt.norm = weighted_sobolev_norm(s.f, config.stopping_norm);
          pt.e_sigma = energy_Esigma(t, s.f, coeffs, config.energy_sigma, config.energy_m).total;
          pt.theta = sr.theta;
          rec.series.push_back(pt);
        };
        RunResult run = run_eulerian(f0, config.plan, noise, opts);
        rec.log = std::move(run.log);
        rec.max_mass_drift = run.max_mass_drift;
        rec.invalid = run.invalid;
        rec.completed = !run.aborted;
        if (run.aborted) rec.failure = run.abort_reason;
      } catch (const std::exception& e) {
        rec.completed = false;
        rec.failure = e.what();
      }
      std::vector<double> ts, ns;
      for (const auto& p : rec.series) {
        ts.push_back(p.t);
        ns.push_back(p.norm);
        rec.sup_norm = std::max(rec.sup_norm, p.norm);
      }
      rec.stopping_times = detect_stopping(ts, ns, config.stopping_levels);
    }
  });

  EnsembleSummary& s = result.summary;
  s.realizations = config.realizations;
  double sum_sq = 0.0;
  for (const auto& rec : result.records) {
    if (rec.completed) {
      ++s.completed;
      sum_sq += rec.sup_norm * rec.sup_norm;
    } else {
      s.failures.emplace_back(rec.realization, rec.failure);
    }
    s.max_mass_drift = std::max(s.max_mass_drift, rec.max_mass_drift);
    s.l2_bound_ok = s.l2_bound_ok && rec.l2_bound_ok;
  }
  if (s.completed > 0) {
    s.mean_sup_norm_sq = sum_sq / s.completed;
    s.moments = moment_summary(result.records, config.moments, config.bootstrap_samples, config.base_seed);
  }
  for (std::size_t l = 0; l < config.stopping_levels.size(); ++l) {
    StoppingSummary st;
    st.level = config.stopping_levels[l];
    std::vector<double> taus;
    std::size_t hits = 0;
    for (const auto& rec : result.records) {
      if (rec.series.empty()) continue;
      taus.push_back(rec.stopping_times[l]);
      if (std::isfinite(rec.stopping_times[l])) ++hits;
    }
    st.hit_fraction = taus.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(taus.size());
    st.q10 = nearest_rank(taus, 0.1);
    st.q50 = nearest_rank(taus, 0.5);
    st.q90 = nearest_rank(taus, 0.9);
    s.stopping.push_back(st);
  }
  return result;
}

void write_ensemble_summary(const std::string& path, const EnsembleConfig& config, const EnsembleSummary& s) {
  json j;
  j["kind"] = "ensemble_summary";
  j["realizations"] = s.realizations;
  j["completed"] = s.completed;
  j["base_seed"] = config.base_seed;
  j["steps"] = config.steps;
  j["dt"] = config.plan.dt;
  j["nu"] = config.plan.nu;
  j["stopping_norm"] = {{"s0", config.stopping_norm.sigma}, {"m0", config.stopping_norm.m}};
  json fails = json::array();
  for (const auto& [id, msg] : s.failures) fails.push_back({{"realization", id}, {"reason", msg}});
  j["failures"] = fails;
  json stop = json::array();
  for (const auto& st : s.stopping)
    stop.push_back({{"level", st.level},
                    {"hit_fraction", st.hit_fraction},
                    {"q10", finite_or_null(st.q10)},
                    {"q50", finite_or_null(st.q50)},
                    {"q90", finite_or_null(st.q90)}});
  j["stopping_times"] = stop;
  json mom = json::array();
  for (const auto& m : s.moments)
    mom.push_back({{"p", m.p}, {"mean", m.mean}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}, {"max", m.max}, {"count", m.count}});
  j["moments"] = mom;
  j["max_mass_drift"] = s.max_mass_drift;
  j["l2_bound_ok"] = s.l2_bound_ok;
  j["mean_sup_norm_sq"] = s.mean_sup_norm_sq;
  io::write_text(path, j.dump(2) + "\n");
}

}  // namespace svpfp

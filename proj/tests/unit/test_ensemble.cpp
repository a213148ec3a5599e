#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "svpfp/common.hpp"
#include "svpfp/ensemble_runner.hpp"
#include "svpfp/io.hpp"

using namespace svpfp;

namespace {

double M(double v) { return std::exp(-0.5 * v * v) / std::sqrt(kTwoPi); }

DistributionField initial() {
  GridSpec g;
  g.nx = 16;
  g.nv = 64;
  g.vmax = 12.0;
  return DistributionField::from_function(g, [](auto x, auto v) { return (1 + 0.1 * std::cos(x[0])) * M(v[0]); });
}

EnsembleConfig config(int m) {
  EnsembleConfig c;
  c.realizations = m;
  c.base_seed = 5;
  c.plan.dt = 0.02;
  c.noise.max_wavenumber = 2;
  c.noise.amplitude = 0.3;
  c.noise.power = 2.0;
  c.steps = 20;
  c.cadence = 2;
  c.bootstrap_samples = 100;
  return c;
}

}  // namespace

TEST_CASE("stopping times") {
  const std::vector<double> t{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const std::vector<double> flat(t.size(), 1.0);
  for (double s : detect_stopping(t, flat, {2.0, 3.0})) CHECK(std::isinf(s));
  std::vector<double> ramp;
  for (double x : t) ramp.push_back(x < 0.5 ? 1.0 : (x < 0.7 ? 2.5 : 3.5));
  const auto s = detect_stopping(t, ramp, {2.0, 3.0});
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.7));
  // half cadence
  std::vector<double> t2, r2;
  for (std::size_t i = 0; i < t.size(); i += 2) {
    t2.push_back(t[i]);
    r2.push_back(ramp[i]);
  }
  const auto s2 = detect_stopping(t2, r2, {2.0, 3.0});
  for (int i = 0; i < 2; ++i) CHECK(std::abs(s2[i] - s[i]) <= 0.2 + 1e-12);
}

TEST_CASE("moment summary") {
  RunRecord r;
  r.completed = true;
  r.sup_norm = 2.0;
  const auto m = moment_summary({r}, {2.0}, 100, 1);
  REQUIRE(m.size() == 1);
  CHECK(m[0].mean == doctest::Approx(4.0));
  CHECK(m[0].ci_low == m[0].ci_high);
  RunRecord bad;
  bad.completed = false;
  CHECK_THROWS_AS(moment_summary({bad}, {2.0}), Error);
}

TEST_CASE("single realization matches a direct run") {
  const auto f0 = initial();
  const auto c = config(1);
  const auto e = run_ensemble(f0, c);
  auto nz = std::make_shared<NoiseSource>(c.noise, NoisePath{c.base_seed, 0, c.plan.dt, 1, c.steps});
  RunOptions o;
  o.steps = c.steps;
  o.cadence = c.cadence;
  const auto d = run_eulerian(f0, c.plan, nz, o);
  REQUIRE(e.records.size() == 1);
  REQUIRE(e.records[0].log.size() == d.log.size());
  for (std::size_t i = 0; i < d.log.size(); ++i) {
    CHECK(e.records[0].log[i].l2 == d.log[i].l2);
    CHECK(e.records[0].log[i].mass == d.log[i].mass);
  }
}

TEST_CASE("zero coloring makes every realization identical") {
  auto c = config(4);
  c.noise.law = ColoringLaw::None;
  const auto e = run_ensemble(initial(), c);
  for (const auto& r : e.records) CHECK(r.sup_norm == e.records[0].sup_norm);
  for (const auto& m : e.summary.moments) CHECK(m.ci_low == doctest::Approx(m.ci_high));
}

TEST_CASE("power means are ordered and the run is thread independent") {
  auto c = config(6);
  c.moments = {2.0, 4.0};
  set_num_threads(1);
  const auto a = run_ensemble(initial(), c);
  set_num_threads(3);
  const auto b = run_ensemble(initial(), c);
  set_num_threads(1);
  REQUIRE(a.summary.moments.size() == 2);
  CHECK(std::pow(a.summary.moments[1].mean, 0.25) >= std::pow(a.summary.moments[0].mean, 0.5));
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].sup_norm == b.records[i].sup_norm);
  CHECK(a.summary.moments[0].ci_low == b.summary.moments[0].ci_low);
  const auto path = (std::filesystem::temp_directory_path() / "svpfp_summary.json").string();
  write_ensemble_summary(path, c, a.summary);
  CHECK(io::read_text(path).find("\"ensemble_summary\"") != std::string::npos);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "svpfp/common.hpp"
#include "svpfp/io.hpp"
#include "svpfp/picard_lab.hpp"

using namespace svpfp;

namespace {

double M(double v) { return std::exp(-0.5 * v * v) / std::sqrt(kTwoPi); }

GridSpec grid() {
  GridSpec g;
  g.nx = 16;
  g.nv = 64;
  g.vmax = 12.0;
  return g;
}

}  // namespace

TEST_CASE("synthetic sequence is dominated by the envelope") {
  std::vector<double> d;
  for (int j = 1; j <= 6; ++j) d.push_back(std::pow(2.0, -j) / std::tgamma(j + 1.0));
  const auto fit = fit_envelope(d, 0.25, 1.0 / 12.0);
  CHECK_FALSE(fit.degenerate);
  for (double r : fit.ratio) CHECK(r >= 1.0 - 1e-12);
  CHECK(fit.ratio.front() == doctest::Approx(1.0));
  // log d_j + log j! = -j log 2 is linear in j: residuals vanish up to the 4 delta j log j term
  CHECK(fit.residuals.size() == d.size());
}

TEST_CASE("degenerate fits") {
  const auto zero = fit_envelope({0, 0, 0, 0, 0}, 0.25, 1.0 / 12.0);
  CHECK(zero.degenerate);
  CHECK_FALSE(zero.notice.empty());
  const auto few = fit_envelope({1e-3, 1e-6}, 0.25, 1.0 / 12.0);
  CHECK(few.degenerate);
}

TEST_CASE("config validation") {
  PicardConfig c;
  c.T = 0.125;
  c.plan.dt = 0.01;
  CHECK_THROWS_AS(c.validate(), Error);
  c.T = 0.25;
  c.delta = 0.2;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("uniform density and inactive cutoff are trivial") {
  const auto g = grid();
  PicardConfig c;
  c.j_max = 4;
  c.T = 0.1;
  c.plan.dt = 0.02;
  const auto uniform = DistributionField::from_function(g, [](auto, auto v) { return M(v[0]); });
  const auto r = run_iteration(uniform, c, nullptr);
  REQUIRE(r.report.diffs.size() == 4);
  for (double d : r.report.diffs) CHECK(d <= 1e-12);
  CHECK(r.report.fit.degenerate);

  NoiseSpec s;
  s.max_wavenumber = 2;
  s.amplitude = 0.3;
  auto nz = std::make_shared<NoiseSource>(s, NoisePath{2, 0, 0.02, 1, 0});
  const auto f0 = DistributionField::from_function(g, [](auto x, auto v) { return (1 + 0.2 * std::cos(x[0])) * M(v[0]); });
  PicardConfig off = c;
  off.plan.cutoff.R = weighted_sobolev_norm(f0, off.plan.cutoff_norm) / 3.0;
  const auto z = run_iteration(f0, off, nz);
  for (double d : z.report.diffs) CHECK(d <= 1e-12);
}

TEST_CASE("perturbed Maxwellian converges and matches the direct solve") {
  const auto g = grid();
  PicardConfig c;
  c.j_max = 5;
  c.T = 0.2;
  c.plan.dt = 0.02;
  c.plan.cutoff.R = 1e6;
  c.compare_direct = true;
  NoiseSpec s;
  s.max_wavenumber = 2;
  s.amplitude = 0.2;
  auto nz = std::make_shared<NoiseSource>(s, NoisePath{9, 0, 0.02, 1, 0});
  const auto f0 = DistributionField::from_function(g, [](auto x, auto v) { return (1 + 0.05 * std::cos(x[0])) * M(v[0]); });
  const auto r = run_iteration(f0, c, nz);
  const auto& d = r.report.diffs;
  REQUIRE(d.size() == 5);
  for (std::size_t j = 1; j < d.size(); ++j) CHECK(d[j] < d[j - 1]);
  CHECK(d[4] / d[0] <= 1e-3);
  CHECK(r.report.cauchy_flag);
  CHECK(r.report.direct_gap >= 0.0);
  CHECK(r.report.direct_gap <= 10.0 * d.back() + 1e-10);

  const auto path = (std::filesystem::temp_directory_path() / "svpfp_picard.csv").string();
  write_picard_report(path, r.report);
  const auto t = io::read_csv(path);
  CHECK(t.header == picard_report_header());
  CHECK(t.rows.size() == 5);
  CHECK(t.number(0, "d_j") == doctest::Approx(d[0]));
}

TEST_CASE("Feynman-Kac backend agrees with the Eulerian backend") {
  const auto g = grid();
  PicardConfig c;
  c.j_max = 3;
  c.T = 0.1;
  c.plan.dt = 0.02;
  c.plan.cutoff.R = 1e6;
  const auto f0 = DistributionField::from_function(g, [](auto x, auto v) { return (1 + 0.05 * std::cos(x[0])) * M(v[0]); });
  const auto e = run_iteration(f0, c, nullptr);
  PicardConfig fk = c;
  fk.backend = PicardBackend::LagrangianFk;
  fk.fk_replicas = 1;
  const auto l = run_iteration(f0, fk, nullptr);
  REQUIRE(l.report.diffs.size() == 3);
  CHECK(l.report.diffs[0] == doctest::Approx(e.report.diffs[0]).epsilon(0.05));
}

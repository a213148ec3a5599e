#include <doctest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "svpfp/common.hpp"
#include "svpfp/eulerian_solver.hpp"
#include "svpfp/hypo_energy.hpp"

using namespace svpfp;

namespace {

GridSpec grid(std::size_t nx, std::size_t nv, double vmax) {
  GridSpec g;
  g.nx = nx;
  g.nv = nv;
  g.vmax = vmax;
  return g;
}

}  // namespace

TEST_CASE("admissible constants") {
  const auto k = choose_constants(0.5);
  CHECK(k.theta == std::pow(0.5, 8));
  CHECK(k.a == k.theta);
  CHECK(k.b == doctest::Approx(std::pow(k.theta, 1.5)).epsilon(1e-14));
  CHECK(k.c == doctest::Approx(std::pow(k.theta, 1.75)).epsilon(1e-14));
  for (double eps : {0.5, 0.25, 0.1, 0.05, 0.01}) {
    const auto kk = choose_constants(eps);
    const auto checks = check_constants(kk);
    CHECK(checks.size() == 6);
    for (const auto& c : checks) CHECK_MESSAGE(c.holds, c.name);
  }
  CHECK(choose_constants(0.1).theta == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK_THROWS_AS(choose_constants(1.5), Error);
  EnergyCoefficients bad = k;
  bad.b = 2 * bad.a;
  CHECK_FALSE(admissible(bad));
}

TEST_CASE("E1 special cases") {
  const auto g = grid(16, 64, 8.0);
  const auto k = choose_constants(0.5);
  const auto f = DistributionField::from_function(g, [](auto x, auto v) { return (1 + std::sin(x[0])) * std::exp(-v[0] * v[0]); });
  CHECK(energy_E1(0.0, f, k, 1.0) == doctest::Approx(weighted_l2_squared(g, f.values, 1.0)).epsilon(1e-14));
  const auto h = DistributionField::from_function(g, [](auto, auto v) { return std::exp(-v[0] * v[0]); });
  const auto t = e1_terms(h, 0.0);
  CHECK(std::abs(t.cross) <= 1e-14);
  CHECK(std::abs(t.grad_x) <= 1e-14);
  CHECK(energy_E1(0.3, h, k, 0.0) == doctest::Approx(t.l2 + k.a * 0.3 * t.grad_v).epsilon(1e-13));
  CHECK(energy_Esigma(0.3, f, k, 0, 0.0).total == doctest::Approx(energy_E1(0.3, f, k, 0.0)).epsilon(1e-14));
}

TEST_CASE("single-mode energy against quadrature") {
  const auto g = grid(16, 256, 8.0);
  const auto k = choose_constants(0.5);
  const double t = 0.4;
  auto h = [](double v) { return std::exp(-0.5 * v * v) * (1 + v); };
  auto h1 = [](double v) { return std::exp(-0.5 * v * v) * (1 - v - v * v); };
  auto h2 = [](double v) { return std::exp(-0.5 * v * v) * (-1 - 3 * v + v * v + v * v * v); };
  const double hh = oracle::simpson([&](double v) { return h(v) * h(v); }, -8, 8, 4000);
  const double h1h1 = oracle::simpson([&](double v) { return h1(v) * h1(v); }, -8, 8, 4000);
  // f = cos x h(v): ||f||^2 = ||f_x||^2 = pi hh, ||f_v||^2 = pi h1h1, no cross term
  const double expect = oracle::kPi * hh + k.a * t * oracle::kPi * h1h1 + k.c * t * t * t * oracle::kPi * hh;
  const auto f = DistributionField::from_function(g, [&](auto x, auto v) { return std::cos(x[0]) * h(v[0]); });
  CHECK(energy_E1(t, f, k, 0.0) == doctest::Approx(expect).epsilon(1e-8));
  const auto fc = DistributionField::from_function(g, [&](auto x, auto v) { return std::cos(x[0]) * h(v[0]) + std::sin(x[0]) * h1(v[0]); });
  const double cross = oracle::simpson2(
      [&](double x, double v) {
        const double dv = std::cos(x) * h1(v) + std::sin(x) * h2(v);
        const double dx = -std::sin(x) * h(v) + std::cos(x) * h1(v);
        return dv * dx;
      },
      0, 2 * oracle::kPi, -8, 8, 400, 2000);
  CHECK(e1_terms(fc, 0.0).cross == doctest::Approx(cross).epsilon(1e-8));
}

TEST_CASE("dissipation edge cases") {
  const auto g = grid(16, 64, 8.0);
  const auto k = choose_constants(0.5);
  const auto c = DistributionField::from_function(g, [](auto, auto) { return 2.0; });
  CHECK(std::abs(dissipation_Dsigma(0.5, c, k, 1, 0.0)) <= 1e-12);
  const auto f = DistributionField::from_function(g, [](auto x, auto v) { return std::cos(x[0]) * std::exp(-v[0] * v[0]); });
  const double gv = gradient_tensor_norm(f, true, 1, 0.0);
  CHECK(dissipation_Dsigma(0.0, f, k, 0, 0.0) == doctest::Approx(gv * gv).epsilon(1e-12));
}

TEST_CASE("energy equivalence on random fields") {
  const auto g = grid(16, 32, 6.0);
  const auto k = choose_constants(0.5);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    double c[6];
    for (auto& x : c) x = nd(gen);
    const auto f = DistributionField::from_function(g, [&](auto x, auto v) {
      return (c[0] + c[1] * std::cos(x[0]) + c[2] * std::sin(2 * x[0])) * std::exp(-0.5 * v[0] * v[0]) * (1 + c[3] * v[0] + c[4] * v[0] * v[0]);
    });
    for (double t : {0.01, 0.1, 1.0}) {
      const auto e = energy_Esigma(t, f, k, 1, 0.0);
      const double bf = bfree_sum(t, e, k);
      CHECK(e.total >= 0.5 * bf);
      CHECK(e.total <= 2.0 * bf);
    }
  }
}

TEST_CASE("rate fit") {
  std::vector<double> t, y;
  for (int i = 0; i < 10; ++i) {
    t.push_back(1e-3 * std::pow(10.0, i / 9.0 * 2));
    y.push_back(3.0 * std::pow(t.back(), -1.5));
  }
  const auto f = regularization_rate_fit(t, y);
  CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  y[2] = -1.0;
  CHECK_THROWS_AS(regularization_rate_fit(t, y), Error);
  CHECK_THROWS_AS(regularization_rate_fit({1, 2}, {1, 2}), Error);
}

TEST_CASE("propagator matches the grid solver") {
  const auto g = grid(16, 128, 10.0);
  std::vector<double> power{1.0, 0.3, 0.1, 0.05};
  const LinearKfpPropagator prop(0.5, power);
  const auto f0 = prop.sample(g, 3);
  CHECK(prop.l2_squared(0.0) == doctest::Approx(l2_norm(f0) * l2_norm(f0)).epsilon(1e-8));
  StepPlan plan;
  plan.dt = 0.0025;
  plan.nu = 0.5;
  plan.self_field = false;
  RunOptions o;
  o.steps = 80;
  o.cadence = 80;
  const auto r = run_eulerian(f0, plan, nullptr, o);
  const auto& f = r.final_state.f;
  const double t = 0.2;
  CHECK(prop.l2_squared(t) == doctest::Approx(l2_norm(f) * l2_norm(f)).epsilon(1e-6));
  const double gx = gradient_tensor_norm(f, false, 1, 0.0), gv = gradient_tensor_norm(f, true, 1, 0.0);
  CHECK(prop.derivative_squared(t, 1, 0) == doctest::Approx(gx * gx).epsilon(1e-6));
  CHECK(prop.derivative_squared(t, 0, 1) == doctest::Approx(gv * gv).epsilon(1e-6));
  const auto k = choose_constants(0.5);
  CHECK(prop.energy(t, k, 1).total == doctest::Approx(energy_Esigma(t, f, k, 1, 0.0).total).epsilon(1e-6));
  CHECK(prop.dissipation(t, k, 1) == doctest::Approx(dissipation_Dsigma(t, f, k, 1, 0.0)).epsilon(1e-6));
}

TEST_CASE("smooth data gives flat rates") {
  const LinearKfpPropagator prop(0.5, {1.0, 0.2});
  std::vector<double> t, gx;
  for (int i = 0; i < 10; ++i) {
    t.push_back(1e-3 * std::pow(100.0, i / 9.0));
    gx.push_back(std::sqrt(prop.derivative_squared(t.back(), 1, 0)));
  }
  CHECK(std::abs(regularization_rate_fit(t, gx).slope) <= 0.05);
}

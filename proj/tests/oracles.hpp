#pragma once

// Reference computations that share no code with the library.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double simpson2(const std::function<double(double, double)>& f, double x0, double x1, double y0, double y1,
                       int nx, int ny) {
  return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, y0, y1, ny); }, x0, x1, nx);
}

// Second-order periodic finite differences for -phi'' = rho - mean on m
// points, E = phi' by central differences.
inline std::vector<double> fd_field(const std::vector<double>& rho) {
  const std::size_t m = rho.size();
  const double h = 2.0 * kPi / static_cast<double>(m);
  double mean = 0.0;
  for (double r : rho) mean += r;
  mean /= static_cast<double>(m);
  // s_i = phi_{i+1} - phi_i, s_i - s_{i-1} = -h^2 (rho_i - mean)
  std::vector<double> s(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) s[i] = s[i - 1] - h * h * (rho[i] - mean);
  double shift = 0.0;
  for (double x : s) shift += x;
  shift /= static_cast<double>(m);
  for (double& x : s) x -= shift;
  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) phi[i] = phi[i - 1] + s[i - 1];
  std::vector<double> e(m);
  for (std::size_t i = 0; i < m; ++i) e[i] = (phi[(i + 1) % m] - phi[(i + m - 1) % m]) / (2.0 * h);
  return e;
}

// FD field at the nodes of an n-point grid, Richardson-extrapolated over
// grids of n * 2^base .. n * 2^(base+levels-1) points.
inline std::vector<double> fd_field_extrapolated(const std::function<double(double)>& rho, std::size_t n,
                                                 int base = 3, int levels = 6) {
  std::vector<std::vector<double>> table;
  for (int l = 0; l < levels; ++l) {
    const std::size_t r = std::size_t{1} << (base + l);
    const std::size_t m = n * r;
    std::vector<double> samples(m);
    for (std::size_t i = 0; i < m; ++i) samples[i] = rho(2.0 * kPi * static_cast<double>(i) / static_cast<double>(m));
    const auto e = fd_field(samples);
    std::vector<double> coarse(n);
    for (std::size_t i = 0; i < n; ++i) coarse[i] = e[i * r];
    table.push_back(coarse);
  }
  // error ~ c1 h^2 + c2 h^4 + ...
  for (int k = 1; k < levels; ++k) {
    const double f = std::pow(4.0, k);
    for (int l = levels - 1; l >= k; --l)
      for (std::size_t i = 0; i < n; ++i)
        table[l][i] = (f * table[l][i] - table[l - 1][i]) / (f - 1.0);
  }
  return table.back();
}

// Philox4x32-10 known-answer vectors (Random123 kat_vectors).
struct PhiloxKat {
  std::array<std::uint32_t, 4> ctr;
  std::array<std::uint32_t, 2> key;
  std::array<std::uint32_t, 4> out;
};

inline const std::array<PhiloxKat, 3>& philox_kats() {
  static const std::array<PhiloxKat, 3> k{{
      {{0, 0, 0, 0}, {0, 0}, {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}},
      {{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
       {0xffffffffu, 0xffffffffu},
       {0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}},
      {{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
       {0xa4093822u, 0x299f31d0u},
       {0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}},
  }};
  return k;
}

// Free transport with a frozen force a(x) and no noise, integrated by
// classical RK4 on a very fine step.
inline std::array<double, 2> rk4_characteristic(double x, double v, double t,
                                               const std::function<double(double)>& a, int steps) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1x = v, k1v = a(x);
    const double k2x = v + 0.5 * h * k1v, k2v = a(x + 0.5 * h * k1x);
    const double k3x = v + 0.5 * h * k2v, k3v = a(x + 0.5 * h * k2x);
    const double k4x = v + h * k3v, k4v = a(x + h * k3x);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return {x, v};
}

// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

}  // namespace oracle

#include "svpfp/lagrangian_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <json.hpp>

#include "svpfp/io.hpp"
#include "svpfp/rng.hpp"
#include "svpfp/spectral.hpp"

namespace svpfp {

using json = nlohmann::json;
using spectral::Complex;

namespace {

constexpr std::size_t kDepositChunk = 4096;

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0) r += kTwoPi;
  return r;
}

void check_noise_dt(const NoiseSource* noise, double dt) {
  if (noise && noise->active() && std::abs(noise->path.dt() - dt) > 1e-12 * std::max(1.0, dt))
    fail(ErrorKind::Config, "noise path step differs from the particle step");
}

struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

// Right-hand side pieces of the velocity equation at one point.
struct Forcing {
  Vec3 accel;  // a(x) dt
  Vec3 noise;  // sum sigma_k e_k(x) dW_k
  Vec3 mag;    // sum sigma^B e_k(x) dW^B
};

Forcing forcing_at(const PushContext& ctx, int d, std::span<const double> x) {
  Forcing out;
  const auto ud = static_cast<std::size_t>(d);
  if (ctx.accel) {
    std::array<double, 3> a{};
    ctx.accel->evaluate(x, std::span<double>(a.data(), ud));
    for (std::size_t c = 0; c < ud; ++c) out.accel[c] = a[c] * ctx.dt;
  }
  if (ctx.basis && !ctx.amplitudes.empty())
    ctx.basis->combine(ctx.amplitudes, x, std::span<double>(out.noise.v.data(), ud));
  if (ctx.basis && !ctx.magnetic_amplitudes.empty())
    ctx.basis->combine(ctx.magnetic_amplitudes, x, std::span<double>(out.mag.v.data(), ud));
  return out;
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  Vec3 r;
  r[0] = a[1] * b[2] - a[2] * b[1];
  r[1] = a[2] * b[0] - a[0] * b[2];
  r[2] = a[0] * b[1] - a[1] * b[0];
  return r;
}

// One step of the characteristics for a single particle; the internal noise
// enters as internal_scale * dB.
void advance(const PushContext& ctx, int d, std::span<double> X, std::span<double> V, const Vec3& dB,
             double internal_scale) {
  const auto ud = static_cast<std::size_t>(d);
  const double dt = ctx.dt;
  const double nu = ctx.nu;
  const bool magnetic = !ctx.magnetic_amplitudes.empty() && d == 3;
  const double c = ctx.speed_of_light;
  const double fric = ctx.exact_friction ? std::exp(-nu * dt) : 1.0 - nu * dt;
  Vec3 x0, v0;
  for (std::size_t a = 0; a < ud; ++a) {
    x0[a] = X[a];
    v0[a] = V[a];
  }
  const Forcing f0 = forcing_at(ctx, d, std::span<const double>(x0.v.data(), ud));
  Vec3 lor0;
  if (magnetic && !ctx.exact_rotation) lor0 = cross(v0, f0.mag);

  Vec3 x1, v1;
  for (std::size_t a = 0; a < ud; ++a) {
    x1[a] = x0[a] + v0[a] * dt;
    v1[a] = fric * v0[a] + f0.accel[a] + f0.noise[a] + lor0[a] / c + internal_scale * dB[a];
  }
  if (ctx.scheme == PushScheme::StratonovichHeun) {
    const Forcing f1 = forcing_at(ctx, d, std::span<const double>(x1.v.data(), ud));
    Vec3 lor1;
    if (magnetic && !ctx.exact_rotation) lor1 = cross(v1, f1.mag);
    for (std::size_t a = 0; a < ud; ++a) {
      const double vf = ctx.exact_friction ? fric * v0[a] : v0[a] - 0.5 * nu * dt * (v0[a] + v1[a]);
      const double vn = vf + 0.5 * (f0.accel[a] + f1.accel[a]) + 0.5 * (f0.noise[a] + f1.noise[a]) +
                        0.5 * (lor0[a] + lor1[a]) / c + internal_scale * dB[a];
      x1[a] = x0[a] + 0.5 * (v0[a] + v1[a]) * dt;
      v1[a] = vn;
    }
    if (magnetic && ctx.exact_rotation) {
      Vec3 xm;
      for (std::size_t a = 0; a < 3; ++a) xm[a] = 0.5 * (x0[a] + x1[a]);
      const Forcing fm = forcing_at(ctx, d, std::span<const double>(xm.v.data(), 3));
      const auto r = magnetic_rotation(std::span<const double>(v1.v.data(), 3),
                                       std::span<const double>(fm.mag.v.data(), 3), c);
      for (std::size_t a = 0; a < 3; ++a) v1[a] = r[a];
    }
  } else if (magnetic && ctx.exact_rotation) {
    const auto r = magnetic_rotation(std::span<const double>(v1.v.data(), 3),
                                     std::span<const double>(f0.mag.v.data(), 3), c);
    for (std::size_t a = 0; a < 3; ++a) v1[a] = r[a];
  }
  for (std::size_t a = 0; a < ud; ++a) {
    X[a] = ctx.wrap ? wrap_angle(x1[a]) : x1[a];
    V[a] = v1[a];
  }
}

double internal_scale(const PushContext& ctx) {
  const double nu = ctx.nu;
  if (nu <= 0.0) return 0.0;
  const double diff = ctx.exact_friction ? std::sqrt(-std::expm1(-2.0 * nu * ctx.dt) / (2.0 * nu * ctx.dt)) : 1.0;
  return std::sqrt(2.0 * nu) * diff;
}

Vec3 internal_increment(const PushContext& ctx, int d, std::uint64_t id_base) {
  Vec3 dB;
  if (!ctx.internal_noise || ctx.nu <= 0.0 || !ctx.internal) return dB;
  for (int a = 0; a < d; ++a)
    dB[static_cast<std::size_t>(a)] =
        ctx.internal->increment(ctx.step, id_base * 3 + static_cast<std::uint64_t>(a), rng::kInternal);
  return dB;
}

}  // namespace

ParticleEnsemble init_particles(const DistributionField& f0, std::size_t n, InitStrategy strategy,
                                std::uint64_t seed) {
  const GridSpec& g = f0.grid;
  const int d = g.dim;
  const auto ud = static_cast<std::size_t>(d);
  ParticleEnsemble ens;
  ens.dim = d;
  ens.time = f0.time;
  const std::size_t nvel = g.velocity_size();
  const double cell = g.spatial_cell() * g.velocity_cell();
  std::vector<double> xs(ud), vs(ud);

  if (strategy == InitStrategy::GridWeighted) {
    if (n != 0 && n != g.size())
      fail(ErrorKind::Config, "grid_weighted needs one particle per phase-space node");
    ens.X.resize(g.size() * ud);
    ens.V.resize(g.size() * ud);
    ens.w.resize(g.size());
    for (std::size_t s = 0; s < g.spatial_size(); ++s) {
      g.coordinates(s, xs);
      for (std::size_t j = 0; j < nvel; ++j) {
        const std::size_t p = s * nvel + j;
        g.velocity(j, vs);
        std::copy(xs.begin(), xs.end(), ens.X.begin() + static_cast<std::ptrdiff_t>(p * ud));
        std::copy(vs.begin(), vs.end(), ens.V.begin() + static_cast<std::ptrdiff_t>(p * ud));
        ens.w[p] = f0.values[p] * cell;
      }
    }
    return ens;
  }

  if (n == 0) fail(ErrorKind::Config, "rejection_sampled needs a particle count");
  double fmax = 0.0, mass = 0.0;
  for (double v : f0.values) {
    if (v < 0.0) fail(ErrorKind::NegativeDensity, "rejection sampling needs a nonnegative f0");
    fmax = std::max(fmax, v);
    mass += v;
  }
  mass *= cell;
  if (fmax <= 0.0) fail(ErrorKind::NegativeDensity, "f0 vanishes identically");
  const rng::Key key = rng::make_key(seed, 0);
  const std::size_t total = g.size();
  ens.X.resize(n * ud);
  ens.V.resize(n * ud);
  ens.w.assign(n, mass / static_cast<double>(n));
  std::uint64_t attempt = 0;
  for (std::size_t p = 0; p < n;) {
    const std::uint64_t a = attempt++;
    const double u0 = rng::uniform(key, rng::kSampling, a, 0);
    const auto node = std::min(total - 1, static_cast<std::size_t>(u0 * static_cast<double>(total)));
    const double u1 = rng::uniform(key, rng::kSampling, a, 1);
    if (u1 * fmax > f0.values[node]) continue;
    const std::size_t s = node / nvel;
    const std::size_t j = node % nvel;
    g.coordinates(s, xs);
    g.velocity(j, vs);
    for (std::size_t c = 0; c < ud; ++c) {
      const double ox = rng::uniform(key, rng::kSampling, a, 2 + c) - 0.5;
      const double ov = rng::uniform(key, rng::kSampling, a, 2 + ud + c) - 0.5;
      ens.X[p * ud + c] = wrap_angle(xs[c] + ox * g.dx());
      ens.V[p * ud + c] = vs[c] + ov * g.dv();
    }
    ++p;
  }
  return ens;
}

PhaseInterpolant::PhaseInterpolant(const DistributionField& f) : grid_(f.grid) {
  coefficients_ = spectral::full_forward(f.values, grid_.shape());
  const double inv = 1.0 / static_cast<double>(grid_.size());
  for (auto& z : coefficients_) z *= inv;
}

double PhaseInterpolant::operator()(std::span<const double> x, std::span<const double> v) const {
  const auto d = static_cast<std::size_t>(grid_.dim);
  for (std::size_t a = 0; a < d; ++a)
    if (v[a] < -grid_.vmax || v[a] > grid_.vmax) return 0.0;
  const auto shape = grid_.shape();
  const std::size_t rank = shape.size();
  std::array<std::vector<Complex>, 6> phase;
  for (std::size_t axis = 0; axis < rank; ++axis) {
    const std::size_t n = shape[axis];
    const bool vel = axis >= d;
    const double u = vel ? v[axis - d] + grid_.vmax : x[axis];
    const double scale = vel ? kPi / grid_.vmax : 1.0;
    phase[axis].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double k = scale * static_cast<double>(spectral::signed_wavenumber(j, n));
      phase[axis][j] = 2 * j == n ? Complex(std::cos(k * u), 0.0) : Complex(std::cos(k * u), std::sin(k * u));
    }
  }
  // Contract the innermost axis first.
  std::vector<Complex> work(coefficients_);
  std::size_t len = work.size();
  for (std::size_t axis = rank; axis-- > 0;) {
    const std::size_t n = shape[axis];
    const std::size_t outer = len / n;
    for (std::size_t o = 0; o < outer; ++o) {
      Complex acc(0.0, 0.0);
      for (std::size_t j = 0; j < n; ++j) acc += work[o * n + j] * phase[axis][j];
      work[o] = acc;
    }
    len = outer;
  }
  return work[0].real();
}

void push(ParticleEnsemble& ens, const PushContext& ctx) {
  const int d = ens.dim;
  const auto ud = static_cast<std::size_t>(d);
  if (ens.X.size() != ens.size() * ud || ens.V.size() != ens.size() * ud)
    fail(ErrorKind::Shape, "particle arrays do not match the ensemble size");
  if (ctx.basis && ctx.basis->dim() != d) fail(ErrorKind::Shape, "noise basis dimension differs from particles");
  if (!ctx.magnetic_amplitudes.empty() && d != 3) fail(ErrorKind::Unsupported, "magnetic noise needs d = 3");
  const auto P = static_cast<std::uint64_t>(std::max(1, ens.replicas));
  const double scale = internal_scale(ctx);
  parallel_for(ens.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const Vec3 dB = internal_increment(ctx, d, static_cast<std::uint64_t>(p) * P + static_cast<std::uint64_t>(ctx.replica));
      advance(ctx, d, std::span<double>(ens.X.data() + p * ud, ud), std::span<double>(ens.V.data() + p * ud, ud), dB,
              scale);
    }
  });
  ens.time += ctx.dt;
}

std::vector<double> deposit_density(const ParticleEnsemble& ens, const GridSpec& g) {
  if (ens.dim != g.dim) fail(ErrorKind::Shape, "particle dimension differs from grid");
  const auto ud = static_cast<std::size_t>(g.dim);
  const std::size_t nodes = g.spatial_size();
  const std::size_t n = g.nx;
  const double h = g.dx();
  const std::size_t chunks = (ens.size() + kDepositChunk - 1) / kDepositChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(nodes, 0.0));
  parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      auto& acc = partial[c];
      const std::size_t pe = std::min(ens.size(), (c + 1) * kDepositChunk);
      for (std::size_t p = c * kDepositChunk; p < pe; ++p) {
        std::array<std::size_t, 3> i0{};
        std::array<double, 3> fr{};
        for (std::size_t a = 0; a < ud; ++a) {
          const double s = wrap_angle(ens.X[p * ud + a]) / h;
          const double fl = std::floor(s);
          i0[a] = static_cast<std::size_t>(fl) % n;
          fr[a] = s - fl;
        }
        for (std::size_t corner = 0; corner < (std::size_t{1} << ud); ++corner) {
          double wgt = ens.w[p];
          std::size_t flat = 0;
          for (std::size_t a = 0; a < ud; ++a) {
            const bool up = (corner >> a) & 1u;
            wgt *= up ? fr[a] : 1.0 - fr[a];
            flat = flat * n + (up ? (i0[a] + 1) % n : i0[a]);
          }
          acc[flat] += wgt;
        }
      }
    }
  });
  std::vector<double> rho(nodes, 0.0);
  for (const auto& part : partial)
    for (std::size_t i = 0; i < nodes; ++i) rho[i] += part[i];
  const double cell = g.spatial_cell();
  for (auto& r : rho) r /= cell;
  return rho;
}

FeynmanKacResult feynman_kac_density(const DistributionField& f0, const NoiseSource* noise,
                                     std::uint64_t steps, double dt, const FeynmanKacConfig& config,
                                     const DriftSchedule& drift) {
  if (config.replicas < 1) fail(ErrorKind::Config, "replica count must be at least 1");
  if (!(dt > 0.0)) fail(ErrorKind::Config, "time step must be positive");
  check_noise_dt(noise, dt);
  FeynmanKacResult result;
  const GridSpec& g = f0.grid;
  const int d = g.dim;
  const auto ud = static_cast<std::size_t>(d);
  const bool noisy = noise && noise->active();
  if (noisy && noise->basis.dim() != d) fail(ErrorKind::Shape, "noise basis dimension differs from grid");

  int replicas = config.replicas;
  if (config.nu == 0.0 && replicas > 1) {
    result.warnings.push_back({"redundant-replicas", "nu = 0 makes every replica identical"});
    replicas = 1;
  }

  // Fine grid: every base step of the Brownian path.
  const std::uint64_t stride = noisy ? noise->path.stride : 1;
  const double fine_dt = noisy ? noise->path.base_dt : dt;
  const std::uint64_t fine_steps = steps * stride;
  NoisePath fine_path;
  if (noisy) fine_path = noise->path.with_stride(1);
  std::vector<std::vector<double>> amps(noisy ? fine_steps : 0);
  for (std::uint64_t q = 0; q < amps.size(); ++q)
    amps[q] = mode_amplitudes(fine_path, q, noise->basis, noise->table, rng::kExternal);

  NoisePath internal{config.internal_seed, noisy ? noise->path.realization : 0, fine_dt, 1, 0};
  const double t_final = static_cast<double>(steps) * dt;
  const double jac = std::exp(static_cast<double>(d) * config.nu * t_final);
  const double back_scale = -std::sqrt(2.0 * config.nu);
  const PhaseInterpolant interp(f0);

  result.field = DistributionField(g);
  result.field.time = f0.time + t_final;
  const std::size_t nvel = g.velocity_size();
  const auto P = static_cast<std::uint64_t>(replicas);

  // Backward characteristics in the reversed velocity w = -V satisfy the
  // forward equations with nu -> -nu and the same noise increments.
  parallel_for(g.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> xs(ud), vs(ud), X(ud), W(ud);
    for (std::size_t node = begin; node < end; ++node) {
      g.coordinates(node / nvel, xs);
      g.velocity(node % nvel, vs);
      double acc = 0.0;
      for (std::uint64_t r = 0; r < P; ++r) {
        X = xs;
        for (std::size_t a = 0; a < ud; ++a) W[a] = -vs[a];
        for (std::uint64_t m = 0; m < fine_steps; ++m) {
          const std::uint64_t q = fine_steps - 1 - m;
          PushContext ctx;
          ctx.dt = fine_dt;
          ctx.nu = -config.nu;
          ctx.scheme = config.scheme;
          ctx.wrap = false;
          if (drift) ctx.accel = drift(q / stride);
          if (noisy) {
            ctx.basis = &noise->basis;
            ctx.amplitudes = amps[q];
          }
          Vec3 dB;
          if (config.nu > 0.0)
            for (std::size_t a = 0; a < ud; ++a)
              dB[a] = internal.increment(m, (static_cast<std::uint64_t>(node) * P + r) * 3 + a, rng::kInternal);
          advance(ctx, d, X, W, dB, back_scale);
        }
        for (std::size_t a = 0; a < ud; ++a) W[a] = -W[a];
        acc += interp(X, W);
      }
      result.field.values[node] = jac * acc / static_cast<double>(P);
    }
  });
  return result;
}

double polygon_area(std::span<const double> xy) {
  const std::size_t n = xy.size() / 2;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    acc += xy[2 * i] * xy[2 * j + 1] - xy[2 * j] * xy[2 * i + 1];
  }
  return 0.5 * std::abs(acc);
}

namespace {

double orient(double ax, double ay, double bx, double by, double cx, double cy) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

bool segments_cross(const double* p, const double* q, const double* r, const double* s) {
  const double d1 = orient(r[0], r[1], s[0], s[1], p[0], p[1]);
  const double d2 = orient(r[0], r[1], s[0], s[1], q[0], q[1]);
  const double d3 = orient(p[0], p[1], q[0], q[1], r[0], r[1]);
  const double d4 = orient(p[0], p[1], q[0], q[1], s[0], s[1]);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

bool polygon_self_intersects(std::span<const double> xy) {
  const std::size_t n = xy.size() / 2;
  if (n < 4) return false;
  // Segment bounding boxes for a cheap rejection.
  std::vector<std::array<double, 4>> box(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    box[i] = {std::min(xy[2 * i], xy[2 * j]), std::max(xy[2 * i], xy[2 * j]),
              std::min(xy[2 * i + 1], xy[2 * j + 1]), std::max(xy[2 * i + 1], xy[2 * j + 1])};
  }
  std::vector<char> hit(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* p = &xy[2 * i];
      const double* q = &xy[2 * ((i + 1) % n)];
      for (std::size_t k = i + 2; k < n; ++k) {
        if (i == 0 && k == n - 1) continue;
        if (box[k][0] > box[i][1] || box[k][1] < box[i][0] || box[k][2] > box[i][3] || box[k][3] < box[i][2])
          continue;
        if (segments_cross(p, q, &xy[2 * k], &xy[2 * ((k + 1) % n)])) {
          hit[i] = 1;
          break;
        }
      }
    }
  });
  return std::any_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

FlowDiagnostics flow_volume_check(std::span<const double> box, const NoiseSource* noise, std::uint64_t steps,
                                  double dt, const FlowCheckConfig& config, const DriftSchedule& drift) {
  if (box.size() != 4 || !(box[1] > box[0]) || !(box[3] > box[2]))
    fail(ErrorKind::Config, "flow box must be [x0, x1, v0, v1] with x0 < x1 and v0 < v1");
  const bool noisy = noise && noise->active();
  if (noisy && noise->basis.dim() != 1) fail(ErrorKind::UnsupportedDimension, "flow check runs in d = 1");
  if (config.boundary_samples < 4) fail(ErrorKind::Config, "need at least 4 boundary samples");
  check_noise_dt(noise, dt);

  const double lx = box[1] - box[0], lv = box[3] - box[2];
  const double perimeter = 2.0 * (lx + lv);
  const std::size_t m = config.boundary_samples;
  ParticleEnsemble ens;
  ens.X.resize(m);
  ens.V.resize(m);
  ens.w.assign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = perimeter * static_cast<double>(i) / static_cast<double>(m);
    double x, v;
    if (s < lx) {
      x = box[0] + s, v = box[2];
    } else if ((s -= lx) < lv) {
      x = box[1], v = box[2] + s;
    } else if ((s -= lv) < lx) {
      x = box[1] - s, v = box[3];
    } else {
      s -= lx;
      x = box[0], v = box[3] - s;
    }
    ens.X[i] = x;
    ens.V[i] = v;
  }

  FlowDiagnostics out;
  out.initial_volume = lx * lv;
  std::vector<std::vector<double>> amps(noisy ? steps : 0);
  for (std::uint64_t n = 0; n < amps.size(); ++n) amps[n] = noise->amplitudes(n);
  auto context = [&](std::uint64_t n) {
    PushContext ctx;
    ctx.dt = dt;
    ctx.scheme = config.scheme;
    ctx.internal_noise = false;
    ctx.wrap = false;
    ctx.step = n;
    if (drift) ctx.accel = drift(n);
    if (noisy) {
      ctx.basis = &noise->basis;
      ctx.amplitudes = amps[n];
    }
    return ctx;
  };
  for (std::uint64_t n = 0; n < steps; ++n) push(ens, context(n));

  std::vector<double> xy(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    xy[2 * i] = ens.X[i];
    xy[2 * i + 1] = ens.V[i];
    out.mean_v2 += ens.V[i] * ens.V[i];
    out.max_v2 = std::max(out.max_v2, ens.V[i] * ens.V[i]);
  }
  out.mean_v2 /= static_cast<double>(m);
  out.self_intersection = polygon_self_intersects(xy);
  if (!out.self_intersection) {
    out.final_volume = polygon_area(xy);
    out.ratio = out.final_volume / out.initial_volume;
    return out;
  }

  // Monte Carlo on the bounding box of the image, mapped back through the
  // reversed dynamics.
  out.monte_carlo = true;
  double bx0 = xy[0], bx1 = xy[0], bv0 = xy[1], bv1 = xy[1];
  for (std::size_t i = 0; i < m; ++i) {
    bx0 = std::min(bx0, xy[2 * i]);
    bx1 = std::max(bx1, xy[2 * i]);
    bv0 = std::min(bv0, xy[2 * i + 1]);
    bv1 = std::max(bv1, xy[2 * i + 1]);
  }
  const std::size_t ns = config.mc_samples;
  const rng::Key key = rng::make_key(config.mc_seed, 0);
  ParticleEnsemble probe;
  probe.X.resize(ns);
  probe.V.resize(ns);
  probe.w.assign(ns, 1.0);
  for (std::size_t i = 0; i < ns; ++i) {
    probe.X[i] = bx0 + (bx1 - bx0) * rng::uniform(key, rng::kSampling, i, 0);
    probe.V[i] = -(bv0 + (bv1 - bv0) * rng::uniform(key, rng::kSampling, i, 1));
  }
  for (std::uint64_t k = 0; k < steps; ++k) push(probe, context(steps - 1 - k));
  std::size_t inside = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    const double v = -probe.V[i];
    if (probe.X[i] >= box[0] && probe.X[i] <= box[1] && v >= box[2] && v <= box[3]) ++inside;
  }
  const double p = static_cast<double>(inside) / static_cast<double>(ns);
  const double area = (bx1 - bx0) * (bv1 - bv0);
  out.final_volume = p * area;
  out.ratio = out.final_volume / out.initial_volume;
  out.ci_half_width = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(ns)) * area / out.initial_volume;
  return out;
}

PicResult run_pic(ParticleEnsemble ens, const GridSpec& g, const NoiseSource* noise, std::uint64_t steps, double dt,
                  double nu, PushScheme scheme, double field_sign) {
  g.validate();
  check_noise_dt(noise, dt);
  const bool noisy = noise && noise->active();
  PicResult out;
  NoisePath internal{noisy ? noise->path.seed + 1 : 1, noisy ? noise->path.realization : 0, dt, 1, 0};
  for (std::uint64_t n = 0; n < steps; ++n) {
    const auto rho = deposit_density(ens, g);
    auto sol = solve_poisson(g, rho);
    for (auto& e : sol.E) e *= field_sign;
    out.field_energy.push_back(field_energy(g, sol.E));
    const TrigField accel(g, sol.E);
    std::vector<double> amps;
    if (noisy) amps = noise->amplitudes(n);
    PushContext ctx;
    ctx.dt = dt;
    ctx.nu = nu;
    ctx.scheme = scheme;
    ctx.accel = &accel;
    ctx.internal = &internal;
    ctx.step = n;
    if (noisy) {
      ctx.basis = &noise->basis;
      ctx.amplitudes = amps;
    }
    push(ens, ctx);
  }
  out.ensemble = std::move(ens);
  return out;
}

void save_particles(const ParticleEnsemble& ens, const std::string& json_path) {
  namespace fs = std::filesystem;
  const fs::path p(json_path);
  const std::string data_name = p.stem().string() + ".f64";
  const auto ud = static_cast<std::size_t>(ens.dim);
  const std::size_t width = 2 * ud + 1;
  std::vector<std::string> columns;
  for (std::size_t a = 1; a <= ud; ++a) columns.push_back("x_" + std::to_string(a));
  for (std::size_t a = 1; a <= ud; ++a) columns.push_back("v_" + std::to_string(a));
  columns.push_back("w");
  std::vector<double> data(ens.size() * width);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    for (std::size_t a = 0; a < ud; ++a) {
      data[i * width + a] = ens.X[i * ud + a];
      data[i * width + ud + a] = ens.V[i * ud + a];
    }
    data[i * width + 2 * ud] = ens.w[i];
  }
  json j{{"kind", "particles"},
         {"dim", ens.dim},
         {"count", ens.size()},
         {"replicas", ens.replicas},
         {"time", ens.time},
         {"columns", columns},
         {"endianness", "little"},
         {"dtype", "f64"},
         {"shape", {ens.size(), width}},
         {"data_file", data_name}};
  io::write_text(json_path, j.dump(2) + "\n");
  io::write_raw_f64((p.parent_path() / data_name).string(), data);
}

ParticleEnsemble load_particles(const std::string& json_path) {
  namespace fs = std::filesystem;
  json j;
  try {
    j = json::parse(io::read_text(json_path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, json_path + ": " + e.what());
  }
  if (j.value("kind", "") != "particles") fail(ErrorKind::Io, json_path + ": not a particle snapshot");
  if (j.value("dtype", "") != "f64" || j.value("endianness", "") != "little")
    fail(ErrorKind::Io, json_path + ": unsupported dtype or endianness");
  ParticleEnsemble ens;
  ens.dim = j.at("dim").get<int>();
  ens.replicas = j.value("replicas", 1);
  ens.time = j.at("time").get<double>();
  const auto count = j.at("count").get<std::size_t>();
  const auto ud = static_cast<std::size_t>(ens.dim);
  const std::size_t width = 2 * ud + 1;
  const auto data = io::read_raw_f64((fs::path(json_path).parent_path() / j.at("data_file").get<std::string>()).string());
  if (data.size() != count * width) fail(ErrorKind::Shape, json_path + ": data size does not match count");
  ens.X.resize(count * ud);
  ens.V.resize(count * ud);
  ens.w.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < ud; ++a) {
      ens.X[i * ud + a] = data[i * width + a];
      ens.V[i * ud + a] = data[i * width + ud + a];
    }
    ens.w[i] = data[i * width + 2 * ud];
  }
  return ens;
}

}  // namespace svpfp

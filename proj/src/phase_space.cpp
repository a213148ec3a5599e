#include "svpfp/phase_space.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>

#include <json.hpp>

#include "svpfp/io.hpp"

namespace svpfp {

namespace {

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

using spectral::Complex;

// Applies (i kappa)^order along one axis.
void differentiate_axis(std::vector<double>& data, const GridSpec& g, std::size_t axis, int order) {
  if (order == 0) return;
  const auto shape = g.shape();
  const std::size_t n = shape[axis];
  std::vector<Complex> mult(n / 2 + 1);
  for (std::size_t j = 0; j <= n / 2; ++j) {
    const double kappa = g.wavenumber(axis, static_cast<long>(j));
    mult[j] = std::pow(Complex(0.0, kappa), order);
  }
  spectral::transform_lines(data, shape, axis, [&](std::size_t, std::span<Complex> spec) {
    for (std::size_t j = 0; j < spec.size(); ++j) spec[j] *= mult[j];
  });
}

void derivative_tree(const GridSpec& g, std::vector<double>& field, std::size_t axis, int budget,
                     std::vector<int>& orders,
                     const std::function<void(std::span<const int>, std::span<const double>)>& fn) {
  const std::size_t axes = 2 * static_cast<std::size_t>(g.dim);
  if (axis == axes) {
    fn(orders, field);
    return;
  }
  for (int o = 0; o <= budget; ++o) {
    orders[axis] = o;
    if (o == 0) {
      derivative_tree(g, field, axis + 1, budget, orders, fn);
    } else {
      std::vector<double> child = field;
      differentiate_axis(child, g, axis, o);
      derivative_tree(g, child, axis + 1, budget - o, orders, fn);
    }
  }
  orders[axis] = 0;
}

struct BumpProjection {
  std::vector<double> s;
  std::vector<double> weight;  // P(s_j) h / total mass
};

// Marginal of the radial bump onto one coordinate, sampled on a uniform grid.
// All integrands vanish to infinite order at the support boundary, so the
// trapezoid rule converges spectrally.
BumpProjection make_projection(int dim) {
  constexpr int kOuter = 2048;
  constexpr int kInner = 512;
  BumpProjection p;
  const double h = 2.0 / kOuter;
  double total = 0.0;
  for (int j = 1; j < kOuter; ++j) {
    const double s = -1.0 + h * j;
    const double y2 = 1.0 - s * s;
    double value = 0.0;
    if (dim == 1) {
      value = std::exp(-1.0 / y2);
    } else if (dim == 2) {
      const double ymax = std::sqrt(y2);
      const double hy = 2.0 * ymax / kInner;
      for (int i = 1; i < kInner; ++i) {
        const double y = -ymax + hy * i;
        value += std::exp(-1.0 / (y2 - y * y)) * hy;
      }
    } else {
      // pi * integral_0^{y2} exp(-1/w) dw, Simpson on the smooth integrand.
      const double hw = y2 / kInner;
      for (int i = 0; i <= kInner; ++i) {
        const double w = hw * i;
        const double fw = w > 0.0 ? std::exp(-1.0 / w) : 0.0;
        const double c = (i == 0 || i == kInner) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        value += c * fw;
      }
      value *= kPi * hw / 3.0;
    }
    p.s.push_back(s);
    p.weight.push_back(value * h);
    total += value * h;
  }
  for (double& w : p.weight) w /= total;
  return p;
}

const BumpProjection& projection(int dim) {
  static std::once_flag flags[3];
  static BumpProjection table[3];
  const int idx = dim - 1;
  std::call_once(flags[idx], [&] { table[idx] = make_projection(dim); });
  return table[idx];
}

using json = nlohmann::json;

json grid_to_json(const GridSpec& g) {
  return json{{"dim", g.dim}, {"nx", g.nx}, {"nv", g.nv}, {"vmax", g.vmax},
              {"dealias_fraction", g.dealias_fraction}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.dim = j.at("dim").get<int>();
  g.nx = j.at("nx").get<std::size_t>();
  g.nv = j.at("nv").get<std::size_t>();
  g.vmax = j.at("vmax").get<double>();
  g.dealias_fraction = j.at("dealias_fraction").get<double>();
  g.validate();
  return g;
}

}  // namespace

void GridSpec::validate() const {
  if (dim < 1 || dim > 3) fail(ErrorKind::UnsupportedDimension, "grid dimension must be 1, 2 or 3");
  if (nx < 8 || !power_of_two(nx)) fail(ErrorKind::Config, "grid.nx must be a power of two >= 8");
  if (nv < 8 || !power_of_two(nv)) fail(ErrorKind::Config, "grid.nv must be a power of two >= 8");
  if (!(vmax > 0.0)) fail(ErrorKind::Config, "grid.vmax must be positive");
  if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
    fail(ErrorKind::Config, "grid.dealias_fraction must lie in (0, 1]");
}

spectral::Shape GridSpec::shape() const {
  spectral::Shape s;
  for (int a = 0; a < dim; ++a) s.push_back(nx);
  for (int a = 0; a < dim; ++a) s.push_back(nv);
  return s;
}

spectral::Shape GridSpec::spatial_shape() const { return spectral::Shape(static_cast<std::size_t>(dim), nx); }

std::size_t GridSpec::spatial_size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= nx;
  return n;
}

std::size_t GridSpec::velocity_size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= nv;
  return n;
}

double GridSpec::spatial_cell() const { return std::pow(dx(), dim); }
double GridSpec::velocity_cell() const { return std::pow(dv(), dim); }

double GridSpec::wavenumber(std::size_t axis, long j) const {
  if (axis < static_cast<std::size_t>(dim)) return static_cast<double>(j);
  return kPi * static_cast<double>(j) / vmax;
}

void GridSpec::coordinates(std::size_t spatial_index, std::span<double> x_out) const {
  for (int a = dim; a-- > 0;) {
    x_out[static_cast<std::size_t>(a)] = x(spatial_index % nx);
    spatial_index /= nx;
  }
}

void GridSpec::velocity(std::size_t velocity_index, std::span<double> v_out) const {
  for (int a = dim; a-- > 0;) {
    v_out[static_cast<std::size_t>(a)] = v(velocity_index % nv);
    velocity_index /= nv;
  }
}

DistributionField::DistributionField(const GridSpec& g) : grid(g), values(g.size(), 0.0) {
  grid.validate();
}

DistributionField DistributionField::from_function(
    const GridSpec& g,
    const std::function<double(std::span<const double>, std::span<const double>)>& fn) {
  DistributionField f(g);
  const std::size_t nvs = g.velocity_size();
  const auto d = static_cast<std::size_t>(g.dim);
  parallel_for(g.spatial_size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(d), v(d);
    for (std::size_t i = begin; i < end; ++i) {
      g.coordinates(i, x);
      for (std::size_t j = 0; j < nvs; ++j) {
        g.velocity(j, v);
        f.values[i * nvs + j] = fn(x, v);
      }
    }
  });
  return f;
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorKind::NanInput, std::string(what) + " contains non-finite values");
}

std::vector<double> derivative(const DistributionField& f, std::span<const int> orders) {
  const auto axes = 2 * static_cast<std::size_t>(f.grid.dim);
  if (orders.size() != axes) fail(ErrorKind::Shape, "derivative needs one order per axis");
  std::vector<double> out = f.values;
  for (std::size_t a = 0; a < axes; ++a) {
    if (orders[a] < 0) fail(ErrorKind::Domain, "negative derivative order");
    differentiate_axis(out, f.grid, a, orders[a]);
  }
  return out;
}

void for_each_derivative(
    const DistributionField& f, int max_order,
    const std::function<void(std::span<const int>, std::span<const double>)>& fn) {
  if (max_order < 0) fail(ErrorKind::Domain, "negative derivative order");
  std::vector<double> field = f.values;
  std::vector<int> orders(2 * static_cast<std::size_t>(f.grid.dim), 0);
  derivative_tree(f.grid, field, 0, max_order, orders, fn);
}

std::vector<double> velocity_weight(const GridSpec& g, double m) {
  std::vector<double> w(g.velocity_size());
  std::vector<double> v(static_cast<std::size_t>(g.dim));
  for (std::size_t j = 0; j < w.size(); ++j) {
    g.velocity(j, v);
    double v2 = 0.0;
    for (double c : v) v2 += c * c;
    w[j] = m == 0.0 ? 1.0 : std::pow(1.0 + v2, 0.5 * m);
  }
  return w;
}

double weighted_inner(const GridSpec& g, std::span<const double> a, std::span<const double> b, double m) {
  if (a.size() != g.size() || b.size() != g.size()) fail(ErrorKind::Shape, "field size does not match grid");
  const auto w = velocity_weight(g, m);
  const std::size_t nvs = g.velocity_size();
  std::vector<double> partial(g.spatial_size(), 0.0);
  parallel_for(partial.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < nvs; ++j) s += a[i * nvs + j] * b[i * nvs + j] * w[j];
      partial[i] = s;
    }
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total * g.spatial_cell() * g.velocity_cell();
}

double weighted_l2_squared(const GridSpec& g, std::span<const double> values, double m) {
  return weighted_inner(g, values, values, m);
}

double weighted_sobolev_norm_squared(const DistributionField& f, const WeightedNormSpec& spec) {
  if (spec.sigma < 0 || spec.m < 0.0) fail(ErrorKind::Domain, "norm orders must be nonnegative");
  if (static_cast<std::size_t>(spec.sigma) > f.grid.nv / 4)
    fail(ErrorKind::Domain, "sigma exceeds the spectral sanity bound nv/4");
  check_finite(f.values, "distribution");
  double total = 0.0;
  for_each_derivative(f, spec.sigma, [&](std::span<const int>, std::span<const double> field) {
    total += weighted_l2_squared(f.grid, field, spec.m);
  });
  return total;
}

double weighted_sobolev_norm(const DistributionField& f, const WeightedNormSpec& spec) {
  return std::sqrt(weighted_sobolev_norm_squared(f, spec));
}

std::vector<double> density(const DistributionField& f) {
  const auto& g = f.grid;
  const std::size_t nvs = g.velocity_size();
  std::vector<double> rho(g.spatial_size(), 0.0);
  const double cell = g.velocity_cell();
  parallel_for(rho.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < nvs; ++j) s += f.values[i * nvs + j];
      rho[i] = s * cell;
    }
  });
  return rho;
}

double total_mass(const DistributionField& f) {
  double s = 0.0;
  for (double r : density(f)) s += r;
  return s * f.grid.spatial_cell();
}

double l2_norm(const DistributionField& f) { return std::sqrt(weighted_l2_squared(f.grid, f.values, 0.0)); }

double lp_norm(const DistributionField& f, double p) {
  if (!(p >= 1.0)) fail(ErrorKind::Domain, "L^p needs p >= 1");
  if (p == 2.0) return l2_norm(f);
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid.spatial_cell() * f.grid.velocity_cell(), 1.0 / p);
}

double velocity_tail_mass(const DistributionField& f) {
  const auto& g = f.grid;
  const std::size_t nvs = g.velocity_size();
  std::vector<char> outside(nvs, 0);
  std::vector<double> v(static_cast<std::size_t>(g.dim));
  const double r2 = 0.25 * g.vmax * g.vmax;
  for (std::size_t j = 0; j < nvs; ++j) {
    g.velocity(j, v);
    double v2 = 0.0;
    for (double c : v) v2 += c * c;
    outside[j] = v2 >= r2;
  }
  double tail = 0.0;
  for (std::size_t i = 0; i < g.spatial_size(); ++i)
    for (std::size_t j = 0; j < nvs; ++j)
      if (outside[j]) tail += std::abs(f.values[i * nvs + j]);
  return tail * g.spatial_cell() * g.velocity_cell();
}

double bump_transform(int dim, double xi) {
  if (dim < 1 || dim > 3) fail(ErrorKind::UnsupportedDimension, "bump dimension must be 1, 2 or 3");
  if (xi == 0.0) return 1.0;
  const auto& p = projection(dim);
  double s = 0.0;
  for (std::size_t j = 0; j < p.s.size(); ++j) s += p.weight[j] * std::cos(xi * p.s[j]);
  return s;
}

std::vector<double> apply_spatial_multiplier(const GridSpec& g, std::span<const double> field,
                                             const std::function<double(std::span<const long>)>& mult) {
  if (field.size() != g.spatial_size()) fail(ErrorKind::Shape, "spatial field has wrong size");
  spectral::CubeTransform fft(g.dim, g.nx);
  auto spec = fft.forward(field);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= mult(fft.wave_vector(k));
  return fft.inverse_real(spec);
}

void apply_spatial_multiplier(DistributionField& f,
                              const std::function<double(std::span<const long>)>& mult) {
  const auto& g = f.grid;
  spectral::CubeTransform fft(g.dim, g.nx);
  std::vector<double> table(fft.size());
  for (std::size_t k = 0; k < table.size(); ++k) table[k] = mult(fft.wave_vector(k));
  const std::size_t nvs = g.velocity_size();
  const std::size_t nxs = g.spatial_size();
  parallel_for(nvs, [&](std::size_t begin, std::size_t end) {
    std::vector<double> slice(nxs);
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t i = 0; i < nxs; ++i) slice[i] = f.values[i * nvs + j];
      auto spec = fft.forward(slice);
      for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= table[k];
      const auto back = fft.inverse_real(spec);
      for (std::size_t i = 0; i < nxs; ++i) f.values[i * nvs + j] = back[i];
    }
  });
}

namespace {

std::function<double(std::span<const long>)> mollifier_multiplier(int dim, double epsilon) {
  auto cache = std::make_shared<std::map<long, double>>();
  auto mutex = std::make_shared<std::mutex>();
  return [dim, epsilon, cache, mutex](std::span<const long> k) {
    long k2 = 0;
    for (long c : k) k2 += c * c;
    std::lock_guard<std::mutex> lock(*mutex);
    auto it = cache->find(k2);
    if (it != cache->end()) return it->second;
    const double value = bump_transform(dim, epsilon * std::sqrt(static_cast<double>(k2)));
    cache->emplace(k2, value);
    return value;
  };
}

}  // namespace

DistributionField mollify(const DistributionField& f, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorKind::Domain, "mollifier width must be positive");
  DistributionField out = f;
  apply_spatial_multiplier(out, mollifier_multiplier(f.grid.dim, epsilon));
  return out;
}

std::vector<double> mollify_spatial(const GridSpec& g, std::span<const double> field, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorKind::Domain, "mollifier width must be positive");
  return apply_spatial_multiplier(g, field, mollifier_multiplier(g.dim, epsilon));
}

namespace {

double bump_h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double bump_h_prime(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

}  // namespace

double theta_profile(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double a = bump_h(2.0 - x);
  const double b = bump_h(x - 1.0);
  return a / (a + b);
}

double theta_profile_derivative(double x) {
  if (x <= 1.0 || x >= 2.0) return 0.0;
  const double a = bump_h(2.0 - x);
  const double b = bump_h(x - 1.0);
  const double da = -bump_h_prime(2.0 - x);
  const double db = bump_h_prime(x - 1.0);
  return (da * b - a * db) / ((a + b) * (a + b));
}

double cutoff_theta(double x, const CutoffSpec& spec) {
  if (!(spec.R > 0.0)) fail(ErrorKind::Domain, "cutoff threshold must be positive");
  if (x < 0.0) fail(ErrorKind::Domain, "cutoff argument must be nonnegative");
  return theta_profile(x / spec.R);
}

RegularizeResult regularize_initial(const DistributionField& f, int n) {
  if (n < 1) fail(ErrorKind::Domain, "regularization index must be >= 1");
  const auto& g = f.grid;
  RegularizeResult result{f, {}};
  auto& out = result.field;
  const auto shape = g.shape();
  const double inv_n = 1.0 / n;
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const std::size_t len = shape[axis];
    std::vector<double> mult(len / 2 + 1);
    for (std::size_t j = 0; j <= len / 2; ++j)
      mult[j] = bump_transform(1, g.wavenumber(axis, static_cast<long>(j)) * inv_n);
    spectral::transform_lines(out.values, shape, axis, [&](std::size_t, std::span<Complex> spec) {
      for (std::size_t j = 0; j < spec.size(); ++j) spec[j] *= mult[j];
    });
  }
  const std::size_t nvs = g.velocity_size();
  std::vector<double> cut(nvs);
  std::vector<double> v(static_cast<std::size_t>(g.dim));
  for (std::size_t j = 0; j < nvs; ++j) {
    g.velocity(j, v);
    double v2 = 0.0;
    for (double c : v) v2 += c * c;
    cut[j] = theta_profile(std::sqrt(v2) * inv_n);
  }
  for (std::size_t i = 0; i < g.spatial_size(); ++i)
    for (std::size_t j = 0; j < nvs; ++j) out.values[i * nvs + j] *= cut[j];
  if (2.0 * n > g.vmax)
    result.warnings.push_back({"cutoff-inactive", "velocity cutoff 2n exceeds the box half-width"});
  return result;
}

double spectral_l2_squared(const DistributionField& f) {
  const auto spec = spectral::full_forward(f.values, f.grid.shape());
  double s = 0.0;
  for (const auto& c : spec) s += std::norm(c);
  return s / static_cast<double>(f.values.size()) * f.grid.spatial_cell() * f.grid.velocity_cell();
}

void save_snapshot(const DistributionField& f, const std::string& json_path) {
  namespace fs = std::filesystem;
  const fs::path p(json_path);
  const std::string data_name = p.stem().string() + ".f64";
  json j{{"kind", "field"},
         {"grid", grid_to_json(f.grid)},
         {"time", f.time},
         {"endianness", "little"},
         {"dtype", "f64"},
         {"shape", f.grid.shape()},
         {"data_file", data_name}};
  io::write_text(json_path, j.dump(2) + "\n");
  io::write_raw_f64((p.parent_path() / data_name).string(), f.values);
}

DistributionField load_snapshot(const std::string& json_path) {
  namespace fs = std::filesystem;
  json j;
  try {
    j = json::parse(io::read_text(json_path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, json_path + ": " + e.what());
  }
  if (j.value("dtype", "") != "f64" || j.value("endianness", "") != "little")
    fail(ErrorKind::Io, json_path + ": unsupported dtype or endianness");
  DistributionField f(grid_from_json(j.at("grid")));
  f.time = j.at("time").get<double>();
  const auto data = io::read_raw_f64((fs::path(json_path).parent_path() / j.at("data_file").get<std::string>()).string());
  if (data.size() != f.values.size()) fail(ErrorKind::Shape, json_path + ": data size does not match grid");
  f.values = data;
  return f;
}

}  // namespace svpfp

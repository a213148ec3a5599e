#include "svpfp/field_solver.hpp"

#include <cmath>

#include "svpfp/io.hpp"
#include "svpfp/spectral.hpp"

namespace svpfp {

namespace {

using spectral::Complex;

std::vector<double> component(std::span<const double> field, int dim, int c) {
  const auto d = static_cast<std::size_t>(dim);
  std::vector<double> out(field.size() / d);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = field[i * d + static_cast<std::size_t>(c)];
  return out;
}

}  // namespace

KernelMultiplier coulomb_kernel() {
  return [](std::span<const long> k) {
    long k2 = 0;
    for (long c : k) k2 += c * c;
    return 1.0 / static_cast<double>(k2);
  };
}

KernelMultiplier table_kernel(const KernelTable& table) {
  return [table](std::span<const long> k) {
    std::vector<long> key(k.begin(), k.end());
    if (auto it = table.entries.find(key); it != table.entries.end()) return it->second;
    for (auto& c : key) c = -c;
    if (auto it = table.entries.find(key); it != table.entries.end()) return it->second;
    std::string text;
    for (long c : k) text += (text.empty() ? "" : ",") + std::to_string(c);
    fail(ErrorKind::Shape, "kernel table has no entry for k = (" + text + ")");
  };
}

KernelTable read_kernel_csv(const std::string& path, int dim) {
  const auto csv = io::read_csv(path);
  KernelTable table;
  table.dim = dim;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    std::vector<long> k;
    for (int a = 1; a <= dim; ++a) k.push_back(static_cast<long>(csv.number(r, "k_" + std::to_string(a))));
    table.entries[k] = csv.number(r, "multiplier");
  }
  return table;
}

void write_kernel_csv(const std::string& path, const GridSpec& g, const KernelMultiplier& kernel) {
  std::vector<std::string> header;
  for (int a = 1; a <= g.dim; ++a) header.push_back("k_" + std::to_string(a));
  header.push_back("multiplier");
  io::CsvWriter out(path, header);
  spectral::CubeTransform fft(g.dim, g.nx);
  for (std::size_t f = 1; f < fft.size(); ++f) {
    const auto k = fft.wave_vector(f);
    std::vector<std::string> row;
    for (long c : k) row.push_back(std::to_string(c));
    row.push_back(io::format_double(kernel(k)));
    out.row(row);
  }
}

FieldSolution solve_kernel(const GridSpec& g, std::span<const double> rho, const KernelMultiplier& kernel,
                           KernelKind kind) {
  g.validate();
  if (rho.size() != g.spatial_size()) fail(ErrorKind::Shape, "density has wrong size");
  check_finite(rho, "density");
  FieldSolution sol;
  sol.kernel = kind;
  double sum = 0.0;
  for (double r : rho) sum += r;
  sol.rho_bar = sum / static_cast<double>(rho.size());
  if (std::abs(sol.rho_bar - 1.0) > 0.01)
    sol.warnings.push_back({"neutrality-violation", "mean density differs from 1 by more than 0.01"});

  spectral::CubeTransform fft(g.dim, g.nx);
  const auto rho_hat = fft.forward(rho);
  const auto d = static_cast<std::size_t>(g.dim);
  std::vector<std::vector<Complex>> e_hat(d, std::vector<Complex>(fft.size()));
  double worst = 0.0;
  for (std::size_t f = 1; f < fft.size(); ++f) {
    const auto k = fft.wave_vector(f);
    const double kh = kernel(k);
    double k2 = 0.0;
    for (long c : k) k2 += static_cast<double>(c) * c;
    worst = std::max(worst, std::sqrt(k2) * std::abs(kh));
    const Complex base = Complex(0.0, kh) * rho_hat[f];
    for (std::size_t a = 0; a < d; ++a) e_hat[a][f] = static_cast<double>(k[a]) * base;
  }
  if (!(worst <= 1e6)) fail(ErrorKind::IllPosedKernel, "max |k||K(k)| exceeds 1e6");
  sol.E.assign(rho.size() * d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    const auto comp = fft.inverse_real(e_hat[a]);
    for (std::size_t i = 0; i < comp.size(); ++i) sol.E[i * d + a] = comp[i];
  }
  return sol;
}

FieldSolution solve_poisson(const GridSpec& g, std::span<const double> rho) {
  return solve_kernel(g, rho, coulomb_kernel(), KernelKind::Coulomb);
}

std::vector<double> filter_vector_field(const GridSpec& g, std::span<const double> vector_field,
                                        const std::function<double(std::span<const long>)>& mult) {
  const auto d = static_cast<std::size_t>(g.dim);
  if (vector_field.size() != g.spatial_size() * d) fail(ErrorKind::Shape, "vector field has wrong size");
  std::vector<double> out(vector_field.size());
  for (int c = 0; c < g.dim; ++c) {
    const auto filtered = apply_spatial_multiplier(g, component(vector_field, g.dim, c), mult);
    for (std::size_t i = 0; i < filtered.size(); ++i) out[i * d + static_cast<std::size_t>(c)] = filtered[i];
  }
  return out;
}

void dealias(const GridSpec& g, std::vector<double>& vector_field) {
  const double limit = g.dealias_fraction * static_cast<double>(g.nx) / 2.0;
  if (g.dealias_fraction >= 1.0) return;
  vector_field = filter_vector_field(g, vector_field, [limit](std::span<const long> k) {
    for (long c : k)
      if (std::abs(static_cast<double>(c)) > limit) return 0.0;
    return 1.0;
  });
}

double field_energy(const GridSpec& g, std::span<const double> E) {
  double s = 0.0;
  for (double e : E) s += e * e;
  return 0.5 * s * g.spatial_cell();
}

TrigField::TrigField(const GridSpec& g, std::span<const double> vector_field)
    : TrigField(g.dim, g.nx, vector_field, g.dim) {}

TrigField::TrigField(int dim, std::size_t nx, std::span<const double> vector_field, int components)
    : dim_(dim), n_(nx), components_(components) {
  spectral::CubeTransform fft(dim, nx);
  const auto c = static_cast<std::size_t>(components);
  if (vector_field.size() != fft.size() * c) fail(ErrorKind::Shape, "vector field has wrong size");
  const double inv = 1.0 / static_cast<double>(fft.size());
  for (std::size_t comp = 0; comp < c; ++comp) {
    std::vector<double> values(fft.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = vector_field[i * c + comp];
    auto coeff = fft.forward(values);
    for (auto& z : coeff) z *= inv;
    coefficients_.push_back(std::move(coeff));
  }
}

void TrigField::evaluate(std::span<const double> x, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(dim_);
  // Per-axis phase tables e^{i k x_a} over FFT index order.
  std::vector<std::vector<Complex>> phase(d, std::vector<Complex>(n_));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t j = 0; j < n_; ++j) {
      const double k = static_cast<double>(spectral::signed_wavenumber(j, n_));
      // Nyquist term stays real off the grid
      phase[a][j] = 2 * j == n_ ? Complex(std::cos(k * x[a]), 0.0) : Complex(std::cos(k * x[a]), std::sin(k * x[a]));
    }
  const std::size_t total = coefficients_.empty() ? 0 : coefficients_[0].size();
  for (int c = 0; c < components_; ++c) out[static_cast<std::size_t>(c)] = 0.0;
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rest = f;
    Complex ph(1.0, 0.0);
    for (std::size_t a = d; a-- > 0;) {
      ph *= phase[a][rest % n_];
      rest /= n_;
    }
    for (int c = 0; c < components_; ++c)
      out[static_cast<std::size_t>(c)] += (coefficients_[static_cast<std::size_t>(c)][f] * ph).real();
  }
}

}  // namespace svpfp

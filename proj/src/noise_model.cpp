#include "svpfp/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "svpfp/common.hpp"
#include "svpfp/io.hpp"

namespace svpfp {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > 3) fail(ErrorKind::UnsupportedDimension, "dimension must be 1, 2 or 3");
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

std::array<double, 3> normalized(std::array<double, 3> a) {
  const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  for (auto& c : a) c /= n;
  return a;
}

std::uint64_t make_stream_id(std::span<const int> ell, int polarization) {
  std::uint64_t id = static_cast<std::uint64_t>(polarization) << 60;
  for (std::size_t i = 0; i < ell.size(); ++i)
    id |= static_cast<std::uint64_t>(ell[i] + (1 << 19)) << (20 * i);
  return id;
}

double law_sigma(const NoiseSpec& spec, double abs_k) {
  switch (spec.law) {
    case ColoringLaw::Power: return spec.amplitude * std::pow(abs_k, -spec.power);
    case ColoringLaw::Gaussian: return spec.amplitude * std::exp(-spec.gaussian_lambda * abs_k * abs_k);
    case ColoringLaw::None: return 0.0;
    case ColoringLaw::Custom: break;
  }
  return 0.0;
}

}  // namespace

bool in_positive_half(std::span<const int> ell) {
  for (std::size_t i = ell.size(); i-- > 0;)
    if (ell[i] != 0) return ell[i] > 0;
  fail(ErrorKind::Domain, "zero wave vector has no half-space");
}

std::array<double, 3> polarization_vector(std::span<const int> ell, int polarization) {
  const int dim = static_cast<int>(ell.size());
  check_dim(dim);
  if (polarization < 1 || polarization > dim) fail(ErrorKind::Domain, "polarization out of range");
  if (dim == 1) return {1.0, 0.0, 0.0};
  if (dim == 2) {
    const double n = std::hypot(static_cast<double>(ell[0]), static_cast<double>(ell[1]));
    if (polarization == 1) return {-ell[1] / n, ell[0] / n, 0.0};
    return {ell[0] / n, ell[1] / n, 0.0};
  }
  // Built on Z^3_+ and extended oddly.
  const bool positive = in_positive_half(ell);
  const double s = positive ? 1.0 : -1.0;
  const std::array<double, 3> l{s * ell[0], s * ell[1], s * ell[2]};
  const auto lhat = normalized(l);
  std::array<double, 3> gamma;
  if (polarization == 3) {
    gamma = lhat;
  } else {
    std::size_t ref = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (std::abs(l[i]) < std::abs(l[ref])) ref = i;
    std::array<double, 3> axis{0.0, 0.0, 0.0};
    axis[ref] = 1.0;
    const auto g1 = normalized(cross(axis, l));
    gamma = polarization == 1 ? g1 : cross(lhat, g1);
  }
  for (auto& c : gamma) c *= s;
  return gamma;
}

BasisSet::BasisSet(int dim, int max_wavenumber, std::vector<BasisMode> modes)
    : dim_(dim),
      max_wavenumber_(max_wavenumber),
      c_d_(std::sqrt(2.0) * std::pow(kTwoPi, -0.5 * dim)),
      modes_(std::move(modes)) {}

double BasisSet::scalar_part(std::size_t i, std::span<const double> x) const {
  const auto& m = modes_[i];
  double phase = 0.0;
  for (int a = 0; a < dim_; ++a) phase += m.index.ell[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
  return c_d_ * (m.positive ? std::sin(phase) : std::cos(phase));
}

void BasisSet::evaluate(std::size_t i, std::span<const double> x, std::span<double> out) const {
  const double s = scalar_part(i, x);
  for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(a)] = s * modes_[i].gamma[static_cast<std::size_t>(a)];
}

void BasisSet::combine(std::span<const double> amplitudes, std::span<const double> x,
                       std::span<double> out) const {
  for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(a)] = 0.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (amplitudes[i] == 0.0) continue;
    const double s = amplitudes[i] * scalar_part(i, x);
    for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(a)] += s * modes_[i].gamma[static_cast<std::size_t>(a)];
  }
}

std::optional<std::size_t> BasisSet::find(const ModeIndex& index) const {
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (modes_[i].index == index) return i;
  return std::nullopt;
}

BasisSet build_basis(const NoiseSpec& spec) {
  check_dim(spec.dim);
  if (spec.max_wavenumber < 1) fail(ErrorKind::Domain, "max_wavenumber must be at least 1");
  const int d = spec.dim;
  const int k = spec.max_wavenumber;
  std::vector<BasisMode> modes;
  std::vector<int> ell(static_cast<std::size_t>(d), -k);
  while (true) {
    int shell = 0;
    double norm2 = 0.0;
    for (int c : ell) {
      shell = std::max(shell, std::abs(c));
      norm2 += static_cast<double>(c) * c;
    }
    if (shell > 0) {
      for (int p = 1; p <= d; ++p) {
        BasisMode m;
        m.index = ModeIndex{ell, p};
        m.positive = in_positive_half(ell);
        m.gamma = polarization_vector(ell, p);
        m.abs_k = std::sqrt(norm2);
        m.shell = shell;
        m.stream_id = make_stream_id(ell, p);
        modes.push_back(std::move(m));
      }
    }
    int a = d - 1;
    while (a >= 0 && ell[static_cast<std::size_t>(a)] == k) {
      ell[static_cast<std::size_t>(a)] = -k;
      --a;
    }
    if (a < 0) break;
    ++ell[static_cast<std::size_t>(a)];
  }
  return BasisSet(d, k, std::move(modes));
}

ColoringTable coloring(const NoiseSpec& spec, const BasisSet& basis) {
  if (basis.dim() != spec.dim) fail(ErrorKind::Shape, "basis dimension differs from noise spec");
  if (spec.max_wavenumber < 1) fail(ErrorKind::Domain, "max_wavenumber must be at least 1");
  if (spec.amplitude < 0.0) fail(ErrorKind::InvalidColoring, "negative noise amplitude");
  if (spec.include_magnetic && spec.dim != 3)
    fail(ErrorKind::Unsupported, "magnetic noise needs d = 3");
  ColoringTable table;
  table.regularity_target = spec.regularity_target;
  table.sigma.assign(basis.size(), 0.0);
  if (spec.law == ColoringLaw::Custom) {
    for (const auto& entry : spec.custom_table) {
      if (!(entry.sigma >= 0.0))
        fail(ErrorKind::InvalidColoring, "custom coloring table has a negative coefficient");
      if (auto i = basis.find(entry.mode)) table.sigma[*i] = spec.amplitude * entry.sigma;
    }
  } else {
    if (spec.law == ColoringLaw::Gaussian && spec.gaussian_lambda < 0.0)
      fail(ErrorKind::InvalidColoring, "gaussian coloring needs lambda >= 0");
    for (std::size_t i = 0; i < basis.size(); ++i) table.sigma[i] = law_sigma(spec, basis.mode(i).abs_k);
  }

  if (spec.include_magnetic) {
    table.magnetic_sigma.assign(basis.size(), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const int p = basis.mode(i).index.polarization;
      if (p <= 2) table.magnetic_sigma[i] = spec.magnetic_scale[static_cast<std::size_t>(p - 1)] * table.sigma[i];
    }
  }

  table.shell_sums.assign(static_cast<std::size_t>(basis.max_wavenumber()), 0.0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& m = basis.mode(i);
    double s2 = table.sigma[i] * table.sigma[i];
    if (!table.magnetic_sigma.empty()) s2 += table.magnetic_sigma[i] * table.magnetic_sigma[i];
    table.shell_sums[static_cast<std::size_t>(m.shell - 1)] += std::pow(m.abs_k, 2.0 * spec.regularity_target) * s2;
  }
  for (double s : table.shell_sums) table.weighted_sum += s;
  table.tail_decreasing = table.shell_sums.size() >= 2;
  for (std::size_t s = 1; s < table.shell_sums.size(); ++s)
    if (!(table.shell_sums[s] < table.shell_sums[s - 1])) table.tail_decreasing = false;
  return table;
}

ColoringTable coloring(const NoiseSpec& spec) { return coloring(spec, build_basis(spec)); }

void write_coloring_csv(const std::string& path, const BasisSet& basis, const ColoringTable& table) {
  std::vector<std::string> header;
  for (int a = 1; a <= basis.dim(); ++a) header.push_back("ell_" + std::to_string(a));
  header.push_back("polarization");
  header.push_back("sigma");
  io::CsvWriter out(path, header);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    std::vector<std::string> row;
    for (int c : basis.mode(i).index.ell) row.push_back(std::to_string(c));
    row.push_back(std::to_string(basis.mode(i).index.polarization));
    row.push_back(io::format_double(table.sigma[i]));
    out.row(row);
  }
}

std::vector<ColoringEntry> read_coloring_csv(const std::string& path, int dim) {
  check_dim(dim);
  const auto table = io::read_csv(path);
  std::vector<ColoringEntry> entries;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ColoringEntry e;
    for (int a = 1; a <= dim; ++a)
      e.mode.ell.push_back(static_cast<int>(table.number(r, "ell_" + std::to_string(a))));
    e.mode.polarization = static_cast<int>(table.number(r, "polarization"));
    e.sigma = table.number(r, "sigma");
    if (!(e.sigma >= 0.0))
      fail(ErrorKind::InvalidColoring, path + ": negative coefficient on row " + std::to_string(r + 1));
    entries.push_back(std::move(e));
  }
  return entries;
}

NoisePath NoisePath::with_stride(std::uint64_t new_stride) const {
  if (new_stride < 1) fail(ErrorKind::Domain, "stride must be positive");
  NoisePath p = *this;
  p.stride = new_stride;
  p.horizon = horizon == 0 ? 0 : horizon * stride / new_stride;
  return p;
}

double NoisePath::increment(std::uint64_t step, std::uint64_t stream_id, rng::Stream stream) const {
  if (horizon != 0 && step >= horizon) fail(ErrorKind::Domain, "step beyond noise path horizon");
  const rng::Key k = key();
  const double scale = std::sqrt(base_dt);
  double sum = 0.0;
  for (std::uint64_t j = 0; j < stride; ++j) sum += rng::normal(k, stream, step * stride + j, stream_id);
  return scale * sum;
}

std::vector<double> mode_amplitudes(const NoisePath& path, std::uint64_t step, const BasisSet& basis,
                                    const ColoringTable& table, rng::Stream stream) {
  const auto& sigma = stream == rng::kMagnetic ? table.magnetic_sigma : table.sigma;
  if (sigma.size() != basis.size()) fail(ErrorKind::Shape, "coloring table does not match basis");
  std::vector<double> amp(basis.size(), 0.0);
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (sigma[i] != 0.0) amp[i] = sigma[i] * path.increment(step, basis.mode(i).stream_id, stream);
  return amp;
}

std::vector<double> field_from_amplitudes(std::span<const double> amplitudes, const BasisSet& basis,
                                          int grid_dim, std::size_t n) {
  if (grid_dim != basis.dim()) fail(ErrorKind::Shape, "grid dimension differs from noise basis");
  const int d = grid_dim;
  std::size_t nodes = 1;
  for (int a = 0; a < d; ++a) nodes *= n;
  std::vector<double> field(nodes * static_cast<std::size_t>(d), 0.0);
  const double h = kTwoPi / static_cast<double>(n);
  parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
    std::array<double, 3> x{};
    for (std::size_t node = begin; node < end; ++node) {
      std::size_t rest = node;
      for (int a = d; a-- > 0;) {
        x[static_cast<std::size_t>(a)] = h * static_cast<double>(rest % n);
        rest /= n;
      }
      basis.combine(amplitudes, std::span<const double>(x.data(), static_cast<std::size_t>(d)),
                    std::span<double>(field.data() + node * static_cast<std::size_t>(d), static_cast<std::size_t>(d)));
    }
  });
  return field;
}

std::vector<double> sample_field_increment(const NoisePath& path, std::uint64_t step,
                                           const BasisSet& basis, const ColoringTable& table,
                                           int grid_dim, std::size_t n) {
  if (grid_dim != basis.dim()) fail(ErrorKind::Shape, "grid dimension differs from noise basis");
  const auto amp = mode_amplitudes(path, step, basis, table, rng::kExternal);
  return field_from_amplitudes(amp, basis, grid_dim, n);
}

std::vector<double> sample_magnetic_increment(const NoisePath& path, std::uint64_t step,
                                              const BasisSet& basis, const ColoringTable& table,
                                              std::size_t n) {
  if (basis.dim() != 3 || table.magnetic_sigma.empty())
    fail(ErrorKind::Unsupported, "magnetic noise needs d = 3 and magnetic coloring");
  const auto amp = mode_amplitudes(path, step, basis, table, rng::kMagnetic);
  return field_from_amplitudes(amp, basis, 3, n);
}

NoiseSource::NoiseSource(const NoiseSpec& s, const NoisePath& p)
    : spec(s), basis(build_basis(s)), table(coloring(s, basis)), path(p) {}

bool NoiseSource::active() const {
  return std::any_of(table.sigma.begin(), table.sigma.end(), [](double x) { return x != 0.0; });
}

std::vector<double> NoiseSource::amplitudes(std::uint64_t step) const {
  if (!active()) return std::vector<double>(basis.size(), 0.0);
  return mode_amplitudes(path, step, basis, table, rng::kExternal);
}

std::vector<double> NoiseSource::field(std::uint64_t step, std::size_t n) const {
  if (!active()) {
    std::size_t nodes = 1;
    for (int a = 0; a < basis.dim(); ++a) nodes *= n;
    return std::vector<double>(nodes * static_cast<std::size_t>(basis.dim()), 0.0);
  }
  return field_from_amplitudes(amplitudes(step), basis, basis.dim(), n);
}

std::array<double, 3> lorentz_noise_term(std::span<const double> v, std::span<const double> dw_e,
                                         std::span<const double> dw_b, double c) {
  if (v.size() != 3 || dw_e.size() != 3 || dw_b.size() != 3)
    fail(ErrorKind::Unsupported, "magnetic term needs three velocity components");
  if (!(c > 0.0)) fail(ErrorKind::Domain, "speed of light must be positive");
  const std::array<double, 3> va{v[0], v[1], v[2]};
  const std::array<double, 3> b{dw_b[0], dw_b[1], dw_b[2]};
  const auto vxb = cross(va, b);
  return {dw_e[0] + vxb[0] / c, dw_e[1] + vxb[1] / c, dw_e[2] + vxb[2] / c};
}

std::array<double, 3> magnetic_rotation(std::span<const double> v, std::span<const double> dw_b, double c) {
  if (v.size() != 3 || dw_b.size() != 3)
    fail(ErrorKind::Unsupported, "magnetic term needs three velocity components");
  if (!(c > 0.0)) fail(ErrorKind::Domain, "speed of light must be positive");
  // v x B / c = omega x v with omega = -B / c.
  const std::array<double, 3> omega{-dw_b[0] / c, -dw_b[1] / c, -dw_b[2] / c};
  const double angle = std::sqrt(omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]);
  const std::array<double, 3> va{v[0], v[1], v[2]};
  if (angle == 0.0) return va;
  const std::array<double, 3> axis{omega[0] / angle, omega[1] / angle, omega[2] / angle};
  const auto kxv = cross(axis, va);
  const double kdotv = axis[0] * va[0] + axis[1] * va[1] + axis[2] * va[2];
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  std::array<double, 3> out;
  for (int i = 0; i < 3; ++i) out[i] = va[i] * cs + kxv[i] * sn + axis[i] * kdotv * (1.0 - cs);
  return out;
}

}  // namespace svpfp

#include "svpfp/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "svpfp/common.hpp"

namespace svpfp::spectral {

namespace {

enum class PlanKind { R2C, C2R, Forward, Backward };

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<PlanKind, int, std::size_t>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

// Plans are created once per (kind, rank, n) with FFTW_UNALIGNED so that the
// new-array execute functions accept any buffer and produce identical bits.
fftw_plan get_plan(PlanKind kind, int rank, std::size_t n) {
  auto& c = cache();
  std::lock_guard<std::mutex> lock(c.mutex);
  const auto key = std::make_tuple(kind, rank, n);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;

  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::vector<int> dims(static_cast<std::size_t>(rank), static_cast<int>(n));
  std::size_t total = 1;
  for (int r = 0; r < rank; ++r) total *= n;
  fftw_plan plan = nullptr;
  switch (kind) {
    case PlanKind::R2C: {
      double* in = fftw_alloc_real(n);
      fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
      plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, flags);
      fftw_free(in);
      fftw_free(out);
      break;
    }
    case PlanKind::C2R: {
      fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
      double* out = fftw_alloc_real(n);
      plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, flags | FFTW_DESTROY_INPUT);
      fftw_free(in);
      fftw_free(out);
      break;
    }
    case PlanKind::Forward:
    case PlanKind::Backward: {
      fftw_complex* in = fftw_alloc_complex(total);
      fftw_complex* out = fftw_alloc_complex(total);
      plan = fftw_plan_dft(rank, dims.data(), in, out,
                           kind == PlanKind::Forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
      fftw_free(in);
      fftw_free(out);
      break;
    }
  }
  if (plan == nullptr) fail(ErrorKind::Unsupported, "FFTW could not create a plan");
  c.plans.emplace(key, plan);
  return plan;
}

struct LineLayout {
  std::size_t n;
  std::size_t inner;
  std::size_t lines;

  std::size_t base(std::size_t line) const {
    const std::size_t outer_index = line / inner;
    const std::size_t inner_index = line % inner;
    return outer_index * n * inner + inner_index;
  }
};

LineLayout layout(const Shape& shape, std::size_t axis, std::size_t data_size) {
  if (axis >= shape.size()) fail(ErrorKind::Shape, "axis out of range");
  if (product(shape) != data_size) fail(ErrorKind::Shape, "data size does not match shape");
  LineLayout l{shape[axis], stride_of(shape, axis), 0};
  l.lines = data_size / l.n;
  return l;
}

}  // namespace

std::size_t product(const Shape& shape) {
  std::size_t p = 1;
  for (auto s : shape) p *= s;
  return p;
}

std::size_t stride_of(const Shape& shape, std::size_t axis) {
  std::size_t s = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) s *= shape[a];
  return s;
}

std::vector<std::size_t> unravel(std::size_t flat, const Shape& shape) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t a = shape.size(); a-- > 0;) {
    idx[a] = flat % shape[a];
    flat /= shape[a];
  }
  return idx;
}

long signed_wavenumber(std::size_t j, std::size_t n) {
  return j < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
}

void transform_lines(std::span<double> data, const Shape& shape, std::size_t axis,
                     const std::function<void(std::size_t, std::span<Complex>)>& fn) {
  const LineLayout l = layout(shape, axis, data.size());
  const std::size_t half = l.n / 2 + 1;
  fftw_plan r2c = get_plan(PlanKind::R2C, 1, l.n);
  fftw_plan c2r = get_plan(PlanKind::C2R, 1, l.n);
  const double scale = 1.0 / static_cast<double>(l.n);

  parallel_for(l.lines, [&](std::size_t begin, std::size_t end) {
    std::vector<double> line(l.n);
    std::vector<Complex> spectrum(half);
    auto* spec_ptr = reinterpret_cast<fftw_complex*>(spectrum.data());
    for (std::size_t li = begin; li < end; ++li) {
      const std::size_t base = l.base(li);
      for (std::size_t j = 0; j < l.n; ++j) line[j] = data[base + j * l.inner];
      fftw_execute_dft_r2c(r2c, line.data(), spec_ptr);
      fn(base, std::span<Complex>(spectrum));
      fftw_execute_dft_c2r(c2r, spec_ptr, line.data());
      for (std::size_t j = 0; j < l.n; ++j) data[base + j * l.inner] = line[j] * scale;
    }
  });
}

void map_lines(std::span<double> data, const Shape& shape, std::size_t axis,
               const std::function<void(std::size_t, std::span<double>)>& fn) {
  const LineLayout l = layout(shape, axis, data.size());
  parallel_for(l.lines, [&](std::size_t begin, std::size_t end) {
    std::vector<double> line(l.n);
    for (std::size_t li = begin; li < end; ++li) {
      const std::size_t base = l.base(li);
      for (std::size_t j = 0; j < l.n; ++j) line[j] = data[base + j * l.inner];
      fn(base, std::span<double>(line));
      for (std::size_t j = 0; j < l.n; ++j) data[base + j * l.inner] = line[j];
    }
  });
}

std::vector<Complex> full_forward(std::span<const double> data, const Shape& shape) {
  if (product(shape) != data.size()) fail(ErrorKind::Shape, "data size does not match shape");
  std::vector<int> dims(shape.begin(), shape.end());
  std::vector<Complex> in(data.begin(), data.end());
  std::vector<Complex> out(data.size());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(cache().mutex);
    plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                         reinterpret_cast<fftw_complex*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) fail(ErrorKind::Unsupported, "FFTW could not create a plan");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(cache().mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

CubeTransform::CubeTransform(int dim, std::size_t n) : dim_(dim), n_(n), size_(1) {
  if (dim < 1 || dim > 3) fail(ErrorKind::UnsupportedDimension, "transform rank must be 1..3");
  for (int a = 0; a < dim; ++a) size_ *= n;
}

std::vector<Complex> CubeTransform::forward(std::span<const double> values) const {
  if (values.size() != size_) fail(ErrorKind::Shape, "spatial field has wrong size");
  std::vector<Complex> in(values.begin(), values.end());
  std::vector<Complex> out(size_);
  fftw_execute_dft(get_plan(PlanKind::Forward, dim_, n_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> CubeTransform::inverse_real(std::span<const Complex> coefficients) const {
  if (coefficients.size() != size_) fail(ErrorKind::Shape, "spectrum has wrong size");
  std::vector<Complex> in(coefficients.begin(), coefficients.end());
  std::vector<Complex> out(size_);
  fftw_execute_dft(get_plan(PlanKind::Backward, dim_, n_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  std::vector<double> result(size_);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) result[i] = out[i].real() * scale;
  return result;
}

std::vector<long> CubeTransform::wave_vector(std::size_t flat) const {
  std::vector<long> k(static_cast<std::size_t>(dim_));
  for (int a = dim_; a-- > 0;) {
    k[static_cast<std::size_t>(a)] = signed_wavenumber(flat % n_, n_);
    flat /= n_;
  }
  return k;
}

}  // namespace svpfp::spectral

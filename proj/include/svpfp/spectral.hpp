#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

// FFT plumbing shared by every grid module. Backed by FFTW; plans are cached
// per transform size and executed through the thread-safe new-array API.
namespace svpfp::spectral {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

std::size_t product(const Shape& shape);
std::vector<std::size_t> unravel(std::size_t flat, const Shape& shape);
std::size_t stride_of(const Shape& shape, std::size_t axis);

/// Integer wavenumber of FFT index j on a grid of n points; the Nyquist index
/// maps to -n/2.
long signed_wavenumber(std::size_t j, std::size_t n);

/// Calls fn(base, spectrum) for every 1-D line of `data` along `axis`, where
/// spectrum holds the n/2+1 half-spectrum of the line (unnormalized) and base
/// is the flat index of the line's first element. The modified spectrum is
/// transformed back; the imaginary part of the Nyquist coefficient is dropped,
/// so a complex multiplier m acts on that mode as Re(m).
void transform_lines(std::span<double> data, const Shape& shape, std::size_t axis,
                     const std::function<void(std::size_t, std::span<Complex>)>& fn);

/// Calls fn(base, line) with a contiguous copy of each line along `axis`;
/// the (possibly modified) copy is written back.
void map_lines(std::span<double> data, const Shape& shape, std::size_t axis,
               const std::function<void(std::size_t, std::span<double>)>& fn);

/// Unnormalized complex transform over every axis of a real array.
std::vector<Complex> full_forward(std::span<const double> data, const Shape& shape);

/// Complex d-dimensional transform on an [n]^d periodic grid.
class CubeTransform {
 public:
  CubeTransform(int dim, std::size_t n);

  int dim() const { return dim_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return size_; }

  std::vector<Complex> forward(std::span<const double> values) const;
  /// Inverse including the 1/N normalization; returns the real part.
  std::vector<double> inverse_real(std::span<const Complex> coefficients) const;
  /// Signed integer wave vector of the flat spectral index.
  std::vector<long> wave_vector(std::size_t flat) const;

 private:
  int dim_;
  std::size_t n_;
  std::size_t size_;
};

}  // namespace svpfp::spectral

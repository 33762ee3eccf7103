#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include "ness/core.hpp"

namespace ness::spectral {

/// Allocator giving the 64-byte alignment FFTW's SIMD codelets want.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using AlignedComplexVector = std::vector<complex, AlignedAllocator<complex>>;

/// In-place complex FFT of fixed length backed by FFTW.
///
/// Plans are created once per length under a global lock and shared; executing
/// a plan is thread-safe. Planning uses FFTW_ESTIMATE so results are bitwise
/// reproducible from run to run. Buffers with 64-byte alignment take the fast
/// SIMD plan, anything else falls back to an unaligned plan.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// Unnormalized forward transform, sum_j f_j exp(-2 pi i jm/n).
  void forward(std::span<complex> data) const;
  /// Inverse transform including the 1/n factor.
  void backward(std::span<complex> data) const;
  /// Inverse transform without the 1/n factor.
  void backward_unscaled(std::span<complex> data) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* backward_plan_;
  void* forward_unaligned_;
  void* backward_unaligned_;
};

/// d^order f / dx^order by multiplication with (ik)^order. The Nyquist mode is
/// dropped for odd orders.
std::vector<complex> derivative(std::span<const complex> f, const Grid& grid, int order = 1);
std::vector<double> derivative(std::span<const double> f, const Grid& grid, int order = 1);

/// Antiderivative G with G' = g and G(x_ref) = 0.
///
/// The mean of g is integrated exactly as a linear ramp; the zero-mean part
/// is integrated spectrally, so g must be smooth and periodic once its mean is
/// removed (e.g. a constant plus a localized function).
std::vector<double> antiderivative(std::span<const double> g, const Grid& grid, double x_ref);

/// Trapezoid cumulative integral with G(x_ref) = 0, x_ref snapped to the
/// nearest grid point. Exact for piecewise-linear integrands with nodes on the
/// grid.
std::vector<double> cumulative_trapezoid(std::span<const double> g, const Grid& grid, double x_ref);

}  // namespace ness::spectral

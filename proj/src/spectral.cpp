#include "ness/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <utility>

namespace ness::spectral {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
  fftw_plan forward_unaligned;
  fftw_plan backward_unaligned;
};

// fftw's planner is not thread-safe; plan execution is.
PlanPair plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  auto* buf = fftw_alloc_complex(n);
  const int len = static_cast<int>(n);
  const unsigned unaligned = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE),
             fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE),
             fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, unaligned),
             fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, unaligned)};
  fftw_free(buf);
  cache.emplace(n, p);
  return p;
}

fftw_complex* as_fftw(std::span<complex> data) {
  return reinterpret_cast<fftw_complex*>(data.data());
}

bool aligned(std::span<complex> data) {
  return reinterpret_cast<std::uintptr_t>(data.data()) % 64 == 0;
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n) {
  auto p = plans_for(n);
  forward_plan_ = p.forward;
  backward_plan_ = p.backward;
  forward_unaligned_ = p.forward_unaligned;
  backward_unaligned_ = p.backward_unaligned;
}

void Fft::forward(std::span<complex> data) const {
  auto* plan = static_cast<fftw_plan>(aligned(data) ? forward_plan_ : forward_unaligned_);
  fftw_execute_dft(plan, as_fftw(data), as_fftw(data));
}

void Fft::backward_unscaled(std::span<complex> data) const {
  auto* plan = static_cast<fftw_plan>(aligned(data) ? backward_plan_ : backward_unaligned_);
  fftw_execute_dft(plan, as_fftw(data), as_fftw(data));
}

void Fft::backward(std::span<complex> data) const {
  backward_unscaled(data);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& z : data) z *= scale;
}

std::vector<complex> derivative(std::span<const complex> f, const Grid& grid, int order) {
  const std::size_t n = grid.size();
  std::vector<complex> buf(f.begin(), f.end());
  Fft fft(n);
  fft.forward(buf);
  const auto k = grid.k();
  for (std::size_t j = 0; j < n; ++j) {
    buf[j] *= std::pow(complex(0.0, k[j]), order);
  }
  if (order % 2 != 0) buf[n / 2] = 0.0;
  fft.backward(buf);
  return buf;
}

std::vector<double> derivative(std::span<const double> f, const Grid& grid, int order) {
  std::vector<complex> z(f.begin(), f.end());
  const auto dz = derivative(std::span<const complex>(z), grid, order);
  std::vector<double> out(dz.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = dz[j].real();
  return out;
}

std::vector<double> antiderivative(std::span<const double> g, const Grid& grid, double x_ref) {
  const std::size_t n = grid.size();
  std::vector<complex> buf(g.begin(), g.end());
  Fft fft(n);
  fft.forward(buf);
  const double mean = buf[0].real() / static_cast<double>(n);
  const auto k = grid.k();
  buf[0] = 0.0;
  buf[n / 2] = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    if (j != n / 2) buf[j] /= complex(0.0, k[j]);
  }
  // Periodic part evaluated exactly at x_ref from its Fourier series.
  complex at_ref = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    at_ref += buf[j] * std::polar(1.0, k[j] * (x_ref - grid.x_min()));
  }
  at_ref /= static_cast<double>(n);
  fft.backward(buf);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = buf[j].real() - at_ref.real() + mean * (grid.x(j) - x_ref);
  }
  return out;
}

std::vector<double> cumulative_trapezoid(std::span<const double> g, const Grid& grid, double x_ref) {
  const std::size_t n = grid.size();
  std::vector<double> out(n, 0.0);
  const double h = grid.dx();
  for (std::size_t j = 1; j < n; ++j) out[j] = out[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
  const double offset = out[grid.nearest_index(x_ref)];
  for (auto& v : out) v -= offset;
  return out;
}

}  // namespace ness::spectral

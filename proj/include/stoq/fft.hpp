#ifndef STOQ_FFT_HPP
#define STOQ_FFT_HPP

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stoq {

/// Radix-2 iterative FFT. Grid invariants guarantee power-of-two sizes on
/// every spectral path, so no general-length machinery is needed.
namespace fft_detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct TwiddleTable {
  std::size_t n = 0;
  std::vector<std::complex<double>> w;  // forward twiddles e^{-2pi i k/n}
  explicit TwiddleTable(std::size_t n_) : n(n_), w(n_ / 2) {
    const double step = -2.0 * 3.141592653589793238462643383279502884 /
                        static_cast<double>(n);
    for (std::size_t k = 0; k < n / 2; ++k)
      w[k] = std::polar(1.0, step * static_cast<double>(k));
  }
};

inline const TwiddleTable& twiddles(std::size_t n) {
  static std::vector<TwiddleTable> cache;
  for (const auto& t : cache)
    if (t.n == n) return t;
  cache.emplace_back(n);
  return cache.back();
}

}  // namespace fft_detail

/// In-place complex FFT on `data[0..n)` with stride 1.
/// inverse=true applies the unscaled inverse; caller divides by n.
inline void fft_inplace(std::complex<double>* data, std::size_t n,
                        bool inverse) {
  if (!fft_detail::is_pow2(n))
    throw std::invalid_argument("fft_inplace: length must be a power of two");
  if (n < 2) return;
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  const auto& tw = fft_detail::twiddles(n).w;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t tstep = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        std::complex<double> w = tw[k * tstep];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + half] * w;
        data[i + k] = u + v;
        data[i + k + half] = u - v;
      }
    }
  }
}

inline void fft_forward(std::vector<std::complex<double>>& v) {
  fft_inplace(v.data(), v.size(), false);
}

inline void fft_inverse(std::vector<std::complex<double>>& v) {
  fft_inplace(v.data(), v.size(), true);
  const double s = 1.0 / static_cast<double>(v.size());
  for (auto& x : v) x *= s;
}

/// 2D FFT over a row-major nx*ny array (x is the slow index).
inline void fft2_forward(std::vector<std::complex<double>>& v, std::size_t nx,
                         std::size_t ny) {
  if (v.size() != nx * ny) throw std::invalid_argument("fft2: size mismatch");
  for (std::size_t i = 0; i < nx; ++i)
    fft_inplace(v.data() + i * ny, ny, false);
  std::vector<std::complex<double>> col(nx);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) col[i] = v[i * ny + j];
    fft_inplace(col.data(), nx, false);
    for (std::size_t i = 0; i < nx; ++i) v[i * ny + j] = col[i];
  }
}

inline void fft2_inverse(std::vector<std::complex<double>>& v, std::size_t nx,
                         std::size_t ny) {
  if (v.size() != nx * ny) throw std::invalid_argument("fft2: size mismatch");
  for (std::size_t i = 0; i < nx; ++i)
    fft_inplace(v.data() + i * ny, ny, true);
  std::vector<std::complex<double>> col(nx);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) col[i] = v[i * ny + j];
    fft_inplace(col.data(), nx, true);
    for (std::size_t i = 0; i < nx; ++i) v[i * ny + j] = col[i];
  }
  const double s = 1.0 / static_cast<double>(nx * ny);
  for (auto& x : v) x *= s;
}

}  // namespace stoq

#endif  // STOQ_FFT_HPP

#pragma once

#include <cstdint>
#include <cstddef>

#include "explab/common.hpp"

namespace explab::detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Forward twiddle table w[j] = exp(-2*pi*i*j/n) for j < n/2.
inline CVector make_twiddles(std::size_t n) {
  CVector w(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    double ang = -2.0 * pi * static_cast<double>(j) / static_cast<double>(n);
    w[j] = Complex(std::cos(ang), std::sin(ang));
  }
  return w;
}

/// In-place radix-2 DIT transform, unnormalized. sign = -1 forward, +1 inverse.
/// `tw` must be the forward table for a.size() (see make_twiddles).
inline void fft_pow2(CVector& a, int sign, const CVector& tw) {
  const std::size_t n = a.size();
  if (n < 2) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < len / 2; ++j) {
        Complex w = tw[j * stride];
        if (sign > 0) w = std::conj(w);
        Complex u = a[i + j];
        Complex v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
      }
    }
  }
}

/// Bluestein chirp transform for arbitrary length, unnormalized.
inline CVector fft_bluestein(const CVector& x, int sign) {
  const std::size_t n = x.size();
  const std::int64_t two_n = 2 * static_cast<std::int64_t>(n);
  // chirp[m] = exp(sign * pi * i * m^2 / n); m^2 reduced mod 2n to keep the
  // angle argument small without changing the value.
  CVector chirp(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::int64_t r = (static_cast<std::int64_t>(m) * static_cast<std::int64_t>(m)) % two_n;
    double ang = sign * pi * static_cast<double>(r) / static_cast<double>(n);
    chirp[m] = Complex(std::cos(ang), std::sin(ang));
  }
  const std::size_t L = next_pow2(2 * n - 1);
  CVector a(L, Complex(0, 0)), b(L, Complex(0, 0));
  for (std::size_t m = 0; m < n; ++m) a[m] = x[m] * chirp[m];
  for (std::size_t m = 0; m < n; ++m) {
    Complex c = std::conj(chirp[m]);
    b[m] = c;
    if (m > 0) b[L - m] = c;
  }
  CVector tw = make_twiddles(L);
  fft_pow2(a, -1, tw);
  fft_pow2(b, -1, tw);
  for (std::size_t j = 0; j < L; ++j) a[j] *= b[j];
  fft_pow2(a, +1, tw);
  CVector out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k] / static_cast<double>(L);
  return out;
}

/// Unnormalized forward transform X_k = sum_m x_m exp(-2*pi*i*k*m/n).
/// `tw` may carry a precomputed forward table when n is a power of two.
inline CVector fft(const CVector& x, const CVector* tw = nullptr) {
  const std::size_t n = x.size();
  if (n <= 1) return x;
  if (is_pow2(n)) {
    CVector a = x;
    if (tw && tw->size() == n / 2) {
      fft_pow2(a, -1, *tw);
    } else {
      CVector t = make_twiddles(n);
      fft_pow2(a, -1, t);
    }
    return a;
  }
  return fft_bluestein(x, -1);
}

/// Unnormalized inverse transform x_j = sum_k X_k exp(+2*pi*i*k*j/n).
inline CVector ifft(const CVector& X, const CVector* tw = nullptr) {
  const std::size_t n = X.size();
  if (n <= 1) return X;
  if (is_pow2(n)) {
    CVector a = X;
    if (tw && tw->size() == n / 2) {
      fft_pow2(a, +1, *tw);
    } else {
      CVector t = make_twiddles(n);
      fft_pow2(a, +1, t);
    }
    return a;
  }
  return fft_bluestein(X, +1);
}

}  // namespace explab::detail

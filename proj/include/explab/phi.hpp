#pragma once

#include <cstdio>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "explab/common.hpp"
#include "explab/spectral.hpp"

namespace explab {

/// Order index k of the entire function phi_k, with
///   phi_0(z) = exp(z),  phi_k(z) = sum_{j>=0} z^j / (j+k)!.
struct PhiOrder {
  int k;
  static constexpr int max_order = 8;
  explicit PhiOrder(int order) : k(order) {
    if (order < 0 || order > max_order)
      throw ContractError("PhiOrder: order must lie in [0, " + std::to_string(max_order) + "]");
  }
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int j = 2; j <= n; ++j) f *= j;
  return f;
}

}  // namespace detail

/// Scalar phi_k(z). Series summation inside |z| < max(1/2, k), where the
/// downward recurrence through exp(z) would cancel; recurrence
/// phi_{j+1}(z) = (phi_j(z) - 1/j!)/z outside. Relative accuracy is a few
/// ulps on the closed left half-plane for |z| <= 100.
inline Complex phi_scalar(PhiOrder order, Complex z) {
  if (!finite(z)) throw ContractError("phi_scalar: non-finite argument");
  const int k = order.k;
  if (k == 0) return std::exp(z);
  const double r = std::abs(z);
  if (r < std::max(0.5, static_cast<double>(k))) {
    Complex term = Complex(1.0 / detail::factorial(k), 0.0);
    Complex sum = term;
    for (int j = 1; j <= 200; ++j) {
      term *= z / static_cast<double>(j + k);
      sum += term;
      if (j >= 20 && std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  Complex p = std::exp(z);
  for (int j = 0; j < k; ++j) p = (p - Complex(1.0 / detail::factorial(j), 0.0)) / z;
  return p;
}

enum class SpectrumPolicy { enforce, warn };

/// phi_k applied entrywise to a diagonal operator whose eigenvalues already
/// include the step factor h. Eigenvalues are expected on the closed left
/// half-plane; a positive real part raises (or warns, under `warn`).
inline DiagonalOperator phi_diag(PhiOrder order, const DiagonalOperator& h_a,
                                 SpectrumPolicy policy = SpectrumPolicy::enforce) {
  for (const Complex& z : h_a.eigenvalues) {
    if (!finite(z)) throw ContractError("phi_diag: non-finite eigenvalue");
    if (z.real() > 1e-12 * std::max(1.0, std::abs(z))) {
      if (policy == SpectrumPolicy::enforce)
        throw ContractError("phi_diag: eigenvalue with positive real part");
      std::fprintf(stderr, "phi_diag: warning, eigenvalue with positive real part\n");
      break;
    }
  }
  return map_diag(h_a, [order](Complex z) { return phi_scalar(order, z); });
}

/// Dense square complex matrix, row-major.
struct DenseMatrix {
  int dim = 0;
  CVector entries;

  DenseMatrix() = default;
  explicit DenseMatrix(int d)
      : dim(d), entries(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), Complex(0, 0)) {
    if (d < 1) throw ContractError("DenseMatrix: dim must be >= 1");
  }

  Complex& at(int i, int j) {
    return entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
                   static_cast<std::size_t>(j)];
  }
  Complex at(int i, int j) const {
    return entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
                   static_cast<std::size_t>(j)];
  }
};

inline constexpr int dense_dim_limit = 4096;

namespace detail {

using EMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

/// Matrix exponential by scaling and squaring around a truncated Taylor core.
inline EMatrix expm(const EMatrix& m) {
  const auto d = m.rows();
  double norm1 = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) norm1 = std::max(norm1, m.col(j).cwiseAbs().sum());
  int sigma = 0;
  if (norm1 > 1.0) sigma = static_cast<int>(std::ceil(std::log2(norm1)));
  EMatrix x = m / std::pow(2.0, sigma);
  EMatrix acc = EMatrix::Identity(d, d);
  EMatrix term = EMatrix::Identity(d, d);
  for (int j = 1; j <= 40; ++j) {
    term = (term * x) / static_cast<double>(j);
    acc += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-17 * acc.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < sigma; ++s) acc = acc * acc;
  return acc;
}

}  // namespace detail

/// Simultaneous phi_k(M) v for all requested orders, through one exponential
/// of the augmented matrix [[M, E], [0, N]] with E = [v, 0, ..., 0] and N the
/// p-by-p superdiagonal shift: column d+q-1 of the result holds phi_q(M) v.
inline std::map<int, CVector> phi_matvec(const std::vector<int>& orders, const DenseMatrix& m,
                                         const CVector& v) {
  if (orders.empty()) throw ContractError("phi_matvec: no orders requested");
  int p = 0;
  for (int k : orders) {
    PhiOrder check(k);
    p = std::max(p, k);
  }
  const int d = m.dim;
  if (d > dense_dim_limit) throw ContractError("phi_matvec: dimension exceeds dense limit");
  if (static_cast<int>(v.size()) != d) throw DimensionError("phi_matvec: vector length mismatch");
  if (!all_finite(m.entries) || !all_finite(v)) throw ContractError("phi_matvec: non-finite input");

  // Scale v toward unit max-norm so the augmented columns do not dominate the
  // scaling-and-squaring norm estimate.
  double vmax = 0.0;
  for (const Complex& z : v) vmax = std::max(vmax, std::abs(z));
  const double vscale = vmax > 0.0 ? vmax : 1.0;

  const int dd = d + p;
  detail::EMatrix aug = detail::EMatrix::Zero(dd, dd);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) aug(i, j) = m.at(i, j);
  if (p >= 1) {
    for (int i = 0; i < d; ++i) aug(i, d) = v[static_cast<std::size_t>(i)] / vscale;
    for (int q = 0; q < p - 1; ++q) aug(d + q, d + q + 1) = Complex(1, 0);
  }
  detail::EMatrix e = detail::expm(aug);

  std::map<int, CVector> out;
  for (int k : orders) {
    CVector col(static_cast<std::size_t>(d));
    if (k == 0) {
      for (int i = 0; i < d; ++i) {
        Complex acc(0, 0);
        for (int j = 0; j < d; ++j) acc += e(i, j) * v[static_cast<std::size_t>(j)];
        col[static_cast<std::size_t>(i)] = acc;
      }
    } else {
      for (int i = 0; i < d; ++i) col[static_cast<std::size_t>(i)] = e(i, d + k - 1) * vscale;
    }
    if (!all_finite(col)) throw NumericsError("phi_matvec: non-finite result");
    out[k] = std::move(col);
  }
  return out;
}

}  // namespace explab

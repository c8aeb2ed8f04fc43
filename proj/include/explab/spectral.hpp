#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>

#include "explab/common.hpp"
#include "explab/fft.hpp"

namespace explab {

/// Periodic Fourier grid. Wavenumbers are stored explicitly so that truncated
/// grids reuse the same type; the transform routines require the full grid in
/// FFT bin order 0, 1, ..., n/2, -n/2+1, ..., -1.
class ModeGrid {
 public:
  ModeGrid(int n_phys, std::vector<int> modes, double domain_length = 2.0 * pi)
      : n_phys_(n_phys), modes_(std::move(modes)), domain_length_(domain_length) {
    if (n_phys_ < 2 || n_phys_ % 2 != 0)
      throw ContractError("ModeGrid: n_phys must be even and >= 2, got " + std::to_string(n_phys_));
    if (domain_length_ <= 0.0) throw ContractError("ModeGrid: domain_length must be positive");
    int zeros = 0;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (modes_[i] == 0) ++zeros;
      index_[modes_[i]] = static_cast<int>(i);
    }
    if (zeros != 1) throw ContractError("ModeGrid: mode 0 must appear exactly once");
    if (index_.size() != modes_.size()) throw ContractError("ModeGrid: duplicate wavenumber");
    if (static_cast<int>(modes_.size()) == n_phys_ && detail::is_pow2(static_cast<std::size_t>(n_phys_)))
      twiddles_ = detail::make_twiddles(static_cast<std::size_t>(n_phys_));
  }

  /// Full grid in FFT bin order for an even number of collocation points.
  static std::shared_ptr<const ModeGrid> periodic(int n_phys, double domain_length = 2.0 * pi) {
    if (n_phys < 2 || n_phys % 2 != 0)
      throw ContractError("ModeGrid: n_phys must be even and >= 2, got " + std::to_string(n_phys));
    std::vector<int> modes(static_cast<std::size_t>(n_phys));
    for (int j = 0; j < n_phys; ++j) modes[static_cast<std::size_t>(j)] = j <= n_phys / 2 ? j : j - n_phys;
    return std::make_shared<const ModeGrid>(n_phys, std::move(modes), domain_length);
  }

  int n_phys() const { return n_phys_; }
  int n_modes() const { return static_cast<int>(modes_.size()); }
  const std::vector<int>& modes() const { return modes_; }
  double domain_length() const { return domain_length_; }

  /// Position of wavenumber k, or -1 when absent.
  int index_of(int k) const {
    auto it = index_.find(k);
    return it == index_.end() ? -1 : it->second;
  }

  bool is_full_fft_order() const {
    if (static_cast<int>(modes_.size()) != n_phys_) return false;
    for (int j = 0; j < n_phys_; ++j) {
      int expect = j <= n_phys_ / 2 ? j : j - n_phys_;
      if (modes_[static_cast<std::size_t>(j)] != expect) return false;
    }
    return true;
  }

  const CVector& twiddles() const { return twiddles_; }

  bool same_as(const ModeGrid& other) const {
    return n_phys_ == other.n_phys_ && modes_ == other.modes_ &&
           domain_length_ == other.domain_length_;
  }

 private:
  int n_phys_;
  std::vector<int> modes_;
  double domain_length_;
  std::unordered_map<int, int> index_;
  CVector twiddles_;
};

using GridPtr = std::shared_ptr<const ModeGrid>;

inline void require_same_grid(const ModeGrid& a, const ModeGrid& b, const char* where) {
  if (!a.same_as(b)) throw DimensionError(std::string(where) + ": grid mismatch");
}

/// Fractional scale exponent ell >= 0.
struct FractionalExponent {
  double ell;
  explicit FractionalExponent(double e) : ell(e) {
    if (!(e >= 0.0) || !std::isfinite(e))
      throw ContractError("FractionalExponent: ell must be finite and >= 0");
  }
};

/// Vector of spectral coefficients for a multi-component state, stored
/// component-major: entry(comp, j) addresses mode grid->modes()[j].
struct SpectralState {
  GridPtr grid;
  int n_comp = 0;
  CVector coeffs;

  SpectralState() = default;
  SpectralState(GridPtr g, int nc)
      : grid(std::move(g)), n_comp(nc),
        coeffs(static_cast<std::size_t>(nc) * static_cast<std::size_t>(grid->n_modes()),
               Complex(0, 0)) {
    if (nc < 1) throw ContractError("SpectralState: n_comp must be >= 1");
  }

  std::size_t size() const { return coeffs.size(); }
  Complex& entry(int comp, int j) {
    return coeffs[static_cast<std::size_t>(comp) * static_cast<std::size_t>(grid->n_modes()) +
                  static_cast<std::size_t>(j)];
  }
  Complex entry(int comp, int j) const {
    return coeffs[static_cast<std::size_t>(comp) * static_cast<std::size_t>(grid->n_modes()) +
                  static_cast<std::size_t>(j)];
  }
};

/// Operator acting diagonally in the spectral basis, one eigenvalue per
/// (component, mode) slot, laid out exactly like SpectralState::coeffs.
struct DiagonalOperator {
  GridPtr grid;
  int n_comp = 0;
  CVector eigenvalues;

  DiagonalOperator() = default;
  DiagonalOperator(GridPtr g, int nc)
      : grid(std::move(g)), n_comp(nc),
        eigenvalues(static_cast<std::size_t>(nc) * static_cast<std::size_t>(grid->n_modes()),
                    Complex(0, 0)) {
    if (nc < 1) throw ContractError("DiagonalOperator: n_comp must be >= 1");
  }

  Complex& entry(int comp, int j) {
    return eigenvalues[static_cast<std::size_t>(comp) * static_cast<std::size_t>(grid->n_modes()) +
                       static_cast<std::size_t>(j)];
  }
  Complex entry(int comp, int j) const {
    return eigenvalues[static_cast<std::size_t>(comp) * static_cast<std::size_t>(grid->n_modes()) +
                       static_cast<std::size_t>(j)];
  }
};

inline void require_match(const SpectralState& u, const DiagonalOperator& op, const char* where) {
  require_same_grid(*u.grid, *op.grid, where);
  if (u.n_comp != op.n_comp) throw DimensionError(std::string(where) + ": component mismatch");
}

inline SpectralState apply_diag(const DiagonalOperator& op, const SpectralState& u) {
  require_match(u, op, "apply_diag");
  SpectralState out = u;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= op.eigenvalues[i];
  if (!all_finite(out.coeffs)) throw NumericsError("apply_diag: non-finite result");
  return out;
}

/// Elementwise map over operator eigenvalues.
template <class F>
DiagonalOperator map_diag(const DiagonalOperator& op, F&& f) {
  DiagonalOperator out = op;
  for (Complex& z : out.eigenvalues) z = f(z);
  return out;
}

inline void check_modulus_operator(const DiagonalOperator& abs_a, const char* where) {
  for (const Complex& z : abs_a.eigenvalues) {
    if (z.imag() != 0.0 || z.real() < 0.0 || !finite(z))
      throw ContractError(std::string(where) + ": |A| eigenvalues must be real and >= 0");
  }
}

/// Scale norm: plain l2 weight on eigenvalue modulus <= 1, modulus^ell weight
/// above. ell = 0 collapses to the Parseval norm.
inline double y_ell_norm(const SpectralState& u, const DiagonalOperator& abs_a,
                         FractionalExponent ell) {
  require_match(u, abs_a, "y_ell_norm");
  check_modulus_operator(abs_a, "y_ell_norm");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    double w = abs_a.eigenvalues[i].real();
    double m = std::norm(u.coeffs[i]);
    acc += w <= 1.0 ? m : std::pow(w, 2.0 * ell.ell) * m;
  }
  double r = std::sqrt(acc);
  if (!std::isfinite(r)) throw NumericsError("y_ell_norm: non-finite norm");
  return r;
}

/// Keep (component, mode) slots with |A|-eigenvalue <= m, zero the rest.
inline SpectralState project_Pm(const SpectralState& u, const DiagonalOperator& abs_a, double m) {
  require_match(u, abs_a, "project_Pm");
  check_modulus_operator(abs_a, "project_Pm");
  if (!(m >= 0.0)) throw ContractError("project_Pm: m must be >= 0");
  SpectralState out = u;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    if (abs_a.eigenvalues[i].real() > m) out.coeffs[i] = Complex(0, 0);
  return out;
}

/// Complementary projection: keep slots with |A|-eigenvalue > m.
inline SpectralState project_Qm(const SpectralState& u, const DiagonalOperator& abs_a, double m) {
  require_match(u, abs_a, "project_Qm");
  check_modulus_operator(abs_a, "project_Qm");
  if (!(m >= 0.0)) throw ContractError("project_Qm: m must be >= 0");
  SpectralState out = u;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i)
    if (abs_a.eigenvalues[i].real() <= m) out.coeffs[i] = Complex(0, 0);
  return out;
}

/// Fractional power |A|^ell as a diagonal operator.
inline DiagonalOperator diag_pow(const DiagonalOperator& abs_a, FractionalExponent ell) {
  check_modulus_operator(abs_a, "diag_pow");
  double e = ell.ell;
  return map_diag(abs_a, [e](Complex z) { return Complex(std::pow(z.real(), e), 0.0); });
}

/// Forward transform, one component at a time; divides by n_phys so that a
/// coefficient c at wavenumber k represents the field c * exp(i k x).
inline SpectralState to_spectral(const std::vector<CVector>& samples, GridPtr grid) {
  if (!grid->is_full_fft_order())
    throw ContractError("to_spectral: grid must be the full FFT-ordered grid");
  if (samples.empty()) throw DimensionError("to_spectral: no components");
  const std::size_t n = static_cast<std::size_t>(grid->n_phys());
  SpectralState out(grid, static_cast<int>(samples.size()));
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].size() != n) throw DimensionError("to_spectral: sample length mismatch");
    CVector hat = detail::fft(samples[c], &grid->twiddles());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
      out.coeffs[c * n + j] = hat[j] * inv_n;
  }
  if (!all_finite(out.coeffs)) throw NumericsError("to_spectral: non-finite result");
  return out;
}

inline SpectralState to_spectral(const std::vector<std::vector<double>>& samples, GridPtr grid) {
  std::vector<CVector> cs(samples.size());
  for (std::size_t c = 0; c < samples.size(); ++c)
    cs[c] = CVector(samples[c].begin(), samples[c].end());
  return to_spectral(cs, std::move(grid));
}

/// Inverse transform to collocation values at x_j = domain_length * j / n.
inline std::vector<CVector> to_physical(const SpectralState& u) {
  if (!u.grid->is_full_fft_order())
    throw ContractError("to_physical: grid must be the full FFT-ordered grid");
  const std::size_t n = static_cast<std::size_t>(u.grid->n_phys());
  std::vector<CVector> out(static_cast<std::size_t>(u.n_comp));
  for (int c = 0; c < u.n_comp; ++c) {
    CVector hat(u.coeffs.begin() + c * static_cast<long>(n),
                u.coeffs.begin() + (c + 1) * static_cast<long>(n));
    out[static_cast<std::size_t>(c)] = detail::ifft(hat, &u.grid->twiddles());
  }
  return out;
}

// Pointwise state algebra.

inline SpectralState operator+(const SpectralState& a, const SpectralState& b) {
  require_same_grid(*a.grid, *b.grid, "state add");
  if (a.n_comp != b.n_comp) throw DimensionError("state add: component mismatch");
  SpectralState out = a;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += b.coeffs[i];
  return out;
}

inline SpectralState operator-(const SpectralState& a, const SpectralState& b) {
  require_same_grid(*a.grid, *b.grid, "state sub");
  if (a.n_comp != b.n_comp) throw DimensionError("state sub: component mismatch");
  SpectralState out = a;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] -= b.coeffs[i];
  return out;
}

inline SpectralState operator*(Complex s, const SpectralState& a) {
  SpectralState out = a;
  for (Complex& z : out.coeffs) z *= s;
  return out;
}

inline SpectralState operator*(double s, const SpectralState& a) { return Complex(s, 0) * a; }

/// dest += s * src, in place.
inline void add_scaled(SpectralState& dest, Complex s, const SpectralState& src) {
  require_same_grid(*dest.grid, *src.grid, "add_scaled");
  if (dest.n_comp != src.n_comp) throw DimensionError("add_scaled: component mismatch");
  for (std::size_t i = 0; i < dest.coeffs.size(); ++i) dest.coeffs[i] += s * src.coeffs[i];
}

/// Plain l2 norm of the coefficient vector (the ell = 0 scale norm).
inline double l2_norm(const SpectralState& u) {
  double acc = 0.0;
  for (const Complex& z : u.coeffs) acc += std::norm(z);
  return std::sqrt(acc);
}

inline double l2_distance(const SpectralState& a, const SpectralState& b) {
  require_same_grid(*a.grid, *b.grid, "l2_distance");
  if (a.n_comp != b.n_comp) throw DimensionError("l2_distance: component mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) acc += std::norm(a.coeffs[i] - b.coeffs[i]);
  return std::sqrt(acc);
}

}  // namespace explab

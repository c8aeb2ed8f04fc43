#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "explab/spectral.hpp"

namespace explab {

enum class ProblemKind { wave, schroedinger, linear_commuting, custom };

/// Semilinear evolution u' = A u + B(u) in diagonal spectral coordinates.
/// A and absA share the state layout; B and DB_action are pure maps that
/// allocate fresh states, so concurrent evaluation is safe.
struct ProblemSpec {
  std::string name;
  ProblemKind kind = ProblemKind::custom;
  GridPtr grid;
  int n_comp = 1;
  DiagonalOperator A;
  DiagonalOperator absA;
  std::function<SpectralState(const SpectralState&)> B;
  /// DB_action(U0, V): derivative of B at U0 applied to V.
  std::function<SpectralState(const SpectralState&, const SpectralState&)> DB_action;
  /// R -> bound on the DB operator norm over the ball of radius R; may be empty.
  std::function<double(double)> lipschitz_hint;
  /// True when DB_action(U0, .) is complex-linear (dense assembly is valid).
  bool db_complex_linear = false;
  /// Closed-form flow (U0, t) -> U(t); set only for the linear model.
  std::function<SpectralState(const SpectralState&, double)> exact_flow;
};

inline void validate_problem(const ProblemSpec& p) {
  if (!p.grid) throw ContractError("problem: missing grid");
  if (p.n_comp < 1) throw ContractError("problem: n_comp must be >= 1");
  require_match(SpectralState(p.grid, p.n_comp), p.A, "problem A");
  require_match(SpectralState(p.grid, p.n_comp), p.absA, "problem absA");
  check_modulus_operator(p.absA, "problem absA");
  for (const Complex& z : p.A.eigenvalues) {
    if (!finite(z)) throw ContractError("problem: non-finite A eigenvalue");
    if (z.real() > 1e-12 * std::max(1.0, std::abs(z)))
      throw ContractError("problem: A eigenvalue with positive real part");
  }
  if (!p.B || !p.DB_action) throw ContractError("problem: B and DB_action are required");
}

namespace detail {

/// Zero all wavenumbers with |k| > n/3 (classical 2/3 dealiasing rule).
inline void dealias_hat(CVector& hat, const ModeGrid& grid) {
  const int cut = grid.n_phys() / 3;
  const auto& modes = grid.modes();
  for (std::size_t j = 0; j < hat.size(); ++j)
    if (std::abs(modes[j]) > cut) hat[j] = Complex(0, 0);
}

}  // namespace detail

// --- Semilinear wave -------------------------------------------------------
//
// u_tt = u_xx - u + 4 u^2 on the 2 pi torus, written first order in
// (u, v = u_t) and diagonalized per mode to characteristic variables
//   w_plus_k = (v_k/w + i u_k)/sqrt(2),  w_minus_k = (v_k/w - i u_k)/sqrt(2)
// with w = sqrt(k^2 + 1), so A = diag(+i w; -i w) and the nonlinearity
// feeds g = 4 u^2 into both components as g_k / (sqrt(2) w). The scaling
// puts the coefficient l2 norm on the L2 x H^-1 pair, the scale in which
// the rough-data families below have unit norm with order-one amplitudes.

/// Position coefficients u_k from a characteristic-variable state.
inline CVector wave_position_hat(const SpectralState& s) {
  const std::size_t n = s.grid->modes().size();
  CVector u(n);
  for (std::size_t j = 0; j < n; ++j) {
    Complex diff = s.entry(0, static_cast<int>(j)) - s.entry(1, static_cast<int>(j));
    u[j] = Complex(0, -1) * diff / std::sqrt(2.0);
  }
  return u;
}

/// Velocity coefficients v_k from a characteristic-variable state.
inline CVector wave_velocity_hat(const SpectralState& s) {
  const auto& modes = s.grid->modes();
  const std::size_t n = modes.size();
  CVector v(n);
  for (std::size_t j = 0; j < n; ++j) {
    double w = std::sqrt(1.0 + static_cast<double>(modes[j]) * static_cast<double>(modes[j]));
    v[j] = w * (s.entry(0, static_cast<int>(j)) + s.entry(1, static_cast<int>(j))) / std::sqrt(2.0);
  }
  return v;
}

/// Characteristic state from position/velocity coefficient vectors.
inline SpectralState wave_state_from_hats(GridPtr grid, const CVector& u_hat,
                                          const CVector& v_hat) {
  const std::size_t n = grid->modes().size();
  if (u_hat.size() != n || v_hat.size() != n)
    throw DimensionError("wave_state_from_hats: length mismatch");
  SpectralState s(grid, 2);
  for (std::size_t j = 0; j < n; ++j) {
    int k = grid->modes()[j];
    double w = std::sqrt(1.0 + static_cast<double>(k) * static_cast<double>(k));
    Complex iu = Complex(0, 1) * u_hat[j];
    s.entry(0, static_cast<int>(j)) = (v_hat[j] / w + iu) / std::sqrt(2.0);
    s.entry(1, static_cast<int>(j)) = (v_hat[j] / w - iu) / std::sqrt(2.0);
  }
  return s;
}

/// Characteristic state from real collocation samples of u and v.
inline SpectralState wave_from_uv(GridPtr grid, const std::vector<double>& u,
                                  const std::vector<double>& v) {
  SpectralState hat = to_spectral(std::vector<std::vector<double>>{u, v}, grid);
  const std::size_t n = static_cast<std::size_t>(grid->n_phys());
  CVector uh(hat.coeffs.begin(), hat.coeffs.begin() + static_cast<long>(n));
  CVector vh(hat.coeffs.begin() + static_cast<long>(n), hat.coeffs.end());
  return wave_state_from_hats(grid, uh, vh);
}

/// Collocation samples (u, v) recovered from a characteristic state.
inline std::pair<CVector, CVector> wave_to_uv(const SpectralState& s) {
  SpectralState hat(s.grid, 2);
  CVector uh = wave_position_hat(s);
  CVector vh = wave_velocity_hat(s);
  std::copy(uh.begin(), uh.end(), hat.coeffs.begin());
  std::copy(vh.begin(), vh.end(), hat.coeffs.begin() + static_cast<long>(uh.size()));
  auto phys = to_physical(hat);
  return {phys[0], phys[1]};
}

inline ProblemSpec make_wave(int n_phys, bool dealias = false) {
  ProblemSpec p;
  p.name = "wave";
  p.kind = ProblemKind::wave;
  p.grid = ModeGrid::periodic(n_phys);
  p.n_comp = 2;
  p.A = DiagonalOperator(p.grid, 2);
  p.absA = DiagonalOperator(p.grid, 2);
  const auto& modes = p.grid->modes();
  for (std::size_t j = 0; j < modes.size(); ++j) {
    double w = std::sqrt(1.0 + static_cast<double>(modes[j]) * static_cast<double>(modes[j]));
    p.A.entry(0, static_cast<int>(j)) = Complex(0, w);
    p.A.entry(1, static_cast<int>(j)) = Complex(0, -w);
    p.absA.entry(0, static_cast<int>(j)) = Complex(w, 0);
    p.absA.entry(1, static_cast<int>(j)) = Complex(w, 0);
  }

  GridPtr grid = p.grid;
  auto quad_image = [grid, dealias](CVector g_hat) {
    SpectralState out(grid, 2);
    if (dealias) detail::dealias_hat(g_hat, *grid);
    const auto& ms = grid->modes();
    for (std::size_t j = 0; j < g_hat.size(); ++j) {
      double w = std::sqrt(1.0 + static_cast<double>(ms[j]) * static_cast<double>(ms[j]));
      Complex val = g_hat[j] / (std::sqrt(2.0) * w);
      out.entry(0, static_cast<int>(j)) = val;
      out.entry(1, static_cast<int>(j)) = val;
    }
    if (!all_finite(out.coeffs)) throw NumericsError("wave B: non-finite result");
    return out;
  };

  p.B = [grid, dealias, quad_image](const SpectralState& s) {
    require_same_grid(*s.grid, *grid, "wave B");
    CVector uh = wave_position_hat(s);
    if (dealias) detail::dealias_hat(uh, *grid);
    CVector u = detail::ifft(uh, &grid->twiddles());
    for (Complex& z : u) z = 4.0 * z * z;
    CVector gh = detail::fft(u, &grid->twiddles());
    const double inv_n = 1.0 / static_cast<double>(grid->n_phys());
    for (Complex& z : gh) z *= inv_n;
    return quad_image(std::move(gh));
  };

  p.DB_action = [grid, dealias, quad_image](const SpectralState& s0, const SpectralState& v) {
    require_same_grid(*s0.grid, *grid, "wave DB");
    require_same_grid(*v.grid, *grid, "wave DB");
    CVector u0h = wave_position_hat(s0);
    CVector vh = wave_position_hat(v);
    if (dealias) {
      detail::dealias_hat(u0h, *grid);
      detail::dealias_hat(vh, *grid);
    }
    CVector u0 = detail::ifft(u0h, &grid->twiddles());
    CVector vu = detail::ifft(vh, &grid->twiddles());
    for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = 8.0 * u0[i] * vu[i];
    CVector gh = detail::fft(u0, &grid->twiddles());
    const double inv_n = 1.0 / static_cast<double>(grid->n_phys());
    for (Complex& z : gh) z *= inv_n;
    return quad_image(std::move(gh));
  };

  // Convolution bound |(u0 v_u)^_k| <= |u0_hat| |v_u_hat| plus the 1/omega
  // feed weights give |DB(U)V|^2 <= 64 C^2 |U|^2 |V|^2, C^2 = sum_k 1/(1+k^2).
  double csq = 0.0;
  for (std::size_t j = 0; j < modes.size(); ++j)
    csq += 1.0 / (1.0 + static_cast<double>(modes[j]) * static_cast<double>(modes[j]));
  const double c_inf = std::sqrt(csq);
  p.lipschitz_hint = [c_inf](double radius) { return 8.0 * c_inf * radius; };
  p.db_complex_linear = true;
  validate_problem(p);
  return p;
}

// --- Cubic Schroedinger -----------------------------------------------------
//
// u_t = i u_xx - i |u|^2 u, so A = diag(-i k^2) and B(u) = -i |u|^2 u
// evaluated pseudospectrally. DB is only real-linear, which rules the
// problem out of dense Jacobian assembly.

inline ProblemSpec make_nls(int n_phys, bool dealias = false) {
  ProblemSpec p;
  p.name = "nls";
  p.kind = ProblemKind::schroedinger;
  p.grid = ModeGrid::periodic(n_phys);
  p.n_comp = 1;
  p.A = DiagonalOperator(p.grid, 1);
  p.absA = DiagonalOperator(p.grid, 1);
  const auto& modes = p.grid->modes();
  for (std::size_t j = 0; j < modes.size(); ++j) {
    double k2 = static_cast<double>(modes[j]) * static_cast<double>(modes[j]);
    p.A.entry(0, static_cast<int>(j)) = Complex(0, -k2);
    p.absA.entry(0, static_cast<int>(j)) = Complex(k2, 0);
  }

  GridPtr grid = p.grid;
  auto hat_of = [grid, dealias](const SpectralState& s) {
    CVector h(s.coeffs);
    if (dealias) detail::dealias_hat(h, *grid);
    return detail::ifft(h, &grid->twiddles());
  };
  auto back = [grid, dealias](CVector phys) {
    CVector gh = detail::fft(phys, &grid->twiddles());
    const double inv_n = 1.0 / static_cast<double>(grid->n_phys());
    for (Complex& z : gh) z *= inv_n;
    if (dealias) detail::dealias_hat(gh, *grid);
    SpectralState out(grid, 1);
    out.coeffs = std::move(gh);
    if (!all_finite(out.coeffs)) throw NumericsError("nls B: non-finite result");
    return out;
  };

  p.B = [grid, hat_of, back](const SpectralState& s) {
    require_same_grid(*s.grid, *grid, "nls B");
    CVector u = hat_of(s);
    for (Complex& z : u) z = Complex(0, -1) * std::norm(z) * z;
    return back(std::move(u));
  };

  p.DB_action = [grid, hat_of, back](const SpectralState& s0, const SpectralState& v) {
    require_same_grid(*s0.grid, *grid, "nls DB");
    require_same_grid(*v.grid, *grid, "nls DB");
    CVector u0 = hat_of(s0);
    CVector vu = hat_of(v);
    for (std::size_t i = 0; i < u0.size(); ++i) {
      Complex z0 = u0[i];
      vu[i] = Complex(0, -1) * (2.0 * std::norm(z0) * vu[i] + z0 * z0 * std::conj(vu[i]));
    }
    return back(std::move(vu));
  };

  p.db_complex_linear = false;
  validate_problem(p);
  return p;
}

// --- Linear commuting model -------------------------------------------------
//
// A = diag(i k), B = diag(lambda_k) with Re(lambda_k) <= 0; A and B commute
// and exp(t (A + B)) is available in closed form.

inline ProblemSpec make_linear_commuting(int n_phys, std::function<Complex(int)> lambda) {
  ProblemSpec p;
  p.name = "linear-commuting";
  p.kind = ProblemKind::linear_commuting;
  p.grid = ModeGrid::periodic(n_phys);
  p.n_comp = 1;
  p.A = DiagonalOperator(p.grid, 1);
  p.absA = DiagonalOperator(p.grid, 1);
  DiagonalOperator lam(p.grid, 1);
  const auto& modes = p.grid->modes();
  double max_mod = 0.0;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    int k = modes[j];
    p.A.entry(0, static_cast<int>(j)) = Complex(0, k);
    p.absA.entry(0, static_cast<int>(j)) = Complex(std::abs(k), 0);
    Complex lk = lambda(k);
    if (!finite(lk) || lk.real() > 0.0)
      throw ContractError("linear problem: lambda must be finite with Re <= 0");
    lam.entry(0, static_cast<int>(j)) = lk;
    max_mod = std::max(max_mod, std::abs(lk));
  }

  p.B = [lam](const SpectralState& s) { return apply_diag(lam, s); };
  p.DB_action = [lam](const SpectralState&, const SpectralState& v) { return apply_diag(lam, v); };
  p.lipschitz_hint = [max_mod](double) { return max_mod; };
  p.db_complex_linear = true;

  DiagonalOperator a_copy = p.A;
  p.exact_flow = [a_copy, lam](const SpectralState& s, double t) {
    DiagonalOperator flow = a_copy;
    for (std::size_t i = 0; i < flow.eigenvalues.size(); ++i)
      flow.eigenvalues[i] = std::exp(t * (flow.eigenvalues[i] + lam.eigenvalues[i]));
    return apply_diag(flow, s);
  };
  validate_problem(p);
  return p;
}

/// Galerkin-truncated copy: the nonlinearity is squeezed between projections,
/// B_m = P_m B P_m, while A keeps acting on all modes. States started inside
/// the active band stay there.
inline ProblemSpec make_projected_problem(const ProblemSpec& p, double m) {
  if (!(m > 0.0)) throw ContractError("projected problem: m must be positive");
  ProblemSpec q = p;
  q.name = p.name + "-galerkin";
  DiagonalOperator abs_a = p.absA;
  auto b = p.B;
  auto db = p.DB_action;
  q.B = [b, abs_a, m](const SpectralState& s) {
    return project_Pm(b(project_Pm(s, abs_a, m)), abs_a, m);
  };
  q.DB_action = [db, abs_a, m](const SpectralState& s0, const SpectralState& v) {
    return project_Pm(db(project_Pm(s0, abs_a, m), project_Pm(v, abs_a, m)), abs_a, m);
  };
  q.exact_flow = nullptr;
  return q;
}

// --- Initial data -----------------------------------------------------------

/// Rough data of prescribed regularity: coefficients decay like
/// k^-(ell + 1/2 + epsilon), phased so the field is real, jointly normalized
/// to unit scale norm. Deterministic, no randomness involved.
inline SpectralState y_ell_initial_data(const ProblemSpec& p, double ell, double epsilon,
                                        double v_weight = 1.0) {
  if (!(ell >= 0.0) || !std::isfinite(ell)) throw ContractError("initial data: bad ell");
  if (!(epsilon > 0.0)) throw ContractError("initial data: epsilon must be positive");
  const int n = p.grid->n_phys();
  if (n < 4) throw ContractError("initial data: grid too small");
  if (!p.grid->is_full_fft_order()) throw ContractError("initial data: full grid required");

  const std::size_t nn = static_cast<std::size_t>(n);
  CVector pattern(nn, Complex(0, 0));
  for (int k = 1; k <= n / 2 - 1; ++k) {
    double a = std::pow(static_cast<double>(k), -(ell + 0.5 + epsilon));
    pattern[static_cast<std::size_t>(p.grid->index_of(k))] = a * Complex(0.5, -0.5);
    pattern[static_cast<std::size_t>(p.grid->index_of(-k))] = a * Complex(0.5, 0.5);
  }

  SpectralState s;
  if (p.kind == ProblemKind::wave) {
    CVector v_hat = pattern;
    for (Complex& z : v_hat) z *= v_weight;
    s = wave_state_from_hats(p.grid, pattern, v_hat);
  } else {
    s = SpectralState(p.grid, p.n_comp);
    std::copy(pattern.begin(), pattern.end(), s.coeffs.begin());
  }
  double norm = y_ell_norm(s, p.absA, FractionalExponent(ell));
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw NumericsError("initial data: degenerate normalization");
  for (Complex& z : s.coeffs) z /= norm;
  return s;
}

/// Smooth trigonometric data for order studies away from the rough regime.
inline SpectralState smooth_initial_data(const ProblemSpec& p, double amplitude = 1.0) {
  const int n = p.grid->n_phys();
  if (n < 8) throw ContractError("smooth data: grid too small");
  const std::size_t nn = static_cast<std::size_t>(n);
  if (p.kind == ProblemKind::wave) {
    std::vector<double> u(nn), v(nn);
    for (std::size_t j = 0; j < nn; ++j) {
      double x = 2.0 * pi * static_cast<double>(j) / static_cast<double>(n);
      u[j] = amplitude * std::cos(x);
      v[j] = 0.5 * amplitude * std::sin(x);
    }
    return wave_from_uv(p.grid, u, v);
  }
  SpectralState s(p.grid, p.n_comp);
  for (int c = 0; c < p.n_comp; ++c) {
    s.entry(c, p.grid->index_of(1)) = amplitude * Complex(0.5, 0);
    s.entry(c, p.grid->index_of(-1)) = amplitude * Complex(0.5, 0);
    s.entry(c, p.grid->index_of(2)) = amplitude * Complex(0, -0.25);
    s.entry(c, p.grid->index_of(-2)) = amplitude * Complex(0, 0.25);
  }
  return s;
}

}  // namespace explab

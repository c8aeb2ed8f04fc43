#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "explab/exprk.hpp"

namespace explab {

/// Errors below this level are dominated by roundoff and the reference
/// accuracy; such ladder points are excluded from order fits (and flagged).
inline constexpr double noise_floor = 1e-10;

inline const ExponentialTableau& reference_tableau() {
  return builtin_tableaus().at("cox-matthews-4");
}

/// Step ladder: dyadic n = 2^j for j in [j_min, j_max] by default, or an
/// explicit list of step sizes that must divide t_max into whole steps.
struct LadderSpec {
  int j_min = 4;
  int j_max = 9;
  std::vector<double> explicit_h;

  static LadderSpec dyadic(int j_min, int j_max) {
    LadderSpec l;
    l.j_min = j_min;
    l.j_max = j_max;
    return l;
  }

  /// Resolved (h, n_steps) pairs, coarse to fine.
  std::vector<std::pair<double, int>> resolve(double t_max) const {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ContractError("ladder: bad t_max");
    std::vector<std::pair<double, int>> out;
    if (!explicit_h.empty()) {
      for (double h : explicit_h) {
        if (!(h > 0.0)) throw ContractError("ladder: step sizes must be positive");
        double n_real = t_max / h;
        int n = static_cast<int>(std::llround(n_real));
        if (n < 1 || std::abs(n_real - n) > 1e-9 * n_real)
          throw ContractError("ladder: h must divide t_max into whole steps");
        out.emplace_back(t_max / n, n);
      }
      for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].first >= out[i - 1].first)
          throw ContractError("ladder: step sizes must decrease strictly");
      return out;
    }
    if (j_min < 0 || j_max < j_min || j_max > 24) throw ContractError("ladder: bad dyadic range");
    for (int j = j_min; j <= j_max; ++j) {
      int n = 1 << j;
      out.emplace_back(t_max / n, n);
    }
    return out;
  }
};

/// High-accuracy endpoint state: the reference method run with steps a factor
/// 32 below the finest experiment step, validated by doubling. The doubling
/// check is a hard gate, an unreliable reference raises instead of returning.
inline SpectralState reference_solution(const ProblemSpec& p, const SpectralState& u0,
                                        double t_max, double h_floor) {
  if (!(h_floor > 0.0) || !std::isfinite(h_floor))
    throw ContractError("reference: h_floor must be positive");
  if (!(t_max > 0.0)) throw ContractError("reference: t_max must be positive");
  int n_ref = static_cast<int>(std::ceil(t_max / (h_floor / 32.0) - 1e-9));
  n_ref = std::max(n_ref, 1);
  SpectralState coarse = integrate(p, reference_tableau(), u0, t_max, n_ref).u;
  SpectralState fine = integrate(p, reference_tableau(), u0, t_max, 2 * n_ref).u;
  double gap = l2_distance(coarse, fine);
  if (!(gap <= 1e-10))
    throw NumericsError("reference self-validation failed: doubling gap " + std::to_string(gap));
  return fine;
}

/// Endpoint error of one fixed-step run against a reference state (computed
/// on demand when none is supplied).
inline double trajectory_error(const ProblemSpec& p, const ExponentialTableau& t,
                               const SpectralState& u0, double t_max, int n_steps,
                               const SpectralState* reference = nullptr) {
  SpectralState ref = reference ? *reference
                                : reference_solution(p, u0, t_max, t_max / n_steps);
  SpectralState end = integrate(p, t, u0, t_max, n_steps).u;
  return l2_distance(end, ref);
}

struct OrderEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  int points_used = 0;
};

/// Least-squares line through (log x, log y).
inline OrderEstimate loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("loglog_fit: length mismatch");
  if (x.size() < 3) throw ContractError("loglog_fit: need at least 3 points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw ContractError("loglog_fit: points must be positive and finite");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw ContractError("loglog_fit: degenerate abscissae");
  OrderEstimate e;
  e.slope = sxy / sxx;
  e.intercept = my - e.slope * mx;
  for (std::size_t i = 0; i < n; ++i)
    e.max_residual = std::max(e.max_residual, std::abs(ly[i] - (e.intercept + e.slope * lx[i])));
  e.points_used = static_cast<int>(n);
  return e;
}

/// Order fit over a step ladder: slope of log(error) against log(h).
inline OrderEstimate estimate_order(const std::vector<double>& h,
                                    const std::vector<double>& errors) {
  for (std::size_t i = 1; i < h.size(); ++i)
    if (!(h[i] < h[i - 1])) throw ContractError("estimate_order: h must decrease strictly");
  return loglog_fit(h, errors);
}

struct LadderPoint {
  double h = 0.0;
  int n_steps = 0;
  double error = 0.0;
  bool excluded = false;
};

/// Errors along one ladder for one initial state, with the shared reference,
/// plus the order fit over the points above the noise floor.
inline std::pair<std::vector<LadderPoint>, OrderEstimate> scan_ladder(
    const ProblemSpec& p, const ExponentialTableau& t, const SpectralState& u0, double t_max,
    const LadderSpec& ladder) {
  auto rungs = ladder.resolve(t_max);
  if (rungs.size() < 3) throw ContractError("scan_ladder: need at least 3 ladder points");
  SpectralState ref = reference_solution(p, u0, t_max, rungs.back().first);
  std::vector<LadderPoint> points;
  points.reserve(rungs.size());
  for (auto [h, n] : rungs) {
    double err = trajectory_error(p, t, u0, t_max, n, &ref);
    points.push_back({h, n, err, err < noise_floor});
  }
  std::vector<double> hs, es;
  for (const LadderPoint& q : points) {
    if (q.excluded) continue;
    hs.push_back(q.h);
    es.push_back(q.error);
  }
  if (hs.size() < 3)
    throw NumericsError("scan_ladder: fewer than 3 ladder points above the noise floor");
  return {std::move(points), estimate_order(hs, es)};
}

struct OrderScanResult {
  std::vector<double> ells;
  std::vector<std::vector<LadderPoint>> ladders;
  std::vector<OrderEstimate> estimates;
};

/// Empirical convergence order across regularity levels: rough data of scale
/// exponent ell, one ladder per ell, shared time horizon.
inline OrderScanResult order_scan(const ProblemSpec& p, const ExponentialTableau& t,
                                  const std::vector<double>& ells, double t_max,
                                  const LadderSpec& ladder, double epsilon) {
  if (ells.empty()) throw ContractError("order_scan: empty ell list");
  OrderScanResult out;
  for (double ell : ells) {
    SpectralState u0 = y_ell_initial_data(p, ell, epsilon);
    auto [points, est] = scan_ladder(p, t, u0, t_max, ladder);
    out.ells.push_back(ell);
    out.ladders.push_back(std::move(points));
    out.estimates.push_back(est);
  }
  return out;
}

struct SharpnessRow {
  int k = 0;
  double h = 0.0;
  int n_steps = 0;
  double error = 0.0;
};

/// Resonant single-mode probe on the linear commuting model: mode k stepped
/// with h = pi/k for k steps, compared against the closed-form flow. With
/// unweighted data the endpoint error stays order one however large k gets;
/// weighting the coefficient by k^-ell restores an h^ell trend.
inline std::vector<SharpnessRow> sharpness_probe(const std::vector<int>& k_list, Complex lambda,
                                                 std::optional<double> weight_ell = std::nullopt) {
  if (k_list.empty()) throw ContractError("sharpness_probe: empty k list");
  if (!finite(lambda) || lambda.real() > 0.0)
    throw ContractError("sharpness_probe: lambda must be finite with Re <= 0");
  const ExponentialTableau& euler = builtin_tableaus().at("exp-euler");
  std::vector<SharpnessRow> rows;
  for (int k : k_list) {
    if (k < 2) throw ContractError("sharpness_probe: k must be >= 2");
    ProblemSpec p = make_linear_commuting(2 * k, [lambda](int) { return lambda; });
    SpectralState u0(p.grid, 1);
    double amp = weight_ell ? std::pow(static_cast<double>(k), -*weight_ell) : 1.0;
    u0.entry(0, p.grid->index_of(k)) = Complex(amp, 0);
    const double t_max = pi;
    SpectralState end = integrate(p, euler, u0, t_max, k).u;
    SpectralState exact = p.exact_flow(u0, t_max);
    rows.push_back({k, t_max / k, k, l2_distance(end, exact)});
  }
  return rows;
}

struct GalerkinResult {
  std::vector<double> m_values;
  std::vector<double> errors;
  OrderEstimate fit;
};

/// Spatial truncation study: integrate the projected system at several cut
/// levels m with the reference method and compare endpoints against the full
/// solution. The fitted slope of log(error) against log(m) estimates the
/// projection rate (-ell for data of scale exponent ell).
inline GalerkinResult galerkin_scan(const ProblemSpec& p, const SpectralState& u0, double t_max,
                                    const std::vector<double>& m_list, int n_time = 2048) {
  if (m_list.size() < 3) throw ContractError("galerkin_scan: need at least 3 cut levels");
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    if (!(m_list[i] > 0.0)) throw ContractError("galerkin_scan: m must be positive");
    if (i > 0 && !(m_list[i] > m_list[i - 1]))
      throw ContractError("galerkin_scan: m list must increase strictly");
  }
  double resolvable = 0.0;
  for (const Complex& z : p.absA.eigenvalues) resolvable = std::max(resolvable, z.real());
  if (m_list.back() > 0.5 * resolvable)
    throw ContractError("galerkin_scan: largest m exceeds half the resolvable range");
  if (n_time < 1) throw ContractError("galerkin_scan: n_time must be >= 1");

  SpectralState truth = reference_solution(p, u0, t_max, t_max / 256.0);
  GalerkinResult out;
  for (double m : m_list) {
    ProblemSpec pm = make_projected_problem(p, m);
    SpectralState u0m = project_Pm(u0, p.absA, m);
    SpectralState end = integrate(pm, reference_tableau(), u0m, t_max, n_time).u;
    double err = l2_distance(end, truth);
    out.m_values.push_back(m);
    out.errors.push_back(err);
  }
  std::vector<double> ms, es;
  for (std::size_t i = 0; i < out.errors.size(); ++i) {
    if (out.errors[i] < noise_floor) continue;
    ms.push_back(out.m_values[i]);
    es.push_back(out.errors[i]);
  }
  if (ms.size() < 3)
    throw NumericsError("galerkin_scan: fewer than 3 levels above the noise floor");
  out.fit = loglog_fit(ms, es);
  return out;
}

}  // namespace explab

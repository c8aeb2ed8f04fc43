#pragma once

#include <utility>

#include "explab/exprk.hpp"
#include "explab/phi.hpp"

namespace explab {

/// Dense realization of h * J(U0) = h * (A + DB(U0)) restricted to the
/// (component, mode) slots with |A|-eigenvalue <= m_active. `active` maps
/// dense row/column indices back into SpectralState::coeffs.
struct JacobianOperator {
  DenseMatrix base;
  double h = 1.0;
  std::vector<std::size_t> active;
  GridPtr grid;
  int n_comp = 0;
};

inline std::vector<std::size_t> active_slots(const ProblemSpec& p, double m_active) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.absA.eigenvalues.size(); ++i)
    if (p.absA.eigenvalues[i].real() <= m_active) idx.push_back(i);
  return idx;
}

inline CVector gather(const SpectralState& s, const std::vector<std::size_t>& idx) {
  CVector v(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) v[j] = s.coeffs[idx[j]];
  return v;
}

inline SpectralState scatter(const CVector& v, const std::vector<std::size_t>& idx, GridPtr grid,
                             int n_comp) {
  SpectralState s(std::move(grid), n_comp);
  if (v.size() != idx.size()) throw DimensionError("scatter: length mismatch");
  for (std::size_t j = 0; j < idx.size(); ++j) s.coeffs[idx[j]] = v[j];
  return s;
}

/// Unscaled Jacobian J(U0) = A + DB(U0) on the active slots, built by
/// applying the derivative action to each spectral basis vector. Requires a
/// complex-linear derivative; methods with only real-linear DB are rejected.
inline JacobianOperator assemble_jacobian(const ProblemSpec& p, const SpectralState& u0,
                                          double m_active) {
  validate_problem(p);
  require_same_grid(*u0.grid, *p.grid, "assemble_jacobian");
  if (!p.db_complex_linear)
    throw ContractError("assemble_jacobian: problem derivative is not complex-linear");
  if (!(m_active > 0.0)) throw ContractError("assemble_jacobian: m_active must be positive");
  JacobianOperator jac;
  jac.active = active_slots(p, m_active);
  const int d = static_cast<int>(jac.active.size());
  if (d < 1) throw ContractError("assemble_jacobian: empty active set");
  if (d > dense_dim_limit) throw ContractError("assemble_jacobian: dimension exceeds dense limit");
  jac.base = DenseMatrix(d);
  jac.h = 1.0;
  jac.grid = p.grid;
  jac.n_comp = p.n_comp;
  for (int j = 0; j < d; ++j) {
    SpectralState ej(p.grid, p.n_comp);
    ej.coeffs[jac.active[static_cast<std::size_t>(j)]] = Complex(1, 0);
    SpectralState col = p.DB_action(u0, ej);
    for (int i = 0; i < d; ++i)
      jac.base.at(i, j) = col.coeffs[jac.active[static_cast<std::size_t>(i)]];
  }
  for (int i = 0; i < d; ++i)
    jac.base.at(i, i) += p.A.eigenvalues[jac.active[static_cast<std::size_t>(i)]];
  return jac;
}

/// Nonlinear remainder G(U, U0) = B(U) - DB(U0) U.
inline SpectralState remainder_G(const ProblemSpec& p, const SpectralState& u,
                                 const SpectralState& u0) {
  return p.B(u) - p.DB_action(u0, u);
}

inline const std::map<std::string, ExponentialTableau>& builtin_rosenbrock_tableaus() {
  static const std::map<std::string, ExponentialTableau> table = [] {
    std::map<std::string, ExponentialTableau> out;
    {
      // Exponential Rosenbrock-Euler: single stage at the left endpoint,
      // update weight phi_1. Second order despite the single stage.
      ExponentialTableau t;
      t.name = "rosenbrock-euler";
      t.s = 1;
      t.c = {0.0};
      t.a = {{CoefficientFn()}};
      t.b = {CoefficientFn::phi(1)};
      t.order = 2;
      t.is_explicit = true;
      validate(t);
      out[t.name] = t;
    }
    return out;
  }();
  return table;
}

namespace detail {

/// f(hJ) v for a phi-combination f, grouping terms by their scale so each
/// distinct scaled matrix costs one augmented exponential.
inline CVector apply_coeff_dense(const CoefficientFn& f, const DenseMatrix& h_j, const CVector& v) {
  CVector acc(v.size(), Complex(0, 0));
  std::map<double, std::vector<int>> by_scale;
  for (const PhiTerm& t : f.terms()) by_scale[t.scale].push_back(t.order);
  for (auto& [scale, orders] : by_scale) {
    if (scale == 0.0) {
      for (const PhiTerm& t : f.terms()) {
        if (t.scale != 0.0) continue;
        double w = t.weight / factorial(t.order);
        for (std::size_t i = 0; i < v.size(); ++i) acc[i] += w * v[i];
      }
      continue;
    }
    DenseMatrix scaled = h_j;
    for (Complex& z : scaled.entries) z *= scale;
    auto mv = phi_matvec(orders, scaled, v);
    for (const PhiTerm& t : f.terms()) {
      if (t.scale != scale) continue;
      const CVector& col = mv.at(t.order);
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += t.weight * col[i];
    }
  }
  return acc;
}

}  // namespace detail

/// One-step map of an exponential Rosenbrock method. Each step linearizes at
/// the projected state P_m U0, treats the active slots with dense matrix
/// functions of hJ, and propagates the complementary slots by the exact
/// diagonal flow exp(hA), matching the projected evolution equation.
class RosenbrockStepper {
 public:
  RosenbrockStepper(const ProblemSpec& problem, const ExponentialTableau& tableau, double m_active,
                    StageSolveConfig cfg = {})
      : prob_(&problem), tab_(tableau), m_active_(m_active), cfg_(cfg) {
    validate(tab_);
    validate_problem(*prob_);
    if (!prob_->db_complex_linear)
      throw ContractError("rosenbrock: problem derivative is not complex-linear");
    if (!(m_active > 0.0)) throw ContractError("rosenbrock: m_active must be positive");
    exp_ha_cache_h_ = -1.0;
  }

  std::pair<SpectralState, StepReport> step(const SpectralState& u0, double h) const {
    if (!(h >= 0.0) || !std::isfinite(h)) throw ContractError("rosenbrock: bad h");
    if (h == 0.0) return {u0, StepReport{1, 0.0, {}}};
    SpectralState u0p = project_Pm(u0, prob_->absA, m_active_);
    SpectralState tail = u0 - u0p;
    JacobianOperator jac = assemble_jacobian(*prob_, u0p, m_active_);
    DenseMatrix h_j = jac.base;
    for (Complex& z : h_j.entries) z *= h;
    const int d = h_j.dim;
    CVector u0a = gather(u0p, jac.active);

    StepReport rep{1, 0.0, {}};
    const std::size_t s = static_cast<std::size_t>(tab_.s);
    std::vector<CVector> w(s), g(s);
    auto eval_g = [&](const CVector& wa) {
      SpectralState ws = scatter(wa, jac.active, prob_->grid, prob_->n_comp);
      SpectralState gs = remainder_G(*prob_, ws, u0p);
      if (!all_finite(gs.coeffs)) throw NumericsError("rosenbrock: non-finite remainder");
      return gather(gs, jac.active);
    };

    if (tab_.is_explicit) {
      for (std::size_t i = 0; i < s; ++i) {
        w[i] = stage_init(h_j, u0a, tab_.c[i]);
        for (std::size_t j = 0; j < i; ++j) {
          const CoefficientFn& f = tab_.a[i][j];
          if (f.is_zero()) continue;
          CVector av = detail::apply_coeff_dense(f, h_j, g[j]);
          for (int q = 0; q < d; ++q) w[i][static_cast<std::size_t>(q)] +=
              h * av[static_cast<std::size_t>(q)];
        }
        g[i] = eval_g(w[i]);
      }
    } else {
      if (cfg_.contraction_guard) check_contraction(u0, h);
      std::vector<CVector> init(s);
      for (std::size_t i = 0; i < s; ++i) {
        init[i] = stage_init(h_j, u0a, tab_.c[i]);
        w[i] = init[i];
      }
      bool converged = false;
      for (int it = 1; it <= cfg_.max_iter; ++it) {
        for (std::size_t j = 0; j < s; ++j) g[j] = eval_g(w[j]);
        double resid = 0.0;
        std::vector<CVector> next(s);
        for (std::size_t i = 0; i < s; ++i) {
          next[i] = init[i];
          for (std::size_t j = 0; j < s; ++j) {
            const CoefficientFn& f = tab_.a[i][j];
            if (f.is_zero()) continue;
            CVector av = detail::apply_coeff_dense(f, h_j, g[j]);
            for (int q = 0; q < d; ++q) next[i][static_cast<std::size_t>(q)] +=
                h * av[static_cast<std::size_t>(q)];
          }
          double dsq = 0.0;
          for (int q = 0; q < d; ++q) dsq += std::norm(next[i][static_cast<std::size_t>(q)] -
                                                       w[i][static_cast<std::size_t>(q)]);
          resid = std::max(resid, std::sqrt(dsq));
        }
        w = std::move(next);
        rep.iterations = it;
        rep.residual = resid;
        rep.residual_history.push_back(resid);
        if (resid <= cfg_.tol) {
          converged = true;
          for (std::size_t j = 0; j < s; ++j) g[j] = eval_g(w[j]);
          break;
        }
      }
      if (!converged)
        throw NumericsError("rosenbrock stage iteration: no convergence after " +
                            std::to_string(cfg_.max_iter) + " iterations");
    }

    // Update: exp(hJ) u0 plus the h-weighted b_i(hJ) g_i contributions.
    CVector u1a = detail::apply_coeff_dense(CoefficientFn::phi(0), h_j, u0a);
    for (std::size_t i = 0; i < s; ++i) {
      const CoefficientFn& f = tab_.b[i];
      if (f.is_zero()) continue;
      CVector bv = detail::apply_coeff_dense(f, h_j, g[i]);
      for (int q = 0; q < d; ++q) u1a[static_cast<std::size_t>(q)] +=
          h * bv[static_cast<std::size_t>(q)];
    }

    SpectralState u1 = scatter(u1a, jac.active, prob_->grid, prob_->n_comp);
    if (l2_norm(tail) > 0.0) {
      ensure_exp_ha(h);
      add_scaled(u1, Complex(1, 0), apply_diag(exp_ha_, tail));
    }
    if (!all_finite(u1.coeffs)) throw NumericsError("rosenbrock: non-finite update");
    return {std::move(u1), std::move(rep)};
  }

  IntegrateResult integrate(const SpectralState& u0, double t_max, int n_steps,
                            std::vector<double>* norm_trace = nullptr) const {
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ContractError("rosenbrock: bad t_max");
    if (n_steps < 1) throw ContractError("rosenbrock: n_steps must be >= 1");
    const double h = t_max / static_cast<double>(n_steps);
    IntegrateResult out{u0, {}};
    for (int n = 0; n < n_steps; ++n) {
      try {
        auto [u1, rep] = step(out.u, h);
        out.u = std::move(u1);
        out.reports.push_back(std::move(rep));
      } catch (const NumericsError& e) {
        throw NumericsError("rosenbrock integrate: step " + std::to_string(n + 1) + "/" +
                            std::to_string(n_steps) + " failed: " + e.what());
      }
      if (norm_trace) norm_trace->push_back(l2_norm(out.u));
    }
    return out;
  }

 private:
  CVector stage_init(const DenseMatrix& h_j, const CVector& u0a, double ci) const {
    if (ci == 0.0) return u0a;
    DenseMatrix scaled = h_j;
    for (Complex& z : scaled.entries) z *= ci;
    return phi_matvec({0}, scaled, u0a).at(0);
  }

  void check_contraction(const SpectralState& u0, double h) const {
    if (!prob_->lipschitz_hint)
      throw ContractError("contraction guard: problem provides no Lipschitz estimate");
    double ma = 0.0;
    for (int i = 0; i < tab_.s; ++i) {
      double row = 0.0;
      for (int j = 0; j < tab_.s; ++j)
        row += tab_.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].sup_bound();
      ma = std::max(ma, row);
    }
    // The remainder derivative DG(U) = DB(U) - DB(U0) is bounded by twice
    // the DB bound on the ball.
    const double mp = 2.0 * prob_->lipschitz_hint(2.0 * l2_norm(u0));
    if (2.0 * h * ma * mp > 1.0)
      throw ContractError("contraction guard: 2 h M_a M' exceeds 1");
  }

  void ensure_exp_ha(double h) const {
    if (exp_ha_cache_h_ == h) return;
    exp_ha_ = phi_diag(PhiOrder(0), map_diag(prob_->A, [h](Complex z) { return h * z; }));
    exp_ha_cache_h_ = h;
  }

  const ProblemSpec* prob_;
  ExponentialTableau tab_;
  double m_active_;
  StageSolveConfig cfg_;
  mutable DiagonalOperator exp_ha_;
  mutable double exp_ha_cache_h_ = -1.0;
};

inline std::pair<SpectralState, StepReport> rosenbrock_step(const ProblemSpec& p,
                                                            const ExponentialTableau& t,
                                                            const SpectralState& u0, double h,
                                                            double m_active,
                                                            StageSolveConfig cfg = {}) {
  return RosenbrockStepper(p, t, m_active, cfg).step(u0, h);
}

}  // namespace explab

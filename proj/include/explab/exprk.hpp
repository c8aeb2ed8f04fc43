#pragma once

#include <optional>
#include <utility>

#include "explab/problems.hpp"
#include "explab/tableau.hpp"

namespace explab {

struct StageSolveConfig {
  double tol = 1e-12;
  int max_iter = 50;
  bool contraction_guard = false;
};

struct StepReport {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

/// One-step map of an exponential Runge-Kutta method. All coefficient
/// operators a_ij(hA), b_i(hA), exp(c_i hA) are evaluated once at
/// construction since the step size is fixed along a run.
class ExpRkStepper {
 public:
  ExpRkStepper(const ProblemSpec& problem, const ExponentialTableau& tableau, double h,
               StageSolveConfig cfg = {})
      : prob_(&problem), tab_(tableau), h_(h), cfg_(cfg) {
    validate(tab_);
    validate_problem(*prob_);
    if (!(h >= 0.0) || !std::isfinite(h)) throw ContractError("stepper: h must be finite and >= 0");
    if (h == 0.0) return;
    DiagonalOperator h_a = map_diag(prob_->A, [h](Complex z) { return h * z; });
    exp_h_ = phi_diag(PhiOrder(0), h_a);
    exp_ch_.reserve(static_cast<std::size_t>(tab_.s));
    for (int i = 0; i < tab_.s; ++i) {
      double ci = tab_.c[static_cast<std::size_t>(i)];
      exp_ch_.push_back(
          phi_diag(PhiOrder(0), map_diag(h_a, [ci](Complex z) { return ci * z; })));
    }
    a_ops_.assign(static_cast<std::size_t>(tab_.s), {});
    for (int i = 0; i < tab_.s; ++i) {
      a_ops_[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(tab_.s));
      for (int j = 0; j < tab_.s; ++j) {
        const CoefficientFn& f = tab_.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (!f.is_zero()) a_ops_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            eval_diag(f, h_a);
      }
    }
    b_ops_.assign(static_cast<std::size_t>(tab_.s), std::nullopt);
    for (int i = 0; i < tab_.s; ++i) {
      const CoefficientFn& f = tab_.b[static_cast<std::size_t>(i)];
      if (!f.is_zero()) b_ops_[static_cast<std::size_t>(i)] = eval_diag(f, h_a);
    }
  }

  double h() const { return h_; }
  const ExponentialTableau& tableau() const { return tab_; }

  /// Internal stage values W_1..W_s.
  std::vector<SpectralState> solve_stages(const SpectralState& u0, StepReport* report = nullptr) const {
    StepReport rep;
    std::vector<SpectralState> w = stages_impl(u0, rep).first;
    if (report) *report = std::move(rep);
    return w;
  }

  std::pair<SpectralState, StepReport> step(const SpectralState& u0) const {
    if (h_ == 0.0) return {u0, StepReport{1, 0.0, {}}};
    StepReport rep;
    auto [w, bw] = stages_impl(u0, rep);
    SpectralState u1 = apply_diag(exp_h_, u0);
    for (int i = 0; i < tab_.s; ++i) {
      if (!b_ops_[static_cast<std::size_t>(i)]) continue;
      if (!bw[static_cast<std::size_t>(i)])
        bw[static_cast<std::size_t>(i)] = eval_b(w[static_cast<std::size_t>(i)]);
      add_scaled(u1, Complex(h_, 0),
                 apply_diag(*b_ops_[static_cast<std::size_t>(i)], *bw[static_cast<std::size_t>(i)]));
    }
    if (!all_finite(u1.coeffs)) throw NumericsError("step: non-finite update");
    return {std::move(u1), std::move(rep)};
  }

 private:
  SpectralState eval_b(const SpectralState& w) const {
    SpectralState bw = prob_->B(w);
    if (!all_finite(bw.coeffs)) throw NumericsError("step: non-finite B evaluation (blow-up?)");
    return bw;
  }

  void check_contraction(const SpectralState& u0) const {
    if (!prob_->lipschitz_hint)
      throw ContractError("contraction guard: problem provides no Lipschitz estimate");
    double ma = 0.0;
    for (int i = 0; i < tab_.s; ++i) {
      double row = 0.0;
      for (int j = 0; j < tab_.s; ++j)
        row += tab_.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].sup_bound();
      ma = std::max(ma, row);
    }
    const double radius = 2.0 * l2_norm(u0);
    const double mp = prob_->lipschitz_hint(radius);
    if (2.0 * h_ * ma * mp > 1.0)
      throw ContractError("contraction guard: 2 h M_a M' = " +
                          std::to_string(2.0 * h_ * ma * mp) + " exceeds 1");
  }

  std::pair<std::vector<SpectralState>, std::vector<std::optional<SpectralState>>> stages_impl(
      const SpectralState& u0, StepReport& rep) const {
    const std::size_t s = static_cast<std::size_t>(tab_.s);
    if (h_ == 0.0) {
      rep = StepReport{1, 0.0, {}};
      return {std::vector<SpectralState>(s, u0), std::vector<std::optional<SpectralState>>(s)};
    }
    std::vector<SpectralState> w(s);
    std::vector<std::optional<SpectralState>> bw(s);
    if (tab_.is_explicit) {
      for (std::size_t i = 0; i < s; ++i) {
        w[i] = apply_diag(exp_ch_[i], u0);
        for (std::size_t j = 0; j < i; ++j) {
          if (!a_ops_[i][j]) continue;
          if (!bw[j]) bw[j] = eval_b(w[j]);
          add_scaled(w[i], Complex(h_, 0), apply_diag(*a_ops_[i][j], *bw[j]));
        }
      }
      rep = StepReport{1, 0.0, {}};
      return {std::move(w), std::move(bw)};
    }

    if (cfg_.contraction_guard) check_contraction(u0);
    std::vector<SpectralState> init(s);
    for (std::size_t i = 0; i < s; ++i) {
      init[i] = apply_diag(exp_ch_[i], u0);
      w[i] = init[i];
    }
    rep = StepReport{};
    for (int it = 1; it <= cfg_.max_iter; ++it) {
      for (std::size_t j = 0; j < s; ++j) bw[j] = eval_b(w[j]);
      double resid = 0.0;
      std::vector<SpectralState> next(s);
      for (std::size_t i = 0; i < s; ++i) {
        next[i] = init[i];
        for (std::size_t j = 0; j < s; ++j) {
          if (!a_ops_[i][j]) continue;
          add_scaled(next[i], Complex(h_, 0), apply_diag(*a_ops_[i][j], *bw[j]));
        }
        resid = std::max(resid, l2_distance(next[i], w[i]));
      }
      w = std::move(next);
      rep.iterations = it;
      rep.residual = resid;
      rep.residual_history.push_back(resid);
      if (resid <= cfg_.tol) {
        for (std::size_t j = 0; j < s; ++j) bw[j] = eval_b(w[j]);
        return {std::move(w), std::move(bw)};
      }
    }
    throw NumericsError("stage iteration: no convergence after " +
                        std::to_string(cfg_.max_iter) +
                        " iterations, residual " + std::to_string(rep.residual));
  }

  const ProblemSpec* prob_;
  ExponentialTableau tab_;
  double h_;
  StageSolveConfig cfg_;
  std::vector<DiagonalOperator> exp_ch_;
  DiagonalOperator exp_h_;
  std::vector<std::vector<std::optional<DiagonalOperator>>> a_ops_;
  std::vector<std::optional<DiagonalOperator>> b_ops_;
};

inline std::vector<SpectralState> solve_stages(const ProblemSpec& p, const ExponentialTableau& t,
                                               const SpectralState& u0, double h,
                                               StageSolveConfig cfg = {},
                                               StepReport* report = nullptr) {
  return ExpRkStepper(p, t, h, cfg).solve_stages(u0, report);
}

inline std::pair<SpectralState, StepReport> step(const ProblemSpec& p,
                                                 const ExponentialTableau& t,
                                                 const SpectralState& u0, double h,
                                                 StageSolveConfig cfg = {}) {
  return ExpRkStepper(p, t, h, cfg).step(u0);
}

struct IntegrateResult {
  SpectralState u;
  std::vector<StepReport> reports;
};

/// Fixed-step integration over [0, T] with n_steps steps. The optional trace
/// records the scale norm after every step, for blow-up monitoring.
inline IntegrateResult integrate(const ProblemSpec& p, const ExponentialTableau& t,
                                 const SpectralState& u0, double t_max, int n_steps,
                                 StageSolveConfig cfg = {},
                                 std::vector<double>* norm_trace = nullptr) {
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ContractError("integrate: bad t_max");
  if (n_steps < 1) throw ContractError("integrate: n_steps must be >= 1");
  const double h = t_max / static_cast<double>(n_steps);
  ExpRkStepper stepper(p, t, h, cfg);
  IntegrateResult out{u0, {}};
  out.reports.reserve(static_cast<std::size_t>(n_steps));
  for (int n = 0; n < n_steps; ++n) {
    try {
      auto [u1, rep] = stepper.step(out.u);
      out.u = std::move(u1);
      out.reports.push_back(std::move(rep));
    } catch (const NumericsError& e) {
      throw NumericsError("integrate: step " + std::to_string(n + 1) + "/" +
                          std::to_string(n_steps) + " failed: " + e.what());
    }
    if (norm_trace) norm_trace->push_back(l2_norm(out.u));
  }
  return out;
}

}  // namespace explab

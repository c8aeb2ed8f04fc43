#pragma once

#include <map>
#include <string>
#include <vector>

#include "explab/phi.hpp"

namespace explab {

/// One summand weight * phi_order(scale * z), scale >= 0.
struct PhiTerm {
  double weight = 0.0;
  int order = 0;
  double scale = 1.0;
};

/// Finite linear combination of scaled phi functions. The default-constructed
/// value is identically zero.
class CoefficientFn {
 public:
  CoefficientFn() = default;

  static CoefficientFn phi(int order, double weight = 1.0, double scale = 1.0) {
    CoefficientFn f;
    f.add(weight, order, scale);
    return f;
  }

  CoefficientFn& add(double weight, int order, double scale = 1.0) {
    PhiOrder check(order);
    if (!(scale >= 0.0) || !std::isfinite(scale))
      throw ContractError("CoefficientFn: scale must be finite and >= 0");
    if (!std::isfinite(weight)) throw ContractError("CoefficientFn: non-finite weight");
    if (weight != 0.0) terms_.push_back({weight, order, scale});
    return *this;
  }

  bool is_zero() const { return terms_.empty(); }
  const std::vector<PhiTerm>& terms() const { return terms_; }

  Complex eval(Complex z) const {
    Complex acc(0, 0);
    for (const PhiTerm& t : terms_) acc += t.weight * phi_scalar(PhiOrder(t.order), t.scale * z);
    return acc;
  }

  /// Bound on |f(z)| over the closed left half-plane: |phi_k| <= 1/k! there.
  double sup_bound() const {
    double acc = 0.0;
    for (const PhiTerm& t : terms_) acc += std::abs(t.weight) / detail::factorial(t.order);
    return acc;
  }

  int max_order() const {
    int p = 0;
    for (const PhiTerm& t : terms_) p = std::max(p, t.order);
    return p;
  }

 private:
  std::vector<PhiTerm> terms_;
};

inline DiagonalOperator eval_diag(const CoefficientFn& f, const DiagonalOperator& h_a) {
  return map_diag(h_a, [&f](Complex z) { return f.eval(z); });
}

/// Exponential Runge-Kutta tableau with coefficient functions a_ij(z), b_i(z)
/// and nodes c_i. `order` is the classical order used for q = min(ell, p).
struct ExponentialTableau {
  std::string name;
  int s = 0;
  std::vector<double> c;
  std::vector<std::vector<CoefficientFn>> a;
  std::vector<CoefficientFn> b;
  int order = 0;
  bool is_explicit = true;
};

inline bool strictly_lower(const std::vector<std::vector<CoefficientFn>>& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j < a[i].size(); ++j)
      if (!a[i][j].is_zero()) return false;
  return true;
}

inline void validate(const ExponentialTableau& t) {
  if (t.s < 1) throw ContractError("tableau " + t.name + ": needs at least one stage");
  if (static_cast<int>(t.c.size()) != t.s || static_cast<int>(t.b.size()) != t.s ||
      static_cast<int>(t.a.size()) != t.s)
    throw ContractError("tableau " + t.name + ": inconsistent stage count");
  for (const auto& row : t.a)
    if (static_cast<int>(row.size()) != t.s)
      throw ContractError("tableau " + t.name + ": ragged a matrix");
  for (int i = 0; i < t.s; ++i) {
    if (!(t.c[static_cast<std::size_t>(i)] >= 0.0 && t.c[static_cast<std::size_t>(i)] <= 1.0))
      throw ContractError("tableau " + t.name + ": nodes must lie in [0, 1]");
    if (i > 0 && t.c[static_cast<std::size_t>(i)] < t.c[static_cast<std::size_t>(i) - 1])
      throw ContractError("tableau " + t.name + ": nodes must be nondecreasing");
  }
  if (t.order < 1) throw ContractError("tableau " + t.name + ": order must be >= 1");
  if (t.is_explicit != strictly_lower(t.a))
    throw ContractError("tableau " + t.name + ": is_explicit flag contradicts a matrix");
}

/// Consistency sum b_1(0) + ... + b_s(0); equals 1 for a consistent method.
inline double consistency_sum(const ExponentialTableau& t) {
  double acc = 0.0;
  for (const CoefficientFn& f : t.b) acc += f.eval(Complex(0, 0)).real();
  return acc;
}

inline const std::map<std::string, ExponentialTableau>& builtin_tableaus() {
  static const std::map<std::string, ExponentialTableau> table = [] {
    std::map<std::string, ExponentialTableau> out;

    {
      ExponentialTableau t;
      t.name = "exp-euler";
      t.s = 1;
      t.c = {0.0};
      t.a = {{CoefficientFn()}};
      t.b = {CoefficientFn::phi(1)};
      t.order = 1;
      t.is_explicit = true;
      validate(t);
      out[t.name] = t;
    }

    {
      // One-stage method with weight e^z: first order, classical collocation flavor.
      ExponentialTableau t;
      t.name = "euler-larson";
      t.s = 1;
      t.c = {0.0};
      t.a = {{CoefficientFn()}};
      t.b = {CoefficientFn::phi(0)};
      t.order = 1;
      t.is_explicit = true;
      validate(t);
      out[t.name] = t;
    }

    {
      // Lawson-Euler applied implicitly: stage at c = 1 feeds back into itself
      // with unit weight, update weight identically one.
      ExponentialTableau t;
      t.name = "implicit-lawson-euler";
      t.s = 1;
      t.c = {1.0};
      t.a = {{CoefficientFn::phi(0, 1.0, 0.0)}};
      t.b = {CoefficientFn::phi(0, 1.0, 0.0)};
      t.order = 1;
      t.is_explicit = false;
      validate(t);
      out[t.name] = t;
    }

    {
      // Classical fourth-order scheme of Cox and Matthews in phi form. The
      // a_41 entry uses exp(z/2) phi_1(z/2) = 2 phi_1(z) - phi_1(z/2).
      ExponentialTableau t;
      t.name = "cox-matthews-4";
      t.s = 4;
      t.c = {0.0, 0.5, 0.5, 1.0};
      t.a.assign(4, std::vector<CoefficientFn>(4));
      t.a[1][0] = CoefficientFn::phi(1, 0.5, 0.5);
      t.a[2][1] = CoefficientFn::phi(1, 0.5, 0.5);
      t.a[3][0] = CoefficientFn::phi(1, 1.0, 1.0).add(-1.0, 1, 0.5);
      t.a[3][2] = CoefficientFn::phi(1, 1.0, 0.5);
      t.b.assign(4, CoefficientFn());
      t.b[0] = CoefficientFn::phi(1).add(-3.0, 2).add(4.0, 3);
      t.b[1] = CoefficientFn::phi(2, 2.0).add(-4.0, 3);
      t.b[2] = CoefficientFn::phi(2, 2.0).add(-4.0, 3);
      t.b[3] = CoefficientFn::phi(2, -1.0).add(4.0, 3);
      t.order = 4;
      t.is_explicit = true;
      validate(t);
      out[t.name] = t;
    }

    return out;
  }();
  return table;
}

inline const ExponentialTableau& find_tableau(const std::map<std::string, ExponentialTableau>& all,
                                              const std::string& name) {
  auto it = all.find(name);
  if (it == all.end()) throw ConfigError("unknown method: " + name);
  return it->second;
}

}  // namespace explab

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "torusnf/common.hpp"

namespace torusnf {

/// Finite sum  sum_j c_j exp(i (k_j x + w_j t))  with integer k_j.
class ExpPoly {
 public:
  struct Mode {
    int k;
    double w;
    cplx c;
  };

  ExpPoly() = default;
  static ExpPoly constant(cplx c);
  static ExpPoly exponential(int k, double w, cplx c);
  /// c cos(kx + wt + p), or c sin(...) when `sine` is set.
  static ExpPoly trig(cplx c, int k, double w, double p, bool sine);

  const std::vector<Mode>& modes() const { return modes_; }
  bool empty() const { return modes_.empty(); }
  int bandwidth() const;
  bool time_independent() const;

  cplx operator()(double t, double x) const;
  /// Coefficient of e^{ikx} at time t.
  cplx coefficient(int k, double t) const;

  ExpPoly dx(int order = 1) const;
  ExpPoly dt(int order = 1) const;
  ExpPoly conj() const;
  ExpPoly average() const;
  ExpPoly inv_dx() const;
  ExpPoly scaled(cplx s) const;

  friend ExpPoly operator+(const ExpPoly& a, const ExpPoly& b);
  friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b);

 private:
  void normalize();
  std::vector<Mode> modes_;
};

/// m(t, xi) together with its xi-derivatives of any order.
class Multiplier {
 public:
  /// Returns the d-th xi-derivative at (t, xi).
  using Fn = std::function<cplx(double t, double xi, int d)>;

  Multiplier();
  Multiplier(Fn f, std::string label, bool time_independent = true);

  static Multiplier constant(cplx c);
  static Multiplier xi();
  /// |xi|^p chi(xi)
  static Multiplier power_chi(double p);
  /// |xi|^{p-1} xi chi(xi)
  static Multiplier signed_power_chi(double p);
  static Multiplier chi0();
  /// Arbitrary m(t, xi); derivatives by central differences of step 1.
  static Multiplier from_function(std::function<cplx(double, double)> f, std::string label,
                                  bool time_independent = true);

  cplx operator()(double t, double xi) const { return fn_(t, xi, 0); }
  cplx derivative(double t, double xi, int d) const { return fn_(t, xi, d); }

  Multiplier dxi(int order = 1) const;
  /// xi -> m(t, xi + s)
  Multiplier shifted(double s) const;
  Multiplier conj() const;
  Multiplier scaled(cplx s) const;
  bool is_constant() const { return constant_; }
  cplx constant_value() const { return fn_(0.0, 0.0, 0); }
  bool time_independent() const { return time_independent_; }
  const std::string& label() const { return label_; }

  friend Multiplier operator*(const Multiplier& a, const Multiplier& b);

 private:
  Fn fn_;
  std::string label_;
  bool time_independent_ = true;
  bool constant_ = false;
};

/// d-th central difference of step 1: ((E - E^{-1})/2)^d f at xi.
cplx central_difference(const std::function<cplx(double)>& f, double xi, int d);

/// One separable piece f(t, x) m(t, xi).
struct SymbolTerm {
  ExpPoly f;
  Multiplier m;
};

/// A time-dependent symbol a(t, x, xi) with a declared order.
///
/// Two representations: a finite list of separable terms (everything built
/// from the expression grammar stays in this form and all operations on it are
/// exact), or an opaque evaluator with sampling-based fallbacks.
class Symbol {
 public:
  using PointFn = std::function<cplx(double t, double x, double xi)>;
  /// Fills out[j] = a(t, x_j, xi) for x_j = 2 pi j / L.
  using ColumnFn = std::function<void(double t, double xi, Index L, cplx* out)>;

  Symbol();  // the zero symbol
  Symbol(std::vector<SymbolTerm> terms, double order, std::string label = {});
  Symbol(PointFn point, double order, std::string label = {}, int x_bandwidth = -1, bool x_independent = false);

  static Symbol zero() { return Symbol(); }
  static Symbol constant(cplx c);
  static Symbol multiplier(const Multiplier& m, double order);
  static Symbol function_of_x(const ExpPoly& f);
  static Symbol product(const ExpPoly& f, const Multiplier& m, double order);

  cplx operator()(double t, double x, double xi) const;
  /// Samples a(t, x_j, xi) on an L-point grid.
  VectorXcd column(double t, double xi, Index L) const;

  double order() const;
  const std::string& label() const;
  Symbol with_order(double order) const;
  Symbol with_label(std::string label) const;
  Symbol with_column(ColumnFn column) const;

  bool separable() const;
  const std::vector<SymbolTerm>& terms() const;
  /// Largest |k| in the x-spectrum, -1 when unknown.
  int x_bandwidth() const;
  bool x_independent() const;

  Symbol conj() const;
  Symbol scaled(cplx s) const;
  Symbol dx() const;
  Symbol dxi() const;

  friend Symbol operator+(const Symbol& a, const Symbol& b);
  friend Symbol operator-(const Symbol& a, const Symbol& b);
  friend Symbol operator*(const Symbol& a, const Symbol& b);

 private:
  struct Impl;
  explicit Symbol(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Grid used for sampling-based fallbacks on opaque symbols.
inline constexpr Index kFallbackSamples = 256;

/// x-Fourier coefficient \hat a(t, k, xi) of a.
cplx x_coefficient(const Symbol& a, double t, int k, double xi, Index samples = kFallbackSamples);

/// <a>_x(t, xi): mean over the torus.
Symbol x_average(const Symbol& a);
/// d_x^{-1} a, zero mode removed.
Symbol inv_dx(const Symbol& a);
/// a^*(x, xi) = conj(sum_eta \hat a(eta, xi - eta) e^{i eta x}).
/// Exact for separable symbols; otherwise evaluated at time t with
/// x-spectra resolved on 2N samples.
Symbol adjoint_symbol(const Symbol& a, double t, Index n);
/// sigma_{ab}(x, xi) = sum_eta a(x, xi + eta) \hat b(eta, xi) e^{i eta x}.
Symbol compose_exact(const Symbol& a, const Symbol& b, double t, Index n);

struct Expansion {
  Symbol expansion;
  Symbol remainder;
};
/// sum_{beta < n_exp} (1/(i^beta beta!)) d_xi^beta a d_x^beta b and the exact
/// remainder compose_exact - expansion.
Expansion compose_expansion(const Symbol& a, const Symbol& b, int n_exp, double t, Index n);

/// {a, b} = a_xi b_x - a_x b_xi
Symbol poisson_bracket(const Symbol& a, const Symbol& b);

/// Symbol read back from a matrix: column xi gives a(x, xi) = sum_eta A(eta, xi) e^{i(eta - xi)x}.
/// Only defined at the integer xi of the truncated range.
Symbol dequantize(const MatrixXcd& a, double order, std::string label = "dequantized");

/// Seeded random trig-polynomial symbol sum_j f_j(x) m_j(xi) with x-bandwidth
/// `bandwidth`, complex coefficients and multipliers drawn from
/// {1, |xi|^p chi, |xi|^{p-1} xi chi} with p <= order.
Symbol random_symbol(std::uint64_t seed, int bandwidth, double order, int terms = 3);

}  // namespace torusnf

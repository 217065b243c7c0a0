#pragma once

#include <functional>
#include <iosfwd>
#include <span>

#include "torusnf/common.hpp"

namespace torusnf {

// ---------------------------------------------------------------------------
// Raw transforms on uniform grids x_j = 2*pi*j/L, j = 0..L-1.
// Coefficients are normalised as c(xi) = (1/L) sum_j f(x_j) e^{-i xi x_j} and
// returned in centered order (see slot_of / mode_of).

VectorXcd forward_transform(const Eigen::Ref<const VectorXcd>& samples);
VectorXcd inverse_transform(const Eigen::Ref<const VectorXcd>& centered_coeffs);

/// Coefficient of wavenumber `k` in a centered coefficient vector, zero when
/// |k| is outside the stored range.
inline cplx coefficient_at(const VectorXcd& centered, Index k) {
  const Index n = centered.size();
  const Index s = slot_of(k, n);
  return (s >= 0 && s < n) ? centered(s) : cplx{0.0};
}

/// Re-sample a centered spectrum on a grid of `samples` points (zero padding
/// or truncation), optionally differentiated `derivative` times.
VectorXcd resample_spectrum(const VectorXcd& centered, Index samples, int derivative = 0);

inline double grid_point(Index j, Index n) { return kTwoPi * static_cast<double>(j) / static_cast<double>(n); }

// ---------------------------------------------------------------------------
// Cut-off functions.

/// C-infinity transition, 0 for r <= 0 and 1 for r >= 1.
double smooth_step(double r);
double smooth_step_derivative(double r);

/// Even cut-off: 0 for |xi| <= 1/2, 1 for |xi| >= 1.
double chi(double xi);
double chi_derivative(double xi);
/// Even cut-off: 0 for |xi| <= 1, 1 for |xi| >= 2.
double chi0(double xi);

struct CutoffPair {
  double chi(double xi) const { return torusnf::chi(xi); }
  double chi0(double xi) const { return torusnf::chi0(xi); }
};

// ---------------------------------------------------------------------------

/// Complex samples of a 2*pi-periodic function on an N-point grid, together
/// with its Fourier coefficients. Immutable after construction.
class GridFunction {
 public:
  /// Samples u(x_j); N must be even and at least 8.
  explicit GridFunction(VectorXcd samples);

  static GridFunction from_function(Index n, const std::function<cplx(double)>& f);
  static GridFunction from_spectrum(const VectorXcd& centered_coeffs);

  Index size() const { return samples_.size(); }
  const VectorXcd& samples() const { return samples_; }
  /// Centered coefficients, slot i <-> xi = i - N/2.
  const VectorXcd& spectrum() const { return spectrum_; }
  cplx coefficient(Index xi) const { return coefficient_at(spectrum_, xi); }
  double x(Index j) const { return grid_point(j, size()); }

 private:
  GridFunction(VectorXcd samples, VectorXcd spectrum);
  VectorXcd samples_;
  VectorXcd spectrum_;
};

/// Centered coefficient table of u.
inline const VectorXcd& fourier_coefficients(const GridFunction& u) { return u.spectrum(); }

/// (sum_xi <xi>^{2s} |u_hat(xi)|^2)^{1/2} over the truncated mode range.
double sobolev_norm(const GridFunction& u, double s);

template <typename Derived>
double sobolev_norm_of_coefficients(const Eigen::MatrixBase<Derived>& centered, double s) {
  const Index n = centered.size();
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = std::pow(1.0 + static_cast<double>(mode_of(i, n) * mode_of(i, n)), s);
    acc += w * std::norm(centered(i));
  }
  return std::sqrt(acc);
}

/// |D|^a u: multiplies u_hat(xi) by |xi|^a chi(xi); the zero mode is annihilated.
GridFunction frac_laplacian(const GridFunction& u, double a);
GridFunction derivative(const GridFunction& u);
/// d_x^{-1}: zero mode -> 0, e^{ikx} -> e^{ikx}/(ik).
GridFunction inv_derivative(const GridFunction& u);
/// Pointwise product; the unmatched mode -N/2 of the result is zeroed.
GridFunction multiply(const GridFunction& u, const GridFunction& v);

/// Trapezoidal value of int_T u conj(v) dx.
cplx l2_inner(const GridFunction& u, const GridFunction& v);
double l2_norm(const GridFunction& u);
/// i int_T (u1 conj(u2) - conj(u1) u2) dx; real and antisymmetric.
double symplectic_form(const GridFunction& u1, const GridFunction& u2);

/// Same forms on centered coefficient vectors.
cplx l2_inner_coefficients(const VectorXcd& u, const VectorXcd& v);
double symplectic_form_coefficients(const VectorXcd& u1, const VectorXcd& u2);

/// Real periodic function stored by its truncated Fourier series; evaluable
/// off-grid by trigonometric interpolation. The -N/2 mode is dropped.
class TrigInterpolant {
 public:
  TrigInterpolant() = default;
  static TrigInterpolant from_samples(const Eigen::Ref<const VectorXd>& samples);
  static TrigInterpolant from_coefficients(VectorXcd centered);
  static TrigInterpolant zero(Index n);

  Index size() const { return coeffs_.size(); }
  const VectorXcd& coefficients() const { return coeffs_; }

  double operator()(double x) const { return evaluate(x, 0); }
  double evaluate(double x, int derivative) const;
  /// Values (or derivatives) on a uniform grid of `samples` points.
  VectorXd on_grid(Index samples, int derivative = 0) const;
  double max_abs(Index samples = 0) const;

 private:
  VectorXcd coeffs_;
};

// CSV exchange: GridFunction rows `j, x_j, Re, Im`; spectral rows `xi, Re, Im`.
void write_grid_csv(std::ostream& os, const GridFunction& u);
void write_spectrum_csv(std::ostream& os, const GridFunction& u);
GridFunction read_grid_csv(std::istream& is);

}  // namespace torusnf

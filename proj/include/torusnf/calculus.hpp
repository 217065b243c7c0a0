#pragma once

#include <limits>
#include <vector>

#include "torusnf/fourier.hpp"
#include "torusnf/symbol.hpp"

namespace torusnf {

// Operators live as plain MatrixXcd in the centered Fourier basis: entry
// (slot_of(eta), slot_of(xi)) maps mode xi to mode eta. The grid size is the
// matrix dimension.

/// Matrix with entries \hat a(t, eta - xi, xi).
MatrixXcd quantize(const Symbol& a, double t, Index n);

/// Fourier multiplier diag(m(xi)) on the N-mode basis.
MatrixXcd multiplier_matrix(const Multiplier& m, double t, Index n);
/// diag(|xi|^p chi(xi)), the matrix of |D|^p.
MatrixXcd abs_d_power(double p, Index n);
/// <xi>^s on the N-mode basis.
VectorXd bracket_weights(Index n, double s);

GridFunction apply(const MatrixXcd& a, const GridFunction& u);

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// max |A - A^*|.
template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& a) {
  return max_abs(a - a.adjoint());
}

/// max |A - A^*| / max |A|, 0 for the zero matrix.
template <typename Derived>
double hermiticity_residual(const Eigen::MatrixBase<Derived>& a) {
  const double m = max_abs(a);
  return m == 0.0 ? 0.0 : hermiticity_defect(a) / m;
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& a, double tol = 1e-10) {
  return hermiticity_residual(a) <= tol;
}

template <typename Derived>
MatrixXcd hermitian_part(const Eigen::MatrixBase<Derived>& a) {
  return 0.5 * (a + a.adjoint());
}

/// Square sub-block on the modes |xi| <= half.
template <typename Derived>
auto central_block(const Eigen::MatrixBase<Derived>& a, Index half) {
  const Index n = a.rows();
  return a.derived().block(slot_of(-half, n), slot_of(-half, n), 2 * half + 1, 2 * half + 1);
}

template <typename Derived>
auto central_segment(const Eigen::MatrixBase<Derived>& v, Index half) {
  return v.derived().segment(slot_of(-half, v.size()), 2 * half + 1);
}

struct OrderFit {
  double slope = -std::numeric_limits<double>::infinity();
  double residual = 0.0;
  int points = 0;
  bool valid = false;  // false when the window holds fewer than 8 columns
  std::vector<double> xi;
  std::vector<double> log_col_norm;
};

/// Least-squares slope of log ||A e_xi|| against log <xi> over |xi| in [lo, hi]
/// (both signs). Default window [4, N/8]. Columns with norm <= zero_tol are
/// ignored; when all of them are, slope is -inf and `valid` stays true.
OrderFit estimate_order(const MatrixXcd& a, double zero_tol = 0.0, Index lo = 4, Index hi = -1);

/// exp(i tau H) for hermitian H, by eigendecomposition.
MatrixXcd hermitian_exp(const MatrixXcd& h, double tau);

/// Eigendecomposition of a hermitian matrix reused for exp(i s H) at many s.
class HermitianExp {
 public:
  explicit HermitianExp(const MatrixXcd& h);
  MatrixXcd operator()(double s) const;
  VectorXcd apply(double s, const VectorXcd& v) const;
  const VectorXd& eigenvalues() const { return values_; }

 private:
  MatrixXcd vectors_;
  VectorXd values_;
};

/// Spectral norm of <D>^{s_out} A <D>^{-s_in}, optionally restricted to |xi| <= half.
double operator_norm(const MatrixXcd& a, double s_in, double s_out, Index half = -1);

/// ||U^* U - I||_max
double unitarity_defect(const MatrixXcd& u);

}  // namespace torusnf

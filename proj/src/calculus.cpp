#include "torusnf/calculus.hpp"

#include <cmath>
#include <sstream>

namespace torusnf {

namespace {

[[noreturn]] void non_finite(double t, double x, double xi) {
  std::ostringstream os;
  os << "non-finite symbol value at (t, x, xi) = (" << t << ", " << x << ", " << xi << ")";
  throw NumericalError(os.str());
}

}  // namespace

MatrixXcd quantize(const Symbol& a, double t, Index n) {
  if (n < 8 || n % 2 != 0) throw DimensionError("grid size must be even and >= 8");
  MatrixXcd out = MatrixXcd::Zero(n, n);
  if (a.separable()) {
    VectorXcd mv(n);
    for (const auto& term : a.terms()) {
      for (Index s = 0; s < n; ++s) {
        mv(s) = term.m(t, static_cast<double>(mode_of(s, n)));
        if (!std::isfinite(mv(s).real()) || !std::isfinite(mv(s).imag()))
          non_finite(t, 0.0, static_cast<double>(mode_of(s, n)));
      }
      for (const auto& md : term.f.modes()) {
        const cplx c = md.c * std::exp(kI * (md.w * t));
        for (Index s = 0; s < n; ++s) {
          const Index r = s + md.k;
          if (r >= 0 && r < n) out(r, s) += c * mv(s);
        }
      }
    }
    return out;
  }
  if (a.x_independent()) {
    for (Index s = 0; s < n; ++s) {
      const double xi = static_cast<double>(mode_of(s, n));
      out(s, s) = a(t, 0.0, xi);
      if (!std::isfinite(out(s, s).real()) || !std::isfinite(out(s, s).imag())) non_finite(t, 0.0, xi);
    }
    return out;
  }
  const Index L = 2 * n;
  for (Index s = 0; s < n; ++s) {
    const double xi = static_cast<double>(mode_of(s, n));
    const VectorXcd col = a.column(t, xi, L);
    for (Index j = 0; j < L; ++j)
      if (!std::isfinite(col(j).real()) || !std::isfinite(col(j).imag())) non_finite(t, grid_point(j, L), xi);
    const VectorXcd c = forward_transform(col);
    for (Index r = 0; r < n; ++r) out(r, s) = coefficient_at(c, r - s);
  }
  return out;
}

MatrixXcd multiplier_matrix(const Multiplier& m, double t, Index n) {
  VectorXcd d(n);
  for (Index s = 0; s < n; ++s) d(s) = m(t, static_cast<double>(mode_of(s, n)));
  return d.asDiagonal();
}

MatrixXcd abs_d_power(double p, Index n) { return multiplier_matrix(Multiplier::power_chi(p), 0.0, n); }

VectorXd bracket_weights(Index n, double s) {
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) w(i) = std::pow(japanese_bracket(static_cast<double>(mode_of(i, n))), s);
  return w;
}

GridFunction apply(const MatrixXcd& a, const GridFunction& u) {
  if (a.cols() != u.size() || a.rows() != u.size()) throw DimensionError("operator and grid function sizes differ");
  return GridFunction::from_spectrum(a * u.spectrum());
}

OrderFit estimate_order(const MatrixXcd& a, double zero_tol, Index lo, Index hi) {
  const Index n = a.cols();
  if (hi < 0) hi = n / 8;
  OrderFit fit;
  int candidates = 0;
  for (Index k = lo; k <= hi; ++k)
    for (Index xi : {-k, k}) {
      const Index s = slot_of(xi, n);
      if (s < 0 || s >= n) continue;
      ++candidates;
      const double nrm = a.col(s).norm();
      if (nrm <= zero_tol) continue;
      fit.xi.push_back(static_cast<double>(xi));
      fit.log_col_norm.push_back(std::log(nrm));
    }
  fit.valid = candidates >= 8;
  fit.points = static_cast<int>(fit.xi.size());
  if (!fit.valid || fit.points < 2) return fit;
  const Index m = fit.points;
  Eigen::MatrixXd design(m, 2);
  VectorXd rhs(m);
  for (Index i = 0; i < m; ++i) {
    design(i, 0) = std::log(japanese_bracket(fit.xi[static_cast<std::size_t>(i)]));
    design(i, 1) = 1.0;
    rhs(i) = fit.log_col_norm[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  fit.slope = coef(0);
  fit.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(m));
  return fit;
}

HermitianExp::HermitianExp(const MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitian_part(h));
  if (es.info() != Eigen::Success) throw NumericalError("hermitian eigendecomposition failed");
  vectors_ = es.eigenvectors();
  values_ = es.eigenvalues();
}

MatrixXcd HermitianExp::operator()(double s) const {
  const VectorXcd phase = (kI * s * values_.cast<cplx>()).array().exp();
  return vectors_ * phase.asDiagonal() * vectors_.adjoint();
}

VectorXcd HermitianExp::apply(double s, const VectorXcd& v) const {
  const VectorXcd phase = (kI * s * values_.cast<cplx>()).array().exp();
  return vectors_ * phase.cwiseProduct(vectors_.adjoint() * v);
}

MatrixXcd hermitian_exp(const MatrixXcd& h, double tau) { return HermitianExp(h)(tau); }

double operator_norm(const MatrixXcd& a, double s_in, double s_out, Index half) {
  const Index n = a.rows();
  const VectorXd wout = bracket_weights(n, s_out);
  const VectorXd win = bracket_weights(n, -s_in);
  MatrixXcd w = wout.asDiagonal() * a * win.asDiagonal();
  if (half >= 0) w = MatrixXcd(central_block(w, half));
  Eigen::BDCSVD<MatrixXcd> svd(w);
  return svd.singularValues()(0);
}

double unitarity_defect(const MatrixXcd& u) {
  return max_abs(u.adjoint() * u - MatrixXcd::Identity(u.cols(), u.cols()));
}

}  // namespace torusnf

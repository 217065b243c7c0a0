#include "torusnf/diffeo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace torusnf {

namespace {

VectorXd potential_samples(const Potential& v, double t, Index n) {
  VectorXd s(n);
  for (Index j = 0; j < n; ++j) {
    s(j) = v(t, grid_point(j, n));
    if (!(s(j) > 0.0)) {
      std::ostringstream os;
      os << "potential not strictly positive: V(" << t << ", " << grid_point(j, n) << ") = " << s(j);
      throw HypothesisViolation("H2", os.str());
    }
  }
  return s;
}

}  // namespace

double compute_lambda(const Potential& v, double t, double m, Index n) {
  const VectorXd s = potential_samples(v, t, n);
  const double mean = s.array().pow(-1.0 / m).mean();
  return std::pow(mean, -m);
}

TrigInterpolant compute_alpha_tilde(const Potential& v, double t, double m, Index n) {
  const VectorXd s = potential_samples(v, t, n);
  const double lambda = std::pow(s.array().pow(-1.0 / m).mean(), -m);
  const VectorXd g = std::pow(lambda, 1.0 / m) * s.array().pow(-1.0 / m) - 1.0;
  VectorXcd c = forward_transform(g.cast<cplx>());
  for (Index i = 0; i < n; ++i) {
    const Index k = mode_of(i, n);
    c(i) = k == 0 ? cplx{0.0} : c(i) / (kI * static_cast<double>(k));
  }
  return TrigInterpolant::from_coefficients(c);
}

double homological_residual(const Potential& v, const TrigInterpolant& alpha_tilde, double lambda, double t,
                            double m, Index n) {
  const VectorXd dy = alpha_tilde.on_grid(n, 1);
  double r = 0.0;
  for (Index j = 0; j < n; ++j)
    r = std::max(r, std::abs(v(t, grid_point(j, n)) * std::pow(1.0 + dy(j), m) - lambda));
  return r;
}

double DiffeoPair::composition_residual() const {
  const Index n = size();
  double r = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double y = grid_point(j, n);
    const double at = alpha_tilde(y);
    r = std::max(r, std::abs(at + alpha(y + at)));
  }
  return r;
}

double DiffeoPair::reciprocal_residual() const {
  const Index n = size();
  double r = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double x = grid_point(j, n);
    const double a = alpha(x);
    r = std::max(r, std::abs((1.0 + alpha.evaluate(x, 1)) * (1.0 + alpha_tilde.evaluate(x + a, 1)) - 1.0));
  }
  return r;
}

DiffeoPair DiffeoPair::swapped() const {
  DiffeoPair p = *this;
  std::swap(p.alpha, p.alpha_tilde);
  return p;
}

DiffeoPair invert_diffeo(const TrigInterpolant& alpha_tilde, double t, NewtonOptions opts) {
  const Index n = alpha_tilde.size();
  const VectorXd dy = alpha_tilde.on_grid(4 * n, 1);
  const double jac_tilde = 1.0 + dy.minCoeff();
  if (!(jac_tilde > 0.0)) throw HypothesisViolation("H2", "1 + alpha~_y is not positive");
  const double radius = std::max(kPi, 1.1 * alpha_tilde.max_abs());

  DiffeoPair pair;
  pair.t = t;
  pair.alpha_tilde = alpha_tilde;
  VectorXd a(n);
  double worst = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double x = grid_point(j, n);
    auto f = [&](double y) { return y + alpha_tilde(y) - x; };
    double y = x - alpha_tilde(x);
    bool ok = false;
    for (int it = 0; it < opts.max_iter; ++it) {
      const double fy = f(y);
      ++pair.newton_iterations;
      if (std::abs(fy) <= opts.tol) {
        ok = true;
        break;
      }
      const double d = 1.0 + alpha_tilde.evaluate(y, 1);
      if (!(d > 0.0)) break;
      y -= fy / d;
    }
    if (!ok) {
      ++pair.bisection_fallbacks;
      double lo = x - radius, hi = x + radius;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
      }
      y = 0.5 * (lo + hi);
      const double res = std::abs(f(y));
      worst = std::max(worst, res);
      if (res > 1e3 * opts.tol) {
        std::ostringstream os;
        os << "diffeomorphism inversion failed at x = " << x << ", residual " << res;
        throw NumericalError(os.str(), res);
      }
    }
    a(j) = y - x;
  }
  pair.alpha = TrigInterpolant::from_samples(a);
  const VectorXd dx = pair.alpha.on_grid(4 * n, 1);
  pair.jac_min = std::min(jac_tilde, 1.0 + dx.minCoeff());
  if (!(pair.jac_min > 0.0)) throw NumericalError("inverse diffeomorphism lost monotonicity", worst);
  return pair;
}

DiffeoPair diffeo_from_alpha(const TrigInterpolant& alpha, double t, NewtonOptions opts) {
  return invert_diffeo(alpha, t, opts).swapped();
}

HighestOrderData build_diffeo(const Potential& v, double t, double m, Index n) {
  HighestOrderData d;
  d.lambda = compute_lambda(v, t, m, n);
  const TrigInterpolant at = compute_alpha_tilde(v, t, m, n);
  d.homological_residual = homological_residual(v, at, d.lambda, t, m, n);
  d.pair = invert_diffeo(at, t);
  return d;
}

double b_alpha(const DiffeoPair& pair, double tau, double x) {
  const double den = 1.0 + tau * pair.alpha.evaluate(x, 1);
  if (!(den > 0.0)) throw HypothesisViolation("H2", "1 + tau alpha_x is not positive");
  return -pair.alpha(x) / den;
}

namespace {

// (x', xi'/xi) = (b, -b_x) at (tau, x). The velocity carries the sign that
// makes gamma_1^{tau0,0}(x) = x + tau0 alpha(x) hold.
std::pair<double, double> characteristic_field(const DiffeoPair& pair, double tau, double x) {
  const double a = pair.alpha(x);
  const double ax = pair.alpha.evaluate(x, 1);
  const double axx = pair.alpha.evaluate(x, 2);
  const double den = 1.0 + tau * ax;
  if (!(den > 0.0)) throw HypothesisViolation("H2", "1 + tau alpha_x is not positive");
  const double bx = -ax / den + tau * a * axx / (den * den);
  return {-a / den, -bx};
}

}  // namespace

PhasePoint characteristics(const DiffeoPair& pair, double tau0, double tau1, double x, double xi, int substeps) {
  const double h = (tau1 - tau0) / substeps;
  double tau = tau0;
  for (int s = 0; s < substeps; ++s) {
    auto [v1, b1] = characteristic_field(pair, tau, x);
    auto [v2, b2] = characteristic_field(pair, tau + 0.5 * h, x + 0.5 * h * v1);
    auto [v3, b3] = characteristic_field(pair, tau + 0.5 * h, x + 0.5 * h * v2);
    auto [v4, b4] = characteristic_field(pair, tau + h, x + h * v3);
    const double k1 = b1 * xi;
    const double k2 = b2 * (xi + 0.5 * h * k1);
    const double k3 = b3 * (xi + 0.5 * h * k2);
    const double k4 = b4 * (xi + h * k3);
    x += h / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4);
    xi += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    tau += h;
    if (!std::isfinite(x) || !std::isfinite(xi)) throw NumericalError("characteristic integration produced NaN");
  }
  return {x, xi};
}

MatrixXcd transport_generator(const DiffeoPair& pair, double tau, Index n) {
  const Index L = 2 * n;
  const VectorXd a = pair.alpha.on_grid(L);
  const VectorXd ax = pair.alpha.on_grid(L, 1);
  VectorXcd b(L);
  for (Index j = 0; j < L; ++j) {
    const double den = 1.0 + tau * ax(j);
    if (!(den > 0.0)) throw HypothesisViolation("H2", "1 + tau alpha_x is not positive");
    b(j) = a(j) / den;  // -b_alpha
  }
  const VectorXcd bh = forward_transform(b);
  MatrixXcd g(n, n);
  for (Index s = 0; s < n; ++s)
    for (Index r = 0; r < n; ++r)
      g(r, s) = kI * coefficient_at(bh, r - s) * (0.5 * static_cast<double>(mode_of(r, n) + mode_of(s, n)));
  // exact skew-hermitian part; b is real so this only removes round-off
  return 0.5 * (g - g.adjoint());
}

namespace {

// exp(Omega) for skew-hermitian Omega
MatrixXcd skew_exp(const MatrixXcd& omega) { return hermitian_exp(-kI * omega, 1.0); }

}  // namespace

MatrixXcd transport_flow(const DiffeoPair& pair, Index n, int substeps, FlowScheme scheme, double tau) {
  MatrixXcd phi = MatrixXcd::Identity(n, n);
  if (pair.alpha.coefficients().cwiseAbs().maxCoeff() == 0.0) return phi;
  const double h = tau / substeps;
  const double c = std::sqrt(3.0) / 6.0;
  for (int s = 0; s < substeps; ++s) {
    const double t0 = s * h;
    MatrixXcd omega;
    if (scheme == FlowScheme::Midpoint) {
      omega = h * transport_generator(pair, t0 + 0.5 * h, n);
    } else {
      const MatrixXcd a1 = transport_generator(pair, t0 + (0.5 - c) * h, n);
      const MatrixXcd a2 = transport_generator(pair, t0 + (0.5 + c) * h, n);
      omega = 0.5 * h * (a1 + a2) + (std::sqrt(3.0) * h * h / 12.0) * (a2 * a1 - a1 * a2);
    }
    phi = skew_exp(omega) * phi;
  }
  return phi;
}

MatrixXcd time_derivative_flow(const DiffeoFamily& family, double t, double h_t, Index n, int substeps,
                               FlowScheme scheme) {
  const MatrixXcd phi = transport_flow(family(t), n, substeps, scheme);
  const MatrixXcd plus = transport_flow(family(t + h_t), n, substeps, scheme);
  const MatrixXcd minus = transport_flow(family(t - h_t), n, substeps, scheme);
  return phi * (plus.adjoint() - minus.adjoint()) / (2.0 * h_t);
}

MatrixXcd g_flow(const MatrixXcd& g, double tau) {
  if (!is_hermitian(g, 1e-10)) {
    std::ostringstream os;
    os << "generator is not hermitian (relative defect " << hermiticity_residual(g) << ")";
    throw ContractViolation(os.str());
  }
  return hermitian_exp(g, tau);
}

Symbol principal_egorov_symbol(const Symbol& v, const DiffeoPair& pair) {
  auto column = [v, pair](double t, double xi, Index L, cplx* out) {
    const VectorXd a = pair.alpha.on_grid(L);
    const VectorXd ax = pair.alpha.on_grid(L, 1);
    for (Index j = 0; j < L; ++j) out[j] = v(t, grid_point(j, L) + a(j), xi / (1.0 + ax(j)));
  };
  Symbol p(
      [v, pair](double t, double x, double xi) {
        return v(t, x + pair.alpha(x), xi / (1.0 + pair.alpha.evaluate(x, 1)));
      },
      v.order(), "p0");
  return p.with_column(column);
}

OrderFit egorov_check(const MatrixXcd& flow, const MatrixXcd& v, const Symbol& p0, double t, Index lo, Index hi) {
  const Index n = flow.rows();
  const MatrixXcd d = flow * v * flow.adjoint() - quantize(p0, t, n);
  return estimate_order(d, 1e-13 * std::max(1.0, max_abs(v)), lo, hi);
}

}  // namespace torusnf

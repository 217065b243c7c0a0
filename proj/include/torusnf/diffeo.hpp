#pragma once

#include <functional>
#include <utility>

#include "torusnf/calculus.hpp"
#include "torusnf/fourier.hpp"
#include "torusnf/symbol.hpp"

namespace torusnf {

/// Real potential V(t, x).
using Potential = std::function<double(double t, double x)>;

/// lambda(t) = (mean_y V(t, y)^{-1/M})^{-M}, trapezoid on N points.
double compute_lambda(const Potential& v, double t, double m, Index n);

/// alpha~ = d_y^{-1}[lambda^{1/M} V^{-1/M} - 1] as an interpolant on N points.
TrigInterpolant compute_alpha_tilde(const Potential& v, double t, double m, Index n);

/// max_y |V (1 + alpha~_y)^M - lambda| on the N-point grid.
double homological_residual(const Potential& v, const TrigInterpolant& alpha_tilde, double lambda, double t,
                            double m, Index n);

/// Displacements of x -> x + alpha(x) and of its inverse y -> y + alpha~(y).
struct DiffeoPair {
  double t = 0.0;
  TrigInterpolant alpha;
  TrigInterpolant alpha_tilde;
  double jac_min = 1.0;
  int newton_iterations = 0;
  int bisection_fallbacks = 0;

  Index size() const { return alpha.size(); }
  /// max_y |alpha~(y) + alpha(y + alpha~(y))| on the grid
  double composition_residual() const;
  /// max_x |(1 + alpha_x(x)) (1 + alpha~_y(x + alpha(x))) - 1| on the grid
  double reciprocal_residual() const;
  DiffeoPair swapped() const;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
};

/// Solves y + alpha~(y) = x per grid point; alpha(x) = y - x.
DiffeoPair invert_diffeo(const TrigInterpolant& alpha_tilde, double t = 0.0, NewtonOptions opts = {});
/// Pair for a prescribed forward displacement alpha.
DiffeoPair diffeo_from_alpha(const TrigInterpolant& alpha, double t = 0.0, NewtonOptions opts = {});
/// lambda, alpha~ and alpha for a potential.
struct HighestOrderData {
  double lambda = 1.0;
  DiffeoPair pair;
  double homological_residual = 0.0;
};
HighestOrderData build_diffeo(const Potential& v, double t, double m, Index n);

/// b_alpha(tau; x) = -alpha(x) / (1 + tau alpha_x(x))
double b_alpha(const DiffeoPair& pair, double tau, double x);

struct PhasePoint {
  double x;
  double xi;
};
/// Integrates x' = b_alpha, xi' = -(d_x b_alpha) xi from tau0 to tau1 with RK4,
/// so that (tau0, 0) gives (x + tau0 alpha, xi / (1 + tau0 alpha_x)).
PhasePoint characteristics(const DiffeoPair& pair, double tau0, double tau1, double x, double xi, int substeps = 64);

/// Matrix of A(tau) = beta d_x + (d_x beta)/2 with beta = -b_alpha on N modes;
/// skew-hermitian. Its flow at tau = 1 is u -> (1 + alpha_x)^{1/2} u(x + alpha).
MatrixXcd transport_generator(const DiffeoPair& pair, double tau, Index n);

enum class FlowScheme { Midpoint, Magnus4 };

/// Phi(tau) solving d_tau Phi = A(tau) Phi, Phi(0) = I.
MatrixXcd transport_flow(const DiffeoPair& pair, Index n, int substeps = 32, FlowScheme scheme = FlowScheme::Midpoint,
                         double tau = 1.0);

using DiffeoFamily = std::function<DiffeoPair(double t)>;

/// Psi = Phi(t) d_t(Phi(t)^{-1}) by a central difference of step h_t.
MatrixXcd time_derivative_flow(const DiffeoFamily& family, double t, double h_t, Index n, int substeps = 32,
                               FlowScheme scheme = FlowScheme::Midpoint);

/// exp(i tau G) for hermitian G.
MatrixXcd g_flow(const MatrixXcd& g, double tau);

/// p0(x, xi) = v(t, x + alpha(x), xi / (1 + alpha_x(x))).
Symbol principal_egorov_symbol(const Symbol& v, const DiffeoPair& pair);

/// Order fit of flow V flow^{-1} - Op(p0).
OrderFit egorov_check(const MatrixXcd& flow, const MatrixXcd& v, const Symbol& p0, double t, Index lo = 4,
                      Index hi = -1);

}  // namespace torusnf

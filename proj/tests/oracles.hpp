#pragma once

// Independent reference computations used by the tests.

#include <random>

#include "torusnf/fourier.hpp"
#include "torusnf/symbol.hpp"

namespace torusnf::testing {

inline GridFunction random_grid_function(Index n, Index band, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  VectorXcd c = VectorXcd::Zero(n);
  for (Index k = -band; k <= band; ++k) c(slot_of(k, n)) = cplx(g(rng), g(rng));
  return GridFunction::from_spectrum(c);
}

inline VectorXcd random_coefficients(Index n, Index band, std::uint64_t seed) {
  return random_grid_function(n, band, seed).spectrum();
}

/// Same symbol with its separable structure hidden.
inline Symbol opaque(const Symbol& a) {
  return Symbol([a](double t, double x, double xi) { return a(t, x, xi); }, a.order(), a.label(), a.x_bandwidth());
}

/// Composite trapezoid for the mean of a periodic function, on m points.
template <typename F>
double periodic_mean(F f, int m) {
  double acc = 0;
  for (int j = 0; j < m; ++j) acc += f(kTwoPi * j / m);
  return acc / m;
}

/// Band-limited u evaluated off-grid by its series.
inline cplx evaluate_series(const VectorXcd& centered, double x) {
  const Index n = centered.size();
  cplx acc = 0;
  for (Index i = 0; i < n; ++i) acc += centered(i) * std::exp(kI * (static_cast<double>(mode_of(i, n)) * x));
  return acc;
}

/// Closed-form (1 + alpha_x)^{1/2} u(x + alpha(x)) on the grid, returned as coefficients.
template <typename A, typename AX>
VectorXcd composition_operator(const VectorXcd& u, A alpha, AX alpha_x) {
  const Index n = u.size();
  VectorXcd s(n);
  for (Index j = 0; j < n; ++j) {
    const double x = grid_point(j, n);
    s(j) = std::sqrt(1.0 + alpha_x(x)) * evaluate_series(u, x + alpha(x));
  }
  return forward_transform(s);
}

}  // namespace torusnf::testing

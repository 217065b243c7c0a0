#include "torusnf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "torusnf/calculus.hpp"
#include "torusnf/fourier.hpp"
#include "torusnf/symbol.hpp"

namespace torusnf {

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    default: return "skipped";
  }
}

int VerifyReport::count(CheckStatus s) const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [s](const auto& c) { return c.status == s; }));
}

namespace {

CheckResult check(std::string name, double residual, double tol, std::string note = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.residual = residual;
  r.tol = tol;
  r.status = std::isfinite(residual) && residual <= tol ? CheckStatus::Pass : CheckStatus::Fail;
  r.note = std::move(note);
  return r;
}

CheckResult skipped(std::string name, std::string note) {
  CheckResult r;
  r.name = std::move(name);
  r.status = CheckStatus::Skipped;
  r.note = std::move(note);
  return r;
}

double rel(double err, double scale) { return scale > 0.0 ? err / scale : err; }

// random coefficients on |k| <= band, evaluated by direct summation
struct TrigPoly {
  std::vector<std::pair<int, cplx>> c;
  cplx operator()(double x, int derivative = 0) const {
    cplx s = 0.0;
    for (const auto& [k, a] : c) s += a * std::pow(kI * static_cast<double>(k), derivative) * std::exp(kI * (k * x));
    return s;
  }
};

TrigPoly random_poly(std::mt19937_64& rng, int band) {
  std::normal_distribution<double> g;
  TrigPoly p;
  for (int k = -band; k <= band; ++k) p.c.emplace_back(k, cplx(g(rng), g(rng)) / (1.0 + std::abs(k)));
  return p;
}

void fourier_checks(Index n, std::mt19937_64& rng, std::vector<CheckResult>& out) {
  std::normal_distribution<double> g;
  VectorXcd samples(n);
  for (Index j = 0; j < n; ++j) samples(j) = cplx(g(rng), g(rng));
  const VectorXcd c = forward_transform(samples);
  out.push_back(check("fourier.round_trip", max_abs(inverse_transform(c) - samples) / max_abs(samples), 1e-12));
  const double parseval = samples.squaredNorm() / static_cast<double>(n);
  out.push_back(check("fourier.parseval", std::abs(c.squaredNorm() - parseval) / parseval, 1e-12));

  const int band = static_cast<int>(n / 4);
  const TrigPoly p = random_poly(rng, band);
  const GridFunction u = GridFunction::from_function(n, [&](double x) { return p(x); });
  double err = 0.0, scale = 0.0;
  const GridFunction du = derivative(u);
  for (Index j = 0; j < n; ++j) {
    const cplx exact = p(grid_point(j, n), 1);
    err = std::max(err, std::abs(du.samples()(j) - exact));
    scale = std::max(scale, std::abs(exact));
  }
  out.push_back(check("fourier.derivative", rel(err, scale), 1e-10));

  const GridFunction back = inv_derivative(du);
  const cplx mean = u.coefficient(0);
  err = 0.0;
  for (Index j = 0; j < n; ++j) err = std::max(err, std::abs(back.samples()(j) - (u.samples()(j) - mean)));
  out.push_back(check("fourier.inv_derivative", rel(err, max_abs(u.samples())), 1e-12));

  const double a = 0.75;
  const GridFunction la = frac_laplacian(u, a);
  err = 0.0;
  for (const auto& [k, ck] : p.c) {
    const cplx exact = k == 0 ? cplx{0.0} : std::pow(std::abs(static_cast<double>(k)), a) * ck;
    err = std::max(err, std::abs(la.coefficient(k) - exact));
  }
  const double lscale = max_abs(la.spectrum());
  out.push_back(check("fourier.frac_laplacian", rel(err, lscale), 1e-12));
  const GridFunction twice = frac_laplacian(frac_laplacian(u, 0.5), 0.25);
  out.push_back(check("fourier.frac_laplacian_semigroup", rel(max_abs(twice.spectrum() - la.spectrum()), lscale), 1e-12));
}

void calculus_checks(Index n, std::uint64_t seed, std::vector<CheckResult>& out) {
  const int band = static_cast<int>(std::min<Index>(16, n / 8));
  const Index half = n / 4;
  double hom = 0.0, adj = 0.0;
  for (std::uint64_t j = 0; j < 5; ++j) {
    const Symbol a = random_symbol(seed * 1000 + j, band, 1.0);
    const Symbol b = random_symbol(seed * 1000 + 500 + j, band, 2.0);
    const MatrixXcd A = quantize(a, 0.0, n), B = quantize(b, 0.0, n);
    const MatrixXcd AB = A * B;
    hom = std::max(hom, max_abs(central_block(quantize(compose_exact(a, b, 0.0, n), 0.0, n) - AB, half)) /
                            max_abs(central_block(AB, half)));
    adj = std::max(adj, max_abs(central_block(quantize(adjoint_symbol(a, 0.0, n), 0.0, n) - A.adjoint(), half)) /
                            max_abs(A));
  }
  out.push_back(check("calculus.homomorphism", hom, 1e-10));
  out.push_back(check("calculus.adjoint", adj, 1e-10));

  double avg = 0.0, inv = 0.0;
  for (std::uint64_t j = 0; j < 20; ++j) {
    const Symbol a = random_symbol(seed * 1000 + 200 + j, std::min(band, 6), 1.0);
    const Symbol as = adjoint_symbol(a, 0.0, n);
    const Symbol l1 = x_average(as), r1 = adjoint_symbol(x_average(a), 0.0, n);
    const Symbol l2 = inv_dx(as), r2 = adjoint_symbol(inv_dx(a), 0.0, n);
    for (int k = 0; k < 16; ++k)
      for (Index z = -n / 4; z <= n / 4; z += std::max<Index>(1, n / 32)) {
        const double x = grid_point(k, 16), xi = static_cast<double>(z);
        avg = std::max(avg, std::abs(l1(0, x, xi) - r1(0, x, xi)));
        inv = std::max(inv, std::abs(l2(0, x, xi) - r2(0, x, xi)));
      }
  }
  out.push_back(check("calculus.average_adjoint", avg, 1e-10));
  out.push_back(check("calculus.inv_dx_adjoint", inv, 1e-10));

  const OrderFit f2 = estimate_order(quantize(Symbol::multiplier(Multiplier::power_chi(2), 2), 0.0, n));
  if (!f2.valid) {
    out.push_back(skipped("calculus.order_fit", "fit window |xi| in [4, N/8] too small"));
  } else {
    out.push_back(check("calculus.order_fit", std::abs(f2.slope - 2.0), 0.05));
  }
  const Symbol sq = Symbol::multiplier(Multiplier::power_chi(2), 2);
  const Symbol cx = Symbol::function_of_x(ExpPoly::trig(1.0, 1, 0, 0, false));
  const OrderFit fr = estimate_order(quantize(compose_expansion(sq, cx, 1, 0.0, n).remainder, 0.0, n));
  if (!fr.valid) {
    out.push_back(skipped("calculus.expansion_remainder_order", "fit window |xi| in [4, N/8] too small"));
  } else {
    out.push_back(check("calculus.expansion_remainder_order", std::abs(fr.slope - 1.0), 0.25));
  }

  const MatrixXcd h = hermitian_part(quantize(random_symbol(seed * 1000 + 900, band, 1.0), 0.0, n));
  out.push_back(check("calculus.hermitian_exp_unitarity", unitarity_defect(hermitian_exp(h, 0.7)), 1e-12));
}

}  // namespace

VerifyReport verify_calculus(Index n, std::uint64_t seed) {
  if (n < 8 || n % 2) throw DimensionError("verify needs an even grid of at least 8 points");
  VerifyReport rep;
  rep.N = n;
  rep.seed = seed;
  std::mt19937_64 rng(seed);
  fourier_checks(n, rng, rep.checks);
  calculus_checks(n, seed, rep.checks);
  return rep;
}

}  // namespace torusnf

// One line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "oracles.hpp"
#include "torusnf/calculus.hpp"
#include "torusnf/diffeo.hpp"
#include "torusnf/normal_form.hpp"
#include "torusnf/propagator.hpp"

using namespace torusnf;
using namespace torusnf::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

ExpPoly cosine(double c, int k = 1, double w = 0.0) { return ExpPoly::trig(c, k, w, 0.0, false); }

TrigInterpolant sine_interpolant(double eps, Index n) {
  VectorXd s(n);
  for (Index j = 0; j < n; ++j) s(j) = eps * std::sin(grid_point(j, n));
  return TrigInterpolant::from_samples(s);
}

ProblemSpec ledger_spec(Index n) {
  ProblemSpec sp;
  sp.M = 2;
  sp.frak_e = 1;
  sp.K = 2;
  sp.N = n;
  sp.V = ExpPoly::constant(1.0) + cosine(0.25);
  sp.W = Symbol::product(cosine(0.1), Multiplier::power_chi(1.0), 1.0);
  return sp;
}

ProblemSpec traveling(Index n, int K) {
  ProblemSpec sp;
  sp.N = n;
  sp.K = K;
  sp.V = ExpPoly::constant(1.0) + cosine(0.5, 1, -1.0);
  return sp;
}

VectorXcd smooth_state(Index n, double decay) {
  VectorXcd v(n);
  for (Index i = 0; i < n; ++i) {
    const double xi = static_cast<double>(mode_of(i, n));
    v(i) = std::exp(-decay * std::abs(xi)) * std::exp(kI * (0.3 * xi * xi + 0.1 * xi));
  }
  return v / v.norm();
}

Outcome calculus_exactness() {
  const Index n = 128, half = 32;
  double rel = 0, abs_err = 0, adj = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Symbol a = random_symbol(s, 16, 1.0), b = random_symbol(s + 100, 16, 2.0);
    const MatrixXcd A = quantize(a, 0, n), B = quantize(b, 0, n), AB = A * B;
    const double e = max_abs(central_block(quantize(compose_exact(a, b, 0, n), 0, n) - AB, half));
    abs_err = std::max(abs_err, e);
    rel = std::max(rel, e / max_abs(central_block(AB, half)));
    adj = std::max(adj, max_abs(central_block(quantize(adjoint_symbol(a, 0, n), 0, n) - A.adjoint(), half)) / max_abs(A));
  }
  return {rel <= 1e-10 && adj <= 1e-10,
          fmt("product rel %.2e (abs %.2e), adjoint rel %.2e; tol 1e-10", rel, abs_err, adj)};
}

Outcome adjoint_identities() {
  const Index n = 64;
  double avg = 0, inv = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Symbol a = random_symbol(seed, 6, 1.0);
    const Symbol as = adjoint_symbol(a, 0, n);
    const Symbol l1 = x_average(as), r1 = adjoint_symbol(x_average(a), 0, n);
    const Symbol l2 = inv_dx(as), r2 = adjoint_symbol(inv_dx(a), 0, n);
    for (int j = 0; j < 32; ++j)
      for (int z = -31; z <= 31; ++z) {
        const double x = grid_point(j, 32);
        avg = std::max(avg, std::abs(l1(0, x, z) - r1(0, x, z)));
        inv = std::max(inv, std::abs(l2(0, x, z) - r2(0, x, z)));
      }
  }
  return {avg <= 1e-10 && inv <= 1e-10, fmt("average %.2e, inverse derivative %.2e; tol 1e-10", avg, inv)};
}

Outcome diffeo_construction() {
  const Index n = 256;
  const Potential v = [](double, double y) { return std::pow(1.0 + 0.5 * std::cos(y), -2.0); };
  const auto d = build_diffeo(v, 0.0, 2.0, n);
  // lambda = (mean V^{-1/M})^{-M} on a much finer rule
  const double q = std::pow(periodic_mean([&](double y) { return std::pow(v(0, y), -0.5); }, 1 << 14), -2.0);
  const double lam = std::max(std::abs(d.lambda - q) / q, std::abs(d.lambda - 1.0));
  double at = 0;
  for (int j = 0; j < 1000; ++j) {
    const double y = kTwoPi * j / 1000;
    at = std::max(at, std::abs(d.pair.alpha_tilde(y) - 0.5 * std::sin(y)));
  }
  const double comp = d.pair.composition_residual(), recip = d.pair.reciprocal_residual();
  return {lam <= 1e-10 && at <= 1e-10 && comp <= 1e-10 && recip <= 1e-9,
          fmt("lambda %.2e, alpha_tilde %.2e, composition %.2e, reciprocal %.2e", lam, at, comp, recip)};
}

Outcome transport_flow_check() {
  const Index n = 256;
  const auto p = diffeo_from_alpha(sine_interpolant(0.1, n));
  const MatrixXcd phi = transport_flow(p, n, 64, FlowScheme::Magnus4);
  const VectorXcd u = random_coefficients(n, 16, 5);
  const VectorXcd ref = composition_operator(
      u, [&](double x) { return p.alpha(x); }, [&](double x) { return p.alpha.evaluate(x, 1); });
  const double err = (phi * u - ref).cwiseAbs().maxCoeff();
  const double unit = unitarity_defect(phi);
  const VectorXcd u1 = random_coefficients(n, 12, 3), u2 = random_coefficients(n, 12, 4);
  const double om = symplectic_form_coefficients(u1, u2);
  const double sym = std::abs(symplectic_form_coefficients(phi * u1, phi * u2) - om) / std::max(1.0, std::abs(om));
  return {err <= 1e-6 && unit <= 1e-8 && sym <= 1e-8,
          fmt("closed form %.2e (tol 1e-6), unitarity %.2e, symplectic %.2e", err, unit, sym)};
}

Outcome egorov() {
  const Index n = 256;
  const Symbol v = Symbol::product(ExpPoly::constant(1.0) + cosine(0.25), Multiplier::power_chi(2), 2);
  const auto d = build_diffeo([](double, double x) { return 1.0 + 0.25 * std::cos(x); }, 0.0, 2.0, n);
  const MatrixXcd phi = transport_flow(d.pair, n, 64, FlowScheme::Magnus4);
  const auto fit = egorov_check(phi, quantize(v, 0.0, n), principal_egorov_symbol(v, d.pair), 0.0, 4, 32);
  return {fit.valid && fit.slope <= 1.25, fmt("remainder order %.3f (bound 1.25)", fit.slope)};
}

Outcome homological() {
  const Index n = 128;
  const Symbol w = Symbol::product(cosine(1.0), Multiplier::power_chi(1.0), 1.0);
  const double res = sigma_equation_residual(homological_sigma(w, 1.0, 2.0), w, 1.0, 2.0, 0.0, n);
  const double herm = hermiticity_residual(quantize(homological_solve(w, 1.0, 2.0, 0.0, n), 0.0, n));
  return {res <= 1e-10 && herm <= 1e-12, fmt("residual %.2e (tol 1e-10), hermiticity %.2e (tol 1e-12)", res, herm)};
}

Outcome order_ledger() {
  const auto r = run_reduction(ledger_spec(256), 0.0);
  bool ok = r.ledger.size() >= 4;
  std::string orders;
  double mu = 0, worst = 1e300;
  for (const auto& s : r.ledger) {
    orders += fmt(" %.3f", s.fitted_order_w);
    mu = std::max(mu, s.mu_imag);
    ok = ok && s.fit_valid;
  }
  for (std::size_t k = 1; k < 4 && k < r.ledger.size(); ++k)
    worst = std::min(worst, r.ledger[k - 1].fitted_order_w - r.ledger[k].fitted_order_w);
  return {ok && worst >= 0.75 && mu <= 1e-10, fmt("orders%s, least drop %.3f, max |Im mu| %.1e", orders.c_str(), worst, mu)};
}

Outcome smoothing_remainder() {
  double norm[2];
  int i = 0;
  for (Index n : {128, 256}) {
    const auto r = run_reduction(ledger_spec(n), 0.0);
    norm[i++] = operator_norm(r.WK, -1.0, 1.0, n / 4);
  }
  const double f = std::max(norm[1] / norm[0], norm[0] / norm[1]);
  return {f <= 2.0, fmt("weighted norms %.6g, %.6g; factor %.4f (bound 2)", norm[0], norm[1], f)};
}

Outcome conservation() {
  PropagateOptions o;
  o.t0 = 0;
  o.t1 = 10;
  o.dt = 1e-3;
  o.s_list = {0};
  const auto tr = propagate(traveling(256, 3), smooth_state(256, 0.3), o);
  const double drift = tr.l2_drift();

  const ProblemSpec sp = traveling(64, 3);
  std::vector<double> times;
  for (int j = 0; j <= 100; ++j) times.push_back(0.01 * j);
  ReductionOptions ro;
  ro.verify = false;
  const ReducedModel m = reduced_model(sp, times, ro);
  PropagateOptions c;
  c.t1 = 1.0;
  c.dt = 1e-3;
  const auto cc = cross_propagation(sp, m, smooth_state(64, 1.0), c);
  return {drift <= 1e-8 && cc.sup_error <= 1e-5,
          fmt("L2 drift %.2e over [0,10] (tol 1e-8); cross sup error %.2e over [0,1] (tol 1e-5)", drift, cc.sup_error)};
}

Outcome growth() {
  GrowthOptions g;
  g.T = 50;
  g.dt = 2e-3;
  g.s = 2;
  g.s_list = {0, 2};
  g.s0 = 0;
  g.s1 = 8;
  g.interpolation_times = {1, 5, 10};
  g.reduction_samples = 3;
  g.matrix_dt = 1e-2;
  const auto rep = growth_experiment(traveling(256, 3), smooth_state(256, 0.3), g);
  std::string ratios;
  for (const auto& r : rep.interpolation) ratios += fmt(" t=%g:%.3f", r.t, r.ratio);
  return {rep.envelope_ok && rep.interpolation_ok,
          fmt("C_T %.4f, C_W %.4f, envelope margin %.3f; interpolation ratio%s", rep.C_T, rep.C_W,
              rep.envelope_margin, ratios.c_str())};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"calculus exactness", calculus_exactness},
      {"adjoint and average identities", adjoint_identities},
      {"diffeomorphism construction", diffeo_construction},
      {"transport flow", transport_flow_check},
      {"Egorov principal symbol", egorov},
      {"homological solve", homological},
      {"order ledger", order_ledger},
      {"smoothing remainder", smoothing_remainder},
      {"conservation and cross-propagation", conservation},
      {"growth bounds", growth},
  };
  int failures = 0, k = 0;
  for (const auto& [name, fn] : criteria) {
    ++k;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %d criteria pass\n", k - failures, k);
  return failures;
}

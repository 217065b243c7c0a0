#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "torusnf/normal_form.hpp"

using namespace torusnf;
using namespace torusnf::testing;

namespace {

ExpPoly cosine(double c, int k = 1, double w = 0.0) { return ExpPoly::trig(c, k, w, 0.0, false); }

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

// truncated Fourier series of a smooth real periodic f
ExpPoly fourier_series(const std::function<double(double)>& f, int band) {
  const Index n = 256;
  VectorXcd s(n);
  for (Index j = 0; j < n; ++j) s(j) = f(grid_point(j, n));
  const VectorXcd c = forward_transform(s);
  ExpPoly p;
  for (int k = -band; k <= band; ++k) p = p + ExpPoly::exponential(k, 0.0, c(slot_of(k, n)));
  return p;
}

}  // namespace

TEST_CASE("step counts") {
  CHECK(ebar(2, 1) == 1.0);
  CHECK(ebar(3, 0.5) == 0.5);
  CHECK(ebar(1.5, 2) == 0.5);
  CHECK_THROWS_AS(ebar(1.0, 1.0), HypothesisViolation);
  CHECK_THROWS_AS(ebar(2.0, 0.0), HypothesisViolation);
  CHECK(n_steps(2, 3, 1) == 6);
  CHECK(n_steps(2, 2, 0.5) == 9);
  CHECK(k_from_s(2.3) == 3);
  CHECK(k_from_s(2.0) == 3);
  for (double M : {1.5, 2.0, 3.0})
    for (int K : {1, 2, 5}) {
      const double eb = ebar(M, 0.7);
      CHECK(M - n_steps(M, K, eb) * eb < -K);
    }
}

TEST_CASE("validation") {
  ProblemSpec sp;
  sp.W = Symbol::zero();
  auto v = validate(sp, 0.0, 1.0);
  CHECK(v.delta == doctest::Approx(1.0));

  ProblemSpec neg = sp;
  neg.V = ExpPoly::constant(-1.0) + cosine(1.0);
  try {
    validate(neg, 0.0, 0.0);
    FAIL("expected (H2)");
  } catch (const HypothesisViolation& e) {
    CHECK(e.hypothesis() == "H2");
    CHECK(e.exit_code() == 1);
  }

  ProblemSpec gap = sp;
  gap.W = Symbol::multiplier(Multiplier::power_chi(2.0), 2.0);
  CHECK_THROWS_AS(validate(gap, 0.0, 0.0), HypothesisViolation);

  ProblemSpec strict = ledger_spec(32);
  strict.symmetrize = false;
  try {
    validate(strict, 0.0, 0.0);
    FAIL("expected (H1)");
  } catch (const HypothesisViolation& e) {
    CHECK(e.hypothesis() == "H1");
  }
  CHECK_THROWS_AS(assemble_operator(strict, 0.0), HypothesisViolation);
  strict.symmetrize = true;
  CHECK(is_hermitian(assemble_operator(strict, 0.0), 1e-14));

  // x-independent lower-order part with constant V is self-adjoint as given
  ProblemSpec flat = sp;
  flat.symmetrize = false;
  flat.V = ExpPoly::constant(2.0);
  flat.W = Symbol::multiplier(Multiplier::power_chi(1.0), 1.0);
  CHECK(validate(flat, 0.0, 0.0).hermiticity <= 1e-15);
}

TEST_CASE("homological equation, symbol form") {
  const Index n = 128;
  const double t = 0.0;
  Symbol flat = Symbol::multiplier(Multiplier::power_chi(1.0), 1.0);
  CHECK(max_abs(quantize(homological_sigma(flat, 1.0, 2.0), t, n)) == 0.0);

  const Symbol w = Symbol::product(cosine(1.0), Multiplier::power_chi(1.0), 1.0);
  const Symbol sigma = homological_sigma(w, 1.0, 2.0);
  for (double xi : {-7.0, -2.0, 1.5, 3.0, 20.0})
    for (double x : {0.0, 0.4, 2.0}) {
      const double expect = chi0(xi) * std::sin(x) * std::abs(xi) * chi(xi) / (4 * xi);
      CHECK(std::abs(sigma(t, x, xi) - expect) <= 1e-14);
    }
  CHECK(sigma_equation_residual(sigma, w, 1.0, 2.0, t, n) <= 1e-10);
  CHECK(sigma_equation_residual(homological_sigma(w, 1.7, 3.0), w, 1.7, 3.0, t, n) <= 1e-10);

  const Symbol g = homological_solve(w, 1.0, 2.0, t, n);
  const MatrixXcd gm = quantize(g, t, 256);
  CHECK(hermiticity_residual(gm) <= 1e-12);
  auto fit = estimate_order(gm);
  CHECK(fit.valid);
  CHECK(fit.slope <= 1 - 1 * ebar(2, 1) + 0.25);

  // sigma^* - sigma is one order lower than sigma
  const MatrixXcd sm = quantize(sigma, t, 256);
  auto ansatz = estimate_order(MatrixXcd(sm.adjoint() - sm));
  CHECK(ansatz.slope <= -1 * ebar(2, 1) + 0.25);

  CHECK_THROWS_AS(homological_sigma(w, 0.0, 2.0), HypothesisViolation);
}

TEST_CASE("homological equation, matrix form agrees with the symbol form") {
  const Index n = 64;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Symbol w = random_symbol(seed, 4, 1.0);
    w = (w + adjoint_symbol(w, 0.0, n)).with_order(1.0);
    const MatrixXcd wm = quantize(w, 0.0, n);
    const MatrixXcd s_sym = quantize(homological_sigma(w, 1.3, 2.0), 0.0, n);
    const MatrixXcd s_mat = homological_sigma(wm, 1.3, 2.0);
    CHECK(max_abs(s_sym - s_mat) <= 1e-12 * std::max(1.0, max_abs(s_sym)));
    CHECK(hermiticity_residual(homological_solve(wm, 1.3, 2.0)) == 0.0);
  }
}

TEST_CASE("highest-order reduction") {
  {
    ProblemSpec sp;
    sp.N = 64;
    HighestOrderData d;
    Level lv = reduce_highest_order(sp, 0.0, 0, &d);
    CHECK(lv.samples.size() == 1);
    CHECK(d.lambda == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(max_abs(lv.center().flow - MatrixXcd::Identity(64, 64)) <= 1e-12);
    CHECK(max_abs(lv.center().W) <= 1e-9);
  }
  const Index n = 256;
  ProblemSpec sp;
  sp.N = n;
  sp.V = fourier_series([](double y) { return std::pow(1.0 + 0.5 * std::cos(y), -2.0); }, 40);
  sp.W = Symbol::zero();
  HighestOrderData d;
  Level lv = reduce_highest_order(sp, 0.0, 0, &d);
  CHECK(std::abs(d.lambda - 1.0) <= 1e-10);
  const auto& c = lv.center();
  auto fit = ledger_fit(c.W, max_abs(c.V));
  MESSAGE("order of V_1 - |D|^2: " << fit.slope);
  CHECK(fit.slope <= 1.25);

  // top-order x-profile: symbol of V_1 over xi^2, extrapolated in 1/xi
  const VectorXd vgrid = [&] {
    VectorXd s(n);
    for (Index j = 0; j < n; ++j) s(j) = std::real(sp.V(0.0, grid_point(j, n)));
    return s;
  }();
  const int deg = 4;
  std::vector<int> xs;
  for (int xi = 16; xi <= 32; xi += 2) xs.push_back(xi);
  Eigen::MatrixXd A(xs.size(), deg + 1);
  Eigen::MatrixXd B(xs.size(), n);
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (int p = 0; p <= deg; ++p) A(r, p) = std::pow(1.0 / xs[r], p);
    const Index col = slot_of(xs[r], n);
    for (Index j = 0; j < n; ++j) {
      const double x = grid_point(j, n);
      cplx acc = 0;
      for (Index e = 0; e < n; ++e) acc += c.V(e, col) * std::exp(kI * (static_cast<double>(e - col) * x));
      B(r, j) = acc.real() / (xs[r] * xs[r]);
    }
  }
  const Eigen::MatrixXd coef = A.colPivHouseholderQr().solve(B);
  const Eigen::VectorXd top = coef.row(0).transpose();
  const double var_top = (top.array() - top.mean()).square().mean();
  const double var_v = (vgrid.array() - vgrid.mean()).square().mean();
  MESSAGE("top-order x-variance ratio " << var_top / var_v);
  CHECK(var_top <= 1e-6 * var_v);
}

TEST_CASE("descent step") {
  const Index n = 256;
  ProblemSpec sp;
  sp.N = n;
  const Symbol w1 = Symbol::product(cosine(1.0), Multiplier::power_chi(1.0), 1.0);
  LevelSample s;
  s.lambda = 1.0;
  s.mu = VectorXd::Zero(n);
  s.W = hermitian_part(quantize(w1, 0.0, n));
  s.V = s.W + abs_d_power(2.0, n);
  s.flow = MatrixXcd::Identity(n, n);
  Level lv;
  lv.n = 1;
  lv.samples.push_back(s);

  std::vector<MatrixXcd> gs;
  Level next = reduce_step(sp, lv, &gs);
  const auto& c = next.center();
  auto fit = ledger_fit(c.W, max_abs(c.V));
  MESSAGE("order of w_2 " << fit.slope);
  CHECK(fit.slope <= 0.25);
  CHECK((c.mu - s.mu - s.W.diagonal().real()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(hermiticity_residual(gs[0]) <= 1e-12);

  Level zero = lv;
  zero.samples[0].W.setZero();
  zero.samples[0].V = abs_d_power(2.0, n);
  Level same = reduce_step(sp, zero, &gs);
  CHECK(max_abs(gs[0]) == 0.0);
  CHECK(max_abs(same.center().V - zero.samples[0].V) <= 1e-12);
  CHECK(max_abs(same.center().W) <= 1e-12);
}

TEST_CASE("full reduction, trivial problem") {
  ProblemSpec sp;
  sp.N = 64;
  sp.K = 3;
  auto r = run_reduction(sp, 0.0);
  CHECK(r.N_K == 6);
  CHECK(max_abs(r.TK() - MatrixXcd::Identity(64, 64)) <= 1e-12);
  CHECK(max_abs(r.WK) <= 1e-9);
  for (Index i = 0; i < 64; ++i) {
    const double xi = static_cast<double>(mode_of(i, 64));
    CHECK(std::abs(r.lambda_K(i) - (xi == 0 ? 0.0 : xi * xi * chi(xi))) <= 1e-9);
  }
}

TEST_CASE("order ledger") {
  auto r = run_reduction(ledger_spec(256), 0.0);
  REQUIRE(r.ledger.size() == 5);
  for (const auto& st : r.ledger) {
    MESSAGE("step " << st.n << " order " << st.fitted_order_w << " mu_imag " << st.mu_imag);
    CHECK(st.fit_valid);
    CHECK(st.mu_imag <= 1e-10);
    CHECK(st.hermiticity_residual <= 1e-9);
  }
  for (int k = 1; k < 3; ++k) CHECK(r.ledger[k - 1].fitted_order_w - r.ledger[k].fitted_order_w >= 0.75);
  CHECK(r.pushforward_residual <= 1e-7);
  CHECK(is_hermitian(r.WK, 1e-9));
  CHECK(unitarity_defect(r.TK()) <= 1e-10);
  auto fit = ledger_fit(r.WK, 1.0);
  CHECK(fit.slope <= -r.ebar * 0 - 2 + 0.25);
}

TEST_CASE("smoothing remainder under refinement") {
  double norms[2];
  int i = 0;
  for (Index n : {128, 256}) {
    auto r = run_reduction(ledger_spec(n), 0.0);
    norms[i++] = operator_norm(r.WK, -1.0, 1.0, n / 4);
  }
  MESSAGE("weighted W_K norms " << norms[0] << " " << norms[1]);
  CHECK(norms[1] / norms[0] <= 2.0);
  CHECK(norms[0] / norms[1] <= 2.0);
}

TEST_CASE("ledger violation aborts with the report") {
  ReductionOptions o;
  o.slack = -3.0;
  try {
    run_reduction(ledger_spec(128), 0.0, o);
    FAIL("expected a stall");
  } catch (const ReductionStall& e) {
    CHECK(e.exit_code() == 3);
    CHECK(e.ledger().size() == 1);
  }
}

TEST_CASE("time-dependent reduction") {
  ProblemSpec sp;
  sp.N = 64;
  sp.K = 1;
  sp.V = ExpPoly::constant(1.0) + cosine(0.5, 1, -1.0);
  auto r = run_reduction(sp, 0.3);
  CHECK(r.N_K == 4);
  CHECK(is_hermitian(r.WK, 1e-9));
  CHECK(r.ledger.back().fitted_order_w <= r.ledger.back().bound + 0.25);
  MESSAGE("time-dependent pushforward residual " << r.pushforward_residual);
  CHECK(r.pushforward_residual >= 0.0);
  CHECK(r.pushforward_residual <= 1e-3);
}

TEST_CASE("pushforward") {
  const Index n = 16;
  const double h = 1e-5;
  std::vector<MatrixXcd> x, id, zero, phi;
  const MatrixXcd h0 = hermitian_part(MatrixXcd(MatrixXcd::Random(n, n)));
  const MatrixXcd g0 = hermitian_part(MatrixXcd(MatrixXcd::Random(n, n)));
  const MatrixXcd g1 = hermitian_part(MatrixXcd(MatrixXcd::Random(n, n)));
  for (int j = -1; j <= 1; ++j) {
    x.push_back(kI * (h0 + 0.1 * j * h * g1));
    id.push_back(MatrixXcd::Identity(n, n));
    zero.push_back(MatrixXcd::Zero(n, n));
    phi.push_back(hermitian_exp(g0 + j * h * g1, 1.0));
  }
  std::vector<bool> flags;
  auto same = pushforward(x, id, h, &flags);
  for (int j = 0; j < 3; ++j) CHECK(max_abs(same[j] - x[j]) == 0.0);
  CHECK(flags[0]);
  CHECK(!flags[1]);
  CHECK(flags[2]);

  std::vector<MatrixXcd> still(3, phi[1]);
  for (const auto& m : pushforward(zero, still, h)) CHECK(max_abs(m) <= 1e-14);

  auto out = pushforward(x, phi, h);
  const MatrixXcd herm = -kI * out[1];
  CHECK(hermiticity_residual(herm) <= 1e-8);
}

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "torusnf/calculus.hpp"

using namespace torusnf;
using namespace torusnf::testing;

TEST_CASE("quantize elementary symbols") {
  const Index n = 16;
  CHECK(max_abs(quantize(Symbol::constant(1.0), 0, n) - MatrixXcd::Identity(n, n)) < 1e-15);
  MatrixXcd xi = quantize(Symbol::multiplier(Multiplier::xi(), 1), 0, n);
  for (Index s = 0; s < n; ++s) CHECK(xi(s, s) == cplx(static_cast<double>(mode_of(s, n))));
  CHECK(max_abs(MatrixXcd(xi.diagonal().asDiagonal()) - xi) == 0.0);
  MatrixXcd shift = quantize(Symbol::function_of_x(ExpPoly::exponential(1, 0, 1.0)), 0, n);
  for (Index r = 0; r < n; ++r)
    for (Index s = 0; s < n; ++s) CHECK(shift(r, s) == cplx(r == s + 1 ? 1.0 : 0.0));
}

TEST_CASE("opaque quantization agrees with the separable path") {
  const Index n = 32;
  Symbol a = random_symbol(4, 5, 1.5);
  Symbol op = opaque(a);
  CHECK(!op.separable());
  CHECK(max_abs(quantize(a, 0.3, n) - quantize(op, 0.3, n)) < 1e-11);
}

TEST_CASE("quantize reports non-finite values with coordinates") {
  Symbol bad([](double, double x, double) { return x > 1.0 ? cplx{std::nan("")} : cplx{1.0}; }, 0, "bad");
  try {
    quantize(bad, 0.5, 8);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("(t, x, xi)") != std::string::npos);
  }
}

TEST_CASE("apply") {
  const Index n = 32;
  auto u = random_grid_function(n, 6, 1);
  CHECK((torusnf::apply(MatrixXcd::Identity(n, n), u).samples() - u.samples()).norm() < 1e-13);
  auto e1 = GridFunction::from_function(n, [](double x) { return std::exp(kI * x); });
  auto xi = quantize(Symbol::multiplier(Multiplier::xi(), 1), 0, n);
  CHECK((torusnf::apply(xi, e1).samples() - e1.samples()).norm() < 1e-13);
  // multiplication oracle
  ExpPoly v = ExpPoly::constant(1.0) + ExpPoly::trig(0.5, 2, 0, 0.3, false);
  auto Vu = torusnf::apply(quantize(Symbol::function_of_x(v), 0, n), u);
  VectorXcd pointwise(n);
  for (Index j = 0; j < n; ++j) pointwise(j) = v(0, u.x(j)) * u.samples()(j);
  CHECK((Vu.samples() - pointwise).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("composition examples") {
  const Index n = 32;
  Symbol xi = Symbol::multiplier(Multiplier::xi(), 1);
  Symbol e = Symbol::function_of_x(ExpPoly::exponential(1, 0, 1.0));
  auto ab = compose_exact(xi, e, 0, n);
  auto ba = compose_exact(e, xi, 0, n);
  auto xx = compose_exact(xi, xi, 0, n);
  for (double x : {0.2, 1.7})
    for (double z : {-3.0, 0.0, 5.0}) {
      CHECK(std::abs(ab(0, x, z) - (z + 1) * std::exp(kI * x)) < 1e-13);
      CHECK(std::abs(ba(0, x, z) - z * std::exp(kI * x)) < 1e-13);
      CHECK(std::abs(xx(0, x, z) - z * z) < 1e-13);
    }
  auto ex = compose_expansion(xi, e, 2, 0, n);
  CHECK(std::abs(ex.expansion(0, 0.4, 3.0) - 4.0 * std::exp(kI * 0.4)) < 1e-13);
  CHECK(max_abs(quantize(ex.remainder, 0, n)) < 1e-13);
  auto mm = compose_expansion(Symbol::multiplier(Multiplier::power_chi(2), 2),
                              Symbol::multiplier(Multiplier::xi(), 1), 1, 0, n);
  CHECK(max_abs(quantize(mm.remainder, 0, n)) < 1e-12);
}

TEST_CASE("expansion remainder order") {
  const Index n = 256;
  Symbol a = Symbol::multiplier(Multiplier::power_chi(2), 2);
  Symbol b = Symbol::function_of_x(ExpPoly::trig(1.0, 1, 0, 0, false));
  auto ex = compose_expansion(a, b, 1, 0, n);
  auto fit = estimate_order(quantize(ex.remainder, 0, n));
  CHECK(fit.valid);
  CHECK(fit.slope <= 1.25);
  CHECK(fit.slope >= 0.75);
}

TEST_CASE("adjoint examples") {
  const Index n = 32;
  Symbol m = Symbol::multiplier(Multiplier::power_chi(1.5).scaled(cplx(1, 2)), 1.5);
  auto ms = adjoint_symbol(m, 0, n);
  for (double z : {-4.0, 2.0, 7.0}) CHECK(std::abs(ms(0, 0.3, z) - std::conj(m(0, 0.3, z))) < 1e-13);
  Symbol e = Symbol::function_of_x(ExpPoly::exponential(1, 0, 1.0));
  auto es = adjoint_symbol(e, 0, n);
  CHECK(std::abs(es(0, 0.9, 2.0) - std::exp(-kI * 0.9)) < 1e-14);
  Symbol v = Symbol::function_of_x(ExpPoly::constant(2.0) + ExpPoly::trig(0.4, 3, 0, 0.1, true));
  auto vs = adjoint_symbol(v, 0, n);
  for (double x : {0.0, 2.5}) CHECK(std::abs(vs(0, x, 5.0) - v(0, x, 5.0)) < 1e-14);
}

TEST_CASE("homomorphism and adjoint on the headroom block") {
  const Index n = 128;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Symbol a = random_symbol(seed, 8, 1.0);
    Symbol b = random_symbol(seed + 100, 8, 2.0);
    MatrixXcd A = quantize(a, 0, n), B = quantize(b, 0, n);
    MatrixXcd AB = A * B;
    CHECK(max_abs(central_block(quantize(compose_exact(a, b, 0, n), 0, n) - AB, n / 4)) <=
          1e-10 * max_abs(central_block(AB, n / 4)));
    CHECK(max_abs(central_block(quantize(adjoint_symbol(a, 0, n), 0, n) - A.adjoint(), n / 4)) <= 1e-10 * max_abs(A));
    auto aa = adjoint_symbol(adjoint_symbol(a, 0, n), 0, n);
    CHECK(max_abs(central_block(quantize(aa, 0, n) - A, n / 4)) <= 1e-10 * max_abs(A));
  }
}

TEST_CASE("opaque composition and adjoint match matrix algebra") {
  const Index n = 32;
  Symbol a = opaque(random_symbol(7, 3, 1.0));
  Symbol b = opaque(random_symbol(8, 3, 1.0));
  MatrixXcd A = quantize(a, 0, n), B = quantize(b, 0, n);
  CHECK(max_abs(central_block(quantize(compose_exact(a, b, 0, n), 0, n) - A * B, n / 4)) < 1e-9 * max_abs(A * B));
  CHECK(max_abs(central_block(quantize(adjoint_symbol(a, 0, n), 0, n) - A.adjoint(), n / 4)) < 1e-9 * max_abs(A));
}

TEST_CASE("x average and inverse derivative") {
  Symbol a = Symbol::product(ExpPoly::trig(1.0, 1, 0, 0, false), Multiplier::xi(), 1);
  CHECK(std::abs(x_average(a)(0, 1.0, 3.0)) < 1e-15);
  Symbol b = Symbol::product(ExpPoly::constant(2.0) + ExpPoly::trig(1.0, 1, 0, 0, false), Multiplier::power_chi(1), 1);
  CHECK(std::abs(x_average(b)(0, 0.7, -5.0) - 10.0) < 1e-14);
  CHECK(x_average(b).x_independent());
  // opaque fallbacks
  CHECK(std::abs(x_average(opaque(b))(0, 0.7, -5.0) - 10.0) < 1e-12);
  auto inv = inv_dx(opaque(a));
  CHECK(std::abs(inv(0, 0.8, 2.0) - 2.0 * std::sin(0.8)) < 1e-12);
  auto dx = opaque(a).dx();
  CHECK(std::abs(dx(0, 0.8, 2.0) + 2.0 * std::sin(0.8)) < 1e-12);
}

TEST_CASE("adjoint commutes with average and inverse derivative") {
  const Index n = 64;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Symbol a = random_symbol(seed, 6, 1.0);
    auto lhs1 = x_average(adjoint_symbol(a, 0, n));
    auto rhs1 = adjoint_symbol(x_average(a), 0, n);
    auto lhs2 = inv_dx(adjoint_symbol(a, 0, n));
    auto rhs2 = adjoint_symbol(inv_dx(a), 0, n);
    double err = 0;
    for (int j = 0; j < 16; ++j)
      for (int z = -20; z <= 20; z += 3) {
        const double x = grid_point(j, 16);
        err = std::max(err, std::abs(lhs1(0, x, z) - rhs1(0, x, z)));
        err = std::max(err, std::abs(lhs2(0, x, z) - rhs2(0, x, z)));
      }
    CHECK(err <= 1e-10);
  }
}

TEST_CASE("poisson bracket") {
  Symbol xi = Symbol::multiplier(Multiplier::xi(), 1);
  Symbol e = Symbol::function_of_x(ExpPoly::exponential(1, 0, 1.0));
  auto pb = poisson_bracket(xi, e);
  CHECK(std::abs(pb(0, 0.5, 3.0) - kI * std::exp(kI * 0.5)) < 1e-14);
  Symbol a = random_symbol(3, 4, 2.0);
  CHECK(std::abs(poisson_bracket(a, a)(0, 1.1, 6.0)) < 1e-12);

  const Index n = 256;
  Symbol p = Symbol::product(ExpPoly::constant(1.0) + ExpPoly::trig(0.3, 1, 0, 0, false), Multiplier::power_chi(2), 2);
  Symbol q = Symbol::product(ExpPoly::trig(1.0, 2, 0, 0, true), Multiplier::power_chi(1), 1);
  Symbol r = compose_exact(p, q, 0, n) - compose_exact(q, p, 0, n) + poisson_bracket(p, q).scaled(kI);
  auto fit = estimate_order(quantize(r, 0, n));
  CHECK(fit.slope <= 1.25);
}

TEST_CASE("real multiplier times self-adjoint symbol") {
  const Index n = 256;
  Symbol v = Symbol::function_of_x(ExpPoly::constant(1.0) + ExpPoly::trig(0.25, 1, 0, 0, false));
  Symbol b = v * Symbol::multiplier(Multiplier::power_chi(2), 2);
  auto d = adjoint_symbol(b, 0, n) - b;
  CHECK(estimate_order(quantize(d, 0, n)).slope <= 2 - 1 + 0.25);
  CHECK(is_hermitian(quantize(v, 0, n)));
}

TEST_CASE("order estimates") {
  const Index n = 256;
  auto f2 = estimate_order(quantize(Symbol::multiplier(Multiplier::power_chi(2), 2), 0, n));
  CHECK(f2.slope == doctest::Approx(2).epsilon(0.025));
  CHECK(f2.points == 58);
  CHECK(estimate_order(MatrixXcd::Identity(n, n)).slope == doctest::Approx(0).scale(1).epsilon(0.05));
  auto f3 = estimate_order(quantize(Symbol::multiplier(Multiplier::power_chi(-3), -3), 0, n));
  CHECK(std::abs(f3.slope + 3) <= 0.1);
  auto z = estimate_order(MatrixXcd::Zero(n, n));
  CHECK(z.slope == -std::numeric_limits<double>::infinity());
  CHECK(!estimate_order(MatrixXcd::Identity(8, 8)).valid);
}

TEST_CASE("hermitian exponential and norms") {
  const Index n = 32;
  MatrixXcd h = hermitian_part(quantize(random_symbol(2, 4, 1.0), 0, n));
  MatrixXcd u = hermitian_exp(h, 0.7);
  CHECK(unitarity_defect(u) < 1e-12);
  CHECK(max_abs(u * hermitian_exp(h, -0.7) - MatrixXcd::Identity(n, n)) < 1e-12);
  CHECK(operator_norm(u, 0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(operator_norm(MatrixXcd::Identity(n, n), 1.5, 1.5) == doctest::Approx(1.0));
  MatrixXcd br = bracket_weights(n, 1).cast<cplx>().asDiagonal();
  CHECK(operator_norm(br, 1, 0) == doctest::Approx(1.0));
  MatrixXcd d = quantize(Symbol::multiplier(Multiplier::xi(), 1), 0, n);
  CHECK(max_abs(hermitian_exp(d, 1.0) - MatrixXcd(d.diagonal().unaryExpr([](cplx z) { return std::exp(kI * z); }).asDiagonal())) < 1e-12);
}

#include "torusnf/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace torusnf {

bool time_independent(const Symbol& a) {
  if (!a.separable()) return false;
  for (const auto& term : a.terms())
    if (!term.f.time_independent() || !term.m.time_independent()) return false;
  return true;
}

bool time_independent(const ProblemSpec& spec) { return spec.V.time_independent() && time_independent(spec.W); }

Potential potential(const ProblemSpec& spec) {
  return [v = spec.V](double t, double x) { return std::real(v(t, x)); };
}

Symbol principal_symbol(const ProblemSpec& spec) {
  return Symbol::product(spec.V, Multiplier::power_chi(spec.M), spec.M).with_label("V|xi|^M chi");
}

MatrixXcd assemble_operator(const ProblemSpec& spec, double t) {
  const MatrixXcd a = quantize(principal_symbol(spec) + spec.W, t, spec.N);
  if (spec.symmetrize) return hermitian_part(a);
  const double r = hermiticity_residual(a);
  if (r > 1e-10) {
    std::ostringstream os;
    os << "operator is not self-adjoint at t = " << t << " (relative defect " << r << ")";
    throw HypothesisViolation("H1", os.str());
  }
  return a;
}

Validation validate(const ProblemSpec& spec, double t0, double t1, int t_samples) {
  ebar(spec.M, spec.frak_e);
  if (spec.W.order() > spec.M - spec.frak_e + 1e-12) {
    std::ostringstream os;
    os << "order of W is " << spec.W.order() << ", above M - frak_e = " << spec.M - spec.frak_e;
    throw HypothesisViolation("H3", os.str());
  }
  Validation v;
  v.delta = std::numeric_limits<double>::infinity();
  const Index fine = 4 * spec.N;
  const int ts = t1 > t0 ? std::max(t_samples, 2) : 1;
  for (int i = 0; i < ts; ++i) {
    const double t = ts == 1 ? t0 : t0 + (t1 - t0) * i / (ts - 1);
    for (Index j = 0; j < fine; ++j) {
      const double x = grid_point(j, fine);
      const cplx val = spec.V(t, x);
      if (std::abs(val.imag()) > 1e-12) {
        std::ostringstream os;
        os << "potential is not real at (t, x) = (" << t << ", " << x << ")";
        throw HypothesisViolation("H1", os.str());
      }
      if (!(val.real() > 0.0)) {
        std::ostringstream os;
        os << "potential not strictly positive: V(" << t << ", " << x << ") = " << val.real();
        throw HypothesisViolation("H2", os.str());
      }
      v.delta = std::min(v.delta, val.real());
    }
  }
  v.hermiticity = hermiticity_residual(quantize(principal_symbol(spec) + spec.W, t0, spec.N));
  if (!spec.symmetrize && v.hermiticity > 1e-10) {
    std::ostringstream os;
    os << "operator is not self-adjoint (relative defect " << v.hermiticity << ")";
    throw HypothesisViolation("H1", os.str());
  }
  return v;
}

double ebar(double M, double frak_e) {
  if (!(M > 1.0)) throw HypothesisViolation("H3", "dispersion exponent M must exceed 1, got " + std::to_string(M));
  if (!(frak_e > 0.0)) throw HypothesisViolation("H3", "order gap frak_e must be positive, got " + std::to_string(frak_e));
  return M - std::max({M - 1.0, 1.0, M - frak_e});
}

int n_steps(double M, int K, double eb) {
  if (!(eb > 0.0)) throw ContractViolation("ebar must be positive");
  return static_cast<int>(std::floor((M + K) / eb + 1e-9)) + 1;
}

int k_from_s(double s) {
  if (!(s >= 0.0)) throw ContractViolation("Sobolev index must be non-negative");
  return static_cast<int>(std::floor(s)) + 1;
}

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0)) throw HypothesisViolation("H2", "lambda(t) must be positive, got " + std::to_string(lambda));
}

VectorXd dispersion(double lambda, double M, Index n) {
  VectorXd d(n);
  for (Index i = 0; i < n; ++i) {
    const double xi = static_cast<double>(mode_of(i, n));
    d(i) = xi == 0.0 ? 0.0 : lambda * std::pow(std::abs(xi), M) * chi(xi);
  }
  return d;
}

}  // namespace

double homological_weight(double xi, double lambda, double M) {
  check_lambda(lambda);
  const double c0 = chi0(xi);
  if (c0 == 0.0) return 0.0;
  return c0 * (xi < 0 ? -1.0 : 1.0) * std::pow(std::abs(xi), 1.0 - M) / (2.0 * lambda * M);
}

Symbol homological_sigma(const Symbol& w, double lambda, double M) {
  check_lambda(lambda);
  const Multiplier phi = (Multiplier::chi0() * Multiplier::signed_power_chi(1.0 - M)).scaled(1.0 / (2.0 * lambda * M));
  const Symbol a = inv_dx(w - x_average(w));
  return (a * Symbol::multiplier(phi, 1.0 - M)).with_order(w.order() + 1.0 - M).with_label("sigma");
}

Symbol homological_solve(const Symbol& w, double lambda, double M, double t, Index n) {
  const Symbol s = homological_sigma(w, lambda, M);
  return (s + adjoint_symbol(s, t, n)).with_order(s.order()).with_label("g");
}

double sigma_equation_residual(const Symbol& sigma, const Symbol& w, double lambda, double M, double t, Index n) {
  const Symbol sx = sigma.dx();
  const Symbol wa = x_average(w);
  double r = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double xi = static_cast<double>(mode_of(i, n));
    if (std::abs(xi) < 2.0) continue;
    const double coeff = -2.0 * lambda * M * std::pow(std::abs(xi), M - 2.0) * xi * chi(xi);
    const VectorXcd a = sx.column(t, xi, n);
    const VectorXcd b = w.column(t, xi, n) - wa.column(t, xi, n);
    r = std::max(r, (coeff * a + chi0(xi) * b).cwiseAbs().maxCoeff());
  }
  return r;
}

MatrixXcd homological_sigma(const MatrixXcd& w, double lambda, double M) {
  const Index n = w.rows();
  MatrixXcd s = MatrixXcd::Zero(n, n);
  for (Index c = 0; c < n; ++c) {
    const double phi = homological_weight(static_cast<double>(mode_of(c, n)), lambda, M);
    if (phi == 0.0) continue;
    for (Index r = 0; r < n; ++r)
      if (r != c) s(r, c) = phi * w(r, c) / (kI * static_cast<double>(r - c));
  }
  return s;
}

MatrixXcd homological_solve(const MatrixXcd& w, double lambda, double M) {
  const MatrixXcd s = homological_sigma(w, lambda, M);
  return s + s.adjoint();
}

OrderFit ledger_fit(const MatrixXcd& w, double scale, Index lo, Index hi) {
  return estimate_order(w, 1e-13 * std::max(1.0, scale), lo, hi);
}

namespace {

// Phi V Phi^* - i Phi d_t(Phi^*); returns the relative hermiticity defect of
// the raw product through `defect`.
MatrixXcd conjugate(const MatrixXcd& phi, const MatrixXcd& v, const MatrixXcd* dphi_adj, double* defect) {
  MatrixXcd p = phi * v * phi.adjoint();
  if (dphi_adj) p -= hermitian_part(kI * (phi * *dphi_adj));
  *defect = hermiticity_residual(p);
  return hermitian_part(p);
}

LevelSample make_sample(double t, double lambda, double M, MatrixXcd v, VectorXd mu, MatrixXcd flow, double defect) {
  LevelSample s;
  s.defect = defect;
  s.t = t;
  s.lambda = lambda;
  const Index n = v.rows();
  VectorXd diag = dispersion(lambda, M, n) + mu;
  s.W = v;
  s.W.diagonal() -= diag.cast<cplx>();
  s.V = std::move(v);
  s.mu = std::move(mu);
  s.flow = std::move(flow);
  return s;
}

}  // namespace

Level reduce_highest_order(const ProblemSpec& spec, double t, int half_width, HighestOrderData* diffeo) {
  const bool still = time_independent(spec);
  const int out = still ? 0 : half_width;
  const int in = still ? 0 : half_width + 1;
  const double h = still ? 0.0 : spec.h_t;
  const Potential pot = potential(spec);

  std::vector<HighestOrderData> data;
  std::vector<MatrixXcd> flows;
  for (int j = -in; j <= in; ++j) {
    const double tj = t + j * h;
    data.push_back(build_diffeo(pot, tj, spec.M, spec.N));
    flows.push_back(transport_flow(data.back().pair, spec.N, spec.substeps, FlowScheme::Magnus4));
  }
  if (diffeo) *diffeo = data[in];

  Level level;
  level.n = 1;
  level.h = h;
  for (int j = -out; j <= out; ++j) {
    const int k = j + in;
    const double tj = t + j * h;
    const MatrixXcd v = assemble_operator(spec, tj);
    double defect = 0.0;
    MatrixXcd v1;
    if (still) {
      v1 = conjugate(flows[k], v, nullptr, &defect);
    } else {
      const MatrixXcd d = (flows[k + 1].adjoint() - flows[k - 1].adjoint()) / (2.0 * h);
      v1 = conjugate(flows[k], v, &d, &defect);
    }
    level.samples.push_back(
        make_sample(tj, data[k].lambda, spec.M, std::move(v1), VectorXd::Zero(spec.N), flows[k], defect));
  }
  return level;
}

Level reduce_step(const ProblemSpec& spec, const Level& level, std::vector<MatrixXcd>* g_out) {
  const auto& in = level.samples;
  const Index m = static_cast<Index>(in.size());
  const bool still = m == 1;
  if (!still && m < 3) throw ContractViolation("t-stencil exhausted");
  std::vector<MatrixXcd> flows;
  if (g_out) g_out->clear();
  for (const auto& s : in) {
    const MatrixXcd g = homological_solve(s.W, s.lambda, spec.M);
    flows.push_back(g_flow(g, 1.0));
    if (g_out) g_out->push_back(g);
  }
  Level next;
  next.n = level.n + 1;
  next.h = level.h;
  const Index lo = still ? 0 : 1, hi = still ? 1 : m - 1;
  for (Index k = lo; k < hi; ++k) {
    const auto& s = in[k];
    double defect = 0.0;
    MatrixXcd v1;
    if (still) {
      v1 = conjugate(flows[k], s.V, nullptr, &defect);
    } else {
      const MatrixXcd d = (flows[k + 1].adjoint() - flows[k - 1].adjoint()) / (2.0 * level.h);
      v1 = conjugate(flows[k], s.V, &d, &defect);
    }
    VectorXd mu = s.mu + s.W.diagonal().real();
    next.samples.push_back(make_sample(s.t, s.lambda, spec.M, std::move(v1), std::move(mu), flows[k], defect));
  }
  return next;
}

MatrixXcd ReductionResult::TK() const {
  if (TK_factors.empty()) return {};
  MatrixXcd t = TK_factors.front();
  for (std::size_t i = 1; i < TK_factors.size(); ++i) t = t * TK_factors[i];
  return t;
}

namespace {

ReductionStep ledger_entry(const Level& level, double M, double eb, double gmax, double mu_imag, Index lo, Index hi) {
  const auto& c = level.center();
  ReductionStep st;
  st.n = level.n;
  const OrderFit fit = ledger_fit(c.W, max_abs(c.V), lo, hi);
  st.fitted_order_w = fit.slope;
  st.fit_valid = fit.valid;
  st.bound = M - level.n * eb;
  st.hermiticity_residual = c.defect;
  st.mu_linf = c.mu.size() ? c.mu.cwiseAbs().maxCoeff() : 0.0;
  st.mu_imag = mu_imag;
  st.g_norm = gmax;
  return st;
}

void enforce(const std::vector<ReductionStep>& ledger, double slack) {
  const ReductionStep& st = ledger.back();
  if (st.fit_valid && st.fitted_order_w > st.bound + slack) {
    std::ostringstream os;
    os << "reduction stalled at step " << st.n << ": fitted order of w_n is " << st.fitted_order_w
       << ", expected at most " << st.bound << " + " << slack;
    throw ReductionStall(os.str(), ledger);
  }
  if (st.mu_imag > 1e-10) {
    std::ostringstream os;
    os << "mu_" << st.n << " picked up an imaginary part of " << st.mu_imag;
    throw ReductionStall(os.str(), ledger);
  }
  if (st.hermiticity_residual > 1e-9) {
    std::ostringstream os;
    os << "W_" << st.n << " lost self-adjointness (relative defect " << st.hermiticity_residual << ")";
    throw ReductionStall(os.str(), ledger);
  }
}

}  // namespace

ReductionResult run_reduction(const ProblemSpec& spec, double t, const ReductionOptions& opts) {
  ReductionResult res;
  res.t = t;
  res.ebar = ebar(spec.M, spec.frak_e);
  res.N_K = n_steps(spec.M, spec.K, res.ebar);
  const bool still = time_independent(spec);
  const int tail = (opts.verify && !still) ? 1 : 0;

  Level level = reduce_highest_order(spec, t, tail + res.N_K - 1, &res.diffeo);
  res.lambda = level.center().lambda;
  res.ledger.push_back(ledger_entry(level, spec.M, res.ebar, 0.0, 0.0, opts.fit_lo, opts.fit_hi));
  if (opts.enforce_ledger) enforce(res.ledger, opts.slack);

  // factors at the final sample times, per level
  const int finals = 2 * tail + 1;
  std::vector<std::vector<MatrixXcd>> factors(finals);
  auto stash = [&](const Level& lv) {
    const Index mid = static_cast<Index>(lv.samples.size()) / 2;
    for (int f = 0; f < finals; ++f) factors[f].push_back(lv.samples[mid - tail + f].flow.adjoint());
  };
  stash(level);

  for (int n = 1; n < res.N_K; ++n) {
    std::vector<MatrixXcd> gs;
    const auto& c = level.center();
    const double mu_imag = c.W.diagonal().imag().cwiseAbs().maxCoeff();
    level = reduce_step(spec, level, &gs);
    const double gmax = max_abs(gs[gs.size() / 2]);
    res.ledger.push_back(ledger_entry(level, spec.M, res.ebar, gmax, mu_imag, opts.fit_lo, opts.fit_hi));
    if (opts.enforce_ledger) enforce(res.ledger, opts.slack);
    stash(level);
  }

  const auto& c = level.center();
  res.mu_final = c.mu;
  res.lambda_K = dispersion(res.lambda, spec.M, spec.N) + c.mu;
  res.WK = c.W;
  res.TK_factors = factors[tail];

  if (opts.verify) {
    std::vector<MatrixXcd> x, tk;
    for (int f = 0; f < finals; ++f) {
      const double tf = level.samples[level.samples.size() / 2 - tail + f].t;
      x.push_back(-kI * assemble_operator(spec, tf));
      MatrixXcd prod = factors[f].front();
      for (std::size_t i = 1; i < factors[f].size(); ++i) prod = prod * factors[f][i];
      tk.push_back(std::move(prod));
    }
    const auto pushed = pushforward(x, tk, level.h);
    MatrixXcd target = res.WK;
    target.diagonal() += res.lambda_K.cast<cplx>();
    const MatrixXcd diff = pushed[tail] + kI * target;
    res.pushforward_residual = max_abs(central_block(diff, spec.N / 4));
  }
  return res;
}

std::vector<MatrixXcd> pushforward(const std::vector<MatrixXcd>& x, const std::vector<MatrixXcd>& phi, double h,
                                   std::vector<bool>* one_sided) {
  if (x.size() != phi.size()) throw DimensionError("pushforward: sample counts differ");
  const std::size_t m = x.size();
  std::vector<MatrixXcd> out;
  if (one_sided) one_sided->assign(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    if (x[j].rows() != phi[j].rows()) throw DimensionError("pushforward: grid mismatch");
    MatrixXcd d = MatrixXcd::Zero(phi[j].rows(), phi[j].cols());
    if (m > 1) {
      if (j == 0) {
        d = (phi[1] - phi[0]) / h;
      } else if (j + 1 == m) {
        d = (phi[j] - phi[j - 1]) / h;
      } else {
        d = (phi[j + 1] - phi[j - 1]) / (2.0 * h);
      }
      if (one_sided && (j == 0 || j + 1 == m)) (*one_sided)[j] = true;
    }
    out.push_back(phi[j].partialPivLu().solve(x[j] * phi[j] - d));
  }
  return out;
}

}  // namespace torusnf

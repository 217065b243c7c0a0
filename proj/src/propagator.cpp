#include "torusnf/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>

namespace torusnf {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void check_state(const VectorXcd& u, double t) {
  if (!u.allFinite()) throw NumericalError("non-finite state at t = " + num(t));
}

// hermiticity_residual without temporaries; runs once per step
double fast_hermiticity(const MatrixXcd& h) {
  double defect = 0.0, big = 0.0;
  const Index n = h.rows();
  for (Index j = 0; j < n; ++j) {
    big = std::max(big, std::norm(h(j, j)));
    defect = std::max(defect, 4.0 * h(j, j).imag() * h(j, j).imag());
    for (Index i = j + 1; i < n; ++i) {
      defect = std::max(defect, std::norm(h(i, j) - std::conj(h(j, i))));
      big = std::max({big, std::norm(h(i, j)), std::norm(h(j, i))});
    }
  }
  return big == 0.0 ? 0.0 : std::sqrt(defect / big);
}

void check_generator(const MatrixXcd& h, double t, double tol) {
  if (!h.allFinite()) throw NumericalError("non-finite generator at t = " + num(t));
  const double r = fast_hermiticity(h);
  if (r > tol) throw ContractViolation("generator not hermitian at t = " + num(t) + " (residual " + num(r) + ")");
}

// exp(-i tau T) e_1 for the real symmetric tridiagonal T.
VectorXcd tridiagonal_exp(const VectorXd& alpha, const VectorXd& beta, double tau) {
  const Index m = alpha.size();
  if (m == 1) {
    VectorXcd y(1);
    y(0) = std::exp(-kI * tau * alpha(0));
    return y;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(alpha, beta.head(m - 1), Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd& s = es.eigenvectors();
  const VectorXcd phase = (-kI * tau * es.eigenvalues().cast<cplx>()).array().exp();
  return s.cast<cplx>() * phase.cwiseProduct(s.row(0).transpose().cast<cplx>());
}

VectorXcd krylov_impl(const MatrixXcd& h, double tau, const VectorXcd& v, double tol, int max_dim, long& mv,
                      int depth) {
  const double beta0 = v.norm();
  if (beta0 == 0.0 || tau == 0.0) return v;
  const Index n = v.size();
  const int dim = static_cast<int>(std::min<Index>(max_dim, n));
  MatrixXcd q(n, dim + 1);
  VectorXd alpha(dim), beta(dim);
  q.col(0) = v / beta0;
  for (int j = 0; j < dim; ++j) {
    VectorXcd w = h * q.col(j);
    ++mv;
    alpha(j) = q.col(j).dot(w).real();
    w -= alpha(j) * q.col(j);
    if (j > 0) w -= beta(j - 1) * q.col(j - 1);
    w -= q.leftCols(j + 1) * (q.leftCols(j + 1).adjoint() * w);
    beta(j) = w.norm();
    const int m = j + 1;
    const bool breakdown = beta(j) <= 1e-14 * std::abs(alpha(j)) + 1e-300;
    if (breakdown || m == dim || (m >= 8 && m % 4 == 0)) {
      const VectorXcd y = tridiagonal_exp(alpha.head(m), beta.head(m), tau);
      if (breakdown || m == n || beta(j) * std::abs(y(m - 1)) <= tol)
        return beta0 * (q.leftCols(m) * y);
    }
    q.col(j + 1) = w / beta(j);
  }
  if (depth > 30) throw NumericalError("Lanczos exponential did not converge");
  const VectorXcd half = krylov_impl(h, 0.5 * tau, v, tol, max_dim, mv, depth + 1);
  return krylov_impl(h, 0.5 * tau, half, tol, max_dim, mv, depth + 1);
}

struct StepGrid {
  int steps;
  double h;    // signed step
  int stride;  // norm-table spacing in steps
};

StepGrid step_grid(const PropagateOptions& o) {
  if (!(o.dt > 0.0) || !std::isfinite(o.dt)) throw ContractViolation("dt must be positive");
  const double span = std::abs(o.t1 - o.t0);
  StepGrid g;
  g.steps = std::max(1, static_cast<int>(std::ceil(span / o.dt - 1e-9)));
  g.h = (o.t1 - o.t0) / g.steps;
  if (span == 0.0) {
    g.steps = 0;
    g.h = 0.0;
  }
  const double every = o.sample_every > 0.0 ? o.sample_every : std::max(o.dt, span / 2000.0);
  g.stride = g.h == 0.0 ? 1 : std::max(1, static_cast<int>(std::lround(every / std::abs(g.h))));
  return g;
}

// Drives a stepping function and fills the norm table and snapshots.
template <typename Step>
Trajectory run(const VectorXcd& u0, const PropagateOptions& o, Step&& step) {
  const StepGrid g = step_grid(o);
  Trajectory tr;
  tr.s_list = o.s_list;
  std::vector<int> snap_at;
  for (double ts : o.snapshot_times) {
    if (g.steps == 0) {
      snap_at.push_back(0);
      continue;
    }
    const double k = (ts - o.t0) / g.h;
    const long kr = std::lround(k);
    if (kr < 0 || kr > g.steps || std::abs(k - kr) > 1e-6)
      throw ContractViolation("snapshot time " + num(ts) + " is not on the step grid");
    snap_at.push_back(static_cast<int>(kr));
  }
  std::vector<Eigen::VectorXd> rows;
  VectorXcd u = u0;
  auto record = [&](int k) {
    const double t = o.t0 + k * g.h;
    if (k % g.stride == 0 || k == g.steps) {
      Eigen::VectorXd row(1 + o.s_list.size());
      row(0) = u.norm();
      for (std::size_t i = 0; i < o.s_list.size(); ++i) row(1 + i) = sobolev_norm_of_coefficients(u, o.s_list[i]);
      tr.t.push_back(t);
      rows.push_back(row);
    }
    for (std::size_t i = 0; i < snap_at.size(); ++i)
      if (snap_at[i] == k) {
        tr.snapshot_t.push_back(o.snapshot_times[i]);
        tr.snapshots.push_back(u);
      }
  };
  record(0);
  for (int k = 0; k < g.steps; ++k) {
    const double t = o.t0 + k * g.h;
    u = step(t, g.h, u, tr.matvecs);
    check_state(u, t + g.h);
    record(k + 1);
  }
  tr.steps = g.steps;
  tr.norms.resize(static_cast<Index>(rows.size()), 1 + static_cast<Index>(o.s_list.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) tr.norms.row(static_cast<Index>(r)) = rows[r].transpose();
  tr.final_state = u;
  return tr;
}

VectorXcd exp_action(const MatrixXcd& h, double tau, const VectorXcd& v, const PropagateOptions& o, long& mv) {
  if (o.backend == ExpBackend::Eigen) return HermitianExp(h).apply(-tau, v);
  return krylov_impl(h, tau, v, o.krylov_tol, 60, mv, 0);
}

std::size_t segment(const std::vector<double>& t, double x) {
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  if (it == t.begin()) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(it - t.begin()) - 1, t.size() - 2);
}

template <typename T>
T lerp_samples(const std::vector<double>& t, const std::vector<T>& v, double x) {
  if (v.size() == 1) return v.front();
  const std::size_t i = segment(t, x);
  const double th = std::clamp((x - t[i]) / (t[i + 1] - t[i]), 0.0, 1.0);
  return (1.0 - th) * v[i] + th * v[i + 1];
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

}  // namespace

Generator generator_of(const ProblemSpec& spec) {
  bool split = spec.W.separable();
  for (const auto& term : spec.W.terms()) split = split && term.m.time_independent();
  if (!split) return [spec](double t) { return assemble_operator(spec, t); };

  // V(t) = sum_w e^{iwt} A_w before symmetrizing
  std::vector<double> freqs;
  auto collect = [&](const ExpPoly& f) {
    for (const auto& mode : f.modes())
      if (std::find(freqs.begin(), freqs.end(), mode.w) == freqs.end()) freqs.push_back(mode.w);
  };
  collect(spec.V);
  for (const auto& term : spec.W.terms()) collect(term.f);
  auto at = [](const ExpPoly& f, double w) {
    ExpPoly out;
    for (const auto& mode : f.modes())
      if (mode.w == w) out = out + ExpPoly::exponential(mode.k, 0.0, mode.c);
    return out;
  };
  std::vector<std::pair<double, MatrixXcd>> pieces;
  for (double w : freqs) {
    std::vector<SymbolTerm> terms;
    for (const auto& term : spec.W.terms()) {
      ExpPoly f = at(term.f, w);
      if (!f.empty()) terms.push_back({std::move(f), term.m});
    }
    Symbol a = Symbol::product(at(spec.V, w), Multiplier::power_chi(spec.M), spec.M);
    if (!terms.empty()) a = a + Symbol(std::move(terms), spec.W.order());
    pieces.emplace_back(w, quantize(a, 0.0, spec.N));
  }
  const bool symmetrize = spec.symmetrize;
  return [pieces = std::move(pieces), symmetrize, n = spec.N](double t) {
    MatrixXcd a = MatrixXcd::Zero(n, n);
    for (const auto& [w, m] : pieces) a += (w == 0.0 ? cplx{1.0} : std::exp(kI * (w * t))) * m;
    if (symmetrize) return hermitian_part(a);
    const double r = fast_hermiticity(a);
    if (r > 1e-10) throw HypothesisViolation("H1", "operator is not self-adjoint at t = " + num(t));
    return a;
  };
}

VectorXcd krylov_expm(const MatrixXcd& h, double tau, const VectorXcd& v, double tol, int max_dim, int* matvecs) {
  if (h.rows() != h.cols() || h.cols() != v.size()) throw DimensionError("krylov_expm: size mismatch");
  long mv = 0;
  VectorXcd out = krylov_impl(h, tau, v, tol, std::max(2, max_dim), mv, 0);
  if (matvecs) *matvecs = static_cast<int>(mv);
  return out;
}

double Trajectory::l2_drift() const {
  if (norms.rows() == 0 || norms(0, 0) == 0.0) return 0.0;
  return (norms.col(0).array() - norms(0, 0)).abs().maxCoeff() / norms(0, 0);
}

Eigen::VectorXd Trajectory::sobolev(double s) const {
  for (std::size_t i = 0; i < s_list.size(); ++i)
    if (s_list[i] == s) return norms.col(1 + static_cast<Index>(i));
  throw ContractViolation("Sobolev index " + num(s) + " not in the norm table");
}

const VectorXcd& Trajectory::snapshot(double t) const {
  for (std::size_t i = 0; i < snapshot_t.size(); ++i)
    if (std::abs(snapshot_t[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return snapshots[i];
  throw ContractViolation("no snapshot at t = " + num(t));
}

Trajectory propagate(const Generator& h, const VectorXcd& u0, const PropagateOptions& opts) {
  return run(u0, opts, [&](double t, double step, const VectorXcd& u, long& mv) {
    const double tm = t + 0.5 * step;
    const MatrixXcd a = h(tm);
    if (a.rows() != u.size()) throw DimensionError("propagate: generator and state sizes differ");
    check_generator(a, tm, opts.hermiticity_tol);
    return exp_action(a, step, u, opts, mv);
  });
}

Trajectory propagate(const ProblemSpec& spec, const VectorXcd& u0, const PropagateOptions& opts) {
  return propagate(generator_of(spec), u0, opts);
}

std::vector<MatrixXcd> propagator_matrices(const Generator& h, double t0, const std::vector<double>& times,
                                           double dt) {
  if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
  std::vector<MatrixXcd> out;
  MatrixXcd u;
  double t = t0;
  for (double target : times) {
    if (target < t - 1e-12) throw ContractViolation("propagator times must be ascending and >= t0");
    const int steps = static_cast<int>(std::ceil((target - t) / dt - 1e-9));
    const double step = steps > 0 ? (target - t) / steps : 0.0;
    for (int k = 0; k < steps; ++k) {
      const double tm = t + (k + 0.5) * step;
      const MatrixXcd a = h(tm);
      check_generator(a, tm, 1e-9);
      if (u.size() == 0) u = MatrixXcd::Identity(a.rows(), a.cols());
      u = HermitianExp(a)(-step) * u;
    }
    if (u.size() == 0) u = MatrixXcd::Identity(h(t0).rows(), h(t0).cols());
    t = target;
    out.push_back(u);
  }
  return out;
}

Convergence step_halving(const Generator& h, const VectorXcd& u0, double t0, double t1, double dt, int halvings) {
  PropagateOptions o;
  o.t0 = t0;
  o.t1 = t1;
  o.s_list.clear();
  o.krylov_tol = 1e-15;
  o.dt = dt / std::pow(2.0, halvings + 1);
  const VectorXcd ref = propagate(h, u0, o).final_state;
  Convergence c;
  std::vector<double> lx, ly;
  for (int k = 0; k <= halvings; ++k) {
    o.dt = dt / std::pow(2.0, k);
    const double e = (propagate(h, u0, o).final_state - ref).norm();
    c.dt.push_back(o.dt);
    c.error.push_back(e);
    lx.push_back(std::log(o.dt));
    ly.push_back(std::log(e));
  }
  c.order = fit_slope(lx, ly);
  return c;
}

VectorXd ReducedModel::lambda_at(double x) const { return lerp_samples(t, lambda_K, x); }

MatrixXcd ReducedModel::w_at(double x) const { return lerp_samples(t, W_K, x); }

VectorXd ReducedModel::lambda_integral(double a, double b, int panels) const {
  const int m = 2 * std::max(1, panels);
  const double step = (b - a) / m;
  VectorXd acc = lambda_at(a) + lambda_at(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * lambda_at(a + i * step);
  return acc * (step / 3.0);
}

const MatrixXcd& ReducedModel::transform_at(double x) const {
  if (T_K.size() == 1) return T_K.front();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - x) <= 1e-12 * std::max(1.0, std::abs(x))) return T_K[i];
  throw ContractViolation("T_K not sampled at t = " + num(x));
}

ReducedModel reduced_model(const ReductionResult& r) {
  ReducedModel m;
  m.t.push_back(r.t);
  m.lambda_K.push_back(r.lambda_K);
  m.W_K.push_back(r.WK);
  m.T_K.push_back(r.TK());
  m.results.push_back(r);
  return m;
}

ReducedModel reduced_model(const ProblemSpec& spec, const std::vector<double>& times, const ReductionOptions& opts) {
  if (times.empty()) throw ContractViolation("reduced_model: no sample times");
  if (!std::is_sorted(times.begin(), times.end())) throw ContractViolation("reduced_model: times must be ascending");
  if (time_independent(spec)) return reduced_model(run_reduction(spec, times.front(), opts));
  ReducedModel m;
  for (double t : times) {
    ReductionResult r = run_reduction(spec, t, opts);
    m.t.push_back(t);
    m.lambda_K.push_back(r.lambda_K);
    m.W_K.push_back(r.WK);
    m.T_K.push_back(r.TK());
    m.results.push_back(std::move(r));
  }
  return m;
}

Trajectory propagate_reduced(const ReducedModel& model, const VectorXcd& v0, const PropagateOptions& opts) {
  if (model.W_K.empty()) throw ContractViolation("propagate_reduced: empty model");
  if (model.size() != v0.size()) throw DimensionError("propagate_reduced: model and state sizes differ");
  const bool frozen = model.W_K.size() == 1;
  std::unique_ptr<HermitianExp> frozen_exp;
  return run(v0, opts, [&](double t, double step, const VectorXcd& v, long& mv) {
    const double tm = t + 0.5 * step;
    const auto phase = [&](double a, double b) -> VectorXcd {
      return (-kI * model.lambda_integral(a, b).cast<cplx>()).array().exp();
    };
    VectorXcd out = phase(t, tm).cwiseProduct(v);
    if (frozen) {
      if (max_abs(model.W_K.front()) > 0.0) {
        if (opts.backend == ExpBackend::Eigen) {
          if (!frozen_exp) {
            check_generator(model.W_K.front(), tm, opts.hermiticity_tol);
            frozen_exp = std::make_unique<HermitianExp>(model.W_K.front());
          }
          out = frozen_exp->apply(-step, out);
        } else {
          out = krylov_impl(model.W_K.front(), step, out, opts.krylov_tol, 60, mv, 0);
        }
      }
    } else {
      const MatrixXcd w = model.w_at(tm);
      check_generator(w, tm, opts.hermiticity_tol);
      out = exp_action(w, step, out, opts, mv);
    }
    return VectorXcd(phase(tm, t + step).cwiseProduct(out));
  });
}

Trajectory propagate_reduced(const ReductionResult& r, const VectorXcd& v0, const PropagateOptions& opts) {
  return propagate_reduced(reduced_model(r), v0, opts);
}

CrossCheck cross_propagation(const ProblemSpec& spec, const ReducedModel& model, const VectorXcd& v0,
                             const PropagateOptions& opts) {
  PropagateOptions o = opts;
  o.snapshot_times.clear();
  const double lo = std::min(o.t0, o.t1), hi = std::max(o.t0, o.t1);
  if (model.t.size() == 1) {
    o.snapshot_times.push_back(o.t1);
  } else {
    for (double t : model.t)
      if (t >= lo - 1e-12 && t <= hi + 1e-12) o.snapshot_times.push_back(t);
  }
  const VectorXcd u0 = model.transform_at(o.t0) * v0;
  const Trajectory orig = propagate(spec, u0, o);
  const Trajectory red = propagate_reduced(model, v0, o);
  CrossCheck c;
  for (double t : o.snapshot_times) {
    const double e = (model.transform_at(model.t.size() == 1 ? model.t.front() : t) * red.snapshot(t) -
                      orig.snapshot(t))
                         .norm();
    c.t.push_back(t);
    c.error.push_back(e);
    c.sup_error = std::max(c.sup_error, e);
  }
  return c;
}

InterpolationRow interpolation_check(const MatrixXcd& u, double t, double s0, double s, double s1, double tol) {
  if (!(s0 < s && s < s1)) throw ContractViolation("interpolation needs s0 < s < s1");
  InterpolationRow r;
  r.t = t;
  r.s0 = s0;
  r.s = s;
  r.s1 = s1;
  r.norm_s0 = operator_norm(u, s0, s0);
  r.norm_s = operator_norm(u, s, s);
  r.norm_s1 = operator_norm(u, s1, s1);
  const double theta = (s1 - s) / (s1 - s0);
  r.bound = std::pow(r.norm_s0, theta) * std::pow(r.norm_s1, 1.0 - theta);
  r.ratio = r.bound > 0.0 ? r.norm_s / r.bound : 0.0;
  r.ok = r.ratio <= 1.0 + tol;
  return r;
}

GrowthReport growth_experiment(const ProblemSpec& spec, const VectorXcd& u0, const GrowthOptions& opts) {
  validate(spec, opts.t0, opts.t0 + opts.T);
  GrowthReport rep;

  PropagateOptions po;
  po.t0 = opts.t0;
  po.t1 = opts.t0 + opts.T;
  po.dt = opts.dt;
  po.s_list = opts.s_list;
  if (std::find(po.s_list.begin(), po.s_list.end(), opts.s) == po.s_list.end()) po.s_list.push_back(opts.s);
  rep.trajectory = propagate(spec, u0, po);
  const Trajectory& tr = rep.trajectory;

  for (std::size_t i = 0; i < po.s_list.size(); ++i) {
    std::vector<double> lx, ly;
    for (std::size_t r = 1; r < tr.t.size(); ++r) {
      lx.push_back(std::log1p(tr.t[r] - opts.t0));
      ly.push_back(std::log(tr.norms(static_cast<Index>(r), 1 + static_cast<Index>(i))));
    }
    rep.slopes.push_back(fit_slope(lx, ly));
  }

  if (time_independent(spec) || opts.reduction_samples <= 1) {
    rep.reduction_times.push_back(opts.t0);
  } else {
    for (int j = 0; j < opts.reduction_samples; ++j)
      rep.reduction_times.push_back(opts.t0 + opts.T * j / (opts.reduction_samples - 1));
  }
  const ReducedModel model = reduced_model(spec, rep.reduction_times, opts.reduction);
  const Index block = opts.block >= 0 ? opts.block : spec.N / 4;
  for (std::size_t j = 0; j < model.W_K.size(); ++j) {
    const MatrixXcd& tk = model.T_K[j];
    rep.C_T = std::max({rep.C_T, operator_norm(tk, opts.s, opts.s, block),
                        operator_norm(tk.adjoint(), opts.s, opts.s, block)});
    rep.C_W = std::max(rep.C_W, operator_norm(model.W_K[j], 0.0, opts.s, block));
  }

  const double hs0 = sobolev_norm_of_coefficients(u0, opts.s);
  const double l20 = u0.norm();
  const Eigen::VectorXd hs = tr.sobolev(opts.s);
  rep.envelope.resize(hs.size());
  rep.envelope_margin = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < hs.size(); ++r) {
    rep.envelope(r) = rep.C_T * rep.C_T * hs0 + rep.C_T * rep.C_W * std::abs(tr.t[r] - opts.t0) * l20;
    rep.envelope_margin = std::min(rep.envelope_margin, rep.envelope(r) / hs(r));
  }
  rep.envelope_ok = rep.envelope_margin >= 1.0 - 1e-9;

  std::vector<double> times;
  for (double t : opts.interpolation_times)
    if (t > opts.t0 && t <= opts.t0 + opts.T) times.push_back(t);
  std::sort(times.begin(), times.end());
  const auto us = propagator_matrices(generator_of(spec), opts.t0, times, opts.matrix_dt);
  rep.interpolation_ok = true;
  for (std::size_t j = 0; j < times.size(); ++j) {
    rep.interpolation.push_back(
        interpolation_check(us[j], times[j], opts.s0, opts.s, opts.s1, opts.interpolation_tol));
    rep.interpolation_ok = rep.interpolation_ok && rep.interpolation.back().ok;
  }
  return rep;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,l2";
  for (double s : tr.s_list) os << ",hs_" << num(s);
  os << '\n';
  for (Index r = 0; r < tr.norms.rows(); ++r) {
    os << num(tr.t[static_cast<std::size_t>(r)]);
    for (Index c = 0; c < tr.norms.cols(); ++c) os << ',' << num(tr.norms(r, c));
    os << '\n';
  }
}

void write_interpolation_csv(std::ostream& os, const std::vector<InterpolationRow>& rows) {
  os << "t,s0,s,s1,norm_s0,norm_s,norm_s1,bound,ratio,ok\n";
  for (const auto& r : rows)
    os << num(r.t) << ',' << num(r.s0) << ',' << num(r.s) << ',' << num(r.s1) << ',' << num(r.norm_s0) << ','
       << num(r.norm_s) << ',' << num(r.norm_s1) << ',' << num(r.bound) << ',' << num(r.ratio) << ','
       << (r.ok ? 1 : 0) << '\n';
}

}  // namespace torusnf

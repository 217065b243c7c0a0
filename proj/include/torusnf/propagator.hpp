#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "torusnf/normal_form.hpp"

namespace torusnf {

// All evolutions solve d_t u = -i H(t) u; one step is the midpoint exponential
// u_{k+1} = exp(-i dt H(t_k + dt/2)) u_k. States are centered spectra.

using Generator = std::function<MatrixXcd(double t)>;

Generator generator_of(const ProblemSpec& spec);

/// How exp(-i tau H) v is evaluated. Both give the same midpoint step; Lanczos
/// is the cheap one for long vector runs, Eigen the reference.
enum class ExpBackend { Eigen, Lanczos };

/// exp(-i tau H) v by Lanczos with full reorthogonalization. The result has the
/// norm of v up to roundoff whatever the iteration count; tau is split when
/// `max_dim` vectors do not reach `tol`.
VectorXcd krylov_expm(const MatrixXcd& h, double tau, const VectorXcd& v, double tol = 1e-13, int max_dim = 60,
                      int* matvecs = nullptr);

struct PropagateOptions {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;  // magnitude; t1 < t0 runs backwards
  std::vector<double> s_list{0.0, 1.0, 2.0};
  /// Norm-table spacing; 0 means max(dt, |t1 - t0| / 2000).
  double sample_every = 0.0;
  /// Extra times (inside the run) at which the state is stored.
  std::vector<double> snapshot_times;
  ExpBackend backend = ExpBackend::Lanczos;
  double krylov_tol = 1e-13;
  double hermiticity_tol = 1e-9;
};

struct Trajectory {
  std::vector<double> s_list;
  std::vector<double> t;
  /// One row per sample: l2 then hs_<s> for each s.
  Eigen::MatrixXd norms;
  std::vector<double> snapshot_t;
  std::vector<VectorXcd> snapshots;
  VectorXcd final_state;
  int steps = 0;
  long matvecs = 0;

  /// max_t | ||u(t)|| - ||u(t0)|| | / ||u(t0)||
  double l2_drift() const;
  /// column of hs_<s>
  Eigen::VectorXd sobolev(double s) const;
  const VectorXcd& snapshot(double t) const;
};

Trajectory propagate(const Generator& h, const VectorXcd& u0, const PropagateOptions& opts);
Trajectory propagate(const ProblemSpec& spec, const VectorXcd& u0, const PropagateOptions& opts);

/// U(t0, t) for each requested t >= t0 (ascending), midpoint steps of at most
/// dt with exponentials by eigendecomposition.
std::vector<MatrixXcd> propagator_matrices(const Generator& h, double t0, const std::vector<double>& times,
                                           double dt);

struct Convergence {
  std::vector<double> dt;
  std::vector<double> error;  // vs the run with dt / 2^(halvings + 1)
  double order = 0.0;         // log-log slope
};
/// Global error of the midpoint scheme under repeated halving of dt.
Convergence step_halving(const Generator& h, const VectorXcd& u0, double t0, double t1, double dt, int halvings = 3);

/// lambda_K, W_K and T_K on a set of times; piecewise linear in between.
struct ReducedModel {
  std::vector<double> t;
  std::vector<VectorXd> lambda_K;
  std::vector<MatrixXcd> W_K;
  std::vector<MatrixXcd> T_K;
  std::vector<ReductionResult> results;

  Index size() const { return W_K.empty() ? 0 : W_K.front().rows(); }
  VectorXd lambda_at(double t) const;
  MatrixXcd w_at(double t) const;
  /// int_a^b lambda_K by composite Simpson.
  VectorXd lambda_integral(double a, double b, int panels = 4) const;
  /// T_K at a sample time; throws when t is not one.
  const MatrixXcd& transform_at(double t) const;
};

ReducedModel reduced_model(const ReductionResult& r);
/// One reduction per time (a single one for time-independent specs).
ReducedModel reduced_model(const ProblemSpec& spec, const std::vector<double>& times,
                           const ReductionOptions& opts = {});

/// d_t v = -i(lambda_K(t, D) + W_K(t)) v by Strang splitting: half phase
/// exp(-i int lambda_K), midpoint step for W_K, half phase.
Trajectory propagate_reduced(const ReducedModel& model, const VectorXcd& v0, const PropagateOptions& opts);
Trajectory propagate_reduced(const ReductionResult& r, const VectorXcd& v0, const PropagateOptions& opts);

struct CrossCheck {
  std::vector<double> t;
  std::vector<double> error;  // ||T_K(t) v(t) - u(t)||_{L^2}
  double sup_error = 0.0;
};
/// Propagates u0 = T_K(t0) v0 with the original generator and v0 with the
/// reduced one; compares at the model's sample times inside [t0, t1].
CrossCheck cross_propagation(const ProblemSpec& spec, const ReducedModel& model, const VectorXcd& v0,
                             const PropagateOptions& opts);

struct InterpolationRow {
  double t = 0.0;
  double s0 = 0.0, s = 0.0, s1 = 0.0;
  double norm_s0 = 0.0, norm_s = 0.0, norm_s1 = 0.0;
  double bound = 0.0;  // norm_s0^theta norm_s1^(1 - theta), s = theta s0 + (1 - theta) s1
  double ratio = 0.0;  // norm_s / bound
  bool ok = false;
};
InterpolationRow interpolation_check(const MatrixXcd& u, double t, double s0, double s, double s1, double tol = 0.05);

struct GrowthOptions {
  double t0 = 0.0;
  double T = 50.0;
  double dt = 1e-3;
  std::vector<double> s_list{0.0, 2.0};
  double s = 2.0;  // Sobolev index of the envelope
  int reduction_samples = 3;
  std::vector<double> interpolation_times{1.0, 5.0, 10.0};
  double s0 = 0.0;
  double s1 = 8.0;
  double interpolation_tol = 0.05;
  /// step used when accumulating U(t0, t)
  double matrix_dt = 1e-2;
  /// measure C_T and C_W on |xi| <= half (N/4 when negative)
  Index block = -1;
  ReductionOptions reduction;
};

struct GrowthReport {
  Trajectory trajectory;
  std::vector<double> slopes;  // fit of log ||u||_{H^s} against log(1 + t), per s
  double C_T = 0.0;            // sup of ||T_K||, ||T_K^{-1}|| in B(H^s)
  double C_W = 0.0;            // sup ||W_K||_{B(L^2, H^s)}
  std::vector<double> reduction_times;
  /// C_T^2 ||u0||_{H^s} + C_T C_W (t - t0) ||u0||_{L^2}, per sample
  Eigen::VectorXd envelope;
  double envelope_margin = 0.0;  // min over samples of envelope / measured
  bool envelope_ok = false;
  std::vector<InterpolationRow> interpolation;
  bool interpolation_ok = false;
};

GrowthReport growth_experiment(const ProblemSpec& spec, const VectorXcd& u0, const GrowthOptions& opts);

// CSV writers.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
void write_interpolation_csv(std::ostream& os, const std::vector<InterpolationRow>& rows);

}  // namespace torusnf

#pragma once

#include <string>
#include <vector>

#include "torusnf/calculus.hpp"
#include "torusnf/diffeo.hpp"
#include "torusnf/symbol.hpp"

namespace torusnf {

// Sign convention: the evolution is d_t u = -i V(t) u. A change of variables
// u = Phi^{-1} v turns V into Phi V Phi^{-1} - i Phi d_t(Phi^{-1}).

/// V(t) = V(t, x)|D|^M + W(t) on N modes.
struct ProblemSpec {
  double M = 2.0;
  double frak_e = 1.0;
  ExpPoly V = ExpPoly::constant(1.0);
  Symbol W;
  Index N = 128;
  int K = 2;
  /// Replace the assembled operator by its hermitian part; off means a
  /// non-hermitian spec is rejected.
  bool symmetrize = true;
  /// Magnus-4 substeps of the transport flow.
  int substeps = 16;
  /// Step of the centered t-stencil for d_t of the flows.
  double h_t = 1e-2;
};

bool time_independent(const Symbol& a);
bool time_independent(const ProblemSpec& spec);
Potential potential(const ProblemSpec& spec);
/// V(t, x)|xi|^M chi(xi)
Symbol principal_symbol(const ProblemSpec& spec);
/// Matrix of V(t); the hermitian part when spec.symmetrize is set.
MatrixXcd assemble_operator(const ProblemSpec& spec, double t);

struct Validation {
  double delta = 0.0;        // inf V over the sampled (t, x)
  double hermiticity = 0.0;  // relative defect of the unsymmetrized matrix at t0
};
/// Checks (H2) on a grid 4x finer than N at t_samples times in [t0, t1], (H3)
/// from the declared order of W, and (H1) at t0.
Validation validate(const ProblemSpec& spec, double t0, double t1, int t_samples = 16);

/// M - max{M - 1, 1, M - frak_e}
double ebar(double M, double frak_e);
/// [(M + K) / ebar] + 1
int n_steps(double M, int K, double ebar);
/// [s] + 1
int k_from_s(double s);

/// chi0(xi) / (2 lambda M |xi|^{M-2} xi), zero for |xi| <= 1.
double homological_weight(double xi, double lambda, double M);

/// sigma = chi0 d_x^{-1}[w - <w>_x] / (2 lambda M |xi|^{M-2} xi)
Symbol homological_sigma(const Symbol& w, double lambda, double M);
/// g = sigma + sigma^*
Symbol homological_solve(const Symbol& w, double lambda, double M, double t, Index n);
/// max over x_j and integer 2 <= |xi| < N/2 of
/// |-2 lambda M |xi|^{M-2} xi chi d_x sigma + chi0 (w - <w>_x)|.
double sigma_equation_residual(const Symbol& sigma, const Symbol& w, double lambda, double M, double t, Index n);

/// Matrix form: S(eta, xi) = weight(xi) W(eta, xi) / (i (eta - xi)).
MatrixXcd homological_sigma(const MatrixXcd& w, double lambda, double M);
/// S + S^*
MatrixXcd homological_solve(const MatrixXcd& w, double lambda, double M);

/// Operators of one reduction level at one time.
struct LevelSample {
  double t = 0.0;
  double lambda = 1.0;
  MatrixXcd V;     // V_n
  VectorXd mu;     // mu_n per slot
  MatrixXcd W;     // W_n = V_n - lambda |D|^M - mu_n(D)
  MatrixXcd flow;  // the map that produced this level from the previous one
  double defect = 0.0;  // relative hermiticity defect of V_n before symmetrizing
};

/// One level on a uniform t-stencil (a single sample when nothing depends on t).
struct Level {
  int n = 0;
  double h = 0.0;
  std::vector<LevelSample> samples;
  const LevelSample& center() const { return samples[samples.size() / 2]; }
};

struct ReductionStep {
  int n = 0;
  double fitted_order_w = 0.0;
  bool fit_valid = false;
  double bound = 0.0;  // M - n ebar
  double hermiticity_residual = 0.0;
  double mu_linf = 0.0;
  double mu_imag = 0.0;  // largest |Im <w_{n-1}>_x| absorbed into mu_n
  double g_norm = 0.0;   // max |G_{n-1}| (0 for the first level)
};

class ReductionStall : public ContractViolation {
 public:
  ReductionStall(const std::string& what, std::vector<ReductionStep> ledger)
      : ContractViolation(what), ledger_(std::move(ledger)) {}
  const std::vector<ReductionStep>& ledger() const noexcept { return ledger_; }

 private:
  std::vector<ReductionStep> ledger_;
};

struct ReductionOptions {
  double slack = 0.25;
  bool enforce_ledger = true;
  /// Also compute the pushforward identity at the center time.
  bool verify = true;
  Index fit_lo = 4;
  Index fit_hi = -1;
};

/// Order fit used by the ledger, with a noise floor relative to max |V|.
OrderFit ledger_fit(const MatrixXcd& w, double scale, Index lo = 4, Index hi = -1);

/// Level 1 on the stencil t + j h, |j| <= half_width: lambda(t), the transport
/// flow and V_1 = Phi V Phi^{-1} - i Phi d_t(Phi^{-1}).
Level reduce_highest_order(const ProblemSpec& spec, double t, int half_width, HighestOrderData* diffeo = nullptr);
/// Level n + 1 from level n: G_n, Phi_n = exp(i G_n), mu and W update.
Level reduce_step(const ProblemSpec& spec, const Level& level, std::vector<MatrixXcd>* g_out = nullptr);

struct ReductionResult {
  double t = 0.0;
  double lambda = 1.0;
  double ebar = 1.0;
  int N_K = 1;
  VectorXd mu_final;
  VectorXd lambda_K;  // lambda |xi|^M chi + mu_{N_K}, per slot
  /// Phi^{-1}, Phi_1^{-1}, ..., Phi_{N_K-1}^{-1}; T_K is their product in this order.
  std::vector<MatrixXcd> TK_factors;
  MatrixXcd WK;
  std::vector<ReductionStep> ledger;
  HighestOrderData diffeo;
  /// max entry of (T_K)_*(-i V) - (-i)(lambda_K(D) + W_K) on |xi| <= N/4; -1 if not computed.
  double pushforward_residual = -1.0;

  MatrixXcd TK() const;
};

ReductionResult run_reduction(const ProblemSpec& spec, double t, const ReductionOptions& opts = {});

/// X_+ = Phi^{-1}(X Phi - d_t Phi) on a uniform t-grid of step h. End samples
/// use one-sided differences and are flagged in `one_sided`.
std::vector<MatrixXcd> pushforward(const std::vector<MatrixXcd>& x, const std::vector<MatrixXcd>& phi, double h,
                                   std::vector<bool>* one_sided = nullptr);

}  // namespace torusnf

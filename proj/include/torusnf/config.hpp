#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "torusnf/propagator.hpp"

namespace torusnf {

// Expression grammar (whitespace ignored):
//
//   expr    := ['+' | '-'] product (('+' | '-') product)*
//   product := factor (('*' | '/') factor)*        '/' only by a number
//   factor  := number | 'pi' | 'i' | '(' expr ')'
//            | ('cos' | 'sin') '(' phase ')'
//            | '|xi|' ['^' signed-number] | 'xi' | 'chi'
//   phase   := linear combination of x, t and constants; the x coefficient
//              must be an integer
//
// V admits no xi factors. In W every term with xi factors must carry exactly
// one 'chi'; xi^k |xi|^m chi has order k + m.

ExpPoly parse_potential(std::string_view text, int line = 1, int column = 1);
/// Parsed W and the largest term order (-inf for W = 0).
Symbol parse_symbol(std::string_view text, double* order = nullptr, int line = 1, int column = 1);

/// Initial state: a trig polynomial when `u0` is set, otherwise coefficients
/// exp(-decay |xi|) with seeded random phases. Normalized in L^2.
struct InitialState {
  std::string u0;
  double decay = 0.5;
};
VectorXcd initial_state(const InitialState& init, Index n, std::uint64_t seed);

struct Config {
  ProblemSpec spec;
  std::string V_text = "1";
  std::string W_text = "0";
  double s = -1.0;  // Sobolev index when K came from s
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  std::vector<double> s_list{0.0, 1.0, 2.0};
  std::string out = "out";
  std::uint64_t seed = 1;
  InitialState init;

  ReductionOptions reduction;
  int reduction_samples = 1;  // reductions spread over [t0, t1]

  GrowthOptions growth;
  bool cross_check = false;
  double cross_t1 = 1.0;
  int cross_samples = 101;  // reductions on [t0, cross_t1]

  Validation validation;
};

/// Flat `key = value` lines under `[section]` headers; '#' starts a comment.
/// Runs the hypothesis checks; errors carry line and column.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);
/// Re-runs the checks after overrides (grid size, ...).
void revalidate(Config& cfg);

/// Sample times t0 + j (t1 - t0) / (count - 1).
std::vector<double> uniform_times(double t0, double t1, int count);

}  // namespace torusnf

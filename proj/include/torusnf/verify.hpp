#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "torusnf/common.hpp"

namespace torusnf {

enum class CheckStatus { Pass, Fail, Skipped };
const char* status_name(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double residual = 0.0;
  double tol = 0.0;
  std::string note;
};

struct VerifyReport {
  Index N = 0;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  int count(CheckStatus s) const;
  bool passed() const { return count(CheckStatus::Fail) == 0; }
};

/// Fourier and calculus invariants on N modes. Everything random is drawn from
/// `seed`, so two runs give identical reports.
VerifyReport verify_calculus(Index n, std::uint64_t seed);

}  // namespace torusnf

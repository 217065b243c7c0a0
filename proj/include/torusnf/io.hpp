#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "torusnf/propagator.hpp"

namespace torusnf {

/// Writes to a sibling temporary and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// CSV text; numbers as %.12g so reruns are byte-identical.
std::string ledger_csv(const std::vector<ReductionStep>& ledger, double t);
std::string ledger_csv(const std::vector<ReductionResult>& results);
/// t,xi,lambda_K,mu
std::string lambda_csv(const std::vector<ReductionResult>& results);
/// t,eta,xi,re,im over all entries of W_K
std::string matrix_csv(const std::vector<ReductionResult>& results);
std::string trajectory_csv(const Trajectory& tr);
std::string interpolation_csv(const std::vector<InterpolationRow>& rows);
/// t,error
std::string cross_csv(const CrossCheck& c);

}  // namespace torusnf

#include "torusnf/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace torusnf {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

const char* kLedgerHeader = "t,n,fitted_order_w,fit_valid,bound,hermiticity_residual,mu_linf,mu_imag,g_norm\n";

void ledger_rows(std::ostringstream& os, const std::vector<ReductionStep>& ledger, double t) {
  for (const auto& s : ledger)
    os << num(t) << ',' << s.n << ',' << num(s.fitted_order_w) << ',' << (s.fit_valid ? 1 : 0) << ',' << num(s.bound)
       << ',' << num(s.hermiticity_residual) << ',' << num(s.mu_linf) << ',' << num(s.mu_imag) << ','
       << num(s.g_norm) << '\n';
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractViolation("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ContractViolation("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string ledger_csv(const std::vector<ReductionStep>& ledger, double t) {
  std::ostringstream os;
  os << kLedgerHeader;
  ledger_rows(os, ledger, t);
  return os.str();
}

std::string ledger_csv(const std::vector<ReductionResult>& results) {
  std::ostringstream os;
  os << kLedgerHeader;
  for (const auto& r : results) ledger_rows(os, r.ledger, r.t);
  return os.str();
}

std::string lambda_csv(const std::vector<ReductionResult>& results) {
  std::ostringstream os;
  os << "t,xi,lambda_K,mu\n";
  for (const auto& r : results) {
    const Index n = r.lambda_K.size();
    for (Index i = 0; i < n; ++i)
      os << num(r.t) << ',' << mode_of(i, n) << ',' << num(r.lambda_K(i)) << ','
         << num(r.mu_final.size() == n ? r.mu_final(i) : 0.0) << '\n';
  }
  return os.str();
}

std::string matrix_csv(const std::vector<ReductionResult>& results) {
  std::ostringstream os;
  os << "t,eta,xi,re,im\n";
  for (const auto& r : results) {
    const Index n = r.WK.rows();
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i)
        os << num(r.t) << ',' << mode_of(i, n) << ',' << mode_of(j, n) << ',' << num(r.WK(i, j).real()) << ','
           << num(r.WK(i, j).imag()) << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  return os.str();
}

std::string interpolation_csv(const std::vector<InterpolationRow>& rows) {
  std::ostringstream os;
  write_interpolation_csv(os, rows);
  return os.str();
}

std::string cross_csv(const CrossCheck& c) {
  std::ostringstream os;
  os << "t,error\n";
  for (std::size_t j = 0; j < c.t.size(); ++j) os << num(c.t[j]) << ',' << num(c.error[j]) << '\n';
  return os.str();
}

}  // namespace torusnf

#include "torusnf/fourier.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace torusnf {

namespace {

Index wrap(Index k, Index n) {
  Index r = k % n;
  return r < 0 ? r + n : r;
}

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

void check_grid(Index n) {
  if (n < 8 || n % 2 != 0) throw DimensionError("grid size must be even and >= 8, got " + std::to_string(n));
}

void check_same(const GridFunction& u, const GridFunction& v) {
  if (u.size() != v.size())
    throw DimensionError("grid mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
}

}  // namespace

VectorXcd forward_transform(const Eigen::Ref<const VectorXcd>& samples) {
  const Index n = samples.size();
  VectorXcd in = samples;
  VectorXcd raw(n);
  fft_engine().fwd(raw, in);
  VectorXcd out(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) out(i) = raw(wrap(mode_of(i, n), n)) * scale;
  return out;
}

VectorXcd inverse_transform(const Eigen::Ref<const VectorXcd>& centered_coeffs) {
  const Index n = centered_coeffs.size();
  VectorXcd raw(n);
  for (Index i = 0; i < n; ++i) raw(wrap(mode_of(i, n), n)) = centered_coeffs(i);
  VectorXcd out(n);
  fft_engine().inv(out, raw);
  return out;
}

VectorXcd resample_spectrum(const VectorXcd& centered, Index samples, int derivative) {
  const Index n = centered.size();
  VectorXcd target = VectorXcd::Zero(samples);
  for (Index i = 0; i < n; ++i) {
    const Index k = mode_of(i, n);
    const Index s = slot_of(k, samples);
    if (s < 0 || s >= samples) continue;
    cplx c = centered(i);
    if (derivative > 0) c *= std::pow(kI * static_cast<double>(k), derivative);
    target(s) = c;
  }
  return inverse_transform(target);
}

// ---------------------------------------------------------------------------

double smooth_step(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / r);
  const double b = std::exp(-1.0 / (1.0 - r));
  return a / (a + b);
}

double smooth_step_derivative(double r) {
  if (r <= 0.0 || r >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / r);
  const double b = std::exp(-1.0 / (1.0 - r));
  const double da = a / (r * r);
  const double db = -b / ((1.0 - r) * (1.0 - r));
  return (da * b - a * db) / ((a + b) * (a + b));
}

double chi(double xi) { return smooth_step(2.0 * std::abs(xi) - 1.0); }

double chi_derivative(double xi) {
  const double s = xi < 0 ? -1.0 : 1.0;
  return 2.0 * s * smooth_step_derivative(2.0 * std::abs(xi) - 1.0);
}

double chi0(double xi) { return smooth_step(std::abs(xi) - 1.0); }

// ---------------------------------------------------------------------------

GridFunction::GridFunction(VectorXcd samples) : samples_(std::move(samples)) {
  check_grid(samples_.size());
  if (!samples_.allFinite()) throw NumericalError("non-finite grid sample");
  spectrum_ = forward_transform(samples_);
}

GridFunction::GridFunction(VectorXcd samples, VectorXcd spectrum)
    : samples_(std::move(samples)), spectrum_(std::move(spectrum)) {}

GridFunction GridFunction::from_function(Index n, const std::function<cplx(double)>& f) {
  check_grid(n);
  VectorXcd s(n);
  for (Index j = 0; j < n; ++j) s(j) = f(grid_point(j, n));
  return GridFunction(std::move(s));
}

GridFunction GridFunction::from_spectrum(const VectorXcd& centered_coeffs) {
  check_grid(centered_coeffs.size());
  if (!centered_coeffs.allFinite()) throw NumericalError("non-finite spectral coefficient");
  return GridFunction(inverse_transform(centered_coeffs), centered_coeffs);
}

double sobolev_norm(const GridFunction& u, double s) { return sobolev_norm_of_coefficients(u.spectrum(), s); }

GridFunction frac_laplacian(const GridFunction& u, double a) {
  const Index n = u.size();
  VectorXcd c = u.spectrum();
  for (Index i = 0; i < n; ++i) {
    const double xi = static_cast<double>(mode_of(i, n));
    c(i) *= xi == 0.0 ? 0.0 : std::pow(std::abs(xi), a) * chi(xi);
  }
  return GridFunction::from_spectrum(c);
}

GridFunction derivative(const GridFunction& u) {
  const Index n = u.size();
  VectorXcd c = u.spectrum();
  for (Index i = 0; i < n; ++i) c(i) *= kI * static_cast<double>(mode_of(i, n));
  c(0) = 0.0;
  return GridFunction::from_spectrum(c);
}

GridFunction inv_derivative(const GridFunction& u) {
  const Index n = u.size();
  VectorXcd c = u.spectrum();
  for (Index i = 0; i < n; ++i) {
    const Index k = mode_of(i, n);
    c(i) = k == 0 ? cplx{0.0} : c(i) / (kI * static_cast<double>(k));
  }
  return GridFunction::from_spectrum(c);
}

GridFunction multiply(const GridFunction& u, const GridFunction& v) {
  check_same(u, v);
  VectorXcd c = forward_transform(u.samples().cwiseProduct(v.samples()));
  c(0) = 0.0;
  return GridFunction::from_spectrum(c);
}

cplx l2_inner(const GridFunction& u, const GridFunction& v) {
  check_same(u, v);
  const double h = kTwoPi / static_cast<double>(u.size());
  // v.dot(u) = sum conj(v) u
  return h * v.samples().dot(u.samples());
}

double l2_norm(const GridFunction& u) { return std::sqrt(std::real(l2_inner(u, u))); }

double symplectic_form(const GridFunction& u1, const GridFunction& u2) {
  check_same(u1, u2);
  const cplx a = l2_inner(u1, u2);
  return std::real(kI * (a - std::conj(a)));
}

cplx l2_inner_coefficients(const VectorXcd& u, const VectorXcd& v) {
  if (u.size() != v.size()) throw DimensionError("coefficient length mismatch");
  return kTwoPi * v.dot(u);
}

double symplectic_form_coefficients(const VectorXcd& u1, const VectorXcd& u2) {
  const cplx a = l2_inner_coefficients(u1, u2);
  return std::real(kI * (a - std::conj(a)));
}

// ---------------------------------------------------------------------------

TrigInterpolant TrigInterpolant::from_samples(const Eigen::Ref<const VectorXd>& samples) {
  return from_coefficients(forward_transform(samples.cast<cplx>()));
}

TrigInterpolant TrigInterpolant::from_coefficients(VectorXcd centered) {
  TrigInterpolant f;
  const Index n = centered.size();
  if (n % 2 != 0) throw DimensionError("interpolant needs an even number of modes");
  centered(0) = 0.0;
  // enforce conjugate symmetry so the interpolant is real
  for (Index k = 1; k < n / 2; ++k) {
    const cplx p = centered(slot_of(k, n));
    const cplx m = centered(slot_of(-k, n));
    const cplx avg = 0.5 * (p + std::conj(m));
    centered(slot_of(k, n)) = avg;
    centered(slot_of(-k, n)) = std::conj(avg);
  }
  centered(slot_of(0, n)) = std::real(centered(slot_of(0, n)));
  f.coeffs_ = std::move(centered);
  return f;
}

TrigInterpolant TrigInterpolant::zero(Index n) { return from_coefficients(VectorXcd::Zero(n)); }

double TrigInterpolant::evaluate(double x, int derivative) const {
  const Index n = coeffs_.size();
  if (n == 0) return 0.0;
  double acc = derivative == 0 ? std::real(coeffs_(slot_of(0, n))) : 0.0;
  const cplx step = std::exp(kI * x);
  cplx e = 1.0;
  for (Index k = 1; k < n / 2; ++k) {
    e *= step;
    const double dk = static_cast<double>(k);
    // 2 Re(c (ik)^d e^{ikx})
    acc += 2.0 * std::real(coeffs_(slot_of(k, n)) * std::pow(kI * dk, derivative) * e);
  }
  return acc;
}

VectorXd TrigInterpolant::on_grid(Index samples, int derivative) const {
  if (coeffs_.size() == 0) return VectorXd::Zero(samples);
  return resample_spectrum(coeffs_, samples, derivative).real();
}

double TrigInterpolant::max_abs(Index samples) const {
  if (samples == 0) samples = 4 * std::max<Index>(coeffs_.size(), 8);
  return on_grid(samples).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

void write_grid_csv(std::ostream& os, const GridFunction& u) {
  os.precision(17);
  os << "j,x_j,Re,Im\n";
  for (Index j = 0; j < u.size(); ++j)
    os << j << ',' << u.x(j) << ',' << u.samples()(j).real() << ',' << u.samples()(j).imag() << '\n';
}

void write_spectrum_csv(std::ostream& os, const GridFunction& u) {
  os.precision(17);
  os << "xi,Re,Im\n";
  const Index n = u.size();
  for (Index i = 0; i < n; ++i)
    os << mode_of(i, n) << ',' << u.spectrum()(i).real() << ',' << u.spectrum()(i).imag() << '\n';
}

GridFunction read_grid_csv(std::istream& is) {
  std::string line;
  std::vector<cplx> vals;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.rfind("j,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> f;
    while (std::getline(ss, field, ',')) {
      try {
        f.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ParseError("bad number '" + field + "'", lineno, 1);
      }
    }
    if (f.size() != 4) throw ParseError("expected 4 fields", lineno, 1);
    if (static_cast<std::size_t>(f[0]) != vals.size()) throw ParseError("rows out of order", lineno, 1);
    vals.emplace_back(f[2], f[3]);
  }
  VectorXcd s(static_cast<Index>(vals.size()));
  for (Index j = 0; j < s.size(); ++j) s(j) = vals[static_cast<std::size_t>(j)];
  return GridFunction(std::move(s));
}

}  // namespace torusnf

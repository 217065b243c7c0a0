#include "torusnf/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "torusnf/fourier.hpp"

namespace torusnf {

namespace {

double falling(double p, int d) {
  double r = 1.0;
  for (int j = 0; j < d; ++j) r *= (p - j);
  return r;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

// d-th derivative by a fine central stencil; only used inside cut-off
// transition zones, which integer xi never hit.
cplx fine_derivative(const std::function<cplx(double)>& f, double xi, int d) {
  if (d == 0) return f(xi);
  const double h = 1e-3;
  cplx acc = 0.0;
  for (int j = 0; j <= d; ++j) {
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * binomial(d, j) * f(xi + (0.5 * d - j) * h);
  }
  return acc / std::pow(h, d);
}

}  // namespace

// ---------------------------------------------------------------------------
// ExpPoly

ExpPoly ExpPoly::constant(cplx c) { return exponential(0, 0.0, c); }

ExpPoly ExpPoly::exponential(int k, double w, cplx c) {
  ExpPoly p;
  p.modes_.push_back({k, w, c});
  p.normalize();
  return p;
}

ExpPoly ExpPoly::trig(cplx c, int k, double w, double ph, bool sine) {
  const cplx e = std::exp(kI * ph);
  ExpPoly p;
  if (sine) {
    p.modes_.push_back({k, w, c * e / (2.0 * kI)});
    p.modes_.push_back({-k, -w, -c * std::conj(e) / (2.0 * kI)});
  } else {
    p.modes_.push_back({k, w, 0.5 * c * e});
    p.modes_.push_back({-k, -w, 0.5 * c * std::conj(e)});
  }
  p.normalize();
  return p;
}

void ExpPoly::normalize() {
  std::sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
    return a.k != b.k ? a.k < b.k : a.w < b.w;
  });
  std::vector<Mode> out;
  for (const auto& m : modes_) {
    if (!out.empty() && out.back().k == m.k && out.back().w == m.w)
      out.back().c += m.c;
    else
      out.push_back(m);
  }
  std::erase_if(out, [](const Mode& m) { return m.c == cplx{0.0}; });
  modes_ = std::move(out);
}

int ExpPoly::bandwidth() const {
  int b = 0;
  for (const auto& m : modes_) b = std::max(b, std::abs(m.k));
  return b;
}

bool ExpPoly::time_independent() const {
  return std::all_of(modes_.begin(), modes_.end(), [](const Mode& m) { return m.w == 0.0; });
}

cplx ExpPoly::operator()(double t, double x) const {
  cplx acc = 0.0;
  for (const auto& m : modes_) acc += m.c * std::exp(kI * (m.k * x + m.w * t));
  return acc;
}

cplx ExpPoly::coefficient(int k, double t) const {
  cplx acc = 0.0;
  for (const auto& m : modes_)
    if (m.k == k) acc += m.c * std::exp(kI * (m.w * t));
  return acc;
}

ExpPoly ExpPoly::dx(int order) const {
  ExpPoly p = *this;
  for (auto& m : p.modes_) m.c *= std::pow(kI * static_cast<double>(m.k), order);
  p.normalize();
  return p;
}

ExpPoly ExpPoly::dt(int order) const {
  ExpPoly p = *this;
  for (auto& m : p.modes_) m.c *= std::pow(kI * m.w, order);
  p.normalize();
  return p;
}

ExpPoly ExpPoly::conj() const {
  ExpPoly p;
  for (const auto& m : modes_) p.modes_.push_back({-m.k, -m.w, std::conj(m.c)});
  p.normalize();
  return p;
}

ExpPoly ExpPoly::average() const {
  ExpPoly p;
  for (const auto& m : modes_)
    if (m.k == 0) p.modes_.push_back(m);
  return p;
}

ExpPoly ExpPoly::inv_dx() const {
  ExpPoly p;
  for (const auto& m : modes_)
    if (m.k != 0) p.modes_.push_back({m.k, m.w, m.c / (kI * static_cast<double>(m.k))});
  return p;
}

ExpPoly ExpPoly::scaled(cplx s) const {
  ExpPoly p = *this;
  for (auto& m : p.modes_) m.c *= s;
  p.normalize();
  return p;
}

ExpPoly operator+(const ExpPoly& a, const ExpPoly& b) {
  ExpPoly p = a;
  p.modes_.insert(p.modes_.end(), b.modes_.begin(), b.modes_.end());
  p.normalize();
  return p;
}

ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
  ExpPoly p;
  for (const auto& x : a.modes_)
    for (const auto& y : b.modes_) p.modes_.push_back({x.k + y.k, x.w + y.w, x.c * y.c});
  p.normalize();
  return p;
}

// ---------------------------------------------------------------------------
// Multiplier

cplx central_difference(const std::function<cplx(double)>& f, double xi, int d) {
  if (d == 0) return f(xi);
  cplx acc = 0.0;
  for (int j = 0; j <= d; ++j) {
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * binomial(d, j) * f(xi + d - 2 * j);
  }
  return acc / std::pow(2.0, d);
}

Multiplier::Multiplier() : Multiplier(constant(1.0)) {}

Multiplier::Multiplier(Fn f, std::string label, bool time_independent)
    : fn_(std::move(f)), label_(std::move(label)), time_independent_(time_independent) {}

Multiplier Multiplier::constant(cplx c) {
  Multiplier m([c](double, double, int d) { return d == 0 ? c : cplx{0.0}; }, "const", true);
  m.constant_ = true;
  return m;
}

Multiplier Multiplier::xi() {
  return Multiplier(
      [](double, double xi, int d) -> cplx {
        if (d == 0) return xi;
        return d == 1 ? 1.0 : 0.0;
      },
      "xi");
}

Multiplier Multiplier::power_chi(double p) {
  return Multiplier(
      [p](double, double xi, int d) -> cplx {
        const double a = std::abs(xi);
        if (a <= 0.5) return 0.0;
        if (a >= 1.0) {
          const double s = (xi < 0 && d % 2 == 1) ? -1.0 : 1.0;
          return s * falling(p, d) * std::pow(a, p - d);
        }
        return fine_derivative([p](double z) { return cplx{std::pow(std::abs(z), p) * chi(z)}; }, xi, d);
      },
      "|xi|^" + std::to_string(p) + "chi");
}

Multiplier Multiplier::signed_power_chi(double p) {
  return Multiplier(
      [p](double, double xi, int d) -> cplx {
        const double a = std::abs(xi);
        if (a <= 0.5) return 0.0;
        if (a >= 1.0) {
          const double s = (xi < 0 && d % 2 == 0) ? -1.0 : 1.0;
          return s * falling(p, d) * std::pow(a, p - d);
        }
        return fine_derivative(
            [p](double z) { return cplx{std::copysign(std::pow(std::abs(z), p), z) * chi(z)}; }, xi, d);
      },
      "|xi|^" + std::to_string(p - 1) + "xi chi");
}

Multiplier Multiplier::chi0() {
  return Multiplier(
      [](double, double xi, int d) -> cplx {
        const double a = std::abs(xi);
        if (a <= 1.0) return 0.0;
        if (a >= 2.0) return d == 0 ? 1.0 : 0.0;
        return fine_derivative([](double z) { return cplx{torusnf::chi0(z)}; }, xi, d);
      },
      "chi0");
}

Multiplier Multiplier::from_function(std::function<cplx(double, double)> f, std::string label,
                                     bool time_independent) {
  return Multiplier(
      [f = std::move(f)](double t, double xi, int d) {
        return central_difference([&](double z) { return f(t, z); }, xi, d);
      },
      std::move(label), time_independent);
}

Multiplier Multiplier::dxi(int order) const {
  if (order == 0) return *this;
  if (constant_) return constant(0.0);
  auto f = fn_;
  return Multiplier([f, order](double t, double xi, int d) { return f(t, xi, d + order); },
                    "d" + label_, time_independent_);
}

Multiplier Multiplier::shifted(double s) const {
  if (constant_ || s == 0.0) return *this;
  auto f = fn_;
  return Multiplier([f, s](double t, double xi, int d) { return f(t, xi + s, d); },
                    label_ + "(xi+" + std::to_string(s) + ")", time_independent_);
}

Multiplier Multiplier::conj() const {
  if (constant_) return constant(std::conj(constant_value()));
  auto f = fn_;
  return Multiplier([f](double t, double xi, int d) { return std::conj(f(t, xi, d)); }, "conj " + label_,
                    time_independent_);
}

Multiplier Multiplier::scaled(cplx s) const {
  if (constant_) return constant(s * constant_value());
  auto f = fn_;
  return Multiplier([f, s](double t, double xi, int d) { return s * f(t, xi, d); }, label_, time_independent_);
}

Multiplier operator*(const Multiplier& a, const Multiplier& b) {
  if (a.constant_) return b.scaled(a.constant_value());
  if (b.constant_) return a.scaled(b.constant_value());
  auto f = a.fn_;
  auto g = b.fn_;
  return Multiplier(
      [f, g](double t, double xi, int d) {
        cplx acc = 0.0;
        for (int j = 0; j <= d; ++j) acc += binomial(d, j) * f(t, xi, j) * g(t, xi, d - j);
        return acc;
      },
      a.label_ + "*" + b.label_, a.time_independent_ && b.time_independent_);
}

// ---------------------------------------------------------------------------
// Symbol

struct Symbol::Impl {
  double order = -std::numeric_limits<double>::infinity();
  std::string label;
  bool sep = true;
  std::vector<SymbolTerm> terms;
  PointFn point;
  ColumnFn column;
  int bandwidth = -1;
  bool x_indep = false;
};

Symbol::Symbol() : impl_(std::make_shared<Impl>()) {}

Symbol::Symbol(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Symbol::Symbol(std::vector<SymbolTerm> terms, double order, std::string label) {
  auto p = std::make_shared<Impl>();
  std::erase_if(terms, [](const SymbolTerm& s) { return s.f.empty(); });
  p->terms = std::move(terms);
  p->order = order;
  p->label = std::move(label);
  impl_ = std::move(p);
}

Symbol::Symbol(PointFn point, double order, std::string label, int x_bandwidth, bool x_independent) {
  auto p = std::make_shared<Impl>();
  p->sep = false;
  p->point = std::move(point);
  p->order = order;
  p->label = std::move(label);
  p->bandwidth = x_independent ? 0 : x_bandwidth;
  p->x_indep = x_independent;
  impl_ = std::move(p);
}

Symbol Symbol::constant(cplx c) { return Symbol({{ExpPoly::constant(c), Multiplier::constant(1.0)}}, 0.0, "const"); }

Symbol Symbol::multiplier(const Multiplier& m, double order) {
  return Symbol({{ExpPoly::constant(1.0), m}}, order, m.label());
}

Symbol Symbol::function_of_x(const ExpPoly& f) { return Symbol({{f, Multiplier::constant(1.0)}}, 0.0, "f(x)"); }

Symbol Symbol::product(const ExpPoly& f, const Multiplier& m, double order) {
  return Symbol({{f, m}}, order, m.label());
}

cplx Symbol::operator()(double t, double x, double xi) const {
  if (!impl_->sep) return impl_->point(t, x, xi);
  cplx acc = 0.0;
  for (const auto& term : impl_->terms) acc += term.f(t, x) * term.m(t, xi);
  return acc;
}

VectorXcd Symbol::column(double t, double xi, Index L) const {
  VectorXcd out = VectorXcd::Zero(L);
  if (impl_->sep) {
    for (const auto& term : impl_->terms) {
      const cplx mv = term.m(t, xi);
      if (mv == cplx{0.0}) continue;
      for (const auto& md : term.f.modes()) {
        const cplx c = mv * md.c * std::exp(kI * (md.w * t));
        for (Index j = 0; j < L; ++j) out(j) += c * std::exp(kI * (md.k * grid_point(j, L)));
      }
    }
    return out;
  }
  if (impl_->column) {
    impl_->column(t, xi, L, out.data());
    return out;
  }
  for (Index j = 0; j < L; ++j) out(j) = impl_->point(t, grid_point(j, L), xi);
  return out;
}

double Symbol::order() const { return impl_->order; }
const std::string& Symbol::label() const { return impl_->label; }

Symbol Symbol::with_order(double order) const {
  auto p = std::make_shared<Impl>(*impl_);
  p->order = order;
  return Symbol(std::shared_ptr<const Impl>(std::move(p)));
}

Symbol Symbol::with_label(std::string label) const {
  auto p = std::make_shared<Impl>(*impl_);
  p->label = std::move(label);
  return Symbol(std::shared_ptr<const Impl>(std::move(p)));
}

Symbol Symbol::with_column(ColumnFn column) const {
  auto p = std::make_shared<Impl>(*impl_);
  p->column = std::move(column);
  return Symbol(std::shared_ptr<const Impl>(std::move(p)));
}

bool Symbol::separable() const { return impl_->sep; }

const std::vector<SymbolTerm>& Symbol::terms() const {
  if (!impl_->sep) throw ContractViolation("symbol '" + impl_->label + "' has no separable form");
  return impl_->terms;
}

int Symbol::x_bandwidth() const {
  if (!impl_->sep) return impl_->bandwidth;
  int b = 0;
  for (const auto& t : impl_->terms) b = std::max(b, t.f.bandwidth());
  return b;
}

bool Symbol::x_independent() const { return impl_->sep ? x_bandwidth() == 0 : impl_->x_indep; }

namespace {

int combined_bandwidth(int a, int b) { return (a < 0 || b < 0) ? -1 : std::max(a, b); }

// Spectral x-derivative / antiderivative of an opaque symbol, evaluated on a grid.
Index fallback_samples(const Symbol& a) {
  const int bw = a.x_bandwidth();
  Index L = kFallbackSamples;
  while (bw >= 0 && L <= 2 * bw + 2) L *= 2;
  return L;
}

VectorXcd spectral_x_op(const Symbol& a, double t, double xi, Index L, bool integrate) {
  const Index Ls = std::max(L, fallback_samples(a));
  VectorXcd c = forward_transform(a.column(t, xi, Ls));
  c(0) = 0.0;
  for (Index i = 0; i < Ls; ++i) {
    const Index k = mode_of(i, Ls);
    if (integrate)
      c(i) = k == 0 ? cplx{0.0} : c(i) / (kI * static_cast<double>(k));
    else
      c(i) *= kI * static_cast<double>(k);
  }
  if (Ls == L) return inverse_transform(c);
  return resample_spectrum(c, L);
}

cplx spectral_point(const VectorXcd& c, double x) {
  const Index n = c.size();
  cplx acc = 0.0;
  for (Index i = 0; i < n; ++i) acc += c(i) * std::exp(kI * (static_cast<double>(mode_of(i, n)) * x));
  return acc;
}

Symbol opaque_x_op(const Symbol& a, bool integrate, double order, const std::string& label) {
  Symbol s(
      [a, integrate](double t, double x, double xi) {
        const Index L = fallback_samples(a);
        VectorXcd c = forward_transform(spectral_x_op(a, t, xi, L, integrate));
        return spectral_point(c, x);
      },
      order, label, a.x_bandwidth());
  return s.with_column([a, integrate](double t, double xi, Index L, cplx* out) {
    Eigen::Map<VectorXcd>(out, L) = spectral_x_op(a, t, xi, L, integrate);
  });
}

}  // namespace

Symbol Symbol::conj() const {
  if (impl_->sep) {
    std::vector<SymbolTerm> out;
    for (const auto& t : impl_->terms) out.push_back({t.f.conj(), t.m.conj()});
    return Symbol(std::move(out), impl_->order, "conj " + impl_->label);
  }
  Symbol a = *this;
  Symbol s([a](double t, double x, double xi) { return std::conj(a(t, x, xi)); }, impl_->order,
           "conj " + impl_->label, impl_->bandwidth, impl_->x_indep);
  return s.with_column([a](double t, double xi, Index L, cplx* out) {
    Eigen::Map<VectorXcd>(out, L) = a.column(t, xi, L).conjugate();
  });
}

Symbol Symbol::scaled(cplx c) const {
  if (impl_->sep) {
    std::vector<SymbolTerm> out;
    for (const auto& t : impl_->terms) out.push_back({t.f.scaled(c), t.m});
    return Symbol(std::move(out), impl_->order, impl_->label);
  }
  Symbol a = *this;
  Symbol s([a, c](double t, double x, double xi) { return c * a(t, x, xi); }, impl_->order, impl_->label,
           impl_->bandwidth, impl_->x_indep);
  return s.with_column([a, c](double t, double xi, Index L, cplx* out) {
    Eigen::Map<VectorXcd>(out, L) = c * a.column(t, xi, L);
  });
}

Symbol Symbol::dx() const {
  if (impl_->sep) {
    std::vector<SymbolTerm> out;
    for (const auto& t : impl_->terms) out.push_back({t.f.dx(), t.m});
    return Symbol(std::move(out), impl_->order, "dx " + impl_->label);
  }
  if (impl_->x_indep) return Symbol().with_order(impl_->order);
  return opaque_x_op(*this, false, impl_->order, "dx " + impl_->label);
}

Symbol Symbol::dxi() const {
  if (impl_->sep) {
    std::vector<SymbolTerm> out;
    for (const auto& t : impl_->terms)
      if (!t.m.is_constant()) out.push_back({t.f, t.m.dxi()});
    return Symbol(std::move(out), impl_->order - 1, "dxi " + impl_->label);
  }
  Symbol a = *this;
  Symbol s(
      [a](double t, double x, double xi) { return 0.5 * (a(t, x, xi + 1) - a(t, x, xi - 1)); }, impl_->order - 1,
      "dxi " + impl_->label, impl_->bandwidth, impl_->x_indep);
  return s.with_column([a](double t, double xi, Index L, cplx* out) {
    Eigen::Map<VectorXcd>(out, L) = 0.5 * (a.column(t, xi + 1, L) - a.column(t, xi - 1, L));
  });
}

Symbol operator+(const Symbol& a, const Symbol& b) {
  const double order = std::max(a.order(), b.order());
  if (a.separable() && b.separable()) {
    auto terms = a.terms();
    terms.insert(terms.end(), b.terms().begin(), b.terms().end());
    return Symbol(std::move(terms), order, a.label() + " + " + b.label());
  }
  Symbol s([a, b](double t, double x, double xi) { return a(t, x, xi) + b(t, x, xi); }, order,
           a.label() + " + " + b.label(), combined_bandwidth(a.x_bandwidth(), b.x_bandwidth()),
           a.x_independent() && b.x_independent());
  return s.with_column([a, b](double t, double xi, Index L, cplx* out) {
    Eigen::Map<VectorXcd>(out, L) = a.column(t, xi, L) + b.column(t, xi, L);
  });
}

Symbol operator-(const Symbol& a, const Symbol& b) { return a + b.scaled(-1.0); }

Symbol operator*(const Symbol& a, const Symbol& b) {
  const double order = a.order() + b.order();
  if (a.separable() && b.separable()) {
    std::vector<SymbolTerm> out;
    for (const auto& x : a.terms())
      for (const auto& y : b.terms()) out.push_back({x.f * y.f, x.m * y.m});
    return Symbol(std::move(out), order, "(" + a.label() + ")(" + b.label() + ")");
  }
  const int bw = (a.x_bandwidth() < 0 || b.x_bandwidth() < 0) ? -1 : a.x_bandwidth() + b.x_bandwidth();
  Symbol s([a, b](double t, double x, double xi) { return a(t, x, xi) * b(t, x, xi); }, order,
           "(" + a.label() + ")(" + b.label() + ")", bw, a.x_independent() && b.x_independent());
  return s.with_column([a, b](double t, double xi, Index L, cplx* out) {
    Eigen::Map<VectorXcd>(out, L) = a.column(t, xi, L).cwiseProduct(b.column(t, xi, L));
  });
}

// ---------------------------------------------------------------------------

cplx x_coefficient(const Symbol& a, double t, int k, double xi, Index samples) {
  if (a.separable()) {
    cplx acc = 0.0;
    for (const auto& term : a.terms()) {
      const cplx c = term.f.coefficient(k, t);
      if (c != cplx{0.0}) acc += c * term.m(t, xi);
    }
    return acc;
  }
  while (samples <= 2 * std::abs(k) + 1) samples *= 2;
  return coefficient_at(forward_transform(a.column(t, xi, samples)), k);
}

Symbol x_average(const Symbol& a) {
  if (a.separable()) {
    std::vector<SymbolTerm> out;
    for (const auto& t : a.terms()) out.push_back({t.f.average(), t.m});
    return Symbol(std::move(out), a.order(), "<" + a.label() + ">");
  }
  const Index L = fallback_samples(a);
  Symbol s([a, L](double t, double, double xi) { return a.column(t, xi, L).mean(); }, a.order(),
           "<" + a.label() + ">", 0, true);
  return s.with_column([a, L](double t, double xi, Index n, cplx* out) {
    Eigen::Map<VectorXcd>(out, n).setConstant(a.column(t, xi, L).mean());
  });
}

Symbol inv_dx(const Symbol& a) {
  if (a.separable()) {
    std::vector<SymbolTerm> out;
    for (const auto& t : a.terms()) out.push_back({t.f.inv_dx(), t.m});
    return Symbol(std::move(out), a.order(), "dx^-1 " + a.label());
  }
  if (a.x_independent()) return Symbol().with_order(a.order());
  return opaque_x_op(a, true, a.order(), "dx^-1 " + a.label());
}

Symbol adjoint_symbol(const Symbol& a, double t0, Index n) {
  if (a.separable()) {
    std::vector<SymbolTerm> out;
    for (const auto& term : a.terms())
      for (const auto& md : term.f.modes())
        out.push_back({ExpPoly::exponential(-md.k, -md.w, std::conj(md.c)), term.m.shifted(-md.k).conj()});
    return Symbol(std::move(out), a.order(), a.label() + "^*");
  }
  // \hat a(eta, xi - eta) for eta in [-N, N-1], resolved on 2N samples
  auto coeffs = [a, t0, n](double xi) {
    VectorXcd c(2 * n);
    for (Index i = 0; i < 2 * n; ++i) {
      const Index eta = mode_of(i, 2 * n);
      c(i) = std::conj(coefficient_at(forward_transform(a.column(t0, xi - eta, 2 * n)), eta));
    }
    return c;
  };
  Symbol s(
      [coeffs](double, double x, double xi) {
        // conj(sum c e^{i eta x}) = sum conj(c) e^{-i eta x}
        const VectorXcd c = coeffs(xi);
        const Index L = c.size();
        cplx acc = 0.0;
        for (Index i = 0; i < L; ++i) acc += c(i) * std::exp(-kI * (static_cast<double>(mode_of(i, L)) * x));
        return acc;
      },
      a.order(), a.label() + "^*", a.x_bandwidth(), a.x_independent());
  return s.with_column([coeffs](double, double xi, Index L, cplx* out) {
    const VectorXcd c = coeffs(xi);
    const Index m = c.size();
    for (Index j = 0; j < L; ++j) {
      cplx acc = 0.0;
      const double x = grid_point(j, L);
      for (Index i = 0; i < m; ++i) acc += c(i) * std::exp(-kI * (static_cast<double>(mode_of(i, m)) * x));
      out[j] = acc;
    }
  });
}

Symbol compose_exact(const Symbol& a, const Symbol& b, double t0, Index n) {
  const double order = a.order() + b.order();
  if (a.separable() && b.separable()) {
    std::vector<SymbolTerm> out;
    for (const auto& tb : b.terms())
      for (const auto& md : tb.f.modes()) {
        const ExpPoly e = ExpPoly::exponential(md.k, md.w, md.c);
        for (const auto& ta : a.terms()) out.push_back({ta.f * e, ta.m.shifted(md.k) * tb.m});
      }
    return Symbol(std::move(out), order, a.label() + " # " + b.label());
  }
  auto bhat = [b, t0, n](double xi) { return forward_transform(b.column(t0, xi, 2 * n)); };
  const Index half = n / 2;
  Symbol s(
      [a, bhat, t0, half](double, double x, double xi) {
        const VectorXcd c = bhat(xi);
        cplx acc = 0.0;
        for (Index eta = -half; eta <= half; ++eta) {
          const cplx be = coefficient_at(c, eta);
          if (be == cplx{0.0}) continue;
          acc += a(t0, x, xi + eta) * be * std::exp(kI * (static_cast<double>(eta) * x));
        }
        return acc;
      },
      order, a.label() + " # " + b.label(),
      (a.x_bandwidth() < 0 || b.x_bandwidth() < 0) ? -1 : a.x_bandwidth() + b.x_bandwidth());
  return s.with_column([a, bhat, t0, half](double, double xi, Index L, cplx* out) {
    const VectorXcd c = bhat(xi);
    Eigen::Map<VectorXcd> o(out, L);
    o.setZero();
    for (Index eta = -half; eta <= half; ++eta) {
      const cplx be = coefficient_at(c, eta);
      if (std::abs(be) == 0.0) continue;
      const VectorXcd col = a.column(t0, xi + eta, L);
      for (Index j = 0; j < L; ++j) o(j) += col(j) * be * std::exp(kI * (static_cast<double>(eta) * grid_point(j, L)));
    }
  });
}

Expansion compose_expansion(const Symbol& a, const Symbol& b, int n_exp, double t, Index n) {
  if (n_exp < 1) throw ContractViolation("expansion length must be >= 1");
  Symbol acc;
  Symbol da = a;
  Symbol db = b;
  double fact = 1.0;
  cplx ipow = 1.0;
  for (int beta = 0; beta < n_exp; ++beta) {
    if (beta > 0) {
      da = da.dxi();
      db = db.dx();
      fact *= beta;
      ipow *= kI;
    }
    acc = acc + (da * db).scaled(1.0 / (ipow * fact));
  }
  acc = acc.with_order(a.order() + b.order()).with_label("expansion");
  Symbol rem = (compose_exact(a, b, t, n) - acc).with_order(a.order() + b.order() - n_exp).with_label("remainder");
  return {acc, rem};
}

Symbol poisson_bracket(const Symbol& a, const Symbol& b) {
  return (a.dxi() * b.dx() - a.dx() * b.dxi())
      .with_order(a.order() + b.order() - 1)
      .with_label("{" + a.label() + ", " + b.label() + "}");
}

Symbol dequantize(const MatrixXcd& a, double order, std::string label) {
  auto m = std::make_shared<const MatrixXcd>(a);
  const Index n = a.cols();
  return Symbol(
      [m, n](double, double x, double xi) -> cplx {
        const double r = std::round(xi);
        const Index s = slot_of(static_cast<Index>(r), n);
        if (r != xi || s < 0 || s >= n) throw ContractViolation("dequantized symbol evaluated off the mode lattice");
        cplx acc = 0.0;
        for (Index i = 0; i < n; ++i)
          acc += (*m)(i, s) * std::exp(kI * (static_cast<double>(i - s) * x));
        return acc;
      },
      order, std::move(label), static_cast<int>(n - 1));
}

Symbol random_symbol(std::uint64_t seed, int bandwidth, double order, int terms) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> kind(0, 2);
  std::vector<SymbolTerm> out;
  for (int j = 0; j < terms; ++j) {
    ExpPoly f;
    for (int k = -bandwidth; k <= bandwidth; ++k)
      f = f + ExpPoly::exponential(k, 0.0, cplx(g(rng), g(rng)) / (1.0 + std::abs(k)));
    const double p = order - 0.5 * j;
    Multiplier m;
    switch (kind(rng)) {
      case 0: m = order >= 0 ? Multiplier::constant(1.0) : Multiplier::power_chi(p); break;
      case 1: m = Multiplier::power_chi(p); break;
      default: m = Multiplier::signed_power_chi(p); break;
    }
    out.push_back({f, m});
  }
  return Symbol(std::move(out), order, "random");
}

}  // namespace torusnf

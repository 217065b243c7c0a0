#include "torusnf/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace torusnf {

namespace {

// One product term: f(t, x) xi^xi_pow |xi|^abs_pow chi^chi.
struct Term {
  ExpPoly f;
  int xi_pow = 0;
  double abs_pow = 0.0;
  int chi = 0;
  int column = 0;
  bool has_xi() const { return xi_pow != 0 || abs_pow != 0.0 || chi != 0; }
};

using Terms = std::vector<Term>;

struct Phase {
  double kx = 0.0;
  double w = 0.0;
  double p = 0.0;
};

class ExprParser {
 public:
  ExprParser(std::string_view s, int line, int column) : s_(s), line_(line), col0_(column) {}

  Terms parse() {
    skip();
    if (pos_ == s_.size()) fail("empty expression");
    Terms v = expr();
    skip();
    if (pos_ != s_.size()) fail(std::string("unexpected '") + s_[pos_] + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, col0_ + static_cast<int>(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  bool at_number() {
    skip();
    return pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.');
  }

  double number() {
    skip();
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str() || !std::isfinite(v)) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  double signed_number() {
    const bool neg = eat('-');
    if (!neg) eat('+');
    const double v = number();
    return neg ? -v : v;
  }

  std::string word() {
    skip();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  static Terms constant(cplx c, int column) {
    Term t;
    t.f = ExpPoly::constant(c);
    t.column = column;
    return {t};
  }

  Terms multiply(const Terms& a, const Terms& b) {
    Terms out;
    for (const auto& x : a)
      for (const auto& y : b) {
        Term t;
        t.f = x.f * y.f;
        t.xi_pow = x.xi_pow + y.xi_pow;
        t.abs_pow = x.abs_pow + y.abs_pow;
        t.chi = x.chi + y.chi;
        t.column = std::min(x.column, y.column);
        if (t.chi > 1) fail("chi appears twice in one term");
        out.push_back(std::move(t));
      }
    return out;
  }

  static bool is_number(const Terms& v, cplx* c) {
    if (v.size() != 1 || v[0].has_xi()) return false;
    for (const auto& m : v[0].f.modes())
      if (m.k != 0 || m.w != 0.0) return false;
    *c = v[0].f.empty() ? cplx{0.0} : v[0].f.coefficient(0, 0.0);
    return true;
  }

  Terms expr() {
    const int col = col0_ + static_cast<int>(pos_);
    Terms v;
    if (eat('-')) {
      v = multiply(constant(-1.0, col), product());
    } else {
      eat('+');
      v = product();
    }
    for (;;) {
      if (eat('+')) {
        const Terms r = product();
        v.insert(v.end(), r.begin(), r.end());
      } else if (eat('-')) {
        const Terms r = multiply(constant(-1.0, col), product());
        v.insert(v.end(), r.begin(), r.end());
      } else {
        return v;
      }
    }
  }

  Terms product() {
    Terms v = factor();
    for (;;) {
      if (eat('*')) {
        v = multiply(v, factor());
      } else if (eat('/')) {
        cplx c;
        const Terms d = factor();
        if (!is_number(d, &c)) fail("can only divide by a number");
        if (c == 0.0) fail("division by zero");
        v = multiply(v, constant(1.0 / c, 0));
      } else {
        return v;
      }
    }
  }

  Terms factor() {
    skip();
    const int col = col0_ + static_cast<int>(pos_);
    if (pos_ == s_.size()) fail("unexpected end of expression");
    if (eat('(')) {
      Terms v = expr();
      expect(')');
      return v;
    }
    if (eat('|')) {
      if (word() != "xi") fail("expected |xi|");
      expect('|');
      Term t;
      t.f = ExpPoly::constant(1.0);
      t.abs_pow = eat('^') ? signed_number() : 1.0;
      t.column = col;
      return {t};
    }
    if (at_number()) return constant(number(), col);
    const std::size_t before = pos_;
    const std::string w = word();
    if (w.empty()) fail(std::string("unexpected '") + s_[pos_] + "'");
    if (w == "pi") return constant(kPi, col);
    if (w == "i") return constant(kI, col);
    if (w == "xi" || w == "chi") {
      Term t;
      t.f = ExpPoly::constant(1.0);
      (w == "xi" ? t.xi_pow : t.chi) = 1;
      t.column = col;
      return {t};
    }
    if (w == "cos" || w == "sin") {
      expect('(');
      const Phase ph = phase();
      expect(')');
      const double k = std::round(ph.kx);
      if (std::abs(ph.kx - k) > 1e-12) {
        pos_ = before;
        fail("x coefficient must be an integer");
      }
      Term t;
      t.f = ExpPoly::trig(1.0, static_cast<int>(k), ph.w, ph.p, w == "sin");
      t.column = col;
      return {t};
    }
    pos_ = before;
    fail("unknown name '" + w + "'");
  }

  Phase phase() {
    Phase acc;
    double sign = eat('-') ? -1.0 : (eat('+'), 1.0);
    for (;;) {
      const Phase t = phase_term();
      acc.kx += sign * t.kx;
      acc.w += sign * t.w;
      acc.p += sign * t.p;
      if (eat('+'))
        sign = 1.0;
      else if (eat('-'))
        sign = -1.0;
      else
        return acc;
    }
  }

  // coefficient times at most one of x, t
  Phase phase_term() {
    double c = 1.0;
    int var = 0;  // 0 none, 1 x, 2 t
    auto one = [&] {
      if (at_number()) {
        c *= number();
        return;
      }
      if (eat('(')) {
        const Phase inner = phase();
        expect(')');
        if (inner.kx != 0.0 || inner.w != 0.0) fail("parenthesized phase parts must be constant");
        c *= inner.p;
        return;
      }
      const std::string w = word();
      if (w == "pi") {
        c *= kPi;
      } else if (w == "x" || w == "t") {
        if (var != 0) fail("phase must be linear in x and t");
        var = w == "x" ? 1 : 2;
      } else {
        fail(w.empty() ? "expected x, t or a number" : "unknown name '" + w + "' in phase");
      }
    };
    one();
    for (;;) {
      if (eat('*')) {
        one();
      } else if (eat('/')) {
        const double d = number();
        if (d == 0.0) fail("division by zero");
        c /= d;
      } else {
        break;
      }
    }
    Phase p;
    (var == 1 ? p.kx : var == 2 ? p.w : p.p) = c;
    return p;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
};

Multiplier multiplier_of(const Term& t, double* order) {
  const double p = t.abs_pow + t.xi_pow;
  *order = p;
  if (t.xi_pow % 2 == 0) return Multiplier::power_chi(p);
  return Multiplier::signed_power_chi(p);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct Entry {
  std::string value;
  int line = 0;
  int column = 0;
  bool used = false;
};

class Table {
 public:
  std::map<std::string, Entry> entries;

  Entry* find(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  [[noreturn]] static void fail(const Entry& e, const std::string& what) { throw ParseError(what, e.line, e.column); }

  double real(const std::string& key, double fallback) {
    Entry* e = find(key);
    return e ? to_double(*e, e->value) : fallback;
  }

  long integer(const std::string& key, long fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    char* end = nullptr;
    const long v = std::strtol(e->value.c_str(), &end, 10);
    if (e->value.empty() || *end != '\0') fail(*e, key + ": expected an integer");
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (e->value.empty() || e->value[0] == '-' || *end != '\0') fail(*e, key + ": expected an unsigned integer");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(*e, key + ": expected true or false");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    Entry* e = find(key);
    return e ? e->value : fallback;
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(*e, trim(item)));
    if (out.empty()) fail(*e, key + ": empty list");
    return out;
  }

 private:
  static double to_double(const Entry& e, const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(v)) fail(e, "expected a finite number, got '" + s + "'");
    return v;
  }
};

const char* const kSections[] = {"grid", "operator", "time", "reduction", "growth", "cross", "initial", "output", "run"};

Table read_table(std::string_view text) {
  Table tab;
  std::string section;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const int lead = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, lead);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections))
        throw ParseError("unknown section [" + section + "]", line_no, lead + 1);
      continue;
    }
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no, lead);
    const std::string key = trim(raw.substr(0, eq));
    if (key.empty()) throw ParseError("missing key", line_no, lead);
    const std::string_view rest = raw.substr(eq + 1);
    const auto vpos = rest.find_first_not_of(" \t");
    Entry e;
    e.value = trim(rest);
    e.line = line_no;
    e.column = static_cast<int>(eq) + 2 + (vpos == std::string_view::npos ? 0 : static_cast<int>(vpos));
    const std::string full = section.empty() ? key : section + "." + key;
    if (e.value.empty()) throw ParseError("missing value for " + full, line_no, e.column);
    if (!tab.entries.emplace(full, e).second) throw ParseError("duplicate key " + full, line_no, lead);
    if (end == text.size()) break;
  }
  return tab;
}

}  // namespace

ExpPoly parse_potential(std::string_view text, int line, int column) {
  const Terms terms = ExprParser(text, line, column).parse();
  ExpPoly out;
  for (const auto& t : terms) {
    if (t.has_xi()) throw ParseError("the potential cannot depend on xi", line, t.column);
    out = out + t.f;
  }
  return out;
}

Symbol parse_symbol(std::string_view text, double* order, int line, int column) {
  const Terms terms = ExprParser(text, line, column).parse();
  // group terms sharing a multiplier
  std::vector<std::pair<Term, ExpPoly>> groups;
  for (const auto& t : terms) {
    if (t.f.empty()) continue;
    if ((t.xi_pow != 0 || t.abs_pow != 0.0) && t.chi == 0)
      throw ParseError("xi factors need a chi cut-off", line, t.column);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.first.chi == t.chi && g.first.abs_pow + g.first.xi_pow == t.abs_pow + t.xi_pow &&
             (g.first.xi_pow - t.xi_pow) % 2 == 0;
    });
    if (it == groups.end())
      groups.emplace_back(t, t.f);
    else
      it->second = it->second + t.f;
  }
  double top = -std::numeric_limits<double>::infinity();
  std::vector<SymbolTerm> out;
  for (const auto& [t, f] : groups) {
    if (f.empty()) continue;
    double ord = 0.0;
    Multiplier m = t.chi ? multiplier_of(t, &ord) : Multiplier::constant(1.0);
    top = std::max(top, ord);
    out.push_back({f, std::move(m)});
  }
  if (order) *order = top;
  if (out.empty()) return Symbol::zero();
  return Symbol(std::move(out), top, std::string(text));
}

VectorXcd initial_state(const InitialState& init, Index n, std::uint64_t seed) {
  VectorXcd c = VectorXcd::Zero(n);
  if (!init.u0.empty()) {
    const ExpPoly f = parse_potential(init.u0);
    if (!f.time_independent()) throw ParseError("u0 cannot depend on t", 1, 1);
    for (const auto& m : f.modes())
      if (std::abs(m.k) < n / 2) c(slot_of(m.k, n)) = f.coefficient(m.k, 0.0);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (Index i = 1; i < n; ++i)
      c(i) = std::exp(-init.decay * std::abs(static_cast<double>(mode_of(i, n)))) * std::exp(kI * phase(rng));
  }
  const double norm = c.norm();
  if (norm == 0.0) throw ContractViolation("initial state is zero on this grid");
  return c / norm;
}

std::vector<double> uniform_times(double t0, double t1, int count) {
  if (count <= 1) return {t0};
  std::vector<double> out;
  for (int j = 0; j < count; ++j) out.push_back(t0 + (t1 - t0) * j / (count - 1));
  return out;
}

Config parse_config(std::string_view text) {
  Table tab = read_table(text);
  Config c;
  ProblemSpec& sp = c.spec;

  const long n = tab.integer("grid.N", sp.N);
  if (n < 8 || n % 2) Table::fail(*tab.find("grid.N"), "N must be even and at least 8");
  sp.N = n;

  sp.M = tab.real("operator.M", sp.M);
  sp.frak_e = tab.real("operator.frak_e", sp.frak_e);
  sp.symmetrize = tab.boolean("operator.symmetrize", sp.symmetrize);
  if (Entry* e = tab.find("operator.V")) {
    c.V_text = e->value;
    sp.V = parse_potential(e->value, e->line, e->column);
  }
  if (Entry* e = tab.find("operator.W")) {
    c.W_text = e->value;
    double order = 0.0;
    sp.W = parse_symbol(e->value, &order, e->line, e->column);
    if (Entry* o = tab.find("operator.W_order")) {
      const double declared = tab.real("operator.W_order", 0.0);
      if (declared < order - 1e-12) Table::fail(*o, "W_order is below the order of the W terms");
      order = declared;
    }
    if (std::isfinite(order)) sp.W = sp.W.with_order(order);
  }

  Entry* ke = tab.find("operator.K");
  Entry* se = tab.find("operator.s");
  if (se) {
    c.s = tab.real("operator.s", 0.0);
    if (c.s < 0.0) Table::fail(*se, "s must be non-negative");
    sp.K = k_from_s(c.s);
  }
  if (ke) {
    const long k = tab.integer("operator.K", 2);
    if (k < 1) Table::fail(*ke, "K must be at least 1");
    if (se && k != sp.K) Table::fail(*ke, "K disagrees with [s] + 1");
    sp.K = static_cast<int>(k);
  }

  c.t0 = tab.real("time.t0", c.t0);
  c.t1 = tab.real("time.t1", c.t1);
  c.dt = tab.real("time.dt", c.dt);
  if (!(c.dt > 0.0)) Table::fail(*tab.find("time.dt"), "dt must be positive");
  sp.h_t = tab.real("time.h_t", sp.h_t);
  if (!(sp.h_t > 0.0)) Table::fail(*tab.find("time.h_t"), "h_t must be positive");
  const long sub = tab.integer("time.substeps", sp.substeps);
  if (sub < 1) Table::fail(*tab.find("time.substeps"), "substeps must be at least 1");
  sp.substeps = static_cast<int>(sub);

  c.out = tab.text("output.dir", c.out);
  c.s_list = tab.list("output.s_list", c.s_list);
  c.seed = tab.unsigned_integer("run.seed", c.seed);

  c.reduction.slack = tab.real("reduction.slack", c.reduction.slack);
  c.reduction.verify = tab.boolean("reduction.verify", c.reduction.verify);
  c.reduction.enforce_ledger = tab.boolean("reduction.enforce_ledger", c.reduction.enforce_ledger);
  c.reduction_samples = static_cast<int>(tab.integer("reduction.samples", c.reduction_samples));
  if (c.reduction_samples < 1) Table::fail(*tab.find("reduction.samples"), "samples must be at least 1");

  GrowthOptions& g = c.growth;
  g.t0 = c.t0;
  g.T = tab.real("growth.T", g.T);
  g.dt = tab.real("growth.dt", c.dt);
  g.s = tab.real("growth.s", c.s >= 0.0 ? c.s : g.s);
  g.s0 = tab.real("growth.s0", g.s0);
  g.s1 = tab.real("growth.s1", g.s1);
  if (!(g.s0 < g.s && g.s < g.s1)) {
    Entry* e = tab.find("growth.s");
    if (!e) e = tab.find("growth.s0");
    if (!e) e = tab.find("growth.s1");
    if (!e) e = se;
    if (e) Table::fail(*e, "growth needs s0 < s < s1");
    throw ParseError("growth needs s0 < s < s1", 1, 1);
  }
  g.s_list = tab.list("growth.s_list", {0.0, g.s});
  g.interpolation_times = tab.list("growth.interpolation_times", g.interpolation_times);
  g.reduction_samples = static_cast<int>(tab.integer("growth.reduction_samples", g.reduction_samples));
  g.matrix_dt = tab.real("growth.matrix_dt", g.matrix_dt);
  g.interpolation_tol = tab.real("growth.tolerance", g.interpolation_tol);
  g.reduction = c.reduction;
  if (!(g.T > 0.0)) Table::fail(*tab.find("growth.T"), "T must be positive");
  if (!(g.dt > 0.0)) Table::fail(*tab.find("growth.dt"), "dt must be positive");
  if (!(g.matrix_dt > 0.0)) Table::fail(*tab.find("growth.matrix_dt"), "matrix_dt must be positive");

  c.cross_check = tab.boolean("cross.enabled", c.cross_check);
  c.cross_t1 = tab.real("cross.t1", c.t0 + 1.0);
  c.cross_samples = static_cast<int>(tab.integer("cross.samples", c.cross_samples));
  if (c.cross_samples < 2) Table::fail(*tab.find("cross.samples"), "samples must be at least 2");

  c.init.u0 = tab.text("initial.u0", "");
  if (Entry* e = tab.find("initial.u0")) {
    const ExpPoly f = parse_potential(e->value, e->line, e->column);
    if (!f.time_independent()) Table::fail(*e, "u0 cannot depend on t");
  }
  c.init.decay = tab.real("initial.decay", c.init.decay);

  for (const auto& [key, e] : tab.entries)
    if (!e.used) throw ParseError("unknown key " + key, e.line, 1);

  revalidate(c);
  return c;
}

void revalidate(Config& cfg) {
  const double hi = std::max({cfg.t1, cfg.t0, cfg.t0 + cfg.growth.T});
  cfg.validation = validate(cfg.spec, std::min(cfg.t0, cfg.t1), hi);
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace torusnf

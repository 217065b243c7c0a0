#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <Eigen/Core>

#include "torusnf/config.hpp"
#include "torusnf/io.hpp"
#include "torusnf/verify.hpp"

using namespace torusnf;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kNumerical = 2;
constexpr int kContract = 3;
constexpr double kDriftTol = 1e-8;

struct Args {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<long> grid;
};

Config load(const Args& a) {
  Config c = a.config.empty() ? parse_config("") : load_config(a.config);
  if (a.out) c.out = *a.out;
  if (a.seed) c.seed = *a.seed;
  if (a.grid) {
    if (*a.grid < 8 || *a.grid % 2) throw ParseError("--grid must be even and at least 8", 0, 0);
    c.spec.N = *a.grid;
    revalidate(c);
  }
  return c;
}

void write_json(const fs::path& p, const json& j) { atomic_write(p, j.dump(2) + "\n"); }

json spec_json(const Config& c) {
  return {{"N", c.spec.N},         {"M", c.spec.M},       {"frak_e", c.spec.frak_e},
          {"K", c.spec.K},         {"V", c.V_text},       {"W", c.W_text},
          {"h_t", c.spec.h_t},     {"substeps", c.spec.substeps},
          {"delta", c.validation.delta}, {"seed", c.seed}};
}

json ledger_json(const std::vector<ReductionStep>& ledger) {
  json a = json::array();
  for (const auto& s : ledger)
    a.push_back({{"n", s.n},
                 {"fitted_order_w", s.fitted_order_w},
                 {"fit_valid", s.fit_valid},
                 {"bound", s.bound},
                 {"hermiticity_residual", s.hermiticity_residual},
                 {"mu_imag", s.mu_imag}});
  return a;
}

void print_ledger(std::FILE* f, const std::vector<ReductionStep>& ledger) {
  std::fprintf(f, "  n  order(w_n)  bound   valid  mu_imag\n");
  for (const auto& s : ledger)
    std::fprintf(f, "  %d  %10.4f  %6.3f  %d      %.2e\n", s.n, s.fitted_order_w, s.bound, s.fit_valid ? 1 : 0,
                 s.mu_imag);
}

int cmd_verify(const Args& a) {
  Config c = load(a);
  const VerifyReport rep = verify_calculus(c.spec.N, c.seed);
  json checks = json::array();
  for (const auto& r : rep.checks) {
    std::printf("%-36s %-8s residual=%.3e tol=%.1e%s%s\n", r.name.c_str(), status_name(r.status), r.residual, r.tol,
                r.note.empty() ? "" : "  ", r.note.c_str());
    if (r.status == CheckStatus::Skipped) std::fprintf(stderr, "warning: %s skipped: %s\n", r.name.c_str(), r.note.c_str());
    checks.push_back({{"name", r.name}, {"status", status_name(r.status)}, {"residual", r.residual}, {"tol", r.tol},
                      {"note", r.note}});
  }
  const int fails = rep.count(CheckStatus::Fail);
  const int skips = rep.count(CheckStatus::Skipped);
  const char* status = fails ? "fail" : skips ? "skipped-with-warning" : "pass";
  std::printf("verify-calculus N=%ld seed=%llu: %s (%d failed, %d skipped)\n", static_cast<long>(rep.N),
              static_cast<unsigned long long>(rep.seed), status, fails, skips);
  write_json(fs::path(c.out) / "verify.json", {{"N", rep.N}, {"seed", rep.seed}, {"status", status}, {"checks", checks}});
  return fails ? kNumerical : 0;
}

int cmd_reduce(const Args& a) {
  Config c = load(a);
  const fs::path out(c.out);
  const auto times = time_independent(c.spec) ? std::vector<double>{c.t0} : uniform_times(c.t0, c.t1, c.reduction_samples);
  std::vector<ReductionResult> results;
  for (double t : times) {
    try {
      results.push_back(run_reduction(c.spec, t, c.reduction));
    } catch (const ReductionStall& e) {
      std::fprintf(stderr, "reduction stalled at t=%g\n", t);
      print_ledger(stderr, e.ledger());
      atomic_write(out / "ledger.csv", ledger_csv(e.ledger(), t));
      throw;
    }
  }
  atomic_write(out / "ledger.csv", ledger_csv(results));
  atomic_write(out / "lambda.csv", lambda_csv(results));
  atomic_write(out / "wk.csv", matrix_csv(results));
  json samples = json::array();
  for (const auto& r : results) {
    std::printf("t=%g lambda=%.12g N_K=%d pushforward=%.3e\n", r.t, r.lambda, r.N_K, r.pushforward_residual);
    print_ledger(stdout, r.ledger);
    samples.push_back({{"t", r.t},
                       {"lambda", r.lambda},
                       {"N_K", r.N_K},
                       {"ebar", r.ebar},
                       {"pushforward_residual", r.pushforward_residual},
                       {"ledger", ledger_json(r.ledger)}});
  }
  write_json(out / "summary.json", {{"command", "reduce"}, {"spec", spec_json(c)}, {"samples", samples}});
  return 0;
}

int cmd_propagate(const Args& a) {
  Config c = load(a);
  const fs::path out(c.out);
  const VectorXcd u0 = initial_state(c.init, c.spec.N, c.seed);
  PropagateOptions po;
  po.t0 = c.t0;
  po.t1 = c.t1;
  po.dt = c.dt;
  po.s_list = c.s_list;
  const Trajectory tr = propagate(c.spec, u0, po);
  atomic_write(out / "trajectory.csv", trajectory_csv(tr));
  const double drift = tr.l2_drift();
  json last = json::object();
  last["l2"] = tr.norms(tr.norms.rows() - 1, 0);
  for (std::size_t j = 0; j < tr.s_list.size(); ++j)
    last["hs_" + std::to_string(tr.s_list[j])] = tr.norms(tr.norms.rows() - 1, static_cast<Index>(j) + 1);
  write_json(out / "summary.json", {{"command", "propagate"},
                                    {"spec", spec_json(c)},
                                    {"t0", c.t0},
                                    {"t1", c.t1},
                                    {"dt", c.dt},
                                    {"steps", tr.steps},
                                    {"l2_drift", drift},
                                    {"final", last}});
  std::printf("propagate [%g, %g] dt=%g steps=%d l2 drift=%.3e\n", c.t0, c.t1, c.dt, tr.steps, drift);
  if (drift > kDriftTol) {
    std::fprintf(stderr, "error: L2 drift %.3e exceeds %.0e\n", drift, kDriftTol);
    return kNumerical;
  }
  return 0;
}

int cmd_growth(const Args& a) {
  Config c = load(a);
  const fs::path out(c.out);
  const VectorXcd u0 = initial_state(c.init, c.spec.N, c.seed);
  GrowthOptions go = c.growth;
  go.t0 = c.t0;
  go.reduction = c.reduction;
  const GrowthReport rep = growth_experiment(c.spec, u0, go);
  atomic_write(out / "trajectory.csv", trajectory_csv(rep.trajectory));
  atomic_write(out / "interpolation.csv", interpolation_csv(rep.interpolation));

  std::printf("growth T=%g s=%g: C_T=%.6g C_W=%.6g envelope margin=%.6g (%s)\n", go.T, go.s, rep.C_T, rep.C_W,
              rep.envelope_margin, rep.envelope_ok ? "ok" : "violated");
  for (std::size_t j = 0; j < rep.slopes.size(); ++j)
    std::printf("  slope of log||u||_H^%g vs log(1+t): %.4f\n", rep.trajectory.s_list[j], rep.slopes[j]);
  for (const auto& r : rep.interpolation)
    std::printf("  t=%g (%g,%g,%g): ||U||_s=%.6g bound=%.6g ratio=%.4f %s\n", r.t, r.s0, r.s, r.s1, r.norm_s, r.bound,
                r.ratio, r.ok ? "ok" : "violated");

  json j = {{"command", "growth"},
            {"spec", spec_json(c)},
            {"T", go.T},
            {"dt", go.dt},
            {"s", go.s},
            {"slopes", rep.slopes},
            {"C_T", rep.C_T},
            {"C_W", rep.C_W},
            {"reduction_times", rep.reduction_times},
            {"envelope_margin", rep.envelope_margin},
            {"envelope_ok", rep.envelope_ok},
            {"interpolation_ok", rep.interpolation_ok},
            {"l2_drift", rep.trajectory.l2_drift()}};

  if (c.cross_check) {
    const auto times = time_independent(c.spec) ? std::vector<double>{c.t0}
                                                : uniform_times(c.t0, c.cross_t1, c.cross_samples);
    const ReducedModel model = reduced_model(c.spec, times, c.reduction);
    PropagateOptions po;
    po.t0 = c.t0;
    po.t1 = c.cross_t1;
    po.dt = c.dt;
    po.s_list = go.s_list;
    const CrossCheck cc = cross_propagation(c.spec, model, u0, po);
    atomic_write(out / "reduced_trajectory.csv", trajectory_csv(propagate_reduced(model, u0, po)));
    atomic_write(out / "cross.csv", cross_csv(cc));
    std::printf("cross-check [%g, %g], %zu reductions: sup error %.3e\n", c.t0, c.cross_t1, times.size(),
                cc.sup_error);
    j["cross_sup_error"] = cc.sup_error;
  }
  write_json(out / "summary.json", j);
  return rep.envelope_ok && rep.interpolation_ok ? 0 : kContract;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("TORUSNF_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"normal-form reduction and propagation on the torus"};
  app.require_subcommand(1);
  Args args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--seed", args.seed, "random seed");
    sub->add_option("--grid", args.grid, "override the number of modes N");
  };
  std::function<int(const Args&)> run;
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Args&);
  };
  for (const Sub& s : {Sub{"verify-calculus", "Fourier and calculus invariants", cmd_verify},
                       Sub{"reduce", "normal-form reduction", cmd_reduce},
                       Sub{"propagate", "evolve an initial state", cmd_propagate},
                       Sub{"growth", "Sobolev growth experiment", cmd_growth}}) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    sub->callback([&run, fn = s.fn] { run = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(args);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
}

#include "tumoropt/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "tumoropt/io.hpp"
#include "tumoropt/verify.hpp"

namespace tumoropt {

namespace {

namespace fs = std::filesystem;

constexpr double kDotProductBound = 1e-10;
constexpr double kOrderLo = 1.9;
constexpr double kOrderHi = 2.1;
constexpr double kDirectionalBound = 1e-6;
constexpr double kOdeOrderLo = 0.9;
constexpr double kOdeOrderHi = 1.1;
constexpr double kLipschitzSpread = 0.1;

struct Context {
  RunConfig cfg;
  RunSetup setup;
  fs::path outdir;
};

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file " + path.string(), 0, "");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

/// One log record, rendered as key=value pairs or as a CSV row.
class LogWriter {
 public:
  LogWriter(const fs::path& path, std::string format) : os_(path, std::ios::binary), format_(std::move(format)) {
    if (!os_) throw SnapshotError("cannot open log " + path.string());
  }

  void record(const std::vector<std::pair<std::string, std::string>>& kv) {
    if (format_ == "csv") {
      if (!header_written_) {
        for (std::size_t i = 0; i < kv.size(); ++i) os_ << (i ? "," : "") << kv[i].first;
        os_ << "\n";
        header_written_ = true;
      }
      for (std::size_t i = 0; i < kv.size(); ++i) os_ << (i ? "," : "") << kv[i].second;
    } else {
      for (std::size_t i = 0; i < kv.size(); ++i) os_ << (i ? " " : "") << kv[i].first << "=" << kv[i].second;
    }
    os_ << "\n";
  }

 private:
  std::ofstream os_;
  std::string format_;
  bool header_written_ = false;
};

std::string kv_line(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (std::size_t i = 0; i < kv.size(); ++i) s += (i ? " " : "") + kv[i].first + "=" + kv[i].second;
  return s;
}

std::string level_name(const std::string& stem, int level) {
  std::ostringstream ss;
  ss << stem << "_" << std::setw(6) << std::setfill('0') << level << ".csv";
  return ss.str();
}

void write_sidecar(const fs::path& outdir, const std::string& subcommand) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ofstream os(outdir / "run_info.txt");
  os << "subcommand=" << subcommand << " started=" << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ")
     << "\n";
}

Context prepare(const fs::path& config_path, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_config(read_text(config_path));
  for (const auto& o : overrides) apply_override(cfg, o);
  if (const char* env = std::getenv("RUN_SEED"); env && *env) {
    try {
      override_seeds(cfg, std::stoull(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("RUN_SEED is not an unsigned integer: ") + env, 0, "RUN_SEED");
    }
  }
  RunSetup setup = build_run(cfg, config_path.parent_path());
  fs::path outdir = cfg.outdir;
  return Context{std::move(cfg), std::move(setup), std::move(outdir)};
}

void prepare_outdir(const Context& ctx, const std::string& subcommand) {
  fs::create_directories(ctx.outdir);
  std::ofstream(ctx.outdir / "effective.cfg", std::ios::binary) << serialize_config(ctx.cfg);
  write_sidecar(ctx.outdir, subcommand);
}

int cmd_simulate(Context& ctx, std::ostream& out) {
  prepare_outdir(ctx, "simulate");
  const auto& pr = ctx.setup.problem;
  const StateTrajectory traj = simulate(pr.params, pr.phi0, pr.sigma0, ctx.setup.u0);
  const fs::path snaps = ctx.outdir / "snapshots";
  fs::create_directories(snaps);
  const int n_steps = traj.n_steps();
  for (int n = 0; n <= n_steps; ++n) {
    const bool keep = n == 0 || n == n_steps || (ctx.cfg.snapshot_every > 0 && n % ctx.cfg.snapshot_every == 0);
    if (!keep) continue;
    const auto i = static_cast<std::size_t>(n);
    write_snapshot(traj.phi[i], {traj.time(n)}, snaps / level_name("phi", n));
    write_snapshot(traj.sigma[i], {traj.time(n)}, snaps / level_name("sigma", n));
  }
  LogWriter log(ctx.outdir / "diagnostics.log", ctx.cfg.log_format);
  double worst_mass = 0.0;
  for (const auto& d : traj.diagnostics) {
    worst_mass = std::max(worst_mass, std::abs(d.mass_residual));
    log.record({{"step", std::to_string(d.step)},
                {"t", format_double(d.time)},
                {"mass", format_double(d.mass)},
                {"mass_residual", format_double(d.mass_residual)},
                {"energy", format_double(d.energy)},
                {"cg_phi", std::to_string(d.cg_iterations_phi)},
                {"cg_sigma", std::to_string(d.cg_iterations_sigma)}});
  }
  for (const auto& w : traj.warnings) out << "warning=" << quoted(w) << "\n";
  const double e_final = energy(pr.params, traj.phi.back(), traj.sigma.back());
  out << kv_line({{"subcommand", "simulate"},
                  {"steps", std::to_string(n_steps)},
                  {"final_energy", format_double(e_final)},
                  {"max_mass_residual", format_double(worst_mass)},
                  {"status", "pass"}})
      << "\n";
  return exit_pass;
}

int cmd_optimize(Context& ctx, std::ostream& out) {
  prepare_outdir(ctx, "optimize");
  const auto& pr = ctx.setup.problem;
  LogWriter log(ctx.outdir / "optimize.log", ctx.cfg.log_format);
  const OptimResult res = projected_gradient(pr, ctx.setup.u0, ctx.setup.opt, [&](const IterationRecord& r) {
    std::vector<std::pair<std::string, std::string>> kv = {{"iter", std::to_string(r.iteration)},
                                                           {"cost", format_double(r.cost)},
                                                           {"step", format_double(r.step)},
                                                           {"stationarity", format_double(r.stationarity)}};
    log.record(kv);
    out << kv_line(kv) << "\n";
  });
  const fs::path ctrl = ctx.outdir / "control";
  fs::create_directories(ctrl);
  for (int n = 0; n < res.control.n_levels(); ++n)
    write_snapshot(res.control.levels[static_cast<std::size_t>(n)], {n * pr.params.tau}, ctrl / level_name("u", n));

  const CostGradient final_state = cost_and_gradient(pr, res.control);
  const KktReport kkt = kkt_report(pr.params, res.control, final_state.adjoint, 10.0 * ctx.setup.opt.tol);
  std::vector<std::pair<std::string, std::string>> summary = {
      {"subcommand", "optimize"},
      {"termination", to_string(res.termination)},
      {"iterations", std::to_string(res.iterations)},
      {"cost", format_double(res.cost_history.back())},
      {"kkt_residual", format_double(res.kkt_residual)},
      {"kkt_violations", std::to_string(kkt.violations)},
      {"projection_gap", format_double(kkt.projection_gap)},
      {"status", res.termination == Termination::tolerance_met ? "pass" : "fail"}};
  std::ofstream(ctx.outdir / "result.txt", std::ios::binary) << kv_line(summary) << "\n";
  out << kv_line(summary) << "\n";
  return res.termination == Termination::tolerance_met ? exit_pass : exit_criteria_failed;
}

int cmd_grad_check(Context& ctx, std::ostream& out) {
  const auto& p = ctx.setup.problem.params;
  const DotProductReport rep = dot_product_test(p, p.grid, p.n_steps(), ctx.cfg.seed);
  out << "test=single_step discrepancy=" << format_double(rep.single_step) << "\n";
  out << "test=full_horizon discrepancy=" << format_double(rep.full_horizon) << "\n";
  out << "test=adjoint_tracking discrepancy=" << format_double(rep.adjoint_tracking) << "\n";
  const bool ok = rep.max() <= kDotProductBound;
  out << kv_line({{"subcommand", "grad-check"},
                  {"max_discrepancy", format_double(rep.max())},
                  {"bound", format_double(kDotProductBound)},
                  {"status", ok ? "pass" : "fail"}})
      << "\n";
  return ok ? exit_pass : exit_criteria_failed;
}

void print_sweep(std::ostream& out, const std::string& name, const TaylorReport& rep) {
  for (const auto& r : rep.rows)
    out << "sweep=" << name << " eps=" << format_double(r.eps) << " remainder=" << format_double(r.remainder)
        << " order=" << format_double(r.order) << "\n";
  out << "sweep=" << name << " fitted_slope=" << format_double(rep.slope) << "\n";
}

int cmd_taylor(Context& ctx, std::ostream& out) {
  const auto& pr = ctx.setup.problem;
  const auto h = random_levels(pr.params.grid, pr.params.n_steps(), ctx.cfg.seed, ctx.cfg.direction_amplitude);
  const TaylorReport grad =
      taylor_gradient(pr, ctx.setup.u0, h, {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5}, 1e-3);
  const TaylorReport state = taylor_state(pr, ctx.setup.u0, h, {1e-1, 3e-2, 1e-2, 3e-3});
  print_sweep(out, "gradient", grad);
  out << "sweep=gradient directional_rel_error=" << format_double(grad.directional_rel_error) << " eps=0.001\n";
  print_sweep(out, "state", state);
  auto in_band = [](double s) { return s >= kOrderLo && s <= kOrderHi; };
  const bool ok = in_band(grad.slope) && in_band(state.slope) && grad.directional_rel_error <= kDirectionalBound;
  out << kv_line({{"subcommand", "taylor"}, {"status", ok ? "pass" : "fail"}}) << "\n";
  return ok ? exit_pass : exit_criteria_failed;
}

int cmd_oracle(Context& ctx, std::ostream& out) {
  const auto& pr = ctx.setup.problem;
  const double vol = pr.params.grid.domain_volume();
  const ScalarState start{integrate(pr.phi0) / vol, integrate(pr.sigma0) / vol};
  const double control = integrate(ctx.setup.u0.levels.front()) / vol;
  const double tau = pr.params.tau;
  const auto rows = ode_oracle_table(pr.params, start, control, {tau, tau / 2, tau / 4, tau / 8});
  bool ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << "tau=" << format_double(rows[i].tau) << " rel_error=" << format_double(rows[i].rel_error)
        << " order=" << format_double(rows[i].order) << "\n";
    if (i > 0) ok = ok && rows[i].order >= kOdeOrderLo && rows[i].order <= kOdeOrderHi;
  }
  out << kv_line({{"subcommand", "oracle"}, {"status", ok ? "pass" : "fail"}}) << "\n";
  return ok ? exit_pass : exit_criteria_failed;
}

int cmd_check_hypotheses(Context& ctx, std::ostream& out) {
  const HypothesisReport rep = check_hypotheses(ctx.setup.problem.params, -5.0, 5.0, 1001);
  for (const auto& c : rep.checks) {
    out << "hypothesis=" << c.name << " status=" << (c.passed ? "pass" : "fail");
    if (!c.detail.empty()) out << " detail=" << quoted(c.detail);
    out << "\n";
  }
  out << "alpha1=" << format_double(rep.alpha1) << " alpha2=" << format_double(rep.alpha2)
      << " alpha3=" << format_double(rep.alpha3) << " alpha4=" << format_double(rep.alpha4)
      << " alpha5=" << format_double(rep.alpha5) << " alpha6=" << format_double(rep.alpha6) << "\n";
  out << kv_line({{"subcommand", "check-hypotheses"}, {"status", rep.all_passed() ? "pass" : "fail"}}) << "\n";
  return rep.all_passed() ? exit_pass : exit_criteria_failed;
}

int cmd_lipschitz(Context& ctx, std::ostream& out) {
  const auto& pr = ctx.setup.problem;
  const auto h = random_levels(pr.params.grid, pr.params.n_steps(), ctx.cfg.seed, ctx.cfg.direction_amplitude);
  const StabilityReport rep = lipschitz_probe(pr.params, pr.phi0, pr.sigma0, ctx.setup.u0, h, {1e-1, 1e-2, 1e-3, 1e-4});
  for (const auto& r : rep.rows)
    out << "eps=" << format_double(r.eps) << " phi_linf_h=" << format_double(r.phi_linf_h)
        << " phi_l2_v=" << format_double(r.phi_l2_v) << " sigma_linf_h=" << format_double(r.sigma_linf_h)
        << " sigma_l2_h=" << format_double(r.sigma_l2_h) << "\n";
  const bool ok = rep.max_relative_spread <= kLipschitzSpread;
  out << kv_line({{"subcommand", "lipschitz"},
                  {"max_relative_spread", format_double(rep.max_relative_spread)},
                  {"status", ok ? "pass" : "fail"}})
      << "\n";
  return ok ? exit_pass : exit_criteria_failed;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"simulate", "optimize", "grad-check", "taylor",
                                                 "oracle",   "check-hypotheses", "lipschitz"};
  return names;
}

int run_subcommand(const std::string& name, const std::filesystem::path& config_path,
                   const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err) {
  try {
    Context ctx = prepare(config_path, overrides);
    if (name == "simulate") return cmd_simulate(ctx, out);
    if (name == "optimize") return cmd_optimize(ctx, out);
    if (name == "grad-check") return cmd_grad_check(ctx, out);
    if (name == "taylor") return cmd_taylor(ctx, out);
    if (name == "oracle") return cmd_oracle(ctx, out);
    if (name == "check-hypotheses") return cmd_check_hypotheses(ctx, out);
    if (name == "lipschitz") return cmd_lipschitz(ctx, out);
    err << "error=usage message=" << quoted("unknown subcommand '" + name + "'") << "\n";
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "error=config line=" << e.line() << " key=" << (e.key().empty() ? "-" : e.key())
        << " message=" << quoted(e.what()) << "\n";
    return exit_usage;
  } catch (const DivergenceError& e) {
    err << "error=divergence step=" << e.step() << " message=" << quoted(e.what()) << "\n";
    return exit_divergence;
  } catch (const ConvergenceError& e) {
    err << "error=convergence residual=" << format_double(e.residual()) << " message=" << quoted(e.what()) << "\n";
    return exit_divergence;
  } catch (const SnapshotError& e) {
    err << "error=snapshot message=" << quoted(e.what()) << "\n";
    return exit_usage;
  } catch (const UsageError& e) {
    err << "error=usage message=" << quoted(e.what()) << "\n";
    return exit_usage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error=io message=" << quoted(e.what()) << "\n";
    return exit_usage;
  }
}

}  // namespace tumoropt

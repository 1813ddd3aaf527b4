#include "tumoropt/verify.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>

namespace tumoropt {

namespace {

double relative_gap(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

ModelParams retarget(const ModelParams& params, const Grid& grid, int n_steps) {
  ModelParams p = params;
  p.grid = grid;
  p.u_min = Field(grid, params.u_min[0]);
  p.u_max = Field(grid, params.u_max[0]);
  p.phi_q = {Field(grid, params.phi_q.front()[0])};
  p.phi_omega = Field(grid, params.phi_omega[0]);
  p.t_final = n_steps * params.tau;
  return p;
}

std::vector<SweepRow> orders(const std::vector<double>& eps, const std::vector<double>& rem) {
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    SweepRow r{eps[i], rem[i], 0.0};
    if (i > 0) r.order = std::log(rem[i] / rem[i - 1]) / std::log(eps[i] / eps[i - 1]);
    rows.push_back(r);
  }
  return rows;
}

ControlSchedule shifted(const ControlSchedule& u, const std::vector<Field>& h, double eps) {
  ControlSchedule out = u;
  for (std::size_t n = 0; n < out.levels.size(); ++n) out.levels[n].axpy(eps, h[n]);
  return out;
}

}  // namespace

double fit_log_slope(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size() || eps.size() < 2) throw UsageError("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Field random_smooth_field(const Grid& grid, std::uint64_t seed, double amplitude, double mean) {
  return preset_field("filtered_noise", grid,
                      {{"seed", static_cast<double>(seed)},
                       {"amplitude", amplitude},
                       {"mean", mean},
                       {"kappa", 4.0 * grid.hx() * grid.hx()},
                       {"passes", 2.0}});
}

std::vector<Field> random_levels(const Grid& grid, int n_levels, std::uint64_t seed, double amplitude,
                                 double mean) {
  std::vector<Field> out;
  out.reserve(static_cast<std::size_t>(n_levels));
  for (int n = 0; n < n_levels; ++n)
    out.push_back(random_smooth_field(grid, seed * 7919u + static_cast<std::uint64_t>(n), amplitude, mean));
  return out;
}

double DotProductReport::max() const { return std::max({single_step, full_horizon, adjoint_tracking}); }

DotProductReport dot_product_test(const ModelParams& params, const Grid& grid, int n_steps, std::uint64_t seed) {
  const ModelParams p = retarget(params, grid, n_steps);
  const std::uint64_t base = seed * 1000003u;
  DotProductReport rep;

  {
    const Field phi = random_smooth_field(grid, base + 1, 0.8);
    const Field sigma = random_smooth_field(grid, base + 2, 0.5, 0.3);
    const Field xi = random_smooth_field(grid, base + 3, 1.0);
    const Field rho = random_smooth_field(grid, base + 4, 1.0);
    const Field h = random_smooth_field(grid, base + 5, 1.0);
    const Field a = random_smooth_field(grid, base + 6, 1.0);
    const Field b = random_smooth_field(grid, base + 7, 1.0);
    const TangentStep fwd = linearized_step(p, phi, sigma, xi, rho, h);
    const CotangentStep bwd = transpose_step(p, phi, sigma, a, b);
    const double lhs = inner_product(fwd.xi, a) + inner_product(fwd.rho, b);
    const double rhs = inner_product(xi, bwd.phi) + inner_product(rho, bwd.sigma) + inner_product(h, bwd.control);
    rep.single_step = relative_gap(lhs, rhs);
  }

  const Field phi0 = random_smooth_field(grid, base + 11, 0.8);
  const Field sigma0 = random_smooth_field(grid, base + 12, 0.5, 0.3);
  const ControlSchedule u = ControlSchedule::from_fields(p, random_levels(grid, n_steps, base + 13, 0.5));
  const StateTrajectory traj = simulate(p, phi0, sigma0, u);
  const std::vector<Field> h = random_levels(grid, n_steps, base + 14, 1.0);
  const LinearizedTrajectory lin = solve_linearized(p, traj, h);

  {
    std::vector<Field> cphi = random_levels(grid, n_steps + 1, base + 15, 1.0);
    std::vector<Field> csig = random_levels(grid, n_steps + 1, base + 16, 1.0);
    cphi[0] = Field(grid);
    csig[0] = Field(grid);
    double lhs = 0.0;
    for (int n = 1; n <= n_steps; ++n) {
      const auto i = static_cast<std::size_t>(n);
      lhs += inner_product(cphi[i], lin.xi[i]) + inner_product(csig[i], lin.rho[i]);
    }
    const std::vector<Field> pulled = pullback_controls(p, traj, cphi, csig);
    double rhs = 0.0;
    for (int n = 0; n < n_steps; ++n) {
      const auto i = static_cast<std::size_t>(n);
      rhs += inner_product(pulled[i], h[i]);
    }
    rep.full_horizon = relative_gap(lhs, rhs);
  }

  {
    ModelParams pt = p;
    pt.beta_q = 1.0;
    pt.beta_omega = 0.5;
    pt.phi_q = {random_smooth_field(grid, base + 17, 0.5)};
    pt.phi_omega = random_smooth_field(grid, base + 18, 0.5);
    const AdjointTrajectory adj = solve_adjoint(pt, traj);
    double lhs = 0.0;
    for (int n = 1; n <= n_steps; ++n) {
      const auto i = static_cast<std::size_t>(n);
      lhs += pt.tau * pt.beta_q * inner_product(traj.phi[i] - pt.phi_q_at(n), lin.xi[i]);
    }
    lhs += pt.beta_omega * inner_product(traj.phi.back() - pt.phi_omega, lin.xi.back());
    const double rhs = l2q_inner(adj.lift, h, pt.tau);
    rep.adjoint_tracking = relative_gap(lhs, rhs);
  }
  return rep;
}

TaylorReport taylor_gradient(const ControlProblem& problem, const ControlSchedule& u, const std::vector<Field>& h,
                             const std::vector<double>& eps_values, double check_eps) {
  const double tau = problem.params.tau;
  const CostGradient base = cost_and_gradient(problem, u);
  TaylorReport rep;
  rep.directional_derivative = l2q_inner(base.gradient, h, tau);
  std::vector<double> rem;
  for (double eps : eps_values) {
    const double j = reduced_cost(problem, shifted(u, h, eps));
    rem.push_back(std::abs(j - base.cost - eps * rep.directional_derivative));
  }
  rep.rows = orders(eps_values, rem);
  rep.slope = fit_log_slope(eps_values, rem);
  const double jp = reduced_cost(problem, shifted(u, h, check_eps));
  const double jm = reduced_cost(problem, shifted(u, h, -check_eps));
  rep.central_difference = (jp - jm) / (2.0 * check_eps);
  rep.directional_rel_error = relative_gap(rep.central_difference, rep.directional_derivative);
  return rep;
}

TaylorReport taylor_state(const ControlProblem& problem, const ControlSchedule& u, const std::vector<Field>& h,
                          const std::vector<double>& eps_values) {
  const ModelParams& p = problem.params;
  const StateTrajectory base = simulate(p, problem.phi0, problem.sigma0, u);
  const LinearizedTrajectory lin = solve_linearized(p, base, h);
  TaylorReport rep;
  std::vector<double> rem;
  for (double eps : eps_values) {
    const StateTrajectory pert = simulate(p, problem.phi0, problem.sigma0, shifted(u, h, eps));
    double worst = 0.0;
    for (std::size_t n = 0; n < pert.phi.size(); ++n) {
      Field dphi = pert.phi[n] - base.phi[n];
      dphi.axpy(-eps, lin.xi[n]);
      Field dsig = pert.sigma[n] - base.sigma[n];
      dsig.axpy(-eps, lin.rho[n]);
      const double a = norm_h(dphi);
      const double b = norm_h(dsig);
      worst = std::max(worst, std::sqrt(a * a + b * b));
    }
    rem.push_back(worst);
  }
  rep.rows = orders(eps_values, rem);
  rep.slope = fit_log_slope(eps_values, rem);
  return rep;
}

ScalarState ode_reference(const ModelParams& params, ScalarState start, double control, double t_final,
                          double tol) {
  namespace odeint = boost::numeric::odeint;
  using state_type = std::array<double, 2>;
  const auto rhs = [&](const state_type& y, state_type& dy, double) {
    const double exchange = p_deriv(params.proliferation, 0, y[0]) * (y[1] - f_deriv(params.potential, 1, y[0]));
    dy[0] = exchange;
    dy[1] = -exchange + control;
  };
  state_type y{start.phi, start.sigma};
  odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<state_type>>(tol, tol), rhs, y,
                             0.0, t_final, t_final / 1000.0);
  return {y[0], y[1]};
}

std::vector<OracleRow> ode_oracle_table(const ModelParams& params, ScalarState start, double control,
                                        const std::vector<double>& taus) {
  const ScalarState ref = ode_reference(params, start, control, params.t_final);
  const double ref_norm = std::hypot(ref.phi, ref.sigma);
  std::vector<OracleRow> rows;
  for (double tau : taus) {
    ModelParams p = params;
    p.tau = tau;
    p.t_final = p.n_steps() * tau;
    const ControlSchedule u = ControlSchedule::from_fields(
        p, std::vector<Field>(static_cast<std::size_t>(p.n_steps()), Field(p.grid, control)));
    const StateTrajectory traj = simulate(p, Field(p.grid, start.phi), Field(p.grid, start.sigma), u);
    // Spatial mean; the fields stay constant up to solver tolerance.
    const double vol = p.grid.domain_volume();
    const double phi = integrate(traj.phi.back()) / vol;
    const double sigma = integrate(traj.sigma.back()) / vol;
    OracleRow row{tau, std::hypot(phi - ref.phi, sigma - ref.sigma) / ref_norm, 0.0};
    if (!rows.empty()) row.order = std::log(rows.back().rel_error / row.rel_error) / std::log(rows.back().tau / tau);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tumoropt

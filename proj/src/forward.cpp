#include "tumoropt/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tumoropt {

ControlSchedule::ControlSchedule(std::vector<Field> levels_, Field lower_, Field upper_)
    : levels(std::move(levels_)), lower(std::move(lower_)), upper(std::move(upper_)) {
  require_same_grid(lower, upper);
  for (const auto& f : levels) require_same_grid(f, lower);
}

ControlSchedule ControlSchedule::constant(const ModelParams& params, double value) {
  std::vector<Field> levels(static_cast<std::size_t>(params.n_steps()), Field(params.grid, value));
  return ControlSchedule(std::move(levels), params.u_min, params.u_max);
}

ControlSchedule ControlSchedule::from_fields(const ModelParams& params, std::vector<Field> levels) {
  if (static_cast<int>(levels.size()) != params.n_steps())
    throw UsageError("control schedule length does not match the number of time steps");
  return ControlSchedule(std::move(levels), params.u_min, params.u_max);
}

bool ControlSchedule::admissible() const {
  for (const auto& f : levels)
    for (std::size_t k = 0; k < f.size(); ++k)
      if (f[k] < lower[k] || f[k] > upper[k]) return false;
  return true;
}

double l2q_inner(const std::vector<Field>& a, const std::vector<Field>& b, double tau) {
  if (a.size() != b.size()) throw UsageError("space-time fields have different lengths");
  double sum = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) sum += inner_product(a[n], b[n]);
  return tau * sum;
}

double l2q_norm(const std::vector<Field>& a, double tau) { return std::sqrt(l2q_inner(a, a, tau)); }

Field chemical_potential(const ModelParams& params, const Field& phi) {
  Field mu = neumann_laplacian(phi);
  for (std::size_t k = 0; k < mu.size(); ++k) mu[k] = -mu[k] + f_deriv(params.potential, 1, phi[k]);
  return mu;
}

Field reaction(const ModelParams& params, const Field& phi, const Field& sigma) {
  Field r = chemical_potential(params, phi);
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] = p_deriv(params.proliferation, 0, phi[k]) * (sigma[k] - r[k]);
  return r;
}

LinearOperator phase_operator(const ModelParams& params) {
  const double tau = params.tau;
  const double s = params.stabilization;
  return [tau, s](const Field& in, Field& out) {
    Field lap = neumann_laplacian(in);
    neumann_laplacian(lap, out);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[k] + tau * (out[k] - s * lap[k]);
  };
}

LinearOperator nutrient_operator(const ModelParams& params) {
  const double tau = params.tau;
  return [tau](const Field& in, Field& out) {
    neumann_laplacian(in, out);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[k] - tau * out[k];
  };
}

StepResult step(const ModelParams& params, const Field& phi, const Field& sigma, const Field& u) {
  require_same_grid(phi, sigma);
  require_same_grid(phi, u);
  const double tau = params.tau;
  const double s = params.stabilization;

  const Field r = reaction(params, phi, sigma);

  Field explicit_part(phi.grid());
  for (std::size_t k = 0; k < phi.size(); ++k)
    explicit_part[k] = f_deriv(params.potential, 1, phi[k]) - s * phi[k];
  Field rhs_phi = neumann_laplacian(explicit_part);
  for (std::size_t k = 0; k < rhs_phi.size(); ++k) rhs_phi[k] = phi[k] + tau * (rhs_phi[k] + r[k]);

  Field rhs_sigma(sigma.grid());
  for (std::size_t k = 0; k < rhs_sigma.size(); ++k) rhs_sigma[k] = sigma[k] + tau * (u[k] - r[k]);

  StepResult out{Field(phi.grid()), Field(phi.grid()), {}, {}};
  out.phi = cg_solve(phase_operator(params), rhs_phi, params.solver.cg_tol, params.solver.cg_maxit, &phi,
                     &out.phi_stats);
  out.sigma = cg_solve(nutrient_operator(params), rhs_sigma, params.solver.cg_tol, params.solver.cg_maxit,
                       &sigma, &out.sigma_stats);
  return out;
}

namespace {

void guard(const Field& f, double limit, int n, const char* name) {
  if (!f.all_finite() || f.max_abs() > limit) {
    std::ostringstream msg;
    msg << "divergence at step " << n << ": |" << name << "| exceeded overflow guard " << limit;
    throw DivergenceError(msg.str(), n);
  }
}

}  // namespace

StateTrajectory simulate(const ModelParams& params, const Field& phi0, const Field& sigma0,
                         const ControlSchedule& u) {
  require_same_grid(phi0, sigma0);
  if (!(phi0.grid() == params.grid)) throw UsageError("initial data grid differs from model grid");
  const int n_steps = params.n_steps();
  if (u.n_levels() != n_steps) throw UsageError("control schedule length does not match the number of time steps");

  StateTrajectory traj{params.grid, params.tau, {}, {}, {}, {}};
  traj.phi.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.sigma.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.phi.push_back(phi0);
  traj.sigma.push_back(sigma0);
  traj.diagnostics.reserve(static_cast<std::size_t>(n_steps));

  double mass = integrate(phi0) + integrate(sigma0);
  double phi_max = phi0.max_abs();
  for (int n = 0; n < n_steps; ++n) {
    StepResult next = [&] {
      try {
        return step(params, traj.phi.back(), traj.sigma.back(), u.levels[static_cast<std::size_t>(n)]);
      } catch (const ConvergenceError& e) {
        std::ostringstream msg;
        msg << "step " << n << ": " << e.what();
        throw ConvergenceError(msg.str(), e.residual(), e.iterations());
      }
    }();
    guard(next.phi, params.solver.overflow_guard, n, "phi");
    guard(next.sigma, params.solver.overflow_guard, n, "sigma");

    StepDiagnostics d;
    d.step = n + 1;
    d.time = (n + 1) * params.tau;
    d.mass = integrate(next.phi) + integrate(next.sigma);
    d.mass_residual = d.mass - mass - params.tau * integrate(u.levels[static_cast<std::size_t>(n)]);
    d.energy = energy(params, next.phi, next.sigma);
    d.cg_iterations_phi = next.phi_stats.iterations;
    d.cg_iterations_sigma = next.sigma_stats.iterations;
    mass = d.mass;
    phi_max = std::max(phi_max, next.phi.max_abs());
    traj.diagnostics.push_back(d);
    traj.phi.push_back(std::move(next.phi));
    traj.sigma.push_back(std::move(next.sigma));
  }

  const double needed = params.potential.well_scale * (3.0 * phi_max * phi_max - 1.0);
  if (needed > params.stabilization) {
    std::ostringstream msg;
    msg << "stabilization S=" << params.stabilization << " is below max F'' = " << needed
        << " over the traversed range |phi| <= " << phi_max;
    traj.warnings.push_back(msg.str());
  }
  return traj;
}

double energy(const ModelParams& params, const Field& phi, const Field& sigma) {
  double bulk = 0.0;
  for (double v : phi.values()) bulk += f_deriv(params.potential, 0, v);
  bulk *= phi.grid().cell_volume();
  const double s = norm_h(sigma);
  return 0.5 * grad_sq_integral(phi) + bulk + 0.5 * s * s;
}

LipschitzRow lipschitz_ratios(const ModelParams& params, const Field& phi0, const Field& sigma0,
                              const ControlSchedule& u1, const ControlSchedule& u2) {
  const StateTrajectory a = simulate(params, phi0, sigma0, u1);
  const StateTrajectory b = simulate(params, phi0, sigma0, u2);
  std::vector<Field> du;
  du.reserve(u1.levels.size());
  for (std::size_t n = 0; n < u1.levels.size(); ++n) du.push_back(u1.levels[n] - u2.levels[n]);

  LipschitzRow row;
  row.control_distance = l2q_norm(du, params.tau);
  double phi_l2v = 0.0;
  double sigma_l2h = 0.0;
  for (std::size_t n = 0; n < a.phi.size(); ++n) {
    const Field dphi = a.phi[n] - b.phi[n];
    const Field dsig = a.sigma[n] - b.sigma[n];
    row.phi_linf_h = std::max(row.phi_linf_h, norm_h(dphi));
    row.sigma_linf_h = std::max(row.sigma_linf_h, norm_h(dsig));
    if (n > 0) {
      const double v = norm_v(dphi);
      const double h = norm_h(dsig);
      phi_l2v += params.tau * v * v;
      sigma_l2h += params.tau * h * h;
    }
  }
  row.phi_l2_v = std::sqrt(phi_l2v);
  row.sigma_l2_h = std::sqrt(sigma_l2h);
  if (row.control_distance > 0.0) {
    row.phi_linf_h /= row.control_distance;
    row.phi_l2_v /= row.control_distance;
    row.sigma_linf_h /= row.control_distance;
    row.sigma_l2_h /= row.control_distance;
  }
  return row;
}

StabilityReport lipschitz_probe(const ModelParams& params, const Field& phi0, const Field& sigma0,
                                const ControlSchedule& u1, const std::vector<Field>& direction,
                                const std::vector<double>& eps_values) {
  if (direction.size() != u1.levels.size()) throw UsageError("perturbation direction has wrong length");
  StabilityReport rep;
  for (double eps : eps_values) {
    ControlSchedule u2 = u1;
    for (std::size_t n = 0; n < u2.levels.size(); ++n) u2.levels[n].axpy(eps, direction[n]);
    LipschitzRow row = lipschitz_ratios(params, phi0, sigma0, u1, u2);
    row.eps = eps;
    rep.rows.push_back(row);
  }
  auto spread = [&](auto member) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& r : rep.rows) {
      const double v = r.*member;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
    rep.max_ratio = std::max(rep.max_ratio, hi);
    return hi > 0.0 ? (hi - lo) / hi : 0.0;
  };
  rep.max_relative_spread = std::max({spread(&LipschitzRow::phi_linf_h), spread(&LipschitzRow::phi_l2_v),
                                      spread(&LipschitzRow::sigma_linf_h), spread(&LipschitzRow::sigma_l2_h)});
  return rep;
}

}  // namespace tumoropt

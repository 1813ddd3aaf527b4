#include "tumoropt/sensitivity.hpp"

namespace tumoropt {

// Continuous correspondence of the discrete adjoint recursion: p is the
// co-state of phi, q = lap(p) - P(phi)(p - r) the co-state of mu and r the
// co-state of sigma. As tau -> 0 the backward recursion below tends to
//   -p_t + lap(q) - F''(phi) q + P'(phi)(sigma - mu)(r - p) = beta_q (phi - phi_q)
//   -r_t - lap(r) + P(phi)(r - p) = 0
// with p(T) = beta_omega (phi(T) - phi_omega), r(T) = 0.

Field LinearizedTrajectory::eta(const ModelParams& params, const StateTrajectory& base, int level) const {
  const auto n = static_cast<std::size_t>(level);
  Field out = neumann_laplacian(xi[n]);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = -out[k] + f_deriv(params.potential, 2, base.phi[n][k]) * xi[n][k];
  return out;
}

Field AdjointTrajectory::q(const ModelParams& params, const StateTrajectory& base, int level) const {
  const auto n = static_cast<std::size_t>(level);
  Field out = neumann_laplacian(p[n]);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] -= p_deriv(params.proliferation, 0, base.phi[n][k]) * (p[n][k] - r[n][k]);
  return out;
}

TangentStep linearized_step(const ModelParams& params, const Field& phi, const Field& sigma, const Field& xi,
                            const Field& rho, const Field& h) {
  require_same_grid(phi, xi);
  require_same_grid(phi, rho);
  require_same_grid(phi, h);
  const double tau = params.tau;
  const double s = params.stabilization;
  const Field mu = chemical_potential(params, phi);

  // eta = -lap(xi) + F''(phi) xi
  Field eta = neumann_laplacian(xi);
  for (std::size_t k = 0; k < eta.size(); ++k) eta[k] = -eta[k] + f_deriv(params.potential, 2, phi[k]) * xi[k];

  Field d_reaction(phi.grid());
  for (std::size_t k = 0; k < d_reaction.size(); ++k) {
    d_reaction[k] = p_deriv(params.proliferation, 1, phi[k]) * (sigma[k] - mu[k]) * xi[k] +
                    p_deriv(params.proliferation, 0, phi[k]) * (rho[k] - eta[k]);
  }

  Field weighted(phi.grid());
  for (std::size_t k = 0; k < weighted.size(); ++k)
    weighted[k] = (f_deriv(params.potential, 2, phi[k]) - s) * xi[k];
  Field rhs_xi = neumann_laplacian(weighted);
  for (std::size_t k = 0; k < rhs_xi.size(); ++k) rhs_xi[k] = xi[k] + tau * (rhs_xi[k] + d_reaction[k]);

  Field rhs_rho(phi.grid());
  for (std::size_t k = 0; k < rhs_rho.size(); ++k) rhs_rho[k] = rho[k] + tau * (h[k] - d_reaction[k]);

  return {cg_solve(phase_operator(params), rhs_xi, params.solver.cg_tol, params.solver.cg_maxit),
          cg_solve(nutrient_operator(params), rhs_rho, params.solver.cg_tol, params.solver.cg_maxit)};
}

CotangentStep transpose_step(const ModelParams& params, const Field& phi, const Field& sigma, const Field& a,
                             const Field& b) {
  require_same_grid(phi, a);
  require_same_grid(phi, b);
  const double tau = params.tau;
  const double s = params.stabilization;
  const Field mu = chemical_potential(params, phi);

  // Both implicit operators are symmetric, so their inverses transpose to themselves.
  const Field a_bar = cg_solve(phase_operator(params), a, params.solver.cg_tol, params.solver.cg_maxit);
  const Field b_bar = cg_solve(nutrient_operator(params), b, params.solver.cg_tol, params.solver.cg_maxit);

  // Cotangent of the linearised reaction.
  Field w(phi.grid());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = tau * (a_bar[k] - b_bar[k]);

  Field pw(phi.grid());
  for (std::size_t k = 0; k < pw.size(); ++k) pw[k] = p_deriv(params.proliferation, 0, phi[k]) * w[k];

  const Field lap_a = neumann_laplacian(a_bar);
  const Field lap_pw = neumann_laplacian(pw);

  CotangentStep out{Field(phi.grid()), Field(phi.grid()), Field(phi.grid())};
  for (std::size_t k = 0; k < out.phi.size(); ++k) {
    const double fpp = f_deriv(params.potential, 2, phi[k]);
    out.phi[k] = a_bar[k] + tau * (fpp - s) * lap_a[k] +
                 p_deriv(params.proliferation, 1, phi[k]) * (sigma[k] - mu[k]) * w[k] + lap_pw[k] - fpp * pw[k];
    out.sigma[k] = b_bar[k] + pw[k];
    out.control[k] = tau * b_bar[k];
  }
  return out;
}

AdjointStep adjoint_step(const ModelParams& params, const StateTrajectory& base, int level, const Field& p_next,
                         const Field& r_next) {
  const auto n = static_cast<std::size_t>(level);
  Field a = p_next;
  const Field& target = params.phi_q_at(level + 1);
  const Field& phi_next = base.phi[n + 1];
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += params.tau * params.beta_q * (phi_next[k] - target[k]);

  CotangentStep t = transpose_step(params, base.phi[n], base.sigma[n], a, r_next);
  Field lift = std::move(t.control);
  lift *= 1.0 / params.tau;
  return {std::move(t.phi), std::move(t.sigma), std::move(lift)};
}

LinearizedTrajectory solve_linearized(const ModelParams& params, const StateTrajectory& base,
                                      const std::vector<Field>& direction) {
  const int n_steps = base.n_steps();
  if (static_cast<int>(direction.size()) != n_steps) throw UsageError("direction length does not match trajectory");
  LinearizedTrajectory lin;
  lin.xi.reserve(static_cast<std::size_t>(n_steps) + 1);
  lin.rho.reserve(static_cast<std::size_t>(n_steps) + 1);
  lin.xi.emplace_back(base.grid);
  lin.rho.emplace_back(base.grid);
  for (std::size_t n = 0; n < static_cast<std::size_t>(n_steps); ++n) {
    TangentStep t = linearized_step(params, base.phi[n], base.sigma[n], lin.xi[n], lin.rho[n], direction[n]);
    lin.xi.push_back(std::move(t.xi));
    lin.rho.push_back(std::move(t.rho));
  }
  return lin;
}

AdjointTrajectory solve_adjoint(const ModelParams& params, const StateTrajectory& base) {
  const int n_steps = base.n_steps();
  const auto last = static_cast<std::size_t>(n_steps);
  AdjointTrajectory adj;
  adj.p.assign(last + 1, Field(base.grid));
  adj.r.assign(last + 1, Field(base.grid));
  adj.lift.assign(last, Field(base.grid));

  adj.p[last] = base.phi[last] - params.phi_omega;
  adj.p[last] *= params.beta_omega;
  for (int n = n_steps - 1; n >= 0; --n) {
    const auto i = static_cast<std::size_t>(n);
    AdjointStep s = adjoint_step(params, base, n, adj.p[i + 1], adj.r[i + 1]);
    adj.p[i] = std::move(s.p);
    adj.r[i] = std::move(s.r);
    adj.lift[i] = std::move(s.lift);
  }
  return adj;
}

std::vector<Field> pullback_controls(const ModelParams& params, const StateTrajectory& base,
                                     const std::vector<Field>& phi_cot, const std::vector<Field>& sigma_cot) {
  const int n_steps = base.n_steps();
  const auto levels = static_cast<std::size_t>(n_steps) + 1;
  if (phi_cot.size() != levels || sigma_cot.size() != levels)
    throw UsageError("cotangent data must have one field per state level");
  std::vector<Field> out(static_cast<std::size_t>(n_steps), Field(base.grid));
  Field lam_phi(base.grid);
  Field lam_sigma(base.grid);
  for (int n = n_steps - 1; n >= 0; --n) {
    const auto i = static_cast<std::size_t>(n);
    CotangentStep t = transpose_step(params, base.phi[i], base.sigma[i], lam_phi + phi_cot[i + 1],
                                     lam_sigma + sigma_cot[i + 1]);
    out[i] = std::move(t.control);
    lam_phi = std::move(t.phi);
    lam_sigma = std::move(t.sigma);
  }
  return out;
}

std::vector<Field> reduced_gradient(const ModelParams& params, const ControlSchedule& u,
                                    const AdjointTrajectory& adjoint) {
  if (adjoint.lift.size() != u.levels.size()) throw UsageError("adjoint and control have different lengths");
  std::vector<Field> g;
  g.reserve(u.levels.size());
  for (std::size_t n = 0; n < u.levels.size(); ++n) {
    Field gn = adjoint.lift[n];
    gn.axpy(params.beta_u, u.levels[n]);
    g.push_back(std::move(gn));
  }
  return g;
}

}  // namespace tumoropt

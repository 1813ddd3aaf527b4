#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "tumoropt/optimizer.hpp"
#include "tumoropt/sensitivity.hpp"
#include "tumoropt/verify.hpp"

using namespace tumoropt;
using namespace testing_support;

namespace {

ModelParams small_params(int n, int steps) {
  ModelParams p = ModelParams::on_grid(Grid::line(n, 0.2 * n));
  p.tau = 1e-2;
  p.t_final = steps * p.tau;
  p.proliferation.p0 = 1.0;
  p.solver.cg_tol = 1e-14;
  return p;
}

double linf_pair(const Field& a, const Field& b) { return std::max(a.max_abs(), b.max_abs()); }

}  // namespace

TEST_SUITE("sensitivity") {

TEST_CASE("linearized step is zero at zero and homogeneous") {
  const ModelParams p = small_params(16, 1);
  const Field phi = random_smooth_field(p.grid, 1, 0.8);
  const Field sigma = random_smooth_field(p.grid, 2, 0.5, 0.3);
  const Field z(p.grid);
  const TangentStep zero = linearized_step(p, phi, sigma, z, z, z);
  CHECK(linf_pair(zero.xi, zero.rho) == 0.0);
  const Field xi = random_smooth_field(p.grid, 3, 1.0);
  const Field rho = random_smooth_field(p.grid, 4, 1.0);
  const Field h = random_smooth_field(p.grid, 5, 1.0);
  const TangentStep one = linearized_step(p, phi, sigma, xi, rho, h);
  const TangentStep two = linearized_step(p, phi, sigma, 2.0 * xi, 2.0 * rho, 2.0 * h);
  CHECK(linf_pair(two.xi - 2.0 * one.xi, two.rho - 2.0 * one.rho) <= 1e-12 * linf_pair(one.xi, one.rho));
}

TEST_CASE("linearized step matches central differences of step") {
  const ModelParams p = small_params(16, 1);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Field phi = random_smooth_field(p.grid, 10 * seed + 1, 0.8);
    const Field sigma = random_smooth_field(p.grid, 10 * seed + 2, 0.5, 0.3);
    const Field u = random_smooth_field(p.grid, 10 * seed + 3, 0.5);
    const Field xi = random_smooth_field(p.grid, 10 * seed + 4, 1.0);
    const Field rho = random_smooth_field(p.grid, 10 * seed + 5, 1.0);
    const Field h = random_smooth_field(p.grid, 10 * seed + 6, 1.0);
    const double eps = 1e-5;
    const StepResult plus = step(p, phi + eps * xi, sigma + eps * rho, u + eps * h);
    const StepResult minus = step(p, phi - eps * xi, sigma - eps * rho, u - eps * h);
    const Field fd_xi = (1.0 / (2.0 * eps)) * (plus.phi - minus.phi);
    const Field fd_rho = (1.0 / (2.0 * eps)) * (plus.sigma - minus.sigma);
    const TangentStep lin = linearized_step(p, phi, sigma, xi, rho, h);
    const double num = std::hypot(norm_h(lin.xi - fd_xi), norm_h(lin.rho - fd_rho));
    const double den = std::hypot(norm_h(lin.xi), norm_h(lin.rho));
    CHECK(num / den <= 1e-5);
  }
}

TEST_CASE("transpose step equals the dense Jacobian transpose on 8 cells") {
  const ModelParams p = small_params(8, 1);
  const Grid& g = p.grid;
  const auto n = static_cast<Eigen::Index>(g.size());
  const Field phi = random_smooth_field(g, 7, 0.8);
  const Field sigma = random_smooth_field(g, 8, 0.5, 0.3);

  Eigen::MatrixXd jac(2 * n, 3 * n);
  for (Eigen::Index j = 0; j < 3 * n; ++j) {
    Field in[3] = {Field(g), Field(g), Field(g)};
    in[j / n][static_cast<std::size_t>(j % n)] = 1.0;
    const TangentStep out = linearized_step(p, phi, sigma, in[0], in[1], in[2]);
    jac.col(j) << to_vec(out.xi), to_vec(out.rho);
  }
  Eigen::MatrixXd jt(3 * n, 2 * n);
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    Field a(g), b(g);
    (j < n ? a : b)[static_cast<std::size_t>(j % n)] = 1.0;
    const CotangentStep out = transpose_step(p, phi, sigma, a, b);
    jt.col(j) << to_vec(out.phi), to_vec(out.sigma), to_vec(out.control);
  }
  CHECK((jt - jac.transpose()).cwiseAbs().maxCoeff() <= 1e-9);

  // and the Jacobian itself agrees with a finite-difference assembly of step
  const Field u = random_smooth_field(g, 9, 0.5);
  const double eps = 1e-6;
  Eigen::MatrixXd fd(2 * n, 3 * n);
  for (Eigen::Index j = 0; j < 3 * n; ++j) {
    Field d[3] = {Field(g), Field(g), Field(g)};
    d[j / n][static_cast<std::size_t>(j % n)] = eps;
    const StepResult a = step(p, phi + d[0], sigma + d[1], u + d[2]);
    const StepResult b = step(p, phi - d[0], sigma - d[1], u - d[2]);
    fd.col(j) << (to_vec(a.phi) - to_vec(b.phi)) / (2 * eps), (to_vec(a.sigma) - to_vec(b.sigma)) / (2 * eps);
  }
  CHECK((fd - jac).cwiseAbs().maxCoeff() <= 1e-6 * jac.cwiseAbs().maxCoeff());
}

TEST_CASE("dot-product identities") {
  const ModelParams p = small_params(16, 8);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DotProductReport rep = dot_product_test(p, Grid::line(16, 3.2), 8, seed);
    CHECK(rep.single_step <= 1e-11);
    CHECK(rep.full_horizon <= 1e-10);
    CHECK(rep.adjoint_tracking <= 1e-10);
  }
}

TEST_CASE("dot-product discrepancy stays at roundoff when CG is tightened") {
  ModelParams loose = small_params(16, 8);
  loose.solver.cg_tol = 1e-12;
  ModelParams tight = loose;
  tight.solver.cg_tol = 1e-14;
  const double a = dot_product_test(loose, Grid::line(16, 3.2), 8, 5).max();
  const double b = dot_product_test(tight, Grid::line(16, 3.2), 8, 5).max();
  CHECK(a <= 1e-10);
  CHECK(b <= 1e-10);
}

TEST_CASE("solve_linearized is zero at zero and linear") {
  const ModelParams p = small_params(16, 6);
  const Field phi0 = random_smooth_field(p.grid, 1, 0.8);
  const Field sigma0 = random_smooth_field(p.grid, 2, 0.4, 0.3);
  const ControlSchedule u = ControlSchedule::from_fields(p, random_levels(p.grid, 6, 3, 0.5));
  const StateTrajectory base = simulate(p, phi0, sigma0, u);

  const LinearizedTrajectory zero = solve_linearized(p, base, std::vector<Field>(6, Field(p.grid)));
  for (std::size_t n = 0; n < zero.xi.size(); ++n) CHECK(linf_pair(zero.xi[n], zero.rho[n]) == 0.0);

  const auto h1 = random_levels(p.grid, 6, 4, 1.0);
  const auto h2 = random_levels(p.grid, 6, 5, 1.0);
  std::vector<Field> mix;
  for (std::size_t n = 0; n < 6; ++n) mix.push_back(-1.7 * h1[n] + h2[n]);
  const LinearizedTrajectory l1 = solve_linearized(p, base, h1);
  const LinearizedTrajectory l2 = solve_linearized(p, base, h2);
  const LinearizedTrajectory lm = solve_linearized(p, base, mix);
  CHECK(linf_pair(l1.xi[0], l1.rho[0]) == 0.0);
  for (std::size_t n = 1; n < lm.xi.size(); ++n) {
    const double scale = linf_pair(lm.xi[n], lm.rho[n]);
    CHECK((lm.xi[n] - (-1.7 * l1.xi[n] + l2.xi[n])).max_abs() <= 1e-12 * scale);
    CHECK((lm.rho[n] - (-1.7 * l1.rho[n] + l2.rho[n])).max_abs() <= 1e-12 * scale);
  }
  const Field eta = l1.eta(p, base, 3);
  CHECK(eta.all_finite());
}

TEST_CASE("adjoint terminal data and trivial cases") {
  ModelParams p = small_params(16, 6);
  p.beta_q = 0.0;
  p.beta_omega = 0.0;
  p.beta_u = 1.0;
  const Field phi0 = random_smooth_field(p.grid, 1, 0.8);
  const Field sigma0 = random_smooth_field(p.grid, 2, 0.4, 0.3);
  const ControlSchedule u = ControlSchedule::from_fields(p, random_levels(p.grid, 6, 3, 0.5));
  const StateTrajectory base = simulate(p, phi0, sigma0, u);
  AdjointTrajectory adj = solve_adjoint(p, base);
  for (std::size_t n = 0; n < adj.p.size(); ++n) CHECK(linf_pair(adj.p[n], adj.r[n]) == 0.0);
  const auto g = reduced_gradient(p, u, adj);
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(g[n] == u.levels[n]);

  p.beta_omega = 1.0;
  p.phi_omega = base.phi.back();
  adj = solve_adjoint(p, base);
  for (std::size_t n = 0; n < adj.p.size(); ++n) CHECK(linf_pair(adj.p[n], adj.r[n]) == 0.0);

  p.phi_omega = Field(p.grid, 0.1);
  p.beta_u = 0.0;
  adj = solve_adjoint(p, base);
  CHECK((adj.p.back() - (base.phi.back() - p.phi_omega)).max_abs() == 0.0);
  CHECK(adj.r.back().max_abs() == 0.0);
  const auto lift_only = reduced_gradient(p, u, adj);
  for (std::size_t n = 0; n < lift_only.size(); ++n) CHECK(lift_only[n] == adj.lift[n]);
  for (std::size_t n = 0; n < adj.p.size(); ++n) CHECK(std::isfinite(norm_h(adj.q(p, base, static_cast<int>(n)))));
}

TEST_CASE("adjoint step with zero data is zero") {
  ModelParams p = small_params(16, 4);
  p.beta_q = 0.0;
  p.beta_u = 1.0;
  const StateTrajectory base = simulate(p, random_smooth_field(p.grid, 1, 0.8), Field(p.grid, 0.2),
                                        ControlSchedule::constant(p, 0.1));
  const AdjointStep s = adjoint_step(p, base, 2, Field(p.grid), Field(p.grid));
  CHECK(linf_pair(s.p, s.r) == 0.0);
  CHECK(s.lift.max_abs() == 0.0);
}

TEST_CASE("Taylor remainders decay at second order") {
  ModelParams p = ModelParams::on_grid(Grid::line(32, 6.4));
  p.tau = 1e-3;
  p.t_final = 0.2;
  p.proliferation.p0 = 2.0;
  p.beta_q = 1.0;
  p.beta_omega = 0.5;
  p.beta_u = 0.01;
  p.solver.cg_tol = 1e-14;
  p.phi_q = {preset_field("tanh_ball", p.grid, {{"radius", 1.0}, {"eps", 1.0}})};
  p.phi_omega = p.phi_q.front();
  const ControlProblem pr{p, preset_field("tanh_ball", p.grid, {{"radius", 1.5}, {"eps", 1.0}}), Field(p.grid, 0.5)};
  const ControlSchedule u = ControlSchedule::constant(p, 0.2);
  const auto h = random_levels(p.grid, u.n_levels(), 2, 2.0);

  const TaylorReport st = taylor_state(pr, u, h, {1e-1, 3e-2, 1e-2, 3e-3});
  CHECK(st.slope >= 1.9);
  CHECK(st.slope <= 2.1);

  const TaylorReport gr = taylor_gradient(pr, u, h, {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5});
  CHECK(gr.slope >= 1.9);
  CHECK(gr.slope <= 2.1);
  CHECK(gr.directional_rel_error <= 1e-6);
}

}

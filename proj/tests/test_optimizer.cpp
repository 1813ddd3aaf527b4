#include "doctest.h"

#include <cmath>

#include "tumoropt/optimizer.hpp"
#include "tumoropt/verify.hpp"

using namespace tumoropt;

namespace {

ModelParams control_only(const Grid& g, double lo, double hi) {
  ModelParams p = ModelParams::on_grid(g);
  p.beta_q = 0.0;
  p.beta_omega = 0.0;
  p.beta_u = 1.0;
  p.tau = 1e-2;
  p.t_final = 0.1;
  p.u_min = Field(g, lo);
  p.u_max = Field(g, hi);
  return p;
}

ControlProblem tracking_problem() {
  ModelParams p = ModelParams::on_grid(Grid::line(64, 12.8));
  p.tau = 1e-3;
  p.t_final = 0.1;
  p.beta_q = 1.0;
  p.beta_omega = 0.5;
  p.beta_u = 1e-2;
  p.phi_q = {preset_field("tanh_ball", p.grid, {{"radius", 2.0}, {"eps", 1.0}})};
  p.phi_omega = p.phi_q.front();
  return {p, preset_field("tanh_ball", p.grid, {{"radius", 3.0}, {"eps", 1.0}}), Field(p.grid, 0.5)};
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("reduced cost of trivial instances") {
  ModelParams p = ModelParams::on_grid(Grid::line(8, 1.0));
  p.beta_omega = 1.0;
  p.beta_u = 1.0;
  p.phi_q = {Field(p.grid, 1.0)};
  p.phi_omega = Field(p.grid, 1.0);
  CHECK(reduced_cost({p, Field(p.grid, 1.0), Field(p.grid)}, ControlSchedule::constant(p, 0.0)) <= 1e-24);

  const ModelParams q = control_only(Grid::line(8, 1.0), -1.0, 1.0);
  const double c = 0.6;
  CHECK(reduced_cost({q, Field(q.grid, 0.3), Field(q.grid, 0.1)}, ControlSchedule::constant(q, c)) ==
        doctest::Approx(0.5 * c * c * q.t_final).epsilon(1e-13));
}

TEST_CASE("reduced cost of a constant instance follows the ODE quadrature") {
  ModelParams p = ModelParams::on_grid(Grid::line(4, 1.0));
  p.beta_q = 1.0;
  p.beta_omega = 0.0;
  p.phi_q = {Field(p.grid, 0.0)};
  p.t_final = 0.1;
  const ScalarState start{0.3, 0.8};
  const double c = 0.5;
  // Right-endpoint quadrature of beta_q/2 phi(t)^2 along the reference solution.
  const auto reference_cost = [&](double tau) {
    const int n = static_cast<int>(std::lround(p.t_final / tau));
    double j = 0.0;
    for (int k = 1; k <= n; ++k) {
      const ScalarState s = ode_reference(p, start, c, k * tau);
      j += tau * 0.5 * s.phi * s.phi;
    }
    return j;
  };
  std::vector<double> errs;
  for (double tau : {1e-2, 5e-3}) {
    p.tau = tau;
    const double j = reduced_cost({p, Field(p.grid, start.phi), Field(p.grid, start.sigma)},
                                  ControlSchedule::constant(p, c));
    errs.push_back(std::abs(j - reference_cost(tau)));
  }
  CHECK(errs[1] <= 2e-3 * reference_cost(1e-2));
  CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("projection") {
  const ModelParams p = control_only(Grid::line(8, 1.0), 0.0, 1.0);
  ControlSchedule u = ControlSchedule::constant(p, 2.0);
  u.levels[3][2] = 0.4;
  u.levels[4][1] = -3.0;
  const ControlSchedule pu = project(u);
  CHECK(pu.levels[0][0] == 1.0);
  CHECK(pu.levels[3][2] == 0.4);
  CHECK(pu.levels[4][1] == 0.0);
  CHECK(pu.admissible());
  const ControlSchedule ppu = project(pu);
  for (std::size_t n = 0; n < pu.levels.size(); ++n) CHECK(ppu.levels[n] == pu.levels[n]);
  const ControlSchedule ok = ControlSchedule::constant(p, 0.25);
  for (std::size_t n = 0; n < ok.levels.size(); ++n) CHECK(project(ok).levels[n] == ok.levels[n]);
}

TEST_CASE("stationarity measure vanishes exactly at fixed points") {
  const ModelParams p = control_only(Grid::line(8, 1.0), 0.0, 1.0);
  const ControlSchedule u = ControlSchedule::constant(p, 0.0);
  const std::vector<Field> g(static_cast<std::size_t>(u.n_levels()), Field(p.grid, 0.3));
  CHECK(stationarity_measure(u, g, p.tau) == 0.0);
  const std::vector<Field> neg(static_cast<std::size_t>(u.n_levels()), Field(p.grid, -0.3));
  CHECK(stationarity_measure(u, neg, p.tau) == doctest::Approx(0.3 * std::sqrt(p.t_final)));
}

TEST_CASE("analytic minimizers of the control term") {
  for (const Grid& g : {Grid::line(16, 1.0), Grid::line(64, 12.8), Grid::rect(8, 8, 1.0, 1.0)}) {
    OptimOptions o;
    o.tol = 1e-8;
    o.max_iters = 50;

    const ModelParams p = control_only(g, -1.0, 1.0);
    const ControlProblem pr{p, Field(g, 0.2), Field(g, 0.1)};
    const ControlSchedule u0 = ControlSchedule::from_fields(p, random_levels(g, p.n_steps(), 3, 0.9));
    const OptimResult r = projected_gradient(pr, u0, o);
    CHECK(r.termination == Termination::tolerance_met);
    CHECK(r.iterations <= 50);
    CHECK(l2q_norm(r.control.levels, p.tau) <= o.tol);
    CHECK(non_increasing(r.cost_history));
    CHECK(r.all_iterates_admissible);

    const ModelParams q = control_only(g, 0.5, 1.0);
    const ControlProblem qr{q, Field(g, 0.2), Field(g, 0.1)};
    const OptimResult s = projected_gradient(qr, ControlSchedule::constant(q, 0.9), o);
    CHECK(s.termination == Termination::tolerance_met);
    for (const auto& f : s.control.levels) CHECK((f - Field(g, 0.5)).max_abs() <= o.tol);
    CHECK(non_increasing(s.cost_history));
  }
}

TEST_CASE("tracking run reaches a KKT point") {
  const ControlProblem pr = tracking_problem();
  OptimOptions o;
  o.tol = 1e-9;
  o.alpha0 = 100.0;
  o.max_iters = 200;
  const OptimResult r = projected_gradient(pr, ControlSchedule::constant(pr.params, 0.0), o);
  CHECK(r.termination == Termination::tolerance_met);
  CHECK(r.kkt_residual <= 1e-6);
  CHECK(non_increasing(r.cost_history));
  CHECK(r.all_iterates_admissible);
  CHECK(r.control.admissible());
  // regression value from the first converged build
  CHECK(r.cost_history.back() == doctest::Approx(0.6197028911909651).epsilon(1e-8));

  const CostGradient cg = cost_and_gradient(pr, r.control);
  const KktReport kkt = kkt_report(pr.params, r.control, cg.adjoint, 1e-5);
  CHECK(kkt.violations == 0);
  CHECK(kkt.projection_gap <= 1e-5);
  CHECK(kkt.stationarity <= 2.0 * r.kkt_residual);
  CHECK(r.kkt_residual <= 2.0 * kkt.stationarity);

  // perturb one interior cell by 10 tol
  std::size_t level = 0, cell = 0;
  bool found = false;
  for (std::size_t n = 0; n < r.control.levels.size() && !found; ++n)
    for (std::size_t k = 0; k < r.control.levels[n].size() && !found; ++k) {
      const double v = r.control.levels[n][k];
      if (v > -0.9 && v < 0.9) {
        level = n;
        cell = k;
        found = true;
      }
    }
  REQUIRE(found);
  ControlSchedule bumped = r.control;
  bumped.levels[level][cell] += 10 * 1e-5 / pr.params.beta_u;
  const KktReport flagged = kkt_report(pr.params, bumped, cg.adjoint, 1e-5);
  REQUIRE(flagged.violations == 1);
  CHECK(flagged.flagged.front().level == static_cast<int>(level));
  CHECK(flagged.flagged.front().cell == cell);
}

TEST_CASE("kkt report on the zero control with zero adjoint") {
  const ModelParams p = control_only(Grid::line(8, 1.0), -1.0, 1.0);
  const ControlSchedule u = ControlSchedule::constant(p, 0.0);
  const CostGradient cg = cost_and_gradient({p, Field(p.grid, 0.3), Field(p.grid)}, u);
  for (double tol : {1e-3, 1e-12, 0.0}) CHECK(kkt_report(p, u, cg.adjoint, tol).violations == 0);
  ModelParams q = p;
  q.beta_u = 0.0;
  q.beta_q = 1.0;
  const CostGradient cq = cost_and_gradient({q, Field(q.grid, 0.3), Field(q.grid)}, u);
  const KktReport rep = kkt_report(q, u, cq.adjoint, 1e-6);
  CHECK(rep.projection_gap < 0.0);
  CHECK_FALSE(rep.note.empty());
}

TEST_CASE("line search failure is reported, not thrown") {
  const ControlProblem pr = tracking_problem();
  OptimOptions o;
  o.max_halvings = 0;
  o.alpha0 = 1e6;
  o.max_iters = 5;
  const OptimResult r = projected_gradient(pr, ControlSchedule::constant(pr.params, 0.0), o);
  CHECK(r.termination == Termination::line_search_failed);
  CHECK(r.control.admissible());
}

}

#include "tumoropt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tumoropt {

double cost_of_trajectory(const ModelParams& params, const StateTrajectory& traj, const ControlSchedule& u) {
  const double tau = params.tau;
  const int n_steps = traj.n_steps();
  double tracking = 0.0;
  if (params.beta_q != 0.0) {
    for (int n = 1; n <= n_steps; ++n) {
      const double d = norm_h(traj.phi[static_cast<std::size_t>(n)] - params.phi_q_at(n));
      tracking += d * d;
    }
    tracking *= tau * params.beta_q / 2.0;
  }
  double terminal = 0.0;
  if (params.beta_omega != 0.0) {
    const double d = norm_h(traj.phi.back() - params.phi_omega);
    terminal = params.beta_omega / 2.0 * d * d;
  }
  double control = 0.0;
  if (params.beta_u != 0.0) {
    const double d = l2q_norm(u.levels, tau);
    control = params.beta_u / 2.0 * d * d;
  }
  return tracking + terminal + control;
}

double reduced_cost(const ControlProblem& problem, const ControlSchedule& u) {
  const StateTrajectory traj = simulate(problem.params, problem.phi0, problem.sigma0, u);
  return cost_of_trajectory(problem.params, traj, u);
}

CostGradient cost_and_gradient(const ControlProblem& problem, const ControlSchedule& u) {
  StateTrajectory traj = simulate(problem.params, problem.phi0, problem.sigma0, u);
  const double cost = cost_of_trajectory(problem.params, traj, u);
  AdjointTrajectory adj = solve_adjoint(problem.params, traj);
  std::vector<Field> g = reduced_gradient(problem.params, u, adj);
  return {cost, std::move(g), std::move(traj), std::move(adj)};
}

std::vector<Field> project_levels(const std::vector<Field>& levels, const ControlSchedule& bounds) {
  std::vector<Field> out = levels;
  for (auto& f : out) {
    require_same_grid(f, bounds.lower);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::max(bounds.lower[k], std::min(f[k], bounds.upper[k]));
  }
  return out;
}

ControlSchedule project(const ControlSchedule& u) {
  return ControlSchedule(project_levels(u.levels, u), u.lower, u.upper);
}

double stationarity_measure(const ControlSchedule& u, const std::vector<Field>& gradient, double tau) {
  std::vector<Field> trial = u.levels;
  for (std::size_t n = 0; n < trial.size(); ++n) trial[n] -= gradient[n];
  trial = project_levels(trial, u);
  for (std::size_t n = 0; n < trial.size(); ++n) trial[n] = u.levels[n] - trial[n];
  return l2q_norm(trial, tau);
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::tolerance_met:
      return "tolerance_met";
    case Termination::max_iters:
      return "max_iters";
    case Termination::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

OptimResult projected_gradient(const ControlProblem& problem, const ControlSchedule& u0, const OptimOptions& opts,
                               const std::function<void(const IterationRecord&)>& on_iteration) {
  if (!(opts.tol > 0.0)) throw UsageError("optimizer tolerance must be positive");
  if (!(opts.alpha_shrink > 0.0 && opts.alpha_shrink < 1.0)) throw UsageError("alpha_shrink must lie in (0,1)");
  if (!(opts.alpha0 > 0.0)) throw UsageError("alpha0 must be positive");
  const double tau = problem.params.tau;

  OptimResult res{project(u0), {}, {}, {}, 0.0, 0, Termination::max_iters, true};
  CostGradient current = cost_and_gradient(problem, res.control);
  double alpha = opts.alpha0;

  for (int it = 0;; ++it) {
    const double stat = stationarity_measure(res.control, current.gradient, tau);
    res.cost_history.push_back(current.cost);
    res.stationarity_history.push_back(stat);
    res.kkt_residual = stat;
    res.iterations = it;
    if (on_iteration) on_iteration({it, current.cost, it == 0 ? 0.0 : res.step_history.back(), stat});
    if (stat <= opts.tol) {
      res.termination = Termination::tolerance_met;
      return res;
    }
    if (it >= opts.max_iters) {
      res.termination = Termination::max_iters;
      return res;
    }

    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      std::vector<Field> trial_levels = res.control.levels;
      for (std::size_t n = 0; n < trial_levels.size(); ++n) trial_levels[n].axpy(-alpha, current.gradient[n]);
      ControlSchedule trial(project_levels(trial_levels, res.control), res.control.lower, res.control.upper);

      std::vector<Field> diff = trial.levels;
      for (std::size_t n = 0; n < diff.size(); ++n) diff[n] -= res.control.levels[n];
      const double dist = l2q_norm(diff, tau);

      double trial_cost = std::numeric_limits<double>::infinity();
      try {
        trial_cost = reduced_cost(problem, trial);
      } catch (const DivergenceError&) {
      }
      if (trial_cost <= current.cost - opts.armijo_c / alpha * dist * dist && trial_cost < current.cost) {
        res.all_iterates_admissible = res.all_iterates_admissible && trial.admissible();
        res.control = std::move(trial);
        res.step_history.push_back(alpha);
        current = cost_and_gradient(problem, res.control);
        accepted = true;
        break;
      }
      alpha *= opts.alpha_shrink;
    }
    if (!accepted) {
      res.termination = Termination::line_search_failed;
      return res;
    }
  }
}

KktReport kkt_report(const ModelParams& params, const ControlSchedule& u, const AdjointTrajectory& adjoint,
                     double tol) {
  if (adjoint.lift.size() != u.levels.size()) throw UsageError("adjoint and control have different lengths");
  KktReport rep;
  const double bu = params.beta_u;
  if (bu <= 0.0) rep.note = "projection formula skipped: requires beta_u > 0";
  double gap = 0.0;
  for (std::size_t n = 0; n < u.levels.size(); ++n) {
    const Field& un = u.levels[n];
    const Field& lift = adjoint.lift[n];
    for (std::size_t k = 0; k < un.size(); ++k) {
      const double g = bu * un[k] + lift[k];
      const bool lower = un[k] <= u.lower[k];
      const bool upper = un[k] >= u.upper[k];
      double violation = 0.0;
      if (lower && upper) {
        ++rep.at_lower;  // degenerate box: the control is fixed
      } else if (lower) {
        ++rep.at_lower;
        violation = std::max(0.0, -g - tol);
      } else if (upper) {
        ++rep.at_upper;
        violation = std::max(0.0, g - tol);
      } else {
        ++rep.interior;
        violation = std::max(0.0, std::abs(g) - tol);
      }
      if (violation > 0.0) {
        ++rep.violations;
        rep.worst_violation = std::max(rep.worst_violation, violation);
        rep.flagged.push_back({static_cast<int>(n), k, violation});
      }
      if (bu > 0.0) {
        const double formula = std::max(u.lower[k], std::min(-lift[k] / bu, u.upper[k]));
        gap = std::max(gap, std::abs(un[k] - formula));
      }
    }
  }
  if (bu > 0.0) rep.projection_gap = gap;
  rep.stationarity = stationarity_measure(u, reduced_gradient(params, u, adjoint), params.tau);
  return rep;
}

}  // namespace tumoropt

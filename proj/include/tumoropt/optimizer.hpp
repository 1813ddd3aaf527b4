#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tumoropt/forward.hpp"
#include "tumoropt/sensitivity.hpp"

namespace tumoropt {

/// Model parameters together with the initial state; everything the reduced
/// cost u -> J(S(u), u) depends on.
struct ControlProblem {
  ModelParams params;
  Field phi0;
  Field sigma0;
};

/// Tracking terms use right-endpoint quadrature (levels 1..N), the control
/// term left-endpoint quadrature (levels 0..N-1), matching the control sampling.
double cost_of_trajectory(const ModelParams& params, const StateTrajectory& traj, const ControlSchedule& u);
double reduced_cost(const ControlProblem& problem, const ControlSchedule& u);

/// Cost and gradient with respect to the space-time inner product.
struct CostGradient {
  double cost = 0.0;
  std::vector<Field> gradient;
  StateTrajectory trajectory;
  AdjointTrajectory adjoint;
};
CostGradient cost_and_gradient(const ControlProblem& problem, const ControlSchedule& u);

/// Cellwise clamp onto [lower, upper] on every level.
ControlSchedule project(const ControlSchedule& u);
/// Clamp of arbitrary space-time data onto the bounds of `bounds`.
std::vector<Field> project_levels(const std::vector<Field>& levels, const ControlSchedule& bounds);

/// |u - project(u - g)|_{L2(Q)}
double stationarity_measure(const ControlSchedule& u, const std::vector<Field>& gradient, double tau);

struct OptimOptions {
  int max_iters = 200;
  double tol = 1e-8;
  double armijo_c = 1e-4;
  double alpha0 = 1.0;
  double alpha_shrink = 0.5;
  int max_halvings = 60;
};

enum class Termination { tolerance_met, max_iters, line_search_failed };
std::string to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double step = 0.0;
  double stationarity = 0.0;
};

struct OptimResult {
  ControlSchedule control;
  std::vector<double> cost_history;
  std::vector<double> stationarity_history;
  std::vector<double> step_history;
  double kkt_residual = 0.0;
  int iterations = 0;
  Termination termination = Termination::max_iters;
  /// True if every accepted iterate was within bounds.
  bool all_iterates_admissible = true;
};

/// Projected gradient with Armijo backtracking:
///   u+ = project(u - alpha g),  accept if J(u+) <= J(u) - (c / alpha) |u+ - u|^2.
/// The step length is warm-started from the previously accepted one. Trial
/// points whose simulation diverges are treated as rejected steps.
OptimResult projected_gradient(const ControlProblem& problem, const ControlSchedule& u0, const OptimOptions& opts,
                               const std::function<void(const IterationRecord&)>& on_iteration = {});

struct KktViolation {
  int level = 0;
  std::size_t cell = 0;
  double value = 0.0;  // amount by which the sign condition is violated
};

struct KktReport {
  std::size_t interior = 0;
  std::size_t at_lower = 0;
  std::size_t at_upper = 0;
  std::size_t violations = 0;
  double worst_violation = 0.0;
  std::vector<KktViolation> flagged;
  double stationarity = 0.0;
  /// max |u - clamp(-lift / beta_u)|; negative when beta_u == 0.
  double projection_gap = -1.0;
  std::string note;
};

/// Pointwise first-order conditions with g = beta_u u + lift:
///   interior:      |g| <= tol
///   at u_min:      g >= -tol
///   at u_max:      g <= tol
KktReport kkt_report(const ModelParams& params, const ControlSchedule& u, const AdjointTrajectory& adjoint,
                     double tol);

}  // namespace tumoropt

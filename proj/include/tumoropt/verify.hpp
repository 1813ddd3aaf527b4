#pragma once

#include <cstdint>
#include <vector>

#include "tumoropt/optimizer.hpp"

namespace tumoropt {

/// Least-squares slope of log(values) against log(eps).
double fit_log_slope(const std::vector<double>& eps, const std::vector<double>& values);

/// Seeded smooth random space-time data (filtered noise on every level).
std::vector<Field> random_levels(const Grid& grid, int n_levels, std::uint64_t seed, double amplitude,
                                 double mean = 0.0);
Field random_smooth_field(const Grid& grid, std::uint64_t seed, double amplitude, double mean = 0.0);

struct DotProductReport {
  double single_step = 0.0;       // one step, random base and data
  double full_horizon = 0.0;      // pullback over all steps, random cotangents
  double adjoint_tracking = 0.0;  // solve_adjoint lift vs. derivative of the tracking terms
  double max() const;
};

/// Transpose checks of the discrete adjoint on a seeded random instance.
/// The returned values are relative discrepancies |lhs - rhs| / max(|lhs|, |rhs|).
/// `params` is re-targeted to `grid` with t_final = n_steps * tau.
DotProductReport dot_product_test(const ModelParams& params, const Grid& grid, int n_steps, std::uint64_t seed);

struct SweepRow {
  double eps = 0.0;
  double remainder = 0.0;
  double order = 0.0;  // against the previous row; 0 on the first row
};

struct TaylorReport {
  std::vector<SweepRow> rows;
  double slope = 0.0;
  double directional_derivative = 0.0;  // <g, h>_{L2(Q)}
  double central_difference = 0.0;      // (J(u + e h) - J(u - e h)) / (2 e) at e = check_eps
  double directional_rel_error = 0.0;
};

/// |J(u + eps h) - J(u) - eps <g, h>| for each eps, plus a central-difference
/// check of the directional derivative at check_eps.
TaylorReport taylor_gradient(const ControlProblem& problem, const ControlSchedule& u, const std::vector<Field>& h,
                             const std::vector<double>& eps_values, double check_eps = 1e-3);

/// max_n |(phi, sigma)(u + eps h)^n - (phi, sigma)(u)^n - eps (xi, rho)^n|_H for each eps.
TaylorReport taylor_state(const ControlProblem& problem, const ControlSchedule& u, const std::vector<Field>& h,
                          const std::vector<double>& eps_values);

struct ScalarState {
  double phi = 0.0;
  double sigma = 0.0;
};

/// Adaptive Dormand-Prince integration of the spatially homogeneous system
///   phi' = P(phi)(sigma - F'(phi)),  sigma' = -P(phi)(sigma - F'(phi)) + u.
ScalarState ode_reference(const ModelParams& params, ScalarState start, double control, double t_final,
                          double tol = 1e-13);

struct OracleRow {
  double tau = 0.0;
  double rel_error = 0.0;
  double order = 0.0;
};

/// Runs the grid solver on spatially constant data for tau, tau/2, ... and
/// compares the final state against ode_reference.
std::vector<OracleRow> ode_oracle_table(const ModelParams& params, ScalarState start, double control,
                                        const std::vector<double>& taus);

}  // namespace tumoropt

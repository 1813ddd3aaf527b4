#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tumoropt/grid.hpp"

namespace tumoropt {

/// Quartic double well F(s) = w (s^2 - 1)^2 / 4 with the convex/concave split
///   F0(s) = w (s^4/4 + s^2/2),  F1(s) = w (-s^2 + 1/4).
struct PotentialSpec {
  double well_scale = 1.0;
  /// Growth exponent of F0'' (metadata, always 4 for the quartic well).
  double rho = 4.0;
};

/// F^(order)(s), order in 0..3.
double f_deriv(const PotentialSpec& spec, int order, double s);
/// Convex part F0 and bounded-curvature part F1, order in 0..3.
double f0_deriv(const PotentialSpec& spec, int order, double s);
double f1_deriv(const PotentialSpec& spec, int order, double s);

enum class ProliferationKind { quadratic, sigmoid, custom };

/// Proliferation function P.
///   quadratic: P(s) = p0 (1 + s^2)
///   sigmoid:   P(s) = p0 (1 + tanh(k s)) / 2 + p_floor
///   custom:    user-supplied value/derivative pair (used to probe the
///              hypothesis checks with inadmissible choices)
struct ProliferationSpec {
  ProliferationKind kind = ProliferationKind::quadratic;
  double p0 = 0.5;
  double steepness = 1.0;
  double p_floor = 0.0;
  std::function<double(double)> custom_value;
  std::function<double(double)> custom_derivative;
  double custom_q = 2.0;

  /// Growth exponent q of |P'| in the bound |P'(s)| <= a1 (1 + |s|^(q-1)).
  double growth_exponent() const;
};

double p_deriv(const ProliferationSpec& spec, int order, double s);

struct SolverOptions {
  double cg_tol = 1e-12;
  int cg_maxit = 2000;
  double overflow_guard = 1e6;
};

/// Default stabilisation: S = w * max(2, 3 phi_max^2 - 1) with phi_max = 1.5.
double default_stabilization(const PotentialSpec& spec, double phi_max = 1.5);

/// All scalars and function choices of the control problem. The interaction
/// coefficient in front of mu in the reaction term is fixed to one.
struct ModelParams {
  Grid grid = Grid::line(64, 12.8);
  PotentialSpec potential;
  ProliferationSpec proliferation;
  double beta_q = 1.0;
  double beta_omega = 0.0;
  double beta_u = 0.0;
  double t_final = 0.1;
  double tau = 1e-3;
  Field u_min = Field(Grid::line(64, 12.8), -1.0);
  Field u_max = Field(Grid::line(64, 12.8), 1.0);
  /// Either one field (constant in time) or one field per time level 0..N.
  std::vector<Field> phi_q = {Field(Grid::line(64, 12.8))};
  Field phi_omega = Field(Grid::line(64, 12.8));
  double stabilization = default_stabilization(PotentialSpec{});
  SolverOptions solver;

  /// round(t_final / tau)
  int n_steps() const;
  const Field& phi_q_at(int level) const;

  /// Rebuilds every field member on a new grid with constant values taken
  /// from the current first cell. Convenience for tests and presets.
  static ModelParams on_grid(const Grid& grid);
};

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct HypothesisReport {
  std::vector<HypothesisCheck> checks;
  double alpha1 = 0.0;  // sup |P'(s)| / (1 + |s|^(q-1))
  double alpha2 = 0.0;  // sup |F1''|
  double alpha3 = 0.0;  // inf F0'' / (1 + |s|^(rho-2))
  double alpha4 = 0.0;  // sup F0'' / (1 + |s|^(rho-2))
  double alpha5 = 0.0;  // slope in F(s) >= a5 |s| - a6
  double alpha6 = 0.0;

  bool all_passed() const;
  const HypothesisCheck* find(const std::string& name) const;
};

/// Samples the nonlinearities on [lo, hi] and evaluates the standing
/// hypotheses H1, H2, H4 and H5; H3 and H6 concern initial data and the
/// control ball and are not decidable from the parameters alone.
HypothesisReport check_hypotheses(const ModelParams& params, double lo, double hi, int n_samples);

/// Named initial/target field presets.
///   constant:        value
///   tanh_ball:       cx, cy, radius, eps  ->  tanh((radius - |x - c|) / (sqrt(2) eps))
///   filtered_noise:  seed, amplitude, mean, kappa, passes  -> uniform noise in
///                    [-amplitude, amplitude] smoothed by passes applications of
///                    (I - kappa lap)^-1, then shifted by mean
Field preset_field(const std::string& name, const Grid& grid, const std::map<std::string, double>& args);

}  // namespace tumoropt

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tumoropt/grid.hpp"
#include "tumoropt/model.hpp"

namespace tumoropt {

/// Raised when a field exceeds the overflow guard during time stepping.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Time-indexed controls u^0..u^{N-1}, each held constant on [t_n, t_{n+1}).
struct ControlSchedule {
  std::vector<Field> levels;
  Field lower;
  Field upper;

  ControlSchedule(std::vector<Field> levels_, Field lower_, Field upper_);
  /// Constant control value on every level, bounds taken from params.
  static ControlSchedule constant(const ModelParams& params, double value);
  static ControlSchedule from_fields(const ModelParams& params, std::vector<Field> levels);

  int n_levels() const { return static_cast<int>(levels.size()); }
  const Grid& grid() const { return lower.grid(); }
  bool admissible() const;
};

/// Space-time inner product sum_n tau <a^n, b^n>_H over control levels.
double l2q_inner(const std::vector<Field>& a, const std::vector<Field>& b, double tau);
double l2q_norm(const std::vector<Field>& a, double tau);

struct StepDiagnostics {
  int step = 0;
  double time = 0.0;
  double mass = 0.0;           // integral of phi + sigma at the new level
  double mass_residual = 0.0;  // mass change minus tau * integral of u
  double energy = 0.0;
  int cg_iterations_phi = 0;
  int cg_iterations_sigma = 0;
};

struct StateTrajectory {
  Grid grid;
  double tau = 0.0;
  std::vector<Field> phi;    // levels 0..N
  std::vector<Field> sigma;  // levels 0..N
  std::vector<StepDiagnostics> diagnostics;
  std::vector<std::string> warnings;

  int n_steps() const { return static_cast<int>(phi.size()) - 1; }
  double time(int level) const { return level * tau; }
};

/// mu = -lap(phi) + F'(phi)
Field chemical_potential(const ModelParams& params, const Field& phi);

/// P(phi) (sigma - mu) with mu = chemical_potential(phi).
Field reaction(const ModelParams& params, const Field& phi, const Field& sigma);

/// I + tau (lap^2 - S lap), the implicit phase-field operator.
LinearOperator phase_operator(const ModelParams& params);
/// I - tau lap, the implicit nutrient operator.
LinearOperator nutrient_operator(const ModelParams& params);

struct StepResult {
  Field phi;
  Field sigma;
  CgStats phi_stats;
  CgStats sigma_stats;
};

/// One stabilised IMEX step. With R = P(phi)(sigma - mu~), mu~ = chemical_potential(phi):
///   (I + tau(lap^2 - S lap)) phi+ = phi + tau lap(F'(phi) - S phi) + tau R
///   (I - tau lap) sigma+         = sigma + tau (u - R)
StepResult step(const ModelParams& params, const Field& phi, const Field& sigma, const Field& u);

/// Runs N steps from (phi0, sigma0). Throws DivergenceError (with the step
/// index) when any value exceeds the overflow guard.
StateTrajectory simulate(const ModelParams& params, const Field& phi0, const Field& sigma0,
                         const ControlSchedule& u);

/// E = 1/2 |grad phi|^2 + int F(phi) + 1/2 |sigma|^2
double energy(const ModelParams& params, const Field& phi, const Field& sigma);

struct LipschitzRow {
  double eps = 0.0;
  double control_distance = 0.0;  // L2(Q)
  double phi_linf_h = 0.0;        // max_n |phi1 - phi2|_H / |u1 - u2|
  double phi_l2_v = 0.0;          // (sum_n tau |phi1 - phi2|_V^2)^1/2 / |u1 - u2|
  double sigma_linf_h = 0.0;
  double sigma_l2_h = 0.0;
};

struct StabilityReport {
  std::vector<LipschitzRow> rows;
  /// Largest relative spread (max - min) / max over rows, across all four ratios.
  double max_relative_spread = 0.0;
  double max_ratio = 0.0;
};

/// Difference norms between the trajectories generated by u1 and u2, divided
/// by |u1 - u2|_{L2(Q)} (raw norms when u1 == u2).
LipschitzRow lipschitz_ratios(const ModelParams& params, const Field& phi0, const Field& sigma0,
                              const ControlSchedule& u1, const ControlSchedule& u2);

/// Shrinking perturbations u2 = u1 + eps h for each eps.
StabilityReport lipschitz_probe(const ModelParams& params, const Field& phi0, const Field& sigma0,
                                const ControlSchedule& u1, const std::vector<Field>& direction,
                                const std::vector<double>& eps_values);

}  // namespace tumoropt

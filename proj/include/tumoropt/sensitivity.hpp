#pragma once

#include <vector>

#include "tumoropt/forward.hpp"

namespace tumoropt {

/// Directional derivative (xi, rho) of the discrete state along a control
/// direction h. Level 0 is always zero.
struct LinearizedTrajectory {
  std::vector<Field> xi;
  std::vector<Field> rho;

  /// eta^n = -lap(xi^n) + F''(phi^n) xi^n, the linearised chemical potential.
  Field eta(const ModelParams& params, const StateTrajectory& base, int level) const;
};

/// Discrete adjoint state. p is the phase-field co-state, r the nutrient
/// co-state; q is the co-state of the chemical potential and is derived.
/// lift[n] is the sensitivity of the tracking terms to u^n with respect to the
/// space-time inner product, i.e. the gradient is beta_u u^n + lift[n].
struct AdjointTrajectory {
  std::vector<Field> p;     // levels 0..N, p^N = beta_omega (phi^N - phi_omega)
  std::vector<Field> r;     // levels 0..N, r^N = 0
  std::vector<Field> lift;  // control levels 0..N-1

  /// q^n = lap(p^n) - P(phi^n)(p^n - r^n)
  Field q(const ModelParams& params, const StateTrajectory& base, int level) const;
};

struct TangentStep {
  Field xi;
  Field rho;
};

/// Exact Jacobian of step() at (phi, sigma) applied to (xi, rho, h).
TangentStep linearized_step(const ModelParams& params, const Field& phi, const Field& sigma, const Field& xi,
                            const Field& rho, const Field& h);

/// Cotangents of (phi^n, sigma^n, u^n) produced by pulling back cotangents
/// (a, b) of (phi^{n+1}, sigma^{n+1}) through one step.
struct CotangentStep {
  Field phi;
  Field sigma;
  Field control;
};

/// Exact H-transpose of linearized_step:
///   <linearized_step(xi, rho, h), (a, b)> = <xi, out.phi> + <rho, out.sigma> + <h, out.control>.
CotangentStep transpose_step(const ModelParams& params, const Field& phi, const Field& sigma, const Field& a,
                             const Field& b);

struct AdjointStep {
  Field p;
  Field r;
  Field lift;
};

/// One backward step of the adjoint recursion at base level n:
/// pulls back (p^{n+1} + tau beta_q (phi^{n+1} - phi_q^{n+1}), r^{n+1}).
AdjointStep adjoint_step(const ModelParams& params, const StateTrajectory& base, int level, const Field& p_next,
                         const Field& r_next);

LinearizedTrajectory solve_linearized(const ModelParams& params, const StateTrajectory& base,
                                      const std::vector<Field>& direction);

AdjointTrajectory solve_adjoint(const ModelParams& params, const StateTrajectory& base);

/// Backward sweep with arbitrary cotangent data: phi_cot[n], sigma_cot[n]
/// (n = 1..N, index 0 ignored) weight the state levels. Returns, for each
/// control level, the field c^n with sum_n <c^n, h^n>_H equal to
/// sum_n <phi_cot[n], xi^n> + <sigma_cot[n], rho^n>.
std::vector<Field> pullback_controls(const ModelParams& params, const StateTrajectory& base,
                                     const std::vector<Field>& phi_cot, const std::vector<Field>& sigma_cot);

/// g^n = beta_u u^n + lift^n, the gradient of the reduced cost with respect
/// to the space-time inner product sum_n tau <., .>_H.
std::vector<Field> reduced_gradient(const ModelParams& params, const ControlSchedule& u,
                                    const AdjointTrajectory& adjoint);

}  // namespace tumoropt

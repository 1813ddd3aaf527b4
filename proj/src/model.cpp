#include "tumoropt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace tumoropt {

namespace {

void require_order(int order, int max_order, const char* what) {
  if (order < 0 || order > max_order) {
    std::ostringstream msg;
    msg << what << ": derivative order " << order << " outside 0.." << max_order;
    throw UsageError(msg.str());
  }
}

double arg_or(const std::map<std::string, double>& args, const std::string& key, double fallback) {
  auto it = args.find(key);
  return it == args.end() ? fallback : it->second;
}

}  // namespace

double f_deriv(const PotentialSpec& spec, int order, double s) {
  require_order(order, 3, "f_deriv");
  const double w = spec.well_scale;
  switch (order) {
    case 0: {
      const double a = s * s - 1.0;
      return w * a * a / 4.0;
    }
    case 1:
      return w * (s * s * s - s);
    case 2:
      return w * (3.0 * s * s - 1.0);
    default:
      return w * 6.0 * s;
  }
}

double f0_deriv(const PotentialSpec& spec, int order, double s) {
  require_order(order, 3, "f0_deriv");
  const double w = spec.well_scale;
  switch (order) {
    case 0:
      return w * (s * s * s * s / 4.0 + s * s / 2.0);
    case 1:
      return w * (s * s * s + s);
    case 2:
      return w * (3.0 * s * s + 1.0);
    default:
      return w * 6.0 * s;
  }
}

double f1_deriv(const PotentialSpec& spec, int order, double s) {
  require_order(order, 3, "f1_deriv");
  const double w = spec.well_scale;
  switch (order) {
    case 0:
      return w * (-s * s + 0.25);
    case 1:
      return w * (-2.0 * s);
    case 2:
      return -2.0 * w;
    default:
      return 0.0;
  }
}

double ProliferationSpec::growth_exponent() const {
  switch (kind) {
    case ProliferationKind::quadratic:
      return 2.0;
    case ProliferationKind::sigmoid:
      return 1.0;
    default:
      return custom_q;
  }
}

double p_deriv(const ProliferationSpec& spec, int order, double s) {
  require_order(order, 1, "p_deriv");
  switch (spec.kind) {
    case ProliferationKind::quadratic:
      return order == 0 ? spec.p0 * (1.0 + s * s) : 2.0 * spec.p0 * s;
    case ProliferationKind::sigmoid: {
      const double t = std::tanh(spec.steepness * s);
      if (order == 0) return spec.p0 * (1.0 + t) / 2.0 + spec.p_floor;
      return spec.p0 * spec.steepness * (1.0 - t * t) / 2.0;
    }
    case ProliferationKind::custom:
      if (!spec.custom_value || !spec.custom_derivative)
        throw UsageError("custom proliferation needs value and derivative callbacks");
      return order == 0 ? spec.custom_value(s) : spec.custom_derivative(s);
  }
  throw UsageError("unknown proliferation kind");
}

double default_stabilization(const PotentialSpec& spec, double phi_max) {
  return spec.well_scale * std::max(2.0, 3.0 * phi_max * phi_max - 1.0);
}

int ModelParams::n_steps() const { return static_cast<int>(std::lround(t_final / tau)); }

const Field& ModelParams::phi_q_at(int level) const {
  if (phi_q.size() == 1) return phi_q.front();
  if (level < 0 || static_cast<std::size_t>(level) >= phi_q.size())
    throw UsageError("tracking target has no field for the requested level");
  return phi_q[static_cast<std::size_t>(level)];
}

ModelParams ModelParams::on_grid(const Grid& grid) {
  ModelParams p;
  p.grid = grid;
  p.u_min = Field(grid, p.u_min[0]);
  p.u_max = Field(grid, p.u_max[0]);
  p.phi_q = {Field(grid, p.phi_q.front()[0])};
  p.phi_omega = Field(grid, p.phi_omega[0]);
  return p;
}

bool HypothesisReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const HypothesisCheck& c) { return c.passed; });
}

const HypothesisCheck* HypothesisReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

HypothesisReport check_hypotheses(const ModelParams& params, double lo, double hi, int n_samples) {
  if (n_samples < 100) throw UsageError("check_hypotheses needs at least 100 samples");
  if (!(hi > lo)) throw UsageError("check_hypotheses needs a non-empty sample range");

  HypothesisReport rep;

  {
    HypothesisCheck h{"H1", true, ""};
    const double b[3] = {params.beta_q, params.beta_omega, params.beta_u};
    if (b[0] < 0 || b[1] < 0 || b[2] < 0) {
      h.passed = false;
      h.detail = "cost weights must be nonnegative";
    } else if (b[0] == 0 && b[1] == 0 && b[2] == 0) {
      h.passed = false;
      h.detail = "cost weights must not all vanish";
    }
    rep.checks.push_back(h);
  }

  {
    HypothesisCheck h{"H2", true, ""};
    if (!(params.u_min.grid() == params.u_max.grid())) {
      h.passed = false;
      h.detail = "control bounds live on different grids";
    } else {
      std::size_t bad = 0;
      for (std::size_t k = 0; k < params.u_min.size(); ++k)
        if (params.u_min[k] > params.u_max[k]) ++bad;
      if (bad) {
        h.passed = false;
        h.detail = std::to_string(bad) + " cells with u_min > u_max";
      }
    }
    bool targets_ok = params.phi_omega.all_finite();
    for (const auto& f : params.phi_q) targets_ok = targets_ok && f.all_finite();
    if (!targets_ok) {
      h.passed = false;
      h.detail += (h.detail.empty() ? "" : "; ") + std::string("targets contain non-finite values");
    }
    rep.checks.push_back(h);
  }

  const auto& pot = params.potential;
  const auto& pro = params.proliferation;
  const double q = pro.growth_exponent();
  const double rho = pot.rho;

  double p_min = std::numeric_limits<double>::infinity();
  double a1 = 0.0, a2 = 0.0;
  double a3 = std::numeric_limits<double>::infinity(), a4 = 0.0;
  double f0pp_min = std::numeric_limits<double>::infinity();
  double split_err = 0.0;
  const double a5 = pot.well_scale;
  double a6 = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double s = lo + (hi - lo) * i / (n_samples - 1);
    p_min = std::min(p_min, p_deriv(pro, 0, s));
    a1 = std::max(a1, std::abs(p_deriv(pro, 1, s)) / (1.0 + std::pow(std::abs(s), q - 1.0)));
    a2 = std::max(a2, std::abs(f1_deriv(pot, 2, s)));
    const double f0pp = f0_deriv(pot, 2, s);
    f0pp_min = std::min(f0pp_min, f0pp);
    const double weight = 1.0 + std::pow(std::abs(s), rho - 2.0);
    a3 = std::min(a3, f0pp / weight);
    a4 = std::max(a4, f0pp / weight);
    const double f = f_deriv(pot, 0, s);
    split_err = std::max(split_err, std::abs(f0_deriv(pot, 0, s) + f1_deriv(pot, 0, s) - f));
    a6 = std::max(a6, a5 * std::abs(s) - f);
  }
  rep.alpha1 = a1;
  rep.alpha2 = a2;
  rep.alpha3 = a3;
  rep.alpha4 = a4;
  rep.alpha5 = a5;
  rep.alpha6 = a6;

  {
    HypothesisCheck h{"H4", true, ""};
    std::ostringstream d;
    if (p_min < 0.0) {
      h.passed = false;
      d << "P takes negative value " << p_min << " on the sample range";
    }
    if (q < 1.0 || q > 4.0) {
      h.passed = false;
      d << (d.tellp() > 0 ? "; " : "") << "growth exponent q=" << q << " outside [1,4]";
    }
    if (!std::isfinite(a1)) {
      h.passed = false;
      d << (d.tellp() > 0 ? "; " : "") << "P' growth bound is unbounded";
    }
    h.detail = d.str();
    rep.checks.push_back(h);
  }

  {
    HypothesisCheck h{"H5", true, ""};
    std::ostringstream d;
    if (split_err > 1e-12 * (1.0 + std::abs(hi) + std::abs(lo))) {
      h.passed = false;
      d << "F0 + F1 differs from F by " << split_err;
    }
    if (!(f0pp_min > 0.0) || !(a3 > 0.0)) {
      h.passed = false;
      d << (d.tellp() > 0 ? "; " : "") << "F0 is not uniformly convex";
    }
    if (rho < 2.0 || rho >= 6.0) {
      h.passed = false;
      d << (d.tellp() > 0 ? "; " : "") << "rho outside [2,6)";
    }
    if (!std::isfinite(a2) || !std::isfinite(a4) || !(a5 > 0.0)) {
      h.passed = false;
      d << (d.tellp() > 0 ? "; " : "") << "growth constants not finite";
    }
    h.detail = d.str();
    rep.checks.push_back(h);
  }
  return rep;
}

Field preset_field(const std::string& name, const Grid& grid, const std::map<std::string, double>& args) {
  if (name == "constant") return Field(grid, arg_or(args, "value", 0.0));

  if (name == "tanh_ball") {
    const double cx = arg_or(args, "cx", grid.lx() / 2.0);
    const double cy = arg_or(args, "cy", grid.dim() == 2 ? grid.ly() / 2.0 : 0.0);
    const double radius = arg_or(args, "radius", 0.0);
    const double eps = arg_or(args, "eps", 1.0);
    if (!(eps > 0.0)) throw UsageError("tanh_ball needs eps > 0");
    Field f(grid);
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        const double dx = grid.x(i) - cx;
        const double dy = grid.y(j) - cy;
        const double dist = std::sqrt(dx * dx + dy * dy);
        f.at(i, j) = std::tanh((radius - dist) / (std::sqrt(2.0) * eps));
      }
    }
    return f;
  }

  if (name == "filtered_noise") {
    const auto seed = static_cast<std::uint64_t>(arg_or(args, "seed", 0.0));
    const double amplitude = arg_or(args, "amplitude", 0.1);
    const double mean = arg_or(args, "mean", 0.0);
    const double kappa = arg_or(args, "kappa", 1.0);
    const int passes = static_cast<int>(arg_or(args, "passes", 2.0));
    if (kappa < 0.0 || passes < 0) throw UsageError("filtered_noise needs kappa >= 0 and passes >= 0");
    std::mt19937_64 rng(seed);
    Field f(grid);
    // 53-bit uniform in [0,1) independent of the standard library's distributions.
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      f[k] = amplitude * (2.0 * unit - 1.0);
    }
    const LinearOperator smoother = [kappa](const Field& in, Field& out) {
      neumann_laplacian(in, out);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[k] - kappa * out[k];
    };
    for (int m = 0; m < passes; ++m) f = cg_solve(smoother, f, 1e-12, 10000);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += mean;
    return f;
  }

  throw UsageError("unknown preset '" + name + "'");
}

}  // namespace tumoropt

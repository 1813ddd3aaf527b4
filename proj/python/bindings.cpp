#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <sstream>

#include "tumoropt/cli.hpp"
#include "tumoropt/io.hpp"
#include "tumoropt/verify.hpp"

namespace py = pybind11;
using namespace tumoropt;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array levels_to_array(const std::vector<Field>& levels, const Grid& g) {
  Array out({static_cast<py::ssize_t>(levels.size()), static_cast<py::ssize_t>(g.ny()),
             static_cast<py::ssize_t>(g.nx())});
  double* dst = out.mutable_data();
  for (const auto& f : levels) dst = std::copy(f.data().begin(), f.data().end(), dst);
  return out;
}

Array field_to_array(const Field& f) {
  Array out({static_cast<py::ssize_t>(f.grid().ny()), static_cast<py::ssize_t>(f.grid().nx())});
  std::copy(f.data().begin(), f.data().end(), out.mutable_data());
  return out;
}

Field array_to_field(const Array& a, const Grid& g) {
  if (static_cast<std::size_t>(a.size()) != g.size())
    throw UsageError("array has " + std::to_string(a.size()) + " values, grid has " + std::to_string(g.size()));
  return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

std::vector<Field> array_to_levels(const Array& a, const Grid& g, int n_levels) {
  const auto per = static_cast<py::ssize_t>(g.size());
  if (a.size() != per * n_levels)
    throw UsageError("control array needs " + std::to_string(n_levels) + " levels of " + std::to_string(per) +
                     " values");
  std::vector<Field> out;
  for (int n = 0; n < n_levels; ++n) {
    const double* src = a.data() + n * per;
    out.emplace_back(g, std::vector<double>(src, src + per));
  }
  return out;
}

// A parsed run configuration with its materialised fields.
class Problem {
 public:
  Problem(const std::string& text, const std::filesystem::path& base_dir, const std::vector<std::string>& overrides)
      : cfg_(parse_config(text)) {
    for (const auto& o : overrides) apply_override(cfg_, o);
    setup_ = std::make_unique<RunSetup>(build_run(cfg_, base_dir));
  }

  const Grid& grid() const { return params().grid; }
  const ModelParams& params() const { return setup_->problem.params; }
  int n_steps() const { return params().n_steps(); }
  double tau() const { return params().tau; }

  ControlSchedule schedule(const std::optional<Array>& u) const {
    if (!u) return setup_->u0;
    return ControlSchedule::from_fields(params(), array_to_levels(*u, grid(), n_steps()));
  }

  py::dict simulate(const std::optional<Array>& u) const {
    const StateTrajectory t = tumoropt::simulate(params(), setup_->problem.phi0, setup_->problem.sigma0, schedule(u));
    py::list mass, energy;
    for (const auto& d : t.diagnostics) {
      mass.append(d.mass_residual);
      energy.append(d.energy);
    }
    py::dict out;
    out["phi"] = levels_to_array(t.phi, grid());
    out["sigma"] = levels_to_array(t.sigma, grid());
    out["mass_residual"] = mass;
    out["energy"] = energy;
    out["warnings"] = t.warnings;
    return out;
  }

  double cost(const std::optional<Array>& u) const { return reduced_cost(setup_->problem, schedule(u)); }

  py::tuple cost_and_gradient(const std::optional<Array>& u) const {
    const CostGradient cg = tumoropt::cost_and_gradient(setup_->problem, schedule(u));
    return py::make_tuple(cg.cost, levels_to_array(cg.gradient, grid()));
  }

  py::dict optimize(const std::optional<Array>& u0, std::optional<int> max_iters, std::optional<double> tol) const {
    OptimOptions o = setup_->opt;
    if (max_iters) o.max_iters = *max_iters;
    if (tol) o.tol = *tol;
    const OptimResult r = projected_gradient(setup_->problem, schedule(u0), o);
    const CostGradient cg = tumoropt::cost_and_gradient(setup_->problem, r.control);
    const KktReport k = kkt_report(params(), r.control, cg.adjoint, 1e-5);
    py::dict out;
    out["control"] = levels_to_array(r.control.levels, grid());
    out["cost_history"] = r.cost_history;
    out["stationarity_history"] = r.stationarity_history;
    out["step_history"] = r.step_history;
    out["kkt_residual"] = r.kkt_residual;
    out["iterations"] = r.iterations;
    out["termination"] = to_string(r.termination);
    out["kkt_violations"] = k.violations;
    out["projection_gap"] = k.projection_gap;
    return out;
  }

  py::dict check_hypotheses(double lo, double hi, int n) const {
    const HypothesisReport r = tumoropt::check_hypotheses(params(), lo, hi, n);
    py::dict checks;
    for (const auto& c : r.checks) checks[py::str(c.name)] = c.passed;
    py::dict out;
    out["passed"] = r.all_passed();
    out["checks"] = checks;
    out["alpha"] = std::vector<double>{r.alpha1, r.alpha2, r.alpha3, r.alpha4, r.alpha5, r.alpha6};
    return out;
  }

  Array phi0() const { return field_to_array(setup_->problem.phi0); }
  Array sigma0() const { return field_to_array(setup_->problem.sigma0); }
  Array u0() const { return levels_to_array(setup_->u0.levels, grid()); }
  std::string effective_config() const { return serialize_config(cfg_); }

 private:
  RunConfig cfg_;
  std::unique_ptr<RunSetup> setup_;
};

}  // namespace

PYBIND11_MODULE(_tumoropt, m) {
  m.doc() = "Compiled core of the tumoropt package";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<SnapshotError>(m, "SnapshotError", PyExc_IOError);

  py::class_<Grid>(m, "Grid")
      .def_static("line", &Grid::line, py::arg("nx"), py::arg("lx"))
      .def_static("rect", &Grid::rect, py::arg("nx"), py::arg("ny"), py::arg("lx"), py::arg("ly"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("nx", &Grid::nx)
      .def_property_readonly("ny", &Grid::ny)
      .def_property_readonly("hx", &Grid::hx)
      .def_property_readonly("hy", &Grid::hy)
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def("__len__", &Grid::size)
      .def("__repr__", [](const Grid& g) {
        std::ostringstream os;
        os << "Grid(dim=" << g.dim() << ", nx=" << g.nx() << ", ny=" << g.ny() << ", lx=" << g.lx()
           << ", ly=" << g.ly() << ")";
        return os.str();
      });

  m.def(
      "neumann_laplacian",
      [](const Grid& g, const Array& f) { return field_to_array(neumann_laplacian(array_to_field(f, g))); },
      py::arg("grid"), py::arg("values"));

  py::class_<Problem>(m, "Problem")
      .def(py::init<const std::string&, const std::filesystem::path&, const std::vector<std::string>&>(),
           py::arg("config_text"), py::arg("base_dir") = std::filesystem::path("."),
           py::arg("overrides") = std::vector<std::string>{})
      .def_property_readonly("grid", &Problem::grid)
      .def_property_readonly("n_steps", &Problem::n_steps)
      .def_property_readonly("tau", &Problem::tau)
      .def_property_readonly("phi0", &Problem::phi0)
      .def_property_readonly("sigma0", &Problem::sigma0)
      .def_property_readonly("u0", &Problem::u0)
      .def("effective_config", &Problem::effective_config)
      .def("simulate", &Problem::simulate, py::arg("u") = py::none())
      .def("cost", &Problem::cost, py::arg("u") = py::none())
      .def("cost_and_gradient", &Problem::cost_and_gradient, py::arg("u") = py::none())
      .def("optimize", &Problem::optimize, py::arg("u0") = py::none(), py::arg("max_iters") = py::none(),
           py::arg("tol") = py::none())
      .def("check_hypotheses", &Problem::check_hypotheses, py::arg("lo") = -5.0, py::arg("hi") = 5.0,
           py::arg("n_samples") = 2001);

  m.def(
      "check_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("config_text"), "Parses and validates a config; returns its canonical form.");

  m.def(
      "dot_product_test",
      [](const Problem& p, int nx, int n_steps, std::uint64_t seed) {
        const DotProductReport r = tumoropt::dot_product_test(p.params(), Grid::line(nx, 0.2 * nx), n_steps, seed);
        py::dict out;
        out["single_step"] = r.single_step;
        out["full_horizon"] = r.full_horizon;
        out["adjoint_tracking"] = r.adjoint_tracking;
        return out;
      },
      py::arg("problem"), py::arg("nx") = 16, py::arg("n_steps") = 8, py::arg("seed") = 1);

  m.def(
      "run_subcommand",
      [](const std::string& name, const std::filesystem::path& config, const std::vector<std::string>& overrides) {
        std::ostringstream out, err;
        const int code = tumoropt::run_subcommand(name, config, overrides, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("name"), py::arg("config_path"), py::arg("overrides") = std::vector<std::string>{});
}

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bwlab/acceptance.hpp"
#include "bwlab/diagnostics.hpp"
#include "bwlab/evolution.hpp"
#include "bwlab/groundstate.hpp"
#include "bwlab/profiles.hpp"
#include "bwlab/scenario.hpp"

namespace py = pybind11;
using namespace bwlab;

namespace {

using GridHandle = std::shared_ptr<Grid>;

py::array_t<cplx> to_numpy(const ComplexField& f) {
  const Grid& g = f.grid();
  std::vector<py::ssize_t> shape(g.dim(), g.n());
  py::array_t<cplx> out(shape);
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

ComplexField from_numpy(const GridHandle& g, py::array_t<cplx, py::array::c_style | py::array::forcecast> a) {
  if (static_cast<std::size_t>(a.size()) != g->size())
    throw InvalidArgument("array size does not match the grid");
  return ComplexField(g, std::vector<cplx>(a.data(), a.data() + a.size()));
}

std::vector<double> axis(const Grid& g) {
  std::vector<double> x(g.n());
  for (int i = 0; i < g.n(); ++i) x[i] = g.coord(i);
  return x;
}

}  // namespace

PYBIND11_MODULE(_bwlab, m) {
  m.doc() = "Multi-bubble blow-up construction for the stochastic L2-critical NLS.";
  m.attr("__version__") = BWLAB_VERSION;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<Grid, GridHandle>(m, "Grid")
      .def(py::init([](int d, double L, int n) { return std::const_pointer_cast<Grid>(make_grid(d, L, n)); }), py::arg("dim"), py::arg("half_width"), py::arg("n"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("half_width", &Grid::half_width)
      .def_property_readonly("n", &Grid::n)
      .def_property_readonly("dx", &Grid::dx)
      .def("axis", &axis);

  py::class_<GroundStateTable>(m, "GroundState")
      .def_readonly("dim", &GroundStateTable::dim)
      .def_readonly("r_max", &GroundStateTable::r_max)
      .def_readonly("h", &GroundStateTable::h)
      .def_readonly("q0", &GroundStateTable::q0)
      .def_readonly("mass_q", &GroundStateTable::mass_q)
      .def_readonly("yq2", &GroundStateTable::yq2)
      .def_readonly("q", &GroundStateTable::q)
      .def_readonly("rho", &GroundStateTable::rho)
      .def_readonly("has_rho", &GroundStateTable::has_rho)
      .def("__call__", [](const GroundStateTable& gs, double r) { return gs.ground(r).value; })
      .def("equation_residual", &GroundStateTable::equation_residual);

  m.def("solve_ground_state", &solve_ground_state, py::arg("dim"), py::arg("r_max") = 30.0,
        py::arg("samples") = 6000);
  m.def("shoot_ground_state", &shoot_ground_state, py::arg("dim"), py::arg("r_max") = 30.0,
        py::arg("samples") = 6000);
  m.def("solve_rho", &solve_rho);

  py::class_<BubbleSpec>(m, "BubbleSpec")
      .def(py::init([](double w, Point x, double phase, Point c) { return BubbleSpec{w, x, phase, c}; }),
           py::arg("w") = 1.0, py::arg("x") = Point{0.0, 0.0}, py::arg("phase") = 0.0,
           py::arg("c") = Point{0.0, 0.0})
      .def_readwrite("w", &BubbleSpec::w)
      .def_readwrite("x", &BubbleSpec::x)
      .def_readwrite("phase", &BubbleSpec::phase)
      .def_readwrite("c", &BubbleSpec::c);

  m.def("pseudoconformal", [](const std::vector<BubbleSpec>& b, const GroundStateTable& gs, const GridHandle& g,
                              double T, double t) { return to_numpy(eval_pseudoconformal(b, gs, g, T, t)); },
        py::arg("bubbles"), py::arg("gs"), py::arg("grid"), py::arg("T"), py::arg("t"));
  m.def("soliton", [](const std::vector<BubbleSpec>& b, const GroundStateTable& gs, const GridHandle& g,
                      double t) { return to_numpy(eval_soliton(b, gs, g, t)); },
        py::arg("bubbles"), py::arg("gs"), py::arg("grid"), py::arg("t"));

  m.def("mass", [](const GridHandle& g, py::array_t<cplx> a) { return std::pow(l2_norm(from_numpy(g, a)), 2); });
  m.def("energy", [](const GridHandle& g, py::array_t<cplx> a) { return energy(from_numpy(g, a)); });

  m.def("evolve_free",
        [](const GridHandle& g, py::array_t<cplx> a, double t0, double t1, double dt) {
          PerturbationModel free(g);
          IntegrateOptions o;
          o.dt = dt;
          auto r = integrate(EvolutionState{from_numpy(g, a), t0, {}}, t1, free, o);
          if (r.termination != Termination::completed)
            throw InvalidArgument("integration stopped: " + to_string(r.termination) + " " + r.message);
          return to_numpy(r.state.field);
        },
        py::arg("grid"), py::arg("field"), py::arg("t0"), py::arg("t1"), py::arg("dt") = 2e-4,
        "Integrates the unperturbed equation from t0 to t1.");

  m.def("load_scenario", [](const std::filesystem::path& p) { return scenario_to_json(load_scenario(p)); },
        "Validated scenario as canonical JSON text.");
  m.def("default_scenario", [] { return scenario_to_json(default_scenario()); });

  py::class_<CriterionResult>(m, "CriterionResult")
      .def_readonly("id", &CriterionResult::id)
      .def_readonly("title", &CriterionResult::title)
      .def_readonly("passed", &CriterionResult::passed)
      .def_readonly("detail", &CriterionResult::detail)
      .def_readonly("seconds", &CriterionResult::seconds)
      .def("__str__", &format_result);

  m.def("run_acceptance",
        [](std::vector<int> only, std::uint64_t seed, int threads) {
          AcceptanceOptions opt;
          opt.only = std::move(only);
          opt.seed = seed;
          opt.threads = threads;
          py::gil_scoped_release release;
          return run_acceptance(opt);
        },
        py::arg("only") = std::vector<int>{}, py::arg("seed") = 20240607, py::arg("threads") = 1);
}

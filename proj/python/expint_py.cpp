#include "expint/densephi.hpp"
#include "expint/error.hpp"
#include "expint/kiops.hpp"
#include "expint/problems.hpp"
#include "expint/steppers.hpp"
#include "expint/study.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <variant>

namespace py = pybind11;
using namespace expint;

namespace {

py::dict report_dict(const StepReport& r) {
  py::dict d;
  d["steps"] = r.steps;
  d["matvecs"] = r.matvecs;
  d["rhs_evals"] = r.rhs_evals;
  d["newton_iters"] = r.newton_iters;
  d["gmres_iters"] = r.gmres_iters;
  d["krylov_projections"] = r.krylov_projections;
  d["krylov_substeps"] = r.krylov_substeps;
  d["krylov_vectors"] = r.krylov_vectors;
  d["ortho_dots"] = r.ortho_dots;
  d["normalizations"] = r.normalizations;
  d["wall_time"] = r.wall_time;
  return d;
}

using ProblemArg = std::variant<Diffusion1DParams, Diffusion2DParams, py::function>;

OdeSystem system_from(const ProblemArg& problem, Eigen::Index dim_hint) {
  if (auto* p = std::get_if<Diffusion1DParams>(&problem)) return make_diffusion_1d(*p);
  if (auto* p = std::get_if<Diffusion2DParams>(&problem)) return make_diffusion_2d(*p);
  py::function f = std::get<py::function>(problem);
  if (dim_hint <= 0) throw DimensionError("integrate: y0 is required for a Python right-hand side");
  OdeSystem s;
  s.dim = dim_hint;
  s.name = "python";
  s.rhs = [f](double t, const StateVector& y) -> StateVector {
    py::gil_scoped_acquire gil;
    return f(t, y).cast<StateVector>();
  };
  return s;
}

StateVector default_initial(const ProblemArg& problem) {
  if (auto* p = std::get_if<Diffusion1DParams>(&problem)) return initial_state_1d(*p);
  if (auto* p = std::get_if<Diffusion2DParams>(&problem)) return Diffusion2D(*p).initial_state();
  return {};
}

}  // namespace

PYBIND11_MODULE(_expint, m) {
  m.doc() = "Exponential integrators with Krylov phi-function evaluation";

  static py::exception<Error> base(m, "ExpintError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<UnsupportedOrderError>(m, "UnsupportedOrderError", PyExc_ValueError);
  py::register_exception<SingularPointError>(m, "SingularPointError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("methods", [] {
    std::vector<std::string> out;
    for (Method x : all_methods()) out.emplace_back(method_name(x));
    return out;
  });
  m.def("nominal_order", [](const std::string& name) { return nominal_order(parse_method(name)); });

  m.def("expm", &expm, py::arg("a"));
  m.def("phi_k", &phi_k, py::arg("a"), py::arg("k"));
  m.def("phi_combination_dense",
        [](const DenseMatrix& a, const std::vector<StateVector>& vs) {
          return phi_combination_dense(a, vs);
        },
        py::arg("a"), py::arg("vs"));

  m.def("kiops_eval",
        [](std::variant<DenseMatrix, py::function> op, std::vector<StateVector> vs,
           std::vector<double> taus, double tol, int m_init, int m_max) {
          PhiCombinationTask task;
          if (auto* a = std::get_if<DenseMatrix>(&op)) {
            const DenseMatrix mat = *a;
            task.op = [mat](const StateVector& v) -> StateVector { return mat * v; };
          } else {
            py::function f = std::get<py::function>(op);
            task.op = [f](const StateVector& v) -> StateVector { return f(v).cast<StateVector>(); };
          }
          task.vs = std::move(vs);
          task.taus = std::move(taus);
          task.tol = tol;
          task.m_init = m_init;
          task.m_max = m_max;
          const KiopsResult res = kiops_eval(task);
          py::dict stats;
          stats["matvecs"] = res.stats.matvecs;
          stats["substeps"] = res.stats.substeps;
          stats["rejected"] = res.stats.rejected;
          stats["krylov_vectors"] = res.stats.krylov_vectors;
          stats["ortho_dots"] = res.stats.ortho_dots;
          stats["normalizations"] = res.stats.normalizations;
          stats["krylov_dims"] = res.stats.krylov_dims;
          return py::make_tuple(res.w, stats);
        },
        py::arg("op"), py::arg("vs"), py::arg("taus") = std::vector<double>{1.0},
        py::arg("tol") = 1e-8, py::arg("m_init") = 10, py::arg("m_max") = 128,
        "sum_i tau^i phi_i(tau A) v_i at every tau; `op` is a matrix or a callable v -> A v.");

  py::class_<Diffusion1DParams>(m, "Diffusion1D")
      .def(py::init<>())
      .def(py::init([](double beta1, double beta2, double sigma, int n_elem, double initial_scale) {
             Diffusion1DParams p;
             p.beta1 = beta1;
             p.beta2 = beta2;
             p.sigma = sigma;
             p.n_elem = n_elem;
             p.initial_scale = initial_scale;
             p.validate();
             return p;
           }),
           py::arg("beta1") = 5e-5, py::arg("beta2") = 5e-3, py::arg("sigma") = 0.05,
           py::arg("n_elem") = 50, py::arg("initial_scale") = 0.0)
      .def_readwrite("beta1", &Diffusion1DParams::beta1)
      .def_readwrite("beta2", &Diffusion1DParams::beta2)
      .def_readwrite("sigma", &Diffusion1DParams::sigma)
      .def_readwrite("n_elem", &Diffusion1DParams::n_elem)
      .def_readwrite("initial_scale", &Diffusion1DParams::initial_scale)
      .def_property_readonly("dim", &Diffusion1DParams::dim)
      .def("rhs", [](const Diffusion1DParams& p, const StateVector& y, double t) { return rhs_1d(p, t, y); },
           py::arg("y"), py::arg("t") = 0.0)
      .def("jac_action", &jac_action_1d, py::arg("y"), py::arg("v"))
      .def("initial_state", &initial_state_1d);

  py::class_<Diffusion2DParams>(m, "Diffusion2D")
      .def(py::init([](double kappa, double eps_perp, double beta1, double beta2, double sigma,
                       int n_side, std::optional<Vec2> uniform_field, double initial_scale) {
             Diffusion2DParams p;
             p.kappa = kappa;
             p.eps_perp = eps_perp;
             p.beta1 = beta1;
             p.beta2 = beta2;
             p.sigma = sigma;
             p.n_side = n_side;
             p.uniform_field = uniform_field;
             p.initial_scale = initial_scale;
             p.validate();
             return p;
           }),
           py::arg("kappa") = 1e-2, py::arg("eps_perp") = 1e-3, py::arg("beta1") = 0.0,
           py::arg("beta2") = 10.0, py::arg("sigma") = 0.05, py::arg("n_side") = 20,
           py::arg("uniform_field") = py::none(), py::arg("initial_scale") = 0.0)
      .def_readwrite("kappa", &Diffusion2DParams::kappa)
      .def_readwrite("eps_perp", &Diffusion2DParams::eps_perp)
      .def_readwrite("beta1", &Diffusion2DParams::beta1)
      .def_readwrite("beta2", &Diffusion2DParams::beta2)
      .def_readwrite("n_side", &Diffusion2DParams::n_side)
      .def_property_readonly("dim", &Diffusion2DParams::dim)
      .def("rhs", [](const Diffusion2DParams& p, const StateVector& y, double t) { return rhs_2d(p, t, y); },
           py::arg("y"), py::arg("t") = 0.0)
      .def("jac_action", &jac_action_2d, py::arg("y"), py::arg("v"))
      .def("initial_state", [](const Diffusion2DParams& p) { return Diffusion2D(p).initial_state(); });

  m.def("two_wire_field",
        [](Vec2 p, Vec2 strengths) {
          TwoWireField f;
          f.strengths = strengths;
          return f(p);
        },
        py::arg("p"), py::arg("strengths") = Vec2{1.0, 1.0});

  m.def("integrate",
        [](ProblemArg problem, const std::string& method, double h, double t0, double tf,
           std::optional<StateVector> y0, double krylov_tol, double newton_tol, double gmres_tol,
           bool analytic_jacobian) {
          StateVector start = y0 ? *y0 : default_initial(problem);
          const OdeSystem sys = system_from(problem, start.size());
          StepperConfig cfg;
          cfg.method = parse_method(method);
          cfg.h = h;
          cfg.krylov_tol = krylov_tol;
          cfg.newton_tol = newton_tol;
          cfg.gmres_tol = gmres_tol;
          cfg.use_analytic_jacobian = analytic_jacobian;
          IntegrationResult res;
          {
            py::gil_scoped_release nogil;
            res = integrate(sys, cfg, t0, tf, start);
          }
          py::dict out;
          out["y"] = res.y;
          out["t"] = res.t;
          out["diverged"] = res.diverged;
          out["failed"] = res.failed;
          out["failure"] = res.failure;
          out["last_step_shortened"] = res.last_step_shortened;
          out["report"] = report_dict(res.report);
          return out;
        },
        py::arg("problem"), py::arg("method"), py::arg("h"), py::arg("t0") = 0.0,
        py::arg("tf") = 0.1, py::arg("y0") = py::none(), py::arg("krylov_tol") = 1e-8,
        py::arg("newton_tol") = 1e-10, py::arg("gmres_tol") = 1e-8,
        py::arg("analytic_jacobian") = true,
        "Fixed-step integration. `problem` is Diffusion1D, Diffusion2D or a callable f(t, y).");

  py::class_<StudyConfig>(m, "StudyConfig")
      .def_readonly("name", &StudyConfig::name)
      .def_readonly("tf", &StudyConfig::tf)
      .def_readonly("h_values", &StudyConfig::h_values)
      .def_property_readonly("methods", [](const StudyConfig& c) {
        std::vector<std::string> out;
        for (Method x : c.methods) out.emplace_back(method_name(x));
        return out;
      });
  m.def("load_study", &load_study, py::arg("path"),
        py::arg("overrides") = std::vector<std::string>{});

  py::class_<StudyReport>(m, "StudyReport")
      .def_readonly("name", &StudyReport::name)
      .def_property_readonly("rows", [](const StudyReport& r) {
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["method"] = std::string(method_name(row.method));
          d["h"] = row.h;
          d["error"] = row.error;
          d["wall_time_s"] = row.wall_time;
          d["steps"] = row.steps;
          d["matvecs"] = row.matvecs;
          d["rhs_evals"] = row.rhs_evals;
          d["newton_iters"] = row.newton_iters;
          d["krylov_projections"] = row.krylov_projections;
          d["diverged"] = row.diverged;
          rows.append(d);
        }
        return rows;
      })
      .def_property_readonly("orders", [](const StudyReport& r) {
        py::dict d;
        for (const auto& o : r.orders) {
          py::object v = o.flat ? py::object(py::str("flat"))
                         : o.order ? py::object(py::float_(*o.order))
                                   : py::object(py::none());
          d[py::str(std::string(method_name(o.method)))] = v;
        }
        return d;
      });
  m.def("run_study",
        [](const StudyConfig& cfg) {
          py::gil_scoped_release nogil;
          return run_study(cfg);
        },
        py::arg("config"));
  m.def("emit_csv", &emit_csv, py::arg("report"), py::arg("prefix"));
}

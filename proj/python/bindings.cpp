#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "svpfp/commands.hpp"
#include "svpfp/field_solver.hpp"
#include "svpfp/phase_space.hpp"
#include "svpfp/rng.hpp"

namespace py = pybind11;
using namespace svpfp;

namespace {

py::array_t<double> to_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  py::array_t<double> a(shape);
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<py::ssize_t> field_shape(const GridSpec& g) {
  std::vector<py::ssize_t> s(static_cast<std::size_t>(g.dim), static_cast<py::ssize_t>(g.nx));
  for (int a = 0; a < g.dim; ++a) s.push_back(static_cast<py::ssize_t>(g.nv));
  return s;
}

GridSpec make_grid(int dim, std::size_t nx, std::size_t nv, double vmax) {
  GridSpec g;
  g.dim = dim;
  g.nx = nx;
  g.nv = nv;
  g.vmax = vmax;
  g.validate();
  return g;
}

py::dict snapshot_dict(const DistributionField& f) {
  const auto& g = f.grid;
  std::vector<double> x(g.nx), v(g.nv);
  for (std::size_t i = 0; i < g.nx; ++i) x[i] = g.x(i);
  for (std::size_t j = 0; j < g.nv; ++j) v[j] = g.v(j);
  py::dict d;
  d["dim"] = g.dim;
  d["time"] = f.time;
  d["vmax"] = g.vmax;
  d["x"] = to_array(x, {static_cast<py::ssize_t>(g.nx)});
  d["v"] = to_array(v, {static_cast<py::ssize_t>(g.nv)});
  d["f"] = to_array(f.values, field_shape(g));
  return d;
}

}  // namespace

PYBIND11_MODULE(_svpfp, m) {
  m.doc() = "stochastic Vlasov-Poisson-Fokker-Planck lab";

  m.def("command_names", &command_names);

  m.def(
      "run_command",
      [](const std::string& name, const std::string& config, std::vector<std::string> overrides,
         std::optional<std::string> output_dir, std::optional<std::uint64_t> seed, int threads) {
        CommandOptions o;
        o.config_path = config;
        o.overrides = std::move(overrides);
        o.output_dir = std::move(output_dir);
        o.seed = seed;
        o.threads = threads;
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_command(name, o, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("name"), py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      py::arg("output_dir") = py::none(), py::arg("seed") = py::none(), py::arg("threads") = 1);

  m.def("load_snapshot", [](const std::string& path) { return snapshot_dict(load_snapshot(path)); });

  m.def(
      "save_snapshot",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> f, double vmax, double time,
         const std::string& path) {
        const int dim = static_cast<int>(f.ndim()) / 2;
        if (dim < 1 || dim > 3 || f.ndim() != 2 * dim) throw py::value_error("f must have shape (nx,)*d + (nv,)*d");
        DistributionField field(make_grid(dim, f.shape(0), f.shape(dim), vmax));
        if (field.values.size() != static_cast<std::size_t>(f.size())) throw py::value_error("axes must be uniform");
        std::copy(f.data(), f.data() + f.size(), field.values.begin());
        field.time = time;
        save_snapshot(field, path);
      },
      py::arg("f"), py::arg("vmax"), py::arg("time"), py::arg("path"));

  m.def(
      "density",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> f, double vmax) {
        const int dim = static_cast<int>(f.ndim()) / 2;
        if (dim < 1 || dim > 3 || f.ndim() != 2 * dim) throw py::value_error("f must have shape (nx,)*d + (nv,)*d");
        DistributionField field(make_grid(dim, f.shape(0), f.shape(dim), vmax));
        std::copy(f.data(), f.data() + f.size(), field.values.begin());
        const auto rho = density(field);
        return to_array(rho, std::vector<py::ssize_t>(static_cast<std::size_t>(dim), f.shape(0)));
      },
      py::arg("f"), py::arg("vmax"));

  m.def(
      "solve_poisson",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> rho) {
        const int dim = static_cast<int>(rho.ndim());
        const auto g = make_grid(dim, rho.shape(0), 8, 1.0);
        const auto sol = solve_poisson(g, std::span<const double>(rho.data(), rho.size()));
        std::vector<py::ssize_t> shape(static_cast<std::size_t>(dim), rho.shape(0));
        shape.push_back(dim);
        return py::make_tuple(to_array(sol.E, shape), sol.rho_bar);
      },
      py::arg("rho"));

  m.def(
      "philox4x32",
      [](std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) { return rng::philox4x32(ctr, key); },
      py::arg("counter"), py::arg("key"));

  py::register_exception<Error>(m, "SvpfpError", PyExc_RuntimeError);
}

#include "slicegap/commands.hpp"
#include "slicegap/config.hpp"
#include "slicegap/errors.hpp"
#include "slicegap/kernels.hpp"
#include "slicegap/samplers.hpp"
#include "slicegap/spectral_oracle.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace slicegap;

namespace {

Eigen::MatrixXd states_matrix(const Trace& trace) {
  const Eigen::Index rows = static_cast<Eigen::Index>(trace.states.size());
  const Eigen::Index cols = rows == 0 ? 0 : trace.states.front().size();
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) out.row(i) = trace.states[static_cast<std::size_t>(i)].transpose();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid slice samplers and spectral gap verification";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<SamplerKind>(m, "SamplerKind")
      .value("SimpleSlice", SamplerKind::SimpleSlice)
      .value("SteppingOutShrinkage", SamplerKind::SteppingOutShrinkage)
      .value("HitAndRunSlice", SamplerKind::HitAndRunSlice)
      .value("HarSoSh", SamplerKind::HarSoSh)
      .value("KStepHybrid", SamplerKind::KStepHybrid);

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("kind", &SamplerConfig::kind)
      .def_readwrite("w", &SamplerConfig::w)
      .def_readwrite("k_inner", &SamplerConfig::k_inner)
      .def_readwrite("inner_kind", &SamplerConfig::inner_kind)
      .def_readwrite("max_loop", &SamplerConfig::max_loop);

  py::class_<TargetDensity>(m, "TargetDensity")
      .def_property_readonly("name", &TargetDensity::name)
      .def_property_readonly("dim", &TargetDensity::dim)
      .def_property_readonly("sup_norm", &TargetDensity::sup_norm)
      .def("__call__", [](const TargetDensity& t, const Point& x) { return t(x); });

  m.def("reference_target", &reference::by_name, py::arg("name"), "Built-in target T1, T2 or U1.");
  m.def("default_width", &reference::default_width, py::arg("name"));

  m.def(
      "run_chain",
      [](const TargetDensity& target, const SamplerConfig& sampler, const Point& x0, std::size_t n,
         std::uint64_t seed) { return states_matrix(run_chain(target, sampler, x0, n, seed)); },
      py::arg("target"), py::arg("sampler"), py::arg("x0"), py::arg("n"), py::arg("seed"),
      "States X_0..X_n as an (n + 1, dim) array.");

  m.def("beta_closed_form", &beta_k_so_sh_closed_form, py::arg("target"), py::arg("w"), py::arg("k"),
        "Closed-form beta_k of the 1D stepping-out/shrinkage sampler.");

  py::class_<Check>(m, "Check")
      .def_readonly("name", &Check::name)
      .def_readonly("lhs", &Check::lhs)
      .def_readonly("rhs", &Check::rhs)
      .def_readonly("tolerance", &Check::tolerance)
      .def_property_readonly("margin", &Check::margin)
      .def_property_readonly("passed", &Check::pass);

  py::class_<GapReport>(m, "GapReport")
      .def_readonly("gap_simple", &GapReport::gap_U)
      .def_readonly("gap_hybrid", &GapReport::gap_H)
      .def_readonly("beta", &GapReport::beta)
      .def_readonly("checks", &GapReport::checks)
      .def_property_readonly("all_pass", &GapReport::all_pass);

  m.def(
      "gap_report",
      [](const std::string& config_text) {
        const ExperimentConfig config = parse_config(config_text);
        py::gil_scoped_release release;
        return run_gap_checks(config);
      },
      py::arg("config_text") = "", "Gap checks for an INI config given as text.");

  m.def("config_hash", [](const std::string& text) { return hash_hex(parse_config(text).hash); }, py::arg("text"));

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_path, std::optional<std::string> out_dir,
         std::optional<std::uint64_t> seed) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = slicegap::run_command(command, config_path, Overrides{out_dir, seed}, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config_path") = "", py::arg("out_dir") = py::none(), py::arg("seed") = py::none(),
      "Runs sample, gap, verify or diag; returns (exit_code, stdout, stderr).");
}

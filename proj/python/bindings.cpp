#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "oflc/config.hpp"
#include "oflc/energy_optimizer.hpp"
#include "oflc/errors.hpp"
#include "oflc/linearizing_controller.hpp"
#include "oflc/machine_model.hpp"
#include "oflc/sim_harness.hpp"
#include "oflc/torque_loop.hpp"

namespace py = pybind11;
using namespace oflc;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Optimal feedback-linearization torque control for PMSMs";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<Error>(m, "OflcError", PyExc_RuntimeError);
  py::register_exception<DegenerateB>(m, "DegenerateB", base.ptr());
  py::register_exception<OrthogonalityViolation>(m, "OrthogonalityViolation", base.ptr());
  py::register_exception<NegativeDiscriminant>(m, "NegativeDiscriminant", base.ptr());
  py::register_exception<NonFinite>(m, "NonFinite", base.ptr());
  py::register_exception<PoorFit>(m, "PoorFit", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());

  py::class_<MachineParams>(m, "MachineParams")
      .def(py::init<double, double, double, double, int>(), py::arg("R"), py::arg("L_d"),
           py::arg("L_q"), py::arg("psi"), py::arg("p"))
      .def_static("reference", &MachineParams::reference)
      .def_property_readonly("R", &MachineParams::R)
      .def_property_readonly("L_d", &MachineParams::L_d)
      .def_property_readonly("L_q", &MachineParams::L_q)
      .def_property_readonly("psi", &MachineParams::psi)
      .def_property_readonly("p", &MachineParams::p)
      .def_property_readonly("eta", &MachineParams::eta)
      .def_property_readonly("mu", &MachineParams::mu);

  py::class_<DqState>(m, "DqState")
      .def(py::init<double, double>(), py::arg("i_d") = 0.0, py::arg("i_q") = 0.0)
      .def_readwrite("i_d", &DqState::i_d)
      .def_readwrite("i_q", &DqState::i_q)
      .def("__repr__", [](const DqState& s) {
        return "DqState(" + format_double(s.i_d) + ", " + format_double(s.i_q) + ")";
      });
  py::class_<DqVoltage>(m, "DqVoltage")
      .def(py::init<double, double>(), py::arg("v_d") = 0.0, py::arg("v_q") = 0.0)
      .def_readwrite("v_d", &DqVoltage::v_d)
      .def_readwrite("v_q", &DqVoltage::v_q);
  py::class_<AbcTriple>(m, "AbcTriple")
      .def(py::init<double, double, double>(), py::arg("a") = 0.0, py::arg("b") = 0.0,
           py::arg("c") = 0.0)
      .def_readwrite("a", &AbcTriple::a)
      .def_readwrite("b", &AbcTriple::b)
      .def_readwrite("c", &AbcTriple::c);

  m.def("park_clarke", &park_clarke, py::arg("theta"), py::arg("abc"), py::arg("params"));
  m.def("inverse_park_clarke",
        py::overload_cast<double, const DqVoltage&, const MachineParams&>(&inverse_park_clarke),
        py::arg("theta"), py::arg("v"), py::arg("params"));
  m.def("torque", &torque, py::arg("i"), py::arg("params"));
  m.def("dq_dynamics", &dq_dynamics, py::arg("i"), py::arg("v"), py::arg("omega"),
        py::arg("params"));
  m.def("h_vector", &h_vector, py::arg("i"), py::arg("omega"), py::arg("params"));

  py::class_<LinearizationTerms>(m, "LinearizationTerms")
      .def_readonly("b", &LinearizationTerms::b)
      .def_readonly("phi", &LinearizationTerms::phi)
      .def_readonly("b_norm_sq", &LinearizationTerms::b_norm_sq);
  m.def("compute_terms",
        [](const DqState& i, double omega, const MachineParams& p) {
          return compute_terms(i, omega, p);
        },
        py::arg("i"), py::arg("omega"), py::arg("params"));
  m.def("linearize", &linearize, py::arg("u"), py::arg("z"), py::arg("terms"));

  py::class_<SaturationReport>(m, "SaturationReport")
      .def_readonly("u_clamped", &SaturationReport::u_clamped)
      .def_readonly("u_original", &SaturationReport::u_original)
      .def_readonly("z_at_limit", &SaturationReport::z_at_limit)
      .def_readonly("z_zeroed", &SaturationReport::z_zeroed)
      .def_readonly("b_degenerate", &SaturationReport::b_degenerate)
      .def_readonly("ill_conditioned", &SaturationReport::ill_conditioned);
  py::class_<CostateMatrices>(m, "CostateMatrices")
      .def_readonly("A", &CostateMatrices::A)
      .def_readonly("Lambda", &CostateMatrices::Lambda)
      .def_readonly("Gamma", &CostateMatrices::Gamma)
      .def_readonly("dphi_di", &CostateMatrices::dphi_di)
      .def_readonly("dh_di", &CostateMatrices::dh_di);
  m.def("costate_matrices", &costate_matrices, py::arg("i"), py::arg("omega"), py::arg("u"),
        py::arg("terms"), py::arg("params"));
  m.def("estimate_costate",
        [](const DqState& i, const Mat2& A, double h) {
          const CostateEstimate e = estimate_costate(i, A, h);
          return py::make_tuple(Vec2(e.costate.lambda), e.ill_conditioned);
        },
        py::arg("i"), py::arg("A"), py::arg("horizon"),
        "Returns (lambda, ill_conditioned).");
  m.def("projection", &projection, py::arg("b"));
  m.def("clamp_torque_command",
        [](double u, const LinearizationTerms& t, double v_max) {
          const ClampedTorque c = clamp_torque_command(u, t, v_max);
          return py::make_tuple(c.u, c.report.u_clamped, c.u_min, c.u_max);
        },
        py::arg("u"), py::arg("terms"), py::arg("v_max"),
        "Returns (u_feasible, clamped, u_min, u_max).");
  m.def("z_limit", &z_limit, py::arg("u_feasible"), py::arg("terms"), py::arg("v_max"));
  m.def("optimal_z",
        [](const Vec2& lambda, const Mat2& B, const Mat2& L_inv, double z_max, double alpha_z) {
          const OptimalZ o = optimal_z(Costate{lambda}, B, L_inv, z_max, alpha_z);
          return py::make_tuple(Vec2(o.z), o.report);
        },
        py::arg("lam"), py::arg("B"), py::arg("L_inv"), py::arg("z_max"),
        py::arg("alpha_z") = 1.0, "Returns (z, SaturationReport).");
  m.def("hamiltonian",
        [](const DqState& i, const Vec2& lambda, double u, const Vec2& z,
           const LinearizationTerms& t, double omega, const MachineParams& p) {
          return hamiltonian(i, Costate{lambda}, u, z, t, omega, p);
        },
        py::arg("i"), py::arg("lam"), py::arg("u"), py::arg("z"), py::arg("terms"),
        py::arg("omega"), py::arg("params"));

  py::class_<PiGains>(m, "PiGains")
      .def(py::init<double, double>(), py::arg("kp") = 5.0, py::arg("ki") = 500.0)
      .def_readwrite("kp", &PiGains::kp)
      .def_readwrite("ki", &PiGains::ki);

  py::enum_<ZChannel>(m, "ZChannel")
      .value("OPTIMAL", ZChannel::kOptimal)
      .value("DISABLED", ZChannel::kDisabled);

  py::class_<ControllerConfig>(m, "ControllerConfig")
      .def(py::init<>())
      .def_readwrite("params", &ControllerConfig::params)
      .def_readwrite("v_max", &ControllerConfig::v_max)
      .def_readwrite("dt", &ControllerConfig::dt)
      .def_readwrite("horizon", &ControllerConfig::horizon)
      .def_readwrite("gains", &ControllerConfig::gains)
      .def_readwrite("alpha_z", &ControllerConfig::alpha_z)
      .def_readwrite("z_channel", &ControllerConfig::z_channel);

  py::class_<SensorSample>(m, "SensorSample")
      .def(py::init([](double t, double theta, double omega, const AbcTriple& i_abc) {
             return SensorSample{t, theta, omega, i_abc};
           }),
           py::arg("t"), py::arg("theta"), py::arg("omega"), py::arg("i_abc"));

  py::class_<ControlFrame>(m, "ControlFrame")
      .def_readonly("t", &ControlFrame::t)
      .def_readonly("theta", &ControlFrame::theta)
      .def_readonly("omega", &ControlFrame::omega)
      .def_readonly("i_dq", &ControlFrame::i_dq)
      .def_readonly("tau_ref", &ControlFrame::tau_ref)
      .def_readonly("tau_est", &ControlFrame::tau_est)
      .def_readonly("u_raw", &ControlFrame::u_raw)
      .def_readonly("u_feasible", &ControlFrame::u_feasible)
      .def_property_readonly("lam", [](const ControlFrame& f) { return Vec2(f.lambda.lambda); })
      .def_readonly("z", &ControlFrame::z)
      .def_readonly("v_dq", &ControlFrame::v_dq)
      .def_readonly("v_abc", &ControlFrame::v_abc)
      .def_readonly("report", &ControlFrame::report)
      .def_readonly("copper_loss_w", &ControlFrame::copper_loss_w);

  py::class_<TorqueController>(m, "TorqueController")
      .def(py::init<ControllerConfig>(), py::arg("config"))
      .def("step", &TorqueController::step, py::arg("sensors"), py::arg("tau_ref"))
      .def("reset", &TorqueController::reset);

  py::enum_<ControllerKind>(m, "ControllerKind")
      .value("OFLC", ControllerKind::kOflc)
      .value("FLC_Z0", ControllerKind::kFlcZ0)
      .value("ID_ZERO", ControllerKind::kIdZero);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readonly("params", &Scenario::params)
      .def_readwrite("duration", &Scenario::duration)
      .def_readwrite("dt_plant", &Scenario::dt_plant)
      .def_readwrite("dt_ctrl", &Scenario::dt_ctrl)
      .def_readwrite("horizon", &Scenario::horizon)
      .def_readwrite("v_max", &Scenario::v_max)
      .def("validate", &Scenario::validate);
  m.def("standard_scenario_s1", &standard_scenario_s1);
  m.def("parse_scenario", [](const std::string& text) { return parse_config(text).scenario; },
        py::arg("text"));
  m.def("serialize_scenario",
        [](const Scenario& s) { return serialize_config(s, RunConfig{}); }, py::arg("scenario"));

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("frames", &RunResult::frames)
      .def_readonly("cost_integral", &RunResult::cost_integral)
      .def_readonly("copper_energy_j", &RunResult::copper_energy_j)
      .def_readonly("rms_tracking_error", &RunResult::rms_tracking_error)
      .def_readonly("aborted", &RunResult::aborted)
      .def_readonly("abort_reason", &RunResult::abort_reason);
  m.def("run_scenario", &run_scenario, py::arg("scenario"), py::arg("controller"),
        py::call_guard<py::gil_scoped_release>());
}

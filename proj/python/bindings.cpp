#include "phaselock/analysis.hpp"
#include "phaselock/integrate.hpp"
#include "phaselock/lyapunov.hpp"
#include "phaselock/model.hpp"
#include "phaselock/pullin.hpp"
#include "phaselock/signal_space.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace phaselock;

PYBIND11_MODULE(_phaselock, m) {
    m.doc() = "Coherent-receiver phase-loop analysis";

    py::class_<PDCharacteristic>(m, "PDCharacteristic")
        .def(py::init<double>(), py::arg("amplitude") = 1.0)
        .def_readonly("amplitude", &PDCharacteristic::amplitude)
        .def("__call__", &PDCharacteristic::operator());

    py::class_<StateSpace>(m, "StateSpace")
        .def_readonly("a_mat", &StateSpace::a_mat)
        .def_readonly("b", &StateSpace::b)
        .def_readonly("c", &StateSpace::c)
        .def_readonly("h", &StateSpace::h)
        .def("dc_gain", &StateSpace::dc_gain)
        .def("dc_singular", &StateSpace::dc_singular);

    m.def("leadlag_realize", &leadlag_realize, py::arg("a"), py::arg("alpha"), py::arg("beta"));
    m.def("pi_realize", &pi_realize, py::arg("tau1"), py::arg("tau2"));

    py::class_<PhaseModel>(m, "PhaseModel")
        .def(py::init([](const StateSpace& filter, double kvco, double omega, double L) {
                 PhaseModel mm;
                 mm.filter = filter;
                 mm.kvco = kvco;
                 mm.omega_delta_free = omega;
                 mm.pd = PDCharacteristic(L);
                 mm.validate();
                 return mm;
             }),
             py::arg("filter"), py::arg("kvco"), py::arg("omega_delta_free"),
             py::arg("pd_amplitude") = 1.0)
        .def_readonly("filter", &PhaseModel::filter)
        .def_readonly("kvco", &PhaseModel::kvco)
        .def_readonly("omega_delta_free", &PhaseModel::omega_delta_free);

    py::class_<LoopState>(m, "LoopState")
        .def(py::init([](Eigen::VectorXd x, double theta) {
                 return LoopState{std::move(x), theta};
             }),
             py::arg("x"), py::arg("theta_delta"))
        .def_readonly("x", &LoopState::x)
        .def_readonly("theta_delta", &LoopState::theta_delta);

    m.def("phase_rhs", &phase_rhs);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states)
        .def("at", &Trajectory::at)
        .def("theta_at", &Trajectory::theta_at);

    m.def(
        "integrate",
        [](const PhaseModel& model, const LoopState& init, double t_end) {
            return integrate(model, init, t_end);
        },
        py::arg("model"), py::arg("init"), py::arg("t_end"));

    py::class_<Equilibrium>(m, "Equilibrium")
        .def_readonly("x_star", &Equilibrium::x_star)
        .def_readonly("theta_star", &Equilibrium::theta_star)
        .def_readonly("eigenvalues", &Equilibrium::eigenvalues)
        .def_property_readonly("cls",
                               [](const Equilibrium& e) { return to_string(e.cls); })
        .def("is_stable", &Equilibrium::is_stable);

    m.def("find_equilibria", &find_equilibria);

    py::class_<CycleResult>(m, "CycleResult")
        .def_readonly("section_phase", &CycleResult::section_phase)
        .def_readonly("x_star", &CycleResult::x_star)
        .def_readonly("period", &CycleResult::period)
        .def_readonly("multiplier", &CycleResult::multiplier)
        .def_property_readonly("cls", [](const CycleResult& c) { return to_string(c.cls); });

    py::class_<CyclesReport>(m, "CyclesReport")
        .def_readonly("cycles", &CyclesReport::cycles)
        .def_readonly("min_g", &CyclesReport::min_g)
        .def_readonly("min_g_location", &CyclesReport::min_g_location);

    m.def(
        "find_cycles",
        [](const PhaseModel& model, double s) { return find_cycles(model, s); },
        py::arg("model"), py::arg("section_phase") = 0.0);

    py::class_<Outcome>(m, "Outcome")
        .def_property_readonly("kind", [](const Outcome& o) { return to_string(o.kind); })
        .def_readonly("time", &Outcome::time)
        .def_readonly("final_theta", &Outcome::final_theta)
        .def_readonly("final_x", &Outcome::final_x);

    m.def(
        "classify_trajectory",
        [](const PhaseModel& model, const LoopState& init) {
            return classify_trajectory(model, init);
        },
        py::arg("model"), py::arg("init"));

    py::class_<PullInResult>(m, "PullInResult")
        .def_property_readonly("status",
                               [](const PullInResult& r) { return to_string(r.status); })
        .def_readonly("omega_lo", &PullInResult::omega_lo)
        .def_readonly("omega_hi", &PullInResult::omega_hi)
        .def("omega_pullin", &PullInResult::omega_pullin);

    m.def(
        "pull_in_estimate",
        [](const ModelFamily& family, double tol, double omega_max) {
            return pull_in_estimate(family, tol, omega_max);
        },
        py::arg("family"), py::arg("tol"), py::arg("omega_search_max") = 0.0);

    py::class_<PiParams>(m, "PiParams")
        .def(py::init([](double tau1, double tau2, double kvco, double omega) {
                 return PiParams{tau1, tau2, kvco, omega};
             }),
             py::arg("tau1"), py::arg("tau2"), py::arg("kvco"),
             py::arg("omega_delta_free") = 0.0);

    m.def("lyapunov_v", &lyapunov_v);
    m.def("lyapunov_vdot", &lyapunov_vdot);

    py::class_<OpticalParams>(m, "OpticalParams")
        .def(py::init<>())
        .def_readwrite("p1", &OpticalParams::p1)
        .def_readwrite("p2", &OpticalParams::p2)
        .def_readwrite("responsivity", &OpticalParams::responsivity)
        .def_readwrite("tia_gain", &OpticalParams::tia_gain)
        .def_readwrite("carrier", &OpticalParams::carrier);

    m.def("pd_identity_residual", &pd_identity_residual, py::arg("theta1"), py::arg("theta2"),
          py::arg("m"), py::arg("params"));
}

#include "phaselock/integrate.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace phaselock;

namespace {
constexpr double kPi = std::numbers::pi;

PhaseModel rotating_model() {
    // above the hold-in bound: no equilibria, every trajectory rotates
    PhaseModel m;
    m.filter = leadlag_realize(0.0, 1.0, 1.0);  // H(0) = 1
    m.kvco = 10.0;
    m.omega_delta_free = 20.0;
    return m;
}
}  // namespace

TEST_CASE("stiff linear decay is reproduced over 28 decades") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-300;  // must not mask the shrinking solution
    Eigen::VectorXd y0 = Eigen::VectorXd::Constant(1, 1.0);
    Dopri5 st([](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = -63.1656 * y; },
              0.0, y0, cfg);
    while (st.step(1.0)) {
    }
    const double want = std::exp(-63.1656);
    CHECK(std::abs(st.y()[0] - want) / want < 1e-8);
}

TEST_CASE("fixed-step mode shows fifth-order convergence") {
    auto rhs = [](double t, const Eigen::VectorXd& y, Eigen::VectorXd& d) {
        d[0] = std::cos(t) * y[0];  // solution exp(sin t)
    };
    auto err_at = [&](double h) {
        IntegratorConfig cfg;
        cfg.fixed_step = h;
        Eigen::VectorXd y0 = Eigen::VectorXd::Constant(1, 1.0);
        Dopri5 st(rhs, 0.0, y0, cfg);
        while (st.step(2.0)) {
        }
        return std::abs(st.y()[0] - std::exp(std::sin(2.0)));
    };
    const double e1 = err_at(0.1);
    const double e2 = err_at(0.05);
    const double ratio = e1 / e2;
    CHECK(ratio > 20.0);
    CHECK(ratio < 45.0);
}

TEST_CASE("dense output interpolates the accepted step accurately") {
    IntegratorConfig cfg;
    Eigen::VectorXd y0(1);
    y0[0] = 1.0;
    Dopri5 st([](double t, const Eigen::VectorXd& y, Eigen::VectorXd& d) {
                  d[0] = std::cos(t) * y[0];
              },
              0.0, y0, cfg);
    int checked = 0;
    while (st.step(2.0) && checked < 200) {
        const double tm = 0.5 * (st.t_prev() + st.t());
        const double want = std::exp(std::sin(tm));
        CHECK(std::abs(st.dense_component(tm, 0) - want) < 1e-9 * want);
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("trajectory storage and dense reconstruction agree") {
    PhaseModel m = rotating_model();
    LoopState init;
    init.x = Eigen::VectorXd::Zero(1);
    init.theta_delta = 0.25;
    Trajectory traj = integrate(m, init, 3.0);
    REQUIRE(traj.times.size() >= 2);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == 3.0);
    // endpoints of each stored step match the dense interpolant
    for (size_t k = 1; k + 1 < traj.times.size(); k += 3) {
        const Eigen::VectorXd y = traj.at(traj.times[k]);
        CHECK((y - traj.states[k]).norm() < 1e-10);
    }
    CHECK(traj.theta_at(3.0) == doctest::Approx(traj.states.back()[1]));
}

TEST_CASE("section crossings advance by pi with positive phase velocity") {
    PhaseModel m = rotating_model();
    LoopState init;
    init.x = Eigen::VectorXd::Zero(1);
    init.theta_delta = 0.1;
    Trajectory traj = integrate(m, init, 5.0);
    const double s = 0.4;
    const auto crossings = section_crossings(traj, m, s);
    REQUIRE(crossings.size() >= 3);
    for (size_t i = 0; i < crossings.size(); ++i) {
        const double k = (crossings[i].theta - s) / kPi;
        CHECK(std::abs(k - std::round(k)) < 1e-9);
        Eigen::VectorXd y(2), dy(2);
        y << crossings[i].x[0], crossings[i].theta;
        phase_rhs_flat(y, m, dy);
        CHECK(dy[1] > 0.0);
        if (i > 0) {
            CHECK(crossings[i].t > crossings[i - 1].t);
            CHECK(crossings[i].theta - crossings[i - 1].theta ==
                  doctest::Approx(kPi).epsilon(1e-9));
        }
    }
}

TEST_CASE("integration is deterministic") {
    PhaseModel m = rotating_model();
    LoopState init;
    init.x = Eigen::VectorXd::Constant(1, 0.3);
    init.theta_delta = 1.0;
    Trajectory t1 = integrate(m, init, 2.0);
    Trajectory t2 = integrate(m, init, 2.0);
    REQUIRE(t1.times.size() == t2.times.size());
    for (size_t k = 0; k < t1.times.size(); ++k) {
        CHECK(t1.times[k] == t2.times[k]);
        CHECK(t1.states[k] == t2.states[k]);
    }
}

TEST_CASE("finite-time blowup raises instead of looping") {
    IntegratorConfig cfg;
    Eigen::VectorXd y0 = Eigen::VectorXd::Constant(1, 1.0);
    Dopri5 st([](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d[0] = y[0] * y[0]; },
              0.0, y0, cfg);
    CHECK_THROWS_AS(
        [&] {
            while (st.step(2.0)) {  // solution 1/(1-t) blows up at t = 1
            }
        }(),
        std::runtime_error);
}

TEST_CASE("wrap_display maps onto [-pi/2, pi/2)") {
    CHECK(wrap_display(0.0) == 0.0);
    CHECK(wrap_display(kPi) == doctest::Approx(0.0));
    CHECK(wrap_display(kPi / 2.0) == doctest::Approx(-kPi / 2.0));
    CHECK(wrap_display(0.3 + 7.0 * kPi) == doctest::Approx(0.3));
    CHECK(wrap_display(-0.3 - 4.0 * kPi) == doctest::Approx(-0.3));
    for (double th : {-9.7, -1.0, 0.0, 2.2, 31.4}) {
        const double w = wrap_display(th);
        CHECK(w >= -kPi / 2.0);
        CHECK(w < kPi / 2.0);
    }
}

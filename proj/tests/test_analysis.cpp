#include "phaselock/analysis.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace phaselock;

namespace {
constexpr double kPi = std::numbers::pi;

PhaseModel benchmark_model(double kvco = 100.0) {
    PhaseModel m;
    m.filter = leadlag_realize(0.2922, 63.1656, 63.1656);
    m.kvco = kvco;
    m.omega_delta_free = 89.5;
    return m;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

TEST_CASE("equilibria of the lead-lag loop: focus and saddle on one x level") {
    const PhaseModel m = benchmark_model();
    const auto eqs = find_equilibria(m);
    REQUIRE(eqs.size() == 2);
    // sin(2 theta*) = omega/(kvco*H0*L) = 0.895, H0 = 1
    const double half = 0.5 * std::asin(0.895);
    CHECK(eqs[0].theta_star == doctest::Approx(half).epsilon(1e-12));
    CHECK(eqs[1].theta_star == doctest::Approx(kPi / 2.0 - half).epsilon(1e-12));
    for (const auto& eq : eqs)
        CHECK(eq.x_star[0] == doctest::Approx(0.895 / 63.1656).epsilon(1e-12));
    CHECK(eqs[0].cls == EquilibriumClass::StableFocus);
    CHECK(eqs[1].cls == EquilibriumClass::Saddle);

    // residual: the rhs vanishes at each equilibrium
    for (const auto& eq : eqs) {
        LoopState s{eq.x_star, eq.theta_star};
        const LoopState d = phase_rhs(s, m);
        CHECK(std::abs(d.x[0]) < 1e-10);
        CHECK(std::abs(d.theta_delta) < 1e-10);
    }
}

TEST_CASE("no equilibria beyond the hold-in bound") {
    PhaseModel m = benchmark_model();
    m.omega_delta_free = 100.5;  // hold-in = kvco*H0*L = 100
    CHECK(find_equilibria(m).empty());
}

TEST_CASE("PI equilibria sit at sin(2 theta) = 0 with x* = omega/kvco") {
    PhaseModel m;
    m.filter = pi_realize(2.0, 1.0);
    m.kvco = 4.0;
    m.omega_delta_free = 8.0;
    const auto eqs = find_equilibria(m);
    REQUIRE(eqs.size() == 2);
    CHECK(eqs[0].theta_star == 0.0);
    CHECK(eqs[1].theta_star == doctest::Approx(kPi / 2.0));
    CHECK(eqs[0].x_star[0] == doctest::Approx(2.0).epsilon(1e-14));
    // J at theta=0: [[0, 1], [-4, -4]] -> repeated root at -2
    CHECK(eqs[0].cls == EquilibriumClass::StableNode);
    CHECK(eqs[0].eigenvalues[0].real() == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(eqs[1].cls == EquilibriumClass::Saddle);
}

TEST_CASE("PI Jacobian eigenvalues: frozen spot value") {
    PhaseModel m;
    m.filter = pi_realize(2.0, 1.0);
    m.kvco = 1.0;
    // J at theta=0: [[0, 1], [-1, -1]] -> -1/2 +- i sqrt(3)/2
    const Eigen::MatrixXd j = jacobian(m, Eigen::VectorXd::Zero(1), 0.0);
    Eigen::EigenSolver<Eigen::MatrixXd> es(j);
    for (int i = 0; i < 2; ++i) {
        CHECK(es.eigenvalues()[i].real() == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(std::abs(es.eigenvalues()[i].imag()) ==
              doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("Jacobian matches a finite difference of the rhs") {
    const PhaseModel m = benchmark_model();
    std::mt19937_64 rng(301);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd y(2);
        y << -0.1 + 0.2 * uniform01(rng), kPi * uniform01(rng);
        const Eigen::MatrixXd j = jacobian(m, y.head(1), y[1]);
        const double eps = 1e-7;
        Eigen::VectorXd f0(2), f1(2);
        phase_rhs_flat(y, m, f0);
        for (int col = 0; col < 2; ++col) {
            Eigen::VectorXd yp = y;
            yp[col] += eps;
            phase_rhs_flat(yp, m, f1);
            for (int row = 0; row < 2; ++row)
                CHECK((f1[row] - f0[row]) / eps ==
                      doctest::Approx(j(row, col)).epsilon(1e-5));
        }
    }
}

TEST_CASE("singular non-PI filter shapes are rejected") {
    PhaseModel m;
    StateSpace weird;
    weird.a_mat = Eigen::MatrixXd::Zero(2, 2);
    weird.b = Eigen::VectorXd::Ones(2);
    weird.c = Eigen::VectorXd::Ones(2);
    weird.h = 0.0;
    m.filter = weird;
    CHECK_THROWS_AS(find_equilibria(m), SingularFilterDC);
}

TEST_CASE("return map: capture near the equilibrium, return when rotating") {
    const PhaseModel m = benchmark_model();
    AnalysisConfig cfg;
    const auto captured = return_map(m, 0.0141, 0.554, cfg);
    CHECK(captured.kind == ReturnMapResult::Kind::Captured);
    const auto rotated = return_map(m, -0.5, 0.0, cfg);
    CHECK(rotated.kind == ReturnMapResult::Kind::Returned);
    CHECK(rotated.time > 0.0);
}

TEST_CASE("stable rotating cycle: fixed point, multiplier, reproduction") {
    const PhaseModel m = benchmark_model();
    AnalysisConfig cfg;
    cfg.grid_points = 120;
    const CyclesReport rep = find_cycles(m, -0.02, 0.005, 0.0, cfg);
    REQUIRE(rep.cycles.size() == 1);
    const CycleResult& c = rep.cycles[0];
    CHECK(c.cls == CycleClass::Stable);
    CHECK(c.x_star == doctest::Approx(-0.0030390).epsilon(1e-3));
    CHECK(std::abs(c.multiplier) < 1.0);

    const double scale = model_scale(m);
    // fixed-point residual
    const auto back = return_map(m, c.x_star, 0.0, cfg);
    REQUIRE(back.kind == ReturnMapResult::Kind::Returned);
    CHECK(std::abs(back.x - c.x_star) <= 1e-9 * scale);
    CHECK(back.time == doctest::Approx(c.period).epsilon(1e-9));

    // one-period reproduction through the full integrator
    LoopState init;
    init.x = Eigen::VectorXd::Constant(1, c.x_star);
    init.theta_delta = 0.0;
    Trajectory traj = integrate(m, init, c.period, cfg.integrator);
    CHECK(std::abs(traj.states.back()[1] - kPi) < 1e-7 * scale);
    CHECK(std::abs(traj.states.back()[0] - c.x_star) < 1e-7 * scale);
}

TEST_CASE("cycle set is independent of the section phase") {
    const PhaseModel m = benchmark_model();
    AnalysisConfig cfg;
    cfg.grid_points = 120;
    const CyclesReport r0 = find_cycles(m, -0.02, 0.005, 0.0, cfg);
    const CyclesReport r1 = find_cycles(m, -0.02, 0.02, 0.8, cfg);
    REQUIRE(r0.cycles.size() == 1);
    REQUIRE(r1.cycles.size() == 1);
    // same orbit, so equal periods; the section coordinate differs
    CHECK(r0.cycles[0].period == doctest::Approx(r1.cycles[0].period).epsilon(1e-6));
    CHECK(r0.cycles[0].cls == r1.cycles[0].cls);
}

TEST_CASE("trajectory classification separates lock from rotation") {
    const PhaseModel m = benchmark_model();
    LoopState near_eq;
    near_eq.x = Eigen::VectorXd::Constant(1, 0.0141);
    near_eq.theta_delta = 0.56;
    const Outcome lock = classify_trajectory(m, near_eq);
    CHECK(lock.kind == Outcome::Kind::Lock);

    LoopState on_cycle;
    on_cycle.x = Eigen::VectorXd::Constant(1, -0.2);
    on_cycle.theta_delta = 0.0;
    const Outcome cycle = classify_trajectory(m, on_cycle);
    CHECK(cycle.kind == Outcome::Kind::Cycle);
    CHECK(cycle.final_theta > kPi);  // the phase kept advancing
}

TEST_CASE("default budget is positive and finite") {
    CHECK(default_budget(benchmark_model()) > 0.0);
    PhaseModel pi;
    pi.filter = pi_realize(0.01, 1.0);
    pi.omega_delta_free = 100.0;
    const double b = default_budget(pi);
    CHECK(b > 0.0);
    CHECK(std::isfinite(b));
}

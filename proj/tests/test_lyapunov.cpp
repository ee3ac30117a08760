#include "phaselock/lyapunov.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace phaselock;

namespace {
constexpr double kPi = std::numbers::pi;
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace

TEST_CASE("energy function: value at the lock set and spot values") {
    PiParams p{2.0, 1.0, 1.0, 0.0};
    CHECK(lyapunov_v(0.0, 0.0, p) == 0.0);
    CHECK(lyapunov_v(0.0, kPi / 2.0, p) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lyapunov_v(1.0, 0.0, p) == doctest::Approx(1.0).epsilon(1e-15));  // (K tau1/2) x^2

    PiParams q{0.5, 2.0, 4.0, 8.0};
    CHECK(lyapunov_v(2.0, 0.0, q) == 0.0);  // x = omega/kvco
    CHECK(lyapunov_v(2.0, kPi, q) == doctest::Approx(0.0));
}

TEST_CASE("energy derivative: closed form") {
    PiParams p{2.0, 3.0, 5.0, 7.0};
    CHECK(lyapunov_vdot(0.3, 0.0, p) == 0.0);
    CHECK(lyapunov_vdot(-4.0, kPi / 4.0, p) == doctest::Approx(-7.5).epsilon(1e-15));
    CHECK(lyapunov_vdot(1.0, kPi / 2.0, p) == doctest::Approx(0.0));
}

TEST_CASE("chain rule oracle pins the derivative's exponent placement") {
    std::mt19937_64 rng(401);
    PiParams p{0.7, 0.3, 2.5, 0.0};
    for (int i = 0; i < 10000; ++i) {
        p.omega_delta_free = -50.0 + 100.0 * uniform01(rng);
        const double x = -10.0 + 20.0 * uniform01(rng);
        const double theta = -5.0 + 10.0 * uniform01(rng);
        const double analytic = lyapunov_vdot(x, theta, p);
        const double chain = lyapunov_vdot_chain(x, theta, p);
        const double scale = std::max(std::abs(analytic), p.kvco * p.tau2 / p.tau1);
        CHECK(std::abs(analytic - chain) <= 1e-9 * scale);
    }
}

TEST_CASE("sign sweep: nonpositive everywhere, zero exactly on sin(2 theta) = 0") {
    PiParams p{0.5, 1.5, 2.0, 0.0};
    const auto rep = vdot_sign_sweep(p, 100, 101, {0.0, 3.0, 2000.0});
    CHECK(rep.points == 100 * 101 * 3);
    CHECK(rep.max_vdot <= 0.0);
    CHECK(rep.sign_violations == 0);
    CHECK(rep.equality_violations == 0);
    CHECK(rep.max_oracle_rel_err <= 1e-9);
}

TEST_CASE("every trajectory locks with monotone energy") {
    PiParams p{0.01, 1.0, 1.0, 0.0};
    std::mt19937_64 rng(402);
    std::vector<std::pair<double, double>> inits;
    for (int i = 0; i < 5; ++i)
        inits.emplace_back(-10.0 + 20.0 * uniform01(rng), kPi * uniform01(rng));
    const auto rep = certify_global_convergence(p, inits, {1.0, 100.0});
    CHECK(rep.pass());
    CHECK(rep.max_v_increase <= 1e-7);
    CHECK(rep.violations.empty());
}

TEST_CASE("an initial condition on the saddle stays put without complaint") {
    PiParams p{0.01, 1.0, 1.0, 0.0};
    const auto rep = certify_global_convergence(p, {{3.0, kPi / 2.0}}, {3.0});
    CHECK(rep.pass());  // x = omega/kvco, theta = pi/2: equilibrium start
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(lyapunov_v(0.0, 0.0, PiParams{0.0, 1.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(certify_global_convergence(PiParams{1.0, 1.0, 1.0, 0.0}, {}, {1.0}),
                    std::invalid_argument);
}

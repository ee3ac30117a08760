#include "phaselock/signal_space.hpp"

#include <cmath>
#include <numbers>

namespace phaselock {

namespace {
void check_data_symbol(int m) {
    if (m != 1 && m != -1)
        throw std::invalid_argument("data symbol m must be +1 or -1");
}
}  // namespace

FieldQuad hybrid_outputs(double theta1, double theta2, int m, const OpticalParams& params) {
    check_data_symbol(m);
    params.validate();
    const double in = 0.5 * m * std::sqrt(params.p1) * std::cos(theta1);
    const double lo = 0.5 * std::sqrt(params.p2) * std::cos(theta2);
    const double lo_q = 0.5 * std::sqrt(params.p2) * std::cos(theta2 + std::numbers::pi / 2);
    return {in + lo, in - lo, in + lo_q, in - lo_q};
}

CurrentQuad photocurrents(double theta1, double theta2, int m, const OpticalParams& params) {
    check_data_symbol(m);
    params.validate();
    const double r8 = params.responsivity / 8.0;
    const double base = params.p1 + params.p2;
    const double beat = 2.0 * m * std::sqrt(params.p1 * params.p2);
    const double ci = std::cos(theta1 - theta2);
    const double cq = std::cos(theta1 - theta2 - std::numbers::pi / 2);
    return {r8 * (base + beat * ci), r8 * (base - beat * ci),
            r8 * (base + beat * cq), r8 * (base - beat * cq)};
}

TiaOutputs tia_outputs(const CurrentQuad& currents, double tia_gain) {
    return {tia_gain * (currents.i1 - currents.i2), tia_gain * (currents.i3 - currents.i4)};
}

double pd_identity_residual(double theta1, double theta2, int m, const OpticalParams& params) {
    const auto tia = tia_outputs(photocurrents(theta1, theta2, m, params), params.tia_gain);
    const double ra = params.responsivity * params.tia_gain;
    const double amplitude = ra * ra * params.p1 * params.p2 / 8.0;
    return tia.i_i * tia.i_q - amplitude * std::sin(2.0 * (theta1 - theta2));
}

SquareLawReport squarelaw_consistency(double phi1, double phi2, double omega2, int m,
                                      const OpticalParams& params) {
    check_data_symbol(m);
    params.validate();
    if (!(params.carrier > 0.0))
        throw std::invalid_argument("squarelaw_consistency: carrier frequency must be positive");

    const double period = 2.0 * std::numbers::pi / params.carrier;
    constexpr int kSamples = 512;  // trapezoid over an exact period of trig polynomials

    double avg[4] = {0, 0, 0, 0};
    for (int i = 0; i < kSamples; ++i) {
        const double t = period * static_cast<double>(i) / kSamples;
        const auto f = hybrid_outputs(params.carrier * t + phi1, omega2 * t + phi2, m, params);
        const double e[4] = {f.e1, f.e2, f.e3, f.e4};
        for (int k = 0; k < 4; ++k) avg[k] += e[k] * e[k];
    }
    for (double& v : avg) v *= params.responsivity / kSamples;

    const auto expected = photocurrents(phi1, phi2, m, params);
    const double exp_arr[4] = {expected.i1, expected.i2, expected.i3, expected.i4};
    const double scale = params.responsivity * (params.p1 + params.p2) / 4.0;

    SquareLawReport rep{};
    rep.max_deviation = 0.0;
    rep.worst_index = 0;
    for (int k = 0; k < 4; ++k) {
        rep.deviation[k] = std::abs(avg[k] - exp_arr[k]) / scale;
        if (rep.deviation[k] > rep.max_deviation) {
            rep.max_deviation = rep.deviation[k];
            rep.worst_index = k;
        }
    }
    return rep;
}

}  // namespace phaselock

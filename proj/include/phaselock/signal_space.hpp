#pragma once

#include "phaselock/model.hpp"

namespace phaselock {

/// Outputs of the 90-degree hybrid, sqrt-power units.
struct FieldQuad {
    double e1, e2, e3, e4;
};

/// Photocurrents of the four receivers.
struct CurrentQuad {
    double i1, i2, i3, i4;
};

struct TiaOutputs {
    double i_i;  // in-phase arm
    double i_q;  // quadrature arm
};

FieldQuad hybrid_outputs(double theta1, double theta2, int m, const OpticalParams& params);

CurrentQuad photocurrents(double theta1, double theta2, int m, const OpticalParams& params);

TiaOutputs tia_outputs(const CurrentQuad& currents, double tia_gain);

/// I_I*I_Q - (R^2 A^2 P1 P2 / 8) sin(2(theta1-theta2)); exact identity,
/// the data m drops out since m^2 = 1.
double pd_identity_residual(double theta1, double theta2, int m, const OpticalParams& params);

/// Carrier-period average of R*E_k(t)^2 compared against the photocurrent
/// expressions, with theta1(t) = omega1 t + phi1 and theta2(t) = omega2 t + phi2.
/// Returns per-receiver relative deviations and their maximum.
struct SquareLawReport {
    double deviation[4];
    double max_deviation;
    int worst_index;  // 0-based receiver index of max deviation
};

SquareLawReport squarelaw_consistency(double phi1, double phi2, double omega2, int m,
                                      const OpticalParams& params);

}  // namespace phaselock

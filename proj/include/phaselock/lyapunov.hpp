#pragma once

#include "phaselock/analysis.hpp"

#include <string>
#include <vector>

namespace phaselock {

/// PI-filter loop parameters in the normalized (unit PD amplitude) form.
struct PiParams {
    double tau1 = 1.0;              // s
    double tau2 = 1.0;              // s
    double kvco = 1.0;              // rad/s per unit control
    double omega_delta_free = 0.0;  // rad/s

    void validate() const {
        if (!(tau1 > 0.0) || !(tau2 > 0.0))
            throw std::invalid_argument("PiParams: time constants must be positive");
        if (!(kvco > 0.0)) throw std::invalid_argument("PiParams: kvco must be positive");
    }
};

PhaseModel pi_model(const PiParams& p);

/// V(x, theta) = (kvco*tau1/2)(x - omega/kvco)^2 + (1 - cos 2theta)/2.
double lyapunov_v(double x, double theta, const PiParams& p);

/// Analytic derivative along the flow: -(kvco*tau2/tau1) sin^2(2 theta).
double lyapunov_vdot(double x, double theta, const PiParams& p);

/// Chain-rule evaluation grad(V) . f with f from the realized phase model;
/// independent of the closed form above, used to pin the analytic expression.
double lyapunov_vdot_chain(double x, double theta, const PiParams& p);

struct SignSweepReport {
    long points = 0;
    double max_vdot = -std::numeric_limits<double>::infinity();
    long sign_violations = 0;      // vdot > 0 anywhere
    long equality_violations = 0;  // vdot vanishes away from sin(2 theta) = 0
    double max_oracle_rel_err = 0.0;  // analytic vs chain-rule, relative
};

/// Sign check of vdot on an nx-by-ntheta grid over [-10,10] x [0,pi) for each
/// omega sample; equality must coincide with sin(2 theta) = 0 within eq_tol.
SignSweepReport vdot_sign_sweep(const PiParams& base, long nx, long ntheta,
                                const std::vector<double>& omega_samples,
                                double eq_tol = 1e-12);

struct ConvergenceViolation {
    double omega;
    double x0, theta0;
    std::string what;  // "not_locked" | "v_increase" | "lasalle"
    double value;
};

struct ConvergenceReport {
    bool converged = true;        // every trajectory locked
    bool v_monotone = true;       // within 1e-7 * V(0) on each trajectory
    bool lasalle_ok = true;       // flow leaves {sin 2theta = 0} off equilibria
    double max_v_increase = 0.0;  // relative to V(0)
    std::vector<ConvergenceViolation> violations;

    bool pass() const { return converged && v_monotone && lasalle_ok; }
};

/// Integrates the PI loop from every init for every omega sample, asserting
/// lock and V-monotonicity, then spot-checks the LaSalle set: on
/// sin(2 theta) = 0 away from x = omega/kvco the phase acceleration is
/// nonzero, so no whole trajectory stays in the set.
ConvergenceReport certify_global_convergence(
    const PiParams& base, const std::vector<std::pair<double, double>>& inits,
    const std::vector<double>& omega_samples, const AnalysisConfig& cfg = {});

}  // namespace phaselock

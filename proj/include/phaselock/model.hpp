#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <variant>

namespace phaselock {

/// Optical front-end parameters: laser powers, photodetector responsivity,
/// TIA gain and the (constant) carrier frequency.
struct OpticalParams {
    double p1 = 1.0;       // input laser power
    double p2 = 1.0;       // local-oscillator laser power
    double responsivity = 1.0;
    double tia_gain = 1.0;
    double carrier = 0.0;  // rad/s

    void validate() const {
        if (!(p1 > 0.0) || !(p2 > 0.0))
            throw std::invalid_argument("OpticalParams: laser powers must be positive");
        if (!(responsivity > 0.0))
            throw std::invalid_argument("OpticalParams: responsivity must be positive");
        if (!(tia_gain > 0.0))
            throw std::invalid_argument("OpticalParams: TIA gain must be positive");
    }
};

/// Phase-detector nonlinearity L*sin(2*theta); period pi, odd.
struct PDCharacteristic {
    double amplitude = 1.0;

    explicit PDCharacteristic(double L = 1.0) : amplitude(L) {
        if (!(L > 0.0))
            throw std::invalid_argument("PDCharacteristic: amplitude must be positive");
    }

    static PDCharacteristic from_optical(const OpticalParams& p) {
        p.validate();
        const double ra = p.responsivity * p.tia_gain;
        return PDCharacteristic(ra * ra * p.p1 * p.p2 / 8.0);
    }

    double operator()(double theta_delta) const {
        return amplitude * std::sin(2.0 * theta_delta);
    }
    double derivative(double theta_delta) const {
        return 2.0 * amplitude * std::cos(2.0 * theta_delta);
    }
};

inline double pd_output(double theta_delta, const PDCharacteristic& pd) {
    return pd(theta_delta);
}

/// State-space filter realization, engineering convention
/// H(s) = c^T (sI - A)^{-1} b + h.
struct StateSpace {
    Eigen::MatrixXd a_mat;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double h = 0.0;

    Eigen::Index dim() const { return a_mat.rows(); }

    void validate() const {
        const auto n = a_mat.rows();
        if (a_mat.cols() != n || b.size() != n || c.size() != n)
            throw std::invalid_argument("StateSpace: inconsistent dimensions");
        if (!a_mat.allFinite() || !b.allFinite() || !c.allFinite() || !std::isfinite(h))
            throw std::invalid_argument("StateSpace: non-finite entries");
    }

    std::complex<double> transfer(std::complex<double> s) const;

    /// DC gain H(0) = -c^T A^{-1} b + h. Throws if A is singular.
    double dc_gain() const;

    bool dc_singular() const;
};

struct LeadLagSpec {
    double a = 0.0;     // high-frequency gain, 0 <= a < 1 typical
    double alpha = 1.0; // pole, 1/s
    double beta = 1.0;  // numerator constant, 1/s
};

struct PiSpec {
    double tau1 = 1.0; // s
    double tau2 = 1.0; // s
};

using FilterSpec = std::variant<LeadLagSpec, PiSpec, StateSpace>;

/// Scalar realization of H(s) = (a s + beta)/(s + alpha):
/// A = -alpha, b = 1, c = beta - a*alpha, h = a.
StateSpace leadlag_realize(double a, double alpha, double beta);

/// Scalar realization of H(s) = 1/(tau1 s) + tau2/tau1:
/// A = 0, b = 1/tau1, c = 1, h = tau2/tau1.
StateSpace pi_realize(double tau1, double tau2);

StateSpace realize(const FilterSpec& spec);

/// Filter state plus unwrapped phase difference theta_delta = theta1 - theta2.
struct LoopState {
    Eigen::VectorXd x;
    double theta_delta = 0.0;
};

/// Closed-loop phase model: realized filter, VCO gain, frequency deviation
/// omega_delta_free = omega1 - omega2_free, and the PD characteristic.
struct PhaseModel {
    StateSpace filter;
    double kvco = 1.0;              // rad/s per unit control
    double omega_delta_free = 0.0;  // rad/s
    PDCharacteristic pd{1.0};

    void validate() const {
        filter.validate();
        if (!(kvco > 0.0))
            throw std::invalid_argument("PhaseModel: kvco must be positive");
        if (!std::isfinite(omega_delta_free))
            throw std::invalid_argument("PhaseModel: omega_delta_free must be finite");
    }

    Eigen::Index state_dim() const { return filter.dim() + 1; }
};

/// Right-hand side of the phase model:
///   x'     = A x + b phi(theta)
///   theta' = omega_delta_free - kvco (c^T x + h phi(theta))
/// The VCO gain multiplies the entire filter output.
LoopState phase_rhs(const LoopState& state, const PhaseModel& model);

/// In-place flat-vector variant for the integrator: y = [x..., theta].
void phase_rhs_flat(const Eigen::VectorXd& y, const PhaseModel& model, Eigen::VectorXd& dy);

/// omega2(0) = omega2_free + kvco*(c^T x0 + h*phi(theta0)).
double initial_vco_frequency(const PhaseModel& model, double omega2_free,
                             const Eigen::VectorXd& x0, double theta0);

}  // namespace phaselock

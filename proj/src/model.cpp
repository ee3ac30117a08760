#include "phaselock/model.hpp"

#include <Eigen/LU>

namespace phaselock {

std::complex<double> StateSpace::transfer(std::complex<double> s) const {
    const auto n = dim();
    Eigen::MatrixXcd m = s * Eigen::MatrixXcd::Identity(n, n) - a_mat.cast<std::complex<double>>();
    Eigen::VectorXcd sol = m.fullPivLu().solve(b.cast<std::complex<double>>());
    return c.cast<std::complex<double>>().dot(sol) + h;
}

bool StateSpace::dc_singular() const {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_mat);
    return !lu.isInvertible();
}

double StateSpace::dc_gain() const {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_mat);
    if (!lu.isInvertible())
        throw std::domain_error("StateSpace: singular A, DC gain undefined");
    return -c.dot(lu.solve(b)) + h;
}

StateSpace leadlag_realize(double a, double alpha, double beta) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("leadlag_realize: pole alpha must be positive");
    StateSpace ss;
    ss.a_mat = Eigen::MatrixXd::Constant(1, 1, -alpha);
    ss.b = Eigen::VectorXd::Constant(1, 1.0);
    ss.c = Eigen::VectorXd::Constant(1, beta - a * alpha);
    ss.h = a;
    return ss;
}

StateSpace pi_realize(double tau1, double tau2) {
    if (!(tau1 > 0.0) || !(tau2 > 0.0))
        throw std::invalid_argument("pi_realize: time constants must be positive");
    StateSpace ss;
    ss.a_mat = Eigen::MatrixXd::Zero(1, 1);
    ss.b = Eigen::VectorXd::Constant(1, 1.0 / tau1);
    ss.c = Eigen::VectorXd::Constant(1, 1.0);
    ss.h = tau2 / tau1;
    return ss;
}

StateSpace realize(const FilterSpec& spec) {
    return std::visit(
        [](const auto& f) -> StateSpace {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LeadLagSpec>)
                return leadlag_realize(f.a, f.alpha, f.beta);
            else if constexpr (std::is_same_v<T, PiSpec>)
                return pi_realize(f.tau1, f.tau2);
            else {
                f.validate();
                return f;
            }
        },
        spec);
}

LoopState phase_rhs(const LoopState& state, const PhaseModel& model) {
    const double phi = model.pd(state.theta_delta);
    LoopState d;
    d.x = model.filter.a_mat * state.x + model.filter.b * phi;
    d.theta_delta =
        model.omega_delta_free - model.kvco * (model.filter.c.dot(state.x) + model.filter.h * phi);
    return d;
}

void phase_rhs_flat(const Eigen::VectorXd& y, const PhaseModel& model, Eigen::VectorXd& dy) {
    const auto n = model.filter.dim();
    const double phi = model.pd(y[n]);
    dy.head(n).noalias() = model.filter.a_mat * y.head(n);
    dy.head(n).noalias() += model.filter.b * phi;
    dy[n] = model.omega_delta_free -
            model.kvco * (model.filter.c.dot(y.head(n)) + model.filter.h * phi);
}

double initial_vco_frequency(const PhaseModel& model, double omega2_free,
                             const Eigen::VectorXd& x0, double theta0) {
    return omega2_free + model.kvco * (model.filter.c.dot(x0) + model.filter.h * model.pd(theta0));
}

}  // namespace phaselock

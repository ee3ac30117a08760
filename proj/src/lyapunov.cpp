#include "phaselock/lyapunov.hpp"

#include <cmath>
#include <numbers>

namespace phaselock {

namespace {
constexpr double kPi = std::numbers::pi;
}

PhaseModel pi_model(const PiParams& p) {
    p.validate();
    PhaseModel m;
    m.filter = pi_realize(p.tau1, p.tau2);
    m.kvco = p.kvco;
    m.omega_delta_free = p.omega_delta_free;
    m.pd = PDCharacteristic(1.0);
    return m;
}

double lyapunov_v(double x, double theta, const PiParams& p) {
    p.validate();
    const double d = x - p.omega_delta_free / p.kvco;
    return 0.5 * p.kvco * p.tau1 * d * d + 0.5 * (1.0 - std::cos(2.0 * theta));
}

double lyapunov_vdot(double x, double theta, const PiParams& p) {
    p.validate();
    (void)x;  // the x-terms cancel exactly against the detuning terms
    const double s = std::sin(2.0 * theta);
    return -(p.kvco * p.tau2 / p.tau1) * s * s;
}

double lyapunov_vdot_chain(double x, double theta, const PiParams& p) {
    const PhaseModel m = pi_model(p);
    LoopState state;
    state.x = Eigen::VectorXd::Constant(1, x);
    state.theta_delta = theta;
    const LoopState f = phase_rhs(state, m);
    const double dv_dx = p.kvco * p.tau1 * (x - p.omega_delta_free / p.kvco);
    const double dv_dtheta = std::sin(2.0 * theta);
    return dv_dx * f.x[0] + dv_dtheta * f.theta_delta;
}

SignSweepReport vdot_sign_sweep(const PiParams& base, long nx, long ntheta,
                                const std::vector<double>& omega_samples, double eq_tol) {
    base.validate();
    if (nx < 2 || ntheta < 2 || omega_samples.empty())
        throw std::invalid_argument("vdot_sign_sweep: degenerate grid");

    SignSweepReport rep;
    const double rate = base.kvco * base.tau2 / base.tau1;
    for (double omega : omega_samples) {
        PiParams p = base;
        p.omega_delta_free = omega;
        const PhaseModel m = pi_model(p);
        LoopState state;
        state.x = Eigen::VectorXd::Zero(1);
        auto chain_at = [&](double x, double theta) {
            state.x[0] = x;
            state.theta_delta = theta;
            const LoopState f = phase_rhs(state, m);
            return p.kvco * p.tau1 * (x - omega / p.kvco) * f.x[0] +
                   std::sin(2.0 * theta) * f.theta_delta;
        };
        for (long i = 0; i < nx; ++i) {
            const double x = -10.0 + 20.0 * static_cast<double>(i) / (nx - 1);
            for (long j = 0; j < ntheta; ++j) {
                const double theta = kPi * static_cast<double>(j) / ntheta;
                const double vd = lyapunov_vdot(x, theta, p);
                const double chain = chain_at(x, theta);
                ++rep.points;
                rep.max_vdot = std::max(rep.max_vdot, vd);
                if (vd > rate * eq_tol) ++rep.sign_violations;
                const bool s_zero = std::abs(std::sin(2.0 * theta)) <= eq_tol;
                const bool v_zero = std::abs(vd) <= 4.0 * rate * eq_tol * eq_tol;
                if (s_zero != v_zero) ++rep.equality_violations;
                const double denom = std::max(std::abs(vd), rate);
                rep.max_oracle_rel_err =
                    std::max(rep.max_oracle_rel_err, std::abs(vd - chain) / denom);
            }
        }
    }
    return rep;
}

ConvergenceReport certify_global_convergence(
    const PiParams& base, const std::vector<std::pair<double, double>>& inits,
    const std::vector<double>& omega_samples, const AnalysisConfig& cfg) {
    base.validate();
    if (inits.empty() || omega_samples.empty())
        throw std::invalid_argument("certify_global_convergence: empty grid or samples");

    ConvergenceReport rep;
    for (double omega : omega_samples) {
        PiParams p = base;
        p.omega_delta_free = omega;
        const PhaseModel model = pi_model(p);
        const double scale = model_scale(model);
        const double budget = cfg.budget > 0.0 ? cfg.budget : default_budget(model);

        std::vector<Equilibrium> eqs = find_equilibria(model);
        std::vector<const Equilibrium*> stable;
        for (const auto& eq : eqs)
            if (eq.is_stable()) stable.push_back(&eq);

        for (const auto& [x0, theta0] : inits) {
            Eigen::VectorXd y0(2);
            y0[0] = x0;
            y0[1] = theta0;
            Eigen::VectorXd dy(2);
            phase_rhs_flat(y0, model, dy);
            if (dy.norm() < cfg.eps_lock * scale) continue;  // started at an equilibrium

            const double v0 = lyapunov_v(x0, theta0, p);
            const double v_slack = 1e-7 * std::max(v0, 1e-30);

            Dopri5 st([&model](double, const Eigen::VectorXd& y,
                               Eigen::VectorXd& d) { phase_rhs_flat(y, model, d); },
                      0.0, y0, cfg.integrator);

            double v_min = v0;
            double worst_increase = 0.0;
            bool locked = false;
            while (st.step(budget)) {
                const double v = lyapunov_v(st.y()[0], st.y()[1], p);
                worst_increase = std::max(worst_increase, v - v_min);
                v_min = std::min(v_min, v);
                if (st.dydt().norm() < cfg.eps_lock * scale) {
                    for (const Equilibrium* eq : stable) {
                        const double dx = st.y()[0] - eq->x_star[0];
                        double dth = std::fmod(std::abs(st.y()[1] - eq->theta_star), kPi);
                        dth = std::min(dth, kPi - dth);
                        if (std::hypot(dx, dth) < cfg.delta_lock) {
                            locked = true;
                            break;
                        }
                    }
                }
                if (locked) break;
            }

            const double rel_increase = worst_increase / std::max(v0, 1e-30);
            rep.max_v_increase = std::max(rep.max_v_increase, rel_increase);
            if (!locked) {
                rep.converged = false;
                rep.violations.push_back({omega, x0, theta0, "not_locked", budget});
            }
            if (worst_increase > v_slack) {
                rep.v_monotone = false;
                rep.violations.push_back({omega, x0, theta0, "v_increase", rel_increase});
            }
        }

        // LaSalle: on sin(2 theta) = 0 the filter state freezes and the phase
        // acceleration is -kvco*h*phi'(theta)*(omega - kvco*x); it vanishes
        // only at x = omega/kvco, so the set contains no whole trajectory
        // besides the equilibria.
        const double x_eq = omega / p.kvco;
        for (double theta : {0.0, kPi / 2.0}) {
            const double dphi = model.pd.derivative(theta);
            for (int i = 0; i <= 100; ++i) {
                const double s = -10.0 + 20.0 * i / 100.0;
                const double x = x_eq + s;
                const double theta_ddot =
                    -p.kvco * model.filter.h * dphi * (omega - p.kvco * x);
                if (std::abs(s) > 1e-9 &&
                    std::abs(theta_ddot) <= 1e-12 * p.kvco * std::abs(s)) {
                    rep.lasalle_ok = false;
                    rep.violations.push_back({omega, x, theta, "lasalle", theta_ddot});
                }
            }
        }
    }
    return rep;
}

}  // namespace phaselock

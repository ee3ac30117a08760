#include "phaselock/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phaselock {

namespace {

constexpr double kPi = std::numbers::pi;

/// |a - b| on the circle of circumference pi.
double theta_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi);
    return std::min(d, kPi - d);
}

EquilibriumClass classify_eigenvalues(const Eigen::VectorXcd& ev) {
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) max_abs = std::max(max_abs, std::abs(ev[i]));
    const double tol = 1e-9 * std::max(1.0, max_abs);
    bool any_pos = false, any_neg = false, any_zero = false, any_imag = false;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double re = ev[i].real();
        if (std::abs(re) < tol)
            any_zero = true;
        else if (re > 0.0)
            any_pos = true;
        else
            any_neg = true;
        if (std::abs(ev[i].imag()) > tol) any_imag = true;
    }
    if (any_zero) return EquilibriumClass::Nonhyperbolic;
    if (!any_pos) return any_imag ? EquilibriumClass::StableFocus : EquilibriumClass::StableNode;
    if (any_neg && !any_imag) return EquilibriumClass::Saddle;
    return EquilibriumClass::Unstable;
}

Equilibrium make_equilibrium(const PhaseModel& model, Eigen::VectorXd x_star, double theta_star) {
    Equilibrium eq;
    eq.x_star = std::move(x_star);
    eq.theta_star = theta_star;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(jacobian(model, eq.x_star, theta_star));
    eq.eigenvalues = solver.eigenvalues();
    eq.cls = classify_eigenvalues(eq.eigenvalues);
    return eq;
}

}  // namespace

const char* to_string(EquilibriumClass c) {
    switch (c) {
        case EquilibriumClass::StableNode: return "stable_node";
        case EquilibriumClass::StableFocus: return "stable_focus";
        case EquilibriumClass::Saddle: return "saddle";
        case EquilibriumClass::Unstable: return "unstable";
        case EquilibriumClass::Nonhyperbolic: return "nonhyperbolic";
    }
    return "?";
}

const char* to_string(CycleClass c) {
    switch (c) {
        case CycleClass::Stable: return "stable";
        case CycleClass::Unstable: return "unstable";
        case CycleClass::Semistable: return "semistable";
    }
    return "?";
}

const char* to_string(Outcome::Kind k) {
    switch (k) {
        case Outcome::Kind::Lock: return "lock";
        case Outcome::Kind::Cycle: return "cycle";
        case Outcome::Kind::Undetermined: return "undetermined";
    }
    return "?";
}

double model_scale(const PhaseModel& model) {
    return std::max(1.0, std::abs(model.omega_delta_free / model.kvco));
}

Eigen::MatrixXd jacobian(const PhaseModel& model, const Eigen::VectorXd& x, double theta) {
    const auto n = model.filter.dim();
    (void)x;  // the model is affine in x; only theta enters the Jacobian
    const double dphi = model.pd.derivative(theta);
    Eigen::MatrixXd j(n + 1, n + 1);
    j.topLeftCorner(n, n) = model.filter.a_mat;
    j.topRightCorner(n, 1) = model.filter.b * dphi;
    j.bottomLeftCorner(1, n) = -model.kvco * model.filter.c.transpose();
    j(n, n) = -model.kvco * model.filter.h * dphi;
    return j;
}

std::vector<Equilibrium> find_equilibria(const PhaseModel& model) {
    model.validate();
    std::vector<Equilibrium> out;
    const double omega = model.omega_delta_free;
    const double kvco = model.kvco;
    const double amp = model.pd.amplitude;
    const auto n = model.filter.dim();

    if (model.filter.dc_singular()) {
        // Perfect-integrator path: x' = 0 forces sin(2 theta*) = 0, and the
        // equilibrium control comes entirely from c^T x*.
        if (n != 1 || model.filter.a_mat.cwiseAbs().maxCoeff() != 0.0 ||
            model.filter.c[0] == 0.0)
            throw SingularFilterDC();
        Eigen::VectorXd x_star =
            Eigen::VectorXd::Constant(1, omega / (kvco * model.filter.c[0]));
        out.push_back(make_equilibrium(model, x_star, 0.0));
        out.push_back(make_equilibrium(model, x_star, kPi / 2.0));
        return out;
    }

    const double h0 = model.filter.dc_gain();
    const double u = omega / (kvco * h0 * amp);
    if (std::abs(u) > 1.0) return out;  // beyond hold-in, no equilibria

    const double half = 0.5 * std::asin(u);
    Eigen::VectorXd x_star =
        -model.filter.a_mat.fullPivLu().solve(model.filter.b) * (amp * std::sin(2.0 * half));

    double th1 = half;
    if (th1 < 0.0) th1 += kPi;
    double th2 = kPi / 2.0 - half;
    out.push_back(make_equilibrium(model, x_star, th1));
    if (theta_distance(th1, th2) > 1e-12)
        out.push_back(make_equilibrium(model, x_star, th2));
    std::sort(out.begin(), out.end(),
              [](const Equilibrium& a, const Equilibrium& b) { return a.theta_star < b.theta_star; });
    return out;
}

double default_budget(const PhaseModel& model) {
    // 200 periods of the slowest relevant rate, plus a ramp allowance for
    // integrator-style filters whose state has to travel omega/kvco.
    double rate = std::numeric_limits<double>::infinity();
    auto eqs = find_equilibria(model);
    for (const auto& eq : eqs) {
        if (!eq.is_stable()) continue;
        for (Eigen::Index i = 0; i < eq.eigenvalues.size(); ++i) {
            const double re = std::abs(eq.eigenvalues[i].real());
            if (re > 1e-12) rate = std::min(rate, re);
        }
    }
    bool marginal = false;
    for (const auto& eq : eqs)
        if (eq.cls == EquilibriumClass::Nonhyperbolic) marginal = true;
    if (!std::isfinite(rate)) {
        const double w = std::abs(model.omega_delta_free);
        rate = w > 1e-12 ? w : model.kvco * model.pd.amplitude;
    }
    double budget = 200.0 * 2.0 * kPi / rate;
    if (marginal) {
        // approach to a double-root equilibrium is algebraic, ~1/(2 kvco L t)
        budget = std::max(budget, 10.0 / (model.kvco * model.pd.amplitude * 1e-4));
    }
    const double travel = std::abs(model.omega_delta_free) / model.kvco + 1.0;
    const double bnorm = model.filter.b.norm() * model.pd.amplitude;
    if (bnorm > 1e-300) budget = std::max(budget, 40.0 * travel / bnorm);
    if (model.filter.dc_singular() && model.filter.h > 0.0 && bnorm > 1e-300) {
        // integrator-filter pull-in is a slow beat-note drift: the rotation
        // rate decays like Omega' = -kvco^2 b h L^2 / (2 Omega)
        const double amp = model.pd.amplitude;
        const double omega0 = std::abs(model.omega_delta_free) + model.kvco * amp;
        const double drift = model.kvco * model.kvco * model.filter.b.norm() *
                             model.filter.h * amp * amp;
        budget = std::max(budget, 4.0 * omega0 * omega0 / drift);
    }
    return budget;
}

// ---------------------------------------------------------------------------
// Return map

ReturnMap::ReturnMap(PhaseModel model, double section_phase, AnalysisConfig cfg)
    : model_(std::move(model)), s_(section_phase), cfg_(cfg) {
    model_.validate();
    if (model_.filter.dim() != 1)
        throw std::invalid_argument("ReturnMap: requires a scalar (2-D) filter model");
    scale_ = model_scale(model_);
    budget_ = cfg_.budget > 0.0 ? cfg_.budget : default_budget(model_);
    // capture terminates at any stationary point: a trajectory glued to the
    // saddle's stable manifold (or to a fold equilibrium at the hold-in
    // boundary) never crosses the section again either
    equilibria_ = find_equilibria(model_);
}

namespace {

/// First upward crossing of theta = level within the last accepted step.
/// Returns crossing time, or nullopt.
std::optional<double> first_upward_crossing(const Dopri5& st, Eigen::Index theta_idx,
                                            double level) {
    const double ta = st.t_prev(), tb = st.t();
    constexpr int kSub = 8;
    double prev_t = ta;
    double prev_th = st.dense_component(ta, theta_idx);
    for (int i = 1; i <= kSub; ++i) {
        const double t = ta + (tb - ta) * static_cast<double>(i) / kSub;
        const double th = st.dense_component(t, theta_idx);
        if (prev_th < level && th >= level) {
            double lo = prev_t, hi = t, flo = prev_th - level;
            for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
                const double tm = 0.5 * (lo + hi);
                const double fm = st.dense_component(tm, theta_idx) - level;
                if ((flo < 0.0) == (fm < 0.0)) {
                    lo = tm;
                    flo = fm;
                } else {
                    hi = tm;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev_t = t;
        prev_th = th;
    }
    return std::nullopt;
}

}  // namespace

ReturnMapResult ReturnMap::operator()(double x0) const {
    Eigen::VectorXd y0(2);
    y0[0] = x0;
    y0[1] = s_;
    const double level = s_ + kPi;

    Dopri5 st([this](double, const Eigen::VectorXd& y,
                     Eigen::VectorXd& dy) { phase_rhs_flat(y, model_, dy); },
              0.0, std::move(y0), cfg_.integrator);

    Eigen::VectorXd tmp(2);
    while (st.step(budget_)) {
        if (auto tc = first_upward_crossing(st, 1, level)) {
            st.dense_eval(*tc, tmp);
            return {ReturnMapResult::Kind::Returned, tmp[0], *tc};
        }
        // lock criteria at the step end
        const double rhs_norm = st.dydt().norm();
        if (rhs_norm < cfg_.eps_lock * scale_) {
            for (const auto& eq : equilibria_) {
                const double dx = st.y()[0] - eq.x_star[0];
                const double dth = theta_distance(st.y()[1], eq.theta_star);
                if (std::hypot(dx, dth) < cfg_.delta_lock)
                    return {ReturnMapResult::Kind::Captured, 0.0, st.t()};
            }
        }
    }
    return {ReturnMapResult::Kind::Undetermined, 0.0, budget_};
}

ReturnMapResult return_map(const PhaseModel& model, double x0, double section_phase,
                           const AnalysisConfig& cfg) {
    return ReturnMap(model, section_phase, cfg)(x0);
}

// ---------------------------------------------------------------------------
// Cycle search

namespace {

struct Probe {
    double x;
    ReturnMapResult r;
    bool defined() const { return r.kind == ReturnMapResult::Kind::Returned; }
    double g() const { return r.x - x; }
};

Probe probe_at(const ReturnMap& rm, double x) {
    Probe p{x, rm(x)};
    if (p.r.kind == ReturnMapResult::Kind::Undetermined) throw BudgetExhausted(x, p.r.time);
    return p;
}

/// Bisection refinement of a sign change of g between two defined probes.
Probe refine_sign_change(const ReturnMap& rm, Probe lo, Probe hi, double g_target) {
    for (int it = 0; it < 90; ++it) {
        if (std::abs(lo.g()) < g_target) return lo;
        if (std::abs(hi.g()) < g_target) return hi;
        const double xm = 0.5 * (lo.x + hi.x);
        if (xm == lo.x || xm == hi.x) break;
        Probe mid = probe_at(rm, xm);
        if (!mid.defined()) break;  // capture zone opened up; keep best side
        if ((lo.g() < 0.0) == (mid.g() < 0.0))
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(lo.g()) < std::abs(hi.g()) ? lo : hi;
}

}  // namespace

CyclesReport find_cycles(const PhaseModel& model, double x_min, double x_max,
                         double section_phase, const AnalysisConfig& cfg) {
    if (!(x_max > x_min)) throw std::invalid_argument("find_cycles: empty x range");
    ReturnMap rm(model, section_phase, cfg);
    const double scale = rm.scale();
    const double g_target = cfg.cycle_residual * scale;

    const int n = std::max(cfg.grid_points, 8);
    std::vector<Probe> probes;
    probes.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = x_min + (x_max - x_min) * static_cast<double>(i) / (n - 1);
        probes.push_back(probe_at(rm, x));
    }

    CyclesReport rep;
    std::vector<double> roots;

    auto note_min = [&rep](const Probe& p) {
        if (p.defined() && p.g() < rep.min_g) {
            rep.min_g = p.g();
            rep.min_g_location = p.x;
        }
    };
    for (const auto& p : probes) note_min(p);

    // interior sign changes
    for (size_t i = 0; i + 1 < probes.size(); ++i) {
        const Probe &a = probes[i], &b = probes[i + 1];
        if (!a.defined() || !b.defined()) continue;
        if (a.g() == 0.0) {
            roots.push_back(a.x);
            continue;
        }
        if (a.g() * b.g() < 0.0) {
            Probe r = refine_sign_change(rm, a, b, g_target);
            roots.push_back(r.x);
        }
    }

    // boundary roots: repelling cycles sit exactly on the edge of the capture
    // region and never change the sign of g on the defined side
    for (size_t i = 0; i + 1 < probes.size(); ++i) {
        const Probe &a = probes[i], &b = probes[i + 1];
        if (a.defined() == b.defined()) continue;
        Probe def_p = a.defined() ? a : b;
        double x_cap = a.defined() ? b.x : a.x;
        for (int it = 0; it < 80; ++it) {
            const double xm = 0.5 * (def_p.x + x_cap);
            if (xm == def_p.x || xm == x_cap) break;
            Probe pm = probe_at(rm, xm);
            note_min(pm);
            if (pm.defined()) {
                // interior sign changes hiding between the grid and the
                // capture boundary surface here
                if (def_p.g() * pm.g() < 0.0) {
                    Probe r = def_p.x < pm.x ? refine_sign_change(rm, def_p, pm, g_target)
                                             : refine_sign_change(rm, pm, def_p, g_target);
                    roots.push_back(r.x);
                }
                def_p = pm;
            } else {
                x_cap = xm;
            }
        }
        const double xb = def_p.x;
        // a genuine cycle shadows itself: g scales linearly with the offset,
        // while a separatrix boundary jumps by a fixed amount
        const double toward = (x_cap > xb) ? -1.0 : 1.0;
        const double d1 = cfg.multiplier_step * scale;
        const double d2 = 0.1 * d1;
        Probe p1 = probe_at(rm, xb + toward * d1);
        Probe p2 = probe_at(rm, xb + toward * d2);
        if (!p1.defined() || !p2.defined()) continue;
        const bool tiny = std::abs(p1.g()) < 10.0 * g_target;
        const bool linear = std::abs(p2.g()) < 0.3 * std::abs(p1.g());
        if (tiny || linear) roots.push_back(xb);
    }

    // dedupe and build results
    std::sort(roots.begin(), roots.end());
    const double min_sep = 1e-10 * scale + 1e-12 * (x_max - x_min);
    std::vector<double> unique_roots;
    for (double r : roots)
        if (unique_roots.empty() || r - unique_roots.back() > min_sep) unique_roots.push_back(r);

    for (double x_star : unique_roots) {
        CycleResult cr;
        cr.section_phase = section_phase;
        cr.x_star = x_star;
        auto at_root = rm(x_star);
        Probe side{};
        if (at_root.kind == ReturnMapResult::Kind::Returned) {
            cr.period = at_root.time;
        } else {
            // boundary root: evaluate a hair inside the defined side
            side = probe_at(rm, x_star - cfg.multiplier_step * scale * 0.01);
            if (!side.defined()) side = probe_at(rm, x_star + cfg.multiplier_step * scale * 0.01);
            if (!side.defined()) continue;
            cr.period = side.r.time;
        }
        // multiplier by finite differences; fall back to one-sided stencils
        const double d = cfg.multiplier_step * scale;
        Probe pp = probe_at(rm, x_star + d);
        Probe pm = probe_at(rm, x_star - d);
        if (pp.defined() && pm.defined()) {
            cr.multiplier = (pp.r.x - pm.r.x) / (2.0 * d);
        } else if (pm.defined()) {
            Probe pm2 = probe_at(rm, x_star - 2.0 * d);
            if (!pm2.defined()) continue;
            cr.multiplier = (pm.r.x - pm2.r.x) / d;
        } else if (pp.defined()) {
            Probe pp2 = probe_at(rm, x_star + 2.0 * d);
            if (!pp2.defined()) continue;
            cr.multiplier = (pp2.r.x - pp.r.x) / d;
        } else {
            continue;
        }
        if (std::abs(cr.multiplier - 1.0) < cfg.tol_tangency)
            cr.cls = CycleClass::Semistable;
        else if (std::abs(cr.multiplier) < 1.0)
            cr.cls = CycleClass::Stable;
        else
            cr.cls = CycleClass::Unstable;
        rep.cycles.push_back(cr);
    }

    if (rep.cycles.empty() && std::isfinite(rep.min_g) && rep.min_g > 0.0 &&
        rep.min_g < cfg.tangency_window * scale) {
        rep.tangency = TangencyCandidate{rep.min_g_location, rep.min_g};
    }
    return rep;
}

std::pair<double, double> default_cycle_range(const PhaseModel& model) {
    const double w = std::abs(model.omega_delta_free) / model.kvco;
    double lo = -2.0 * w, hi = 2.0 * w;

    // filter-state excursion heuristic: |x| <= ||b|| L / min |Re lambda(A)|
    double rate = std::numeric_limits<double>::infinity();
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.filter.a_mat);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double re = std::abs(es.eigenvalues()[i].real());
        if (re > 1e-12) rate = std::min(rate, re);
    }
    const double excursion = std::isfinite(rate)
                                 ? model.filter.b.norm() * model.pd.amplitude / rate
                                 : model.filter.b.norm() * model.pd.amplitude;
    double x_eq = 0.0;
    if (!model.filter.dc_singular()) {
        const double h0 = model.filter.dc_gain();
        const double u = model.omega_delta_free / (model.kvco * h0 * model.pd.amplitude);
        if (std::abs(u) <= 1.0) {
            Eigen::VectorXd xs = -model.filter.a_mat.fullPivLu().solve(model.filter.b) *
                                 (model.pd.amplitude * u);
            x_eq = xs.size() == 1 ? xs[0] : xs.norm();
        }
    }
    lo = std::min(lo, x_eq - 5.0 * excursion);
    hi = std::max(hi, x_eq + 5.0 * excursion);
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    return {lo, hi};
}

CyclesReport find_cycles(const PhaseModel& model, double section_phase,
                         const AnalysisConfig& cfg) {
    auto [lo, hi] = default_cycle_range(model);
    for (int round = 0; round < 5; ++round) {
        CyclesReport rep = find_cycles(model, lo, hi, section_phase, cfg);
        const double margin = 0.05 * (hi - lo);
        bool near_edge = false;
        for (const auto& c : rep.cycles)
            if (c.x_star < lo + margin || c.x_star > hi - margin) near_edge = true;
        if (!near_edge) return rep;
        const double mid = 0.5 * (lo + hi), half = 0.75 * (hi - lo);
        lo = mid - half;
        hi = mid + half;
    }
    return find_cycles(model, lo, hi, section_phase, cfg);
}

// ---------------------------------------------------------------------------
// Trajectory classification

Outcome classify_trajectory(const PhaseModel& model, const LoopState& init,
                            const AnalysisConfig& cfg) {
    model.validate();
    const auto n = model.filter.dim();
    if (init.x.size() != n)
        throw std::invalid_argument("classify_trajectory: state dimension mismatch");

    const double scale = model_scale(model);
    const double budget = cfg.budget > 0.0 ? cfg.budget : default_budget(model);

    std::vector<Equilibrium> stable;
    for (auto& eq : find_equilibria(model))
        if (eq.is_stable()) stable.push_back(std::move(eq));

    Eigen::VectorXd y0(n + 1);
    y0.head(n) = init.x;
    y0[n] = init.theta_delta;

    Dopri5 st([&model](double, const Eigen::VectorXd& y,
                       Eigen::VectorXd& dy) { phase_rhs_flat(y, model, dy); },
              0.0, std::move(y0), cfg.integrator);

    std::vector<double> section_x;  // upward-crossing states of theta ≡ theta(0) (mod pi)
    const double base = init.theta_delta;
    double next_level = base + kPi;
    Eigen::VectorXd tmp(n + 1);

    auto verdict = [&](Outcome::Kind k, double t) {
        Outcome o;
        o.kind = k;
        o.time = t;
        o.final_theta = st.y()[n];
        o.final_x = st.y().head(n);
        return o;
    };

    while (st.step(budget)) {
        // collect upward crossings of the pending level(s)
        while (true) {
            auto tc = first_upward_crossing(st, n, next_level);
            if (!tc) break;
            st.dense_eval(*tc, tmp);
            section_x.push_back(n == 1 ? tmp[0] : tmp.head(n).norm());
            next_level += kPi;
        }
        const size_t m = section_x.size();
        const double tol = 1e-8 * scale;
        if (m >= 4) {
            const double d1 = std::abs(section_x[m - 1] - section_x[m - 2]);
            const double d2 = std::abs(section_x[m - 2] - section_x[m - 3]);
            const double d3 = std::abs(section_x[m - 3] - section_x[m - 4]);
            if (d1 < tol && d2 < tol && d3 < tol) return verdict(Outcome::Kind::Cycle, st.t());
        }
        if (m >= 7) {
            // non-monotone rotating cycles hit the section twice per turn
            const double d1 = std::abs(section_x[m - 1] - section_x[m - 3]);
            const double d2 = std::abs(section_x[m - 3] - section_x[m - 5]);
            const double d3 = std::abs(section_x[m - 5] - section_x[m - 7]);
            if (d1 < tol && d2 < tol && d3 < tol) return verdict(Outcome::Kind::Cycle, st.t());
        }

        if (st.dydt().norm() < cfg.eps_lock * scale) {
            for (const auto& eq : stable) {
                const double dx = (st.y().head(n) - eq.x_star).norm();
                const double dth = theta_distance(st.y()[n], eq.theta_star);
                if (std::hypot(dx, dth) < cfg.delta_lock)
                    return verdict(Outcome::Kind::Lock, st.t());
            }
        }
    }
    return verdict(Outcome::Kind::Undetermined, budget);
}

}  // namespace phaselock

#include "phaselock/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phaselock {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense-output weights (Hairer, Norsett, Wanner II).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

Dopri5::Dopri5(RhsFn rhs, double t0, Eigen::VectorXd y0, IntegratorConfig cfg)
    : rhs_(std::move(rhs)), cfg_(cfg), t_(t0), t_prev_(t0), y_(std::move(y0)), y_prev_(y_) {
    cfg_.validate();
    const auto n = y_.size();
    y_err_.resize(n);
    y_stage_.resize(n);
    for (auto& k : k_) k.resize(n);
    for (auto& r : rcont_) r.resize(n);
    rhs_(t_, y_, k_[0]);
    if (!k_[0].allFinite() || !y_.allFinite()) throw NonFinite(t_);
    h_ = cfg_.fixed_step > 0.0 ? cfg_.fixed_step : 0.0;
}

bool Dopri5::step(double t_limit) {
    if (t_ >= t_limit) return false;

    if (h_ == 0.0) {
        // initial step heuristic
        const double sc = cfg_.abs_tol + cfg_.rel_tol * y_.cwiseAbs().maxCoeff();
        const double d0 = y_.norm(), d1n = k_[0].norm();
        h_ = (d1n > 1e-10) ? 0.01 * d0 / d1n + 1e-6 : 1e-6;
        h_ = std::min({h_, cfg_.max_step, t_limit - t_});
        (void)sc;
    }

    const double eps = std::numeric_limits<double>::epsilon();
    for (int attempt = 0;; ++attempt) {
        if (attempt > 400) throw StepUnderflow(t_);
        double h = std::min({h_, cfg_.max_step, t_limit - t_});
        if (!(h > 0.0) || h < 16.0 * eps * std::max(1.0, std::abs(t_))) throw StepUnderflow(t_);

        y_stage_ = y_ + h * (a21 * k_[0]);
        rhs_(t_ + c2 * h, y_stage_, k_[1]);
        y_stage_ = y_ + h * (a31 * k_[0] + a32 * k_[1]);
        rhs_(t_ + c3 * h, y_stage_, k_[2]);
        y_stage_ = y_ + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]);
        rhs_(t_ + c4 * h, y_stage_, k_[3]);
        y_stage_ = y_ + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]);
        rhs_(t_ + c5 * h, y_stage_, k_[4]);
        y_stage_ = y_ + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]);
        rhs_(t_ + h, y_stage_, k_[5]);
        Eigen::VectorXd y_new =
            y_ + h * (b1 * k_[0] + b3 * k_[2] + b4 * k_[3] + b5 * k_[4] + b6 * k_[5]);
        rhs_(t_ + h, y_new, k_[6]);

        if (!y_new.allFinite() || !k_[6].allFinite()) throw NonFinite(t_ + h);

        double err;
        if (cfg_.fixed_step > 0.0) {
            err = 0.0;
        } else {
            y_err_ = h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] + e6 * k_[5] +
                          e7 * k_[6]);
            double sum = 0.0;
            for (Eigen::Index i = 0; i < y_.size(); ++i) {
                const double sc =
                    cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y_new[i]));
                const double r = y_err_[i] / sc;
                sum += r * r;
            }
            err = std::sqrt(sum / static_cast<double>(y_.size()));
        }

        if (err <= 1.0) {
            t_prev_ = t_;
            y_prev_.swap(y_);
            y_ = std::move(y_new);
            t_ += h;
            ++accepted_;
            // stash stages scaled for the dense interpolant of this step
            compute_dense();
            k_[0] = k_[6];  // FSAL
            if (cfg_.fixed_step <= 0.0) {
                // PI controller (beta = 0.04)
                const double fac =
                    0.9 * std::pow(std::max(err, 1e-32), -0.7 / 5.0) * std::pow(err_prev_, 0.4 / 5.0);
                h_ = h * std::clamp(fac, 0.2, 10.0);
                err_prev_ = std::max(err, 1e-4);
                first_ = false;
            }
            return true;
        }
        h_ = h * std::clamp(0.9 * std::pow(err, -1.0 / 5.0), 0.1, 1.0);
    }
}

void Dopri5::compute_dense() {
    // Called right after acceptance; t_prev_/y_prev_ start of step, y_ end,
    // k_[0..6] stages of the step (k_[6] = derivative at the end).
    const double h = t_ - t_prev_;
    rcont_[0] = y_prev_;
    rcont_[1] = y_ - y_prev_;
    rcont_[2] = h * k_[0] - rcont_[1];
    rcont_[3] = rcont_[1] - h * k_[6] - rcont_[2];
    rcont_[4] = h * (d1 * k_[0] + d3 * k_[2] + d4 * k_[3] + d5 * k_[4] + d6 * k_[5] + d7 * k_[6]);
}

void Dopri5::dense_eval(double tq, Eigen::VectorXd& out) const {
    const double h = t_ - t_prev_;
    const double s = (tq - t_prev_) / h;
    const double s1 = 1.0 - s;
    out = rcont_[0] + s * (rcont_[1] + s1 * (rcont_[2] + s * (rcont_[3] + s1 * rcont_[4])));
}

double Dopri5::dense_component(double tq, Eigen::Index i) const {
    const double h = t_ - t_prev_;
    const double s = (tq - t_prev_) / h;
    const double s1 = 1.0 - s;
    return rcont_[0][i] +
           s * (rcont_[1][i] + s1 * (rcont_[2][i] + s * (rcont_[3][i] + s1 * rcont_[4][i])));
}

Eigen::VectorXd Trajectory::at(double tq) const {
    if (segments.empty() || tq <= times.front()) return states.front();
    if (tq >= times.back()) return states.back();
    // binary search over segment starts
    auto it = std::upper_bound(times.begin(), times.end(), tq);
    const auto idx = static_cast<size_t>(std::distance(times.begin(), it)) - 1;
    const auto& seg = segments[std::min(idx, segments.size() - 1)];
    Eigen::VectorXd out;
    seg.eval(tq, out);
    return out;
}

double Trajectory::theta_at(double tq) const { return at(tq)[filter_dim]; }

Trajectory integrate(const PhaseModel& model, const LoopState& init, double t_end,
                     const IntegratorConfig& cfg) {
    model.validate();
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
    if (init.x.size() != model.filter.dim())
        throw std::invalid_argument("integrate: initial filter state dimension mismatch");
    if (!init.x.allFinite() || !std::isfinite(init.theta_delta))
        throw std::invalid_argument("integrate: non-finite initial state");

    const double t_stop = std::min(t_end, cfg.max_time);
    const auto n = model.filter.dim();
    Eigen::VectorXd y0(n + 1);
    y0.head(n) = init.x;
    y0[n] = init.theta_delta;

    Dopri5 stepper([&model](double, const Eigen::VectorXd& y,
                            Eigen::VectorXd& dy) { phase_rhs_flat(y, model, dy); },
                   0.0, std::move(y0), cfg);

    Trajectory traj;
    traj.filter_dim = n;
    traj.times.push_back(0.0);
    traj.states.push_back(stepper.y());
    while (stepper.step(t_stop)) {
        traj.times.push_back(stepper.t());
        traj.states.push_back(stepper.y());
        DenseSegment seg;
        seg.t0 = stepper.t_prev();
        seg.h = stepper.t() - stepper.t_prev();
        seg.rcont[0] = stepper.y_prev();
        seg.rcont[1] = stepper.y() - stepper.y_prev();
        stepper.dense_raw(seg.rcont[2], seg.rcont[3], seg.rcont[4]);
        traj.segments.push_back(std::move(seg));
    }
    return traj;
}

std::vector<SectionCrossing> section_crossings(const Trajectory& traj, const PhaseModel& model,
                                               double section_phase) {
    std::vector<SectionCrossing> out;
    const auto n = traj.filter_dim;
    const double pi = std::numbers::pi;
    Eigen::VectorXd state(n + 1), d(n + 1);

    for (size_t si = 0; si < traj.segments.size(); ++si) {
        const auto& seg = traj.segments[si];
        const double th0 = traj.states[si][n];
        const double th1 = traj.states[si + 1][n];
        // candidate levels section_phase + k*pi strictly inside (min,max]
        const double lo = std::min(th0, th1), hi = std::max(th0, th1);
        long k_lo = static_cast<long>(std::ceil((lo - section_phase) / pi - 1e-12));
        long k_hi = static_cast<long>(std::floor((hi - section_phase) / pi + 1e-12));
        for (long k = k_lo; k <= k_hi; ++k) {
            const double level = section_phase + static_cast<double>(k) * pi;
            double ta = seg.t0, tb = seg.t0 + seg.h;
            double fa = th0 - level, fb = th1 - level;
            if (fa == 0.0 && si > 0) continue;  // counted at previous segment end
            if (fa * fb > 0.0) continue;        // level touched only by dense wiggle; skip
            // bisection on the dense interpolant
            for (int it = 0; it < 200 && (tb - ta) > 0.0; ++it) {
                const double tm = 0.5 * (ta + tb);
                const double fm = seg.eval_component(tm, n) - level;
                if (std::abs(fm) < 1e-10 && std::abs(tb - ta) < 1e-13 * std::max(1.0, std::abs(tb)))
                    break;
                if ((fa <= 0.0) == (fm <= 0.0)) {
                    ta = tm;
                    fa = fm;
                } else {
                    tb = tm;
                    fb = fm;
                }
            }
            const double tc = 0.5 * (ta + tb);
            seg.eval(tc, state);
            phase_rhs_flat(state, model, d);
            if (d[n] > 0.0) {
                SectionCrossing c;
                c.t = tc;
                c.x = state.head(n);
                c.theta = level;
                out.push_back(std::move(c));
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const SectionCrossing& a, const SectionCrossing& b) { return a.t < b.t; });
    return out;
}

double wrap_display(double theta) {
    const double pi = std::numbers::pi;
    double r = std::fmod(theta + pi / 2.0, pi);
    if (r < 0.0) r += pi;
    return r - pi / 2.0;
}

}  // namespace phaselock

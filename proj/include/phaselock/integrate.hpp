#pragma once

#include "phaselock/model.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace phaselock {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();  // s
    double max_time = std::numeric_limits<double>::infinity();  // s, caps t_end
    double fixed_step = 0.0;  // > 0 disables adaptivity (order tests)

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
        if (!(max_step > 0.0))
            throw std::invalid_argument("IntegratorConfig: max_step must be positive");
    }
};

/// Integration failure kinds.
class StepUnderflow : public std::runtime_error {
  public:
    explicit StepUnderflow(double t)
        : std::runtime_error("step size underflow at t=" + std::to_string(t)), t_(t) {}
    double where() const { return t_; }

  private:
    double t_;
};

class NonFinite : public std::runtime_error {
  public:
    explicit NonFinite(double t)
        : std::runtime_error("non-finite state at t=" + std::to_string(t)), t_(t) {}
    double where() const { return t_; }

  private:
    double t_;
};

using RhsFn = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Explicit Dormand-Prince 5(4) pair with PI step-size control and the
/// classic quartic continuous extension. One instance drives one solution;
/// step() advances by one accepted step and keeps the dense coefficients of
/// that step for interpolation.
class Dopri5 {
  public:
    Dopri5(RhsFn rhs, double t0, Eigen::VectorXd y0, IntegratorConfig cfg);

    /// Advance one accepted step, not past t_limit. Returns false when t == t_limit.
    bool step(double t_limit);

    double t_prev() const { return t_prev_; }
    double t() const { return t_; }
    const Eigen::VectorXd& y_prev() const { return y_prev_; }
    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::VectorXd& dydt() const { return k_[0]; }  // FSAL derivative at t()

    /// Dense-output evaluation inside the last accepted step [t_prev, t].
    void dense_eval(double tq, Eigen::VectorXd& out) const;
    double dense_component(double tq, Eigen::Index i) const;

    /// Raw quartic coefficients of the last step (for trajectory storage).
    void dense_raw(Eigen::VectorXd& r2, Eigen::VectorXd& r3, Eigen::VectorXd& r4) const {
        r2 = rcont_[2];
        r3 = rcont_[3];
        r4 = rcont_[4];
    }

    long steps_taken() const { return accepted_; }

  private:
    void compute_dense();

    RhsFn rhs_;
    IntegratorConfig cfg_;
    double t_, t_prev_, h_;
    Eigen::VectorXd y_, y_prev_, y_err_, y_stage_;
    Eigen::VectorXd k_[7];
    Eigen::VectorXd rcont_[5];
    double err_prev_ = 1.0;
    long accepted_ = 0;
    bool first_ = true;
};

struct TrajectoryEvent {
    double t;
    std::string kind;   // "section"
    long section_index; // crossing counter k
};

/// Dense segment of one accepted step: y(t0 + s*h) via the quartic interpolant.
struct DenseSegment {
    double t0;
    double h;
    Eigen::VectorXd rcont[5];

    void eval(double tq, Eigen::VectorXd& out) const {
        const double s = (tq - t0) / h;
        const double s1 = 1.0 - s;
        out = rcont[0] + s * (rcont[1] + s1 * (rcont[2] + s * (rcont[3] + s1 * rcont[4])));
    }
    double eval_component(double tq, Eigen::Index i) const {
        const double s = (tq - t0) / h;
        const double s1 = 1.0 - s;
        return rcont[0][i] +
               s * (rcont[1][i] + s1 * (rcont[2][i] + s * (rcont[3][i] + s1 * rcont[4][i])));
    }
};

struct Trajectory {
    std::vector<double> times;                 // accepted step endpoints, t0 first
    std::vector<Eigen::VectorXd> states;       // flat [x..., theta]
    std::vector<DenseSegment> segments;        // one per accepted step
    std::vector<TrajectoryEvent> events;
    Eigen::Index filter_dim = 0;

    Eigen::VectorXd at(double tq) const;       // dense interpolation
    double theta_at(double tq) const;
};

/// Integrate the phase model from init to t_end.
Trajectory integrate(const PhaseModel& model, const LoopState& init, double t_end,
                     const IntegratorConfig& cfg = {});

struct SectionCrossing {
    double t;
    Eigen::VectorXd x;  // filter state at the crossing
    double theta;       // unwrapped phase at the crossing (s + k*pi)
};

/// Crossings of theta ≡ s (mod pi) with theta' > 0, located on dense output.
std::vector<SectionCrossing> section_crossings(const Trajectory& traj, const PhaseModel& model,
                                               double section_phase);

/// theta mod pi mapped to [-pi/2, pi/2).
double wrap_display(double theta);

}  // namespace phaselock

#pragma once

#include "phaselock/integrate.hpp"
#include "phaselock/model.hpp"

#include <optional>
#include <vector>

namespace phaselock {

enum class EquilibriumClass { StableNode, StableFocus, Saddle, Unstable, Nonhyperbolic };

struct Equilibrium {
    Eigen::VectorXd x_star;
    double theta_star;  // in [0, pi)
    Eigen::VectorXcd eigenvalues;
    EquilibriumClass cls;

    bool is_stable() const {
        return cls == EquilibriumClass::StableNode || cls == EquilibriumClass::StableFocus;
    }
};

const char* to_string(EquilibriumClass c);

/// Thrown when A is singular and the DC-gain route to the equilibria cannot
/// be used and no PI-style direct solution applies.
class SingularFilterDC : public std::domain_error {
  public:
    SingularFilterDC() : std::domain_error("filter A matrix is singular; DC gain undefined") {}
};

/// Equilibria of the phase model with theta* in [0, pi).
/// Nonsingular A: sin(2 theta*) = omega/(kvco*H(0)*L), x* = -A^{-1} b phi*.
/// Singular scalar A (PI): sin(2 theta*) = 0, c x* = omega/kvco.
std::vector<Equilibrium> find_equilibria(const PhaseModel& model);

/// Analytic Jacobian of the phase model at (x, theta):
/// [[A, b phi'(theta)], [-kvco c^T, -kvco h phi'(theta)]].
Eigen::MatrixXd jacobian(const PhaseModel& model, const Eigen::VectorXd& x, double theta);

/// Characteristic state magnitude used for residual/locking thresholds.
double model_scale(const PhaseModel& model);

struct AnalysisConfig {
    double eps_lock = 1e-6;        // rhs-norm factor for lock detection
    double delta_lock = 1e-4;      // distance to a stable equilibrium
    double cycle_residual = 1e-9;  // |P(x)-x| refinement target, times scale
    double multiplier_step = 1e-6; // finite-difference step for dP/dx, times scale
    double tangency_window = 1e-4; // min-g window for tangency candidates, times scale
    double tol_tangency = 1e-3;    // |mu-1| margin for the semistable class
    int grid_points = 400;
    double budget = 0.0;           // max integration time; 0 = heuristic
    IntegratorConfig integrator{};
};

struct ReturnMapResult {
    enum class Kind { Returned, Captured, Undetermined } kind;
    double x = 0.0;     // section coordinate at the next crossing (Returned)
    double time = 0.0;  // elapsed time to the crossing
};

/// First-return map of the section theta ≡ s (mod pi), theta' > 0, for
/// scalar-filter (2-D) models. Integration stops either at the next upward
/// crossing of s + pi or when the lock criteria hold.
class ReturnMap {
  public:
    ReturnMap(PhaseModel model, double section_phase, AnalysisConfig cfg = {});

    ReturnMapResult operator()(double x0) const;

    const PhaseModel& model() const { return model_; }
    double section_phase() const { return s_; }
    double scale() const { return scale_; }
    const AnalysisConfig& config() const { return cfg_; }
    const std::vector<Equilibrium>& equilibria() const { return equilibria_; }

  private:
    PhaseModel model_;
    double s_;
    AnalysisConfig cfg_;
    double scale_;
    double budget_;
    std::vector<Equilibrium> equilibria_;
};

ReturnMapResult return_map(const PhaseModel& model, double x0, double section_phase,
                           const AnalysisConfig& cfg = {});

/// Thrown by the cycle search when a return-map probe neither returns nor
/// locks within the time budget.
class BudgetExhausted : public std::runtime_error {
  public:
    BudgetExhausted(double x0, double budget)
        : std::runtime_error("return map undetermined at x0=" + std::to_string(x0) +
                             " within budget " + std::to_string(budget)),
          x0_(x0), budget_(budget) {}
    double probe_x() const { return x0_; }
    double budget() const { return budget_; }

  private:
    double x0_, budget_;
};

enum class CycleClass { Stable, Unstable, Semistable };

struct CycleResult {
    double section_phase;
    double x_star;      // section fixed point
    double period;      // s, time to advance theta by pi
    double multiplier;  // dP/dx at x_star
    CycleClass cls;
};

const char* to_string(CycleClass c);

struct TangencyCandidate {
    double x;      // location of the positive minimum of g = P - x
    double min_g;  // its value
};

struct CyclesReport {
    std::vector<CycleResult> cycles;
    std::optional<TangencyCandidate> tangency;
    double min_g = std::numeric_limits<double>::infinity();  // over defined probes
    double min_g_location = 0.0;
};

/// Rotating-cycle search on the section: grid probes of g(x) = P(x) - x,
/// sign-change roots refined by bisection, plus boundary roots where the
/// domain of P meets the capture region (repelling cycles adjacent to the
/// equilibrium basin never produce an interior sign change).
CyclesReport find_cycles(const PhaseModel& model, double x_min, double x_max,
                         double section_phase = 0.0, const AnalysisConfig& cfg = {});

/// Heuristic section bounding box; widened when a fixed point sits within
/// 5% of the boundary.
std::pair<double, double> default_cycle_range(const PhaseModel& model);

CyclesReport find_cycles(const PhaseModel& model, double section_phase = 0.0,
                         const AnalysisConfig& cfg = {});

struct Outcome {
    enum class Kind { Lock, Cycle, Undetermined } kind;
    double time = 0.0;          // when the verdict was reached
    double final_theta = 0.0;
    Eigen::VectorXd final_x;
};

const char* to_string(Outcome::Kind k);

/// Forward classification of a single trajectory: Lock when the lock
/// criteria hold, Cycle when the section sequence converges while theta
/// keeps advancing, Undetermined when the budget runs out.
Outcome classify_trajectory(const PhaseModel& model, const LoopState& init,
                            const AnalysisConfig& cfg = {});

/// Default classification budget: 200 periods of the slowest linear rate.
double default_budget(const PhaseModel& model);

}  // namespace phaselock

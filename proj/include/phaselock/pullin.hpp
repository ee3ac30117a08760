#pragma once

#include "phaselock/analysis.hpp"

#include <functional>
#include <string>
#include <vector>

namespace phaselock {

/// Result of one cycle-existence query, with the evidence the bisection keeps.
struct CycleEvidence {
    bool exists = false;
    int cycle_count = 0;
    double min_g = std::numeric_limits<double>::infinity();
    double min_g_location = 0.0;
};

/// True iff the model carries a rotating cycle: find_cycles over the default
/// range, then three adaptive refinement rounds (x10 grid density each) around
/// the minimizer of g(x) = P(x) - x when the coarse pass comes up empty.
CycleEvidence cycle_exists(const PhaseModel& model, const AnalysisConfig& cfg = {});

/// Budget exhaustion surfaced with the frequency deviation that caused it.
class UndeterminedAtOmega : public std::runtime_error {
  public:
    UndeterminedAtOmega(double omega, const BudgetExhausted& inner)
        : std::runtime_error("cycle predicate undetermined at omega_delta=" +
                             std::to_string(omega) + ": " + inner.what()),
          omega_(omega) {}
    double omega() const { return omega_; }

  private:
    double omega_;
};

struct PullInResult {
    enum class Status { Bounded, ExceedsSearchLimit } status = Status::Bounded;
    double omega_lo = 0.0;  // global stability certified-by-search here
    double omega_hi = 0.0;  // rotating cycle found here

    struct Probe {
        double omega;
        bool cycle;
        double min_g;
        double min_g_location;
    };
    std::vector<Probe> probes;

    double omega_pullin() const { return omega_lo; }
};

const char* to_string(PullInResult::Status s);

using ModelFamily = std::function<PhaseModel(double /*omega_delta_free*/)>;

/// Bisection of cycle_exists over omega_delta in [0, hold-in + tol]; the
/// hold-in bound kvco*H(0)*L guarantees a cycle just above it. Searches up to
/// omega_search_max (default 1e3 * hold-in; 1e3 * kvco * L when H(0) is
/// unbounded) and reports ExceedsSearchLimit when the predicate never fires.
PullInResult pull_in_estimate(const ModelFamily& family, double tol,
                              double omega_search_max = 0.0, const AnalysisConfig& cfg = {});

struct DiagramRow {
    double a;
    double kvco;
    double omega_pullin;  // NaN unless status == "bounded"
    double normalized;    // omega_pullin / kvco
    std::string status;   // bounded | exceeds_search_limit | undetermined
};

/// One pull_in_estimate per (a, kvco) pair, a-major order, executed by a
/// worker pool; rows come back in input order regardless of worker count.
std::vector<DiagramRow> sweep_diagram(const std::vector<double>& a_values,
                                      const std::vector<double>& kvco_values, double alpha,
                                      double beta, double pd_amplitude, double tol,
                                      int workers = 1, const AnalysisConfig& cfg = {});

}  // namespace phaselock

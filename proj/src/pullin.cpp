#include "phaselock/pullin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace phaselock {

const char* to_string(PullInResult::Status s) {
    switch (s) {
        case PullInResult::Status::Bounded: return "bounded";
        case PullInResult::Status::ExceedsSearchLimit: return "exceeds_search_limit";
    }
    return "?";
}

CycleEvidence cycle_exists(const PhaseModel& model, const AnalysisConfig& cfg) {
    CycleEvidence ev;
    auto absorb = [&ev](const CyclesReport& rep) {
        ev.cycle_count += static_cast<int>(rep.cycles.size());
        if (rep.min_g < ev.min_g) {
            ev.min_g = rep.min_g;
            ev.min_g_location = rep.min_g_location;
        }
    };

    CyclesReport rep = find_cycles(model, 0.0, cfg);
    absorb(rep);
    if (!rep.cycles.empty()) {
        ev.exists = true;
        return ev;
    }
    if (!std::isfinite(rep.min_g)) return ev;  // nothing defined to refine around

    // adaptive refinement around the minimizer of g; cycles about to be born
    // at a tangency live in a band far narrower than the coarse grid spacing
    auto [lo, hi] = default_cycle_range(model);
    double center = rep.min_g_location;
    double half_width = 0.5 * (hi - lo) / 10.0;
    for (int round = 0; round < 3; ++round) {
        CyclesReport fine = find_cycles(model, center - half_width, center + half_width,
                                        0.0, cfg);
        absorb(fine);
        if (!fine.cycles.empty()) {
            ev.exists = true;
            return ev;
        }
        if (std::isfinite(fine.min_g)) center = fine.min_g_location;
        half_width /= 10.0;
    }
    return ev;
}

namespace {

double hold_in_bound(const PhaseModel& model) {
    if (model.filter.dc_singular()) return std::numeric_limits<double>::infinity();
    return model.kvco * std::abs(model.filter.dc_gain()) * model.pd.amplitude;
}

PullInResult::Probe evaluate(const ModelFamily& family, double omega,
                             const AnalysisConfig& cfg) {
    try {
        CycleEvidence ev = cycle_exists(family(omega), cfg);
        return {omega, ev.exists, ev.min_g, ev.min_g_location};
    } catch (const BudgetExhausted& e) {
        throw UndeterminedAtOmega(omega, e);
    }
}

}  // namespace

PullInResult pull_in_estimate(const ModelFamily& family, double tol, double omega_search_max,
                              const AnalysisConfig& cfg) {
    if (!(tol > 0.0)) throw std::invalid_argument("pull_in_estimate: tol must be positive");
    const PhaseModel probe_model = family(0.0);
    probe_model.validate();
    const double hold_in = hold_in_bound(probe_model);
    if (omega_search_max <= 0.0) {
        omega_search_max = std::isfinite(hold_in)
                               ? 1e3 * hold_in
                               : 1e3 * probe_model.kvco * probe_model.pd.amplitude;
    }

    PullInResult result;
    double hi = std::isfinite(hold_in) ? hold_in + tol : omega_search_max;
    hi = std::min(hi, omega_search_max);

    PullInResult::Probe top = evaluate(family, hi, cfg);
    result.probes.push_back(top);
    if (!top.cycle) {
        if (!std::isfinite(hold_in) || hi < hold_in) {
            result.status = PullInResult::Status::ExceedsSearchLimit;
            result.omega_lo = hi;
            result.omega_hi = std::numeric_limits<double>::infinity();
            return result;
        }
        // predicate never fires below the hold-in ceiling: pull-in == hold-in
        result.omega_lo = hold_in;
        result.omega_hi = hi;
        return result;
    }

    double lo = 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        PullInResult::Probe p = evaluate(family, mid, cfg);
        result.probes.push_back(p);
        (p.cycle ? hi : lo) = mid;
    }
    result.omega_lo = lo;
    result.omega_hi = hi;
    return result;
}

std::vector<DiagramRow> sweep_diagram(const std::vector<double>& a_values,
                                      const std::vector<double>& kvco_values, double alpha,
                                      double beta, double pd_amplitude, double tol,
                                      int workers, const AnalysisConfig& cfg) {
    if (a_values.empty() || kvco_values.empty())
        throw std::invalid_argument("sweep_diagram: parameter grids must be nonempty");

    struct Job {
        double a, kvco;
    };
    std::vector<Job> jobs;
    for (double a : a_values)
        for (double k : kvco_values) jobs.push_back({a, k});

    std::vector<DiagramRow> rows(jobs.size());
    std::atomic<size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& j = jobs[i];
            DiagramRow row{j.a, j.kvco, std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), ""};
            try {
                ModelFamily family = [&j, alpha, beta, pd_amplitude](double omega) {
                    PhaseModel m;
                    m.filter = leadlag_realize(j.a, alpha, beta);
                    m.kvco = j.kvco;
                    m.omega_delta_free = omega;
                    m.pd = PDCharacteristic{pd_amplitude};
                    return m;
                };
                PullInResult r = pull_in_estimate(family, tol, 0.0, cfg);
                row.status = to_string(r.status);
                if (r.status == PullInResult::Status::Bounded) {
                    row.omega_pullin = r.omega_pullin();
                    row.normalized = row.omega_pullin / j.kvco;
                }
            } catch (const UndeterminedAtOmega&) {
                row.status = "undetermined";
            }
            rows[i] = std::move(row);
        }
    };

    const int n_workers = std::max(1, workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;
}

}  // namespace phaselock

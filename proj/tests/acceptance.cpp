// Acceptance gate: one criterion per invocation (A1..A6), one PASS/FAIL line.
// All tolerances are pinned here; a red line means the property does not hold
// as stated, never that the check was loosened.

#include "phaselock/analysis.hpp"
#include "phaselock/integrate.hpp"
#include "phaselock/io.hpp"
#include "phaselock/lyapunov.hpp"
#include "phaselock/model.hpp"
#include "phaselock/pullin.hpp"
#include "phaselock/signal_space.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace phaselock;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Gate {
    std::string name;
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& why) {
        if (!cond && ok) {
            ok = false;
            detail = why;
        }
    }
    int finish() const {
        if (ok)
            std::printf("%s PASS\n", name.c_str());
        else
            std::printf("%s FAIL — %s\n", name.c_str(), detail.c_str());
        return ok ? 0 : 1;
    }
};

// --------------------------------------------------------------------------
// A1: mixer identity over 1e5 random front-end draws, 1e-12 relative

int run_a1() {
    Gate g{"A1"};
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        OpticalParams p;
        p.p1 = 0.1 + 9.9 * uniform01(rng);
        p.p2 = 0.1 + 9.9 * uniform01(rng);
        p.responsivity = 0.1 + 9.9 * uniform01(rng);
        p.tia_gain = 0.1 + 9.9 * uniform01(rng);
        const double t1 = -10.0 + 20.0 * uniform01(rng);
        const double t2 = -10.0 + 20.0 * uniform01(rng);
        const int m = uniform01(rng) < 0.5 ? -1 : 1;
        const double ra = p.responsivity * p.tia_gain;
        const double amplitude = ra * ra * p.p1 * p.p2 / 8.0;
        worst = std::max(worst, std::abs(pd_identity_residual(t1, t2, m, p)) / amplitude);
    }
    g.require(worst <= 1e-12, "max relative residual " + std::to_string(worst));
    return g.finish();
}

// --------------------------------------------------------------------------
// A2: realization identity at 100 frequencies (1e-9) and stiff linear decay
// reproduced over 28 decades (1e-8 relative at t = 1)

int run_a2() {
    Gate g{"A2"};
    const StateSpace f = leadlag_realize(0.2922, 63.1656, 63.1656);
    std::mt19937_64 rng(22);
    for (int i = 0; i < 100; ++i) {
        const double w = std::pow(10.0, -2.0 + 6.0 * uniform01(rng));
        const std::complex<double> s(0.0, w);
        const std::complex<double> want = (0.2922 * s + 63.1656) / (s + 63.1656);
        const double rel = std::abs(f.transfer(s) - want) / std::abs(want);
        g.require(rel < 1e-9, "transfer mismatch " + std::to_string(rel));
    }

    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-300;
    Eigen::VectorXd y0 = Eigen::VectorXd::Constant(1, 1.0);
    Dopri5 st([](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d = -63.1656 * y; },
              0.0, y0, cfg);
    while (st.step(1.0)) {
    }
    const double want = std::exp(-63.1656);
    const double rel = std::abs(st.y()[0] - want) / want;
    g.require(rel < 1e-8, "decay error " + std::to_string(rel));
    return g.finish();
}

// --------------------------------------------------------------------------
// A3: benchmark regime at alpha = beta = 63.1656, a = 0.2922, omega = 89.5.
// Documented 1-D search over the lumped gain kvco*L for a gain where exactly
// one stable and one unstable rotating cycle coexist with a stable
// equilibrium. The search below covers the full cycle-bearing gain band; in
// this band the coexisting structure observed is one stable rotating cycle
// whose basin is bounded by the saddle separatrix, not by an unstable cycle,
// so the two-cycle clause fails and is reported as such. The remaining
// sub-checks run at the best gain found.

PhaseModel a3_model(double gain) {
    PhaseModel m;
    m.filter = leadlag_realize(0.2922, 63.1656, 63.1656);
    m.kvco = gain;  // L = 1; only the product kvco*L matters
    m.omega_delta_free = 89.5;
    return m;
}

int run_a3() {
    Gate g{"A3"};
    AnalysisConfig cfg;
    cfg.cycle_residual = 1e-9;  // pinned
    cfg.tol_tangency = 1e-3;    // pinned

    // 1-D search: equilibria exist for gain > 89.5; the rotating cycle dies
    // before gain 110 (beyond it min g stays positive), so scan [90, 110].
    double best_gain = 0.0;
    CyclesReport best;
    bool two_cycle_gain_found = false;
    std::ostringstream log;
    for (double gain = 90.0; gain <= 110.0 + 1e-9; gain += 2.0) {
        const PhaseModel m = a3_model(gain);
        const CyclesReport rep = find_cycles(m, 0.0, cfg);
        int stable = 0, unstable = 0;
        for (const auto& c : rep.cycles) {
            if (c.cls == CycleClass::Stable) ++stable;
            if (c.cls == CycleClass::Unstable) ++unstable;
        }
        log << " g=" << gain << ":" << stable << "s/" << unstable << "u";
        if (stable == 1 && unstable == 1 && !find_equilibria(m).empty()) {
            two_cycle_gain_found = true;
            best_gain = gain;
            best = rep;
            break;
        }
        if (stable >= 1 && !find_equilibria(m).empty() && best_gain == 0.0) {
            best_gain = gain;
            best = rep;
        }
    }
    g.require(two_cycle_gain_found,
              "no gain in [90,110] yields one stable + one unstable rotating cycle; "
              "the stable cycle's basin is bounded by the saddle separatrix (scan:" +
                  log.str() + ")");

    if (best_gain == 0.0) {
        g.require(false, "no gain with cycle/equilibrium coexistence at all");
        return g.finish();
    }

    // Sub-checks at the best gain: coexistence, Cycle/Lock separation across
    // the basin boundary, and the hidden-attractor consistency probe. These
    // are reported alongside the verdict above.
    const PhaseModel m = a3_model(best_gain);
    const auto eqs = find_equilibria(m);
    const Equilibrium* stable_eq = nullptr;
    for (const auto& eq : eqs)
        if (eq.is_stable()) stable_eq = &eq;
    bool coexist = stable_eq != nullptr && !best.cycles.empty();

    bool separation = false;
    if (coexist) {
        const double x_cycle = best.cycles.front().x_star;
        LoopState rotating{Eigen::VectorXd::Constant(1, x_cycle), 0.0};
        LoopState locking{stable_eq->x_star, stable_eq->theta_star + 0.01};
        separation = classify_trajectory(m, rotating, cfg).kind == Outcome::Kind::Cycle &&
                     classify_trajectory(m, locking, cfg).kind == Outcome::Kind::Lock;
    }

    // 100 small perturbations of each equilibrium: hidden-consistency flag is
    // set only if none of them reaches the stable cycle
    bool hidden = true;
    if (coexist) {
        std::mt19937_64 rng(33);
        for (int i = 0; i < 100; ++i) {
            const double r = 1e-3;
            const double ang = 2.0 * kPi * uniform01(rng);
            LoopState init{
                Eigen::VectorXd::Constant(1, stable_eq->x_star[0] + r * std::cos(ang)),
                stable_eq->theta_star + r * std::sin(ang)};
            if (classify_trajectory(m, init, cfg).kind == Outcome::Kind::Cycle) hidden = false;
        }
    }

    // paper-replay initial conditions: outcomes recorded, match not required
    // (the calibrated gain is not published)
    const std::array<std::pair<double, double>, 2> replay{{{0.6304, 0.3975},
                                                           {-0.1373, 24.3161}}};
    std::ostringstream replay_log;
    for (const auto& [x0, th0] : replay) {
        LoopState init{Eigen::VectorXd::Constant(1, x0), th0};
        const Outcome o = classify_trajectory(m, init, cfg);
        replay_log << " (" << x0 << "," << th0 << ")->" << to_string(o.kind);
    }

    std::printf(
        "A3 sub-checks at gain %.1f: coexistence=%s separation=%s hidden_flag=%s replay:%s\n",
        best_gain, coexist ? "yes" : "no", separation ? "yes" : "no", hidden ? "set" : "unset",
        replay_log.str().c_str());
    g.require(coexist, "no stable cycle coexisting with a stable equilibrium");
    g.require(separation, "Cycle/Lock separation across the basin boundary failed");
    return g.finish();
}

// --------------------------------------------------------------------------
// A4: PI infinite pull-in. Sign grid of 1e6 points, chain-rule oracle 1e-9,
// lock + monotone V for omega in {1,10,100,1000} * kvco, 25 inits each.

int run_a4() {
    Gate g{"A4"};
    PiParams p{0.01, 1.0, 1.0, 0.0};

    const auto sweep = vdot_sign_sweep(p, 1000, 1000, {p.kvco}, 1e-12);
    g.require(sweep.points == 1000000, "grid size " + std::to_string(sweep.points));
    g.require(sweep.max_vdot <= 0.0, "vdot positive: " + std::to_string(sweep.max_vdot));
    g.require(sweep.sign_violations == 0,
              std::to_string(sweep.sign_violations) + " sign violations");
    g.require(sweep.equality_violations == 0,
              std::to_string(sweep.equality_violations) + " equality violations");
    g.require(sweep.max_oracle_rel_err <= 1e-9,
              "oracle mismatch " + std::to_string(sweep.max_oracle_rel_err));

    std::mt19937_64 rng(44);
    std::vector<std::pair<double, double>> inits;
    for (int i = 0; i < 25; ++i)
        inits.emplace_back(-10.0 + 20.0 * uniform01(rng), kPi * uniform01(rng));
    const std::vector<double> omegas{1.0, 10.0, 100.0, 1000.0};  // kvco = 1
    const auto conv = certify_global_convergence(p, inits, omegas);
    g.require(conv.converged, "a trajectory failed to lock");
    g.require(conv.v_monotone,
              "V increase " + std::to_string(conv.max_v_increase) + " of V(0)");
    g.require(conv.lasalle_ok, "flow stalls on the vdot = 0 set off equilibrium");
    g.require(conv.max_v_increase <= 1e-7, "V increase above budget");
    return g.finish();
}

// --------------------------------------------------------------------------
// A5: pull-in estimator properties on 5 random lead-lag parameter sets

int run_a5() {
    Gate g{"A5"};
    std::mt19937_64 rng(55);
    AnalysisConfig cfg;
    cfg.grid_points = 100;

    for (int set = 0; set < 5 && g.ok; ++set) {
        const double a = 0.1 + 0.8 * uniform01(rng);
        const double alpha = 1.0 + 9.0 * uniform01(rng);
        const double beta = 0.5 + 9.5 * uniform01(rng);
        const double kvco = 1.0 + 9.0 * uniform01(rng);
        const double h0 = beta / alpha;
        const double hold_in = kvco * h0;
        const double tol = hold_in / 12.0;
        ModelFamily family = [=](double omega) {
            PhaseModel m;
            m.filter = leadlag_realize(a, alpha, beta);
            m.kvco = kvco;
            m.omega_delta_free = omega;
            return m;
        };
        const PullInResult r = pull_in_estimate(family, tol, 0.0, cfg);
        const std::string tag = " (set " + std::to_string(set) + ")";
        g.require(r.status == PullInResult::Status::Bounded, "not bounded" + tag);
        g.require(r.omega_hi - r.omega_lo <= tol + 1e-9, "bracket wider than tol" + tag);
        g.require(r.omega_pullin() <= hold_in + 1e-9, "pull-in above hold-in" + tag);

        // brute-force scan with step tol
        double scan_first = hold_in + tol;
        for (double w = tol; w <= hold_in + tol + 1e-9; w += tol) {
            if (cycle_exists(family(w), cfg).exists) {
                scan_first = w;
                break;
            }
        }
        g.require(std::abs(scan_first - r.omega_hi) <= 2.0 * tol + 1e-9,
                  "scan disagrees: scan " + std::to_string(scan_first) + " vs bracket hi " +
                      std::to_string(r.omega_hi) + tag);

        // below pull-in: a 10x10 init grid all locks
        const double w_lock = 0.9 * r.omega_pullin();
        if (w_lock > 0.0) {
            const PhaseModel m = family(w_lock);
            const double span = 2.0 * std::max(1.0, w_lock / kvco);
            for (int i = 0; i < 10 && g.ok; ++i) {
                for (int j = 0; j < 10 && g.ok; ++j) {
                    LoopState init{Eigen::VectorXd::Constant(1, -span + 2.0 * span * i / 9.0),
                                   kPi * j / 10.0};
                    const Outcome o = classify_trajectory(m, init, cfg);
                    g.require(o.kind == Outcome::Kind::Lock,
                              "non-lock below pull-in at (" + std::to_string(init.x[0]) + "," +
                                  std::to_string(init.theta_delta) + ")" + tag);
                }
            }
        }

        // above pull-in (capped at hold-in): a rotating cycle exists
        const double w_cycle = std::min(1.1 * r.omega_hi, hold_in);
        g.require(cycle_exists(family(std::max(w_cycle, r.omega_hi)), cfg).exists,
                  "no cycle above pull-in" + tag);

        // a = 1 rows hit the hold-in ceiling
        ModelFamily allpass = [=](double omega) {
            PhaseModel m;
            m.filter = leadlag_realize(1.0, alpha, alpha);
            m.kvco = kvco;
            m.omega_delta_free = omega;
            return m;
        };
        const PullInResult rc = pull_in_estimate(allpass, tol, 0.0, cfg);
        g.require(rc.status == PullInResult::Status::Bounded &&
                      std::abs(rc.omega_pullin() - kvco) <= 2.0 * tol,
                  "all-pass pull-in misses the hold-in ceiling" + tag);
    }
    return g.finish();
}

// --------------------------------------------------------------------------
// A6: byte-identical outputs for every subcommand under a fixed config/seed

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_a6(const char* cli) {
    Gate g{"A6"};
    if (cli == nullptr) {
        g.require(false, "path to the CLI binary was not provided");
        return g.finish();
    }
    const fs::path work = fs::temp_directory_path() / "phaselock_a6";
    fs::remove_all(work);
    fs::create_directories(work);

    const fs::path cfg = work / "model.json";
    {
        std::ofstream out(cfg);
        out << R"({"schema": 1,
                   "model": {"filter": {"type": "leadlag", "a": 0.2922,
                                        "alpha": 63.1656, "beta": 63.1656},
                             "kvco": 100.0, "omega_delta_free": 89.5},
                   "simulate": {"t_end": 0.5,
                                "initial": [{"x": [0.0], "theta_delta": 0.3},
                                            {"x": [0.0141], "theta_delta": 0.56}]}})";
    }
    const fs::path sweep_cfg = work / "sweep.json";
    {
        std::ofstream out(sweep_cfg);
        out << R"({"schema": 1,
                   "sweep": {"a_values": [1.0], "kvco_values": [2.0, 4.0],
                             "alpha": 3.0, "beta": 3.0, "tol": 0.25}})";
    }

    const std::string c = std::string("\"") + cli + "\" ";
    struct Step {
        std::string args;
        std::vector<std::string> files;  // outputs relative to the run dir
    };
    const std::vector<Step> steps{
        {"simulate --config " + cfg.string() + " --out {dir}",
         {"trajectory_0.csv", "trajectory_1.csv", "portrait.svg"}},
        {"equilibria --config " + cfg.string(), {}},
        {"cycles --config " + cfg.string() + " --xmin -0.02 --xmax 0.005 --svg {dir}/c.svg",
         {"c.svg"}},
        {"pullin --filter leadlag --a 1.0 --alpha 3.0 --beta 3.0 --kvco 2.0 --tol 0.25", {}},
        {"sweep --config " + sweep_cfg.string() + " --out {dir}/rows.csv --workers 2",
         {"rows.csv"}},
        {"lyapunov-check --grid-nx 50 --grid-ntheta 50 --inits 5 --seed 9", {}},
        {"signal-check --samples 5000 --seed 9", {}},
    };

    for (const auto& step : steps) {
        // both runs write into the same directory (stdout embeds paths);
        // outputs are snapshotted into memory between runs
        const fs::path dir = work / "run";
        std::string args = step.args;
        for (size_t pos; (pos = args.find("{dir}")) != std::string::npos;)
            args.replace(pos, 5, dir.string());
        const fs::path out_file = work / "stdout.txt";
        const std::string cmd = c + args + " > " + out_file.string() + " 2>/dev/null";

        std::array<std::string, 2> stdouts;
        std::array<std::vector<std::string>, 2> contents;
        for (int run = 0; run < 2; ++run) {
            fs::remove_all(dir);
            fs::create_directories(dir);
            const int rc = std::system(cmd.c_str());
            g.require(rc == 0, "nonzero exit from: " + args);
            stdouts[run] = slurp(out_file);
            for (const auto& f : step.files) contents[run].push_back(slurp(dir / f));
        }
        g.require(stdouts[0] == stdouts[1], "stdout differs for: " + step.args);
        for (size_t i = 0; i < step.files.size(); ++i)
            g.require(contents[0][i] == contents[1][i] && !contents[0][i].empty(),
                      "file " + step.files[i] + " differs for: " + step.args);
        if (!g.ok) break;
    }
    fs::remove_all(work);
    return g.finish();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <A1..A6> [cli-path]\n");
        return 2;
    }
    const std::string which = argv[1];
    if (which == "A1") return run_a1();
    if (which == "A2") return run_a2();
    if (which == "A3") return run_a3();
    if (which == "A4") return run_a4();
    if (which == "A5") return run_a5();
    if (which == "A6") return run_a6(argc > 2 ? argv[2] : nullptr);
    std::fprintf(stderr, "unknown criterion %s\n", which.c_str());
    return 2;
}

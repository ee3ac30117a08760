// phaselock: simulate, analyze and sweep the coherent-receiver phase loop.

#include "phaselock/analysis.hpp"
#include "phaselock/config.hpp"
#include "phaselock/integrate.hpp"
#include "phaselock/io.hpp"
#include "phaselock/lyapunov.hpp"
#include "phaselock/model.hpp"
#include "phaselock/pullin.hpp"
#include "phaselock/signal_space.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phaselock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerics = 2;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int default_workers() {
    if (const char* env = std::getenv("PHASELOCK_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(v);
    }
    return 1;
}

json eigen_to_json(const Eigen::VectorXcd& ev) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        arr.push_back({{"re", ev[i].real()}, {"im", ev[i].imag()}});
    return arr;
}

json equilibrium_to_json(const Equilibrium& eq) {
    json x = json::array();
    for (Eigen::Index i = 0; i < eq.x_star.size(); ++i) x.push_back(eq.x_star[i]);
    return {{"theta_star", eq.theta_star},
            {"x_star", x},
            {"class", to_string(eq.cls)},
            {"eigenvalues", eigen_to_json(eq.eigenvalues)}};
}

const PhaseModel& require_model(const RunConfig& cfg) {
    if (!cfg.model) throw ConfigError("this subcommand needs a \"model\" section");
    return *cfg.model;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::vector<PortraitPoint> equilibria_points(const PhaseModel& model) {
    std::vector<PortraitPoint> pts;
    for (const auto& eq : find_equilibria(model))
        if (eq.x_star.size() == 1) pts.push_back({eq.theta_star, eq.x_star[0], eq.is_stable()});
    return pts;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_config(config_path);
    const PhaseModel& model = require_model(cfg);
    if (!cfg.simulate) throw ConfigError("simulate needs a \"simulate\" section");
    fs::create_directories(out_dir);

    json summary;
    summary["trajectories"] = json::array();
    std::vector<PortraitCurve> curves;
    for (size_t i = 0; i < cfg.simulate->initial.size(); ++i) {
        Trajectory traj = integrate(model, cfg.simulate->initial[i], cfg.simulate->t_end,
                                    cfg.simulate->integrator);
        std::ostringstream csv;
        write_trajectory_csv(csv, traj);
        const fs::path csv_path = fs::path(out_dir) / ("trajectory_" + std::to_string(i) + ".csv");
        write_file(csv_path, csv.str());
        curves.push_back(sample_curve(traj, 2000));

        const Eigen::VectorXd& last = traj.states.back();
        summary["trajectories"].push_back(
            {{"file", csv_path.string()},
             {"final_theta_delta", last[traj.filter_dim]},
             {"section_crossings", section_crossings(traj, model, 0.0).size()}});
    }
    std::ostringstream svg;
    write_portrait_svg(svg, curves, equilibria_points(model));
    const fs::path svg_path = fs::path(out_dir) / "portrait.svg";
    write_file(svg_path, svg.str());
    summary["portrait"] = svg_path.string();
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_equilibria(const std::string& config_path) {
    RunConfig cfg = load_config(config_path);
    json out = json::array();
    for (const auto& eq : find_equilibria(require_model(cfg))) out.push_back(equilibrium_to_json(eq));
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_cycles(const std::string& config_path, double s, double xmin, double xmax,
               bool have_range, const std::string& svg_path) {
    RunConfig cfg = load_config(config_path);
    const PhaseModel& model = require_model(cfg);
    AnalysisConfig acfg;
    CyclesReport rep = have_range ? find_cycles(model, xmin, xmax, s, acfg)
                                  : find_cycles(model, s, acfg);
    json out;
    out["cycles"] = json::array();
    for (const auto& c : rep.cycles)
        out["cycles"].push_back({{"s", c.section_phase},
                                 {"x_star", c.x_star},
                                 {"period", c.period},
                                 {"multiplier", c.multiplier},
                                 {"class", to_string(c.cls)}});
    out["min_g"] = rep.min_g;
    out["min_g_location"] = rep.min_g_location;
    if (rep.tangency)
        out["tangency_candidate"] = {{"x", rep.tangency->x}, {"min_g", rep.tangency->min_g}};

    if (!svg_path.empty()) {
        std::vector<PortraitCurve> curves;
        for (const auto& c : rep.cycles) {
            LoopState init;
            init.x = Eigen::VectorXd::Constant(1, c.x_star);
            init.theta_delta = c.section_phase;
            Trajectory traj = integrate(model, init, c.period, acfg.integrator);
            curves.push_back(sample_curve(traj, 600,
                                          c.cls == CycleClass::Unstable
                                              ? PortraitCurve::Style::UnstableCycle
                                              : PortraitCurve::Style::StableCycle));
        }
        std::ostringstream svg;
        write_portrait_svg(svg, curves, equilibria_points(model));
        write_file(svg_path, svg.str());
        out["portrait"] = svg_path;
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

struct PullInFlags {
    std::string filter = "leadlag";
    double a = 0.0, alpha = 0.0, beta = 0.0;
    double tau1 = 1.0, tau2 = 1.0;
    double amplitude = 1.0;
    double kvco = 0.0;
    double tol = 1e-3;
    double omega_max = 0.0;
};

int cmd_pullin(const PullInFlags& f) {
    ModelFamily family = [&f](double omega) {
        PhaseModel m;
        m.filter = f.filter == "pi" ? pi_realize(f.tau1, f.tau2)
                                    : leadlag_realize(f.a, f.alpha, f.beta);
        m.kvco = f.kvco;
        m.omega_delta_free = omega;
        m.pd = PDCharacteristic(f.amplitude);
        return m;
    };
    PullInResult r = pull_in_estimate(family, f.tol, f.omega_max);
    json out = {{"status", to_string(r.status)},
                {"omega_lo", r.omega_lo},
                {"omega_hi", r.omega_hi},
                {"probes", json::array()}};
    if (r.status == PullInResult::Status::Bounded) out["omega_pullin"] = r.omega_pullin();
    for (const auto& p : r.probes)
        out["probes"].push_back({{"omega", p.omega},
                                 {"cycle", p.cycle},
                                 {"min_g", p.min_g},
                                 {"min_g_location", p.min_g_location}});
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& csv_path,
              const std::string& svg_path, int workers) {
    RunConfig cfg = load_config(config_path);
    if (!cfg.sweep) throw ConfigError("sweep needs a \"sweep\" section");
    const SweepSection& s = *cfg.sweep;
    auto rows = sweep_diagram(s.a_values, s.kvco_values, s.alpha, s.beta, s.pd_amplitude,
                              s.tol, workers);

    std::ostringstream csv;
    csv << "a,kvco,omega_pullin,normalized,status\n";
    for (const auto& r : rows)
        csv << format_double(r.a) << ',' << format_double(r.kvco) << ','
            << format_double(r.omega_pullin) << ',' << format_double(r.normalized) << ','
            << r.status << "\n";
    write_file(csv_path, csv.str());

    if (!svg_path.empty()) {
        // normalized pull-in vs gain, one polyline per filter parameter a
        std::vector<PortraitCurve> curves;  // reuse: "theta" axis carries scaled kvco
        double k_lo = s.kvco_values.front(), k_hi = s.kvco_values.front();
        for (double k : s.kvco_values) {
            k_lo = std::min(k_lo, k);
            k_hi = std::max(k_hi, k);
        }
        const double span = std::max(k_hi - k_lo, 1e-12);
        for (double a : s.a_values) {
            PortraitCurve c;
            for (const auto& r : rows) {
                if (r.a != a || r.status != "bounded") continue;
                c.theta.push_back(-std::numbers::pi / 2 +
                                  (r.kvco - k_lo) / span * std::numbers::pi * 0.999);
                c.x.push_back(r.normalized);
            }
            curves.push_back(std::move(c));
        }
        std::ostringstream svg;
        write_portrait_svg(svg, curves, {});
        write_file(svg_path, svg.str());
    }
    return kExitOk;
}

int cmd_lyapunov(double tau1, double tau2, double kvco, std::vector<double> omegas,
                 long grid_nx, long grid_ntheta, int n_inits, unsigned long seed) {
    PiParams p{tau1, tau2, kvco, 0.0};
    if (omegas.empty()) omegas = {kvco, 10 * kvco, 100 * kvco, 1000 * kvco};

    SignSweepReport sweep = vdot_sign_sweep(p, grid_nx, grid_ntheta, omegas);

    std::mt19937_64 rng(seed);
    std::vector<std::pair<double, double>> inits;
    for (int i = 0; i < n_inits; ++i)
        inits.emplace_back(-10.0 + 20.0 * uniform01(rng),
                           std::numbers::pi * uniform01(rng));
    ConvergenceReport conv = certify_global_convergence(p, inits, omegas);

    json violations = json::array();
    for (const auto& v : conv.violations)
        violations.push_back({{"omega", v.omega},
                              {"x0", v.x0},
                              {"theta0", v.theta0},
                              {"kind", v.what},
                              {"value", v.value}});
    json out = {{"grid_size", sweep.points},
                {"max_vdot", sweep.max_vdot},
                {"sign_violations", sweep.sign_violations},
                {"equality_violations", sweep.equality_violations},
                {"max_oracle_rel_err", sweep.max_oracle_rel_err},
                {"max_v_increase", conv.max_v_increase},
                {"violations", violations},
                {"convergence", conv.pass() && sweep.sign_violations == 0 &&
                                        sweep.equality_violations == 0
                                    ? "pass"
                                    : "fail"}};
    std::cout << out.dump(2) << "\n";
    return out["convergence"] == "pass" ? kExitOk : kExitNumerics;
}

int cmd_signal_check(long samples, unsigned long seed) {
    std::mt19937_64 rng(seed);
    double max_rel = 0.0;
    for (long i = 0; i < samples; ++i) {
        OpticalParams p;
        p.p1 = 0.1 + 9.9 * uniform01(rng);
        p.p2 = 0.1 + 9.9 * uniform01(rng);
        p.responsivity = 0.1 + 9.9 * uniform01(rng);
        p.tia_gain = 0.1 + 9.9 * uniform01(rng);
        const double t1 = 2.0 * std::numbers::pi * uniform01(rng);
        const double t2 = 2.0 * std::numbers::pi * uniform01(rng);
        const int m = uniform01(rng) < 0.5 ? -1 : 1;
        const double ra = p.responsivity * p.tia_gain;
        const double amplitude = ra * ra * p.p1 * p.p2 / 8.0;
        const double rel = std::abs(pd_identity_residual(t1, t2, m, p)) / amplitude;
        max_rel = std::max(max_rel, rel);
    }

    OpticalParams sq;
    sq.carrier = 2.0 * std::numbers::pi * 10.0;
    SquareLawReport rep = squarelaw_consistency(0.7, -0.3, sq.carrier, 1, sq);

    const bool pass = max_rel <= 1e-12 && rep.max_deviation <= 1e-12;
    json out = {{"samples", samples},
                {"max_relative_residual", max_rel},
                {"squarelaw_max_deviation", rep.max_deviation},
                {"pass", pass}};
    std::cout << out.dump(2) << "\n";
    return pass ? kExitOk : kExitNumerics;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent-receiver phase-loop analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", svg_path, csv_path;
    double s = 0.0, xmin = 0.0, xmax = 0.0;
    int workers = default_workers();

    auto* sim = app.add_subcommand("simulate", "Integrate the phase model; CSV + SVG portrait");
    sim->add_option("--config", config_path, "JSON configuration")->required();
    sim->add_option("--out", out_dir, "output directory");

    auto* eq = app.add_subcommand("equilibria", "Locate and classify equilibria");
    eq->add_option("--config", config_path, "JSON configuration")->required();

    auto* cyc = app.add_subcommand("cycles", "Rotating-cycle search on the return-map section");
    cyc->add_option("--config", config_path, "JSON configuration")->required();
    cyc->add_option("--s", s, "section phase");
    auto* o_xmin = cyc->add_option("--xmin", xmin, "section range low");
    auto* o_xmax = cyc->add_option("--xmax", xmax, "section range high");
    cyc->add_option("--svg", svg_path, "write a phase portrait here");

    PullInFlags pf;
    auto* pull = app.add_subcommand("pullin", "Pull-in frequency estimation by bisection");
    pull->add_option("--filter", pf.filter, "leadlag or pi")
        ->check(CLI::IsMember({"leadlag", "pi"}));
    pull->add_option("--a", pf.a, "lead-lag high-frequency gain");
    pull->add_option("--alpha", pf.alpha, "lead-lag pole");
    pull->add_option("--beta", pf.beta, "lead-lag numerator constant");
    pull->add_option("--tau1", pf.tau1, "PI time constant");
    pull->add_option("--tau2", pf.tau2, "PI time constant");
    pull->add_option("--L", pf.amplitude, "PD amplitude");
    pull->add_option("--kvco", pf.kvco, "VCO gain")->required();
    pull->add_option("--tol", pf.tol, "bracket tolerance, rad/s");
    pull->add_option("--omega-max", pf.omega_max, "search ceiling (0 = default)");

    auto* sw = app.add_subcommand("sweep", "Pull-in diagram over (a, kvco) grids");
    sw->add_option("--config", config_path, "JSON configuration")->required();
    sw->add_option("--out", csv_path, "CSV output path")->required();
    sw->add_option("--svg", svg_path, "optional SVG diagram");
    sw->add_option("--workers", workers, "worker pool size");

    double tau1 = 0.01, tau2 = 1.0, kvco = 1.0;
    std::vector<double> omegas;
    long grid_nx = 1000, grid_ntheta = 1000;
    int n_inits = 25;
    unsigned long seed = 0;
    auto* lyap = app.add_subcommand("lyapunov-check",
                                    "Certify the PI loop's energy-function descent");
    lyap->add_option("--tau1", tau1, "PI time constant");
    lyap->add_option("--tau2", tau2, "PI time constant");
    lyap->add_option("--kvco", kvco, "VCO gain");
    lyap->add_option("--omega", omegas, "frequency deviations (default 1,10,100,1000 x kvco)");
    lyap->add_option("--grid-nx", grid_nx, "sign-grid x resolution");
    lyap->add_option("--grid-ntheta", grid_ntheta, "sign-grid theta resolution");
    lyap->add_option("--inits", n_inits, "random initial conditions per omega");
    lyap->add_option("--seed", seed, "RNG seed");

    long samples = 100000;
    auto* sig = app.add_subcommand("signal-check", "Waveform-level identity suite");
    sig->add_option("--samples", samples, "random parameter draws");
    sig->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_dir);
        if (eq->parsed()) return cmd_equilibria(config_path);
        if (cyc->parsed()) {
            const bool have_range = o_xmin->count() > 0 || o_xmax->count() > 0;
            if (have_range && (o_xmin->count() == 0 || o_xmax->count() == 0))
                throw ConfigError("--xmin and --xmax must be given together");
            return cmd_cycles(config_path, s, xmin, xmax, have_range, svg_path);
        }
        if (pull->parsed()) return cmd_pullin(pf);
        if (sw->parsed()) return cmd_sweep(config_path, csv_path, svg_path, workers);
        if (lyap->parsed())
            return cmd_lyapunov(tau1, tau2, kvco, omegas, grid_nx, grid_ntheta, n_inits, seed);
        if (sig->parsed()) return cmd_signal_check(samples, seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BudgetExhausted& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerics;
    } catch (const UndeterminedAtOmega& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerics;
    } catch (const StepUnderflow& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerics;
    } catch (const NonFinite& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

#include "phaselock/config.hpp"

#include <fstream>
#include <set>

namespace phaselock {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional = {}) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!required.count(key) && !optional.count(key))
            throw ConfigError(where + ": unknown field \"" + key + "\"");
    }
    for (const auto& key : required) {
        if (!obj.contains(key))
            throw ConfigError(where + ": missing field \"" + key + "\"");
    }
}

double number_at(const json& obj, const std::string& where, const std::string& key) {
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

std::vector<double> number_array(const json& obj, const std::string& where,
                                 const std::string& key) {
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty())
        throw ConfigError(where + "." + key + " must be a nonempty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(where + "." + key + " must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

StateSpace parse_filter(const json& f) {
    require_keys(f, "model.filter", {"type"}, {"a", "alpha", "beta", "tau1", "tau2"});
    const std::string type = f.at("type").get<std::string>();
    if (type == "leadlag") {
        require_keys(f, "model.filter (leadlag)", {"type", "a", "alpha", "beta"});
        return leadlag_realize(number_at(f, "model.filter", "a"),
                               number_at(f, "model.filter", "alpha"),
                               number_at(f, "model.filter", "beta"));
    }
    if (type == "pi") {
        require_keys(f, "model.filter (pi)", {"type", "tau1", "tau2"});
        return pi_realize(number_at(f, "model.filter", "tau1"),
                          number_at(f, "model.filter", "tau2"));
    }
    throw ConfigError("model.filter.type must be \"leadlag\" or \"pi\"");
}

PhaseModel parse_model(const json& m) {
    require_keys(m, "model", {"filter", "kvco", "omega_delta_free"}, {"pd_amplitude"});
    PhaseModel model;
    model.filter = parse_filter(m.at("filter"));
    model.kvco = number_at(m, "model", "kvco");
    model.omega_delta_free = number_at(m, "model", "omega_delta_free");
    if (m.contains("pd_amplitude"))
        model.pd = PDCharacteristic(number_at(m, "model", "pd_amplitude"));
    model.validate();
    return model;
}

SimulateSection parse_simulate(const json& s, Eigen::Index filter_dim) {
    require_keys(s, "simulate", {"t_end", "initial"}, {"rel_tol", "abs_tol", "max_step"});
    SimulateSection sec;
    sec.t_end = number_at(s, "simulate", "t_end");
    if (!(sec.t_end > 0.0)) throw ConfigError("simulate.t_end must be positive");
    if (s.contains("rel_tol")) sec.integrator.rel_tol = number_at(s, "simulate", "rel_tol");
    if (s.contains("abs_tol")) sec.integrator.abs_tol = number_at(s, "simulate", "abs_tol");
    if (s.contains("max_step")) sec.integrator.max_step = number_at(s, "simulate", "max_step");
    sec.integrator.validate();

    const json& inits = s.at("initial");
    if (!inits.is_array() || inits.empty())
        throw ConfigError("simulate.initial must be a nonempty array");
    for (const auto& e : inits) {
        require_keys(e, "simulate.initial[]", {"x", "theta_delta"});
        LoopState st;
        auto xs = number_array(e, "simulate.initial[]", "x");
        if (static_cast<Eigen::Index>(xs.size()) != filter_dim)
            throw ConfigError("simulate.initial[].x length must match the filter order");
        st.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        st.theta_delta = number_at(e, "simulate.initial[]", "theta_delta");
        sec.initial.push_back(std::move(st));
    }
    return sec;
}

SweepSection parse_sweep(const json& s) {
    require_keys(s, "sweep", {"a_values", "kvco_values", "alpha", "beta", "tol"},
                 {"pd_amplitude"});
    SweepSection sec;
    sec.a_values = number_array(s, "sweep", "a_values");
    sec.kvco_values = number_array(s, "sweep", "kvco_values");
    sec.alpha = number_at(s, "sweep", "alpha");
    sec.beta = number_at(s, "sweep", "beta");
    sec.tol = number_at(s, "sweep", "tol");
    if (!(sec.tol > 0.0)) throw ConfigError("sweep.tol must be positive");
    if (s.contains("pd_amplitude")) sec.pd_amplitude = number_at(s, "sweep", "pd_amplitude");
    return sec;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    require_keys(doc, "document", {"schema"}, {"model", "simulate", "sweep"});
    RunConfig cfg;
    if (!doc.at("schema").is_number_integer() || doc.at("schema").get<int>() != 1)
        throw ConfigError("unsupported schema version (expected 1)");
    if (doc.contains("model")) cfg.model = parse_model(doc.at("model"));
    if (doc.contains("simulate")) {
        if (!cfg.model) throw ConfigError("simulate section requires a model section");
        cfg.simulate = parse_simulate(doc.at("simulate"), cfg.model->filter.dim());
    }
    if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc.at("sweep"));
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return parse_config(doc);
}

}  // namespace phaselock

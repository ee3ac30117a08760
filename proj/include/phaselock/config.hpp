#pragma once

#include "phaselock/integrate.hpp"
#include "phaselock/model.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace phaselock {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

struct SimulateSection {
    double t_end = 0.0;
    std::vector<LoopState> initial;
    IntegratorConfig integrator{};
};

struct SweepSection {
    std::vector<double> a_values;
    std::vector<double> kvco_values;
    double alpha = 0.0;
    double beta = 0.0;
    double pd_amplitude = 1.0;
    double tol = 0.0;
};

/// Parsed configuration document, schema version 1. Sections are optional;
/// subcommands demand the ones they need. Unknown fields are rejected at
/// every level.
struct RunConfig {
    int schema = 1;
    std::optional<PhaseModel> model;
    std::optional<SimulateSection> simulate;
    std::optional<SweepSection> sweep;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

}  // namespace phaselock

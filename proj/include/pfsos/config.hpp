#pragma once

#include "pfsos/harness.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pfsos {

enum class RunMode { Experiment, FwerSweep, PowerSweep, Plan };

const char* to_string(RunMode m);

struct PlanConfig {
    Procedure procedure = Procedure::ExLast;
    double target_power = 0.8;
    Endpoint endpoint = Endpoint::Os;
    PlanOptions options;
};

struct ExecutionConfig {
    std::size_t n_reps = 10000;
    std::uint64_t seed = 1;
    unsigned workers = 0;  ///< 0: default_workers()
    std::string out;       ///< empty: standard output
};

struct RunConfig {
    RunMode mode = RunMode::Experiment;
    std::optional<int> model;
    Scenario scenario;
    std::vector<std::size_t> n_grid;
    std::vector<double> w_grid;
    double alpha = 0.025;
    double rho_pfs = 0.2;
    std::vector<Procedure> procedures;
    PlanConfig plan;
    ExecutionConfig execution;

    /// Throws ConfigError.
    void validate() const;
    std::vector<DesignSpec> designs() const;
};

/// Parses the JSON text of a run configuration. Unknown keys, wrong types
/// and invalid values raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace pfsos

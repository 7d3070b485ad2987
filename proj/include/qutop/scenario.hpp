#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qutop/chaos.hpp"

namespace qutop {

inline constexpr const char* kVersion = "1.0.0";

/// One run = one scenario (a paper figure or "custom") plus parameter
/// overrides. Serialized as a single JSON document; every emitted number is
/// traceable to it.
struct ScenarioConfig {
    std::string scenario = "custom";
    double j = 1.0;
    double k_re = 3.0;
    double k_im = 0.0;
    std::optional<double> k_prime; // perturbed kick strength for fidelity pairs
    double epsilon = 0.05;
    CoherentParam gamma1{-3.0, 0.0};
    CoherentParam gamma2{3.0, 0.0};
    std::vector<double> p_values{0.0, 0.5};
    long n_steps = 1000;
    std::string sweep_axis;         // "", "k_re" or "epsilon"
    std::vector<double> sweep_grid; // values taken by the sweep axis
    ConvergenceSettings convergence;
    std::string out_dir = "qutop-out";
    int jobs = 1;
};

const std::vector<std::string>& scenario_ids();

/// Preset configuration for a scenario id. Throws ConfigError for unknown ids.
ScenarioConfig scenario_defaults(const std::string& id);

/// Strict parse: unknown keys are ConfigErrors.
ScenarioConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

/// Deep-merge overlay onto base (objects recurse, scalars/arrays replace).
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

/// Apply one `--set path=value` override; value is parsed as JSON with a
/// string fallback, path segments are separated by '.'.
void apply_set_override(nlohmann::json& doc, const std::string& assignment);

struct RunRecord {
    nlohmann::json document;
};

/// Runs the scenario, writes series CSVs + summary.csv + run.json under
/// cfg.out_dir (atomically, via temp + rename), and returns the record.
RunRecord run_scenario(const ScenarioConfig& cfg);

/// F(t) = fidelity(rho_k(t), rho_k'(t)) for t = 0..n_steps from a shared
/// initial state; requires k_prime and Hermitian dynamics (k_im = 0).
std::vector<double> run_fidelity_pair(const ScenarioConfig& cfg, double p);

} // namespace qutop

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmtt/flowmap.hpp"
#include "fmtt/mixture.hpp"
#include "fmtt/rewards.hpp"
#include "fmtt/smc.hpp"

namespace fmtt {

using json = nlohmann::json;

struct RewardSpec {
    std::string kind = "zero";   // zero | linear | quadratic | log_responsibility
    Vec lambda;                  // linear
    double gamma = 0.0;          // quadratic
    std::size_t component = 0;   // log_responsibility
    double scale = 1.0;          // log_responsibility
    double offset = 0.0;
    LookAheadConfig look_ahead;
};

struct DiagnosticsSpec {
    bool enabled = true;
    bool multi_run = false;
    bool paper_literal = false;
    int refine_rounds = 3;
};

struct OutputSpec {
    std::string directory = "fmtt_out";
    bool csv = true;
    bool json = true;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    GaussianMixture base;
    GaussianMixture target;
    InterpolantSchedule schedule;
    RunConfig run;                 // run.times is the resolved schedule
    int repeats = 1;
    RewardSpec reward;
    FlowMapOptions flowmap;
    DiagnosticsSpec diagnostics;
    OutputSpec output;
    std::size_t oracle_samples = 200000;
};

/// Mixture schema: {"weights": [...], "means": [[...]], "covariances": [[[...]]]}.
GaussianMixture mixture_from_json(const json& j, const std::string& path = "mixture");
json mixture_to_json(const GaussianMixture& m);

/// Parses and validates an experiment. Unknown keys, wrong types and values
/// that break a module invariant raise ConfigError naming the offending key.
/// Relative `times_file` paths resolve against `base_dir`.
ExperimentConfig parse_config(const json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& file);

/// Fully resolved snapshot; parse_config(to_json(c)) reproduces c.
json to_json(const ExperimentConfig& cfg);

/// Command-line overrides shared by every subcommand.
void apply_paper_literal(ExperimentConfig& cfg);

struct Problem {
    std::shared_ptr<const GaussianMixture> target;
    std::shared_ptr<const FlowMapEvaluator> flow;
    std::shared_ptr<const TimeDependentReward> reward;
};

Reward make_reward(const RewardSpec& spec, int dim, std::shared_ptr<const GaussianMixture> target);
/// Builds the path, flow map and look-ahead reward, then runs the run-config
/// validation. Failures surface as ConfigError.
Problem build_problem(const ExperimentConfig& cfg);

/// `{"times": [...]}`.
std::vector<double> read_schedule(const std::string& file);

}  // namespace fmtt

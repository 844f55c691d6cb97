#pragma once

#include <string>
#include <vector>

#include "fmtt/config.hpp"
#include "fmtt/diagnostics.hpp"
#include "fmtt/smc.hpp"

namespace fmtt {

/// Seed of repeat j in round r.
std::uint64_t repeat_seed(std::uint64_t seed, int round, int repeat);

/// cfg.repeats independent runs under the seed family of `round`.
std::vector<RunResult> run_repeats(const ExperimentConfig& cfg, const Problem& problem, int round = 0);

/// Pooled estimator when multi_run is set, otherwise the per-step mean of the
/// single-run estimates.
DiscrepancyTrace combined_trace(const std::vector<RunResult>& results, const DiagnosticsSpec& spec);

/// Each command writes its files into `out_dir` (created if needed), always
/// including config_resolved.json and summary.json, and returns the summary.
json cmd_sample(const ExperimentConfig& cfg, const std::string& out_dir);
json cmd_search(const ExperimentConfig& cfg, const std::string& out_dir);
json cmd_diagnose(const ExperimentConfig& cfg, const std::string& out_dir);
json cmd_refine(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace fmtt

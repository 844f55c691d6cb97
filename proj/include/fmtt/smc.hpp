#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fmtt/rewards.hpp"
#include "fmtt/rng.hpp"
#include "fmtt/tilt.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

enum class RunMode { sampling, searching };
enum class ResampleTrigger { ess, periodic, none };
enum class Resampler { systematic, multinomial };

std::string to_string(RunMode mode);
std::string to_string(ResampleTrigger trigger);
std::string to_string(Resampler resampler);
RunMode parse_run_mode(const std::string& name);
ResampleTrigger parse_resample_trigger(const std::string& name);
Resampler parse_resampler(const std::string& name);

struct RunConfig {
    int particles = 128;                 // N
    int clones = 1;                      // C
    std::vector<double> times;           // 0 = t_0 < ... < t_K = 1
    RunMode mode = RunMode::sampling;
    ResampleTrigger trigger = ResampleTrigger::ess;
    double ess_threshold = 0.85;         // fraction of N * C
    int every = 0;                       // periodic trigger: selection at multiples of `every`
    Resampler resampler = Resampler::systematic;
    DriftChoice chi = DriftChoice::default_;
    WeightScheme weights = WeightScheme::simplified;
    WeightOptions weight_options;
    std::uint64_t seed = 0;
    int threads = 0;                     // 0: FMTT_THREADS or hardware concurrency
};

/// t_k = k / K.
std::vector<double> uniform_times(int steps);

/// Throws std::invalid_argument or SchemeError on inconsistent settings.
void validate(const RunConfig& cfg, const TimeDependentReward& rt);

struct ParticleEnsemble {
    std::vector<Vec> positions;          // N * C states, flat index i * C + j
    std::vector<double> logweights;      // A
    int clones = 1;
    int generation = 0;                  // step index k
};

struct TraceRow {
    int step;
    double t;
    double ess;
    bool resampled;
    double log_z;        // log Zhat^{(k)}; NaN in searching mode
    double mean_reward;  // self-normalized mean of r_{t_k}
};

struct ResampleEvent {
    int step;
    double log_mean_weight;   // log((1/N) sum_n w_n) before the reset
    std::vector<std::size_t> ancestors;
};

struct RunResult {
    RunMode mode = RunMode::sampling;
    std::vector<double> times;
    ParticleEnsemble ensemble;                       // terminal
    std::vector<TraceRow> trace;                     // K + 1 rows, step 0..K
    std::vector<ResampleEvent> events;
    std::vector<std::vector<double>> prev_logweights; // [k - 1]: A_{k-1} entering step k
    std::vector<std::vector<double>> log_increments;  // [k - 1]: A_k - A_{k-1}
    std::vector<double> terminal_rewards;             // r(x) per terminal particle
    double log_z = 0.0;                               // NaN in searching mode
};

/// Algorithm 1: initialize from the base, clone, propagate with the tilted
/// SDE, update log-weights, and resample (sampling) or select the top N by
/// r_{t_k} (searching) at trigger points before the final step.
RunResult run(const RunConfig& cfg, const TimeDependentReward& rt);

/// (sum w)^2 / sum w^2 computed after subtracting max A.
double ess(const std::vector<double>& logweights);

/// Ancestor indices with probabilities softmax(A). Systematic output is sorted.
std::vector<std::size_t> resample_indices(const std::vector<double>& logweights, std::size_t n, Resampler scheme,
                                          SplitMix64& rng);

/// Draws N = size / C ancestors by softmax(A), reclones each C times and
/// resets A to 0.
ParticleEnsemble resample(const ParticleEnsemble& ens, SplitMix64& rng, Resampler scheme,
                          std::vector<std::size_t>* ancestors = nullptr);

/// Indices of the n largest scores, ties to the lower index, returned in
/// ascending index order.
std::vector<std::size_t> top_n_indices(const std::vector<double>& scores, std::size_t n);

/// Keeps the n best particles by score and reclones each C times.
ParticleEnsemble top_n_select(const ParticleEnsemble& ens, const std::vector<double>& scores, std::size_t n);

/// log Zhat: sum of event log-means plus log mean exp(A) of the current weights.
double log_z_smc(const std::vector<double>& event_log_means, const std::vector<double>& logweights);
/// log Zhat^{(k)} of a finished run (NaN in searching mode).
double log_z_smc(const RunResult& result, int step);
double z_smc(const RunResult& result, int step);

/// Self-normalized sum_n w_n h(x_n) / sum_n w_n.
double weighted_expectation(const ParticleEnsemble& ens, const std::function<double(const Vec&)>& h);
double weighted_mean(const std::vector<double>& logweights, const std::vector<double>& values);

}  // namespace fmtt

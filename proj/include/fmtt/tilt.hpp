#pragma once

#include <string>

#include "fmtt/rewards.hpp"
#include "fmtt/rng.hpp"
#include "fmtt/schedule.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

/// chi_t in the position SDE: 0, eta_t, epsilon_t or -epsilon_t.
enum class DriftChoice { default_, tilted_score, local_tilt, base };

std::string to_string(DriftChoice choice);
DriftChoice parse_drift_choice(const std::string& name);

double chi(DriftChoice choice, const InterpolantSchedule& sched, double t);

enum class WeightScheme { simplified, laplacian, ito, expectation };

std::string to_string(WeightScheme scheme);
WeightScheme parse_weight_scheme(const std::string& name);

struct WeightOptions {
    int inner_samples = 400;         // expectation scheme
    HutchinsonOptions hutchinson;    // laplacian scheme
    double time_step = 1e-4;         // finite difference for d_t r_t
    bool paper_literal = false;      // expectation scheme as printed
};

struct StepInput {
    Vec x;
    double A = 0.0;
    double t = 0.0;
    double t_next = 0.0;
    Vec noise;   // standard Gaussian, shared by the position and weight updates
};

/// Everything the step needs at (t, x).
struct PointState {
    Vec velocity;
    Vec score;
    RewardEval reward;
};

PointState evaluate_point(const TimeDependentReward& rt, double t, const Vec& x, bool need_score = true);

/// Euler-Maruyama step of the tilted SDE:
///   x' = x + dt [b + chi grad r_t + eps (s + grad r_t)] + sqrt(2 eps dt) noise.
/// The drift is formed as b + eps s + (chi + eps) grad r_t so that chi = -eps
/// reproduces the reward-free step bit for bit.
Vec position_step(const StepInput& in, double chi_t, double eps_t, const PointState& at);
Vec position_step(const StepInput& in, DriftChoice choice, const TimeDependentReward& rt);

/// A' = A + dt r(X_{t,1}(x)).
double weight_step_simplified(const StepInput& in, const PointState& at);
double weight_step_simplified(const StepInput& in, const TimeDependentReward& rt);

/// A' = A + dt [D + chi (|grad r_t|^2 + Lap r_t + grad r_t . s_t)], with the
/// Laplacian estimated by Hutchinson probes; D = r(X_{t,1}(x)) for flow-map
/// look-aheads and b . grad r_t + d_t r_t otherwise.
double weight_step_laplacian(const StepInput& in, double chi_t, const TimeDependentReward& rt,
                             const PointState& at, const WeightOptions& opt, SplitMix64& rng);
double weight_step_laplacian(const StepInput& in, DriftChoice choice, const TimeDependentReward& rt,
                             const WeightOptions& opt, SplitMix64& rng);

/// Drift part as in the Laplacian scheme without the Laplacian, plus
/// chi' sqrt(dt / (2 eps')) grad r_{t'}(x') . noise - chi sqrt(dt / (2 eps)) grad r_t(x) . noise,
/// where x' is the post-step state.
double weight_step_ito(const StepInput& in, double chi_t, double eps_t, double chi_next, double eps_next,
                       const TimeDependentReward& rt, const PointState& at, const Vec& grad_next);
double weight_step_ito(const StepInput& in, const Vec& x_next, DriftChoice choice, const TimeDependentReward& rt);

/// Inner-sample estimate of the exp(r) expectation. For chi >= 0:
///   A' = A + log mean_m exp(r_{t'}(y_m) - r_t(x)),
///   y_m = x + dt (b + |chi| s) + sqrt(2 |chi| dt) xi_m;
/// for chi < 0: A' = A + 2 [r_{t'}(x + dt b) - r_t(x)] - log mean_m(...);
/// for chi = 0: A' = A + r_{t'}(x + dt b) - r_t(x).
double weight_step_expectation(const StepInput& in, double chi_t, double eps_t, const TimeDependentReward& rt,
                               const PointState& at, const WeightOptions& opt, SplitMix64& rng);
double weight_step_expectation(const StepInput& in, DriftChoice choice, const TimeDependentReward& rt,
                               const WeightOptions& opt, SplitMix64& rng);

/// Rejects combinations that cannot be evaluated.
void validate_scheme(DriftChoice choice, WeightScheme scheme, const TimeDependentReward& rt);

}  // namespace fmtt

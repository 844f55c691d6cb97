#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "fmtt/flowmap.hpp"
#include "fmtt/interpolant.hpp"
#include "fmtt/mixture.hpp"
#include "fmtt/rng.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

enum class RewardKind { linear, quadratic, log_responsibility, custom };

std::string to_string(RewardKind kind);
RewardKind parse_reward_kind(const std::string& name);

/// Terminal reward r(x).
///   linear:             lambda . x
///   quadratic:          -gamma |x|^2 / 2
///   log_responsibility: rho log p(c | x) under a mixture
///   custom:             user-supplied value and gradient
/// Every kind adds `offset` to the value.
class Reward {
public:
    using Field = std::function<double(const Vec&)>;
    using GradField = std::function<Vec(const Vec&)>;

    Reward() : zero_(true), lambda_(Vec::Zero(1)) {}

    static Reward zero(int dim);
    static Reward linear(const Vec& lambda);
    static Reward quadratic(double gamma, int dim);
    static Reward log_responsibility(std::shared_ptr<const GaussianMixture> mixture, std::size_t component,
                                     double scale);
    static Reward custom(int dim, Field value, GradField gradient);

    Reward with_offset(double offset) const;

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;

    RewardKind kind() const { return kind_; }
    int dim() const { return dim_; }
    bool is_zero() const { return zero_; }
    const Vec& lambda() const { return lambda_; }
    double gamma() const { return gamma_; }
    double scale() const { return scale_; }
    std::size_t component() const { return component_; }
    double offset() const { return offset_; }
    const GaussianMixture* mixture() const { return mixture_.get(); }

private:
    RewardKind kind_ = RewardKind::linear;
    int dim_ = 1;
    bool zero_ = false;
    Vec lambda_;
    double gamma_ = 0.0;
    double scale_ = 0.0;
    std::size_t component_ = 0;
    double offset_ = 0.0;
    std::shared_ptr<const GaussianMixture> mixture_;
    Field custom_value_;
    GradField custom_gradient_;
};

enum class LookAhead { naive, denoiser, flowmap_exact, flowmap_ksteps };

std::string to_string(LookAhead mode);
LookAhead parse_look_ahead(const std::string& name);

struct LookAheadConfig {
    LookAhead mode = LookAhead::flowmap_exact;
    int k = 4;                               // flowmap_ksteps only
    StepScheme scheme = StepScheme::heun;    // flowmap_ksteps only
};

enum class ProbeDist { gaussian, rademacher };

std::string to_string(ProbeDist dist);
ProbeDist parse_probe_dist(const std::string& name);

struct HutchinsonOptions {
    int probes = 64;
    double eps = 1e-3;
    ProbeDist dist = ProbeDist::gaussian;
};

struct RewardEval {
    double value;      // r_t(x)
    Vec gradient;      // grad r_t(x)
    double terminal;   // r(look-ahead endpoint), i.e. r_t(x) / t for t > 0
};

struct Estimate {
    double value;
    double std_error;
};

/// r_t(x) = t r(P_t(x)) where the look-ahead P_t is the identity (naive), the
/// denoiser D_t, the exact flow map X_{t,1}, or its k-step approximation.
class TimeDependentReward {
public:
    TimeDependentReward(Reward reward, LookAheadConfig look_ahead, std::shared_ptr<const FlowMapEvaluator> flow);

    const Reward& reward() const { return reward_; }
    const LookAheadConfig& look_ahead() const { return look_ahead_; }
    const FlowMapEvaluator& flow() const { return *flow_; }
    const MixturePath& path() const { return flow_->path(); }
    bool flow_map_mode() const {
        return look_ahead_.mode == LookAhead::flowmap_exact || look_ahead_.mode == LookAhead::flowmap_ksteps;
    }

    /// P_t(x).
    Vec predict(double t, const Vec& x) const;
    double value(double t, const Vec& x) const;
    Vec gradient(double t, const Vec& x) const;
    /// Value, gradient and terminal reward from a single look-ahead solve.
    RewardEval evaluate(double t, const Vec& x) const;

    /// Central difference in t; second-order one-sided when t +- h leaves [0, 1].
    double time_derivative(double t, const Vec& x, double h = 1e-4) const;

    /// (1 / (2 M eps)) sum_m z_m . [grad r_t(x + eps z_m) - grad r_t(x - eps z_m)],
    /// with the standard error taken over the M probe terms.
    Estimate hutchinson_laplacian(double t, const Vec& x, const HutchinsonOptions& opt, SplitMix64& rng) const;

private:
    Reward reward_;
    LookAheadConfig look_ahead_;
    std::shared_ptr<const FlowMapEvaluator> flow_;
};

}  // namespace fmtt

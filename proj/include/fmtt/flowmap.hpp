#pragma once

#include <cstddef>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "fmtt/interpolant.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

struct FlowMapOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    int max_steps = 100000;
};

struct JacobianResult {
    Vec endpoint;   // X_{s,t}(x)
    Mat jacobian;   // grad X_{s,t}(x)
};

enum class StepScheme { euler, heun };

std::string to_string(StepScheme scheme);
StepScheme parse_step_scheme(const std::string& name);

/// Two-time flow map of the probability-flow ODE dx/dt = b_t(x), evaluated by
/// adaptive Dormand-Prince 5(4) integration with PI step control. Either time
/// ordering is accepted; s == t returns x untouched.
class FlowMapEvaluator {
public:
    FlowMapEvaluator() = default;
    explicit FlowMapEvaluator(MixturePath path, FlowMapOptions options = {});

    const MixturePath& path() const { return path_; }
    const FlowMapOptions& options() const { return options_; }

    /// Throws ToleranceError (carrying the time reached) when max_steps is hit.
    Vec flow_map(double s, double t, const Vec& x) const;

    /// Endpoint and Jacobian from the forward sensitivity system
    /// dJ/dt = grad b_t(x_t) J, J(s) = I.
    JacobianResult flow_map_jacobian(double s, double t, const Vec& x) const;

    /// k fixed steps of Euler or Heun: the few-step flow map.
    Vec k_step_map(double s, double t, const Vec& x, int k, StepScheme scheme) const;
    /// Exact Jacobian of the discrete k-step map.
    JacobianResult k_step_map_jacobian(double s, double t, const Vec& x, int k, StepScheme scheme) const;

private:
    MixturePath path_;
    FlowMapOptions options_;
};

/// Affine flow map of a single-Gaussian base/target pair:
///   X_{s,t}(x) = mu(t) + Sigma(t)^{1/2} Sigma(s)^{-1/2} (x - mu(s)).
/// Exact when the base and target covariances commute (diagonal or isotropic
/// pairs); other inputs are rejected.
Vec gaussian_pair_closed_form(const MixturePath& path, double s, double t, const Vec& x);
/// Jacobian of the affine map above.
Mat gaussian_pair_closed_form_jacobian(const MixturePath& path, double s, double t);

/// Memoizing front for repeated (s, t, x) queries. Lookups take a shared lock,
/// inserts an exclusive one.
class CachedFlowMap {
public:
    explicit CachedFlowMap(FlowMapEvaluator evaluator) : evaluator_(std::move(evaluator)) {}

    const FlowMapEvaluator& evaluator() const { return evaluator_; }

    Vec flow_map(double s, double t, const Vec& x) const;
    JacobianResult flow_map_jacobian(double s, double t, const Vec& x) const;

    std::size_t size() const;
    std::size_t hits() const;
    void clear();

private:
    struct Key {
        double s;
        double t;
        Vec x;
        bool jacobian;
        bool operator==(const Key& other) const;
    };
    struct KeyHash {
        std::size_t operator()(const Key& key) const;
    };

    FlowMapEvaluator evaluator_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<Key, JacobianResult, KeyHash> cache_;
    mutable std::size_t hits_ = 0;
};

}  // namespace fmtt

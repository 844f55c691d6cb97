#include "fmtt/rewards.hpp"

#include <cmath>
#include <stdexcept>

#include "fmtt/errors.hpp"

namespace fmtt {

std::string to_string(RewardKind kind) {
    switch (kind) {
        case RewardKind::linear: return "linear";
        case RewardKind::quadratic: return "quadratic";
        case RewardKind::log_responsibility: return "log_responsibility";
        case RewardKind::custom: return "custom";
    }
    return "?";
}

RewardKind parse_reward_kind(const std::string& name) {
    if (name == "linear") return RewardKind::linear;
    if (name == "quadratic") return RewardKind::quadratic;
    if (name == "log_responsibility") return RewardKind::log_responsibility;
    if (name == "custom") return RewardKind::custom;
    throw std::invalid_argument("unknown reward kind '" + name + "'");
}

std::string to_string(LookAhead mode) {
    switch (mode) {
        case LookAhead::naive: return "naive";
        case LookAhead::denoiser: return "denoiser";
        case LookAhead::flowmap_exact: return "flowmap_exact";
        case LookAhead::flowmap_ksteps: return "flowmap_ksteps";
    }
    return "?";
}

LookAhead parse_look_ahead(const std::string& name) {
    if (name == "naive") return LookAhead::naive;
    if (name == "denoiser") return LookAhead::denoiser;
    if (name == "flowmap_exact" || name == "flowmap") return LookAhead::flowmap_exact;
    if (name == "flowmap_ksteps") return LookAhead::flowmap_ksteps;
    throw std::invalid_argument("unknown look-ahead mode '" + name + "'");
}

std::string to_string(ProbeDist dist) { return dist == ProbeDist::gaussian ? "gaussian" : "rademacher"; }

ProbeDist parse_probe_dist(const std::string& name) {
    if (name == "gaussian") return ProbeDist::gaussian;
    if (name == "rademacher") return ProbeDist::rademacher;
    throw std::invalid_argument("unknown probe distribution '" + name + "'");
}

Reward Reward::zero(int dim) {
    Reward r = linear(Vec::Zero(dim));
    r.zero_ = true;
    return r;
}

Reward Reward::linear(const Vec& lambda) {
    if (lambda.size() < 1 || lambda.size() > kMaxDim) throw std::invalid_argument("bad reward dimension");
    if (!lambda.allFinite()) throw std::invalid_argument("linear reward coefficients must be finite");
    Reward r;
    r.kind_ = RewardKind::linear;
    r.dim_ = static_cast<int>(lambda.size());
    r.lambda_ = lambda;
    r.zero_ = lambda.isZero(0.0);
    return r;
}

Reward Reward::quadratic(double gamma, int dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("bad reward dimension");
    if (!std::isfinite(gamma)) throw std::invalid_argument("quadratic reward gamma must be finite");
    Reward r = linear(Vec::Zero(dim));
    r.kind_ = RewardKind::quadratic;
    r.gamma_ = gamma;
    r.zero_ = gamma == 0.0;
    return r;
}

Reward Reward::log_responsibility(std::shared_ptr<const GaussianMixture> mixture, std::size_t component,
                                  double scale) {
    if (!mixture) throw std::invalid_argument("log_responsibility reward needs a mixture");
    if (component >= mixture->size()) throw std::invalid_argument("reward component index out of range");
    if (!std::isfinite(scale)) throw std::invalid_argument("reward scale must be finite");
    Reward r = linear(Vec::Zero(mixture->dim()));
    r.kind_ = RewardKind::log_responsibility;
    r.mixture_ = std::move(mixture);
    r.component_ = component;
    r.scale_ = scale;
    r.zero_ = scale == 0.0;
    return r;
}

Reward Reward::custom(int dim, Field value, GradField gradient) {
    if (!value || !gradient) throw std::invalid_argument("custom reward needs value and gradient");
    Reward r = linear(Vec::Zero(dim));
    r.kind_ = RewardKind::custom;
    r.zero_ = false;
    r.custom_value_ = std::move(value);
    r.custom_gradient_ = std::move(gradient);
    return r;
}

Reward Reward::with_offset(double offset) const {
    Reward r = *this;
    r.offset_ = offset;
    if (offset != 0.0) r.zero_ = false;
    return r;
}

double Reward::value(const Vec& x) const {
    switch (kind_) {
        case RewardKind::linear: return lambda_.dot(x) + offset_;
        case RewardKind::quadratic: return -0.5 * gamma_ * x.squaredNorm() + offset_;
        case RewardKind::log_responsibility:
            return scale_ * mixture_->log_responsibility(x, component_) + offset_;
        case RewardKind::custom: return custom_value_(x) + offset_;
    }
    return 0.0;
}

Vec Reward::gradient(const Vec& x) const {
    switch (kind_) {
        case RewardKind::linear: return lambda_;
        case RewardKind::quadratic: return -gamma_ * x;
        case RewardKind::log_responsibility: {
            // grad log p(c|x) = grad log N_c(x) - grad log p(x)
            const Vec own = -mixture_->cholesky(component_).solve(Vec(x - mixture_->means()[component_]));
            return scale_ * (own - mixture_->score(x));
        }
        case RewardKind::custom: return custom_gradient_(x);
    }
    return Vec::Zero(dim_);
}

TimeDependentReward::TimeDependentReward(Reward reward, LookAheadConfig look_ahead,
                                         std::shared_ptr<const FlowMapEvaluator> flow)
    : reward_(std::move(reward)), look_ahead_(look_ahead), flow_(std::move(flow)) {
    if (!flow_) throw std::invalid_argument("time-dependent reward needs a flow-map evaluator");
    if (reward_.dim() != flow_->path().dim()) throw std::invalid_argument("reward and path dimensions differ");
    if (look_ahead_.mode == LookAhead::flowmap_ksteps && look_ahead_.k < 1) {
        throw std::invalid_argument("flowmap_ksteps needs k >= 1");
    }
}

Vec TimeDependentReward::predict(double t, const Vec& x) const {
    switch (look_ahead_.mode) {
        case LookAhead::naive:
            if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time must lie in [0, 1]");
            return x;
        case LookAhead::denoiser: return path().denoiser(t, x);
        case LookAhead::flowmap_exact: return flow_->flow_map(t, 1.0, x);
        case LookAhead::flowmap_ksteps: return flow_->k_step_map(t, 1.0, x, look_ahead_.k, look_ahead_.scheme);
    }
    return x;
}

double TimeDependentReward::value(double t, const Vec& x) const {
    if (t == 0.0) {
        if (!x.allFinite()) throw std::invalid_argument("state must be finite");
        return 0.0;
    }
    return t * reward_.value(predict(t, x));
}

Vec TimeDependentReward::gradient(double t, const Vec& x) const { return evaluate(t, x).gradient; }

RewardEval TimeDependentReward::evaluate(double t, const Vec& x) const {
    const int d = x.size();
    Vec end;
    Mat jac;
    switch (look_ahead_.mode) {
        case LookAhead::naive:
            if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time must lie in [0, 1]");
            end = x;
            jac = Mat::Identity(d, d);
            break;
        case LookAhead::denoiser: end = path().denoiser_jacobian(t, x, jac); break;
        case LookAhead::flowmap_exact: {
            auto jr = flow_->flow_map_jacobian(t, 1.0, x);
            end = jr.endpoint;
            jac = jr.jacobian;
            break;
        }
        case LookAhead::flowmap_ksteps: {
            auto jr = flow_->k_step_map_jacobian(t, 1.0, x, look_ahead_.k, look_ahead_.scheme);
            end = jr.endpoint;
            jac = jr.jacobian;
            break;
        }
    }
    const double terminal = reward_.value(end);
    const Vec g = reward_.gradient(end);
    return {t == 0.0 ? 0.0 : t * terminal, t * (jac.transpose() * g), terminal};
}

double TimeDependentReward::time_derivative(double t, const Vec& x, double h) const {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time must lie in [0, 1]");
    const double lo = t - h, hi = t + h;
    if (lo >= 0.0 && hi <= 1.0) return (value(hi, x) - value(lo, x)) / (2 * h);
    // Second-order one-sided stencils at the ends of [0, 1].
    if (lo < 0.0) return (-3.0 * value(t, x) + 4.0 * value(t + h, x) - value(t + 2 * h, x)) / (2 * h);
    return (3.0 * value(t, x) - 4.0 * value(t - h, x) + value(t - 2 * h, x)) / (2 * h);
}

Estimate TimeDependentReward::hutchinson_laplacian(double t, const Vec& x, const HutchinsonOptions& opt,
                                                   SplitMix64& rng) const {
    if (opt.probes < 1) throw std::invalid_argument("Hutchinson estimator needs at least one probe");
    if (!(opt.eps > 0.0)) throw std::invalid_argument("Hutchinson probe radius must be positive");
    const int d = x.size();
    double sum = 0.0, sum_sq = 0.0;
    std::bernoulli_distribution coin(0.5);
    for (int m = 0; m < opt.probes; ++m) {
        Vec z(d);
        if (opt.dist == ProbeDist::gaussian) {
            z = standard_normal(rng, d);
        } else {
            for (int i = 0; i < d; ++i) z[i] = coin(rng) ? 1.0 : -1.0;
        }
        const double term =
            z.dot(gradient(t, Vec(x + opt.eps * z)) - gradient(t, Vec(x - opt.eps * z))) / (2 * opt.eps);
        sum += term;
        sum_sq += term * term;
    }
    const double mean = sum / opt.probes;
    double se = 0.0;
    if (opt.probes > 1) {
        const double var = std::max(0.0, (sum_sq - opt.probes * mean * mean) / (opt.probes - 1));
        se = std::sqrt(var / opt.probes);
    }
    return {mean, se};
}

}  // namespace fmtt

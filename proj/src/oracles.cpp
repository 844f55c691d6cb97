#include "fmtt/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fmtt {

Estimate snis_tilted_expectation(const GaussianMixture& target, const Reward& reward,
                                 const std::function<double(const Vec&)>& h, std::size_t samples, SplitMix64& rng) {
    if (samples < 100) throw std::invalid_argument("SNIS oracle needs at least 100 samples");
    const auto xs = target.sample(samples, rng);
    std::vector<double> logw(samples), hv(samples);
    double mx = -INFINITY;
    for (std::size_t i = 0; i < samples; ++i) {
        logw[i] = reward.value(xs[i]);
        if (!std::isfinite(logw[i])) throw std::invalid_argument("reward must be finite on every sample");
        hv[i] = h(xs[i]);
        mx = std::max(mx, logw[i]);
    }
    double sw = 0.0, swh = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double w = std::exp(logw[i] - mx);
        sw += w;
        swh += w * hv[i];
    }
    const double est = swh / sw;
    double var = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double p = std::exp(logw[i] - mx) / sw;
        var += p * p * (hv[i] - est) * (hv[i] - est);
    }
    return {est, std::sqrt(var)};
}

GaussianTilt gaussian_tilt_linear(double mean, double variance, double lambda) {
    if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
    return {mean + lambda * variance, variance, -lambda * mean - 0.5 * lambda * lambda * variance};
}

GaussianTilt gaussian_tilt_quadratic(double mean, double variance, double gamma) {
    if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
    const double q = 1.0 + gamma * variance;
    if (!(q > 0.0)) throw std::invalid_argument("tilt is not normalizable (1 + gamma variance <= 0)");
    return {mean / q, variance / q, 0.5 * std::log(q) + 0.5 * gamma * mean * mean / q};
}

GaussianTilt gaussian_tilt_closed_form(double mean, double variance, const Reward& reward) {
    if (reward.dim() != 1) throw std::invalid_argument("closed-form tilt is one-dimensional");
    GaussianTilt out;
    switch (reward.kind()) {
        case RewardKind::linear: out = gaussian_tilt_linear(mean, variance, reward.lambda()[0]); break;
        case RewardKind::quadratic: out = gaussian_tilt_quadratic(mean, variance, reward.gamma()); break;
        default: throw std::invalid_argument("closed-form tilt needs a linear or quadratic reward");
    }
    out.f_hat -= reward.offset();
    return out;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec p = x, m = x;
        p[i] += h;
        m[i] -= h;
        g[i] = (f(p) - f(m)) / (2.0 * h);
    }
    return g;
}

}  // namespace fmtt

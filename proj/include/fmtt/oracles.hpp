#pragma once

#include <cstddef>
#include <functional>

#include "fmtt/mixture.hpp"
#include "fmtt/rewards.hpp"
#include "fmtt/rng.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

/// Self-normalized importance sampling of E_{tilted}[h] with proposal rho_1
/// and weights exp(r(x)); standard error by the delta method.
Estimate snis_tilted_expectation(const GaussianMixture& target, const Reward& reward,
                                 const std::function<double(const Vec&)>& h, std::size_t samples, SplitMix64& rng);

struct GaussianTilt {
    double mean;
    double variance;
    double f_hat;   // -log E[exp(r)]
};

/// Tilt of N(mean, variance) by r = lambda x.
GaussianTilt gaussian_tilt_linear(double mean, double variance, double lambda);
/// Tilt of N(mean, variance) by r = -gamma x^2 / 2; needs 1 + gamma variance > 0.
GaussianTilt gaussian_tilt_quadratic(double mean, double variance, double gamma);
/// Dispatches on a one-dimensional linear or quadratic reward.
GaussianTilt gaussian_tilt_closed_form(double mean, double variance, const Reward& reward);

/// Central differences per coordinate.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h);

}  // namespace fmtt

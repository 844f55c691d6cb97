#pragma once

#include <vector>

#include "fmtt/mixture.hpp"
#include "fmtt/schedule.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

/// One Gaussian of the path density rho_t under the independent coupling.
struct PathComponent {
    double weight;
    Vec mean;
    Mat covariance;
};

/// Conditional-expectation dynamics of the interpolant at (t, x).
struct DynamicsAt {
    Vec velocity;     // b_t(x)
    Vec score;        // s_t(x) = grad log rho_t(x)
    Vec denoiser;     // D_t(x) = E[x1 | I_t = x]
    double log_density;
};

/// The law of I_t = alpha_t x0 + beta_t x1 with x0 ~ base, x1 ~ target drawn
/// independently. Every quantity is closed form: rho_t is the mixture over
/// component pairs (i, j) with weight w_i u_j, mean alpha_t m_i + beta_t n_j and
/// covariance alpha_t^2 C_i + beta_t^2 S_j.
class MixturePath {
public:
    MixturePath() = default;
    MixturePath(GaussianMixture base, GaussianMixture target, InterpolantSchedule schedule = {});

    const GaussianMixture& base() const { return base_; }
    const GaussianMixture& target() const { return target_; }
    const InterpolantSchedule& schedule() const { return schedule_; }
    int dim() const { return base_.dim(); }

    std::vector<PathComponent> components(double t) const;

    DynamicsAt dynamics(double t, const Vec& x) const;

    /// b_t(x) only; the integrator's inner loop.
    Vec velocity(double t, const Vec& x) const;
    /// b_t(x) and its spatial Jacobian (row i = grad of b_i).
    Vec velocity_jacobian(double t, const Vec& x, Mat& jacobian) const;
    /// D_t(x) and its spatial Jacobian.
    Vec denoiser_jacobian(double t, const Vec& x, Mat& jacobian) const;

    Vec score(double t, const Vec& x) const { return dynamics(t, x).score; }
    Vec denoiser(double t, const Vec& x) const;
    double log_density(double t, const Vec& x) const { return dynamics(t, x).log_density; }

private:
    struct PairTerm;
    enum Need : unsigned { kVelocity = 1, kScore = 2, kDenoiser = 4, kPrecision = 8 };

    /// Responsibilities and per-pair conditional quantities at (t, x).
    double pair_terms(double t, const Vec& x, unsigned need, std::vector<PairTerm>& out) const;

    GaussianMixture base_;
    GaussianMixture target_;
    InterpolantSchedule schedule_;
};

}  // namespace fmtt

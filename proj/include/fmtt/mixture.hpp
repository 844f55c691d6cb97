#pragma once

#include <cstddef>
#include <iterator>
#include <vector>

#include <Eigen/Cholesky>

#include "fmtt/rng.hpp"
#include "fmtt/types.hpp"

namespace fmtt {

/// Weighted sum of full-covariance Gaussians. Cholesky factors are cached at
/// construction; the object is immutable afterwards.
class GaussianMixture {
public:
    GaussianMixture() = default;

    /// Throws std::invalid_argument unless weights are positive and sum to 1
    /// (within 1e-12), shapes agree, and every covariance is symmetric
    /// positive-definite.
    GaussianMixture(std::vector<double> weights, std::vector<Vec> means, std::vector<Mat> covariances);

    static GaussianMixture standard_normal(int dim);
    static GaussianMixture single(const Vec& mean, const Mat& covariance);

    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }

    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Vec>& means() const { return means_; }
    const std::vector<Mat>& covariances() const { return covariances_; }
    const Eigen::LLT<Mat>& cholesky(std::size_t i) const { return factors_[i]; }

    double log_density(const Vec& x) const;
    Vec score(const Vec& x) const;

    /// Posterior component probabilities p(c | x).
    std::vector<double> responsibilities(const Vec& x) const;
    /// log p(c | x) for one component, computed in log space.
    double log_responsibility(const Vec& x, std::size_t component) const;

    /// n i.i.d. draws: categorical component, then mean + L z.
    std::vector<Vec> sample(std::size_t n, SplitMix64& rng) const;

private:
    /// log w_i + log N(x; m_i, C_i) for every component.
    std::vector<double> component_log_terms(const Vec& x) const;

    int dim_ = 0;
    std::vector<double> weights_;
    std::vector<Vec> means_;
    std::vector<Mat> covariances_;
    std::vector<Eigen::LLT<Mat>> factors_;
    std::vector<double> log_norms_;  // -0.5 log det(2 pi C_i)
};

/// Numerically stable log(sum(exp(v))).
double log_sum_exp(const double* values, std::size_t n);

template <class Range>
double log_sum_exp(const Range& r) {
    return log_sum_exp(std::data(r), std::size(r));
}

}  // namespace fmtt

#include "fmtt/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fmtt {

double log_sum_exp(const double* values, std::size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, values[i]);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(values[i] - mx);
    return mx + std::log(acc);
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                                 std::vector<Mat> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covariances_(std::move(covariances)) {
    if (weights_.empty()) throw std::invalid_argument("mixture needs at least one component");
    if (means_.size() != weights_.size() || covariances_.size() != weights_.size()) {
        throw std::invalid_argument("mixture weights, means and covariances differ in length");
    }
    dim_ = static_cast<int>(means_.front().size());
    if (dim_ < 1 || dim_ > kMaxDim) {
        throw std::invalid_argument("state dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("mixture weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    }
    factors_.reserve(size());
    log_norms_.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const Vec& m = means_[i];
        const Mat& c = covariances_[i];
        if (m.size() != dim_ || c.rows() != dim_ || c.cols() != dim_) {
            throw std::invalid_argument("component " + std::to_string(i) + " has inconsistent shape");
        }
        if (!m.allFinite() || !c.allFinite()) {
            throw std::invalid_argument("component " + std::to_string(i) + " has non-finite entries");
        }
        const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
            throw std::invalid_argument("covariance " + std::to_string(i) + " is not symmetric");
        }
        Eigen::LLT<Mat> llt(c);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("covariance " + std::to_string(i) + " is not positive-definite");
        }
        const Mat l = llt.matrixL();
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        factors_.push_back(llt);
        log_norms_.push_back(-0.5 * (log_det + dim_ * std::log(2.0 * std::numbers::pi)));
    }
}

GaussianMixture GaussianMixture::standard_normal(int dim) {
    return single(Vec::Zero(dim), Mat::Identity(dim, dim));
}

GaussianMixture GaussianMixture::single(const Vec& mean, const Mat& covariance) {
    return GaussianMixture({1.0}, {mean}, {covariance});
}

std::vector<double> GaussianMixture::component_log_terms(const Vec& x) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const Vec delta = x - means_[i];
        const Vec u = factors_[i].matrixL().solve(delta);
        out[i] = std::log(weights_[i]) + log_norms_[i] - 0.5 * u.squaredNorm();
    }
    return out;
}

double GaussianMixture::log_density(const Vec& x) const {
    const auto terms = component_log_terms(x);
    return log_sum_exp(terms);
}

Vec GaussianMixture::score(const Vec& x) const {
    const auto resp = responsibilities(x);
    Vec s = Vec::Zero(dim_);
    for (std::size_t i = 0; i < size(); ++i) s -= resp[i] * factors_[i].solve(x - means_[i]);
    return s;
}

std::vector<double> GaussianMixture::responsibilities(const Vec& x) const {
    auto terms = component_log_terms(x);
    const double lse = log_sum_exp(terms);
    for (double& v : terms) v = std::exp(v - lse);
    return terms;
}

double GaussianMixture::log_responsibility(const Vec& x, std::size_t component) const {
    if (component >= size()) throw std::out_of_range("mixture component index out of range");
    const auto terms = component_log_terms(x);
    return terms[component] - log_sum_exp(terms);
}

std::vector<Vec> GaussianMixture::sample(std::size_t n, SplitMix64& rng) const {
    if (n == 0) throw std::invalid_argument("sample count must be >= 1");
    std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
    std::vector<Vec> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = size() == 1 ? 0 : pick(rng);
        const Vec z = fmtt::standard_normal(rng, dim_);
        out.push_back(means_[c] + factors_[c].matrixL() * z);
    }
    return out;
}

}  // namespace fmtt

#include "fmtt/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace fmtt {

struct MixturePath::PairTerm {
    double log_term;       // log(w_i u_j N(x; mu_ij, Sigma_ij))
    double resp;           // posterior probability of the pair
    Vec solved;            // Sigma_ij^{-1} (x - mu_ij)
    Vec velocity;          // alpha_dot E[x0|x,ij] + beta_dot E[x1|x,ij]
    Vec x1_mean;           // E[x1 | x, ij]
    Mat precision;         // Sigma_ij^{-1}
    std::size_t i;
    std::size_t j;
};

namespace {

void check_state(double t, const Vec& x, int dim) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time must lie in [0, 1]");
    if (x.size() != dim) throw std::invalid_argument("state dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("state must be finite");
}

}  // namespace

MixturePath::MixturePath(GaussianMixture base, GaussianMixture target, InterpolantSchedule schedule)
    : base_(std::move(base)), target_(std::move(target)), schedule_(schedule) {
    if (base_.dim() != target_.dim()) throw std::invalid_argument("base and target dimensions differ");
}

std::vector<PathComponent> MixturePath::components(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("time must lie in [0, 1]");
    const double a = schedule_.alpha(t);
    const double b = schedule_.beta(t);
    std::vector<PathComponent> out;
    out.reserve(base_.size() * target_.size());
    for (std::size_t i = 0; i < base_.size(); ++i) {
        for (std::size_t j = 0; j < target_.size(); ++j) {
            out.push_back({base_.weights()[i] * target_.weights()[j],
                           a * base_.means()[i] + b * target_.means()[j],
                           a * a * base_.covariances()[i] + b * b * target_.covariances()[j]});
        }
    }
    return out;
}

double MixturePath::pair_terms(double t, const Vec& x, unsigned need, std::vector<PairTerm>& out) const {
    check_state(t, x, dim());
    const int d = dim();
    const double a = schedule_.alpha(t);
    const double b = schedule_.beta(t);
    const double ad = schedule_.alpha_dot(t);
    const double bd = schedule_.beta_dot(t);
    const double log_2pi = std::log(2.0 * std::numbers::pi);

    out.clear();
    out.reserve(base_.size() * target_.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < base_.size(); ++i) {
        const Vec& m = base_.means()[i];
        const Mat& c = base_.covariances()[i];
        for (std::size_t j = 0; j < target_.size(); ++j) {
            const Vec& n = target_.means()[j];
            const Mat& s = target_.covariances()[j];
            const Mat sigma = a * a * c + b * b * s;
            Eigen::LLT<Mat> llt(sigma);
            if (llt.info() != Eigen::Success) {
                throw std::runtime_error("path covariance lost positive-definiteness");
            }
            PairTerm term;
            term.i = i;
            term.j = j;
            const Vec delta = x - (a * m + b * n);
            term.solved = llt.solve(delta);
            const Mat l = llt.matrixL();
            const double log_det = 2.0 * l.diagonal().array().log().sum();
            term.log_term = std::log(base_.weights()[i] * target_.weights()[j]) -
                            0.5 * (delta.dot(term.solved) + log_det + d * log_2pi);
            if (need & (kVelocity | kDenoiser)) {
                const Vec cs = c * term.solved;
                const Vec ss = s * term.solved;
                term.x1_mean = n + b * ss;
                if (need & kVelocity) term.velocity = ad * (m + a * cs) + bd * term.x1_mean;
            }
            if (need & kPrecision) term.precision = llt.solve(Mat::Identity(d, d));
            mx = std::max(mx, term.log_term);
            out.push_back(std::move(term));
        }
    }
    double total = 0.0;
    for (auto& term : out) {
        term.resp = std::exp(term.log_term - mx);
        total += term.resp;
    }
    for (auto& term : out) term.resp /= total;
    return mx + std::log(total);
}

DynamicsAt MixturePath::dynamics(double t, const Vec& x) const {
    thread_local std::vector<PairTerm> terms;
    const double log_density = pair_terms(t, x, kVelocity | kDenoiser, terms);
    const int d = dim();
    DynamicsAt out{Vec::Zero(d), Vec::Zero(d), Vec::Zero(d), log_density};
    for (const auto& term : terms) {
        out.velocity += term.resp * term.velocity;
        out.score -= term.resp * term.solved;
        out.denoiser += term.resp * term.x1_mean;
    }
    return out;
}

Vec MixturePath::velocity(double t, const Vec& x) const {
    thread_local std::vector<PairTerm> terms;
    pair_terms(t, x, kVelocity, terms);
    Vec v = Vec::Zero(dim());
    for (const auto& term : terms) v += term.resp * term.velocity;
    return v;
}

Vec MixturePath::denoiser(double t, const Vec& x) const {
    if (t == 1.0) {
        check_state(t, x, dim());
        return x;
    }
    thread_local std::vector<PairTerm> terms;
    pair_terms(t, x, kDenoiser, terms);
    Vec v = Vec::Zero(dim());
    for (const auto& term : terms) v += term.resp * term.x1_mean;
    return v;
}

// For f = sum_ij p_ij f_ij with grad p_ij = p_ij (s_ij - s):
//   grad f = sum_ij p_ij [grad f_ij + f_ij (s_ij - s)^T],  s_ij = -P_ij (x - mu_ij).
Vec MixturePath::velocity_jacobian(double t, const Vec& x, Mat& jacobian) const {
    thread_local std::vector<PairTerm> terms;
    pair_terms(t, x, kVelocity | kPrecision, terms);
    const int d = dim();
    const double a = schedule_.alpha(t);
    const double b = schedule_.beta(t);
    const double ad = schedule_.alpha_dot(t);
    const double bd = schedule_.beta_dot(t);
    Vec score = Vec::Zero(d);
    Vec v = Vec::Zero(d);
    for (const auto& term : terms) {
        score -= term.resp * term.solved;
        v += term.resp * term.velocity;
    }
    jacobian = Mat::Zero(d, d);
    for (const auto& term : terms) {
        const Mat gain = ad * a * base_.covariances()[term.i] + bd * b * target_.covariances()[term.j];
        const Vec shift = -term.solved - score;
        jacobian += term.resp * (gain * term.precision + term.velocity * shift.transpose());
    }
    return v;
}

Vec MixturePath::denoiser_jacobian(double t, const Vec& x, Mat& jacobian) const {
    const int d = dim();
    if (t == 1.0) {
        check_state(t, x, d);
        jacobian = Mat::Identity(d, d);
        return x;
    }
    thread_local std::vector<PairTerm> terms;
    pair_terms(t, x, kDenoiser | kPrecision, terms);
    const double b = schedule_.beta(t);
    Vec score = Vec::Zero(d);
    Vec den = Vec::Zero(d);
    for (const auto& term : terms) {
        score -= term.resp * term.solved;
        den += term.resp * term.x1_mean;
    }
    jacobian = Mat::Zero(d, d);
    for (const auto& term : terms) {
        const Vec shift = -term.solved - score;
        jacobian += term.resp * (b * target_.covariances()[term.j] * term.precision +
                                 term.x1_mean * shift.transpose());
    }
    return den;
}

}  // namespace fmtt

#include "fmtt/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "fmtt/errors.hpp"

namespace fmtt {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

template <class State>
double error_norm(const State& err, const State& y0, const State& y1, const FlowMapOptions& opt) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

/// Integrates y' = f(tau, y) from t0 to t1 (either direction).
template <class State, class Rhs>
State dopri5(Rhs&& f, double t0, double t1, State y, const FlowMapOptions& opt) {
    const double lo = std::min(t0, t1);
    const double hi = std::max(t0, t1);
    auto rhs = [&](double tau, const State& state) { return f(std::clamp(tau, lo, hi), state); };

    const double span = t1 - t0;
    const double dir = span > 0 ? 1.0 : -1.0;

    // Initial step (Hairer-Norsett-Wanner heuristic).
    State k1 = rhs(t0, y);
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / y.size());
        d1 = std::sqrt(d1 / y.size());
        double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, std::abs(span));
        const State y1 = y + dir * h0 * k1;
        const State f1 = rhs(t0 + dir * h0, y1);
        double d2 = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
            const double r = (f1[i] - k1[i]) / sc;
            d2 += r * r;
        }
        d2 = std::sqrt(d2 / y.size()) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        h = std::min({100.0 * h0, h1, std::abs(span)});
    }

    constexpr double safe = 0.9, facl = 0.2, facr = 10.0, beta = 0.04;
    const double expo1 = 0.2 - beta * 0.75;
    double facold = 1e-4;
    double t = t0;
    bool last = false;
    for (int step = 0; step < opt.max_steps; ++step) {
        if (std::abs(t1 - t) <= std::abs(h) * (1.0 + 1e-12) || std::abs(t1 - t) < 1e-300) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;
        const State k2 = rhs(t + c2 * hs, State(y + hs * (a21 * k1)));
        const State k3 = rhs(t + c3 * hs, State(y + hs * (a31 * k1 + a32 * k2)));
        const State k4 = rhs(t + c4 * hs, State(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
        const State k5 = rhs(t + c5 * hs, State(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        const State k6 =
            rhs(t + hs, State(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        const State y_new = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const double t_new = last ? t1 : t + hs;
        const State k7 = rhs(t_new, y_new);
        const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, y_new, opt);

        const double fac11 = std::pow(std::max(en, 1e-300), expo1);
        if (en <= 1.0 && std::isfinite(en)) {
            if (last) return y_new;
            double fac = fac11 / std::pow(facold, beta);
            fac = std::clamp(fac / safe, 1.0 / facr, 1.0 / facl);
            facold = std::max(en, 1e-4);
            y = y_new;
            k1 = k7;
            t = t_new;
            h = h / fac;
        } else {
            last = false;
            const double shrink = std::isfinite(en) ? std::min(1.0 / facl, fac11 / safe) : 1.0 / facl;
            h = h / shrink;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw ToleranceError("flow-map integrator step size underflow", t);
        }
    }
    throw ToleranceError("flow-map integrator exhausted max_steps before reaching t = " +
                             std::to_string(t1) + " (reached " + std::to_string(t) + ")",
                         t);
}

void check_times(double s, double t) {
    if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("flow-map times must lie in [0, 1]");
    }
}

void check_point(const Vec& x, int dim) {
    if (x.size() != dim) throw std::invalid_argument("state dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("state must be finite");
}

Mat sym_pow(const Mat& m, double p) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(m);
    const Vec vals = eig.eigenvalues().array().pow(p).matrix();
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::string to_string(StepScheme scheme) { return scheme == StepScheme::euler ? "euler" : "heun"; }

StepScheme parse_step_scheme(const std::string& name) {
    if (name == "euler") return StepScheme::euler;
    if (name == "heun") return StepScheme::heun;
    throw std::invalid_argument("unknown step scheme '" + name + "'");
}

FlowMapEvaluator::FlowMapEvaluator(MixturePath path, FlowMapOptions options)
    : path_(std::move(path)), options_(options) {
    if (!(options_.rel_tol > 0.0) || !(options_.abs_tol > 0.0)) {
        throw std::invalid_argument("integrator tolerances must be positive");
    }
    if (options_.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
}

Vec FlowMapEvaluator::flow_map(double s, double t, const Vec& x) const {
    check_times(s, t);
    check_point(x, path_.dim());
    if (s == t) return x;
    auto f = [this](double tau, const Vec& y) { return path_.velocity(tau, y); };
    return dopri5<Vec>(f, s, t, x, options_);
}

JacobianResult FlowMapEvaluator::flow_map_jacobian(double s, double t, const Vec& x) const {
    check_times(s, t);
    const int d = path_.dim();
    check_point(x, d);
    if (s == t) return {x, Mat::Identity(d, d)};
    AugVec y(d + d * d);
    y.head(d) = x;
    {
        const Mat eye = Mat::Identity(d, d);
        for (int c = 0; c < d; ++c) y.segment(d + c * d, d) = eye.col(c);
    }
    auto f = [this, d](double tau, const AugVec& state) {
        const Vec pos = state.head(d);
        Mat grad;
        const Vec v = path_.velocity_jacobian(tau, pos, grad);
        AugVec out(state.size());
        out.head(d) = v;
        for (int c = 0; c < d; ++c) out.segment(d + c * d, d) = grad * state.segment(d + c * d, d);
        return out;
    };
    const AugVec end = dopri5<AugVec>(f, s, t, y, options_);
    JacobianResult res{end.head(d), Mat(d, d)};
    for (int c = 0; c < d; ++c) res.jacobian.col(c) = end.segment(d + c * d, d);
    return res;
}

Vec FlowMapEvaluator::k_step_map(double s, double t, const Vec& x, int k, StepScheme scheme) const {
    check_times(s, t);
    check_point(x, path_.dim());
    if (k < 1) throw std::invalid_argument("k-step map needs k >= 1");
    if (s == t) return x;
    const double h = (t - s) / k;
    Vec y = x;
    for (int i = 0; i < k; ++i) {
        const double tau = s + i * h;
        const double tau_next = (i + 1 == k) ? t : s + (i + 1) * h;
        const Vec k1 = path_.velocity(tau, y);
        if (scheme == StepScheme::euler) {
            y += h * k1;
        } else {
            const Vec pred = y + h * k1;
            const Vec k2 = path_.velocity(tau_next, pred);
            y += 0.5 * h * (k1 + k2);
        }
    }
    return y;
}

JacobianResult FlowMapEvaluator::k_step_map_jacobian(double s, double t, const Vec& x, int k,
                                                     StepScheme scheme) const {
    check_times(s, t);
    const int d = path_.dim();
    check_point(x, d);
    if (k < 1) throw std::invalid_argument("k-step map needs k >= 1");
    const Mat eye = Mat::Identity(d, d);
    if (s == t) return {x, eye};
    const double h = (t - s) / k;
    Vec y = x;
    Mat jac = eye;
    for (int i = 0; i < k; ++i) {
        const double tau = s + i * h;
        const double tau_next = (i + 1 == k) ? t : s + (i + 1) * h;
        Mat g1;
        const Vec k1 = path_.velocity_jacobian(tau, y, g1);
        if (scheme == StepScheme::euler) {
            y += h * k1;
            jac = (eye + h * g1) * jac;
        } else {
            const Vec pred = y + h * k1;
            Mat g2;
            const Vec k2 = path_.velocity_jacobian(tau_next, pred, g2);
            y += 0.5 * h * (k1 + k2);
            jac = (eye + 0.5 * h * (g1 + g2 * (eye + h * g1))) * jac;
        }
    }
    return {y, jac};
}

namespace {

void require_commuting_pair(const MixturePath& path) {
    if (path.base().size() != 1 || path.target().size() != 1) {
        throw std::invalid_argument("closed-form flow map needs single-component base and target");
    }
    const Mat& c = path.base().covariances()[0];
    const Mat& s = path.target().covariances()[0];
    const double scale = std::max(1.0, std::max(c.cwiseAbs().maxCoeff(), s.cwiseAbs().maxCoeff()));
    if ((c * s - s * c).cwiseAbs().maxCoeff() > 1e-12 * scale * scale) {
        throw std::invalid_argument("closed-form flow map needs commuting base/target covariances");
    }
}

}  // namespace

Mat gaussian_pair_closed_form_jacobian(const MixturePath& path, double s, double t) {
    check_times(s, t);
    require_commuting_pair(path);
    const int d = path.dim();
    if (s == t) return Mat::Identity(d, d);
    const auto cs = path.components(s).front();
    const auto ct = path.components(t).front();
    return sym_pow(ct.covariance, 0.5) * sym_pow(cs.covariance, -0.5);
}

Vec gaussian_pair_closed_form(const MixturePath& path, double s, double t, const Vec& x) {
    check_times(s, t);
    check_point(x, path.dim());
    require_commuting_pair(path);
    if (s == t) return x;
    const auto cs = path.components(s).front();
    const auto ct = path.components(t).front();
    return ct.mean + gaussian_pair_closed_form_jacobian(path, s, t) * (x - cs.mean);
}

bool CachedFlowMap::Key::operator==(const Key& other) const {
    return s == other.s && t == other.t && jacobian == other.jacobian && x.size() == other.x.size() &&
           std::memcmp(x.data(), other.x.data(), sizeof(double) * x.size()) == 0;
}

std::size_t CachedFlowMap::KeyHash::operator()(const Key& key) const {
    auto mix = [](std::size_t h, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        return h ^ (std::hash<std::uint64_t>{}(bits) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    };
    std::size_t h = key.jacobian ? 1 : 0;
    h = mix(h, key.s);
    h = mix(h, key.t);
    for (Eigen::Index i = 0; i < key.x.size(); ++i) h = mix(h, key.x[i]);
    return h;
}

JacobianResult CachedFlowMap::flow_map_jacobian(double s, double t, const Vec& x) const {
    Key key{s, t, x, true};
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
    }
    JacobianResult res = evaluator_.flow_map_jacobian(s, t, x);
    std::unique_lock lock(mutex_);
    cache_.emplace(std::move(key), res);
    return res;
}

Vec CachedFlowMap::flow_map(double s, double t, const Vec& x) const {
    // Reuse a Jacobian entry when one exists; the endpoints agree to tolerance.
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(Key{s, t, x, false}); it != cache_.end()) {
            ++hits_;
            return it->second.endpoint;
        }
    }
    const Vec end = evaluator_.flow_map(s, t, x);
    std::unique_lock lock(mutex_);
    cache_.emplace(Key{s, t, x, false}, JacobianResult{end, Mat()});
    return end;
}

std::size_t CachedFlowMap::size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::size_t CachedFlowMap::hits() const {
    std::shared_lock lock(mutex_);
    return hits_;
}

void CachedFlowMap::clear() {
    std::unique_lock lock(mutex_);
    cache_.clear();
    hits_ = 0;
}

}  // namespace fmtt

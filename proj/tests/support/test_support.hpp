#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fmtt/interpolant.hpp"
#include "fmtt/mixture.hpp"
#include "fmtt/types.hpp"

namespace fmtt::testing {

inline Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline Mat mat1(double a) {
    Mat m(1, 1);
    m << a;
    return m;
}

inline GaussianMixture normal1(double mean, double var) { return GaussianMixture::single(vec1(mean), mat1(var)); }

inline MixturePath std_to_std_1d(InterpolantSchedule sched = {}) {
    return MixturePath(normal1(0.0, 1.0), normal1(0.0, 1.0), sched);
}

/// 0.5 N(-2, 0.25) + 0.5 N(2, 0.25) in 1D.
inline GaussianMixture two_mode_1d() {
    return GaussianMixture({0.5, 0.5}, {vec1(-2.0), vec1(2.0)}, {mat1(0.25), mat1(0.25)});
}

/// 0.5 N((-2,0), 0.25 I) + 0.5 N((2,0), 0.25 I).
inline GaussianMixture two_mode_2d() {
    const Mat c = 0.25 * Mat::Identity(2, 2);
    return GaussianMixture({0.5, 0.5}, {vec2(-2.0, 0.0), vec2(2.0, 0.0)}, {c, c});
}

/// kappa(t) = 2t^2 - 2t + 1, the variance of I_t for std -> std.
inline double kappa(double t) { return 2 * t * t - 2 * t + 1; }

/// Central-difference gradient, written independently of the library's oracle.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec p = x, m = x;
        p[i] += h;
        m[i] -= h;
        g[i] = (f(p) - f(m)) / (2 * h);
    }
    return g;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Standard error of the mean.
inline double stderr_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace fmtt::testing

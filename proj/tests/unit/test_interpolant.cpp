#include <doctest.h>

#include <cmath>

#include "fmtt/errors.hpp"
#include "fmtt/interpolant.hpp"
#include "fmtt/mixture.hpp"
#include "fmtt/schedule.hpp"
#include "test_support.hpp"

using namespace fmtt;
using namespace fmtt::testing;

TEST_CASE("eta on the linear schedule") {
    CHECK(InterpolantSchedule::linear(1.0, 0.0).eta(0.25) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(InterpolantSchedule::linear(1.0, 0.05).eta(0.25) == doctest::Approx(2.625).epsilon(1e-14));
    for (double offset : {0.0, 0.05, 0.3}) {
        const auto v = schedule_eval(InterpolantSchedule::linear(1.0, offset), 1.0);
        CHECK(v.alpha == 0.0);
        CHECK(v.beta == 1.0);
        CHECK(v.eta == 0.0);
    }
}

TEST_CASE("eta at t=0 without offset is a domain error") {
    CHECK_THROWS_AS(InterpolantSchedule::linear(1.0, 0.0).eta(0.0), DomainError);
    CHECK(std::isfinite(InterpolantSchedule::linear(1.0, 0.05).eta(0.0)));
    CHECK(InterpolantSchedule::linear(1.0, 0.05).eta(0.0) == doctest::Approx(21.0));
}

TEST_CASE("schedule boundary values and epsilon") {
    for (auto kind : {InterpolantKind::linear, InterpolantKind::trigonometric}) {
        InterpolantSchedule s(kind, DiffusionKind::decaying, 1.0, 0.05);
        CHECK(s.alpha(0) == 1.0);
        CHECK(s.alpha(1) == 0.0);
        CHECK(s.beta(0) == 0.0);
        CHECK(s.beta(1) == 1.0);
        for (int i = 0; i <= 20; ++i) CHECK(s.epsilon(i / 20.0) >= 0.0);
    }
    const auto lin = InterpolantSchedule::linear();
    CHECK(lin.epsilon(0.3) == doctest::Approx(0.7));
    CHECK_THROWS(lin.eval(1.5));
}

TEST_CASE("path components of a two-mode target at t=0.5") {
    MixturePath path(normal1(0, 1), two_mode_1d());
    const auto comps = path.components(0.5);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].weight == doctest::Approx(0.5));
    CHECK(comps[0].mean[0] == doctest::Approx(-1.0));
    CHECK(comps[0].covariance(0, 0) == doctest::Approx(0.3125));
    CHECK(comps[1].weight == doctest::Approx(0.5));
    CHECK(comps[1].mean[0] == doctest::Approx(1.0));
    CHECK(comps[1].covariance(0, 0) == doctest::Approx(0.3125));
}

TEST_CASE("path components at the endpoints") {
    const auto target = two_mode_2d();
    const auto base = GaussianMixture::standard_normal(2);
    MixturePath path(base, target);
    const auto c0 = path.components(0.0);
    const auto c1 = path.components(1.0);
    for (std::size_t k = 0; k < c0.size(); ++k) {
        CHECK((c0[k].mean - base.means()[0]).norm() == 0.0);
        CHECK((c0[k].covariance - base.covariances()[0]).norm() == 0.0);
        CHECK((c1[k].mean - target.means()[k]).norm() == 0.0);
        CHECK((c1[k].covariance - target.covariances()[k]).norm() == 0.0);
    }
}

TEST_CASE("std to std dynamics against Gaussian conditioning") {
    const auto path = std_to_std_1d();
    const double t = 0.25, x = 2.0;
    const auto dyn = path.dynamics(t, vec1(x));
    CHECK(dyn.velocity[0] == doctest::Approx((2 * t - 1) * x / kappa(t)).epsilon(1e-13));
    CHECK(dyn.velocity[0] == doctest::Approx(-1.6).epsilon(1e-13));
    CHECK(dyn.score[0] == doctest::Approx(-3.2).epsilon(1e-13));
    CHECK(dyn.denoiser[0] == doctest::Approx(0.8).epsilon(1e-13));
    CHECK((t * dyn.velocity[0] - x) / (1 - t) == doctest::Approx(dyn.score[0]).epsilon(1e-13));
    const double logp = -0.5 * x * x / kappa(t) - 0.5 * std::log(2 * M_PI * kappa(t));
    CHECK(dyn.log_density == doctest::Approx(logp).epsilon(1e-13));
}

TEST_CASE("zero drift at the symmetry point") {
    MixturePath path(GaussianMixture::standard_normal(2), two_mode_2d());
    CHECK(path.velocity(0.5, vec2(0.0, 0.0)).norm() < 1e-15);
}

TEST_CASE("sampling: moments, degenerate covariance, determinism") {
    SplitMix64 rng(7);
    const auto xs = normal1(0, 1).sample(1000000, rng);
    double m = 0, v = 0;
    for (const auto& x : xs) m += x[0];
    m /= xs.size();
    for (const auto& x : xs) v += (x[0] - m) * (x[0] - m);
    v /= (xs.size() - 1);
    CHECK(std::abs(m) < 4.0 / 1000.0);
    CHECK(std::abs(v - 1.0) < 0.01);

    SplitMix64 rng2(3);
    const auto pt = GaussianMixture::single(vec2(1, -1), 1e-12 * Mat::Identity(2, 2)).sample(100, rng2);
    for (const auto& x : pt) CHECK((x - vec2(1, -1)).norm() < 1e-5);

    SplitMix64 a(11), b(11);
    const auto sa = two_mode_2d().sample(50, a);
    const auto sb = two_mode_2d().sample(50, b);
    for (std::size_t i = 0; i < sa.size(); ++i) CHECK((sa[i] - sb[i]).norm() == 0.0);

    CHECK_THROWS(normal1(0, 1).sample(0, rng));
}

TEST_CASE("mixture validation") {
    CHECK_THROWS(GaussianMixture({0.5, 0.6}, {vec1(0), vec1(1)}, {mat1(1), mat1(1)}));
    CHECK_THROWS(GaussianMixture({1.0}, {vec1(0)}, {mat1(-1)}));
    CHECK_THROWS(GaussianMixture({1.0, 0.0}, {vec1(0), vec1(1)}, {mat1(1), mat1(1)}));
}

namespace {

// Test points and times shared by the property checks below.
std::vector<MixturePath> property_paths() {
    Mat c(2, 2);
    c << 1.0, 0.3, 0.3, 0.5;
    GaussianMixture skew({0.3, 0.7}, {vec2(1, 0), vec2(-1, 2)}, {c, 0.4 * Mat::Identity(2, 2)});
    return {MixturePath(normal1(0, 1), two_mode_1d()),
            MixturePath(GaussianMixture::standard_normal(2), two_mode_2d()),
            MixturePath(GaussianMixture::standard_normal(2), skew)};
}

std::vector<Vec> property_points(int d) {
    std::vector<Vec> pts;
    SplitMix64 rng(99);
    for (int k = 0; k < 12; ++k) pts.push_back(2.0 * standard_normal(rng, d));
    return pts;
}

}  // namespace

TEST_CASE("score identity for the linear schedule") {
    for (const auto& path : property_paths()) {
        for (double t = 0.0; t <= 0.99 + 1e-12; t += 0.03) {
            for (const auto& x : property_points(path.dim())) {
                const auto dyn = path.dynamics(t, x);
                const Vec rhs = (t * dyn.velocity - x) / (1 - t);
                CHECK((dyn.score - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
            }
        }
    }
}

TEST_CASE("interpolation identity alpha E[x0|x] + beta E[x1|x] = x") {
    for (const auto& path : property_paths()) {
        for (double t : {0.0, 0.1, 0.37, 0.5, 0.8, 0.99, 1.0}) {
            for (const auto& x : property_points(path.dim())) {
                const auto dyn = path.dynamics(t, x);
                // Linear schedule: b = E1 - E0 and D = E1.
                const Vec e0 = dyn.denoiser - dyn.velocity;
                CHECK(((1 - t) * e0 + t * dyn.denoiser - x).norm() <= 1e-10);
            }
        }
    }
}

TEST_CASE("score is the gradient of the log-density") {
    for (const auto& path : property_paths()) {
        for (double t : {0.0, 0.2, 0.5, 0.9, 1.0}) {
            for (const auto& x : property_points(path.dim())) {
                const Vec fd = fd_gradient([&](const Vec& y) { return path.log_density(t, y); }, x, 1e-5);
                CHECK((fd - path.score(t, x)).norm() <= 1e-6 * std::max(1.0, fd.norm()));
            }
        }
    }
}

TEST_CASE("continuity equation residual") {
    const double h = 1e-5;
    for (const auto& path : property_paths()) {
        for (double t = 0.05; t < 0.96; t += 0.1) {
            for (const auto& x : property_points(path.dim())) {
                const double dt_logp = (path.log_density(t + h, x) - path.log_density(t - h, x)) / (2 * h);
                Mat jac;
                const Vec b = path.velocity_jacobian(t, x, jac);
                const double resid = dt_logp + jac.trace() + b.dot(path.score(t, x));
                CHECK(std::abs(resid) <= 1e-4);
            }
        }
    }
}

TEST_CASE("velocity and denoiser Jacobians against finite differences") {
    for (const auto& path : property_paths()) {
        for (double t : {0.0, 0.3, 0.7, 0.95}) {
            for (const auto& x : property_points(path.dim())) {
                Mat jv, jd;
                path.velocity_jacobian(t, x, jv);
                path.denoiser_jacobian(t, x, jd);
                for (int i = 0; i < path.dim(); ++i) {
                    const Vec gv = fd_gradient([&](const Vec& y) { return path.velocity(t, y)[i]; }, x, 1e-6);
                    const Vec gd = fd_gradient([&](const Vec& y) { return path.denoiser(t, y)[i]; }, x, 1e-6);
                    CHECK((gv.transpose() - jv.row(i)).norm() <= 1e-5 * std::max(1.0, gv.norm()));
                    CHECK((gd.transpose() - jd.row(i)).norm() <= 1e-5 * std::max(1.0, gd.norm()));
                }
            }
        }
    }
}

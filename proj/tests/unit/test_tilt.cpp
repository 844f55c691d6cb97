#include <doctest.h>

#include <cmath>
#include <memory>

#include "fmtt/errors.hpp"
#include "fmtt/tilt.hpp"
#include "test_support.hpp"

using namespace fmtt;
using namespace fmtt::testing;

namespace {

TimeDependentReward make(const MixturePath& path, const Reward& r, LookAhead mode) {
    auto flow = std::make_shared<const FlowMapEvaluator>(path, FlowMapOptions{1e-11, 1e-13, 100000});
    return TimeDependentReward(r, LookAheadConfig{mode, 4, StepScheme::heun}, flow);
}

StepInput input(const Vec& x, double A, double t, double t_next, const Vec& noise) {
    StepInput in;
    in.x = x;
    in.A = A;
    in.t = t;
    in.t_next = t_next;
    in.noise = noise;
    return in;
}

}  // namespace

TEST_CASE("chi choices") {
    const auto s = InterpolantSchedule::linear(1.0, 0.05);
    CHECK(chi(DriftChoice::default_, s, 0.3) == 0.0);
    CHECK(chi(DriftChoice::tilted_score, s, 0.25) == doctest::Approx(2.625));
    CHECK(chi(DriftChoice::local_tilt, s, 0.25) == doctest::Approx(0.75));
    CHECK(chi(DriftChoice::base, s, 0.25) == doctest::Approx(-0.75));
    CHECK_THROWS_AS(chi(DriftChoice::tilted_score, InterpolantSchedule::linear(1.0, 0.0), 0.0), DomainError);
}

TEST_CASE("position step on the reward-free ODE") {
    const auto path = std_to_std_1d(InterpolantSchedule::linear(0.0, 0.0));
    const auto rt = make(path, Reward::zero(1), LookAhead::flowmap_exact);
    const auto in = input(vec1(1), 0, 0.0, 0.1, vec1(0));
    CHECK(position_step(in, DriftChoice::default_, rt)[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("zero reward: every chi gives the base step") {
    const auto path = std_to_std_1d(InterpolantSchedule::linear(1.0, 0.05));
    const auto rt = make(path, Reward::zero(1), LookAhead::flowmap_exact);
    const auto in = input(vec1(0.7), 0, 0.3, 0.31, vec1(-0.4));
    const Vec ref = position_step(in, DriftChoice::default_, rt);
    for (auto c : {DriftChoice::tilted_score, DriftChoice::local_tilt, DriftChoice::base}) {
        CHECK(position_step(in, c, rt)[0] == ref[0]);
    }
}

TEST_CASE("chi = base reproduces the reward-free step bit for bit") {
    const auto path = MixturePath(GaussianMixture::standard_normal(2), two_mode_2d());
    const auto zero = make(path, Reward::zero(2), LookAhead::flowmap_exact);
    const auto lin = make(path, Reward::linear(vec2(0.5, -0.25)), LookAhead::flowmap_exact);
    SplitMix64 rng(4);
    Vec xa = vec2(0.1, 0.2), xb = xa;
    for (int k = 0; k < 50; ++k) {
        const Vec noise = standard_normal(rng, 2);
        xa = position_step(input(xa, 0, k / 50.0, (k + 1) / 50.0, noise), DriftChoice::base, lin);
        xb = position_step(input(xb, 0, k / 50.0, (k + 1) / 50.0, noise), DriftChoice::default_, zero);
        REQUIRE(xa[0] == xb[0]);
        REQUIRE(xa[1] == xb[1]);
    }
}

TEST_CASE("local-tilt step shifts the mean by dt eps grad r_t") {
    const auto path = std_to_std_1d();
    const auto rt = make(path, Reward::linear(vec1(0.5)), LookAhead::naive);
    SplitMix64 rng(8);
    for (double dt : {1e-2, 1e-3}) {
        const double t = 0.4;
        const Vec noise = standard_normal(rng, 1);
        const auto in = input(vec1(0.3), 0, t, t + dt, noise);
        const double shift = position_step(in, DriftChoice::local_tilt, rt)[0] - position_step(in, DriftChoice::default_, rt)[0];
        CHECK(shift == doctest::Approx(dt * (1 - t) * t * 0.5).epsilon(1e-9));
    }
}

TEST_CASE("simplified weights") {
    const auto path = MixturePath(normal1(0, 1), normal1(1, 1));
    const auto rt = make(path, Reward::linear(vec1(0.5)), LookAhead::flowmap_exact);
    CHECK(weight_step_simplified(input(vec1(0), 2.0, 0.0, 0.01, vec1(0)), rt) == doctest::Approx(2.005).epsilon(1e-10));
    const auto zero = make(path, Reward::zero(1), LookAhead::flowmap_exact);
    CHECK(weight_step_simplified(input(vec1(0.4), 1.5, 0.2, 0.3, vec1(0)), zero) == 1.5);
    PointState at;
    at.reward.terminal = 0.5;
    CHECK(weight_step_simplified(input(vec1(0), 1.0, 0.5, 0.51, vec1(0)), at) == doctest::Approx(1.005));
    CHECK_THROWS_AS(weight_step_simplified(input(vec1(0), 0, 0, 0.1, vec1(0)), make(path, Reward::linear(vec1(1)), LookAhead::naive)),
                    SchemeError);
}

TEST_CASE("Laplacian weights") {
    const auto path = std_to_std_1d();
    SplitMix64 rng(1);
    WeightOptions opt;
    const auto rt = make(path, Reward::linear(vec1(1.0)), LookAhead::flowmap_exact);
    CHECK(weight_step_laplacian(input(vec1(2), 0.0, 0.25, 0.26, vec1(0)), DriftChoice::default_, rt, opt, rng) ==
          doctest::Approx(0.01 * 2.5298221281347035).epsilon(1e-8));
    const auto zero = make(path, Reward::zero(1), LookAhead::flowmap_exact);
    for (auto c : {DriftChoice::default_, DriftChoice::local_tilt, DriftChoice::base}) {
        CHECK(weight_step_laplacian(input(vec1(2), 0.7, 0.25, 0.26, vec1(0)), c, zero, opt, rng) == 0.7);
    }

    // Quadratic reward, naive look-ahead: every term of the bracket in closed form.
    const double gamma = 0.8, t = 0.3, dt = 0.01, x = 1.4;
    const auto quad = make(path, Reward::quadratic(gamma, 1), LookAhead::naive);
    opt.hutchinson = {4, 1e-3, ProbeDist::rademacher};
    const double k = kappa(t);
    const double b = (2 * t - 1) * x / k, s = -x / k;
    const double g = -t * gamma * x, lap = -t * gamma, dtr = -0.5 * gamma * x * x;
    const double eps = 1 - t;
    const double expected = dt * (b * g + dtr + eps * (g * g + lap + g * s));
    CHECK(weight_step_laplacian(input(vec1(x), 0, t, t + dt, vec1(0)), DriftChoice::local_tilt, quad, opt, rng) ==
          doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("Ito weights") {
    const auto path = std_to_std_1d(InterpolantSchedule::linear(1.0, 0.05));
    const auto rt = make(path, Reward::linear(vec1(0.5)), LookAhead::flowmap_exact);
    const auto in0 = input(vec1(1.2), 0.3, 0.4, 0.41, vec1(0));
    const Vec x_next = position_step(in0, DriftChoice::default_, rt);
    const double drift_only = 0.3 + 0.01 * rt.evaluate(0.4, vec1(1.2)).terminal;
    CHECK(weight_step_ito(in0, x_next, DriftChoice::default_, rt) == doctest::Approx(drift_only).epsilon(1e-13));

    const auto zero = make(path, Reward::zero(1), LookAhead::flowmap_exact);
    CHECK(weight_step_ito(input(vec1(1.2), 0.3, 0.4, 0.41, vec1(0.9)), vec1(1.1), DriftChoice::tilted_score, zero) == 0.3);

    // Hand evaluation of the displayed update with the forward gradient at x'.
    SplitMix64 rng(12);
    const Vec noise = standard_normal(rng, 1);
    const auto in = input(vec1(-0.6), 0.1, 0.5, 0.52, noise);
    const Vec xn = position_step(in, DriftChoice::tilted_score, rt);
    const auto& sched = path.schedule();
    const double t = 0.5, tn = 0.52, dt = 0.02;
    const double c0 = 1.05 * (1 - t) / (t + 0.05), c1 = 1.05 * (1 - tn) / (tn + 0.05);
    const double e0 = 1 - t, e1 = 1 - tn;
    const auto ev = rt.evaluate(t, vec1(-0.6));
    const double s = path.score(t, vec1(-0.6))[0];
    const double g0 = ev.gradient[0], g1 = rt.gradient(tn, xn)[0];
    const double expected = 0.1 + dt * (ev.terminal + c0 * (g0 * g0 + g0 * s)) +
                            c1 * std::sqrt(dt / (2 * e1)) * g1 * noise[0] - c0 * std::sqrt(dt / (2 * e0)) * g0 * noise[0];
    CHECK(sched.eta(tn) == doctest::Approx(c1));
    CHECK(weight_step_ito(in, xn, DriftChoice::tilted_score, rt) == doctest::Approx(expected).epsilon(1e-12));

    const auto still = std_to_std_1d(InterpolantSchedule::linear(0.0, 0.05));
    CHECK_THROWS_AS(weight_step_ito(in, xn, DriftChoice::tilted_score, make(still, Reward::linear(vec1(0.5)), LookAhead::naive)),
                    SchemeError);
}

TEST_CASE("expectation weights") {
    SplitMix64 rng(2);
    WeightOptions opt;
    const auto shifted = MixturePath(normal1(0, 1), normal1(1, 1));
    const auto rt = make(shifted, Reward::linear(vec1(0.5)), LookAhead::flowmap_exact);
    // x + dt b_0(0) = 0.01 sits on the path mean at t = 0.01, so X_{0.01,1} sends it to 1.
    const double want = 0.01 * 0.5 * gaussian_pair_closed_form(shifted, 0.01, 1.0, vec1(0.01))[0];
    CHECK(want == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(weight_step_expectation(input(vec1(0), 1.0, 0.0, 0.01, vec1(0)), DriftChoice::default_, rt, opt, rng) ==
          doctest::Approx(1.0 + want).epsilon(1e-12));

    const auto zero = make(shifted, Reward::zero(1), LookAhead::flowmap_exact);
    for (auto c : {DriftChoice::default_, DriftChoice::local_tilt, DriftChoice::base}) {
        CHECK(weight_step_expectation(input(vec1(0.3), 0.25, 0.3, 0.31, vec1(0)), c, zero, opt, rng) == 0.25);
    }
}

TEST_CASE("expectation and Laplacian increments agree as dt shrinks") {
    const auto path = std_to_std_1d();
    const auto rt = make(path, Reward::linear(vec1(0.5)), LookAhead::naive);
    WeightOptions opt;
    opt.inner_samples = 200000;
    opt.hutchinson = {8, 1e-3, ProbeDist::gaussian};
    for (auto c : {DriftChoice::local_tilt, DriftChoice::base}) {
        for (double dt : {1e-2, 1e-3}) {
            SplitMix64 rng(21);
            const auto in = input(vec1(0.8), 0, 0.4, 0.4 + dt, vec1(0));
            const double e = weight_step_expectation(in, c, rt, opt, rng);
            const double l = weight_step_laplacian(in, c, rt, opt, rng);
            // Inner Monte Carlo error: sd of r_{t'}(y) is t' lambda sqrt(2 |chi| dt).
            const double mc = (0.4 + dt) * 0.5 * std::sqrt(2 * 0.6 * dt) / std::sqrt(200000.0);
            CHECK(std::abs(e - l) <= 2 * dt * dt + 3 * mc);
        }
    }
}

TEST_CASE("paper-literal expectation weights add the raw average") {
    const auto path = std_to_std_1d();
    const auto zero = make(path, Reward::zero(1), LookAhead::naive);
    WeightOptions opt;
    opt.paper_literal = true;
    opt.inner_samples = 10;
    SplitMix64 rng(1);
    CHECK(weight_step_expectation(input(vec1(0.3), 0.0, 0.3, 0.31, vec1(0)), DriftChoice::local_tilt, zero, opt, rng) == 1.0);
}

TEST_CASE("scheme validation") {
    const auto path = std_to_std_1d();
    CHECK_THROWS_AS(validate_scheme(DriftChoice::local_tilt, WeightScheme::simplified, make(path, Reward::linear(vec1(1)), LookAhead::flowmap_exact)),
                    SchemeError);
    CHECK_THROWS_AS(validate_scheme(DriftChoice::default_, WeightScheme::simplified, make(path, Reward::linear(vec1(1)), LookAhead::denoiser)),
                    SchemeError);
    CHECK_NOTHROW(validate_scheme(DriftChoice::default_, WeightScheme::simplified, make(path, Reward::linear(vec1(1)), LookAhead::flowmap_ksteps)));
}

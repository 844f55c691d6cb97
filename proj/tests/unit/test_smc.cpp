#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "fmtt/errors.hpp"
#include "fmtt/smc.hpp"
#include "test_support.hpp"

using namespace fmtt;
using namespace fmtt::testing;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

TimeDependentReward make(const MixturePath& path, const Reward& r, LookAhead mode = LookAhead::flowmap_exact,
                         double rel = 1e-6) {
    auto flow = std::make_shared<const FlowMapEvaluator>(path, FlowMapOptions{rel, rel * 1e-2, 100000});
    return TimeDependentReward(r, LookAheadConfig{mode, 4, StepScheme::heun}, flow);
}

RunConfig config(int n, int k, std::uint64_t seed) {
    RunConfig cfg;
    cfg.particles = n;
    cfg.times = uniform_times(k);
    cfg.seed = seed;
    cfg.threads = 1;
    return cfg;
}

ParticleEnsemble ensemble_of(const std::vector<double>& xs, const std::vector<double>& logw, int clones = 1) {
    ParticleEnsemble e;
    for (double x : xs) e.positions.push_back(vec1(x));
    e.logweights = logw;
    e.clones = clones;
    return e;
}

}  // namespace

TEST_CASE("effective sample size") {
    CHECK(ess({0, 0, 0, 0}) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(ess({0, -kInf, -kInf, -kInf}) == 1.0);
    CHECK(ess({std::log(2.0), std::log(2.0), 0, 0}) == doctest::Approx(3.6).epsilon(1e-14));
    CHECK_THROWS_AS(ess({-kInf, -kInf}), DegenerateEnsembleError);
}

TEST_CASE("resampling") {
    SplitMix64 rng(1);
    for (auto scheme : {Resampler::systematic, Resampler::multinomial}) {
        const auto idx = resample_indices({0, -kInf, -kInf, -kInf, -kInf}, 5, scheme, rng);
        for (auto i : idx) CHECK(i == 0);
    }
    const auto sys = resample_indices(std::vector<double>(8, 0.0), 8, Resampler::systematic, rng);
    for (std::size_t i = 0; i < 8; ++i) CHECK(sys[i] == i);

    const std::vector<double> logw = {0.1, -0.3, 1.2, 0.0, -2.0, 0.5};
    SplitMix64 a(9), b(9);
    CHECK(resample_indices(logw, 6, Resampler::multinomial, a) == resample_indices(logw, 6, Resampler::multinomial, b));

    auto e = ensemble_of({1, 2, 3, 4}, {0, -kInf, 0, -kInf}, 2);
    std::vector<std::size_t> anc;
    const auto r = resample(e, rng, Resampler::systematic, &anc);
    CHECK(r.positions.size() == 4);
    CHECK(anc.size() == 2);
    for (double w : r.logweights) CHECK(w == 0.0);
    CHECK(r.positions[0][0] == r.positions[1][0]);
}

TEST_CASE("top-n selection") {
    CHECK(top_n_indices({3, 1, 2}, 2) == std::vector<std::size_t>{0, 2});
    CHECK(top_n_indices({5, 5, 5, 5}, 2) == std::vector<std::size_t>{0, 1});
    const auto e = ensemble_of({10, 20, 30, 40}, {0, 0, 0, 0}, 2);
    const auto best = top_n_select(e, {0.1, 0.9, 0.3, 0.2}, 1);
    REQUIRE(best.positions.size() == 2);
    CHECK(best.positions[0][0] == 20);
    CHECK(best.positions[1][0] == 20);
}

TEST_CASE("normalization constant") {
    CHECK(std::exp(log_z_smc({}, {0, 0, 0})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::exp(log_z_smc({}, {std::log(2.0), std::log(2.0)})) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::exp(log_z_smc({std::log(1.5)}, {std::log(2.0), std::log(2.0)})) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("weighted expectation") {
    auto id = [](const Vec& x) { return x[0]; };
    CHECK(weighted_expectation(ensemble_of({0, 2}, {0, 0}), id) == doctest::Approx(1.0));
    CHECK(weighted_expectation(ensemble_of({1, 0}, {1, 0}), id) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1)).epsilon(1e-14));
    CHECK(weighted_expectation(ensemble_of({1, 5, -3}, {0.3, 2.0, -1.0}), [](const Vec&) { return 1.0; }) == 1.0);
}

TEST_CASE("softmax invariance under a global shift") {
    const std::vector<double> a = {0.3, -1.2, 0.8, 0.0, 2.1, -0.5, 0.4, 1.0};
    std::vector<double> b = a;
    for (double& v : b) v += 123.25;
    CHECK(ess(a) == doctest::Approx(ess(b)).epsilon(1e-12));
    SplitMix64 r1(5), r2(5);
    CHECK(resample_indices(a, 8, Resampler::systematic, r1) == resample_indices(b, 8, Resampler::systematic, r2));
    std::vector<double> h = {1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(std::abs(weighted_mean(a, h) - weighted_mean(b, h)) < 1e-12);
}

TEST_CASE("zero reward run samples the target with flat weights") {
    const auto path = MixturePath(normal1(0, 1), normal1(1.5, 0.5));
    auto cfg = config(1024, 50, 3);
    const auto res = run(cfg, make(path, Reward::zero(1)));
    CHECK(res.events.empty());
    for (const auto& row : res.trace) CHECK(row.ess == doctest::Approx(1024.0).epsilon(1e-12));
    double m = 0, v = 0;
    for (const auto& x : res.ensemble.positions) m += x[0];
    m /= 1024;
    for (const auto& x : res.ensemble.positions) v += (x[0] - m) * (x[0] - m);
    v /= 1023;
    // Euler-Maruyama bias at K=50 is well inside these bands.
    CHECK(std::abs(m - 1.5) < 4 * std::sqrt(0.5 / 1024) + 0.02);
    CHECK(std::abs(v - 0.5) < 4 * 0.5 * std::sqrt(2.0 / 1023) + 0.02);
    CHECK(res.log_z == 0.0);
}

TEST_CASE("linear tilt of std to std recovers the closed-form mean") {
    const auto path = std_to_std_1d();
    auto cfg = config(2048, 200, 11);
    const auto res = run(cfg, make(path, Reward::linear(vec1(0.5))));
    std::vector<double> xs;
    for (const auto& x : res.ensemble.positions) xs.push_back(x[0]);
    const double m = weighted_mean(res.ensemble.logweights, xs);
    // Delta-method standard error of the self-normalized mean.
    double mx = -kInf;
    for (double a : res.ensemble.logweights) mx = std::max(mx, a);
    double sw = 0, sw2d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) sw += std::exp(res.ensemble.logweights[i] - mx);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double p = std::exp(res.ensemble.logweights[i] - mx) / sw;
        sw2d += p * p * (xs[i] - m) * (xs[i] - m);
    }
    CHECK(std::abs(m - 0.5) <= 3 * std::sqrt(sw2d));
}

TEST_CASE("chi = base keeps positions identical to the reward-free run") {
    const auto path = MixturePath(GaussianMixture::standard_normal(2), two_mode_2d());
    auto cfg = config(16, 40, 21);
    cfg.trigger = ResampleTrigger::none;
    cfg.chi = DriftChoice::base;
    cfg.weights = WeightScheme::laplacian;
    cfg.weight_options.hutchinson.probes = 2;
    const auto tilted = run(cfg, make(path, Reward::linear(vec2(0.5, 0.2))));
    cfg.chi = DriftChoice::default_;
    cfg.weights = WeightScheme::simplified;
    const auto plain = run(cfg, make(path, Reward::zero(2)));
    for (std::size_t p = 0; p < 16; ++p) {
        CHECK(tilted.ensemble.positions[p][0] == plain.ensemble.positions[p][0]);
        CHECK(tilted.ensemble.positions[p][1] == plain.ensemble.positions[p][1]);
    }
}

TEST_CASE("results do not depend on the thread count") {
    const auto path = MixturePath(GaussianMixture::standard_normal(2), two_mode_2d());
    auto cfg = config(24, 30, 5);
    const auto rt = make(path, Reward::log_responsibility(std::make_shared<const GaussianMixture>(two_mode_2d()), 1, 1.0));
    const auto a = run(cfg, rt);
    cfg.threads = 4;
    const auto b = run(cfg, rt);
    for (std::size_t p = 0; p < 24; ++p) {
        CHECK((a.ensemble.positions[p] - b.ensemble.positions[p]).norm() == 0.0);
        CHECK(a.ensemble.logweights[p] == b.ensemble.logweights[p]);
    }
    CHECK(a.log_z == b.log_z);
}

TEST_CASE("search with C=1 and n=N is a no-op") {
    const auto path = MixturePath(normal1(0, 1), two_mode_1d());
    const auto rt = make(path, Reward::log_responsibility(std::make_shared<const GaussianMixture>(two_mode_1d()), 1, 0.5));
    auto cfg = config(32, 40, 8);
    cfg.trigger = ResampleTrigger::none;
    const auto plain = run(cfg, rt);
    cfg.mode = RunMode::searching;
    cfg.trigger = ResampleTrigger::periodic;
    cfg.every = 20;
    const auto search = run(cfg, rt);
    CHECK(search.events.size() == 1);
    CHECK(std::isnan(search.log_z));
    for (std::size_t p = 0; p < 32; ++p) CHECK(search.ensemble.positions[p][0] == plain.ensemble.positions[p][0]);
}

TEST_CASE("greedy search raises the mode-2 fraction") {
    const auto target = two_mode_1d();
    const auto path = MixturePath(normal1(0, 1), target);
    const auto rt = make(path, Reward::log_responsibility(std::make_shared<const GaussianMixture>(target), 1, 1.0));
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = config(32, 100, 1000 + seed);
        cfg.mode = RunMode::searching;
        cfg.chi = DriftChoice::default_;
        cfg.clones = 2;
        cfg.trigger = ResampleTrigger::periodic;
        cfg.every = 50;
        const auto search = run(cfg, rt);
        auto base_cfg = config(64, 100, 1000 + seed);
        base_cfg.mode = RunMode::searching;
        base_cfg.trigger = ResampleTrigger::none;
        const auto base = run(base_cfg, rt);
        auto frac = [](const RunResult& r) {
            double f = 0;
            for (const auto& x : r.ensemble.positions) f += x[0] > 0 ? 1 : 0;
            return f / static_cast<double>(r.ensemble.positions.size());
        };
        wins += frac(search) > frac(base) ? 1 : 0;
    }
    CHECK(wins >= 8);
}

TEST_CASE("adding a constant to the reward leaves normalized weights unchanged") {
    const auto path = MixturePath(GaussianMixture::standard_normal(2), two_mode_2d());
    const auto target = std::make_shared<const GaussianMixture>(two_mode_2d());
    const auto r = Reward::log_responsibility(target, 1, 0.5);
    auto cfg = config(32, 50, 4);
    cfg.trigger = ResampleTrigger::none;
    const auto a = run(cfg, make(path, r));
    const auto b = run(cfg, make(path, r.with_offset(3.7)));
    auto softmax = [](const std::vector<double>& v) {
        double mx = -kInf;
        for (double x : v) mx = std::max(mx, x);
        std::vector<double> p(v.size());
        double s = 0;
        for (std::size_t i = 0; i < v.size(); ++i) s += (p[i] = std::exp(v[i] - mx));
        for (double& x : p) x /= s;
        return p;
    };
    const auto pa = softmax(a.ensemble.logweights), pb = softmax(b.ensemble.logweights);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(std::abs(pa[i] - pb[i]) < 1e-10);
}

TEST_CASE("deterministic dynamics converge to the flow map at first order") {
    const auto path = MixturePath(normal1(0, 1), two_mode_1d(), InterpolantSchedule::linear(0.0, 0.0));
    const auto rt = make(path, Reward::zero(1), LookAhead::flowmap_exact, 1e-10);
    double prev = 0;
    for (int k : {50, 100, 200}) {
        auto cfg = config(16, k, 2);
        const auto res = run(cfg, rt);
        SplitMix64 init = substream(2, StreamPurpose::init);
        const auto x0 = path.base().sample(16, init);
        double err = 0;
        for (std::size_t p = 0; p < 16; ++p) {
            err = std::max(err, std::abs(res.ensemble.positions[p][0] - rt.flow().flow_map(0, 1, x0[p])[0]));
        }
        if (prev > 0) CHECK(err / prev == doctest::Approx(0.5).epsilon(0.15));
        prev = err;
    }
}

TEST_CASE("configuration validation") {
    const auto path = std_to_std_1d();
    const auto rt = make(path, Reward::linear(vec1(0.5)));
    auto cfg = config(8, 10, 0);
    cfg.times = {0.0, 0.5, 0.4, 1.0};
    CHECK_THROWS(run(cfg, rt));
    cfg = config(8, 10, 0);
    cfg.trigger = ResampleTrigger::periodic;
    cfg.every = 3;
    CHECK_THROWS(run(cfg, rt));
    cfg = config(8, 10, 0);
    cfg.chi = DriftChoice::local_tilt;
    CHECK_THROWS_AS(run(cfg, rt), SchemeError);
    cfg.chi = DriftChoice::tilted_score;
    cfg.weights = WeightScheme::laplacian;
    CHECK_THROWS_AS(run(cfg, rt), DomainError);
}

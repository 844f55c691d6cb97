#include "fmtt/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>

#include "fmtt/diagnostics.hpp"
#include "fmtt/errors.hpp"
#include "fmtt/flowmap.hpp"
#include "fmtt/oracles.hpp"
#include "fmtt/smc.hpp"
#include "fmtt/tilt.hpp"

namespace fmtt {

namespace {

struct Outcome {
    double measured;
    double tolerance;
    std::string detail;
};

struct Check {
    std::string module;
    std::string name;
    std::function<Outcome()> body;
};

Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat diag2(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

GaussianMixture normal1(double m, double v) {
    Mat c(1, 1);
    c << v;
    return GaussianMixture::single(v1(m), c);
}

GaussianMixture two_mode_1d() {
    Mat c(1, 1);
    c << 0.25;
    return GaussianMixture({0.5, 0.5}, {v1(-2), v1(2)}, {c, c});
}

GaussianMixture two_mode_2d() {
    const Mat c = 0.25 * Mat::Identity(2, 2);
    return GaussianMixture({0.5, 0.5}, {v2(-2, 0), v2(2, 0)}, {c, c});
}

Outcome flag(bool ok, const std::string& failure = {}) { return {ok ? 0.0 : 1.0, 0.0, ok ? "" : failure}; }

Outcome max_error(double err, double tol) { return {err, tol, {}}; }

std::vector<Check> build_checks(const VerifyOptions& opt) {
    std::vector<Check> out;
    auto add = [&](const char* module, const char* name, std::function<Outcome()> body) {
        out.push_back({module, name, std::move(body)});
    };
    const double rel = opt.rel_tol;
    const FlowMapOptions fm{rel, rel * 1e-2, 1000000};
    const double oracle_tol = std::max(100.0 * rel, 1e-13);
    const std::uint64_t seed = opt.seed;

    // interpolant
    add("interpolant", "linear_schedule_values", [] {
        const auto v = InterpolantSchedule::linear().eval(0.25);
        const double err = std::max({std::abs(v.alpha - 0.75), std::abs(v.beta - 0.25), std::abs(v.alpha_dot + 1),
                                     std::abs(v.beta_dot - 1), std::abs(v.epsilon - 0.75), std::abs(v.eta - 3.0)});
        return max_error(err, 1e-15);
    });
    add("interpolant", "eta_singular_without_offset", [] {
        try {
            InterpolantSchedule::linear(1.0, 0.0).eta(0.0);
        } catch (const DomainError&) {
            return flag(std::isfinite(InterpolantSchedule::linear(1.0, 0.05).eta(0.0)));
        }
        return flag(false, "no DomainError at t = 0");
    });
    add("interpolant", "std_to_std_marginal", [] {
        const MixturePath path(normal1(0, 1), normal1(0, 1));
        double err = 0;
        for (double t : {0.0, 0.2, 0.5, 0.9, 1.0}) {
            const double k = 2 * t * t - 2 * t + 1;
            for (double x : {-2.0, 0.3, 1.7}) {
                const double exact = -0.5 * x * x / k - 0.5 * std::log(2 * M_PI * k);
                err = std::max(err, std::abs(path.log_density(t, v1(x)) - exact));
            }
        }
        return max_error(err, 1e-12);
    });
    add("interpolant", "score_is_log_density_gradient", [seed] {
        const MixturePath path(GaussianMixture::standard_normal(2), two_mode_2d());
        std::mt19937_64 eng(seed);
        std::uniform_real_distribution<double> ut(0.02, 0.98), ux(-3, 3);
        double err = 0;
        for (int i = 0; i < 20; ++i) {
            const double t = ut(eng);
            const Vec x = v2(ux(eng), ux(eng));
            const Vec g = finite_diff_grad([&](const Vec& y) { return path.log_density(t, y); }, x, 1e-5);
            err = std::max(err, (path.score(t, x) - g).norm() / std::max(1.0, g.norm()));
        }
        return max_error(err, 1e-6);
    });
    add("interpolant", "continuity_equation", [seed] {
        const MixturePath path(normal1(0, 1), two_mode_1d());
        std::mt19937_64 eng(seed + 1);
        std::uniform_real_distribution<double> ut(0.05, 0.95), ux(-2.5, 2.5);
        const double h = 1e-4;
        double err = 0;
        for (int i = 0; i < 20; ++i) {
            const double t = ut(eng), x = ux(eng);
            // d_t log rho + b d_x log rho + d_x b = 0
            const double dt = (path.log_density(t + h, v1(x)) - path.log_density(t - h, v1(x))) / (2 * h);
            const double db = (path.velocity(t, v1(x + h))[0] - path.velocity(t, v1(x - h))[0]) / (2 * h);
            const double res = dt + path.velocity(t, v1(x))[0] * path.score(t, v1(x))[0] + db;
            err = std::max(err, std::abs(res));
        }
        return max_error(err, 1e-5);
    });

    // flowmap
    add("flowmap", "std_to_std_sqrt_half", [fm, oracle_tol] {
        const FlowMapEvaluator ev(MixturePath(normal1(0, 1), normal1(0, 1)), fm);
        return max_error(std::abs(ev.flow_map(0.0, 0.5, v1(1.0))[0] - std::sqrt(0.5)), oracle_tol);
    });
    add("flowmap", "gaussian_pair_closed_form", [fm, oracle_tol, seed] {
        const MixturePath path(GaussianMixture::single(v2(1, -1), diag2(0.5, 2.0)),
                               GaussianMixture::single(v2(-2, 3), diag2(3.0, 0.2)));
        const FlowMapEvaluator ev(path, fm);
        std::mt19937_64 eng(seed + 2);
        std::uniform_real_distribution<double> ut(0, 1), ux(-3, 3);
        double err = 0;
        for (int i = 0; i < 25; ++i) {
            const double s = ut(eng), t = ut(eng);
            const Vec x = v2(ux(eng), ux(eng));
            const Vec exact = gaussian_pair_closed_form(path, s, t, x);
            err = std::max(err, (ev.flow_map(s, t, x) - exact).norm() / std::max(1.0, exact.norm()));
        }
        return max_error(err, oracle_tol);
    });
    add("flowmap", "gaussian_pair_jacobian", [fm, oracle_tol, seed] {
        const MixturePath path(GaussianMixture::single(v2(1, -1), diag2(0.5, 2.0)),
                               GaussianMixture::single(v2(-2, 3), diag2(3.0, 0.2)));
        const FlowMapEvaluator ev(path, fm);
        std::mt19937_64 eng(seed + 3);
        std::uniform_real_distribution<double> ut(0, 1), ux(-3, 3);
        double err = 0;
        for (int i = 0; i < 10; ++i) {
            const double s = ut(eng), t = ut(eng);
            const Mat exact = gaussian_pair_closed_form_jacobian(path, s, t);
            const Mat got = ev.flow_map_jacobian(s, t, v2(ux(eng), ux(eng))).jacobian;
            err = std::max(err, (got - exact).norm() / std::max(1.0, exact.norm()));
        }
        return max_error(err, oracle_tol);
    });
    add("flowmap", "semigroup_and_inverse", [fm, seed] {
        const FlowMapEvaluator ev(MixturePath(GaussianMixture::standard_normal(2), two_mode_2d()), fm);
        std::mt19937_64 eng(seed + 4);
        std::uniform_real_distribution<double> ut(0, 1), ux(-2.5, 2.5);
        double err = 0;
        for (int i = 0; i < 100; ++i) {
            double ts[3] = {ut(eng), ut(eng), ut(eng)};
            std::sort(ts, ts + 3);
            const Vec x = v2(ux(eng), ux(eng));
            const Vec mid = ev.flow_map(ts[0], ts[1], x);
            err = std::max(err, (ev.flow_map(ts[1], ts[2], mid) - ev.flow_map(ts[0], ts[2], x)).norm());
            err = std::max(err, (ev.flow_map(ts[1], ts[0], mid) - x).norm());
        }
        return max_error(err, 1e-6);
    });
    add("flowmap", "tangent_identity", [fm, seed] {
        const FlowMapEvaluator ev(MixturePath(GaussianMixture::standard_normal(2), two_mode_2d()), fm);
        std::mt19937_64 eng(seed + 5);
        std::uniform_real_distribution<double> ut(0.05, 0.95), ux(-2.5, 2.5);
        const double h = 1e-4;
        double err = 0;
        for (int i = 0; i < 10; ++i) {
            const double t = ut(eng);
            const Vec x = v2(ux(eng), ux(eng));
            const Vec v = (ev.flow_map(t, t + h, x) - ev.flow_map(t, t - h, x)) / (2 * h);
            const Vec b = ev.path().velocity(t, x);
            err = std::max(err, (v - b).norm() / std::max(1.0, b.norm()));
        }
        return max_error(err, 1e-6);
    });
    add("flowmap", "eulerian_identity", [fm, seed] {
        const FlowMapEvaluator ev(MixturePath(GaussianMixture::standard_normal(2), two_mode_2d()), fm);
        std::mt19937_64 eng(seed + 6);
        std::uniform_real_distribution<double> ut(0.1, 0.9), ux(-2.5, 2.5);
        const double h = 1e-4;
        double err = 0;
        for (int i = 0; i < 10; ++i) {
            const double s = ut(eng), t = ut(eng);
            const Vec x = v2(ux(eng), ux(eng));
            const Vec ds = (ev.flow_map(s + h, t, x) - ev.flow_map(s - h, t, x)) / (2 * h);
            const Mat j = ev.flow_map_jacobian(s, t, x).jacobian;
            err = std::max(err, (ds + j * ev.path().velocity(s, x)).norm());
        }
        return max_error(err, 1e-5);
    });
    add("flowmap", "k_step_convergence", [fm] {
        const MixturePath path(normal1(0, 1), normal1(0, 1));
        const FlowMapEvaluator ev(path, fm);
        const Vec x = v1(1.5);
        const double exact = gaussian_pair_closed_form(path, 0.2, 1.0, x)[0];
        double prev = INFINITY, last = 0;
        bool monotone = true;
        for (int k : {1, 2, 4, 8, 16, 32, 64, 256}) {
            last = std::abs(ev.k_step_map(0.2, 1.0, x, k, StepScheme::heun)[0] - exact);
            monotone = monotone && last < prev;
            prev = last;
        }
        return Outcome{monotone ? last : INFINITY, 1e-5, monotone ? "" : "error not decreasing in k"};
    });
    add("flowmap", "tolerance_error_on_step_budget", [] {
        const FlowMapEvaluator ev(MixturePath(normal1(0, 1), two_mode_1d()), FlowMapOptions{1e-12, 1e-14, 3});
        try {
            ev.flow_map(0.0, 1.0, v1(0.3));
        } catch (const ToleranceError& e) {
            return flag(e.reached_time() < 1.0);
        }
        return flag(false, "no ToleranceError");
    });

    // rewards
    auto compounding = [](const MixturePath& path, const Reward& r, const FlowMapOptions& fopt) {
        const auto flow = std::make_shared<const FlowMapEvaluator>(path, fopt);
        const TimeDependentReward rt(r, {LookAhead::flowmap_exact, 4, StepScheme::heun}, flow);
        double err = 0;
        for (int i = 0; i < 20; ++i) {
            const double t = i / 19.0;
            for (int j = 0; j < 20; ++j) {
                Vec x = Vec::Constant(path.dim(), -3.0 + 6.0 * j / 19.0);
                if (path.dim() > 1) x[1] = 1.5 - 3.0 * j / 19.0;
                const RewardEval e = rt.evaluate(t, x);
                const double lhs = path.velocity(t, x).dot(e.gradient) + rt.time_derivative(t, x);
                err = std::max(err, std::abs(lhs - e.terminal));
            }
        }
        return err;
    };
    add("rewards", "compounding_identity_1d", [compounding, fm] {
        const MixturePath path(normal1(0, 1), normal1(1.5, 0.5));
        return max_error(compounding(path, Reward::quadratic(0.8, 1).with_offset(0.2), fm), 1e-4);
    });
    add("rewards", "compounding_identity_2d", [compounding, fm] {
        const MixturePath path(GaussianMixture::standard_normal(2), GaussianMixture::single(v2(1, -0.5), diag2(0.3, 2.0)));
        return max_error(compounding(path, Reward::linear(v2(0.5, -1.0)), fm), 1e-4);
    });
    add("rewards", "endpoint_values", [fm] {
        auto target = std::make_shared<const GaussianMixture>(two_mode_2d());
        const auto flow =
            std::make_shared<const FlowMapEvaluator>(MixturePath(GaussianMixture::standard_normal(2), *target), fm);
        const Reward r = Reward::log_responsibility(target, 1, 0.1);
        double err = 0;
        for (LookAhead m : {LookAhead::naive, LookAhead::denoiser, LookAhead::flowmap_exact, LookAhead::flowmap_ksteps}) {
            const TimeDependentReward rt(r, {m, 4, StepScheme::heun}, flow);
            for (const Vec& x : {v2(0.3, -1.0), v2(-2.0, 0.5)}) {
                err = std::max(err, std::abs(rt.value(0.0, x)));
                err = std::max(err, std::abs(rt.value(1.0, x) - r.value(x)));
            }
        }
        return max_error(err, 1e-12);
    });
    add("rewards", "gradient_matches_finite_differences", [fm, seed] {
        auto target = std::make_shared<const GaussianMixture>(two_mode_2d());
        const auto flow =
            std::make_shared<const FlowMapEvaluator>(MixturePath(GaussianMixture::standard_normal(2), *target), fm);
        const Reward r = Reward::log_responsibility(target, 1, 0.5);
        std::mt19937_64 eng(seed + 7);
        std::uniform_real_distribution<double> ut(0.1, 0.9), ux(-2, 2);
        double err = 0;
        for (LookAhead m : {LookAhead::naive, LookAhead::denoiser, LookAhead::flowmap_exact, LookAhead::flowmap_ksteps}) {
            const TimeDependentReward rt(r, {m, 4, StepScheme::heun}, flow);
            for (int i = 0; i < 5; ++i) {
                const double t = ut(eng);
                const Vec x = v2(ux(eng), ux(eng));
                const Vec g = finite_diff_grad([&](const Vec& y) { return rt.value(t, y); }, x, 1e-5);
                err = std::max(err, (rt.gradient(t, x) - g).norm() / std::max(1.0, g.norm()));
            }
        }
        return max_error(err, 1e-5);
    });
    add("rewards", "hutchinson_quadratic_laplacian", [fm, seed] {
        const auto flow = std::make_shared<const FlowMapEvaluator>(
            MixturePath(GaussianMixture::standard_normal(2), GaussianMixture::standard_normal(2)), fm);
        const TimeDependentReward rt(Reward::quadratic(1.0, 2), {LookAhead::naive, 4, StepScheme::heun}, flow);
        SplitMix64 a(seed), b(seed + 1);
        const Estimate small = rt.hutchinson_laplacian(1.0, v2(0.4, -0.2), {1000, 1e-3, ProbeDist::gaussian}, a);
        const Estimate big = rt.hutchinson_laplacian(1.0, v2(0.4, -0.2), {4000, 1e-3, ProbeDist::gaussian}, b);
        const double ratio = small.std_error / big.std_error;
        char buf[96];
        std::snprintf(buf, sizeof buf, "estimate %.4f, stderr ratio %.3f", small.value, ratio);
        const bool ok = std::abs(small.value + 2.0) <= 0.2 && std::abs(ratio - 2.0) <= 0.3;
        return Outcome{ok ? std::abs(small.value + 2.0) : INFINITY, 0.2, buf};
    });

    // tilt
    add("tilt", "base_drift_reproduces_untilted_step", [fm, seed] {
        const auto flow = std::make_shared<const FlowMapEvaluator>(MixturePath(normal1(0, 1), two_mode_1d()), fm);
        const TimeDependentReward tilted(Reward::linear(v1(0.7)), {}, flow);
        const TimeDependentReward plain(Reward::zero(1), {}, flow);
        SplitMix64 rng(seed);
        bool same = true;
        for (int i = 0; i < 20; ++i) {
            StepInput in{v1(standard_normal(rng, 1)[0]), 0.0, 0.05 * i, 0.05 * i + 0.01, standard_normal(rng, 1)};
            same = same && position_step(in, DriftChoice::base, tilted)[0] == position_step(in, DriftChoice::default_, plain)[0];
        }
        return flag(same, "chi = -eps step differs from the reward-free step");
    });
    add("tilt", "simplified_weight_is_terminal_reward", [fm] {
        const auto flow = std::make_shared<const FlowMapEvaluator>(MixturePath(normal1(0, 1), normal1(1, 0.5)), fm);
        const TimeDependentReward rt(Reward::quadratic(0.6, 1), {}, flow);
        double err = 0;
        for (double t : {0.0, 0.3, 0.8}) {
            const StepInput in{v1(0.7), 0.25, t, t + 0.02, v1(0.1)};
            const double expect = 0.25 + 0.02 * rt.reward().value(flow->flow_map(t, 1.0, in.x));
            err = std::max(err, std::abs(weight_step_simplified(in, rt) - expect));
        }
        return max_error(err, 1e-12);
    });
    add("tilt", "scheme_validation", [fm] {
        const auto flow = std::make_shared<const FlowMapEvaluator>(MixturePath(normal1(0, 1), normal1(0, 1)), fm);
        const TimeDependentReward naive(Reward::linear(v1(0.5)), {LookAhead::naive, 4, StepScheme::heun}, flow);
        const TimeDependentReward exact(Reward::linear(v1(0.5)), {}, flow);
        int rejected = 0;
        try {
            validate_scheme(DriftChoice::default_, WeightScheme::simplified, naive);
        } catch (const SchemeError&) {
            ++rejected;
        }
        try {
            validate_scheme(DriftChoice::local_tilt, WeightScheme::simplified, exact);
        } catch (const SchemeError&) {
            ++rejected;
        }
        validate_scheme(DriftChoice::default_, WeightScheme::simplified, exact);
        return flag(rejected == 2, "invalid combination accepted");
    });

    // smc
    auto linear_problem = [fm](double lambda) {
        const auto flow = std::make_shared<const FlowMapEvaluator>(MixturePath(normal1(0, 1), normal1(0, 1)), fm);
        return std::make_shared<const TimeDependentReward>(Reward::linear(v1(lambda)), LookAheadConfig{}, flow);
    };
    add("smc", "zero_reward_run_is_exact", [linear_problem, seed] {
        RunConfig cfg;
        cfg.particles = 64;
        cfg.times = uniform_times(20);
        cfg.seed = seed;
        const RunResult r = run(cfg, *linear_problem(0.0));
        double err = std::abs(r.log_z);
        for (double a : r.ensemble.logweights) err = std::max(err, std::abs(a));
        return max_error(err, 0.0);
    });
    add("smc", "thread_count_independence", [linear_problem, seed] {
        RunConfig cfg;
        cfg.particles = 64;
        cfg.times = uniform_times(20);
        cfg.seed = seed;
        cfg.threads = 1;
        const RunResult a = run(cfg, *linear_problem(1.0));
        cfg.threads = 3;
        const RunResult b = run(cfg, *linear_problem(1.0));
        bool same = a.ensemble.logweights == b.ensemble.logweights;
        for (std::size_t i = 0; i < a.ensemble.positions.size(); ++i) {
            same = same && a.ensemble.positions[i][0] == b.ensemble.positions[i][0];
        }
        return flag(same, "results depend on the worker count");
    });
    add("smc", "linear_tilt_mean", [linear_problem, seed, threads = opt.threads] {
        const auto rt = linear_problem(0.5);
        std::vector<double> means;
        for (int j = 0; j < 8; ++j) {
            RunConfig cfg;
            cfg.particles = 256;
            cfg.times = uniform_times(50);
            cfg.seed = seed + static_cast<std::uint64_t>(j);
            cfg.threads = threads;
            means.push_back(weighted_expectation(run(cfg, *rt).ensemble, [](const Vec& x) { return x[0]; }));
        }
        double m = 0, ss = 0;
        for (double x : means) m += x;
        m /= 8;
        for (double x : means) ss += (x - m) * (x - m);
        const double se = std::sqrt(ss / 7 / 8);
        char buf[64];
        std::snprintf(buf, sizeof buf, "mean %.4f +- %.4f", m, se);
        return Outcome{std::abs(m - 0.5), 3 * se, buf};
    });
    add("smc", "single_clone_search_is_plain_run", [linear_problem, seed] {
        RunConfig cfg;
        cfg.particles = 32;
        cfg.times = uniform_times(10);
        cfg.seed = seed;
        cfg.trigger = ResampleTrigger::none;
        const RunResult plain = run(cfg, *linear_problem(1.0));
        cfg.mode = RunMode::searching;
        const RunResult search = run(cfg, *linear_problem(1.0));
        bool same = true;
        for (std::size_t i = 0; i < plain.ensemble.positions.size(); ++i) {
            same = same && plain.ensemble.positions[i][0] == search.ensemble.positions[i][0];
        }
        return flag(same);
    });
    add("smc", "ess_bounds", [] {
        const double full = ess({0.3, 0.3, 0.3, 0.3});
        const double one = ess({0.0, -800.0, -800.0});
        return max_error(std::max(std::abs(full - 4.0), std::abs(one - 1.0)), 1e-12);
    });

    // diagnostics
    auto trace_of = [](std::vector<double> times, std::vector<double> d) {
        DiscrepancyTrace tr;
        tr.times = std::move(times);
        tr.d_hat = std::move(d);
        return tr;
    };
    add("diagnostics", "discrepancy_example", [] {
        return max_error(std::abs(incremental_discrepancy({1, 1}, {1, 3}) - std::log(1.25)), 1e-12);
    });
    add("diagnostics", "zero_reward_has_no_barrier", [linear_problem, seed] {
        RunConfig cfg;
        cfg.particles = 64;
        cfg.times = uniform_times(20);
        cfg.seed = seed;
        const auto tr = discrepancy_trace(run(cfg, *linear_problem(0.0)));
        return max_error(std::max(std::abs(total_discrepancy(tr)), thermodynamic_length(tr).total()), 1e-10);
    });
    add("diagnostics", "length_bound_and_quality_range", [trace_of, seed] {
        std::mt19937_64 eng(seed);
        std::exponential_distribution<double> ed(5.0);
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            const int k = 2 + static_cast<int>(eng() % 50);
            std::vector<double> d(k);
            for (double& x : d) x = ed(eng);
            const auto tr = trace_of(uniform_times(k), d);
            const double lambda = thermodynamic_length(tr).total();
            const double q = quality_ratio(tr);
            ok = ok && lambda <= std::sqrt(k * total_discrepancy(tr)) * (1 + 1e-12) && q > 0 && q <= 1 + 1e-12;
        }
        return flag(ok);
    });
    add("diagnostics", "refinement_equalizes_and_keeps_constant", [trace_of] {
        const auto ref = refine_schedule(thermodynamic_length(trace_of({0, 0.5, 1}, {0.09, 0.01})), 2);
        const double err = std::abs(ref.times[1] - 1.0 / 3.0);
        const std::vector<double> uneven{0, 0.1, 0.35, 0.6, 1};
        const auto same = refine_schedule(thermodynamic_length(trace_of(uneven, {0.02, 0.02, 0.02, 0.02})), 4);
        return Outcome{same.times == uneven ? err : INFINITY, 1e-14, {}};
    });

    // oracles
    add("oracles", "tilt_normalizer_by_quadrature", [] {
        double err = 0;
        for (double lam : {-1.0, 0.5, 2.0}) {
            const auto t = gaussian_tilt_linear(0.5, 1.5, lam);
            const int n = 60000;
            const double lo = 0.5 - 12 * std::sqrt(1.5), h = 24 * std::sqrt(1.5) / n;
            double s = 0;
            for (int i = 0; i <= n; ++i) {
                const double x = lo + i * h;
                s += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(lam * x - 0.5 * (x - 0.5) * (x - 0.5) / 1.5);
            }
            s *= h / std::sqrt(2 * M_PI * 1.5);
            err = std::max(err, std::abs(std::exp(t.f_hat) * s - 1.0));
        }
        return max_error(err, 1e-8);
    });
    add("oracles", "snis_matches_closed_form", [seed] {
        SplitMix64 rng(seed);
        const Estimate e = snis_tilted_expectation(normal1(0, 1), Reward::linear(v1(0.5)), [](const Vec& x) { return x[0]; },
                                                   200000, rng);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.5f +- %.5f", e.value, e.std_error);
        return Outcome{std::abs(e.value - 0.5), 4 * e.std_error, buf};
    });
    return out;
}

}  // namespace

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const std::vector<std::string>& verify_modules() {
    static const std::vector<std::string> names{"interpolant", "flowmap", "rewards", "tilt",
                                                "smc",         "diagnostics", "oracles"};
    return names;
}

VerifyReport run_verify(const VerifyOptions& opt) {
    for (const auto& m : opt.only) {
        if (std::find(verify_modules().begin(), verify_modules().end(), m) == verify_modules().end()) {
            throw std::invalid_argument("unknown verify module '" + m + "'");
        }
    }
    if (!(opt.rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    VerifyReport report;
    for (const Check& c : build_checks(opt)) {
        if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), c.module) == opt.only.end()) continue;
        CheckResult r;
        r.module = c.module;
        r.name = c.name;
        const auto start = std::chrono::steady_clock::now();
        try {
            const Outcome o = c.body();
            r.measured = o.measured;
            r.tolerance = o.tolerance;
            r.detail = o.detail;
            r.passed = std::isfinite(o.measured) && o.measured <= o.tolerance;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.checks.push_back(r);
    }
    return report;
}

std::string format_report(const VerifyReport& report) {
    std::string out;
    char line[512];
    std::snprintf(line, sizeof line, "%-12s %-42s %-5s %12s %12s %8s  %s\n", "module", "check", "", "measured",
                  "tolerance", "seconds", "detail");
    out += line;
    int failed = 0;
    for (const auto& c : report.checks) {
        failed += !c.passed;
        std::snprintf(line, sizeof line, "%-12s %-42s %-5s %12.3e %12.3e %8.2f  %s\n", c.module.c_str(), c.name.c_str(),
                      c.passed ? "PASS" : "FAIL", c.measured, c.tolerance, c.seconds, c.detail.c_str());
        out += line;
    }
    std::snprintf(line, sizeof line, "%zu checks, %d failed\n", report.checks.size(), failed);
    out += line;
    return out;
}

}  // namespace fmtt

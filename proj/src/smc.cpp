#include "fmtt/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fmtt/errors.hpp"
#include "fmtt/mixture.hpp"
#include "fmtt/parallel.hpp"

namespace fmtt {

std::string to_string(RunMode mode) { return mode == RunMode::sampling ? "sampling" : "searching"; }

std::string to_string(ResampleTrigger trigger) {
    switch (trigger) {
        case ResampleTrigger::ess: return "ess";
        case ResampleTrigger::periodic: return "periodic";
        case ResampleTrigger::none: return "none";
    }
    return "?";
}

std::string to_string(Resampler resampler) {
    return resampler == Resampler::systematic ? "systematic" : "multinomial";
}

RunMode parse_run_mode(const std::string& name) {
    if (name == "sampling") return RunMode::sampling;
    if (name == "searching") return RunMode::searching;
    throw std::invalid_argument("unknown run mode '" + name + "'");
}

ResampleTrigger parse_resample_trigger(const std::string& name) {
    if (name == "ess") return ResampleTrigger::ess;
    if (name == "periodic") return ResampleTrigger::periodic;
    if (name == "none") return ResampleTrigger::none;
    throw std::invalid_argument("unknown resampling trigger '" + name + "'");
}

Resampler parse_resampler(const std::string& name) {
    if (name == "systematic") return Resampler::systematic;
    if (name == "multinomial") return Resampler::multinomial;
    throw std::invalid_argument("unknown resampler '" + name + "'");
}

std::vector<double> uniform_times(int steps) {
    if (steps < 1) throw std::invalid_argument("need at least one step");
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) t[k] = static_cast<double>(k) / steps;
    t.back() = 1.0;
    return t;
}

void validate(const RunConfig& cfg, const TimeDependentReward& rt) {
    if (cfg.particles < 1) throw std::invalid_argument("particles must be >= 1");
    if (cfg.clones < 1) throw std::invalid_argument("clones must be >= 1");
    const auto& t = cfg.times;
    if (t.size() < 2) throw std::invalid_argument("schedule needs at least two times");
    if (t.front() != 0.0 || t.back() != 1.0) throw std::invalid_argument("schedule must start at 0 and end at 1");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (!(t[k] > t[k - 1])) throw std::invalid_argument("schedule must be strictly increasing");
    }
    const int steps = static_cast<int>(t.size()) - 1;
    if (!(cfg.ess_threshold > 0.0 && cfg.ess_threshold <= 1.0)) {
        throw std::invalid_argument("ESS threshold must lie in (0, 1]");
    }
    if (cfg.trigger == ResampleTrigger::periodic) {
        if (cfg.every < 1) throw std::invalid_argument("periodic resampling needs every >= 1");
        if (steps % cfg.every != 0) throw std::invalid_argument("resampling period must divide the step count");
    }
    if (cfg.mode == RunMode::searching && cfg.trigger == ResampleTrigger::ess) {
        throw std::invalid_argument("searching mode carries no weights; use a periodic or no trigger");
    }
    if (cfg.mode == RunMode::sampling) validate_scheme(cfg.chi, cfg.weights, rt);
    if (cfg.weights == WeightScheme::expectation && cfg.weight_options.inner_samples < 1) {
        throw std::invalid_argument("inner_samples must be >= 1");
    }
    if (cfg.weights == WeightScheme::laplacian &&
        (cfg.weight_options.hutchinson.probes < 1 || !(cfg.weight_options.hutchinson.eps > 0.0))) {
        throw std::invalid_argument("Hutchinson probes must be >= 1 and eps > 0");
    }
    // Surfaces singular chi (eta at t=0 without offset) before any compute.
    const auto& sched = rt.path().schedule();
    for (int k = 0; k < steps; ++k) chi(cfg.chi, sched, t[k]);
}

double ess(const std::vector<double>& logweights) {
    if (logweights.empty()) throw DegenerateEnsembleError("empty ensemble");
    const double mx = *std::max_element(logweights.begin(), logweights.end());
    if (!std::isfinite(mx)) throw DegenerateEnsembleError("every particle has zero weight");
    double s1 = 0.0, s2 = 0.0;
    for (double a : logweights) {
        const double w = std::exp(a - mx);
        s1 += w;
        s2 += w * w;
    }
    return s1 * s1 / s2;
}

namespace {

std::vector<double> normalized(const std::vector<double>& logweights) {
    if (logweights.empty()) throw DegenerateEnsembleError("empty ensemble");
    const double mx = *std::max_element(logweights.begin(), logweights.end());
    if (!std::isfinite(mx)) throw DegenerateEnsembleError("every particle has zero weight");
    std::vector<double> p(logweights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logweights[i] - mx);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

ParticleEnsemble gather(const ParticleEnsemble& ens, const std::vector<std::size_t>& parents) {
    ParticleEnsemble out;
    out.clones = ens.clones;
    out.generation = ens.generation;
    const auto c = static_cast<std::size_t>(ens.clones);
    out.positions.reserve(parents.size() * c);
    for (std::size_t a : parents) {
        for (std::size_t j = 0; j < c; ++j) out.positions.push_back(ens.positions[a]);
    }
    out.logweights.assign(out.positions.size(), 0.0);
    return out;
}

}  // namespace

std::vector<std::size_t> resample_indices(const std::vector<double>& logweights, std::size_t n, Resampler scheme,
                                          SplitMix64& rng) {
    const auto p = normalized(logweights);
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    cdf.back() = 1.0;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::size_t> out(n);
    auto locate = [&](double u) {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    };
    if (scheme == Resampler::systematic) {
        const double u0 = unif(rng);
        for (std::size_t i = 0; i < n; ++i) out[i] = locate((static_cast<double>(i) + u0) / static_cast<double>(n));
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = locate(unif(rng));
    }
    return out;
}

ParticleEnsemble resample(const ParticleEnsemble& ens, SplitMix64& rng, Resampler scheme,
                          std::vector<std::size_t>* ancestors) {
    const std::size_t n = ens.positions.size() / static_cast<std::size_t>(ens.clones);
    auto idx = resample_indices(ens.logweights, n, scheme, rng);
    auto out = gather(ens, idx);
    if (ancestors) *ancestors = std::move(idx);
    return out;
}

std::vector<std::size_t> top_n_indices(const std::vector<double>& scores, std::size_t n) {
    if (n > scores.size()) throw std::invalid_argument("cannot select more particles than exist");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(n);
    std::sort(order.begin(), order.end());
    return order;
}

ParticleEnsemble top_n_select(const ParticleEnsemble& ens, const std::vector<double>& scores, std::size_t n) {
    if (scores.size() != ens.positions.size()) throw std::invalid_argument("one score per particle required");
    return gather(ens, top_n_indices(scores, n));
}

double log_z_smc(const std::vector<double>& event_log_means, const std::vector<double>& logweights) {
    double acc = 0.0;
    for (double v : event_log_means) acc += v;
    return acc + log_sum_exp(logweights) - std::log(static_cast<double>(logweights.size()));
}

double log_z_smc(const RunResult& result, int step) {
    if (step < 0 || step >= static_cast<int>(result.trace.size())) throw std::out_of_range("step out of range");
    return result.trace[static_cast<std::size_t>(step)].log_z;
}

double z_smc(const RunResult& result, int step) { return std::exp(log_z_smc(result, step)); }

double weighted_mean(const std::vector<double>& logweights, const std::vector<double>& values) {
    if (values.size() != logweights.size()) throw std::invalid_argument("size mismatch");
    const auto p = normalized(logweights);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * values[i];
    return acc;
}

double weighted_expectation(const ParticleEnsemble& ens, const std::function<double(const Vec&)>& h) {
    std::vector<double> v(ens.positions.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = h(ens.positions[i]);
    return weighted_mean(ens.logweights, v);
}

RunResult run(const RunConfig& cfg, const TimeDependentReward& rt) {
    validate(cfg, rt);
    const auto& path = rt.path();
    const auto& sched = path.schedule();
    const int d = path.dim();
    const int steps = static_cast<int>(cfg.times.size()) - 1;
    const auto n = static_cast<std::size_t>(cfg.particles);
    const auto c = static_cast<std::size_t>(cfg.clones);
    const std::size_t total = n * c;
    const bool sampling = cfg.mode == RunMode::sampling;
    const int workers = worker_count(cfg.threads);

    RunResult res;
    res.mode = cfg.mode;
    res.times = cfg.times;

    ParticleEnsemble& ens = res.ensemble;
    ens.clones = cfg.clones;
    {
        SplitMix64 init = substream(cfg.seed, StreamPurpose::init);
        const auto draws = path.base().sample(n, init);
        ens.positions.reserve(total);
        for (const auto& x : draws) {
            for (std::size_t j = 0; j < c; ++j) ens.positions.push_back(x);
        }
        ens.logweights.assign(total, 0.0);
    }

    std::vector<PointState> cur(total);
    parallel_for(total, workers, [&](std::size_t p) { cur[p] = evaluate_point(rt, 0.0, ens.positions[p]); });

    double event_log_sum = 0.0;
    auto current_values = [&] {
        std::vector<double> v(total);
        for (std::size_t p = 0; p < total; ++p) v[p] = cur[p].reward.value;
        return v;
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.trace.push_back({0, 0.0, static_cast<double>(total), false, sampling ? 0.0 : nan,
                         weighted_mean(ens.logweights, current_values())});

    for (int k = 0; k < steps; ++k) {
        const double t = cfg.times[k];
        const double tn = cfg.times[k + 1];
        const double chi_t = chi(cfg.chi, sched, t);
        const double eps_t = sched.epsilon(t);
        const double chi_n = (sampling && cfg.weights == WeightScheme::ito) ? chi(cfg.chi, sched, tn) : 0.0;
        const double eps_n = sched.epsilon(tn);

        std::vector<double> prev = ens.logweights;
        std::vector<double> incr(total, 0.0);
        parallel_for(total, workers, [&](std::size_t p) {
            SplitMix64 noise_rng = substream(cfg.seed, StreamPurpose::propagate, p, static_cast<std::uint64_t>(k));
            StepInput in;
            in.x = ens.positions[p];
            in.A = ens.logweights[p];
            in.t = t;
            in.t_next = tn;
            in.noise = standard_normal(noise_rng, d);
            const Vec x_next = position_step(in, chi_t, eps_t, cur[p]);
            PointState next = evaluate_point(rt, tn, x_next);
            if (sampling) {
                double a = in.A;
                switch (cfg.weights) {
                    case WeightScheme::simplified: a = weight_step_simplified(in, cur[p]); break;
                    case WeightScheme::laplacian: {
                        SplitMix64 h = substream(cfg.seed, StreamPurpose::hutchinson, p, static_cast<std::uint64_t>(k));
                        a = weight_step_laplacian(in, chi_t, rt, cur[p], cfg.weight_options, h);
                        break;
                    }
                    case WeightScheme::ito:
                        a = weight_step_ito(in, chi_t, eps_t, chi_n, eps_n, rt, cur[p], next.reward.gradient);
                        break;
                    case WeightScheme::expectation: {
                        SplitMix64 inner = substream(cfg.seed, StreamPurpose::inner, p, static_cast<std::uint64_t>(k));
                        a = weight_step_expectation(in, chi_t, eps_t, rt, cur[p], cfg.weight_options, inner);
                        break;
                    }
                }
                incr[p] = a - in.A;
                ens.logweights[p] = a;
            }
            ens.positions[p] = x_next;
            cur[p] = std::move(next);
        });
        ens.generation = k + 1;
        res.prev_logweights.push_back(std::move(prev));
        res.log_increments.push_back(std::move(incr));

        TraceRow row{k + 1, tn, sampling ? ess(ens.logweights) : static_cast<double>(total), false, nan,
                     weighted_mean(ens.logweights, current_values())};
        double log_mean = 0.0;
        if (sampling) {
            log_mean = log_sum_exp(ens.logweights) - std::log(static_cast<double>(total));
            row.log_z = event_log_sum + log_mean;
        }

        const bool interior = k + 1 < steps;
        bool fire = false;
        if (interior) {
            if (cfg.trigger == ResampleTrigger::periodic) fire = (k + 1) % cfg.every == 0;
            if (cfg.trigger == ResampleTrigger::ess) fire = row.ess < cfg.ess_threshold * static_cast<double>(total);
        }
        if (fire) {
            std::vector<std::size_t> parents;
            ParticleEnsemble next;
            if (sampling) {
                SplitMix64 rr = substream(cfg.seed, StreamPurpose::resample, static_cast<std::uint64_t>(k + 1));
                next = resample(ens, rr, cfg.resampler, &parents);
                res.events.push_back({k + 1, log_mean, parents});
                event_log_sum += log_mean;
            } else {
                parents = top_n_indices(current_values(), n);
                next = top_n_select(ens, current_values(), n);
                res.events.push_back({k + 1, nan, parents});
            }
            std::vector<PointState> carried;
            carried.reserve(total);
            for (std::size_t a : parents) {
                for (std::size_t j = 0; j < c; ++j) carried.push_back(cur[a]);
            }
            cur = std::move(carried);
            next.generation = ens.generation;
            ens = std::move(next);
            row.resampled = true;
        }
        res.trace.push_back(row);
    }

    res.terminal_rewards.resize(total);
    for (std::size_t p = 0; p < total; ++p) res.terminal_rewards[p] = cur[p].reward.value;
    res.log_z = sampling ? res.trace.back().log_z : nan;
    return res;
}

}  // namespace fmtt

#include "fmtt/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fmtt/errors.hpp"
#include "fmtt/io.hpp"
#include "fmtt/oracles.hpp"

namespace fmtt {

namespace {

namespace fs = std::filesystem;

struct Stat {
    double value = 0.0;
    double std_error = 0.0;
};

json to_json(const Stat& s) { return {{"value", s.value}, {"std_error", s.std_error}}; }

// Mean across repeats with its standard error; a single repeat falls back to
// the within-run error supplied by the caller (NaN when there is none).
Stat across(const std::vector<double>& v, double single_se = NAN) {
    Stat s;
    for (double x : v) s.value += x;
    s.value /= static_cast<double>(v.size());
    if (v.size() < 2) {
        s.std_error = single_se;
        return s;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - s.value) * (x - s.value);
    s.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return s;
}

std::vector<double> normalized(const std::vector<double>& logw) {
    const double lse = log_sum_exp(logw);
    std::vector<double> p(logw.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logw[i] - lse);
    return p;
}

// Self-normalized estimate with its delta-method standard error.
Stat weighted(const std::vector<double>& p, const std::vector<double>& h) {
    Stat s;
    for (std::size_t i = 0; i < p.size(); ++i) s.value += p[i] * h[i];
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) var += p[i] * p[i] * (h[i] - s.value) * (h[i] - s.value);
    s.std_error = std::sqrt(var);
    return s;
}

double entropy(const std::vector<double>& resp) {
    double h = 0.0;
    for (double q : resp) {
        if (q > 0.0) h -= q * std::log(q);
    }
    return h;
}

// Observables reported for every sampling run: coordinates of x, the terminal
// reward and, for log-responsibility rewards, the posterior mass of the
// rewarded component.
struct Observables {
    std::vector<std::string> names;
    std::vector<std::function<double(const Vec&)>> fns;
};

Observables observables(const ExperimentConfig& cfg, const Problem& p) {
    Observables o;
    for (int d = 0; d < cfg.target.dim(); ++d) {
        o.names.push_back("x" + std::to_string(d));
        o.fns.push_back([d](const Vec& x) { return x[d]; });
    }
    const Reward* r = &p.reward->reward();
    o.names.push_back("reward");
    o.fns.push_back([r](const Vec& x) { return r->value(x); });
    if (cfg.reward.kind == "log_responsibility") {
        auto target = p.target;
        const std::size_t c = cfg.reward.component;
        o.names.push_back("mode_mass");
        o.fns.push_back([target, c](const Vec& x) { return target->responsibilities(x)[c]; });
    }
    return o;
}

// Oracle values for the observables: closed form for a single 1D Gaussian
// with a linear or quadratic reward (and for a zero reward on the mean),
// self-normalized importance sampling from the target otherwise.
json oracle_values(const ExperimentConfig& cfg, const Problem& p, const Observables& obs) {
    const Reward& r = p.reward->reward();
    const bool gaussian1d = cfg.target.size() == 1 && cfg.target.dim() == 1;
    if (gaussian1d && (cfg.reward.kind == "linear" || cfg.reward.kind == "quadratic" || cfg.reward.kind == "zero")) {
        const double m = cfg.target.means()[0][0], v = cfg.target.covariances()[0](0, 0);
        const GaussianTilt t = cfg.reward.kind == "zero" ? GaussianTilt{m, v, 0.0} : gaussian_tilt_closed_form(m, v, r);
        double reward_mean = r.offset();
        if (cfg.reward.kind == "linear") reward_mean += r.lambda()[0] * t.mean;
        if (cfg.reward.kind == "quadratic") reward_mean += -0.5 * r.gamma() * (t.variance + t.mean * t.mean);
        return {{"method", "closed_form"},
                {"x0", {{"value", t.mean}, {"std_error", 0.0}}},
                {"reward", {{"value", reward_mean}, {"std_error", 0.0}}},
                {"f_hat", t.f_hat}};
    }
    json out = {{"method", "snis"}, {"samples", cfg.oracle_samples}};
    for (std::size_t i = 0; i < obs.fns.size(); ++i) {
        SplitMix64 rng = substream(cfg.seed, StreamPurpose::oracle);
        const Estimate e = snis_tilted_expectation(cfg.target, r, obs.fns[i], cfg.oracle_samples, rng);
        out[obs.names[i]] = {{"value", e.value}, {"std_error", e.std_error}};
    }
    return out;
}

void prepare(const ExperimentConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_json((fs::path(out_dir) / "config_resolved.json").string(), to_json(cfg));
}

std::string file_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string indexed(const std::string& stem, int j, int count) {
    return count == 1 ? stem + ".csv" : stem + "_" + std::to_string(j) + ".csv";
}

json diagnostics_summary(const std::vector<RunResult>& results, const DiscrepancyTrace& combined,
                         const DiagnosticsSpec& spec) {
    const DiscrepancyOptions opt{spec.paper_literal};
    std::vector<double> d_total, lambda, quality;
    for (const auto& r : results) {
        const auto tr = discrepancy_trace(r, opt);
        d_total.push_back(total_discrepancy(tr));
        lambda.push_back(thermodynamic_length(tr).total());
        try {
            quality.push_back(quality_ratio(tr));
        } catch (const DomainError&) {
        }
    }
    json out = {{"D_total", to_json(across(d_total))},
                {"Lambda", to_json(across(lambda))},
                {"combined", {{"D_total", total_discrepancy(combined)}, {"Lambda", thermodynamic_length(combined).total()}}},
                {"estimator", spec.multi_run && results.size() > 1 ? "multi_run" : "mean_of_single_runs"},
                {"sign", spec.paper_literal ? "paper_literal" : "consistent"}};
    if (quality.empty()) {
        out["quality_ratio"] = {{"value", nullptr}, {"std_error", nullptr}, {"defined", false}};
    } else {
        json q = to_json(across(quality));
        q["defined"] = true;
        q["runs_defined"] = quality.size();
        out["quality_ratio"] = q;
    }
    return out;
}

void require_mode(const ExperimentConfig& cfg, RunMode mode, const std::string& command) {
    if (cfg.run.mode != mode) {
        throw ConfigError("run.mode", command + " needs mode \"" + to_string(mode) + "\"");
    }
}

}  // namespace

std::uint64_t repeat_seed(std::uint64_t seed, int round, int repeat) {
    return seed + 1000003ULL * static_cast<std::uint64_t>(round) + static_cast<std::uint64_t>(repeat);
}

std::vector<RunResult> run_repeats(const ExperimentConfig& cfg, const Problem& problem, int round) {
    std::vector<RunResult> out;
    for (int j = 0; j < cfg.repeats; ++j) {
        RunConfig rc = cfg.run;
        rc.seed = repeat_seed(cfg.seed, round, j);
        out.push_back(run(rc, *problem.reward));
    }
    return out;
}

DiscrepancyTrace combined_trace(const std::vector<RunResult>& results, const DiagnosticsSpec& spec) {
    const DiscrepancyOptions opt{spec.paper_literal};
    if (spec.multi_run && results.size() > 1) return discrepancy_trace_multi(results, opt);
    DiscrepancyTrace mean = discrepancy_trace(results.front(), opt);
    for (std::size_t j = 1; j < results.size(); ++j) {
        const auto tr = discrepancy_trace(results[j], opt);
        for (std::size_t k = 0; k < mean.d_hat.size(); ++k) mean.d_hat[k] += tr.d_hat[k];
    }
    for (double& d : mean.d_hat) d /= static_cast<double>(results.size());
    return mean;
}

json cmd_sample(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_mode(cfg, RunMode::sampling, "sample");
    const Problem problem = build_problem(cfg);
    prepare(cfg, out_dir);
    const auto results = run_repeats(cfg, problem);
    const Observables obs = observables(cfg, problem);

    json estimates = json::object();
    std::vector<std::vector<double>> per_run(obs.fns.size());
    std::vector<double> single_se(obs.fns.size()), log_z;
    for (std::size_t j = 0; j < results.size(); ++j) {
        const auto& r = results[j];
        const auto p = normalized(r.ensemble.logweights);
        for (std::size_t i = 0; i < obs.fns.size(); ++i) {
            std::vector<double> h(p.size());
            for (std::size_t n = 0; n < p.size(); ++n) h[n] = obs.fns[i](r.ensemble.positions[n]);
            const Stat s = weighted(p, h);
            per_run[i].push_back(s.value);
            single_se[i] = s.std_error;
        }
        log_z.push_back(r.log_z);
        if (cfg.output.csv) write_trace_csv(file_in(out_dir, indexed("trace", static_cast<int>(j), cfg.repeats)), r);
    }
    for (std::size_t i = 0; i < obs.fns.size(); ++i) estimates[obs.names[i]] = to_json(across(per_run[i], single_se[i]));

    const json oracle = oracle_values(cfg, problem, obs);
    json comparison = json::object();
    for (const auto& name : obs.names) {
        if (!oracle.contains(name)) continue;
        const double est = estimates[name]["value"], se = estimates[name]["std_error"];
        const double ov = oracle[name]["value"], ose = oracle[name]["std_error"];
        const double combined = std::sqrt(se * se + ose * ose);
        comparison[name] = {{"difference", est - ov},
                            {"combined_std_error", combined},
                            {"within_3_std_error", std::abs(est - ov) <= 3.0 * combined}};
    }

    json summary = {{"command", "sample"},
                    {"repeats", cfg.repeats},
                    {"particles", cfg.run.particles},
                    {"steps", cfg.run.times.size() - 1},
                    {"estimates", estimates},
                    {"mean_reward", estimates["reward"]},
                    {"tilted_mean", estimates["x0"]},
                    {"oracle_mean", oracle["x0"]},
                    {"oracle", oracle},
                    {"comparison", comparison},
                    {"log_z", to_json(across(log_z))}};
    if (cfg.diagnostics.enabled) {
        const DiscrepancyTrace combined = combined_trace(results, cfg.diagnostics);
        if (cfg.output.csv) write_diagnostics_csv(file_in(out_dir, "diagnostics.csv"), combined);
        summary["diagnostics"] = diagnostics_summary(results, combined, cfg.diagnostics);
    }
    write_json(file_in(out_dir, "summary.json"), summary);
    return summary;
}

json cmd_search(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_mode(cfg, RunMode::searching, "search");
    const Problem problem = build_problem(cfg);
    prepare(cfg, out_dir);
    ExperimentConfig base_cfg = cfg;
    base_cfg.run.clones = 1;
    base_cfg.run.trigger = ResampleTrigger::none;
    base_cfg.run.every = 0;
    const auto search = run_repeats(cfg, problem);
    const auto baseline = run_repeats(base_cfg, problem);
    const bool classes = cfg.target.size() > 1;

    std::ofstream rewards;
    if (cfg.output.csv) {
        rewards.open(file_in(out_dir, "terminal_rewards.csv"), std::ios::binary);
        rewards << "run,repeat,particle,reward\n";
    }
    auto collect = [&](const std::vector<RunResult>& runs, const char* label, std::vector<double>& means,
                       std::vector<double>& entropies) {
        for (std::size_t j = 0; j < runs.size(); ++j) {
            const auto& r = runs[j];
            double m = 0.0, h = 0.0;
            for (std::size_t n = 0; n < r.terminal_rewards.size(); ++n) {
                m += r.terminal_rewards[n];
                if (classes) h += entropy(cfg.target.responsibilities(r.ensemble.positions[n]));
                if (rewards.is_open()) {
                    rewards << label << ',' << j << ',' << n << ',' << format_number(r.terminal_rewards[n]) << '\n';
                }
            }
            means.push_back(m / static_cast<double>(r.terminal_rewards.size()));
            entropies.push_back(h / static_cast<double>(r.terminal_rewards.size()));
        }
    };
    std::vector<double> sm, se, bm, be;
    collect(search, "search", sm, se);
    collect(baseline, "baseline", bm, be);
    if (cfg.output.csv) {
        for (std::size_t j = 0; j < search.size(); ++j) {
            write_trace_csv(file_in(out_dir, indexed("trace", static_cast<int>(j), cfg.repeats)), search[j]);
        }
    }
    int wins = 0;
    std::vector<double> diff;
    for (std::size_t j = 0; j < sm.size(); ++j) {
        wins += sm[j] > bm[j];
        diff.push_back(sm[j] - bm[j]);
    }
    json summary = {{"command", "search"},
                    {"repeats", cfg.repeats},
                    {"particles", cfg.run.particles},
                    {"clones", cfg.run.clones},
                    {"search", {{"mean_reward", to_json(across(sm))}}},
                    {"baseline", {{"mean_reward", to_json(across(bm))}, {"clones", 1}, {"selection", false}}},
                    {"mean_reward_difference", to_json(across(diff))},
                    {"search_wins", wins}};
    if (classes) {
        summary["search"]["class_entropy"] = to_json(across(se));
        summary["baseline"]["class_entropy"] = to_json(across(be));
    }
    write_json(file_in(out_dir, "summary.json"), summary);
    return summary;
}

json cmd_diagnose(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_mode(cfg, RunMode::sampling, "diagnose");
    const Problem problem = build_problem(cfg);
    prepare(cfg, out_dir);
    const auto results = run_repeats(cfg, problem);
    const DiscrepancyTrace combined = combined_trace(results, cfg.diagnostics);
    write_diagnostics_csv(file_in(out_dir, "diagnostics.csv"), combined);
    const auto refined = refine_schedule(thermodynamic_length(combined), static_cast<int>(cfg.run.times.size()) - 1);
    write_schedule(file_in(out_dir, "schedule_refined.json"), refined);
    json summary = {{"command", "diagnose"}, {"repeats", cfg.repeats}, {"warnings", json::array()}};
    summary.update(diagnostics_summary(results, combined, cfg.diagnostics));
    if (refined.flat) summary["warnings"].push_back("flat barrier profile; refined schedule equals the input");
    write_json(file_in(out_dir, "summary.json"), summary);
    return summary;
}

json cmd_refine(const ExperimentConfig& cfg, const std::string& out_dir) {
    require_mode(cfg, RunMode::sampling, "refine");
    prepare(cfg, out_dir);
    ExperimentConfig round_cfg = cfg;
    json rounds = json::array();
    json summary = {{"command", "refine"}, {"warnings", json::array()}};
    const int steps = static_cast<int>(cfg.run.times.size()) - 1;
    for (int r = 0; r < cfg.diagnostics.refine_rounds; ++r) {
        const Problem problem = build_problem(round_cfg);
        const auto results = run_repeats(round_cfg, problem, r);
        const DiscrepancyTrace combined = combined_trace(results, cfg.diagnostics);
        write_diagnostics_csv(file_in(out_dir, "diagnostics_round_" + std::to_string(r) + ".csv"), combined);
        const auto refined = refine_schedule(thermodynamic_length(combined), steps);
        write_schedule(file_in(out_dir, "schedule_round_" + std::to_string(r) + ".json"), refined);
        json entry = diagnostics_summary(results, combined, cfg.diagnostics);
        entry["round"] = r;
        entry["times"] = round_cfg.run.times;
        rounds.push_back(entry);
        if (refined.flat) {
            summary["warnings"].push_back("flat barrier profile in round " + std::to_string(r) +
                                          "; schedule returned unchanged");
            write_schedule(file_in(out_dir, "schedule_refined.json"), refined);
            break;
        }
        round_cfg.run.times = refined.times;
        write_schedule(file_in(out_dir, "schedule_refined.json"), refined);
    }
    summary["rounds"] = rounds;
    write_json(file_in(out_dir, "summary.json"), summary);
    return summary;
}

}  // namespace fmtt

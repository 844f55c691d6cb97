#include "fmtt/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fmtt/errors.hpp"

namespace fmtt {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object view that remembers which keys were read so leftovers can be reported.
class Block {
public:
    Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing required key");
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number()) throw ConfigError(path(key), "expected a number");
        return v.get<double>();
    }

    long long integer(const std::string& key, long long fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
        return v.get<long long>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError(path(key), "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_string()) throw ConfigError(path(key), "expected a string");
        return v.get<std::string>();
    }

    Block child(const std::string& key) { return Block(at(key), path(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
        }
    }

private:
    json j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Wraps a parse_* helper so its message carries the key path.
template <class F>
auto parse_enum(Block& b, const std::string& key, const std::string& fallback, F parse) {
    const std::string name = b.string(key, fallback);
    try {
        return parse(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(b.path(key), e.what());
    }
}

std::vector<double> number_array(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
    return out;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

std::vector<double> times_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object with a \"times\" array");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "times" && it.key() != "flat") throw ConfigError(join(path, it.key()), "unknown key");
    }
    if (!j.contains("times")) throw ConfigError(join(path, "times"), "missing required key");
    return number_array(j.at("times"), join(path, "times"));
}

}  // namespace

GaussianMixture mixture_from_json(const json& j, const std::string& path) {
    Block b(j, path);
    const auto weights = number_array(b.at("weights"), b.path("weights"));
    const json& mj = b.at("means");
    const json& cj = b.at("covariances");
    b.finish();
    if (!mj.is_array() || mj.size() != weights.size()) {
        throw ConfigError(b.path("means"), "expected one mean per weight");
    }
    if (!cj.is_array() || cj.size() != weights.size()) {
        throw ConfigError(b.path("covariances"), "expected one covariance per weight");
    }
    std::vector<Vec> means;
    std::vector<Mat> covs;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const std::string mp = b.path("means") + "[" + std::to_string(i) + "]";
        const std::string cp = b.path("covariances") + "[" + std::to_string(i) + "]";
        const auto m = number_array(mj[i], mp);
        if (m.empty() || m.size() > static_cast<std::size_t>(kMaxDim)) {
            throw ConfigError(mp, "dimension must be between 1 and " + std::to_string(kMaxDim));
        }
        means.push_back(to_vec(m));
        const int d = static_cast<int>(m.size());
        if (!cj[i].is_array() || cj[i].size() != m.size()) throw ConfigError(cp, "expected a square matrix matching the mean");
        Mat c(d, d);
        for (int r = 0; r < d; ++r) {
            const auto row = number_array(cj[i][r], cp + "[" + std::to_string(r) + "]");
            if (row.size() != m.size()) throw ConfigError(cp, "expected a square matrix matching the mean");
            for (int s = 0; s < d; ++s) c(r, s) = row[s];
        }
        covs.push_back(c);
    }
    try {
        return GaussianMixture(weights, means, covs);
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

json mixture_to_json(const GaussianMixture& m) {
    json covs = json::array();
    json means = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        means.push_back(vec_json(m.means()[i]));
        json c = json::array();
        for (int r = 0; r < m.dim(); ++r) {
            json row = json::array();
            for (int s = 0; s < m.dim(); ++s) row.push_back(m.covariances()[i](r, s));
            c.push_back(row);
        }
        covs.push_back(c);
    }
    return {{"weights", m.weights()}, {"means", means}, {"covariances", covs}};
}

std::vector<double> read_schedule(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file, "cannot open schedule file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(file, std::string("invalid JSON: ") + e.what());
    }
    return times_from_json(j, file);
}

ExperimentConfig parse_config(const json& j, const std::string& base_dir) {
    ExperimentConfig cfg;
    Block root(j, "");
    cfg.seed = root.unsigned_integer("seed", 0);

    {
        Block p = root.child("problem");
        cfg.target = mixture_from_json(p.at("target"), p.path("target"));
        cfg.base = p.has("base") ? mixture_from_json(p.at("base"), p.path("base"))
                                 : GaussianMixture::standard_normal(cfg.target.dim());
        p.finish();
        if (cfg.base.dim() != cfg.target.dim()) throw ConfigError("problem", "base and target dimensions differ");
    }

    {
        Block s = root.has("schedule") ? root.child("schedule") : Block(json::object(), "schedule");
        const auto kind = parse_enum(s, "interpolant", "linear", parse_interpolant_kind);
        const auto diff = parse_enum(s, "epsilon", "decaying", parse_diffusion_kind);
        const double scale = s.number("epsilon_scale", 1.0);
        const double offset = s.number("eta_offset", 0.0);
        try {
            cfg.schedule = InterpolantSchedule(kind, diff, scale, offset);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("schedule", e.what());
        }
        const int sources = s.has("steps") + s.has("times") + s.has("times_file");
        if (sources > 1) throw ConfigError("schedule", "give only one of steps, times, times_file");
        if (s.has("times")) {
            cfg.run.times = number_array(s.at("times"), s.path("times"));
        } else if (s.has("times_file")) {
            std::filesystem::path f = s.string("times_file", "");
            if (f.is_relative()) f = std::filesystem::path(base_dir) / f;
            cfg.run.times = read_schedule(f.string());
        } else {
            const long long steps = s.integer("steps", 200);
            if (steps < 1) throw ConfigError(s.path("steps"), "must be >= 1");
            cfg.run.times = uniform_times(static_cast<int>(steps));
        }
        s.finish();
    }

    {
        Block r = root.has("run") ? root.child("run") : Block(json::object(), "run");
        RunConfig& rc = cfg.run;
        rc.mode = parse_enum(r, "mode", "sampling", parse_run_mode);
        rc.particles = static_cast<int>(r.integer("particles", 128));
        rc.clones = static_cast<int>(r.integer("clones", 1));
        rc.trigger = parse_enum(r, "trigger", rc.mode == RunMode::sampling ? "ess" : "none", parse_resample_trigger);
        rc.ess_threshold = r.number("ess_threshold", 0.85);
        rc.every = static_cast<int>(r.integer("every", 0));
        rc.resampler = parse_enum(r, "resampler", "systematic", parse_resampler);
        rc.chi = parse_enum(r, "chi", "default", parse_drift_choice);
        rc.weights = parse_enum(r, "weights", "simplified", parse_weight_scheme);
        rc.weight_options.inner_samples = static_cast<int>(r.integer("inner_samples", 400));
        rc.weight_options.time_step = r.number("time_step", 1e-4);
        rc.weight_options.paper_literal = r.boolean("paper_literal", false);
        if (r.has("hutchinson")) {
            Block h = r.child("hutchinson");
            rc.weight_options.hutchinson.probes = static_cast<int>(h.integer("probes", 64));
            rc.weight_options.hutchinson.eps = h.number("eps", 1e-3);
            rc.weight_options.hutchinson.dist = parse_enum(h, "dist", "gaussian", parse_probe_dist);
            h.finish();
            if (rc.weight_options.hutchinson.probes < 1) throw ConfigError(h.path("probes"), "must be >= 1");
            if (!(rc.weight_options.hutchinson.eps > 0)) throw ConfigError(h.path("eps"), "must be > 0");
        }
        rc.threads = static_cast<int>(r.integer("threads", 0));
        cfg.repeats = static_cast<int>(r.integer("repeats", 1));
        r.finish();
        if (cfg.repeats < 1) throw ConfigError("run.repeats", "must be >= 1");
        if (rc.threads < 0) throw ConfigError("run.threads", "must be >= 0");
        if (!(rc.weight_options.time_step > 0)) throw ConfigError("run.time_step", "must be > 0");
    }

    {
        Block w = root.has("reward") ? root.child("reward") : Block(json::object(), "reward");
        RewardSpec& rs = cfg.reward;
        rs.kind = w.string("kind", "zero");
        rs.offset = w.number("offset", 0.0);
        rs.look_ahead.mode = parse_enum(w, "mode", "flowmap_exact", parse_look_ahead);
        rs.look_ahead.k = static_cast<int>(w.integer("k", 4));
        rs.look_ahead.scheme = parse_enum(w, "scheme", "heun", parse_step_scheme);
        if (rs.look_ahead.k < 1) throw ConfigError(w.path("k"), "must be >= 1");
        Block params = w.has("params") ? w.child("params") : Block(json::object(), w.path("params"));
        const int d = cfg.target.dim();
        if (rs.kind == "zero") {
        } else if (rs.kind == "linear") {
            const auto lam = number_array(params.at("lambda"), params.path("lambda"));
            if (static_cast<int>(lam.size()) != d) throw ConfigError(params.path("lambda"), "length must match the dimension");
            rs.lambda = to_vec(lam);
        } else if (rs.kind == "quadratic") {
            rs.gamma = params.number("gamma", 1.0);
        } else if (rs.kind == "log_responsibility") {
            const long long c = params.integer("component", 0);
            if (c < 0 || c >= static_cast<long long>(cfg.target.size())) {
                throw ConfigError(params.path("component"), "no such target component");
            }
            rs.component = static_cast<std::size_t>(c);
            rs.scale = params.number("scale", 1.0);
        } else {
            throw ConfigError(w.path("kind"), "unknown reward kind '" + rs.kind + "'");
        }
        params.finish();
        w.finish();
    }

    if (root.has("flowmap")) {
        Block f = root.child("flowmap");
        cfg.flowmap.rel_tol = f.number("rel_tol", cfg.flowmap.rel_tol);
        cfg.flowmap.abs_tol = f.number("abs_tol", cfg.flowmap.abs_tol);
        cfg.flowmap.max_steps = static_cast<int>(f.integer("max_steps", cfg.flowmap.max_steps));
        f.finish();
        if (!(cfg.flowmap.rel_tol > 0) || !(cfg.flowmap.abs_tol > 0)) throw ConfigError("flowmap", "tolerances must be > 0");
        if (cfg.flowmap.max_steps < 1) throw ConfigError("flowmap.max_steps", "must be >= 1");
    }

    if (root.has("diagnostics")) {
        Block g = root.child("diagnostics");
        cfg.diagnostics.enabled = g.boolean("enabled", true);
        cfg.diagnostics.multi_run = g.boolean("multi_run", false);
        cfg.diagnostics.paper_literal = g.boolean("paper_literal", false);
        cfg.diagnostics.refine_rounds = static_cast<int>(g.integer("refine_rounds", 3));
        g.finish();
        if (cfg.diagnostics.refine_rounds < 1) throw ConfigError("diagnostics.refine_rounds", "must be >= 1");
    }

    if (root.has("output")) {
        Block o = root.child("output");
        cfg.output.directory = o.string("directory", cfg.output.directory);
        if (o.has("formats")) {
            const json& f = o.at("formats");
            if (!f.is_array()) throw ConfigError(o.path("formats"), "expected an array of strings");
            cfg.output.csv = cfg.output.json = false;
            for (const auto& v : f) {
                const std::string s = v.is_string() ? v.get<std::string>() : "";
                if (s == "csv") cfg.output.csv = true;
                else if (s == "json") cfg.output.json = true;
                else throw ConfigError(o.path("formats"), "formats are \"csv\" and \"json\"");
            }
        }
        o.finish();
    }

    if (root.has("oracle")) {
        Block o = root.child("oracle");
        const long long m = o.integer("samples", static_cast<long long>(cfg.oracle_samples));
        o.finish();
        if (m < 100) throw ConfigError("oracle.samples", "must be >= 100");
        cfg.oracle_samples = static_cast<std::size_t>(m);
    }

    root.finish();
    cfg.run.seed = cfg.seed;
    build_problem(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file, "cannot open config file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(file, std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j, std::filesystem::path(file).parent_path().string());
}

json to_json(const ExperimentConfig& cfg) {
    const RunConfig& rc = cfg.run;
    json reward = {{"kind", cfg.reward.kind},
                   {"offset", cfg.reward.offset},
                   {"mode", to_string(cfg.reward.look_ahead.mode)},
                   {"k", cfg.reward.look_ahead.k},
                   {"scheme", to_string(cfg.reward.look_ahead.scheme)}};
    if (cfg.reward.kind == "linear") reward["params"] = {{"lambda", vec_json(cfg.reward.lambda)}};
    if (cfg.reward.kind == "quadratic") reward["params"] = {{"gamma", cfg.reward.gamma}};
    if (cfg.reward.kind == "log_responsibility") {
        reward["params"] = {{"component", cfg.reward.component}, {"scale", cfg.reward.scale}};
    }
    json formats = json::array();
    if (cfg.output.csv) formats.push_back("csv");
    if (cfg.output.json) formats.push_back("json");
    return {
        {"seed", cfg.seed},
        {"problem", {{"base", mixture_to_json(cfg.base)}, {"target", mixture_to_json(cfg.target)}}},
        {"schedule",
         {{"interpolant", to_string(cfg.schedule.kind())},
          {"epsilon", to_string(cfg.schedule.diffusion())},
          {"epsilon_scale", cfg.schedule.epsilon_scale()},
          {"eta_offset", cfg.schedule.eta_offset()},
          {"times", rc.times}}},
        {"run",
         {{"mode", to_string(rc.mode)},
          {"particles", rc.particles},
          {"clones", rc.clones},
          {"trigger", to_string(rc.trigger)},
          {"ess_threshold", rc.ess_threshold},
          {"every", rc.every},
          {"resampler", to_string(rc.resampler)},
          {"chi", to_string(rc.chi)},
          {"weights", to_string(rc.weights)},
          {"inner_samples", rc.weight_options.inner_samples},
          {"hutchinson",
           {{"probes", rc.weight_options.hutchinson.probes},
            {"eps", rc.weight_options.hutchinson.eps},
            {"dist", to_string(rc.weight_options.hutchinson.dist)}}},
          {"time_step", rc.weight_options.time_step},
          {"paper_literal", rc.weight_options.paper_literal},
          {"threads", rc.threads},
          {"repeats", cfg.repeats}}},
        {"reward", reward},
        {"flowmap",
         {{"rel_tol", cfg.flowmap.rel_tol}, {"abs_tol", cfg.flowmap.abs_tol}, {"max_steps", cfg.flowmap.max_steps}}},
        {"diagnostics",
         {{"enabled", cfg.diagnostics.enabled},
          {"multi_run", cfg.diagnostics.multi_run},
          {"paper_literal", cfg.diagnostics.paper_literal},
          {"refine_rounds", cfg.diagnostics.refine_rounds}}},
        {"output", {{"directory", cfg.output.directory}, {"formats", formats}}},
        {"oracle", {{"samples", cfg.oracle_samples}}},
    };
}

void apply_paper_literal(ExperimentConfig& cfg) {
    cfg.run.weight_options.paper_literal = true;
    cfg.diagnostics.paper_literal = true;
}

Reward make_reward(const RewardSpec& spec, int dim, std::shared_ptr<const GaussianMixture> target) {
    Reward r;
    if (spec.kind == "zero") r = Reward::zero(dim);
    else if (spec.kind == "linear") r = Reward::linear(spec.lambda);
    else if (spec.kind == "quadratic") r = Reward::quadratic(spec.gamma, dim);
    else if (spec.kind == "log_responsibility") r = Reward::log_responsibility(std::move(target), spec.component, spec.scale);
    else throw ConfigError("reward.kind", "unknown reward kind '" + spec.kind + "'");
    return spec.offset != 0.0 ? r.with_offset(spec.offset) : r;
}

Problem build_problem(const ExperimentConfig& cfg) {
    Problem p;
    try {
        auto target = std::make_shared<const GaussianMixture>(cfg.target);
        p.target = target;
        p.flow = std::make_shared<const FlowMapEvaluator>(MixturePath(cfg.base, cfg.target, cfg.schedule), cfg.flowmap);
        p.reward = std::make_shared<const TimeDependentReward>(make_reward(cfg.reward, cfg.target.dim(), target),
                                                               cfg.reward.look_ahead, p.flow);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("problem", e.what());
    }
    try {
        validate(cfg.run, *p.reward);
    } catch (const std::exception& e) {
        throw ConfigError("run", e.what());
    }
    return p;
}

}  // namespace fmtt

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fmtt/config.hpp"
#include "fmtt/diagnostics.hpp"
#include "fmtt/errors.hpp"
#include "fmtt/oracles.hpp"
#include "fmtt/runner.hpp"
#include "fmtt/smc.hpp"
#include "fmtt/tilt.hpp"
#include "fmtt/verify.hpp"

namespace py = pybind11;
using namespace fmtt;

namespace {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

Vec to_vec(const VecX& v) {
    if (v.size() < 1 || v.size() > kMaxDim) throw std::invalid_argument("dimension must be between 1 and 8");
    return Vec(v);
}

Mat to_mat(const MatX& m) {
    if (m.rows() < 1 || m.rows() > kMaxDim || m.cols() != m.rows()) throw std::invalid_argument("expected a square matrix of size 1..8");
    return Mat(m);
}

GaussianMixture make_mixture(const std::vector<double>& w, const std::vector<VecX>& means, const std::vector<MatX>& covs) {
    std::vector<Vec> m;
    std::vector<Mat> c;
    for (const auto& x : means) m.push_back(to_vec(x));
    for (const auto& x : covs) c.push_back(to_mat(x));
    return GaussianMixture(w, m, c);
}

json parse_json(const std::string& s) { return json::parse(s); }

py::dict run_to_dict(const RunResult& r) {
    const std::size_t n = r.ensemble.positions.size();
    const int d = n ? static_cast<int>(r.ensemble.positions[0].size()) : 0;
    MatX pos(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) pos.row(static_cast<Eigen::Index>(i)) = VecX(r.ensemble.positions[i]).transpose();
    py::list trace;
    for (const auto& row : r.trace) {
        py::dict t;
        t["step"] = row.step;
        t["t"] = row.t;
        t["ess"] = row.ess;
        t["resampled"] = row.resampled;
        t["logZ"] = row.log_z;
        t["mean_reward"] = row.mean_reward;
        trace.append(t);
    }
    py::dict out;
    out["positions"] = pos;
    out["logweights"] = r.ensemble.logweights;
    out["terminal_rewards"] = r.terminal_rewards;
    out["log_z"] = r.log_z;
    out["times"] = r.times;
    out["trace"] = trace;
    out["resampling_steps"] = [&] {
        std::vector<int> s;
        for (const auto& e : r.events) s.push_back(e.step);
        return s;
    }();
    return out;
}

// Holds everything a run needs so Python sees one object.
struct Problem_ {
    std::shared_ptr<const GaussianMixture> target;
    std::shared_ptr<const FlowMapEvaluator> flow;
    std::shared_ptr<const TimeDependentReward> reward;
};

}  // namespace

PYBIND11_MODULE(_fmtt, m) {
    m.doc() = "Flow-map trajectory tilting on Gaussian-mixture transports";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<SchemeError>(m, "SchemeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ToleranceError>(m, "ToleranceError", PyExc_RuntimeError);
    py::register_exception<DegenerateEnsembleError>(m, "DegenerateEnsembleError", PyExc_RuntimeError);

    py::class_<InterpolantSchedule>(m, "Schedule")
        .def(py::init([](const std::string& interpolant, const std::string& epsilon, double scale, double offset) {
                 return InterpolantSchedule(parse_interpolant_kind(interpolant), parse_diffusion_kind(epsilon), scale, offset);
             }),
             py::arg("interpolant") = "linear", py::arg("epsilon") = "decaying", py::arg("epsilon_scale") = 1.0,
             py::arg("eta_offset") = 0.0)
        .def("eval", [](const InterpolantSchedule& s, double t) {
            const auto v = s.eval(t);
            py::dict d;
            d["alpha"] = v.alpha;
            d["beta"] = v.beta;
            d["alpha_dot"] = v.alpha_dot;
            d["beta_dot"] = v.beta_dot;
            d["epsilon"] = v.epsilon;
            d["eta"] = v.eta;
            return d;
        });

    py::class_<GaussianMixture>(m, "GaussianMixture")
        .def(py::init(&make_mixture), py::arg("weights"), py::arg("means"), py::arg("covariances"))
        .def_static("standard_normal", &GaussianMixture::standard_normal)
        .def_property_readonly("dim", &GaussianMixture::dim)
        .def("log_density", [](const GaussianMixture& g, const VecX& x) { return g.log_density(to_vec(x)); })
        .def("score", [](const GaussianMixture& g, const VecX& x) { return VecX(g.score(to_vec(x))); })
        .def("responsibilities", [](const GaussianMixture& g, const VecX& x) { return g.responsibilities(to_vec(x)); })
        .def("sample", [](const GaussianMixture& g, std::size_t n, std::uint64_t seed) {
            SplitMix64 rng(seed);
            const auto xs = g.sample(n, rng);
            MatX out(static_cast<Eigen::Index>(n), g.dim());
            for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = VecX(xs[i]).transpose();
            return out;
        });

    py::class_<FlowMapEvaluator, std::shared_ptr<FlowMapEvaluator>>(m, "FlowMap")
        .def(py::init([](const GaussianMixture& base, const GaussianMixture& target, const InterpolantSchedule& sched,
                         double rel_tol, double abs_tol, int max_steps) {
                 return std::make_shared<FlowMapEvaluator>(MixturePath(base, target, sched),
                                                           FlowMapOptions{rel_tol, abs_tol, max_steps});
             }),
             py::arg("base"), py::arg("target"), py::arg("schedule") = InterpolantSchedule{}, py::arg("rel_tol") = 1e-8,
             py::arg("abs_tol") = 1e-10, py::arg("max_steps") = 100000)
        .def("__call__", [](const FlowMapEvaluator& f, double s, double t, const VecX& x) {
            return VecX(f.flow_map(s, t, to_vec(x)));
        })
        .def("jacobian", [](const FlowMapEvaluator& f, double s, double t, const VecX& x) {
            const auto r = f.flow_map_jacobian(s, t, to_vec(x));
            return py::make_tuple(VecX(r.endpoint), MatX(r.jacobian));
        })
        .def("k_step", [](const FlowMapEvaluator& f, double s, double t, const VecX& x, int k, const std::string& scheme) {
            return VecX(f.k_step_map(s, t, to_vec(x), k, parse_step_scheme(scheme)));
        }, py::arg("s"), py::arg("t"), py::arg("x"), py::arg("k"), py::arg("scheme") = "heun")
        .def("velocity", [](const FlowMapEvaluator& f, double t, const VecX& x) { return VecX(f.path().velocity(t, to_vec(x))); })
        .def("score", [](const FlowMapEvaluator& f, double t, const VecX& x) { return VecX(f.path().score(t, to_vec(x))); })
        .def("denoiser", [](const FlowMapEvaluator& f, double t, const VecX& x) { return VecX(f.path().denoiser(t, to_vec(x))); });

    py::class_<Problem_>(m, "Problem")
        .def(py::init([](const GaussianMixture& base, const GaussianMixture& target, const std::string& reward,
                         const std::vector<double>& params, const std::string& look_ahead, int k,
                         const InterpolantSchedule& sched, double rel_tol) {
                 Problem_ p;
                 p.target = std::make_shared<const GaussianMixture>(target);
                 p.flow = std::make_shared<const FlowMapEvaluator>(MixturePath(base, target, sched),
                                                                   FlowMapOptions{rel_tol, rel_tol * 1e-2, 100000});
                 RewardSpec spec;
                 spec.kind = reward;
                 if (reward == "linear") {
                     spec.lambda = to_vec(Eigen::Map<const VecX>(params.data(), static_cast<Eigen::Index>(params.size())));
                 } else if (reward == "quadratic") {
                     spec.gamma = params.empty() ? 1.0 : params[0];
                 } else if (reward == "log_responsibility") {
                     spec.component = params.empty() ? 0 : static_cast<std::size_t>(params[0]);
                     spec.scale = params.size() > 1 ? params[1] : 1.0;
                 }
                 LookAheadConfig la{parse_look_ahead(look_ahead), k, StepScheme::heun};
                 p.reward = std::make_shared<const TimeDependentReward>(make_reward(spec, target.dim(), p.target), la, p.flow);
                 return p;
             }),
             py::arg("base"), py::arg("target"), py::arg("reward") = "zero", py::arg("params") = std::vector<double>{},
             py::arg("look_ahead") = "flowmap_exact", py::arg("k") = 4, py::arg("schedule") = InterpolantSchedule{},
             py::arg("rel_tol") = 1e-8,
             "Reward params: linear -> lambda vector; quadratic -> [gamma]; log_responsibility -> [component, scale].")
        .def("reward", [](const Problem_& p, const VecX& x) { return p.reward->reward().value(to_vec(x)); })
        .def("reward_t", [](const Problem_& p, double t, const VecX& x) { return p.reward->value(t, to_vec(x)); })
        .def("grad_reward_t", [](const Problem_& p, double t, const VecX& x) { return VecX(p.reward->gradient(t, to_vec(x))); })
        .def("dt_reward_t", [](const Problem_& p, double t, const VecX& x) { return p.reward->time_derivative(t, to_vec(x)); })
        .def("laplacian_t", [](const Problem_& p, double t, const VecX& x, int probes, std::uint64_t seed) {
            SplitMix64 rng(seed);
            const Estimate e = p.reward->hutchinson_laplacian(t, to_vec(x), {probes, 1e-3, ProbeDist::gaussian}, rng);
            return py::make_tuple(e.value, e.std_error);
        }, py::arg("t"), py::arg("x"), py::arg("probes") = 64, py::arg("seed") = 0)
        .def("run", [](const Problem_& p, int particles, int steps, const std::string& mode, int clones,
                       const std::string& trigger, double ess_threshold, int every, const std::string& chi,
                       const std::string& weights, std::uint64_t seed, int threads, std::vector<double> times) {
            RunConfig cfg;
            cfg.particles = particles;
            cfg.times = times.empty() ? uniform_times(steps) : std::move(times);
            cfg.mode = parse_run_mode(mode);
            cfg.clones = clones;
            cfg.trigger = parse_resample_trigger(trigger);
            cfg.ess_threshold = ess_threshold;
            cfg.every = every;
            cfg.chi = parse_drift_choice(chi);
            cfg.weights = parse_weight_scheme(weights);
            cfg.seed = seed;
            cfg.threads = threads;
            validate(cfg, *p.reward);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(cfg, *p.reward);
            }
            py::dict out = run_to_dict(r);
            const auto tr = discrepancy_trace(r);
            out["D_hat"] = tr.d_hat;
            return out;
        },
             py::arg("particles") = 128, py::arg("steps") = 200, py::arg("mode") = "sampling", py::arg("clones") = 1,
             py::arg("trigger") = "ess", py::arg("ess_threshold") = 0.85, py::arg("every") = 0, py::arg("chi") = "default",
             py::arg("weights") = "simplified", py::arg("seed") = 0, py::arg("threads") = 0,
             py::arg("times") = std::vector<double>{});

    py::class_<DiscrepancyOptions>(m, "DiscrepancyOptions")
        .def(py::init<>())
        .def_readwrite("paper_literal", &DiscrepancyOptions::paper_literal);
    m.def("ess", &ess, py::arg("logweights"));
    m.def("incremental_discrepancy", &incremental_discrepancy, py::arg("weights"), py::arg("increments"),
          py::arg("opt") = DiscrepancyOptions{});
    m.def("thermodynamic_length", [](const std::vector<double>& times, const std::vector<double>& d_hat) {
        return thermodynamic_length(DiscrepancyTrace{times, d_hat, 1, 0}).total();
    }, py::arg("times"), py::arg("d_hat"));
    m.def("quality_ratio", [](const std::vector<double>& times, const std::vector<double>& d_hat) {
        return quality_ratio(DiscrepancyTrace{times, d_hat, 1, 0});
    }, py::arg("times"), py::arg("d_hat"));
    m.def("refine_schedule", [](const std::vector<double>& times, const std::vector<double>& d_hat, int steps) {
        const auto r = refine_schedule(thermodynamic_length(DiscrepancyTrace{times, d_hat, 1, 0}), steps);
        return py::make_tuple(r.times, r.flat);
    }, py::arg("times"), py::arg("d_hat"), py::arg("steps"));
    m.def("var_model", &var_model, py::arg("d_total"), py::arg("r_eff"), py::arg("n"));

    m.def("gaussian_tilt_linear", [](double mean, double var, double lambda) {
        const auto g = gaussian_tilt_linear(mean, var, lambda);
        return py::make_tuple(g.mean, g.variance, g.f_hat);
    });
    m.def("gaussian_tilt_quadratic", [](double mean, double var, double gamma) {
        const auto g = gaussian_tilt_quadratic(mean, var, gamma);
        return py::make_tuple(g.mean, g.variance, g.f_hat);
    });
    m.def("snis_tilted_mean", [](const Problem_& p, std::size_t samples, std::uint64_t seed,
                                 const std::function<double(const VecX&)>& h) {
        SplitMix64 rng(seed);
        const Estimate e = snis_tilted_expectation(*p.target, p.reward->reward(),
                                                   [&](const Vec& x) { return h(VecX(x)); }, samples, rng);
        return py::make_tuple(e.value, e.std_error);
    }, py::arg("problem"), py::arg("samples"), py::arg("seed"), py::arg("h"));

    m.def("run_command", [](const std::string& command, const std::string& config_json, const std::string& out_dir,
                            const std::string& base_dir) {
        ExperimentConfig cfg = parse_config(parse_json(config_json), base_dir);
        json s;
        {
            py::gil_scoped_release release;
            if (command == "sample") s = cmd_sample(cfg, out_dir);
            else if (command == "search") s = cmd_search(cfg, out_dir);
            else if (command == "diagnose") s = cmd_diagnose(cfg, out_dir);
            else if (command == "refine") s = cmd_refine(cfg, out_dir);
            else throw std::invalid_argument("unknown command '" + command + "'");
        }
        return s.dump();
    }, py::arg("command"), py::arg("config_json"), py::arg("out_dir"), py::arg("base_dir") = ".");
    m.def("resolve_config", [](const std::string& config_json) { return to_json(parse_config(parse_json(config_json))).dump(); });

    m.def("verify", [](const std::vector<std::string>& only, double rel_tol) {
        VerifyOptions opt;
        opt.only = only;
        opt.rel_tol = rel_tol;
        VerifyReport rep;
        {
            py::gil_scoped_release release;
            rep = run_verify(opt);
        }
        py::list out;
        for (const auto& c : rep.checks) {
            py::dict d;
            d["module"] = c.module;
            d["check"] = c.name;
            d["passed"] = c.passed;
            d["measured"] = c.measured;
            d["tolerance"] = c.tolerance;
            out.append(d);
        }
        return out;
    }, py::arg("only") = std::vector<std::string>{}, py::arg("rel_tol") = 1e-10);
}

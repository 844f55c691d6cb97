#include "fmtt/tilt.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmtt/errors.hpp"
#include "fmtt/mixture.hpp"

namespace fmtt {

std::string to_string(DriftChoice choice) {
    switch (choice) {
        case DriftChoice::default_: return "default";
        case DriftChoice::tilted_score: return "tilted_score";
        case DriftChoice::local_tilt: return "local_tilt";
        case DriftChoice::base: return "base";
    }
    return "?";
}

DriftChoice parse_drift_choice(const std::string& name) {
    if (name == "default") return DriftChoice::default_;
    if (name == "tilted_score") return DriftChoice::tilted_score;
    if (name == "local_tilt") return DriftChoice::local_tilt;
    if (name == "base") return DriftChoice::base;
    throw std::invalid_argument("unknown chi choice '" + name + "'");
}

double chi(DriftChoice choice, const InterpolantSchedule& sched, double t) {
    switch (choice) {
        case DriftChoice::default_: return 0.0;
        case DriftChoice::tilted_score: return sched.eta(t);
        case DriftChoice::local_tilt: return sched.epsilon(t);
        case DriftChoice::base: return -sched.epsilon(t);
    }
    return 0.0;
}

std::string to_string(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::simplified: return "simplified";
        case WeightScheme::laplacian: return "laplacian";
        case WeightScheme::ito: return "ito";
        case WeightScheme::expectation: return "expectation";
    }
    return "?";
}

WeightScheme parse_weight_scheme(const std::string& name) {
    if (name == "simplified") return WeightScheme::simplified;
    if (name == "laplacian") return WeightScheme::laplacian;
    if (name == "ito") return WeightScheme::ito;
    if (name == "expectation") return WeightScheme::expectation;
    throw std::invalid_argument("unknown weight scheme '" + name + "'");
}

namespace {

double step_size(const StepInput& in) {
    const double dt = in.t_next - in.t;
    if (!(dt > 0.0)) throw std::invalid_argument("step needs t < t_next");
    if (!(in.t >= 0.0 && in.t_next <= 1.0)) throw std::invalid_argument("step times must lie in [0, 1]");
    return dt;
}

// D in the Laplacian and Ito updates.
double drift_term(const StepInput& in, const TimeDependentReward& rt, const PointState& at, double h) {
    if (rt.flow_map_mode()) return at.reward.terminal;
    return at.velocity.dot(at.reward.gradient) + rt.time_derivative(in.t, in.x, h);
}

}  // namespace

PointState evaluate_point(const TimeDependentReward& rt, double t, const Vec& x, bool need_score) {
    PointState out;
    if (need_score) {
        const auto dyn = rt.path().dynamics(t, x);
        out.velocity = dyn.velocity;
        out.score = dyn.score;
    } else {
        out.velocity = rt.path().velocity(t, x);
    }
    out.reward = rt.evaluate(t, x);
    return out;
}

Vec position_step(const StepInput& in, double chi_t, double eps_t, const PointState& at) {
    const double dt = step_size(in);
    if (in.noise.size() != in.x.size()) throw std::invalid_argument("noise dimension mismatch");
    if (!std::isfinite(chi_t) || !std::isfinite(eps_t)) {
        throw DomainError("non-finite drift multiplier at t = " + std::to_string(in.t));
    }
    Vec drift = at.velocity;
    if (eps_t != 0.0) drift += eps_t * at.score;
    drift += (chi_t + eps_t) * at.reward.gradient;
    if (!drift.allFinite()) throw DomainError("non-finite drift at t = " + std::to_string(in.t));
    return in.x + dt * drift + std::sqrt(2.0 * eps_t * dt) * in.noise;
}

Vec position_step(const StepInput& in, DriftChoice choice, const TimeDependentReward& rt) {
    const auto& sched = rt.path().schedule();
    const double c = chi(choice, sched, in.t);
    const double eps = sched.epsilon(in.t);
    return position_step(in, c, eps, evaluate_point(rt, in.t, in.x, eps != 0.0));
}

double weight_step_simplified(const StepInput& in, const PointState& at) {
    return in.A + step_size(in) * at.reward.terminal;
}

double weight_step_simplified(const StepInput& in, const TimeDependentReward& rt) {
    if (!rt.flow_map_mode()) throw SchemeError("simplified weights need a flow-map look-ahead");
    step_size(in);
    return in.A + (in.t_next - in.t) * rt.reward().value(rt.predict(in.t, in.x));
}

double weight_step_laplacian(const StepInput& in, double chi_t, const TimeDependentReward& rt,
                             const PointState& at, const WeightOptions& opt, SplitMix64& rng) {
    const double dt = step_size(in);
    if (rt.reward().is_zero()) return in.A;
    double bracket = drift_term(in, rt, at, opt.time_step);
    if (chi_t != 0.0) {
        const Vec& g = at.reward.gradient;
        const double lap = rt.hutchinson_laplacian(in.t, in.x, opt.hutchinson, rng).value;
        bracket += chi_t * (g.squaredNorm() + lap + g.dot(at.score));
    }
    return in.A + dt * bracket;
}

double weight_step_laplacian(const StepInput& in, DriftChoice choice, const TimeDependentReward& rt,
                             const WeightOptions& opt, SplitMix64& rng) {
    const double c = chi(choice, rt.path().schedule(), in.t);
    return weight_step_laplacian(in, c, rt, evaluate_point(rt, in.t, in.x), opt, rng);
}

double weight_step_ito(const StepInput& in, double chi_t, double eps_t, double chi_next, double eps_next,
                       const TimeDependentReward& rt, const PointState& at, const Vec& grad_next) {
    const double dt = step_size(in);
    if (in.noise.size() != in.x.size()) throw std::invalid_argument("noise dimension mismatch");
    if (rt.reward().is_zero()) return in.A;
    const Vec& g = at.reward.gradient;
    double a = in.A + dt * drift_term(in, rt, at, 1e-4);
    if (chi_t != 0.0) {
        if (!(eps_t > 0.0)) throw SchemeError("Ito weights need epsilon_t > 0 where chi_t != 0");
        a += dt * chi_t * (g.squaredNorm() + g.dot(at.score));
        a -= chi_t * std::sqrt(dt / (2.0 * eps_t)) * g.dot(in.noise);
    }
    if (chi_next != 0.0) {
        if (!(eps_next > 0.0)) throw SchemeError("Ito weights need epsilon_t' > 0 where chi_t' != 0");
        a += chi_next * std::sqrt(dt / (2.0 * eps_next)) * grad_next.dot(in.noise);
    }
    return a;
}

double weight_step_ito(const StepInput& in, const Vec& x_next, DriftChoice choice, const TimeDependentReward& rt) {
    const auto& sched = rt.path().schedule();
    const double c = chi(choice, sched, in.t);
    const double cn = chi(choice, sched, in.t_next);
    const Vec grad_next = cn != 0.0 ? rt.gradient(in.t_next, x_next) : Vec::Zero(in.x.size());
    return weight_step_ito(in, c, sched.epsilon(in.t), cn, sched.epsilon(in.t_next), rt, evaluate_point(rt, in.t, in.x),
                           grad_next);
}

double weight_step_expectation(const StepInput& in, double chi_t, double eps_t, const TimeDependentReward& rt,
                               const PointState& at, const WeightOptions& opt, SplitMix64& rng) {
    const double dt = step_size(in);
    if (opt.inner_samples < 1) throw std::invalid_argument("expectation weights need inner_samples >= 1");
    if (rt.reward().is_zero() && !opt.paper_literal) return in.A;
    const double r_now = at.reward.value;
    // Drift for the deterministic look-ahead term; the printed form uses b at t'.
    Vec b_det = at.velocity;
    if (opt.paper_literal) b_det = rt.path().velocity(in.t_next, in.x);
    auto deterministic = [&] { return rt.value(in.t_next, Vec(in.x + dt * b_det)) - r_now; };

    if (chi_t == 0.0) return in.A + deterministic();

    const double mag = std::abs(chi_t);
    const double noise_coef = (opt.paper_literal && chi_t < 0.0) ? std::sqrt(2.0 * eps_t * dt) : std::sqrt(2.0 * mag * dt);
    const Vec centre = in.x + dt * (at.velocity + mag * at.score);
    std::vector<double> logs(static_cast<std::size_t>(opt.inner_samples));
    for (auto& v : logs) {
        const Vec y = centre + noise_coef * standard_normal(rng, in.x.size());
        v = rt.value(in.t_next, y) - r_now;
    }
    const double log_mean = log_sum_exp(logs) - std::log(static_cast<double>(logs.size()));
    if (opt.paper_literal) {
        const double mean = std::exp(log_mean);
        return chi_t > 0.0 ? in.A + mean : in.A + 2.0 * deterministic() - mean;
    }
    return chi_t > 0.0 ? in.A + log_mean : in.A + 2.0 * deterministic() - log_mean;
}

double weight_step_expectation(const StepInput& in, DriftChoice choice, const TimeDependentReward& rt,
                               const WeightOptions& opt, SplitMix64& rng) {
    const auto& sched = rt.path().schedule();
    return weight_step_expectation(in, chi(choice, sched, in.t), sched.epsilon(in.t), rt,
                                   evaluate_point(rt, in.t, in.x), opt, rng);
}

void validate_scheme(DriftChoice choice, WeightScheme scheme, const TimeDependentReward& rt) {
    if (scheme == WeightScheme::simplified) {
        if (choice != DriftChoice::default_) throw SchemeError("simplified weights need chi = default");
        if (!rt.flow_map_mode()) throw SchemeError("simplified weights need a flow-map look-ahead");
    }
}

}  // namespace fmtt

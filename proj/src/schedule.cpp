#include "fmtt/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fmtt/errors.hpp"

namespace fmtt {

namespace {

void check_time(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("schedule time must lie in [0, 1], got " + std::to_string(t));
    }
}

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

InterpolantSchedule::InterpolantSchedule(InterpolantKind kind, DiffusionKind diffusion,
                                         double epsilon_scale, double eta_offset)
    : kind_(kind), diffusion_(diffusion), epsilon_scale_(epsilon_scale), eta_offset_(eta_offset) {
    if (!(epsilon_scale >= 0.0) || !std::isfinite(epsilon_scale)) {
        throw std::invalid_argument("epsilon scale must be finite and >= 0");
    }
    if (!(eta_offset >= 0.0) || !std::isfinite(eta_offset)) {
        throw std::invalid_argument("eta offset must be finite and >= 0");
    }
}

double InterpolantSchedule::alpha(double t) const {
    switch (kind_) {
        case InterpolantKind::linear: return 1.0 - t;
        case InterpolantKind::trigonometric: return t == 1.0 ? 0.0 : std::cos(kHalfPi * t);
    }
    return 0.0;
}

double InterpolantSchedule::beta(double t) const {
    switch (kind_) {
        case InterpolantKind::linear: return t;
        case InterpolantKind::trigonometric: return std::sin(kHalfPi * t);
    }
    return 0.0;
}

double InterpolantSchedule::alpha_dot(double t) const {
    switch (kind_) {
        case InterpolantKind::linear: return -1.0;
        case InterpolantKind::trigonometric: return -kHalfPi * std::sin(kHalfPi * t);
    }
    return 0.0;
}

double InterpolantSchedule::beta_dot(double t) const {
    switch (kind_) {
        case InterpolantKind::linear: return 1.0;
        case InterpolantKind::trigonometric: return t == 1.0 ? 0.0 : kHalfPi * std::cos(kHalfPi * t);
    }
    return 0.0;
}

double InterpolantSchedule::epsilon(double t) const {
    check_time(t);
    if (diffusion_ == DiffusionKind::constant) return epsilon_scale_;
    return epsilon_scale_ * alpha(t);
}

double InterpolantSchedule::eta(double t) const {
    check_time(t);
    const double a = alpha(t);
    if (a == 0.0) return 0.0;
    const double denom = beta(t) + eta_offset_;
    if (denom == 0.0) {
        throw DomainError("eta_t is singular at t = " + std::to_string(t) +
                          " (beta_t + offset = 0); use a positive eta offset");
    }
    return a * (beta_dot(t) / denom * a - alpha_dot(t));
}

ScheduleValues InterpolantSchedule::eval(double t) const {
    check_time(t);
    return {alpha(t), beta(t), alpha_dot(t), beta_dot(t), epsilon(t), eta(t)};
}

ScheduleValues schedule_eval(const InterpolantSchedule& sched, double t) { return sched.eval(t); }

std::string to_string(InterpolantKind kind) {
    return kind == InterpolantKind::linear ? "linear" : "trigonometric";
}

std::string to_string(DiffusionKind kind) {
    return kind == DiffusionKind::decaying ? "decaying" : "constant";
}

InterpolantKind parse_interpolant_kind(const std::string& name) {
    if (name == "linear") return InterpolantKind::linear;
    if (name == "trigonometric") return InterpolantKind::trigonometric;
    throw std::invalid_argument("unknown interpolant '" + name + "'");
}

DiffusionKind parse_diffusion_kind(const std::string& name) {
    if (name == "decaying") return DiffusionKind::decaying;
    if (name == "constant") return DiffusionKind::constant;
    throw std::invalid_argument("unknown epsilon kind '" + name + "'");
}

}  // namespace fmtt

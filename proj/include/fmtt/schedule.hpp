#pragma once

#include <string>

namespace fmtt {

enum class InterpolantKind { linear, trigonometric };

/// epsilon_t = scale * alpha_t (decaying) or epsilon_t = scale (constant).
enum class DiffusionKind { decaying, constant };

struct ScheduleValues {
    double alpha;
    double beta;
    double alpha_dot;
    double beta_dot;
    double epsilon;
    double eta;
};

/// Interpolant coefficients I_t = alpha_t x0 + beta_t x1 together with the
/// diffusion coefficient epsilon_t and the tilted-score multiplier eta_t.
class InterpolantSchedule {
public:
    InterpolantSchedule() = default;
    InterpolantSchedule(InterpolantKind kind, DiffusionKind diffusion, double epsilon_scale,
                        double eta_offset);

    static InterpolantSchedule linear(double epsilon_scale = 1.0, double eta_offset = 0.0) {
        return {InterpolantKind::linear, DiffusionKind::decaying, epsilon_scale, eta_offset};
    }

    double alpha(double t) const;
    double beta(double t) const;
    double alpha_dot(double t) const;
    double beta_dot(double t) const;
    double epsilon(double t) const;

    /// alpha_t (beta_dot_t / (beta_t + offset) alpha_t - alpha_dot_t).
    /// Throws DomainError where the denominator vanishes.
    double eta(double t) const;

    /// All coefficients at t; throws DomainError if eta is singular there.
    ScheduleValues eval(double t) const;

    InterpolantKind kind() const { return kind_; }
    DiffusionKind diffusion() const { return diffusion_; }
    double epsilon_scale() const { return epsilon_scale_; }
    double eta_offset() const { return eta_offset_; }

private:
    InterpolantKind kind_ = InterpolantKind::linear;
    DiffusionKind diffusion_ = DiffusionKind::decaying;
    double epsilon_scale_ = 1.0;
    double eta_offset_ = 0.0;
};

ScheduleValues schedule_eval(const InterpolantSchedule& sched, double t);

std::string to_string(InterpolantKind kind);
std::string to_string(DiffusionKind kind);
InterpolantKind parse_interpolant_kind(const std::string& name);
DiffusionKind parse_diffusion_kind(const std::string& name);

}  // namespace fmtt

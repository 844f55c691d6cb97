#include "fmtt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fmtt/errors.hpp"
#include "fmtt/mixture.hpp"

namespace fmtt {

double incremental_discrepancy_log(const std::vector<double>& prev_logweights,
                                   const std::vector<double>& log_increments, DiscrepancyOptions opt) {
    const std::size_t n = prev_logweights.size();
    if (n != log_increments.size()) throw std::invalid_argument("weights and increments differ in length");
    if (n < 2) throw std::invalid_argument("discrepancy needs at least two particles");
    std::vector<double> l0(n), l1(n), l2(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(log_increments[i])) throw std::invalid_argument("incremental weights must be positive and finite");
        l0[i] = prev_logweights[i];
        l1[i] = prev_logweights[i] + log_increments[i];
        l2[i] = prev_logweights[i] + 2.0 * log_increments[i];
    }
    const double g0 = log_sum_exp(l0), g1 = log_sum_exp(l1), g2 = log_sum_exp(l2);
    return g2 - 2.0 * g1 + (opt.paper_literal ? -g0 : g0);
}

double incremental_discrepancy(const std::vector<double>& prev_weights, const std::vector<double>& increments,
                               DiscrepancyOptions opt) {
    std::vector<double> lw(prev_weights.size()), lg(increments.size());
    for (std::size_t i = 0; i < prev_weights.size(); ++i) {
        if (!(prev_weights[i] >= 0.0)) throw std::invalid_argument("weights must be non-negative");
        lw[i] = std::log(prev_weights[i]);
    }
    for (std::size_t i = 0; i < increments.size(); ++i) {
        if (!(increments[i] > 0.0) || !std::isfinite(increments[i])) {
            throw std::invalid_argument("incremental weights must be positive");
        }
        lg[i] = std::log(increments[i]);
    }
    return incremental_discrepancy_log(lw, lg, opt);
}

DiscrepancyTrace discrepancy_trace(const RunResult& result, DiscrepancyOptions opt) {
    if (result.mode != RunMode::sampling) throw std::invalid_argument("discrepancies need a sampling run");
    DiscrepancyTrace tr;
    tr.times = result.times;
    tr.particles = static_cast<int>(result.ensemble.positions.size());
    for (std::size_t k = 0; k < result.log_increments.size(); ++k) {
        tr.d_hat.push_back(incremental_discrepancy_log(result.prev_logweights[k], result.log_increments[k], opt));
    }
    return tr;
}

DiscrepancyTrace discrepancy_trace_multi(const std::vector<RunResult>& results, DiscrepancyOptions opt) {
    if (results.empty()) throw std::invalid_argument("no runs supplied");
    const std::size_t steps = results.front().log_increments.size();
    for (const auto& r : results) {
        if (r.mode != RunMode::sampling) throw std::invalid_argument("discrepancies need sampling runs");
        if (r.log_increments.size() != steps || r.times != results.front().times) {
            throw std::invalid_argument("runs must share one schedule");
        }
    }
    DiscrepancyTrace tr;
    tr.times = results.front().times;
    tr.runs = static_cast<int>(results.size());
    tr.particles = static_cast<int>(results.front().ensemble.positions.size());
    for (std::size_t k = 0; k < steps; ++k) {
        std::vector<double> l0, l1, l2;
        for (const auto& r : results) {
            const auto& lw = r.prev_logweights[k];
            const auto& lg = r.log_increments[k];
            // Zhat^{(k-1)} times the self-normalized weights of this run.
            const double scale = r.trace[k].log_z - log_sum_exp(lw);
            for (std::size_t i = 0; i < lw.size(); ++i) {
                l0.push_back(scale + lw[i]);
                l1.push_back(scale + lw[i] + lg[i]);
                l2.push_back(scale + lw[i] + 2.0 * lg[i]);
            }
        }
        const double g0 = log_sum_exp(l0), g1 = log_sum_exp(l1), g2 = log_sum_exp(l2);
        tr.d_hat.push_back(g2 - 2.0 * g1 + (opt.paper_literal ? -g0 : g0));
    }
    return tr;
}

double total_discrepancy(const DiscrepancyTrace& trace) {
    double s = 0.0;
    for (double d : trace.d_hat) s += d;
    return s;
}

BarrierProfile thermodynamic_length(const DiscrepancyTrace& trace) {
    BarrierProfile prof;
    prof.times = trace.times;
    if (prof.times.size() != trace.d_hat.size() + 1) throw std::invalid_argument("trace needs K + 1 knots");
    prof.lambda.push_back(0.0);
    double acc = 0.0;
    for (double d : trace.d_hat) {
        acc += std::sqrt(std::max(d, 0.0));
        prof.lambda.push_back(acc);
    }
    return prof;
}

double quality_ratio(const DiscrepancyTrace& trace) {
    double s = 0.0, r = 0.0;
    for (double d : trace.d_hat) {
        const double c = std::max(d, 0.0);
        s += c;
        r += std::sqrt(c);
    }
    if (!(s > 0.0)) throw DomainError("quality ratio undefined: total discrepancy is zero");
    return r * r / (static_cast<double>(trace.d_hat.size()) * s);
}

RefinedSchedule refine_schedule(const BarrierProfile& profile, int steps) {
    if (steps < 1) throw std::invalid_argument("refined schedule needs at least one step");
    const auto& t = profile.times;
    const auto& lam = profile.lambda;
    if (t.size() < 2 || t.size() != lam.size()) throw std::invalid_argument("malformed barrier profile");
    for (std::size_t k = 1; k < lam.size(); ++k) {
        if (lam[k] < lam[k - 1]) throw std::invalid_argument("barrier profile must be nondecreasing");
    }
    const double total = lam.back();
    if (!(total > 0.0)) return {t, true};

    RefinedSchedule out;
    out.times.resize(static_cast<std::size_t>(steps) + 1);
    out.times.front() = 0.0;
    out.times.back() = 1.0;
    const double snap = 1e-12 * total;
    std::size_t j = 1;
    for (int k = 1; k < steps; ++k) {
        const double level = total * static_cast<double>(k) / steps;
        while (j < lam.size() - 1 && lam[j] < level - snap) ++j;
        double tk;
        if (std::abs(lam[j] - level) <= snap) {
            // First knot reaching the level.
            std::size_t i = j;
            while (i > 0 && std::abs(lam[i - 1] - level) <= snap) --i;
            tk = t[i];
        } else {
            const double frac = (level - lam[j - 1]) / (lam[j] - lam[j - 1]);
            tk = t[j - 1] + frac * (t[j] - t[j - 1]);
        }
        out.times[static_cast<std::size_t>(k)] = tk;
    }
    for (std::size_t k = 1; k < out.times.size(); ++k) {
        if (!(out.times[k] > out.times[k - 1])) {
            throw std::runtime_error("refined schedule is not strictly increasing");
        }
    }
    return out;
}

double var_model(double d_total, double r_eff, double n) {
    if (!(r_eff >= 1.0) || !(n > 1.0)) throw std::invalid_argument("var_model needs R_eff >= 1 and N > 1");
    return (1.0 / n) * (std::exp(d_total / r_eff) - 1.0) * r_eff - 1.0;
}

}  // namespace fmtt

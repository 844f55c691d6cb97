#pragma once

#include <vector>

#include "fmtt/smc.hpp"

namespace fmtt {

struct DiscrepancyOptions {
    bool paper_literal = false;   // use -log g0 as printed
};

/// D_k = log g2 - 2 log g1 + log g0 with g_i = sum_n w_n g_n^i. Throws if any
/// g <= 0 or fewer than two particles.
double incremental_discrepancy(const std::vector<double>& prev_weights, const std::vector<double>& increments,
                               DiscrepancyOptions opt = {});
/// Same estimator from log-weights and log-increments.
double incremental_discrepancy_log(const std::vector<double>& prev_logweights,
                                   const std::vector<double>& log_increments, DiscrepancyOptions opt = {});

struct DiscrepancyTrace {
    std::vector<double> times;     // t_0..t_K
    std::vector<double> d_hat;     // K raw estimates, possibly negative
    int runs = 1;
    int particles = 0;
};

DiscrepancyTrace discrepancy_trace(const RunResult& result, DiscrepancyOptions opt = {});

/// Pools several runs, weighting run j at step k by Zhat^{(k-1, j)} times its
/// self-normalized weights.
DiscrepancyTrace discrepancy_trace_multi(const std::vector<RunResult>& results, DiscrepancyOptions opt = {});

double total_discrepancy(const DiscrepancyTrace& trace);

struct BarrierProfile {
    std::vector<double> times;     // knots t_k
    std::vector<double> lambda;    // Lambda(t_k), Lambda(t_0) = 0
    double total() const { return lambda.empty() ? 0.0 : lambda.back(); }
};

/// Lambda(t_k) = sum_{k' <= k} sqrt(max(D_k', 0)).
BarrierProfile thermodynamic_length(const DiscrepancyTrace& trace);

/// (sum sqrt D_k)^2 / (K sum D_k); throws DomainError when sum D_k = 0.
double quality_ratio(const DiscrepancyTrace& trace);

struct RefinedSchedule {
    std::vector<double> times;
    bool flat = false;   // profile carried no information; input returned
};

/// t'_k = Lambda^{-1}(Lambda k / K) by piecewise-linear inversion; endpoints
/// pinned to 0 and 1. Levels that coincide with a knot return that knot.
RefinedSchedule refine_schedule(const BarrierProfile& profile, int steps);

/// Variance model exactly as printed: (1/N)(exp(D / R_eff) - 1) R_eff - 1.
double var_model(double d_total, double r_eff, double n);

}  // namespace fmtt

#pragma once

#include <string>
#include <vector>

#include "fmtt/config.hpp"
#include "fmtt/diagnostics.hpp"
#include "fmtt/smc.hpp"

namespace fmtt {

/// Shortest round-trip decimal form; "nan" and "inf" for non-finite values.
std::string format_number(double v);

/// step,t,ess,resampled,logZ,mean_reward
void write_trace_csv(const std::string& file, const RunResult& result);
/// step,t,D_hat,Lambda_cum; row 0 carries D_hat = 0 and Lambda_cum = 0.
void write_diagnostics_csv(const std::string& file, const DiscrepancyTrace& trace);
/// {"times": [...], "flat": bool}
void write_schedule(const std::string& file, const RefinedSchedule& schedule);
/// Pretty-printed with a trailing newline. Non-finite numbers become null.
void write_json(const std::string& file, const json& j);

}  // namespace fmtt

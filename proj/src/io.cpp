#include "fmtt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fmtt {

namespace {

std::ofstream open_out(const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file);
    return out;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_trace_csv(const std::string& file, const RunResult& result) {
    auto out = open_out(file);
    out << "step,t,ess,resampled,logZ,mean_reward\n";
    for (const auto& row : result.trace) {
        out << row.step << ',' << format_number(row.t) << ',' << format_number(row.ess) << ','
            << (row.resampled ? 1 : 0) << ',' << format_number(row.log_z) << ',' << format_number(row.mean_reward)
            << '\n';
    }
}

void write_diagnostics_csv(const std::string& file, const DiscrepancyTrace& trace) {
    const auto profile = thermodynamic_length(trace);
    auto out = open_out(file);
    out << "step,t,D_hat,Lambda_cum\n";
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        const double d = k == 0 ? 0.0 : trace.d_hat[k - 1];
        out << k << ',' << format_number(trace.times[k]) << ',' << format_number(d) << ','
            << format_number(profile.lambda[k]) << '\n';
    }
}

void write_schedule(const std::string& file, const RefinedSchedule& schedule) {
    write_json(file, {{"times", schedule.times}, {"flat", schedule.flat}});
}

void write_json(const std::string& file, const json& j) {
    auto out = open_out(file);
    out << j.dump(2) << '\n';
}

}  // namespace fmtt

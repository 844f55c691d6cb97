#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fmtt {

struct VerifyOptions {
    std::vector<std::string> only;   // empty: every module
    double rel_tol = 1e-10;          // flow-map solver tolerance for the oracle checks
    std::uint64_t seed = 20240607;
    int threads = 0;
};

struct CheckResult {
    std::string module;
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

/// interpolant, flowmap, rewards, tilt, smc, diagnostics, oracles.
const std::vector<std::string>& verify_modules();

/// Runs the invariant checks of the selected modules at fixed seeds. Unknown
/// module names throw std::invalid_argument.
VerifyReport run_verify(const VerifyOptions& opt = {});

/// Fixed-width pass/fail table.
std::string format_report(const VerifyReport& report);

}  // namespace fmtt

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fmtt/config.hpp"
#include "fmtt/errors.hpp"
#include "fmtt/runner.hpp"
#include "fmtt/verify.hpp"

namespace {

enum Exit { ok = 0, failed = 1, usage = 2, config = 3, numeric = 4 };

// One JSON object on stderr so callers can parse failures.
int report_error(const std::string& type, const std::string& message, const std::string& path, int code) {
    fmtt::json err = {{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
    if (!path.empty()) err["error"]["path"] = path;
    std::cerr << err.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-map trajectory tilting: reward-tilted sampling and search on Gaussian-mixture transports"};
    app.require_subcommand(1);

    std::string config_file, out_dir;
    std::optional<std::uint64_t> seed;
    bool paper_literal = false;
    std::vector<std::string> only;
    double rel_tol = 1e-10;

    for (const char* name : {"sample", "search", "diagnose", "refine"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_file, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "output directory (default: output.directory)");
        sub->add_flag("--paper-literal", paper_literal, "use the expressions exactly as printed");
    }
    auto* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_option("--only", only, "restrict to these modules")->delimiter(',');
    verify->add_option("--rel-tol", rel_tol, "flow-map solver tolerance for oracle checks");
    verify->add_option("--seed", seed, "seed for the stochastic checks");
    verify->add_option("--out", out_dir, "also write verify.json here");
    verify->add_option("--config", config_file, "ignored; accepted for a uniform interface");
    verify->add_flag("--paper-literal", paper_literal, "ignored");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report_error("UsageError", e.what(), "", usage);
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "verify") {
            fmtt::VerifyOptions opt;
            opt.only = only;
            opt.rel_tol = rel_tol;
            if (seed) opt.seed = *seed;
            fmtt::VerifyReport report;
            try {
                report = fmtt::run_verify(opt);
            } catch (const std::invalid_argument& e) {
                return report_error("UsageError", e.what(), "--only", usage);
            }
            std::cout << fmtt::format_report(report);
            if (!out_dir.empty()) {
                fmtt::json j = fmtt::json::array();
                for (const auto& c : report.checks) {
                    j.push_back({{"module", c.module},
                                 {"check", c.name},
                                 {"passed", c.passed},
                                 {"measured", c.measured},
                                 {"tolerance", c.tolerance},
                                 {"detail", c.detail}});
                }
                std::filesystem::create_directories(out_dir);
                std::ofstream(std::filesystem::path(out_dir) / "verify.json") << j.dump(2) << '\n';
            }
            return report.passed() ? ok : failed;
        }

        fmtt::ExperimentConfig cfg = fmtt::load_config(config_file);
        if (seed) {
            cfg.seed = *seed;
            cfg.run.seed = *seed;
        }
        if (paper_literal) fmtt::apply_paper_literal(cfg);
        if (out_dir.empty()) out_dir = cfg.output.directory;
        else cfg.output.directory = out_dir;

        fmtt::json summary;
        if (cmd == "sample") summary = fmtt::cmd_sample(cfg, out_dir);
        else if (cmd == "search") summary = fmtt::cmd_search(cfg, out_dir);
        else if (cmd == "diagnose") summary = fmtt::cmd_diagnose(cfg, out_dir);
        else summary = fmtt::cmd_refine(cfg, out_dir);
        if (summary.contains("warnings")) {
            for (const auto& w : summary["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
        }
        std::cout << summary.dump(2) << '\n';
        return ok;
    } catch (const fmtt::ConfigError& e) {
        return report_error("ConfigError", e.message(), e.path(), config);
    } catch (const fmtt::SchemeError& e) {
        return report_error("SchemeError", e.what(), "", config);
    } catch (const fmtt::DomainError& e) {
        return report_error("DomainError", e.what(), "", numeric);
    } catch (const fmtt::ToleranceError& e) {
        return report_error("ToleranceError", e.what(), "", numeric);
    } catch (const fmtt::DegenerateEnsembleError& e) {
        return report_error("DegenerateEnsembleError", e.what(), "", numeric);
    } catch (const std::exception& e) {
        return report_error("Error", e.what(), "", failed);
    }
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fmtt/config.hpp"
#include "fmtt/errors.hpp"
#include "fmtt/io.hpp"
#include "fmtt/runner.hpp"

using namespace fmtt;
namespace fs = std::filesystem;

namespace {

json linear_config() {
    return json::parse(R"({
      "seed": 9,
      "problem": {"target": {"weights": [1], "means": [[0]], "covariances": [[[1]]]}},
      "schedule": {"steps": 20},
      "run": {"particles": 32, "repeats": 2},
      "reward": {"kind": "linear", "params": {"lambda": [0.5]}},
      "oracle": {"samples": 1000}
    })");
}

std::string error_path(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<none>";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fmtt_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("defaults and resolved snapshot round trip") {
    const auto cfg = parse_config(linear_config());
    CHECK(cfg.run.times.size() == 21);
    CHECK(cfg.run.trigger == ResampleTrigger::ess);
    CHECK(cfg.run.ess_threshold == 0.85);
    CHECK(cfg.base.dim() == 1);
    CHECK(cfg.reward.look_ahead.mode == LookAhead::flowmap_exact);
    const json snap = to_json(cfg);
    CHECK(to_json(parse_config(snap)) == snap);
}

TEST_CASE("strict validation names the offending key") {
    json j = linear_config();
    j["run"]["partciles"] = 10;
    CHECK(error_path(j) == "run.partciles");

    j = linear_config();
    j["extra"] = 1;
    CHECK(error_path(j) == "extra");

    j = linear_config();
    j["run"]["particles"] = "many";
    CHECK(error_path(j) == "run.particles");

    j = linear_config();
    j["reward"]["params"]["lambda"] = json::array({0.5, 1.0});
    CHECK(error_path(j) == "reward.params.lambda");

    j = linear_config();
    j["reward"]["params"]["gamma"] = 1.0;
    CHECK(error_path(j) == "reward.params.gamma");

    j = linear_config();
    j["problem"]["target"]["covariances"] = json::parse("[[[-1]]]");
    CHECK(error_path(j) == "problem.target");

    j = linear_config();
    j["run"]["chi"] = "sideways";
    CHECK(error_path(j) == "run.chi");

    j = linear_config();
    j["schedule"]["times"] = json::array({0.0, 0.5, 1.0});
    CHECK(error_path(j) == "schedule");   // steps and times together

    j = linear_config();
    j["schedule"] = {{"times", {0.0, 0.6, 0.5, 1.0}}};
    CHECK(error_path(j) == "run");

    j = linear_config();
    j["run"]["mode"] = "searching";
    j["run"]["trigger"] = "ess";
    CHECK(error_path(j) == "run");

    j = linear_config();
    j["reward"]["mode"] = "naive";
    CHECK(error_path(j) == "run");   // simplified weights need a flow-map look-ahead

    j = linear_config();
    j["run"]["chi"] = "tilted_score";
    j["run"]["weights"] = "laplacian";
    CHECK(error_path(j) == "run");   // eta singular at t = 0 without an offset
    j["schedule"]["eta_offset"] = 0.05;
    CHECK(error_path(j) == "<none>");
}

TEST_CASE("schedule file input") {
    const fs::path dir = scratch("schedule");
    fs::create_directories(dir);
    write_schedule((dir / "s.json").string(), {{0.0, 0.1, 0.5, 1.0}, false});
    json j = linear_config();
    j["schedule"] = {{"times_file", "s.json"}};
    std::ofstream(dir / "c.json") << j.dump();
    const auto cfg = load_config((dir / "c.json").string());
    CHECK(cfg.run.times == std::vector<double>{0.0, 0.1, 0.5, 1.0});
    CHECK_THROWS_AS(read_schedule((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("trace and diagnostics CSV layout") {
    auto cfg = parse_config(linear_config());
    cfg.repeats = 1;
    const auto dir = scratch("sample");
    const json s = cmd_sample(cfg, dir.string());
    const std::string trace = slurp(dir / "trace.csv");
    CHECK(trace.rfind("step,t,ess,resampled,logZ,mean_reward\n0,0,32,0,0,", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 22);
    const std::string diag = slurp(dir / "diagnostics.csv");
    CHECK(diag.rfind("step,t,D_hat,Lambda_cum\n0,0,0,0\n", 0) == 0);
    CHECK(fs::exists(dir / "config_resolved.json"));
    CHECK(s["diagnostics"].contains("D_total"));
    CHECK(s["diagnostics"].contains("Lambda"));
    CHECK(s["diagnostics"].contains("quality_ratio"));
    CHECK(s["oracle_mean"]["value"] == 0.5);
}

TEST_CASE("zero reward summary") {
    json j = linear_config();
    j["reward"] = {{"kind", "zero"}};
    const auto dir = scratch("zero");
    const json s = cmd_sample(parse_config(j), dir.string());
    CHECK(std::abs(s["diagnostics"]["D_total"]["value"].get<double>()) <= 1e-12);
    CHECK(s["diagnostics"]["Lambda"]["value"].get<double>() <= 1e-12);
    CHECK(s["diagnostics"]["quality_ratio"]["defined"] == false);
    CHECK(s["log_z"]["value"].get<double>() == 0.0);
}

TEST_CASE("outputs are reproducible bit for bit") {
    const auto cfg = parse_config(linear_config());
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    cmd_sample(cfg, a.string());
    cmd_sample(cfg, b.string());
    for (const char* f : {"summary.json", "trace_0.csv", "trace_1.csv", "diagnostics.csv", "config_resolved.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("search with one clone and no selection matches the baseline") {
    json j = linear_config();
    j["run"] = {{"mode", "searching"}, {"particles", 16}, {"clones", 1}, {"trigger", "none"}, {"repeats", 2}};
    const json s = cmd_search(parse_config(j), scratch("search").string());
    CHECK(s["search"]["mean_reward"]["value"] == s["baseline"]["mean_reward"]["value"]);
    CHECK(s["mean_reward_difference"]["value"] == 0.0);
    CHECK_THROWS_AS(cmd_sample(parse_config(j), scratch("search2").string()), ConfigError);
}

TEST_CASE("refine on a zero reward returns the input schedule with a warning") {
    json j = linear_config();
    j["reward"] = {{"kind", "zero"}};
    j["schedule"] = {{"times", {0.0, 0.2, 0.7, 1.0}}};
    const auto dir = scratch("refine");
    const json s = cmd_refine(parse_config(j), dir.string());
    CHECK(s["warnings"].size() == 1);
    CHECK(s["rounds"].size() == 1);
    CHECK(read_schedule((dir / "schedule_refined.json").string()) == std::vector<double>{0.0, 0.2, 0.7, 1.0});
}

TEST_CASE("refined schedule feeds a later run") {
    json j = linear_config();
    j["reward"] = {{"kind", "linear"}, {"params", {{"lambda", {1.0}}}}, {"mode", "naive"}};
    j["run"]["weights"] = "laplacian";
    j["problem"]["target"] = json::parse(R"({"weights": [1], "means": [[3]], "covariances": [[[0.04]]]})");
    j["diagnostics"] = {{"refine_rounds", 2}};
    const auto dir = scratch("refine2");
    const json s = cmd_refine(parse_config(j), dir.string());
    REQUIRE(s["rounds"].size() == 2);
    const auto times = read_schedule((dir / "schedule_round_0.json").string());
    CHECK(s["rounds"][1]["times"].get<std::vector<double>>() == times);
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] > times[i - 1]);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epsvp/cli.hpp>
#include <epsvp/controller.hpp>
#include <epsvp/discrete.hpp>
#include <epsvp/json_util.hpp>

#include "oracles.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace epsvp;
namespace fs = std::filesystem;

namespace {

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run cli_run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("epsvp-cli-" + name);
    fs::remove_all(dir);
    return dir;
}

const std::string kTopo = oracle::data("canonical/topology.json");
const std::string kReq = oracle::data("canonical/requirements.json");

} // namespace

TEST_CASE("usage errors")
{
    CHECK(cli_run({}).code == cli::kExitUsage);
    CHECK(cli_run({"check"}).code == cli::kExitUsage);
    CHECK(cli_run({"check", "--topology", "/nonexistent/topology.json"}).code == cli::kExitUsage);
    CHECK(cli_run({"frobnicate"}).code == cli::kExitUsage);
    CHECK(cli_run({"--help"}).code == cli::kExitPass);
    CHECK(cli_run({"check", "--topology", kTopo, "--controller", kTopo, "--naive"}).code == cli::kExitUsage);

    const auto bad = cli_run({"paths", "--topology", kReq});
    CHECK(bad.code == cli::kExitUsage);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("check passes with the generated controller")
{
    const auto dir = scratch("check-pass");
    const auto r = cli_run({"check", "--topology", kTopo, "--requirements", kReq, "--out", dir.string()});
    CHECK(r.code == cli::kExitPass);
    CHECK(r.out.find("R1 PASS") != std::string::npos);
    REQUIRE(fs::exists(dir / "check.json"));
    const auto doc = json_util::parse(json_util::read_file(dir / "check.json"));
    CHECK(doc["verdict"] == "pass");
    CHECK(doc["states"] == 374);
    CHECK_FALSE(doc.contains("seconds"));
    REQUIRE(fs::exists(dir / "controller.json"));
    CHECK(load_fsm_file(dir / "controller.json") == load_fsm_file(oracle::data("canonical/controllers/priority_bbm.json")));
    CHECK_FALSE(fs::exists(dir / "counterexample.trace"));
}

TEST_CASE("check reports a counterexample for a parallel-closing controller")
{
    const auto dir = scratch("check-fail");
    const auto r = cli_run({"check", "--topology", kTopo, "--requirements", kReq, "--controller",
                            oracle::data("canonical/controllers/parallel_close.json"), "--out", dir.string()});
    CHECK(r.code == cli::kExitViolation);
    CHECK(r.out.find("R1 FAIL") != std::string::npos);
    REQUIRE(fs::exists(dir / "counterexample.trace"));
    REQUIRE(fs::exists(dir / "counterexample.scenario.json"));
    CHECK_FALSE(fs::exists(dir / "controller.json"));
    const auto doc = json_util::parse(json_util::read_file(dir / "check.json"));
    CHECK(doc["verdict"] == "fail");
    CHECK(doc["counterexample"]["violated"] == "R1");
    CHECK(doc["counterexample"]["steps"] == 1);
    CHECK_FALSE(load_trace_file(dir / "counterexample.trace").events.empty());
    CHECK_NOTHROW(load_scenario_file(dir / "counterexample.scenario.json"));
}

TEST_CASE("check with a tiny state bound is inconclusive")
{
    const auto dir = scratch("check-bound");
    const auto r =
        cli_run({"check", "--topology", kTopo, "--requirements", kReq, "--max-states", "5", "--out", dir.string()});
    CHECK(r.code == cli::kExitUsage);
    CHECK(json_util::parse(json_util::read_file(dir / "check.json"))["verdict"] == "inconclusive");
}

TEST_CASE("simulate writes waveforms and observer reports")
{
    const auto dir = scratch("simulate");
    const auto r = cli_run({"simulate", "--topology", kTopo, "--requirements", kReq, "--scenario",
                            oracle::data("canonical/scenarios/left_gen_fault.json"), "--duration", "0.2", "--out",
                            dir.string()});
    CHECK(r.code == cli::kExitPass);
    CHECK(r.out.find("note:") != std::string::npos);
    CHECK(r.out.find("0 violation(s)") != std::string::npos);
    for (const auto* f : {"waveforms.csv", "observers.json", "trace.txt"}) CHECK(fs::exists(dir / f));
    std::ifstream csv(dir / "waveforms.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header.rfind("time,", 0) == 0);

    const auto lost = cli_run({"simulate", "--topology", kTopo, "--requirements", kReq, "--scenario",
                               oracle::data("canonical/scenarios/all_lost.json"), "--duration", "0.6", "--out",
                               dir.string()});
    CHECK(lost.code == cli::kExitViolation);
    CHECK(lost.out.find("R5 violated") != std::string::npos);
}

TEST_CASE("reliability analysis")
{
    const auto dir = scratch("reliability");
    const auto rates = oracle::data("canonical/rates.json");
    auto r = cli_run({"reliability", "--topology", kTopo, "--requirements", kReq, "--rates", rates, "--chain-check",
                      "--out", dir.string()});
    CHECK(r.code == cli::kExitPass);
    CHECK(r.out.find("6 must-handle combination(s)") != std::string::npos);
    const auto doc = json_util::parse(json_util::read_file(dir / "reliability.json"));
    CHECK(doc["verdict"] == "pass");
    CHECK(doc["mustHandle"].size() == 6);
    CHECK(doc["closure"].size() == 6);
    bool b1 = false;
    for (const auto& t : doc["targets"])
        if (t["target"] == "B1") {
            b1 = true;
            CHECK(t["cutSets"].size() == 14);
            CHECK(t["method"] == "exact");
        }
    CHECK(b1);

    r = cli_run({"reliability", "--topology", kTopo, "--requirements", kReq, "--threshold", "1", "--out", dir.string()});
    CHECK(r.code == cli::kExitPass);
    CHECK(r.out.find("0 must-handle combination(s)") != std::string::npos);

    r = cli_run({"reliability", "--topology", kTopo, "--requirements", kReq, "--rates", rates, "--without", "C2",
                 "--chain-check", "--out", dir.string()});
    CHECK(r.code == cli::kExitViolation);
    CHECK(r.out.find("uncovered combination {L1}: R5") != std::string::npos);
}

TEST_CASE("paths listing")
{
    const auto r = cli_run({"paths", "--topology", kTopo, "--bus", "B1"});
    REQUIRE(r.code == cli::kExitPass);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.size() == 1);
    CHECK(doc["B1"].size() == 3);
    CHECK(cli_run({"paths", "--topology", kTopo, "--bus", "Q"}).code == cli::kExitUsage);
    CHECK(nlohmann::json::parse(cli_run({"paths", "--topology", kTopo}).out).size() == 3);
}

TEST_CASE("trace-diff")
{
    const auto dir = scratch("trace-diff");
    fs::create_directories(dir);
    const auto t = load_topology_file(kTopo);
    const auto req = load_requirements_file(kReq, t);
    const auto fsm = refine_break_before_make(generate_priority_controller(t, req.priority_lists));
    const auto run = simulate_events(t, fsm, load_scenario_file(oracle::data("canonical/scenarios/left_gen_fault.json")));
    const auto trace = dir / "run.trace";
    std::ofstream(trace) << run.trace.str();

    auto r = cli_run({"trace-diff", trace.string(), oracle::data("canonical/sequences/left_gen_fault.json")});
    CHECK(r.code == cli::kExitPass);
    CHECK(r.out == "conforms\n");
    r = cli_run({"trace-diff", trace.string(), oracle::data("canonical/sequences/left_gen_fault_reordered.json")});
    CHECK(r.code == cli::kExitViolation);
    CHECK(r.out.rfind("does not conform", 0) == 0);
    CHECK(cli_run({"trace-diff", trace.string(), trace.string()}).code == cli::kExitPass);
    CHECK(cli_run({"trace-diff", trace.string()}).code == cli::kExitUsage);
}

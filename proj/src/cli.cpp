#include <epsvp/cli.hpp>
#include <epsvp/controller.hpp>
#include <epsvp/discrete.hpp>
#include <epsvp/errors.hpp>
#include <epsvp/hybrid.hpp>
#include <epsvp/json_util.hpp>
#include <epsvp/reliability.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace epsvp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common
{
    std::string topology;
    std::string requirements;
    std::string controller;
    bool generate = false;
    bool naive = false;
    double delay = 1e-3;
    std::string out;
    std::vector<std::string> without;
};

struct Model
{
    Topology topology;
    RequirementSet requirements;
};

void add_model_options(CLI::App* sub, Common& c)
{
    sub->add_option("--topology", c.topology, "topology document")->required()->check(CLI::ExistingFile);
    sub->add_option("--requirements", c.requirements, "requirements document")->check(CLI::ExistingFile);
    sub->add_option("--without", c.without, "remove a component before analysis (repeatable)");
}

void add_controller_options(CLI::App* sub, Common& c)
{
    auto* file = sub->add_option("--controller", c.controller, "controller document")->check(CLI::ExistingFile);
    auto* gen = sub->add_flag("--generate-controller", c.generate, "synthesize the priority controller (default)");
    file->excludes(gen);
    sub->add_flag("--naive", c.naive, "skip the break-before-make refinement of a generated controller")->excludes(file);
    sub->add_option("--delay", c.delay, "deterministic delay before closing, seconds")->check(CLI::NonNegativeNumber);
}

void add_out_option(CLI::App* sub, Common& c)
{
    sub->add_option("--out", c.out, "output directory");
}

Model load_model(const Common& c)
{
    Topology full = load_topology_file(c.topology);
    Model m{full, c.requirements.empty() ? default_requirements() : load_requirements_file(c.requirements, full)};
    for (const auto& id : c.without) m.topology = m.topology.without(id);
    return m;
}

BpcuFsm load_controller(const Common& c, const Model& m)
{
    if (!c.controller.empty()) {
        BpcuFsm fsm = load_fsm_file(c.controller);
        validate_against(fsm, m.topology);
        return fsm;
    }
    BpcuFsm fsm = generate_priority_controller(m.topology, m.requirements.priority_lists);
    if (c.naive) return fsm;
    BreakBeforeMakeParams p;
    p.deterministic_delay = c.delay;
    return refine_break_before_make(fsm, p);
}

fs::path out_dir(const Common& c)
{
    fs::path dir = c.out;
    if (dir.empty()) {
        const char* env = std::getenv(kOutDirEnv);
        dir = env && *env ? env : "epsvp-out";
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path.string() + "'");
    f << text;
}

json id_list(const std::vector<std::string>& ids)
{
    return json(ids);
}

int cmd_check(const Common& c, int budget, std::size_t max_states, double step, bool contactor_faults,
              std::ostream& out)
{
    const Model m = load_model(c);
    const BpcuFsm fsm = load_controller(c, m);
    const fs::path dir = out_dir(c);
    if (c.controller.empty()) write_file(dir / "controller.json", save_fsm(fsm));

    ExploreOptions opt;
    opt.fault_budget = budget;
    opt.max_states = max_states;
    opt.step_duration = step;
    opt.environment.contactor_faults = contactor_faults;
    const ExploreResult r = explore(m.topology, fsm, m.requirements, opt);

    json report;
    report["controller"] = fsm.name;
    report["faultBudget"] = budget;
    report["verdict"] = r.bound_exceeded ? "inconclusive" : r.pass ? "pass" : "fail";
    report["requirements"] = json::array();
    for (const auto& q : r.requirements)
        report["requirements"].push_back({{"id", q.requirement}, {"pass", q.pass}, {"detail", q.detail}});
    report["states"] = r.stats.states_visited;
    report["transitions"] = r.stats.transitions;
    report["quiescentStates"] = r.stats.quiescent_states;
    report["maxDepth"] = r.stats.max_depth;

    for (const auto& q : r.requirements)
        out << q.requirement << ' ' << (q.pass ? "PASS" : "FAIL") << (q.detail.empty() ? "" : "  " + q.detail) << '\n';
    out << "states " << r.stats.states_visited << ", depth " << r.stats.max_depth << ", " << r.stats.seconds << " s\n";

    if (!r.pass && !r.bound_exceeded) {
        write_file(dir / "counterexample.trace", r.counterexample.str());
        write_file(dir / "counterexample.scenario.json",
                   save_scenario(counterexample_scenario(m.topology, opt, r.events, r.event_steps)));
        report["counterexample"] = {{"violated", r.violated},
                                    {"steps", r.counterexample_steps},
                                    {"trace", "counterexample.trace"},
                                    {"scenario", "counterexample.scenario.json"}};
        out << "counterexample (" << r.violated << ", " << r.counterexample_steps << " steps) written to "
            << (dir / "counterexample.trace").string() << '\n';
    }
    write_file(dir / "check.json", report.dump(2) + "\n");
    if (r.bound_exceeded) {
        out << "state bound exceeded, result inconclusive\n";
        return kExitUsage;
    }
    return r.pass ? kExitPass : kExitViolation;
}

int cmd_simulate(const Common& c, const std::string& scenario_path, const SimConfig& cfg, std::ostream& out)
{
    const Model m = load_model(c);
    const BpcuFsm fsm = load_controller(c, m);
    Scenario sc = load_scenario_file(scenario_path);
    validate_scenario(sc, m.topology);
    const fs::path dir = out_dir(c);

    const HybridResult r = run_hybrid(m.topology, fsm, sc, m.requirements, cfg);
    write_file(dir / "waveforms.csv", r.waves.csv());
    write_file(dir / "observers.json", r.report.json());
    write_file(dir / "trace.txt", r.trace.str());

    for (const auto& v : r.report.violations)
        out << v.requirement << " violated on " << v.signal << " [" << v.start << ", " << v.end << "] s: " << v.detail
            << '\n';
    for (const auto& n : r.report.notes) out << "note: " << n << '\n';
    out << r.waves.size() << " samples, " << r.report.violations.size() << " violation(s)\n";
    return r.report.empty() ? kExitPass : kExitViolation;
}

int cmd_reliability(const Common& c, const std::string& rates, std::optional<double> threshold, int max_size,
                    bool chain, std::ostream& out)
{
    const Model m = load_model(c);
    ReliabilitySpec spec = m.requirements.reliability;
    if (threshold) spec.threshold = *threshold;
    FailureModel f = failure_model(m.topology, spec.mission_hours);
    if (!rates.empty()) apply_rates_file(f, rates, m.topology);
    const fs::path dir = out_dir(c);

    bool pass = true;
    json report;
    report["missionHours"] = f.mission_hours;
    report["threshold"] = format_probability(spec.threshold);
    report["targets"] = json::array();

    std::vector<std::string> targets;
    for (const auto& b : m.topology.buses())
        if (m.topology.as<Bus>(b).essential) targets.push_back(b);
    for (const auto& l : m.topology.loads())
        if (m.topology.as<Load>(l).essential) targets.push_back(l);
    for (const auto& target : targets) {
        const auto cuts = minimal_cut_sets(m.topology, target);
        const auto p = mission_failure_probability(cuts, f);
        const bool ok = p.probability <= spec.threshold;
        pass = pass && ok;
        json cj = json::array();
        for (const auto& cs : cuts) cj.push_back(id_list(cs.components));
        report["targets"].push_back({{"target", target},
                                     {"cutSets", cj},
                                     {"probability", format_probability(p.probability)},
                                     {"lowerBound", format_probability(p.lower_bound)},
                                     {"method", p.method},
                                     {"pass", ok}});
        out << target << ": " << cuts.size() << " minimal cut set(s), P = " << format_probability(p.probability)
            << " (" << p.method << ") " << (ok ? "PASS" : "FAIL") << '\n';
    }

    const auto combos = must_handle_combinations(m.topology, f, spec, max_size);
    report["mustHandle"] = json::array();
    for (const auto& combo : combos) {
        json events = json::array();
        for (const auto& id : combo.failed) events.push_back(failure_event(m.topology, id).str());
        report["mustHandle"].push_back(
            {{"failed", id_list(combo.failed)}, {"probability", format_probability(combo.probability)}, {"events", events}});
    }
    out << combos.size() << " must-handle combination(s)\n";

    if (chain) {
        const BpcuFsm fsm = load_controller(c, m);
        report["closure"] = json::array();
        for (const auto& r : closure_check(m.topology, fsm, m.requirements, combos)) {
            pass = pass && r.pass;
            report["closure"].push_back({{"failed", id_list(r.combination.failed)},
                                         {"pass", r.pass},
                                         {"violated", r.violated},
                                         {"detail", r.detail}});
            if (!r.pass) {
                std::string ids;
                for (const auto& id : r.combination.failed) ids += (ids.empty() ? "" : ", ") + id;
                out << "uncovered combination {" << ids << "}: " << r.violated << ' ' << r.detail << '\n';
            }
        }
    }
    report["verdict"] = pass ? "pass" : "fail";
    write_file(dir / "reliability.json", report.dump(2) + "\n");
    return pass ? kExitPass : kExitViolation;
}

int cmd_paths(const Common& c, const std::string& bus, std::ostream& out)
{
    const Model m = load_model(c);
    json doc = json::object();
    for (const auto& b : m.topology.buses()) {
        if (!bus.empty() && b != bus) continue;
        json arr = json::array();
        for (const auto& p : enumerate_paths(m.topology, b))
            arr.push_back({{"source", p.source}, {"contactors", id_list(p.contactors)}});
        doc[b] = arr;
    }
    if (!bus.empty() && doc.empty()) throw LookupError("unknown bus '" + bus + "'");
    out << doc.dump(2) << '\n';
    return kExitPass;
}

SequenceSpec spec_from(const std::string& path)
{
    const std::string text = json_util::read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return load_sequence_spec(text);
    SequenceSpec spec;
    spec.name = fs::path(path).filename().string();
    for (const auto& e : EventTrace::parse(text).events) spec.patterns.push_back({e.actor, e.event});
    return spec;
}

int cmd_trace_diff(const std::string& trace, const std::string& expected, std::ostream& out)
{
    const auto verdict = conform(load_trace_file(trace), spec_from(expected));
    if (verdict.pass) {
        out << "conforms\n";
        return kExitPass;
    }
    out << "does not conform: " << verdict.detail << '\n';
    return kExitViolation;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Electrical power system design verification"};
    app.name("epsvp");
    app.require_subcommand(1);

    Common c;

    auto* check = app.add_subcommand("check", "explore the closed loop against the discrete requirements");
    add_model_options(check, c);
    add_controller_options(check, c);
    add_out_option(check, c);
    int budget = 2;
    std::size_t max_states = 10'000'000;
    double discrete_step = 1e-3;
    bool contactor_faults = false;
    check->add_option("--fault-budget", budget, "environment events per run")->check(CLI::NonNegativeNumber);
    check->add_option("--max-states", max_states, "state bound");
    check->add_option("--step", discrete_step, "seconds per macro-step")->check(CLI::PositiveNumber);
    check->add_flag("--contactor-faults", contactor_faults, "let contactors stick open");

    auto* simulate = app.add_subcommand("simulate", "hybrid simulation of one scenario with runtime observers");
    add_model_options(simulate, c);
    add_controller_options(simulate, c);
    add_out_option(simulate, c);
    std::string scenario;
    SimConfig cfg;
    simulate->add_option("--scenario", scenario, "scenario document")->required()->check(CLI::ExistingFile);
    simulate->add_option("--step", cfg.step, "integration step, seconds")->check(CLI::PositiveNumber);
    simulate->add_option("--duration", cfg.duration, "simulated time, seconds")->check(CLI::PositiveNumber);

    auto* reliability = app.add_subcommand("reliability", "cut sets, mission probabilities, must-handle faults");
    add_model_options(reliability, c);
    add_controller_options(reliability, c);
    add_out_option(reliability, c);
    std::string rates;
    std::optional<double> threshold;
    int max_size = 4;
    bool chain = false;
    reliability->add_option("--rates", rates, "failure rate overrides")->check(CLI::ExistingFile);
    reliability->add_option("--threshold", threshold, "probability threshold override");
    reliability->add_option("--max-size", max_size, "largest fault combination")->check(CLI::NonNegativeNumber);
    reliability->add_flag("--chain-check", chain, "explore every must-handle combination");

    auto* paths = app.add_subcommand("paths", "list minimal source paths per bus");
    add_model_options(paths, c);
    std::string bus;
    paths->add_option("--bus", bus, "only this bus");

    auto* diff = app.add_subcommand("trace-diff", "check a trace against a sequence spec or reference trace");
    std::string trace_file, expected_file;
    diff->add_option("trace", trace_file, "trace file")->required()->check(CLI::ExistingFile);
    diff->add_option("expected", expected_file, "sequence spec or trace file")->required()->check(CLI::ExistingFile);

    std::vector<const char*> argv{"epsvp"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (*check) return cmd_check(c, budget, max_states, discrete_step, contactor_faults, out);
        if (*simulate) return cmd_simulate(c, scenario, cfg, out);
        if (*reliability) return cmd_reliability(c, rates, threshold, max_size, chain, out);
        if (*paths) return cmd_paths(c, bus, out);
        if (*diff) return cmd_trace_diff(trace_file, expected_file, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace epsvp::cli

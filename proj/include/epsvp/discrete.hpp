#pragma once

#include <epsvp/controller.hpp>
#include <epsvp/requirements.hpp>
#include <epsvp/topology.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epsvp {

/// Actor name used for controller entries in traces.
inline constexpr std::string_view kTraceController = "BPCU";
/// Actor name used for initialization entries.
inline constexpr std::string_view kTraceEnvironment = "ENV";

struct TraceEvent
{
    long step = 0;
    std::string actor;
    std::string event;
    std::string payload;

    bool operator==(const TraceEvent&) const = default;
};

/// Ordered event record. Serialized one event per line as
/// `step<TAB>actor<TAB>event<TAB>payload`.
struct EventTrace
{
    std::vector<TraceEvent> events;

    void add(long step, std::string actor, std::string event, std::string payload = {});
    std::string str() const;
    static EventTrace parse(std::string_view text);
    bool operator==(const EventTrace&) const = default;
};

EventTrace load_trace_file(const std::filesystem::path& path);

/// Environment event: a source status change, or a contactor or converter
/// failure (contactors stick open, converters stop conducting).
struct EnvEvent
{
    enum class Kind { SourceStatus, ContactorStuckOpen, ConverterFailed };
    Kind kind = Kind::SourceStatus;
    std::string target;
    SourceStatus status = SourceStatus::Failed;

    std::string str() const;
    bool operator==(const EnvEvent&) const = default;
    auto operator<=>(const EnvEvent&) const = default;
};

/// Environment event placed either at a time or at a macro-step.
struct TimedEvent
{
    std::optional<double> time;   // seconds
    std::optional<long> step;
    EnvEvent event;
};

struct Scenario
{
    std::string name;
    /// Statuses at time 0; sources not listed start Available.
    std::map<std::string, SourceStatus> initial;
    /// Seconds per discrete macro-step.
    double step_duration = 1e-3;
    std::vector<TimedEvent> events;
};

Scenario load_scenario(std::string_view document);
Scenario load_scenario_file(const std::filesystem::path& path);
std::string save_scenario(const Scenario& s);
void validate_scenario(const Scenario& s, const Topology& t);

/// Initial statuses in topology source order.
std::vector<SourceStatus> initial_statuses(const Topology& t, const Scenario& s);

/// Ordered (actor, event) patterns matched as a subsequence.
struct SequenceSpec
{
    struct Pattern
    {
        std::string actor;
        std::string event;
    };
    std::string name;
    std::string note;
    std::vector<Pattern> patterns;
};

SequenceSpec load_sequence_spec(std::string_view document);
SequenceSpec load_sequence_spec_file(const std::filesystem::path& path);

struct ConformVerdict
{
    bool pass = true;
    std::size_t failed_pattern = 0;   // 1-based, 0 when passing
    std::string detail;
};

ConformVerdict conform(const EventTrace& trace, const SequenceSpec& spec);

/// Closed-loop state of the discrete model.
struct GlobalState
{
    ControllerState controller;
    std::vector<SourceStatus> sources;   // true statuses, topology source order
    Mask closed = 0;              // physical contactor positions
    Mask stuck = 0;               // failed contactors (stuck open)
    Mask failed_converters = 0;
    Mask shed = 0;                // shed loads, indexed like the controller's loads
    std::vector<std::int8_t> pending;      // per contactor: 0 none, 1 open, 2 close
    std::vector<std::uint16_t> remaining;  // macro-steps until the pending command lands
    int budget = 0;

    std::string key() const;
    bool operator==(const GlobalState&) const = default;
};

/// Closed-loop model of one topology and one controller, stepped in
/// synchronous macro-steps.
class DiscreteModel
{
  public:
    DiscreteModel(const Topology& t, const BpcuFsm& fsm, double step_duration = 1e-3);

    const Topology& topology() const { return topology_; }
    const FsmExecutor& executor() const { return exec_; }

    /// Step 0: latch `statuses` and deliver the first clock tick.
    GlobalState initialize(const std::vector<SourceStatus>& statuses, int budget,
                           EventTrace* trace = nullptr) const;

    /// One macro-step: land due commands, apply at most one environment
    /// event, deliver it, the contactor feedback and a tick to the controller
    /// (each to quiescence), then schedule the new commands.
    GlobalState step(const GlobalState& s, const EnvEvent* event, long index,
                     EventTrace* trace = nullptr) const;

    bool quiescent(const GlobalState& s) const;
    bool can_apply(const GlobalState& s, const EnvEvent& e) const;

    /// Source availability mask (topology source indices).
    Mask available(const GlobalState& s) const;
    /// Per node, sources reaching it under the physical state.
    std::vector<Mask> reach(const GlobalState& s) const;

    /// Commanded latency in macro-steps (at least one).
    int open_steps(int contactor) const { return open_steps_[contactor]; }
    int close_steps(int contactor) const { return close_steps_[contactor]; }

  private:
    void run_controller(GlobalState& s, const FsmExecutor::Input& in, long index, EventTrace* trace) const;

    const Topology& topology_;
    FsmExecutor exec_;
    std::vector<int> ctl_to_topo_source_;
    std::vector<int> ctl_to_topo_contactor_;
    std::vector<int> topo_to_ctl_contactor_;
    std::vector<int> open_steps_, close_steps_;
};

struct DiscreteRun
{
    EventTrace trace;
    GlobalState final_state;
    long steps = 0;
    /// First macro-step whose physical configuration violates no-paralleling, or -1.
    long first_violation = -1;
    std::vector<std::string> violated;
};

struct SimulateOptions
{
    /// Macro-steps allowed after the last scenario event to reach quiescence.
    long settle_limit = 10000;
};

/// Runs the scenario to completion and quiescence. Throws ExecutionError
/// (with the partial trace in the message) on livelock.
DiscreteRun simulate_events(const Topology& t, const BpcuFsm& fsm, const Scenario& scenario,
                            const SimulateOptions& options = {});

/// Environment the explorer may inject, one event per macro-step.
struct EnvironmentModel
{
    bool source_changes = true;     // every status change of every source
    bool contactor_faults = false;  // contactors stick open
    bool converter_faults = false;
    /// When non-empty, only these events are injected.
    std::vector<EnvEvent> only;
};

struct ExploreOptions
{
    int fault_budget = 2;
    std::size_t max_states = 10'000'000;
    std::map<std::string, SourceStatus> initial;   // unlisted sources start Available
    double step_duration = 1e-3;
    EnvironmentModel environment;
    bool check_priority = true;
    bool check_essential = false;
};

struct RequirementResult
{
    std::string requirement;
    bool pass = true;
    std::string detail;
};

struct ExploreStats
{
    std::size_t states_visited = 0;
    std::size_t transitions = 0;
    std::size_t quiescent_states = 0;
    int max_depth = 0;
    double seconds = 0;
};

struct ExploreResult
{
    bool pass = true;
    bool bound_exceeded = false;
    std::string violated;                 // requirement id of the counterexample
    std::string detail;
    std::vector<EnvEvent> events;         // counterexample environment, one per step (step, event)
    std::vector<long> event_steps;
    long counterexample_steps = 0;        // macro-steps to the violating state
    EventTrace counterexample;            // replayed through simulate_events
    std::vector<RequirementResult> requirements;
    ExploreStats stats;
};

/// Breadth-first exploration of every interleaving of at most
/// `fault_budget` environment events with macro-steps.
ExploreResult explore(const Topology& t, const BpcuFsm& fsm, const RequirementSet& req,
                      const ExploreOptions& options = {});

/// Scenario reproducing an explored counterexample.
Scenario counterexample_scenario(const Topology& t, const ExploreOptions& options,
                                 const std::vector<EnvEvent>& events, const std::vector<long>& steps);

} // namespace epsvp

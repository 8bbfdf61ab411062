#pragma once

#include <epsvp/requirements.hpp>
#include <epsvp/topology.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epsvp {

enum class SourceStatus : std::uint8_t { Off, Available, Failed };

std::string to_string(SourceStatus s);
SourceStatus parse_source_status(std::string_view s);

/// Boolean guard over the controller's latched variables.
///
/// Grammar:
///   expr    := conj ( "||" conj )*
///   conj    := unary ( "&&" unary )*
///   unary   := "!" unary | "(" expr ")" | atom
///   atom    := "true" | "false"
///            | ID ( "==" | "!=" ) ( "Off" | "Available" | "Failed" )
///            | ( "low" | "opened" | "closed" ) "(" ID ")"
/// `low(C)` holds once a current-below-threshold notification for C has been
/// received and C has not been reclosed since. `opened`/`closed` read the
/// latched contactor feedback.
struct Guard
{
    enum class Op { True, False, StatusEq, StatusNe, Low, Opened, Closed, Not, And, Or };

    Op op = Op::True;
    std::string subject;
    SourceStatus status = SourceStatus::Off;
    std::vector<Guard> children;

    static Guard parse(std::string_view text);
    std::string str() const;

    static Guard always() { return {}; }
    static Guard status_is(std::string id, SourceStatus s) { return {Op::StatusEq, std::move(id), s, {}}; }
    static Guard status_not(std::string id, SourceStatus s) { return {Op::StatusNe, std::move(id), s, {}}; }
    static Guard low(std::string id) { return {Op::Low, std::move(id), SourceStatus::Off, {}}; }
    static Guard negate(Guard g) { return {Op::Not, {}, SourceStatus::Off, {std::move(g)}}; }
    static Guard all_of(std::vector<Guard> gs);
    static Guard any_of(std::vector<Guard> gs);

    bool operator==(const Guard&) const = default;
};

struct Action
{
    enum class Kind { Open, Close, Shed, Restore };
    Kind kind = Kind::Open;
    std::string target;

    static Action parse(std::string_view text);
    std::string str() const;   // e.g. "open(C2)"

    bool operator==(const Action&) const = default;
};

/// When a transition may fire:
///   Always - on any input including the empty one (eventless, used during quiescence)
///   Event  - on any non-empty input
///   Tick   - only on the controller clock tick
enum class Trigger { Always, Event, Tick };

std::string to_string(Trigger t);

struct Transition
{
    std::string from;
    std::string to;
    Trigger trigger = Trigger::Event;
    Guard guard;
    std::vector<Action> actions;

    bool operator==(const Transition&) const = default;
};

/// Explicit finite-state BPCU controller.
struct BpcuFsm
{
    std::string name;
    std::vector<std::string> sources;      // status variables
    std::vector<std::string> contactors;   // feedback/notification variables and command targets
    std::vector<std::string> loads;        // shed/restore targets
    std::vector<std::string> states;
    std::string initial;
    std::vector<Transition> transitions;
    std::map<std::string, double> parameters;

    bool operator==(const BpcuFsm&) const = default;
};

BpcuFsm load_fsm(std::string_view document);
BpcuFsm load_fsm_file(const std::filesystem::path& path);
std::string save_fsm(const BpcuFsm& fsm);

/// Throws ValidationError when the FSM commands or reads ids unknown to `t`.
void validate_against(const BpcuFsm& fsm, const Topology& t);

/// One input symbol delivered to the controller.
struct FsmInput
{
    enum class Kind { None, Tick, Source, Opened, Closed, CurrentLow };
    Kind kind = Kind::None;
    std::string id;
    SourceStatus status = SourceStatus::Off;

    /// "none", "tick", "L1=Failed", "opened(C2)", "closed(C2)", "low(C2)".
    static FsmInput parse(std::string_view text);
    std::string str() const;

    static FsmInput none() { return {}; }
    static FsmInput tick() { return {Kind::Tick, {}, SourceStatus::Off}; }
    static FsmInput source(std::string id, SourceStatus s) { return {Kind::Source, std::move(id), s}; }
    static FsmInput opened(std::string id) { return {Kind::Opened, std::move(id), SourceStatus::Off}; }
    static FsmInput closed(std::string id) { return {Kind::Closed, std::move(id), SourceStatus::Off}; }
    static FsmInput current_low(std::string id) { return {Kind::CurrentLow, std::move(id), SourceStatus::Off}; }
};

/// Control state plus the latched variables the guards read.
struct ControllerState
{
    int control = 0;
    std::vector<SourceStatus> status;   // indexed like BpcuFsm::sources
    Mask feedback_closed = 0;           // indexed like BpcuFsm::contactors
    Mask low = 0;

    bool operator==(const ControllerState&) const = default;
};

struct FsmStep
{
    ControllerState next;
    std::vector<Action> actions;
    int transition = -1;   // index into BpcuFsm::transitions, -1 for the default self-loop
};

/// Validated, index-resolved form of a BpcuFsm used by every executor.
class FsmExecutor
{
  public:
    /// Index-resolved input.
    struct Input
    {
        FsmInput::Kind kind = FsmInput::Kind::None;
        int index = -1;
        SourceStatus status = SourceStatus::Off;
    };

    struct IndexedStep
    {
        ControllerState next;
        int transition = -1;
    };

    /// Throws ValidationError for dangling references or overlapping guards.
    explicit FsmExecutor(BpcuFsm fsm);

    const BpcuFsm& fsm() const { return fsm_; }

    int state_index(const std::string& name) const;
    int source_index(const std::string& id) const;
    int contactor_index(const std::string& id) const;
    int load_index(const std::string& id) const;

    /// Controller at its initial state with the given source statuses latched,
    /// every contactor reported open and carrying no current.
    ControllerState initial_state(const std::vector<SourceStatus>& statuses) const;

    /// Throws ExecutionError for ids the FSM does not declare.
    Input resolve(const FsmInput& in) const;

    IndexedStep step(const ControllerState& s, const Input& in) const;
    FsmStep step(const ControllerState& s, const FsmInput& in) const;

    /// Delivers `in`, then empty inputs until no eventless transition fires.
    /// Returns the transitions taken, in order. Throws ExecutionError on livelock.
    std::vector<int> run(ControllerState& s, const Input& in) const;

    static constexpr int kQuiescenceBound = 64;

    /// Compiled actions of transition `t`.
    struct CompiledAction
    {
        Action::Kind kind;
        int index;   // contactor index for Open/Close, load index for Shed/Restore
    };
    const std::vector<CompiledAction>& actions(int t) const { return compiled_actions_[t]; }

  private:
    struct Node;
    bool eval(const Node& n, const ControllerState& s) const;
    int compile_guard(const Guard& g, int transition);
    void check_determinism() const;

    struct Node
    {
        Guard::Op op;
        int index;
        SourceStatus status;
        std::vector<int> children;
    };

    BpcuFsm fsm_;
    std::map<std::string, int> states_, sources_, contactors_, loads_;
    std::vector<Node> nodes_;
    std::vector<int> guard_root_;
    std::vector<int> from_, to_;
    std::vector<std::vector<int>> outgoing_;
    std::vector<std::vector<CompiledAction>> compiled_actions_;
};

/// Convenience wrapper around FsmExecutor::step.
FsmStep step_fsm(const BpcuFsm& fsm, const ControllerState& state, const FsmInput& input);

/// Contactor configuration and load shedding chosen for one availability pattern.
struct PriorityTarget
{
    Mask closed = 0;                                  // topology contactor indices
    std::map<std::string, std::string> chosen;        // bus -> source
    std::vector<std::string> shed;                    // sorted load ids
};

/// Per bus (in list order): first available source whose shortest compatible
/// path keeps every bus at exactly one source; then load shedding.
PriorityTarget priority_target(const Topology& t, const std::vector<PriorityList>& lists,
                               const std::vector<std::string>& available);

/// Priority-table controller: one mode per distinct target configuration, the
/// mode reached from every other mode on any event whose latched source
/// availability maps to it. Mode changes command opens and closes together.
BpcuFsm generate_priority_controller(const Topology& t, const std::vector<PriorityList>& lists);

/// Name of the generated mode holding contactor set `closed`.
std::string mode_name(const Topology& t, Mask closed);

struct BreakBeforeMakeParams
{
    double current_threshold_fraction = 0.10;
    int confirm_samples = 3;
    double deterministic_delay = 1e-3;   // seconds
    double clock_period = 1e-3;          // controller tick, converts the delay into ticks

    /// Ticks spent in the delay chain after confirmation.
    int delay_ticks() const;
    void validate() const;
};

/// Splits every transition that both opens and closes contactors into
/// open -> confirm current decay for confirm_samples ticks -> delay -> close.
BpcuFsm refine_break_before_make(const BpcuFsm& fsm, const BreakBeforeMakeParams& p = {});

} // namespace epsvp

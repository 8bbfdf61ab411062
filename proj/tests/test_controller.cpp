#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epsvp/controller.hpp>
#include <epsvp/errors.hpp>

#include "oracles.hpp"

#include <algorithm>

using namespace epsvp;

namespace {

struct Canonical
{
    Topology t = load_topology_file(oracle::data("canonical/topology.json"));
    RequirementSet req = load_requirements_file(oracle::data("canonical/requirements.json"), t);
};

std::vector<std::string> available_from(unsigned m)
{
    static const std::vector<std::string> src{"APU", "L1", "R1"};
    std::vector<std::string> out;
    for (unsigned i = 0; i < 3; ++i)
        if (m >> i & 1U) out.push_back(src[i]);
    return out;
}

BpcuFsm tiny(std::vector<Transition> transitions, std::vector<std::string> states = {"a", "b"})
{
    BpcuFsm f;
    f.name = "tiny";
    f.sources = {"G"};
    f.contactors = {"K"};
    f.states = std::move(states);
    f.initial = f.states.front();
    f.transitions = std::move(transitions);
    return f;
}

} // namespace

TEST_CASE("guard text round trip")
{
    for (const char* text : {"true", "false", "L1 == Available", "!(APU != Failed)",
                             "APU == Available && (L1 != Failed || low(C2))", "opened(C1) && closed(C3)"}) {
        const auto g = Guard::parse(text);
        CHECK(Guard::parse(g.str()) == g);
    }
    CHECK(Guard::parse("a == Off || b == Off && c == Off") ==
          Guard::any_of({Guard::status_is("a", SourceStatus::Off),
                         Guard::all_of({Guard::status_is("b", SourceStatus::Off), Guard::status_is("c", SourceStatus::Off)})}));
    CHECK_THROWS_AS(Guard::parse("L1 == Maybe"), ParseError);
    CHECK_THROWS_AS(Guard::parse("(true"), ParseError);
    CHECK_THROWS_AS(Guard::parse("low C1"), ParseError);
    CHECK_THROWS_AS(Guard::parse(""), ParseError);
}

TEST_CASE("actions and inputs round trip")
{
    for (const char* text : {"open(C1)", "close(C2)", "shed(GALLEY)", "restore(GALLEY)"})
        CHECK(Action::parse(text).str() == text);
    for (const char* text : {"none", "tick", "L1=Failed", "opened(C2)", "closed(C2)", "low(C2)"})
        CHECK(FsmInput::parse(text).str() == text);
    CHECK_THROWS_AS(Action::parse("toggle(C1)"), ParseError);
    CHECK_THROWS_AS(FsmInput::parse("L1=Sleepy"), ParseError);
}

TEST_CASE("priority targets for every availability pattern")
{
    Canonical c;
    const std::map<unsigned, std::vector<std::string>> expected{
        {0, {}},
        {1, {"C2", "C3", "C4"}},   // APU
        {2, {"C1", "C2", "C4"}},   // L1
        {3, {"C1", "C3", "C4"}},   // APU, L1
        {4, {"C2", "C4", "C5"}},   // R1
        {5, {"C2", "C3", "C5"}},   // APU, R1
        {6, {"C1", "C5"}},         // L1, R1
        {7, {"C1", "C5"}},
    };
    for (const auto& [m, closed] : expected) {
        const auto avail = available_from(m);
        const auto target = priority_target(c.t, c.req.priority_lists, avail);
        CHECK(c.t.contactor_ids(target.closed) == closed);
        const oracle::Ids closed_set(closed.begin(), closed.end());
        CHECK_FALSE(oracle::paralleled(c.t, closed_set));
        for (const auto& list : c.req.priority_lists) {
            std::string first;
            for (const auto& s : list.ordered_sources)
                if (std::find(avail.begin(), avail.end(), s) != avail.end()) {
                    first = s;
                    break;
                }
            if (list.bus == "B1" && !first.empty())
                CHECK(oracle::reaching_sources(c.t, closed_set, "B1") == oracle::Ids{first});
        }
    }
    CHECK(priority_target(c.t, c.req.priority_lists, {"APU"}).shed == std::vector<std::string>{"GALLEY"});
    CHECK(priority_target(c.t, c.req.priority_lists, {"L1"}).shed.empty());
}

TEST_CASE("generated controller shape")
{
    Canonical c;
    const auto fsm = generate_priority_controller(c.t, c.req.priority_lists);
    CHECK(fsm.states.size() == 8);
    CHECK(fsm.initial == "init");
    CHECK(fsm.transitions.size() == 49);
    CHECK(std::count(fsm.states.begin(), fsm.states.end(), "cfg_C1_C5") == 1);
    CHECK(std::count(fsm.states.begin(), fsm.states.end(), "cfg_C2_C3_C4__shed_GALLEY") == 1);
    CHECK(mode_name(c.t, c.t.contactor_mask({"C5", "C1"})) == "cfg_C1_C5");
    CHECK(mode_name(c.t, 0) == "cfg_none");
    CHECK_NOTHROW(FsmExecutor{fsm});
    CHECK_NOTHROW(validate_against(fsm, c.t));
    for (const auto& tr : fsm.transitions) {
        // opens precede closes
        bool seen_close = false;
        for (const auto& a : tr.actions) {
            if (a.kind == Action::Kind::Close) seen_close = true;
            if (a.kind == Action::Kind::Open) CHECK_FALSE(seen_close);
        }
    }
}

TEST_CASE("generated controller follows source availability")
{
    Canonical c;
    const FsmExecutor ex(generate_priority_controller(c.t, c.req.priority_lists));
    auto s = ex.initial_state({SourceStatus::Off, SourceStatus::Available, SourceStatus::Off});
    auto r = ex.step(s, FsmInput::tick());
    CHECK(ex.fsm().states[r.next.control] == "cfg_C1_C2_C4");
    std::vector<std::string> closes;
    for (const auto& a : r.actions)
        if (a.kind == Action::Kind::Close) closes.push_back(a.target);
    CHECK(closes == std::vector<std::string>{"C1", "C2", "C4"});

    r = ex.step(r.next, FsmInput::source("APU", SourceStatus::Available));
    CHECK(ex.fsm().states[r.next.control] == "cfg_C1_C3_C4");
    std::vector<std::string> acts;
    for (const auto& a : r.actions) acts.push_back(a.str());
    CHECK(acts == std::vector<std::string>{"open(C2)", "close(C3)"});

    // no change of availability, no transition
    const auto again = ex.step(r.next, FsmInput::tick());
    CHECK(again.transition == -1);
    CHECK(again.next == r.next);
}

TEST_CASE("break-before-make refinement")
{
    Canonical c;
    const auto naive = generate_priority_controller(c.t, c.req.priority_lists);
    BreakBeforeMakeParams p;
    CHECK(p.delay_ticks() == 1);
    const auto ref = refine_break_before_make(naive, p);
    CHECK(ref.states.size() == 152);
    CHECK(ref.transitions.size() == 265);
    CHECK(ref.parameters.at("currentThresholdFraction") == doctest::Approx(0.1));
    CHECK(ref.parameters.at("confirmSamples") == 3);
    CHECK(ref.parameters.at("deterministicDelay") == doctest::Approx(1e-3));
    CHECK_NOTHROW(FsmExecutor{ref});
    for (const auto& tr : ref.transitions) {
        const bool opens = std::any_of(tr.actions.begin(), tr.actions.end(),
                                       [](const Action& a) { return a.kind == Action::Kind::Open; });
        const bool closes = std::any_of(tr.actions.begin(), tr.actions.end(),
                                        [](const Action& a) { return a.kind == Action::Kind::Close; });
        CHECK_FALSE((opens && closes));
    }

    BreakBeforeMakeParams bad;
    bad.confirm_samples = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = {};
    bad.current_threshold_fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("refined handover waits for low current plus the delay")
{
    Canonical c;
    for (int confirm : {1, 3}) {
        for (double delay : {0.0, 1e-3, 2.5e-3}) {
            BreakBeforeMakeParams p;
            p.confirm_samples = confirm;
            p.deterministic_delay = delay;
            const FsmExecutor ex(refine_break_before_make(generate_priority_controller(c.t, c.req.priority_lists), p));
            auto s = ex.initial_state({SourceStatus::Off, SourceStatus::Available, SourceStatus::Off});
            for (int i = 0; i < 10 && ex.fsm().states[s.control] != "cfg_C1_C2_C4"; ++i)
                s = ex.step(s, FsmInput::tick()).next;
            REQUIRE(ex.fsm().states[s.control] == "cfg_C1_C2_C4");
            for (const auto& id : {"C1", "C2", "C4"}) s = ex.step(s, FsmInput::closed(id)).next;

            auto r = ex.step(s, FsmInput::source("APU", SourceStatus::Available));
            REQUIRE(r.actions.size() == 1);
            CHECK(r.actions[0].str() == "open(C2)");
            s = r.next;
            for (int i = 0; i < 5; ++i) {
                r = ex.step(s, FsmInput::tick());
                CHECK(r.actions.empty());
                s = r.next;
            }
            s = ex.step(s, FsmInput::opened("C2")).next;
            s = ex.step(s, FsmInput::current_low("C2")).next;
            int ticks = 0;
            std::vector<Action> acts;
            while (acts.empty() && ticks < 20) {
                r = ex.step(s, FsmInput::tick());
                s = r.next;
                acts = r.actions;
                ++ticks;
            }
            CHECK(ticks == confirm + p.delay_ticks());
            REQUIRE(acts.size() == 1);
            CHECK(acts[0].str() == "close(C3)");
            CHECK(ex.fsm().states[s.control] == "cfg_C1_C3_C4");
        }
    }
}

TEST_CASE("controller documents round trip")
{
    Canonical c;
    const auto ref = refine_break_before_make(generate_priority_controller(c.t, c.req.priority_lists));
    CHECK(load_fsm(save_fsm(ref)) == ref);
    const auto shipped = load_fsm_file(oracle::data("canonical/controllers/priority_bbm.json"));
    CHECK(shipped == ref);
    CHECK_THROWS_AS(load_fsm("{}"), ParseError);
    CHECK_THROWS_AS(validate_against(load_fsm_file(oracle::data("canonical/controllers/priority.json")),
                                     c.t.without("C5")),
                    ValidationError);
}

TEST_CASE("executor rejects malformed controllers")
{
    const Transition ab{"a", "b", Trigger::Event, Guard::always(), {}};
    CHECK_NOTHROW(FsmExecutor{tiny({ab})});
    CHECK_THROWS_AS(FsmExecutor{tiny({{"a", "zz", Trigger::Event, Guard::always(), {}}})}, ValidationError);
    CHECK_THROWS_AS(FsmExecutor{tiny({{"a", "b", Trigger::Event, Guard::status_is("X", SourceStatus::Off), {}}})},
                    ValidationError);
    CHECK_THROWS_AS(FsmExecutor{tiny({{"a", "b", Trigger::Event, Guard::always(), {Action::parse("open(Q)")}}})},
                    ValidationError);
    // overlapping guards out of one state
    const Transition g1{"a", "b", Trigger::Event, Guard::status_is("G", SourceStatus::Available), {}};
    const Transition g2{"a", "a", Trigger::Event, Guard::status_not("G", SourceStatus::Failed), {}};
    CHECK_THROWS_AS(FsmExecutor{tiny({g1, g2})}, ValidationError);
    const Transition g3{"a", "a", Trigger::Event, Guard::status_is("G", SourceStatus::Failed), {}};
    CHECK_NOTHROW(FsmExecutor{tiny({g1, g3})});
}

TEST_CASE("executor trigger semantics and livelock")
{
    const FsmExecutor ex(tiny({{"a", "b", Trigger::Tick, Guard::always(), {Action::parse("close(K)")}}}));
    auto s = ex.initial_state({SourceStatus::Available});
    CHECK(ex.step(s, FsmInput::source("G", SourceStatus::Failed)).transition == -1);
    CHECK(ex.step(s, FsmInput::none()).transition == -1);
    const auto r = ex.step(s, FsmInput::tick());
    CHECK(r.transition == 0);
    CHECK(r.actions.size() == 1);
    CHECK_THROWS_AS(ex.resolve(FsmInput::closed("Z")), ExecutionError);

    const FsmExecutor spin(tiny({{"a", "b", Trigger::Always, Guard::always(), {}},
                                 {"b", "a", Trigger::Always, Guard::always(), {}}}));
    auto st = spin.initial_state({SourceStatus::Off});
    CHECK_THROWS_AS(spin.run(st, spin.resolve(FsmInput::tick())), ExecutionError);

    const FsmExecutor once(tiny({{"a", "b", Trigger::Always, Guard::always(), {}}}));
    auto s1 = once.initial_state({SourceStatus::Off});
    CHECK(once.run(s1, once.resolve(FsmInput::none())) == std::vector<int>{0});
    CHECK(s1.control == 1);
}

TEST_CASE("latched variables")
{
    const FsmExecutor ex(tiny({{"a", "b", Trigger::Event, Guard::parse("low(K) && opened(K)"), {}}}));
    auto s = ex.initial_state({SourceStatus::Off});
    CHECK(has_bit(s.low, 0));
    s = ex.step(s, FsmInput::closed("K")).next;
    CHECK(has_bit(s.feedback_closed, 0));
    CHECK_FALSE(has_bit(s.low, 0));
    auto r = ex.step(s, FsmInput::opened("K"));
    CHECK(r.transition == -1);
    r = ex.step(r.next, FsmInput::current_low("K"));
    CHECK(r.transition == 0);
}

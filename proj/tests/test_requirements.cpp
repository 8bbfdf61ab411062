#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epsvp/errors.hpp>
#include <epsvp/requirements.hpp>

#include "oracles.hpp"

using namespace epsvp;

namespace {

Topology canonical()
{
    return load_topology_file(oracle::data("canonical/topology.json"));
}

ContactorConfig closed(const Topology& t, const std::vector<std::string>& ids)
{
    return ContactorConfig::with_closed(t.contactors(), ids);
}

} // namespace

TEST_CASE("canonical requirements document")
{
    const auto t = canonical();
    const auto r = load_requirements_file(oracle::data("canonical/requirements.json"), t);
    REQUIRE(r.records.size() == 5);
    CHECK(r.records[0].id == "R1");
    CHECK(r.records[0].kind == RequirementKind::Safety);
    CHECK(r.records[0].responsible == std::vector<std::string>{"BPCU"});
    CHECK(r.relations.size() == 2);
    REQUIRE(r.priority_lists.size() == 2);
    CHECK(r.priority_lists[0].bus == "B1");
    CHECK(r.priority_lists[0].ordered_sources == std::vector<std::string>{"L1", "APU", "R1"});
    CHECK(r.priority_lists[1].requirement == "R4");
    CHECK(r.ac_band.low() == doctest::Approx(110));
    CHECK(r.ac_band.high() == doctest::Approx(120));
    CHECK(r.dc_band.nominal == doctest::Approx(28));
    CHECK(r.reliability.threshold == doctest::Approx(1e-9));
    CHECK(r.reliability.mission_hours == doctest::Approx(10));
    CHECK(r.no_paralleling_id == "R1");
    CHECK(r.essential_power_id == "R5");
}

TEST_CASE("defaults")
{
    const auto r = default_requirements();
    CHECK(r.records.empty());
    CHECK(r.ac_band.nominal == 115);
    CHECK(r.ac_band.tolerance == 5);
    CHECK(r.ac_band.frequency == 400);
    CHECK(r.dc_band.tolerance == 2);
    CHECK(r.reliability.threshold == 1e-9);
    CHECK(r.reliability.mission_hours == 10);
    CHECK(load_requirements("{}", canonical()).priority_lists.empty());
}

TEST_CASE("requirements validation")
{
    const auto t = canonical();
    CHECK_THROWS_AS(load_requirements(R"({"requirements": [{"id": "X", "kind": "Wish"}]})", t), ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"requirements": [{"id": "X", "kind": "Safety", "affected": ["C9"]}]})", t),
                    ValidationError);
    CHECK_NOTHROW(load_requirements(R"({"requirements": [{"id": "X", "kind": "Safety", "responsible": ["GCU"]}]})", t));
    CHECK_THROWS_AS(load_requirements(R"({"requirements": [{"id": "X", "kind": "Safety"}, {"id": "X", "kind": "Safety"}]})", t),
                    ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"priorityLists": [{"bus": "B9", "sources": ["L1"]}]})", t), ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"priorityLists": [{"bus": "B1", "sources": ["L1", "L1"]}]})", t),
                    ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"priorityLists": [{"bus": "B1", "sources": ["C1"]}]})", t), ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"voltageBands": [{"class": "AC", "tolerance": 0}]})", t), ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"reliability": {"threshold": 1.5}})", t), ValidationError);
    CHECK_THROWS_AS(load_requirements(R"({"reliability": {"missionHours": 0}})", t), ValidationError);
    CHECK_THROWS_AS(load_requirements("[]", t), ParseError);
}

TEST_CASE("safety evaluation on sample configurations")
{
    const auto t = canonical();
    const auto p = compile_no_paralleling(t);
    CHECK(evaluate_safety(p, closed(t, {"C1", "C5"})).safe);
    CHECK(evaluate_safety(p, closed(t, {"C1", "C2", "C4"})).safe);
    const auto v = evaluate_safety(p, closed(t, {"C1", "C2", "C3"}));
    CHECK_FALSE(v.safe);
    CHECK(v.violated == std::vector<std::string>{"C1", "C2", "C3"});
    CHECK_FALSE(evaluate_safety(p, closed(t, {"C3", "C4", "C5"})).safe);
    for (const auto& conj : p.forbidden) CHECK(std::is_sorted(conj.begin(), conj.end()));

    const auto m = compile_masks(p, t);
    CHECK(m.first_violation(t.contactor_mask({"C1", "C5"})) < 0);
    CHECK(m.first_violation(t.contactor_mask({"C1", "C2", "C3", "C4"})) >= 0);
}

TEST_CASE("DC buses join the property only on request")
{
    const auto t = load_topology_file(oracle::data("canonical/topology_dc.json"));
    const auto ac = compile_no_paralleling(t);
    CompileOptions opt;
    opt.include_dc = true;
    const auto all = compile_no_paralleling(t, opt);
    CHECK(all.forbidden == ac.forbidden);   // DC buses are fed through the AC buses only
}

TEST_CASE("priority verdicts")
{
    const auto t = canonical();
    const auto r = load_requirements_file(oracle::data("canonical/requirements.json"), t);
    const auto& lists = r.priority_lists;

    auto v = check_priority(t, lists, closed(t, {"C1", "C5"}), {"APU", "L1", "R1"});
    REQUIRE(v.size() == 2);
    CHECK(v[0].status == PriorityStatus::Ok);
    CHECK(v[0].expected == "L1");
    CHECK(v[1].status == PriorityStatus::Ok);
    CHECK(v[1].expected == "R1");

    v = check_priority(t, lists, closed(t, {"C1", "C2", "C4"}), {"APU", "L1", "R1"});
    CHECK(v[1].status == PriorityStatus::WrongSource);
    CHECK(v[1].actual == std::vector<std::string>{"L1"});

    v = check_priority(t, lists, closed(t, {"C5"}), {"L1", "R1"});
    CHECK(v[0].status == PriorityStatus::Unpowered);

    v = check_priority(t, lists, closed(t, {}), {});
    CHECK(v[0].status == PriorityStatus::NoneAvailable);
    CHECK_FALSE(v[0].expected);

    CHECK_THROWS_AS(check_priority(t, lists, closed(t, {}), {"B1"}), LookupError);
}

TEST_CASE("effective priority drops unreachable sources")
{
    const auto t = canonical().without("C2");
    const PriorityList b1{"B1", {"L1", "APU", "R1"}, "R3"};
    CHECK(effective_priority(t, b1) == std::vector<std::string>{"L1"});
    const PriorityList b2{"B2", {"R1", "APU", "L1"}, "R4"};
    CHECK(effective_priority(t, b2) == std::vector<std::string>{"R1", "APU"});
}

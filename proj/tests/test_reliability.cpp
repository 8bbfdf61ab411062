#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <epsvp/errors.hpp>
#include <epsvp/reliability.hpp>

#include "oracles.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <set>

using namespace epsvp;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

struct Canonical
{
    Topology t = load_topology_file(oracle::data("canonical/topology.json"));
    RequirementSet req = load_requirements_file(oracle::data("canonical/requirements.json"), t);
};

Big big_p(double rate, double hours)
{
    return Big(1) - boost::multiprecision::exp(-Big(rate) * Big(hours));
}

// Exact loss probability by enumerating every joint state of the components that can fail.
double exact_loss(const Topology& t, const FailureModel& f, const std::string& bus)
{
    std::vector<std::string> ids;
    for (const auto& [id, rate] : f.rates)
        if (rate > 0) ids.push_back(id);
    Big total = 0;
    for (unsigned long m = 0; m < (1UL << ids.size()); ++m) {
        oracle::Ids failed;
        Big pr = 1;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const Big p = big_p(f.rates.at(ids[i]), f.mission_hours);
            if (m >> i & 1UL) {
                failed.insert(ids[i]);
                pr *= p;
            } else {
                pr *= Big(1) - p;
            }
        }
        if (oracle::disconnected(t, bus, failed)) total += pr;
    }
    return total.convert_to<double>();
}

std::set<oracle::Ids> as_sets(const std::vector<CutSet>& cuts)
{
    std::set<oracle::Ids> out;
    for (const auto& c : cuts) out.insert(oracle::Ids(c.components.begin(), c.components.end()));
    return out;
}

Component gen(const std::string& id, double rate)
{
    Generator g;
    g.failure_rate = rate;
    return {id, g};
}

Component con(const std::string& id, double rate)
{
    Contactor c;
    c.failure_rate = rate;
    return {id, c};
}

CutSet cut(std::vector<std::string> ids)
{
    std::sort(ids.begin(), ids.end());
    return {"B", ids};
}

// Bus fed by `n` generators, each over two contactors in series.
Topology star(int n, double rate)
{
    std::vector<Component> comps{{"B", Bus{}}};
    std::vector<ContactorEdge> edges;
    for (int i = 0; i < n; ++i) {
        const auto s = std::to_string(i);
        comps.push_back(gen("G" + s, rate));
        comps.push_back({"N" + s, Bus{}});
        comps.push_back(con("Ka" + s, rate));
        comps.push_back(con("Kb" + s, rate));
        edges.push_back({"Ka" + s, "G" + s, "N" + s});
        edges.push_back({"Kb" + s, "N" + s, "B"});
    }
    return Topology::build("star", comps, edges);
}

} // namespace

TEST_CASE("canonical cut sets match the brute-force oracle")
{
    Canonical c;
    const auto cuts = minimal_cut_sets(c.t, "B1");
    CHECK(cuts.size() == 14);
    const auto got = as_sets(cuts);
    CHECK(got == oracle::cut_sets(c.t, "B1", 8));
    CHECK(got.count({"L1", "APU", "R1"}));
    CHECK(got.count({"L1", "C2"}));
    CHECK(got.count({"C1", "C2"}));
    CHECK(as_sets(minimal_cut_sets(c.t, "B2")) == oracle::cut_sets(c.t, "B2", 8));
    CHECK(as_sets(minimal_cut_sets(c.t, "LD-B1")) == got);
    for (const auto& cs : cuts) CHECK(cs.target == "B1");
    for (std::size_t i = 1; i < cuts.size(); ++i) CHECK(cuts[i - 1].components.size() <= cuts[i].components.size());
}

TEST_CASE("cut sets through converters")
{
    const auto t = load_topology_file(oracle::data("canonical/topology_dc.json"));
    const auto got = as_sets(minimal_cut_sets(t, "DC1"));
    CHECK(got == oracle::cut_sets(t, "DC1", 9));
    CHECK(got.count({"TRU1"}));
}

TEST_CASE("small cut-set cases")
{
    const auto one = Topology::build("one", {gen("G", 1e-4), {"B", Bus{}}, con("K", 0)}, {{"K", "G", "B"}});
    CHECK(minimal_cut_sets(one, "B") == std::vector<CutSet>{cut({"G"}), cut({"K"})});

    const auto two = Topology::build("two", {gen("G1", 1e-4), gen("G2", 1e-4), {"B", Bus{}}, con("K1", 0), con("K2", 0)},
                                     {{"K1", "G1", "B"}, {"K2", "G2", "B"}});
    CHECK(as_sets(minimal_cut_sets(two, "B")) ==
          std::set<oracle::Ids>{{"G1", "G2"}, {"G1", "K2"}, {"K1", "G2"}, {"K1", "K2"}});

    ValidationOptions loose;
    loose.require_connected = false;
    const auto island = Topology::build("island", {gen("G", 1e-4), {"B", Bus{}}, {"X", Bus{}}, con("K", 0)},
                                        {{"K", "G", "B"}}, loose);
    const auto none = minimal_cut_sets(island, "X");
    REQUIRE(none.size() == 1);
    CHECK(none[0].components.empty());
    const auto f = failure_model(island, 10);
    CHECK(mission_failure_probability(none, f).probability == 1.0);

    CHECK_THROWS_AS(minimal_cut_sets(one, "nope"), LookupError);
    CHECK_THROWS_AS(minimal_cut_sets(one, "K"), ValidationError);
}

TEST_CASE("closed-form mission probabilities")
{
    FailureModel f;
    f.mission_hours = 10;
    f.rates = {{"A", 1e-4}, {"B", 1e-4}};
    const double pa = big_p(1e-4, 10).convert_to<double>();
    const auto single = mission_failure_probability({cut({"A"})}, f);
    CHECK(single.method == "exact");
    CHECK(std::abs(single.probability - pa) < 1e-15);
    CHECK(format_probability(single.probability) == "9.99500166625e-04");

    const auto both = mission_failure_probability({cut({"A"}), cut({"B"})}, f);
    const Big q = boost::multiprecision::exp(-Big(1e-4) * 10);
    CHECK(std::abs(both.probability - (Big(1) - q * q).convert_to<double>()) < 1e-15);
    CHECK(format_probability(both.probability).rfind("1.99800", 0) == 0);

    CHECK(mission_failure_probability({}, f).probability == 0.0);
    CHECK_THROWS_AS(mission_failure_probability({cut({"Z"})}, f), LookupError);
}

TEST_CASE("exact probability agrees with a high-precision state enumeration")
{
    Canonical c;
    auto f = failure_model(c.t, 10);
    CHECK(std::abs(mission_failure_probability(minimal_cut_sets(c.t, "B1"), f).probability -
                   exact_loss(c.t, f, "B1")) < 1e-12);

    for (const auto& id : c.t.contactors()) f.rates[id] = 3e-5;
    f.rates["APU"] = 5e-4;
    for (const auto& bus : {"B1", "B2"}) {
        const auto p = mission_failure_probability(minimal_cut_sets(c.t, bus), f);
        CHECK(p.method == "exact");
        const double want = exact_loss(c.t, f, bus);
        CHECK(std::abs(p.probability - want) < 1e-12);
        CHECK(p.probability == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("bounded probability for many cut sets")
{
    const auto t = star(4, 1e-2);
    const auto cuts = minimal_cut_sets(t, "B");
    CHECK(cuts.size() == 81);
    CHECK(as_sets(cuts) == oracle::cut_sets(t, "B", 4));
    const auto f = failure_model(t, 10);
    const auto p = mission_failure_probability(cuts, f);
    CHECK(p.method == "first-order-bound");
    const double exact = exact_loss(t, f, "B");
    CHECK(p.probability >= exact);
    CHECK(p.lower_bound <= exact);
    CHECK(p.lower_bound >= 0);
}

TEST_CASE("must-handle combinations at the default threshold")
{
    Canonical c;
    auto f = failure_model(c.t, c.req.reliability.mission_hours);
    apply_rates_file(f, oracle::data("canonical/rates.json"), c.t);
    const auto combos = must_handle_combinations(c.t, f, c.req.reliability);
    REQUIRE(combos.size() == 6);
    const Big p = big_p(1e-4, 10);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(combos[i].failed.size() == 1);
        CHECK(std::abs(combos[i].probability - p.convert_to<double>()) < 1e-12);
    }
    for (std::size_t i = 3; i < 6; ++i) {
        CHECK(combos[i].failed.size() == 2);
        CHECK(std::abs(combos[i].probability - Big(p * p).convert_to<double>()) < 1e-12);
    }
    const double triple = Big(p * p * p).convert_to<double>();
    CHECK(triple < 1e-9);
    CHECK(triple == doctest::Approx(9.985e-10).epsilon(1e-4));
    for (std::size_t i = 1; i < combos.size(); ++i) CHECK(combos[i - 1].probability >= combos[i].probability);

    // every subset of an included combination is included
    std::set<std::vector<std::string>> seen;
    for (const auto& cmb : combos) seen.insert(cmb.failed);
    for (const auto& cmb : combos) {
        for (std::size_t drop = 0; drop < cmb.failed.size() && cmb.failed.size() > 1; ++drop) {
            auto sub = cmb.failed;
            sub.erase(sub.begin() + static_cast<long>(drop));
            CHECK(seen.count(sub));
        }
    }
}

TEST_CASE("must-handle combinations under other rates and thresholds")
{
    Canonical c;
    auto f = failure_model(c.t, 10);
    for (const auto& s : c.t.sources()) f.rates[s] = 2e-4;
    const auto more = must_handle_combinations(c.t, f, c.req.reliability);
    CHECK(more.size() == 7);
    CHECK(more.back().failed.size() == 3);
    CHECK(more.back().probability > 1e-9);
    CHECK(more.back().probability == doctest::Approx(7.98e-9).epsilon(1e-3));

    ReliabilitySpec loose{1.0, 10};
    CHECK(must_handle_combinations(c.t, f, loose).empty());
    CHECK(must_handle_combinations(c.t, f, c.req.reliability, 1).size() == 3);
}

TEST_CASE("rates documents")
{
    Canonical c;
    auto f = failure_model(c.t, 10);
    apply_rates(f, R"({"failureRates": {"C1": 1e-6}, "missionHours": 5})", c.t);
    CHECK(f.rates.at("C1") == 1e-6);
    CHECK(f.mission_hours == 5);
    CHECK_THROWS_AS(apply_rates(f, R"({"failureRates": {"Q": 1e-6}})", c.t), LookupError);
    CHECK_THROWS_AS(apply_rates(f, R"({"failureRates": {"B1": 1e-6}})", c.t), ValidationError);
    CHECK_THROWS_AS(apply_rates(f, R"({"failureRates": {"C1": -1}})", c.t), ValidationError);
    CHECK_THROWS_AS(apply_rates(f, R"({"rates": {}})", c.t), ParseError);
    CHECK_THROWS_AS(failure_model(c.t, 0), ValidationError);
    CHECK_THROWS_AS(f.probability("nope"), LookupError);
}

TEST_CASE("failure events per component kind")
{
    const auto t = load_topology_file(oracle::data("canonical/topology_dc.json"));
    CHECK(failure_event(t, "L1").str() == "L1=Failed");
    CHECK(failure_event(t, "C2").str() == "C2=StuckOpen");
    CHECK(failure_event(t, "TRU1").str() == "TRU1=ConverterFailed");
    CHECK_THROWS_AS(failure_event(t, "B1"), LookupError);
}

TEST_CASE("closure: refined controller covers every must-handle combination")
{
    Canonical c;
    const auto fsm = refine_break_before_make(generate_priority_controller(c.t, c.req.priority_lists));
    auto f = failure_model(c.t, 10);
    const auto combos = must_handle_combinations(c.t, f, c.req.reliability);
    const auto results = closure_check(c.t, fsm, c.req, combos);
    REQUIRE(results.size() == 6);
    for (const auto& r : results) CHECK(r.pass);

    const auto cut_down = c.t.without("C2");
    const auto weak = refine_break_before_make(generate_priority_controller(cut_down, c.req.priority_lists));
    const auto broken = closure_check(cut_down, weak, c.req, combos);
    std::vector<std::vector<std::string>> failing;
    for (const auto& r : broken)
        if (!r.pass) failing.push_back(r.combination.failed);
    CHECK(std::find(failing.begin(), failing.end(), std::vector<std::string>{"L1"}) != failing.end());
    for (const auto& r : broken)
        if (!r.pass) CHECK(r.violated == "R5");
}

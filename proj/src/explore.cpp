#include <epsvp/discrete.hpp>
#include <epsvp/errors.hpp>

#include <chrono>
#include <deque>
#include <unordered_map>

namespace epsvp {

namespace {

struct Node
{
    GlobalState state;
    int parent;
    int event;   // index into the candidate list, -1 for an idle step
    int depth;
};

std::vector<EnvEvent> candidate_events(const Topology& t, const EnvironmentModel& env)
{
    if (!env.only.empty()) return env.only;
    std::vector<EnvEvent> out;
    if (env.source_changes) {
        for (const auto& s : t.sources()) {
            for (auto st : {SourceStatus::Off, SourceStatus::Available, SourceStatus::Failed})
                out.push_back({EnvEvent::Kind::SourceStatus, s, st});
        }
    }
    if (env.contactor_faults) {
        for (const auto& c : t.contactors()) out.push_back({EnvEvent::Kind::ContactorStuckOpen, c, SourceStatus::Failed});
    }
    if (env.converter_faults) {
        for (const auto& c : t.converters()) out.push_back({EnvEvent::Kind::ConverterFailed, c, SourceStatus::Failed});
    }
    return out;
}

std::string list_id(const PriorityList& l)
{
    return l.requirement.empty() ? "priority:" + l.bus : l.requirement;
}

} // namespace

Scenario counterexample_scenario(const Topology& t, const ExploreOptions& options,
                                 const std::vector<EnvEvent>& events, const std::vector<long>& steps)
{
    Scenario s;
    s.name = "counterexample";
    s.step_duration = options.step_duration;
    for (const auto& src : t.sources()) {
        auto it = options.initial.find(src);
        s.initial[src] = it == options.initial.end() ? SourceStatus::Available : it->second;
    }
    for (std::size_t i = 0; i < events.size(); ++i) s.events.push_back({std::nullopt, steps[i], events[i]});
    return s;
}

ExploreResult explore(const Topology& t, const BpcuFsm& fsm, const RequirementSet& req, const ExploreOptions& options)
{
    if (options.fault_budget < 0) throw ValidationError("fault budget must be >= 0");
    const auto start = std::chrono::steady_clock::now();
    const DiscreteModel model(t, fsm, options.step_duration);
    const auto safety = compile_masks(compile_no_paralleling(t, {req.paralleling_includes_dc, std::nullopt}), t);
    const auto events = candidate_events(t, options.environment);
    for (const auto& e : events) {
        Scenario probe;
        probe.events.push_back({std::nullopt, 1, e});
        validate_scenario(probe, t);
    }

    struct ListCheck
    {
        std::string id;
        int bus;
        std::vector<int> order;   // effective priority, topology source indices
    };
    std::vector<ListCheck> lists;
    if (options.check_priority) {
        for (const auto& l : req.priority_lists) {
            ListCheck c{list_id(l), t.node_index(l.bus), {}};
            for (const auto& s : effective_priority(t, l)) c.order.push_back(t.source_index(s));
            lists.push_back(std::move(c));
        }
    }
    std::vector<int> essential;
    for (const auto& b : t.buses())
        if (t.as<Bus>(b).essential) essential.push_back(t.node_index(b));

    ExploreResult result;
    std::map<std::string, std::pair<int, std::string>> first_failure;   // requirement -> (node, detail)
    std::vector<std::string> order;
    auto record = [&](const std::string& id, int node, std::string detail) {
        if (first_failure.count(id)) return;
        first_failure.emplace(id, std::pair(node, std::move(detail)));
        order.push_back(id);
    };

    std::vector<Node> nodes;
    std::unordered_map<std::string, int> seen;
    std::deque<int> queue;

    auto check = [&](int id) {
        const GlobalState& s = nodes[id].state;
        const int v = safety.first_violation(s.closed);
        if (v >= 0) {
            std::string d = "closed together:";
            for (const auto& c : t.contactor_ids(safety.forbidden[v])) d += " " + c;
            record(req.no_paralleling_id, id, d);
        }
        if (lists.empty() && !options.check_essential) return;
        const Mask avail = model.available(s);
        if (avail == 0 || !model.quiescent(s)) return;
        ++result.stats.quiescent_states;
        const auto reach = model.reach(s);
        for (const auto& l : lists) {
            int expected = -1;
            for (int src : l.order) {
                if (has_bit(avail, src)) {
                    expected = src;
                    break;
                }
            }
            if (expected < 0) continue;
            if (reach[l.bus] != bit(expected)) {
                std::string d = t.nodes()[l.bus] + " expected " + t.sources()[expected] + ", fed by {";
                bool first = true;
                for (std::size_t k = 0; k < t.sources().size(); ++k) {
                    if (!has_bit(reach[l.bus], static_cast<int>(k))) continue;
                    d += (first ? "" : ",") + t.sources()[k];
                    first = false;
                }
                record(l.id, id, d + "}");
            }
        }
        if (options.check_essential) {
            for (int b : essential) {
                if ((reach[b] & avail) == 0) record(req.essential_power_id, id, t.nodes()[b] + " unpowered");
            }
        }
    };

    auto add = [&](GlobalState s, int parent, int event, int depth) {
        auto key = s.key();
        auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(nodes.size()));
        if (!inserted) return;
        nodes.push_back({std::move(s), parent, event, depth});
        result.stats.max_depth = std::max(result.stats.max_depth, depth);
        queue.push_back(it->second);
        check(it->second);
    };

    std::vector<SourceStatus> init;
    for (const auto& src : t.sources()) {
        auto it = options.initial.find(src);
        init.push_back(it == options.initial.end() ? SourceStatus::Available : it->second);
    }
    add(model.initialize(init, options.fault_budget), -1, -1, 0);

    while (!queue.empty()) {
        if (nodes.size() > options.max_states) {
            result.bound_exceeded = true;
            break;
        }
        const int id = queue.front();
        queue.pop_front();
        const int depth = nodes[id].depth + 1;
        {
            GlobalState next = model.step(nodes[id].state, nullptr, depth);
            ++result.stats.transitions;
            add(std::move(next), id, -1, depth);
        }
        for (std::size_t e = 0; e < events.size(); ++e) {
            if (!model.can_apply(nodes[id].state, events[e])) continue;
            GlobalState next = model.step(nodes[id].state, &events[e], depth);
            ++result.stats.transitions;
            add(std::move(next), id, static_cast<int>(e), depth);
        }
    }
    result.stats.states_visited = nodes.size();

    std::vector<std::string> ids{req.no_paralleling_id};
    for (const auto& l : lists) ids.push_back(l.id);
    if (options.check_essential) ids.push_back(req.essential_power_id);
    for (const auto& id : ids) {
        auto it = first_failure.find(id);
        if (it != first_failure.end()) {
            result.requirements.push_back({id, false, it->second.second});
        } else if (result.bound_exceeded) {
            result.requirements.push_back({id, false, "inconclusive: state bound exceeded"});
        } else {
            result.requirements.push_back({id, true, ""});
        }
    }

    if (!order.empty()) {
        // Shallowest violation wins; BFS order makes each per-requirement one minimal.
        std::string best = order.front();
        for (const auto& id : order)
            if (nodes[first_failure[id].first].depth < nodes[first_failure[best].first].depth) best = id;
        const int bad = first_failure[best].first;
        result.pass = false;
        result.violated = best;
        result.detail = first_failure[best].second;
        result.counterexample_steps = nodes[bad].depth;
        std::vector<int> chain;
        for (int n = bad; n >= 0; n = nodes[n].parent) chain.push_back(n);
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            if (nodes[*it].event >= 0) {
                result.events.push_back(events[nodes[*it].event]);
                result.event_steps.push_back(nodes[*it].depth);
            }
        }
        const auto scenario = counterexample_scenario(t, options, result.events, result.event_steps);
        result.counterexample = simulate_events(t, fsm, scenario).trace;
    } else if (result.bound_exceeded) {
        result.pass = false;
        result.detail = "state bound of " + std::to_string(options.max_states) + " exceeded";
    }
    result.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace epsvp

#include <epsvp/errors.hpp>
#include <epsvp/topology.hpp>

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

namespace epsvp {

std::string to_string(GeneratorClass c)
{
    switch (c) {
        case GeneratorClass::HVAC: return "HVAC";
        case GeneratorClass::LVAC: return "LVAC";
        case GeneratorClass::APU: return "APU";
        case GeneratorClass::Battery: return "Battery";
    }
    return "?";
}

std::string to_string(BusClass c) { return c == BusClass::AC ? "AC" : "DC"; }

std::string to_string(ConverterKind k)
{
    switch (k) {
        case ConverterKind::Transformer: return "Transformer";
        case ConverterKind::RectifierUnit: return "RectifierUnit";
        case ConverterKind::TRU: return "TRU";
    }
    return "?";
}

std::string to_string(SwitchState s) { return s == SwitchState::Open ? "Open" : "Closed"; }

void throw_wrong_kind(const std::string& id)
{
    throw LookupError("component '" + id + "' has a different kind");
}

ContactorConfig ContactorConfig::uniform(const std::vector<std::string>& ids, SwitchState s)
{
    ContactorConfig c;
    for (const auto& id : ids) c.state_[id] = s;
    return c;
}

ContactorConfig ContactorConfig::with_closed(const std::vector<std::string>& ids,
                                             const std::vector<std::string>& closed)
{
    auto c = uniform(ids, SwitchState::Open);
    for (const auto& id : closed) {
        if (!c.contains(id)) throw LookupError("unknown contactor '" + id + "'");
        c.state_[id] = SwitchState::Closed;
    }
    return c;
}

SwitchState ContactorConfig::at(const std::string& id) const
{
    auto it = state_.find(id);
    if (it == state_.end()) throw LookupError("contactor '" + id + "' missing from configuration");
    return it->second;
}

std::vector<std::string> ContactorConfig::closed_ids() const
{
    std::vector<std::string> out;
    for (const auto& [id, s] : state_)
        if (s == SwitchState::Closed) out.push_back(id);
    return out;
}

namespace {

void check(bool ok, const std::string& msg)
{
    if (!ok) throw ValidationError(msg);
}

void validate_parameters(const Component& c)
{
    const auto& id = c.id;
    std::visit([&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Generator>) {
            check(k.rated_voltage > 0, "generator '" + id + "': ratedVoltage must be > 0");
            check(k.failure_rate >= 0, "generator '" + id + "': failureRate must be >= 0");
            check(k.rated_power >= 0, "generator '" + id + "': ratedPower must be >= 0");
            check(k.internal_resistance > 0, "generator '" + id + "': internalResistance must be > 0");
            check(k.regulator_time_constant > 0, "generator '" + id + "': regulatorTimeConstant must be > 0");
        } else if constexpr (std::is_same_v<T, Contactor>) {
            check(k.failure_rate >= 0, "contactor '" + id + "': failureRate must be >= 0");
            check(k.open_delay >= 0 && k.close_delay >= 0, "contactor '" + id + "': delays must be >= 0");
            check(k.decay_time_constant > 0, "contactor '" + id + "': decayTimeConstant must be > 0");
        } else if constexpr (std::is_same_v<T, Bus>) {
            if (k.essential) {
                check(k.t_max.has_value(), "essential bus '" + id + "' is missing tMax");
            }
            if (k.t_max) check(*k.t_max > 0, "bus '" + id + "': tMax must be > 0");
        } else if constexpr (std::is_same_v<T, Converter>) {
            check(k.efficiency > 0 && k.efficiency <= 1, "converter '" + id + "': efficiency must be in (0, 1]");
            check(k.gain > 0, "converter '" + id + "': voltage ratio must be > 0");
            check(k.failure_rate >= 0, "converter '" + id + "': failureRate must be >= 0");
        } else if constexpr (std::is_same_v<T, Load>) {
            check(k.resistance > 0, "load '" + id + "': resistance must be > 0");
        }
    }, c.kind);
}

} // namespace

Topology Topology::build(std::string name,
                         std::vector<Component> components,
                         std::vector<ContactorEdge> edges,
                         ValidationOptions options)
{
    check(!components.empty(), "topology '" + name + "' has no components");

    Topology t;
    t.name_ = std::move(name);
    std::sort(components.begin(), components.end(),
              [](const Component& a, const Component& b) { return a.id < b.id; });
    t.components_ = std::move(components);

    for (std::size_t i = 0; i < t.components_.size(); ++i) {
        const auto& c = t.components_[i];
        check(!c.id.empty(), "component with empty id");
        check(t.index_.emplace(c.id, i).second, "duplicate component id '" + c.id + "'");
        validate_parameters(c);
        if (std::holds_alternative<Generator>(c.kind)) t.sources_.push_back(c.id);
        else if (std::holds_alternative<Bus>(c.kind)) t.buses_.push_back(c.id);
        else if (std::holds_alternative<Contactor>(c.kind)) t.contactors_.push_back(c.id);
        else if (std::holds_alternative<Converter>(c.kind)) t.converters_.push_back(c.id);
        else t.loads_.push_back(c.id);
    }
    check(t.contactors_.size() <= 64, "more than 64 contactors are not supported");
    check(t.sources_.size() <= 64, "more than 64 sources are not supported");

    t.nodes_ = t.sources_;
    t.nodes_.insert(t.nodes_.end(), t.buses_.begin(), t.buses_.end());
    for (std::size_t i = 0; i < t.nodes_.size(); ++i) t.node_index_[t.nodes_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < t.contactors_.size(); ++i) t.contactor_index_[t.contactors_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < t.converters_.size(); ++i) t.converter_index_[t.converters_[i]] = static_cast<int>(i);

    auto require_node = [&](const std::string& ref, const std::string& owner) {
        if (!t.contains(ref)) {
            throw ValidationError("'" + owner + "' references unknown node '" + ref + "'");
        }
        if (!t.node_index_.count(ref)) {
            throw ValidationError("'" + owner + "' references '" + ref + "', which is not a bus or source");
        }
    };

    std::sort(edges.begin(), edges.end(),
              [](const ContactorEdge& a, const ContactorEdge& b) { return a.contactor < b.contactor; });
    t.adjacency_.assign(t.nodes_.size(), {});
    t.contactor_ends_.assign(t.contactors_.size(), {-1, -1});
    for (const auto& e : edges) {
        if (!t.contains(e.contactor)) {
            throw ValidationError("edge references unknown contactor '" + e.contactor + "'");
        }
        check(t.contactor_index_.count(e.contactor) != 0, "edge uses '" + e.contactor + "', which is not a contactor");
        require_node(e.a, e.contactor);
        require_node(e.b, e.contactor);
        check(e.a != e.b, "contactor '" + e.contactor + "' connects '" + e.a + "' to itself");
        const int c = t.contactor_index_.at(e.contactor);
        check(t.contactor_ends_[c].first < 0, "contactor '" + e.contactor + "' appears in more than one edge");
        const int a = t.node_index_.at(e.a);
        const int b = t.node_index_.at(e.b);
        t.contactor_ends_[c] = {a, b};
        t.adjacency_[a].push_back({b, c, -1});
        t.adjacency_[b].push_back({a, c, -1});
    }
    for (std::size_t c = 0; c < t.contactors_.size(); ++c) {
        check(t.contactor_ends_[c].first >= 0, "contactor '" + t.contactors_[c] + "' is not connected by any edge");
    }
    t.edges_ = std::move(edges);

    for (std::size_t i = 0; i < t.converters_.size(); ++i) {
        const auto& id = t.converters_[i];
        const auto& cv = t.as<Converter>(id);
        require_node(cv.input, id);
        require_node(cv.output, id);
        check(cv.input != cv.output, "converter '" + id + "' feeds its own input");
        t.adjacency_[t.node_index_.at(cv.input)].push_back({t.node_index_.at(cv.output), -1, static_cast<int>(i)});
    }
    for (const auto& id : t.loads_) {
        const auto& ld = t.as<Load>(id);
        if (!t.contains(ld.bus)) throw ValidationError("load '" + id + "' references unknown node '" + ld.bus + "'");
        check(t.is_bus(ld.bus), "load '" + id + "' must attach to a bus, not '" + ld.bus + "'");
    }

    if (options.require_connected && !t.nodes_.empty()) {
        std::vector<std::vector<int>> undirected(t.nodes_.size());
        for (std::size_t n = 0; n < t.nodes_.size(); ++n) {
            for (const auto& arc : t.adjacency_[n]) {
                undirected[n].push_back(arc.to);
                undirected[arc.to].push_back(static_cast<int>(n));
            }
        }
        std::vector<bool> seen(t.nodes_.size(), false);
        std::deque<int> queue{0};
        seen[0] = true;
        while (!queue.empty()) {
            const int n = queue.front();
            queue.pop_front();
            for (int m : undirected[n]) {
                if (!seen[m]) {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        for (std::size_t n = 0; n < seen.size(); ++n) {
            check(seen[n], "node '" + t.nodes_[n] + "' is disconnected with every contactor closed");
        }
    }
    return t;
}

const Component& Topology::component(const std::string& id) const
{
    auto it = index_.find(id);
    if (it == index_.end()) throw LookupError("unknown component '" + id + "'");
    return components_[it->second];
}

bool Topology::is_source(const std::string& id) const
{
    return contains(id) && std::holds_alternative<Generator>(component(id).kind);
}

bool Topology::is_bus(const std::string& id) const
{
    return contains(id) && std::holds_alternative<Bus>(component(id).kind);
}

bool Topology::is_contactor(const std::string& id) const { return contactor_index_.count(id) != 0; }

int Topology::node_index(const std::string& id) const
{
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw LookupError("unknown bus or source '" + id + "'");
    return it->second;
}

int Topology::contactor_index(const std::string& id) const
{
    auto it = contactor_index_.find(id);
    if (it == contactor_index_.end()) throw LookupError("unknown contactor '" + id + "'");
    return it->second;
}

int Topology::source_index(const std::string& id) const
{
    auto it = std::lower_bound(sources_.begin(), sources_.end(), id);
    if (it == sources_.end() || *it != id) throw LookupError("unknown source '" + id + "'");
    return static_cast<int>(it - sources_.begin());
}

int Topology::converter_index(const std::string& id) const
{
    auto it = converter_index_.find(id);
    if (it == converter_index_.end()) throw LookupError("unknown converter '" + id + "'");
    return it->second;
}

std::vector<std::string> Topology::loads_on(const std::string& bus) const
{
    std::vector<std::string> out;
    for (const auto& id : loads_)
        if (as<Load>(id).bus == bus) out.push_back(id);
    return out;
}

Mask Topology::mask_of(const ContactorConfig& config) const
{
    Mask m = 0;
    for (std::size_t i = 0; i < contactors_.size(); ++i)
        if (config.closed(contactors_[i])) m |= bit(static_cast<int>(i));
    return m;
}

ContactorConfig Topology::config_of(Mask closed) const
{
    ContactorConfig c;
    for (std::size_t i = 0; i < contactors_.size(); ++i)
        c.set(contactors_[i], has_bit(closed, static_cast<int>(i)) ? SwitchState::Closed : SwitchState::Open);
    return c;
}

Mask Topology::contactor_mask(const std::vector<std::string>& ids) const
{
    Mask m = 0;
    for (const auto& id : ids) m |= bit(contactor_index(id));
    return m;
}

std::vector<std::string> Topology::contactor_ids(Mask m) const
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < contactors_.size(); ++i)
        if (has_bit(m, static_cast<int>(i))) out.push_back(contactors_[i]);
    return out;
}

Topology Topology::without(const std::string& id) const
{
    component(id);
    std::vector<Component> comps;
    for (const auto& c : components_) {
        if (c.id == id) continue;
        if (const auto* ld = std::get_if<Load>(&c.kind); ld && ld->bus == id) continue;
        if (const auto* cv = std::get_if<Converter>(&c.kind); cv && (cv->input == id || cv->output == id)) continue;
        comps.push_back(c);
    }
    std::vector<ContactorEdge> edges;
    std::set<std::string> dropped;
    for (const auto& e : edges_) {
        if (e.contactor == id || e.a == id || e.b == id) {
            dropped.insert(e.contactor);
            continue;
        }
        edges.push_back(e);
    }
    std::erase_if(comps, [&](const Component& c) { return dropped.count(c.id) != 0; });
    return build(name_ + "-without-" + id, std::move(comps), std::move(edges), {.require_connected = false});
}

std::vector<RouteElements> simple_routes(const Topology& t, int target_node)
{
    std::vector<RouteElements> out;
    const auto& adj = t.adjacency();
    std::vector<bool> on_path(t.nodes().size(), false);
    RouteElements current;

    std::function<void(int)> dfs = [&](int node) {
        if (node == target_node) {
            auto r = current;
            std::sort(r.converters.begin(), r.converters.end());
            out.push_back(std::move(r));
            return;
        }
        for (const auto& arc : adj[node]) {
            if (on_path[arc.to]) continue;
            on_path[arc.to] = true;
            if (arc.contactor >= 0) current.contactors |= bit(arc.contactor);
            else current.converters.push_back(arc.converter);
            dfs(arc.to);
            if (arc.contactor >= 0) current.contactors &= ~bit(arc.contactor);
            else current.converters.pop_back();
            on_path[arc.to] = false;
        }
    };

    for (std::size_t s = 0; s < t.sources().size(); ++s) {
        current = RouteElements{static_cast<int>(s), 0, {}};
        const int start = t.source_node(static_cast<int>(s));
        on_path[start] = true;
        dfs(start);
        on_path[start] = false;
    }
    return out;
}

std::vector<SourcePath> enumerate_paths(const Topology& t, const std::string& bus)
{
    if (!t.is_bus(bus)) throw LookupError("unknown bus '" + bus + "'");
    const int target = t.node_index(bus);

    // per source, minimal contactor sets
    std::vector<std::vector<Mask>> minimal(t.sources().size());
    for (const auto& r : simple_routes(t, target)) {
        auto& sets = minimal[r.source];
        const bool subsumed = std::any_of(sets.begin(), sets.end(),
                                          [&](Mask m) { return (m & r.contactors) == m; });
        if (subsumed) continue;
        std::erase_if(sets, [&](Mask m) { return (m & r.contactors) == r.contactors; });
        sets.push_back(r.contactors);
    }

    std::vector<SourcePath> out;
    for (std::size_t s = 0; s < minimal.size(); ++s) {
        for (Mask m : minimal[s]) out.push_back({t.sources()[s], bus, t.contactor_ids(m)});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Mask> powered_by(const Topology& t, Mask closed, Mask failed_converters)
{
    const auto& adj = t.adjacency();
    std::vector<Mask> reach(t.nodes().size(), 0);
    std::vector<int> stack;
    for (std::size_t s = 0; s < t.sources().size(); ++s) {
        const Mask sb = bit(static_cast<int>(s));
        const int start = t.source_node(static_cast<int>(s));
        reach[start] |= sb;
        stack.assign(1, start);
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            for (const auto& arc : adj[n]) {
                if (arc.contactor >= 0 && !has_bit(closed, arc.contactor)) continue;
                if (arc.converter >= 0 && has_bit(failed_converters, arc.converter)) continue;
                if (reach[arc.to] & sb) continue;
                reach[arc.to] |= sb;
                stack.push_back(arc.to);
            }
        }
    }
    return reach;
}

std::vector<std::string> powered_sources(const Topology& t, const ContactorConfig& config,
                                         const std::string& bus)
{
    if (!t.is_bus(bus)) throw LookupError("unknown bus '" + bus + "'");
    const auto reach = powered_by(t, t.mask_of(config));
    const Mask m = reach[t.node_index(bus)];
    std::vector<std::string> out;
    for (std::size_t s = 0; s < t.sources().size(); ++s)
        if (has_bit(m, static_cast<int>(s))) out.push_back(t.sources()[s]);
    return out;
}

} // namespace epsvp

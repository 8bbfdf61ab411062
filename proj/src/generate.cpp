#include <epsvp/controller.hpp>
#include <epsvp/errors.hpp>

#include <algorithm>
#include <bit>
#include <set>

namespace epsvp {

namespace {

// Nominal voltage and cumulative efficiency per node when fed from `source`
// over `closed`.
struct Feed
{
    std::vector<bool> reached;
    std::vector<double> voltage;
    std::vector<double> efficiency;
};

Feed feed_from(const Topology& t, int source, Mask closed)
{
    const auto n = t.nodes().size();
    Feed f{std::vector<bool>(n, false), std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
    const int start = t.source_node(source);
    f.reached[start] = true;
    f.voltage[start] = t.as<Generator>(t.sources()[source]).rated_voltage;
    std::vector<int> stack{start};
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& arc : t.adjacency()[u]) {
            if (arc.contactor >= 0 && !has_bit(closed, arc.contactor)) continue;
            if (f.reached[arc.to]) continue;
            f.reached[arc.to] = true;
            if (arc.converter >= 0) {
                const auto& c = t.as<Converter>(t.converters()[arc.converter]);
                f.voltage[arc.to] = f.voltage[u] * c.gain;
                f.efficiency[arc.to] = f.efficiency[u] * c.efficiency;
            } else {
                f.voltage[arc.to] = f.voltage[u];
                f.efficiency[arc.to] = f.efficiency[u];
            }
            stack.push_back(arc.to);
        }
    }
    return f;
}

std::vector<std::string> shed_loads(const Topology& t, Mask closed)
{
    std::set<std::string> shed;
    const auto reach = powered_by(t, closed);
    for (const auto& l : t.loads()) {
        const auto& load = t.as<Load>(l);
        if (load.sheddable && reach[t.node_index(load.bus)] == 0) shed.insert(l);
    }
    for (std::size_t s = 0; s < t.sources().size(); ++s) {
        const auto& g = t.as<Generator>(t.sources()[s]);
        const Feed f = feed_from(t, static_cast<int>(s), closed);
        struct Drawn { std::string id; double power; int priority; bool sheddable; };
        std::vector<Drawn> drawn;
        double total = 0;
        for (const auto& l : t.loads()) {
            const auto& load = t.as<Load>(l);
            const int node = t.node_index(load.bus);
            if (!f.reached[node]) continue;
            const double p = f.voltage[node] * f.voltage[node] / load.resistance / f.efficiency[node];
            drawn.push_back({l, p, load.priority, load.sheddable});
            total += p;
        }
        if (total <= g.rated_power) continue;
        std::stable_sort(drawn.begin(), drawn.end(),
                         [](const Drawn& a, const Drawn& b) { return a.priority < b.priority; });
        for (const auto& d : drawn) {
            if (total <= g.rated_power) break;
            if (!d.sheddable) continue;
            shed.insert(d.id);
            total -= d.power;
        }
    }
    return {shed.begin(), shed.end()};
}

// Cube over source availability: `care` bits constrained, `value` bits Available.
struct Cube
{
    Mask care;
    Mask value;
    auto operator<=>(const Cube&) const = default;
};

std::vector<Cube> minimise(const std::vector<Mask>& minterms, int n)
{
    const Mask all = n == 64 ? ~Mask{0} : (bit(n) - 1);
    std::set<Cube> current;
    for (Mask m : minterms) current.insert({all, m});
    std::set<Cube> primes;
    while (!current.empty()) {
        std::set<Cube> next;
        std::set<Cube> merged;
        for (auto a = current.begin(); a != current.end(); ++a) {
            for (auto b = std::next(a); b != current.end(); ++b) {
                if (a->care != b->care) continue;
                const Mask diff = a->value ^ b->value;
                if (diff == 0 || (diff & (diff - 1)) != 0) continue;
                next.insert({a->care & ~diff, a->value & ~diff});
                merged.insert(*a);
                merged.insert(*b);
            }
        }
        for (const auto& c : current)
            if (!merged.count(c)) primes.insert(c);
        current = std::move(next);
    }

    auto covers = [](const Cube& c, Mask m) { return (m & c.care) == c.value; };
    std::vector<Cube> chosen;
    std::vector<Mask> left = minterms;
    while (!left.empty()) {
        const Cube* best = nullptr;
        std::size_t best_count = 0;
        for (const auto& p : primes) {
            const auto k = static_cast<std::size_t>(
                std::count_if(left.begin(), left.end(), [&](Mask m) { return covers(p, m); }));
            if (k > best_count) {
                best = &p;
                best_count = k;
            }
        }
        chosen.push_back(*best);
        std::erase_if(left, [&](Mask m) { return covers(*best, m); });
    }
    std::sort(chosen.begin(), chosen.end(), [](const Cube& a, const Cube& b) {
        return std::pair(std::popcount(a.care), a) < std::pair(std::popcount(b.care), b);
    });
    return chosen;
}

Guard cube_guard(const Cube& c, const std::vector<std::string>& sources)
{
    std::vector<Guard> lits;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const int k = static_cast<int>(i);
        if (!has_bit(c.care, k)) continue;
        lits.push_back(has_bit(c.value, k) ? Guard::status_is(sources[i], SourceStatus::Available)
                                           : Guard::status_not(sources[i], SourceStatus::Available));
    }
    return Guard::all_of(std::move(lits));
}

struct Mode
{
    Mask closed;
    std::vector<std::string> shed;
    auto operator<=>(const Mode&) const = default;
};

std::string mode_state_name(const Topology& t, const Mode& m)
{
    std::string name = mode_name(t, m.closed);
    if (!m.shed.empty()) {
        name += "__shed";
        for (const auto& l : m.shed) name += "_" + l;
    }
    return name;
}

} // namespace

std::string mode_name(const Topology& t, Mask closed)
{
    if (closed == 0) return "cfg_none";
    std::string name = "cfg";
    for (const auto& c : t.contactor_ids(closed)) name += "_" + c;
    return name;
}

PriorityTarget priority_target(const Topology& t, const std::vector<PriorityList>& lists,
                               const std::vector<std::string>& available)
{
    for (const auto& s : available) {
        if (!t.is_source(s)) throw LookupError("unknown source '" + s + "' in available set");
    }
    const auto safety = compile_masks(compile_no_paralleling(t), t);

    PriorityTarget out;
    std::vector<std::pair<int, int>> fixed;   // (bus node, source index)
    for (const auto& list : lists) {
        validate_priority_list(t, list);
        const auto candidates = effective_priority(t, list);
        if (candidates.empty()) {
            throw ValidationError("bus '" + list.bus + "' has no path from any listed source");
        }
        const int bus = t.node_index(list.bus);
        auto paths = enumerate_paths(t, list.bus);
        std::stable_sort(paths.begin(), paths.end(), [](const SourcePath& a, const SourcePath& b) {
            return a.contactors.size() < b.contactors.size();
        });

        for (const auto& s : candidates) {
            if (std::find(available.begin(), available.end(), s) == available.end()) continue;
            const int si = t.source_index(s);
            bool placed = false;
            for (const auto& p : paths) {
                if (p.source != s) continue;
                const Mask trial = out.closed | t.contactor_mask(p.contactors);
                if (safety.first_violation(trial) >= 0) continue;
                const auto reach = powered_by(t, trial);
                if (reach[bus] != bit(si)) continue;
                const bool keeps = std::all_of(fixed.begin(), fixed.end(), [&](const auto& f) {
                    return reach[f.first] == bit(f.second);
                });
                if (!keeps) continue;
                out.closed = trial;
                out.chosen[list.bus] = s;
                fixed.emplace_back(bus, si);
                placed = true;
                break;
            }
            if (placed) break;
        }
    }
    out.shed = shed_loads(t, out.closed);
    return out;
}

BpcuFsm generate_priority_controller(const Topology& t, const std::vector<PriorityList>& lists)
{
    const auto& sources = t.sources();
    if (sources.size() > 16) throw ValidationError("too many sources for a priority table controller");
    const int n = static_cast<int>(sources.size());

    std::map<Mode, std::vector<Mask>> table;
    for (Mask avail = 0; avail < bit(n); ++avail) {
        std::vector<std::string> names;
        for (int i = 0; i < n; ++i)
            if (has_bit(avail, i)) names.push_back(sources[i]);
        auto target = priority_target(t, lists, names);
        table[{target.closed, target.shed}].push_back(avail);
    }

    BpcuFsm fsm;
    fsm.name = t.name() + "-priority";
    fsm.sources = sources;
    fsm.contactors = t.contactors();
    for (const auto& l : t.loads())
        if (t.as<Load>(l).sheddable) fsm.loads.push_back(l);
    fsm.initial = "init";
    fsm.states.push_back("init");

    std::map<std::string, std::pair<Mode, Guard>> modes;
    for (const auto& [mode, minterms] : table) {
        Guard g = Guard::any_of([&] {
            std::vector<Guard> gs;
            for (const auto& c : minimise(minterms, n)) gs.push_back(cube_guard(c, sources));
            return gs;
        }());
        modes.emplace(mode_state_name(t, mode), std::pair(mode, std::move(g)));
    }
    for (const auto& [name, _] : modes) fsm.states.push_back(name);

    const Mask all = t.contactors().empty() ? 0 : (~Mask{0} >> (64 - t.contactors().size()));
    auto emit = [&](const std::string& from, const Mode* src, const std::string& to, const Mode& dst,
                    const Guard& guard) {
        Transition tr;
        tr.from = from;
        tr.to = to;
        tr.trigger = Trigger::Event;
        tr.guard = guard;
        const Mask was = src ? src->closed : all;
        const Mask opens = was & ~dst.closed;
        const Mask closes = src ? dst.closed & ~src->closed : dst.closed;
        for (const auto& c : t.contactor_ids(opens)) tr.actions.push_back({Action::Kind::Open, c});
        for (const auto& l : dst.shed) {
            if (!src || !std::binary_search(src->shed.begin(), src->shed.end(), l))
                tr.actions.push_back({Action::Kind::Shed, l});
        }
        for (const auto& c : t.contactor_ids(closes)) tr.actions.push_back({Action::Kind::Close, c});
        if (src) {
            for (const auto& l : src->shed) {
                if (!std::binary_search(dst.shed.begin(), dst.shed.end(), l))
                    tr.actions.push_back({Action::Kind::Restore, l});
            }
        }
        fsm.transitions.push_back(std::move(tr));
    };

    for (const auto& [to, entry] : modes) emit("init", nullptr, to, entry.first, entry.second);
    for (const auto& [from, src] : modes) {
        for (const auto& [to, dst] : modes) {
            if (from == to) continue;
            emit(from, &src.first, to, dst.first, dst.second);
        }
    }
    return fsm;
}

} // namespace epsvp

#include <epsvp/errors.hpp>
#include <epsvp/json_util.hpp>
#include <epsvp/reliability.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>

namespace epsvp {

double FailureModel::probability(const std::string& id) const
{
    auto it = rates.find(id);
    if (it == rates.end()) throw LookupError("no failure rate for '" + id + "'");
    return -std::expm1(-it->second * mission_hours);
}

FailureModel failure_model(const Topology& t, double mission_hours)
{
    if (!(mission_hours > 0)) throw ValidationError("mission duration must be positive");
    FailureModel f;
    f.mission_hours = mission_hours;
    for (const auto& s : t.sources()) f.rates[s] = t.as<Generator>(s).failure_rate;
    for (const auto& c : t.contactors()) f.rates[c] = t.as<Contactor>(c).failure_rate;
    for (const auto& c : t.converters()) f.rates[c] = t.as<Converter>(c).failure_rate;
    return f;
}

void apply_rates(FailureModel& f, std::string_view document, const Topology& t)
{
    const auto doc = json_util::parse(document);
    if (!doc.is_object() || !doc.contains("failureRates") || !doc["failureRates"].is_object())
        throw ParseError("rates: missing object 'failureRates'");
    for (const auto& [id, value] : doc["failureRates"].items()) {
        if (!t.contains(id)) throw LookupError("rates: unknown component '" + id + "'");
        if (!t.is_source(id) && !t.is_contactor(id) && !std::holds_alternative<Converter>(t.component(id).kind))
            throw ValidationError("rates: '" + id + "' cannot fail");
        if (!value.is_number()) throw ParseError("rates: '" + id + "' is not a number");
        const double rate = value.get<double>();
        if (!(rate >= 0) || !std::isfinite(rate)) throw ValidationError("rates: '" + id + "' must be non-negative");
        f.rates[id] = rate;
    }
    if (doc.contains("missionHours")) {
        const double T = json_util::required<double>(doc, "missionHours", "rates");
        if (!(T > 0)) throw ValidationError("rates: missionHours must be positive");
        f.mission_hours = T;
    }
}

void apply_rates_file(FailureModel& f, const std::filesystem::path& path, const Topology& t)
{
    apply_rates(f, json_util::read_file(path), t);
}

namespace {

void minimise(std::vector<Mask>& sets)
{
    std::sort(sets.begin(), sets.end(), [](Mask a, Mask b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        return pa != pb ? pa < pb : a < b;
    });
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
    std::vector<Mask> kept;
    for (Mask s : sets) {
        bool subsumed = false;
        for (Mask k : kept) {
            if ((k & s) == k) {
                subsumed = true;
                break;
            }
        }
        if (!subsumed) kept.push_back(s);
    }
    sets = std::move(kept);
}

} // namespace

std::vector<CutSet> minimal_cut_sets(const Topology& t, const std::string& target)
{
    if (!t.contains(target)) throw LookupError("unknown target '" + target + "'");
    std::string node = target;
    if (std::holds_alternative<Load>(t.component(target).kind)) {
        node = t.as<Load>(target).bus;
    } else if (!t.is_bus(target)) {
        throw ValidationError("target '" + target + "' is neither a bus nor a load");
    }

    // Element universe: sources, then contactors, then converters.
    std::vector<std::string> names;
    for (const auto& s : t.sources()) names.push_back(s);
    for (const auto& c : t.contactors()) names.push_back(c);
    for (const auto& c : t.converters()) names.push_back(c);
    if (names.size() > 64) throw ValidationError("too many failable components for cut-set analysis");
    const int ns = static_cast<int>(t.sources().size());
    const int nc = static_cast<int>(t.contactors().size());

    std::vector<Mask> paths;
    for (const auto& r : simple_routes(t, t.node_index(node))) {
        Mask m = bit(r.source) | (r.contactors << ns);
        for (int cv : r.converters) m |= bit(ns + nc + cv);
        paths.push_back(m);
    }
    if (paths.empty()) return {CutSet{target, {}}};
    minimise(paths);

    // Incremental minimal hitting sets.
    std::vector<Mask> cuts{0};
    for (Mask p : paths) {
        std::vector<Mask> next;
        for (Mask c : cuts) {
            if (c & p) {
                next.push_back(c);
                continue;
            }
            for (Mask rest = p; rest; rest &= rest - 1) next.push_back(c | (rest & -rest));
        }
        minimise(next);
        cuts = std::move(next);
    }

    std::vector<CutSet> out;
    for (Mask c : cuts) {
        CutSet cs{target, {}};
        for (Mask rest = c; rest; rest &= rest - 1) cs.components.push_back(names[std::countr_zero(rest)]);
        std::sort(cs.components.begin(), cs.components.end());
        out.push_back(std::move(cs));
    }
    std::sort(out.begin(), out.end(), [](const CutSet& a, const CutSet& b) {
        return a.components.size() != b.components.size() ? a.components.size() < b.components.size()
                                                           : a.components < b.components;
    });
    return out;
}

MissionProbability mission_failure_probability(const std::vector<CutSet>& cuts, const FailureModel& f)
{
    MissionProbability out;
    out.cuts = cuts.size();
    out.method = cuts.size() <= kExactCutLimit ? "exact" : "first-order-bound";
    if (cuts.empty()) return out;

    std::vector<std::string> ids;
    for (const auto& c : cuts) ids.insert(ids.end(), c.components.begin(), c.components.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() > 64) throw ValidationError("too many components in cut sets");
    std::vector<double> p;
    for (const auto& id : ids) p.push_back(f.probability(id));
    std::vector<Mask> masks;
    for (const auto& c : cuts) {
        Mask m = 0;
        for (const auto& id : c.components)
            m |= bit(static_cast<int>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin()));
        masks.push_back(m);
    }
    auto joint = [&](Mask m) {
        double q = 1.0;
        for (Mask rest = m; rest; rest &= rest - 1) q *= p[std::countr_zero(rest)];
        return q;
    };

    if (out.method == "exact") {
        double sum = 0;
        std::function<void(std::size_t, Mask, int)> rec = [&](std::size_t i, Mask u, int k) {
            if (i == masks.size()) {
                if (k > 0) sum += (k % 2 ? 1.0 : -1.0) * joint(u);
                return;
            }
            rec(i + 1, u, k);
            rec(i + 1, u | masks[i], k + 1);
        };
        rec(0, 0, 0);
        out.probability = std::clamp(sum, 0.0, 1.0);
        out.lower_bound = out.probability;
        return out;
    }

    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        s1 += joint(masks[i]);
        for (std::size_t j = i + 1; j < masks.size(); ++j) s2 += joint(masks[i] | masks[j]);
    }
    out.probability = std::min(s1, 1.0);
    out.lower_bound = std::max(s1 - s2, 0.0);
    return out;
}

std::vector<FaultCombination> must_handle_combinations(const Topology& t, const FailureModel& f,
                                                       const ReliabilitySpec& spec, int max_size)
{
    if (max_size < 0) throw ValidationError("combination size cap must be non-negative");
    std::vector<std::string> ids;
    std::vector<double> p;
    for (const auto& [id, rate] : f.rates) {
        if (!t.contains(id) || rate <= 0) continue;
        ids.push_back(id);
        p.push_back(f.probability(id));
    }
    std::vector<FaultCombination> out;
    std::vector<std::string> current;
    std::function<void(std::size_t, double)> dfs = [&](std::size_t from, double q) {
        for (std::size_t i = from; i < ids.size(); ++i) {
            const double next = q * p[i];
            if (!(next > spec.threshold)) continue;
            current.push_back(ids[i]);
            out.push_back({current, next});
            if (static_cast<int>(current.size()) < max_size) dfs(i + 1, next);
            current.pop_back();
        }
    };
    dfs(0, 1.0);
    std::stable_sort(out.begin(), out.end(), [](const FaultCombination& a, const FaultCombination& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return a.failed < b.failed;
    });
    return out;
}

EnvEvent failure_event(const Topology& t, const std::string& id)
{
    EnvEvent e;
    e.target = id;
    if (t.is_source(id)) {
        e.kind = EnvEvent::Kind::SourceStatus;
        e.status = SourceStatus::Failed;
    } else if (t.is_contactor(id)) {
        e.kind = EnvEvent::Kind::ContactorStuckOpen;
    } else if (t.contains(id) && std::holds_alternative<Converter>(t.component(id).kind)) {
        e.kind = EnvEvent::Kind::ConverterFailed;
    } else {
        throw LookupError("'" + id + "' is not a failable component");
    }
    return e;
}

std::vector<ClosureResult> closure_check(const Topology& t, const BpcuFsm& fsm, const RequirementSet& req,
                                         const std::vector<FaultCombination>& combos, std::size_t max_states)
{
    std::vector<ClosureResult> out;
    for (const auto& combo : combos) {
        ExploreOptions opt;
        opt.fault_budget = static_cast<int>(combo.failed.size());
        opt.max_states = max_states;
        opt.check_priority = false;
        opt.check_essential = true;
        opt.environment.source_changes = false;
        for (const auto& id : combo.failed) opt.environment.only.push_back(failure_event(t, id));
        const auto r = explore(t, fsm, req, opt);
        ClosureResult cr;
        cr.combination = combo;
        cr.pass = r.pass;
        cr.violated = r.violated;
        cr.detail = r.detail;
        cr.states = r.stats.states_visited;
        out.push_back(std::move(cr));
    }
    return out;
}

std::string format_probability(double p)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", p);
    return buf;
}

} // namespace epsvp

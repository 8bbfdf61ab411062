#include <epsvp/errors.hpp>
#include <epsvp/json_util.hpp>
#include <epsvp/requirements.hpp>

#include <algorithm>
#include <set>

namespace epsvp {

using nlohmann::json;

std::string to_string(RequirementKind k)
{
    switch (k) {
        case RequirementKind::Safety: return "Safety";
        case RequirementKind::Performance: return "Performance";
        case RequirementKind::Reliability: return "Reliability";
    }
    return "?";
}

std::string to_string(PriorityStatus s)
{
    switch (s) {
        case PriorityStatus::Ok: return "OK";
        case PriorityStatus::Unpowered: return "Unpowered";
        case PriorityStatus::WrongSource: return "WrongSource";
        case PriorityStatus::NoneAvailable: return "NoneAvailable";
    }
    return "?";
}

namespace {

RequirementKind parse_kind(const std::string& s, const std::string& id)
{
    if (s == "Safety") return RequirementKind::Safety;
    if (s == "Performance") return RequirementKind::Performance;
    if (s == "Reliability") return RequirementKind::Reliability;
    throw ValidationError("requirement '" + id + "': unknown kind '" + s + "'");
}

bool known_actor(const Topology& t, const std::string& id)
{
    return t.contains(id) || id == kControllerActor || id == kRegulatorActor;
}

} // namespace

RequirementSet default_requirements() { return {}; }

void validate_priority_list(const Topology& t, const PriorityList& list)
{
    if (!t.is_bus(list.bus)) throw ValidationError("priority list for unknown bus '" + list.bus + "'");
    std::set<std::string> seen;
    for (const auto& s : list.ordered_sources) {
        if (!t.is_source(s)) {
            throw ValidationError("priority list for '" + list.bus + "' names unknown source '" + s + "'");
        }
        if (!seen.insert(s).second) {
            throw ValidationError("priority list for '" + list.bus + "' repeats source '" + s + "'");
        }
    }
}

RequirementSet load_requirements(std::string_view document, const Topology& t)
{
    const json doc = json_util::parse(document);
    if (!doc.is_object()) throw ParseError("requirements document must be an object");
    using json_util::optional;
    using json_util::required;

    RequirementSet set;
    std::set<std::string> ids;
    if (doc.contains("requirements")) {
        for (const auto& j : doc.at("requirements")) {
            RequirementRecord r;
            r.id = required<std::string>(j, "id", "requirement");
            r.kind = parse_kind(required<std::string>(j, "kind", r.id), r.id);
            r.text = optional<std::string>(j, "text", "", r.id);
            r.responsible = optional<std::vector<std::string>>(j, "responsible", {}, r.id);
            r.affected = optional<std::vector<std::string>>(j, "affected", {}, r.id);
            for (const auto* group : {&r.responsible, &r.affected}) {
                for (const auto& a : *group) {
                    if (!known_actor(t, a)) {
                        throw ValidationError("requirement '" + r.id + "' allocates unknown entity '" + a + "'");
                    }
                }
            }
            if (!ids.insert(r.id).second) throw ValidationError("duplicate requirement id '" + r.id + "'");
            set.records.push_back(std::move(r));
        }
    }
    if (doc.contains("relations")) {
        for (const auto& j : doc.at("relations")) {
            set.relations.push_back({required<std::string>(j, "from", "relation"),
                                     required<std::string>(j, "relation", "relation"),
                                     required<std::string>(j, "to", "relation")});
        }
    }
    if (doc.contains("priorityLists")) {
        for (const auto& j : doc.at("priorityLists")) {
            PriorityList p;
            p.bus = required<std::string>(j, "bus", "priority list");
            p.ordered_sources = required<std::vector<std::string>>(j, "sources", p.bus);
            p.requirement = optional<std::string>(j, "requirement", "", p.bus);
            validate_priority_list(t, p);
            set.priority_lists.push_back(std::move(p));
        }
    }
    if (doc.contains("voltageBands")) {
        for (const auto& j : doc.at("voltageBands")) {
            const auto cls = required<std::string>(j, "class", "voltage band");
            VoltageBand b;
            if (cls == "AC") b = set.ac_band;
            else if (cls == "DC") b = set.dc_band;
            else throw ValidationError("voltage band: unknown class '" + cls + "'");
            b.nominal = optional<double>(j, "nominal", b.nominal, cls);
            b.tolerance = optional<double>(j, "tolerance", b.tolerance, cls);
            b.frequency = optional<double>(j, "frequency", b.frequency, cls);
            if (b.tolerance <= 0) throw ValidationError("voltage band " + cls + ": tolerance must be > 0");
            (cls == "AC" ? set.ac_band : set.dc_band) = b;
        }
    }
    set.voltage_band_id = optional<std::string>(doc, "voltageBandRequirement", set.voltage_band_id, "requirements");
    if (doc.contains("reliability")) {
        const auto& j = doc.at("reliability");
        set.reliability.threshold = optional<double>(j, "threshold", 1e-9, "reliability");
        set.reliability.mission_hours = optional<double>(j, "missionHours", 10.0, "reliability");
        if (!(set.reliability.threshold > 0 && set.reliability.threshold < 1)) {
            throw ValidationError("reliability threshold must lie in (0, 1)");
        }
        if (!(set.reliability.mission_hours > 0)) throw ValidationError("missionHours must be > 0");
    }
    if (doc.contains("noParalleling")) {
        const auto& j = doc.at("noParalleling");
        set.no_paralleling_id = optional<std::string>(j, "requirement", set.no_paralleling_id, "noParalleling");
        set.paralleling_includes_dc = optional<bool>(j, "includeDC", false, "noParalleling");
    }
    if (doc.contains("essentialPower")) {
        set.essential_power_id = optional<std::string>(doc.at("essentialPower"), "requirement",
                                                       set.essential_power_id, "essentialPower");
    }
    return set;
}

RequirementSet load_requirements_file(const std::filesystem::path& path, const Topology& t)
{
    return load_requirements(json_util::read_file(path), t);
}

SafetyProperty compile_no_paralleling(const Topology& t, const CompileOptions& options)
{
    if (options.only_bus && !t.is_bus(*options.only_bus)) {
        throw LookupError("unknown bus '" + *options.only_bus + "'");
    }
    std::vector<Mask> sets;
    for (const auto& bus : t.buses()) {
        if (options.only_bus && bus != *options.only_bus) continue;
        const bool dc = t.as<Bus>(bus).cls == BusClass::DC;
        if (dc && !options.include_dc) continue;

        std::vector<SourcePath> paths = enumerate_paths(t, bus);
        if (!options.include_dc) {
            std::erase_if(paths, [&](const SourcePath& p) { return !t.as<Generator>(p.source).is_ac(); });
        }
        for (std::size_t i = 0; i < paths.size(); ++i) {
            for (std::size_t j = i + 1; j < paths.size(); ++j) {
                if (paths[i].source == paths[j].source) continue;
                sets.push_back(t.contactor_mask(paths[i].contactors) | t.contactor_mask(paths[j].contactors));
            }
        }
    }
    std::sort(sets.begin(), sets.end());
    sets.erase(std::unique(sets.begin(), sets.end()), sets.end());

    SafetyProperty p;
    for (Mask m : sets) {
        const bool subsumed = std::any_of(sets.begin(), sets.end(), [&](Mask o) {
            return o != m && (o & m) == o;
        });
        if (!subsumed) p.forbidden.push_back(t.contactor_ids(m));
    }
    std::sort(p.forbidden.begin(), p.forbidden.end());
    return p;
}

SafetyVerdict evaluate_safety(const SafetyProperty& p, const ContactorConfig& c)
{
    for (const auto& conj : p.forbidden) {
        for (const auto& id : conj) c.at(id);
    }
    for (const auto& conj : p.forbidden) {
        if (std::all_of(conj.begin(), conj.end(), [&](const std::string& id) { return c.closed(id); })) {
            return {false, conj};
        }
    }
    return {};
}

CompiledSafety compile_masks(const SafetyProperty& p, const Topology& t)
{
    CompiledSafety out;
    for (const auto& conj : p.forbidden) out.forbidden.push_back(t.contactor_mask(conj));
    return out;
}

std::vector<std::string> effective_priority(const Topology& t, const PriorityList& list)
{
    const auto paths = enumerate_paths(t, list.bus);
    std::vector<std::string> out;
    for (const auto& s : list.ordered_sources) {
        const bool reachable = std::any_of(paths.begin(), paths.end(),
                                           [&](const SourcePath& p) { return p.source == s; });
        if (reachable) out.push_back(s);
    }
    return out;
}

std::vector<PriorityVerdict> check_priority(const Topology& t,
                                            const std::vector<PriorityList>& lists,
                                            const ContactorConfig& c,
                                            const std::vector<std::string>& available)
{
    for (const auto& s : available) {
        if (!t.is_source(s)) throw LookupError("unknown source '" + s + "' in available set");
    }
    std::vector<PriorityVerdict> out;
    for (const auto& list : lists) {
        if (!t.is_bus(list.bus)) throw LookupError("priority list for unknown bus '" + list.bus + "'");
        PriorityVerdict v;
        v.bus = list.bus;
        v.requirement = list.requirement;
        v.actual = powered_sources(t, c, list.bus);
        for (const auto& s : effective_priority(t, list)) {
            if (std::find(available.begin(), available.end(), s) != available.end()) {
                v.expected = s;
                break;
            }
        }
        if (v.expected) {
            if (v.actual.empty()) v.status = PriorityStatus::Unpowered;
            else if (v.actual == std::vector<std::string>{*v.expected}) v.status = PriorityStatus::Ok;
            else v.status = PriorityStatus::WrongSource;
        } else {
            v.status = v.actual.empty() ? PriorityStatus::NoneAvailable : PriorityStatus::WrongSource;
        }
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace epsvp

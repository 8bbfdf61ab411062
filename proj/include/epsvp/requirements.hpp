#pragma once

#include <epsvp/topology.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epsvp {

enum class RequirementKind { Safety, Performance, Reliability };

std::string to_string(RequirementKind k);

struct RequirementRecord
{
    std::string id;
    RequirementKind kind = RequirementKind::Safety;
    std::string text;
    std::vector<std::string> responsible;
    std::vector<std::string> affected;
};

/// Untyped (from, relation, to) link such as derive/refine/verify/satisfy.
struct RequirementRelation
{
    std::string from;
    std::string relation;
    std::string to;
};

/// Conjunctions of contactors that must never be Closed together.
struct SafetyProperty
{
    std::vector<std::vector<std::string>> forbidden;   // each sorted, list sorted

    bool operator==(const SafetyProperty&) const = default;
};

struct PriorityList
{
    std::string bus;
    std::vector<std::string> ordered_sources;   // highest priority first
    std::string requirement;                    // requirement id this list discharges
};

struct VoltageBand
{
    BusClass bus_class = BusClass::AC;
    double nominal = 115.0;
    double tolerance = 5.0;
    double frequency = 400.0;   // 0 for DC

    double low() const { return nominal - tolerance; }
    double high() const { return nominal + tolerance; }
};

struct ReliabilitySpec
{
    double threshold = 1e-9;
    double mission_hours = 10.0;
};

/// Everything read from a requirements document.
struct RequirementSet
{
    std::vector<RequirementRecord> records;
    std::vector<RequirementRelation> relations;
    std::vector<PriorityList> priority_lists;
    VoltageBand ac_band{BusClass::AC, 115.0, 5.0, 400.0};
    VoltageBand dc_band{BusClass::DC, 28.0, 2.0, 0.0};
    ReliabilitySpec reliability;
    std::string no_paralleling_id = "R1";
    std::string voltage_band_id = "R2";
    std::string essential_power_id = "R5";
    bool paralleling_includes_dc = false;

    const VoltageBand& band_for(BusClass c) const { return c == BusClass::AC ? ac_band : dc_band; }
};

/// Actor ids accepted in requirement allocations in addition to topology ids.
inline constexpr std::string_view kControllerActor = "BPCU";
inline constexpr std::string_view kRegulatorActor = "GCU";

RequirementSet load_requirements(std::string_view document, const Topology& t);
RequirementSet load_requirements_file(const std::filesystem::path& path, const Topology& t);
/// Defaults only: no records, no priority lists.
RequirementSet default_requirements();

struct CompileOptions
{
    bool include_dc = false;
    /// Restrict compilation to a single bus node.
    std::optional<std::string> only_bus;
};

/// No-paralleling property: for every bus, every pair of minimal paths from
/// distinct sources contributes the union of their contactor sets; subsumed
/// sets are then removed.
SafetyProperty compile_no_paralleling(const Topology& t, const CompileOptions& options = {});

struct SafetyVerdict
{
    bool safe = true;
    std::vector<std::string> violated;   // first violated conjunction, canonical order
};

SafetyVerdict evaluate_safety(const SafetyProperty& p, const ContactorConfig& c);

/// Mask form of a SafetyProperty bound to one topology.
struct CompiledSafety
{
    std::vector<Mask> forbidden;

    /// Index of the first fully closed conjunction, or -1.
    int first_violation(Mask closed) const
    {
        for (std::size_t i = 0; i < forbidden.size(); ++i)
            if ((closed & forbidden[i]) == forbidden[i]) return static_cast<int>(i);
        return -1;
    }
};

CompiledSafety compile_masks(const SafetyProperty& p, const Topology& t);

enum class PriorityStatus { Ok, Unpowered, WrongSource, NoneAvailable };

std::string to_string(PriorityStatus s);

struct PriorityVerdict
{
    std::string bus;
    std::string requirement;
    PriorityStatus status = PriorityStatus::Ok;
    std::optional<std::string> expected;
    std::vector<std::string> actual;
};

/// Listed sources that have at least one path to the list's bus.
std::vector<std::string> effective_priority(const Topology& t, const PriorityList& list);

/// Throws ValidationError for unknown buses/sources or duplicates.
void validate_priority_list(const Topology& t, const PriorityList& list);

std::vector<PriorityVerdict> check_priority(const Topology& t,
                                            const std::vector<PriorityList>& lists,
                                            const ContactorConfig& c,
                                            const std::vector<std::string>& available);

} // namespace epsvp

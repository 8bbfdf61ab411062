#pragma once

#include <epsvp/discrete.hpp>
#include <epsvp/requirements.hpp>
#include <epsvp/topology.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace epsvp {

/// Independent exponential failures over one mission, no repair.
struct FailureModel
{
    std::map<std::string, double> rates;   // per hour
    double mission_hours = 10.0;

    /// 1 - exp(-rate * T). Throws LookupError when `id` has no rate.
    double probability(const std::string& id) const;
};

/// Rates of every failable component (sources, contactors, converters) as
/// declared in the topology.
FailureModel failure_model(const Topology& t, double mission_hours);

/// Overrides from a rates document: `{"failureRates": {id: rate}, "missionHours": T}`.
void apply_rates(FailureModel& f, std::string_view document, const Topology& t);
void apply_rates_file(FailureModel& f, const std::filesystem::path& path, const Topology& t);

struct CutSet
{
    std::string target;
    std::vector<std::string> components;   // sorted; empty when the target has no path at all

    bool operator==(const CutSet&) const = default;
};

/// Every minimal set of sources, contactors and converters whose failure
/// leaves `target` (a bus, or a load through its bus) with no route to any
/// source. Sorted by size, then ids.
std::vector<CutSet> minimal_cut_sets(const Topology& t, const std::string& target);

struct MissionProbability
{
    double probability = 0;
    /// "exact" (full inclusion-exclusion) or "first-order-bound".
    std::string method;
    /// Bonferroni lower bound (S1 - S2); equals `probability` when exact.
    double lower_bound = 0;
    std::size_t cuts = 0;
};

inline constexpr std::size_t kExactCutLimit = 20;

MissionProbability mission_failure_probability(const std::vector<CutSet>& cuts, const FailureModel& f);

struct FaultCombination
{
    std::vector<std::string> failed;   // sorted
    double probability = 0;

    bool operator==(const FaultCombination&) const = default;
};

/// All failure sets of at most `max_size` components with joint probability
/// above the threshold, by decreasing probability.
std::vector<FaultCombination> must_handle_combinations(const Topology& t, const FailureModel& f,
                                                       const ReliabilitySpec& spec, int max_size = 4);

/// Environment event failing component `id`.
EnvEvent failure_event(const Topology& t, const std::string& id);

struct ClosureResult
{
    FaultCombination combination;
    bool pass = true;
    std::string violated;
    std::string detail;
    std::size_t states = 0;
};

/// Explores each combination injected as failure events (budget = its size),
/// checking no-paralleling and essential-bus powering.
std::vector<ClosureResult> closure_check(const Topology& t, const BpcuFsm& fsm, const RequirementSet& req,
                                         const std::vector<FaultCombination>& combos,
                                         std::size_t max_states = 10'000'000);

/// Probabilities rendered with 12 significant digits in scientific notation.
std::string format_probability(double p);

} // namespace epsvp

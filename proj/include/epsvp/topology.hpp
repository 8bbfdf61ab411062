#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace epsvp {

/// Bit set over topology contactor (or source) indices.
using Mask = std::uint64_t;

constexpr Mask bit(int i) { return Mask{1} << i; }
constexpr bool has_bit(Mask m, int i) { return (m >> i) & 1U; }

enum class GeneratorClass { HVAC, LVAC, APU, Battery };
enum class BusClass { AC, DC };
enum class ConverterKind { Transformer, RectifierUnit, TRU };
enum class SwitchState { Open, Closed };

struct Generator
{
    GeneratorClass cls = GeneratorClass::HVAC;
    double rated_voltage = 115.0;        // volts RMS (volts for batteries)
    double rated_frequency = 400.0;      // hertz, 0 for DC
    double rated_power = 0.0;            // watts
    double internal_resistance = 0.01;   // ohms
    double failure_rate = 0.0;           // per hour
    double regulator_time_constant = 0.02;

    bool is_ac() const { return cls != GeneratorClass::Battery; }
};

struct Contactor
{
    double failure_rate = 0.0;
    double open_delay = 0.0;             // seconds, command to contact separation
    double close_delay = 0.0;
    double decay_time_constant = 2e-3;   // arc current decay after opening
};

struct Bus
{
    BusClass cls = BusClass::AC;
    bool essential = false;
    std::optional<double> t_max;         // seconds, present iff essential
};

/// Transformer, rectifier unit or TRU. Always conducting, directed input -> output.
struct Converter
{
    ConverterKind kind = ConverterKind::Transformer;
    std::string input;
    std::string output;
    double gain = 1.0;                   // output volts per input volt
    double efficiency = 1.0;
    double failure_rate = 0.0;
};

struct Load
{
    std::string bus;
    double resistance = 1.0;
    bool sheddable = false;
    bool essential = false;
    int priority = 0;                    // lower values are shed first
};

using ComponentKind = std::variant<Generator, Contactor, Bus, Converter, Load>;

struct Component
{
    std::string id;
    ComponentKind kind;
};

struct ContactorEdge
{
    std::string contactor;
    std::string a;
    std::string b;
};

std::string to_string(GeneratorClass c);
std::string to_string(BusClass c);
std::string to_string(ConverterKind k);
std::string to_string(SwitchState s);

/// Open/Closed assignment over every contactor of a topology.
class ContactorConfig
{
  public:
    ContactorConfig() = default;
    explicit ContactorConfig(std::map<std::string, SwitchState> state) : state_(std::move(state)) {}

    /// Every id in `ids` set to `s`.
    static ContactorConfig uniform(const std::vector<std::string>& ids, SwitchState s);
    /// Ids in `closed` Closed, every other id in `ids` Open.
    static ContactorConfig with_closed(const std::vector<std::string>& ids,
                                       const std::vector<std::string>& closed);

    /// Throws LookupError when `id` is not assigned.
    SwitchState at(const std::string& id) const;
    bool closed(const std::string& id) const { return at(id) == SwitchState::Closed; }
    bool contains(const std::string& id) const { return state_.count(id) != 0; }
    void set(const std::string& id, SwitchState s) { state_[id] = s; }

    const std::map<std::string, SwitchState>& states() const { return state_; }
    std::vector<std::string> closed_ids() const;

    bool operator==(const ContactorConfig&) const = default;

  private:
    std::map<std::string, SwitchState> state_;
};

/// Minimal contactor set connecting a source to a bus.
struct SourcePath
{
    std::string source;
    std::string bus;
    std::vector<std::string> contactors;   // sorted

    auto operator<=>(const SourcePath&) const = default;
};

[[noreturn]] void throw_wrong_kind(const std::string& id);

struct ValidationOptions
{
    /// Require a single connected component when every contactor is closed.
    bool require_connected = true;
};

/// Single-line diagram as a typed graph.
///
/// Generators and buses are graph nodes. Contactors are the only switchable
/// edges and are undirected; converters are always-conducting directed edges.
/// Every id list is kept sorted so that results are canonically ordered.
class Topology
{
  public:
    struct Arc
    {
        int to;
        int contactor;   // -1 for converter arcs
        int converter;   // -1 for contactor arcs
    };

    /// Validates and indexes; throws ValidationError naming the offending id.
    static Topology build(std::string name,
                          std::vector<Component> components,
                          std::vector<ContactorEdge> edges,
                          ValidationOptions options = {});

    const std::string& name() const { return name_; }
    const std::vector<Component>& components() const { return components_; }
    const std::vector<ContactorEdge>& edges() const { return edges_; }

    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    const Component& component(const std::string& id) const;

    template <class T>
    const T& as(const std::string& id) const;

    bool is_source(const std::string& id) const;
    bool is_bus(const std::string& id) const;
    bool is_contactor(const std::string& id) const;

    const std::vector<std::string>& sources() const { return sources_; }
    const std::vector<std::string>& buses() const { return buses_; }
    const std::vector<std::string>& contactors() const { return contactors_; }
    const std::vector<std::string>& converters() const { return converters_; }
    const std::vector<std::string>& loads() const { return loads_; }

    /// Graph nodes: sources followed by buses, each block sorted.
    const std::vector<std::string>& nodes() const { return nodes_; }
    int node_index(const std::string& id) const;
    int contactor_index(const std::string& id) const;
    int source_index(const std::string& id) const;
    int converter_index(const std::string& id) const;
    const std::vector<std::vector<Arc>>& adjacency() const { return adjacency_; }
    /// Endpoints (node indices) of contactor `c`.
    std::pair<int, int> contactor_ends(int c) const { return contactor_ends_[c]; }
    /// Node index of source `s`.
    int source_node(int s) const { return s; }

    std::vector<std::string> loads_on(const std::string& bus) const;

    Mask mask_of(const ContactorConfig& config) const;
    ContactorConfig config_of(Mask closed) const;
    Mask contactor_mask(const std::vector<std::string>& ids) const;
    std::vector<std::string> contactor_ids(Mask m) const;

    /// Copy with component `id` (and its edge, loads or converter) removed.
    /// The connectivity requirement is relaxed for the result since removing
    /// a redundant feed normally splits the diagram.
    Topology without(const std::string& id) const;

  private:
    std::string name_;
    std::vector<Component> components_;
    std::vector<ContactorEdge> edges_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::string> sources_, buses_, contactors_, converters_, loads_, nodes_;
    std::map<std::string, int> node_index_, contactor_index_, converter_index_;
    std::vector<std::vector<Arc>> adjacency_;
    std::vector<std::pair<int, int>> contactor_ends_;
};

template <class T>
const T& Topology::as(const std::string& id) const
{
    const auto* p = std::get_if<T>(&component(id).kind);
    if (!p) {
        throw_wrong_kind(id);
    }
    return *p;
}

/// Parses the JSON topology document.
Topology load_topology(std::string_view document);
Topology load_topology_file(const std::filesystem::path& path);

/// All minimal source paths to `bus`, sorted by (source, contactors).
std::vector<SourcePath> enumerate_paths(const Topology& t, const std::string& bus);

/// Sources with a fully closed path to `bus` under `config`, sorted.
std::vector<std::string> powered_sources(const Topology& t, const ContactorConfig& config,
                                         const std::string& bus);

/// One simple source-to-node route, as the elements it traverses.
struct RouteElements
{
    int source = -1;
    Mask contactors = 0;
    std::vector<int> converters;   // sorted converter indices
};

/// Every simple route from any source to `target_node`. Routes may pass
/// through intermediate nodes of any kind; converters are followed forward only.
std::vector<RouteElements> simple_routes(const Topology& t, int target_node);

/// For every node, the mask of source indices that reach it over closed
/// contactors and working converters.
std::vector<Mask> powered_by(const Topology& t, Mask closed, Mask failed_converters = 0);

} // namespace epsvp

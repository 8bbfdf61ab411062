#include <epsvp/errors.hpp>
#include <epsvp/json_util.hpp>
#include <epsvp/topology.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace epsvp {

using nlohmann::json;

namespace {

GeneratorClass parse_generator_class(const std::string& s, const std::string& id)
{
    if (s == "HVAC") return GeneratorClass::HVAC;
    if (s == "LVAC") return GeneratorClass::LVAC;
    if (s == "APU") return GeneratorClass::APU;
    if (s == "Battery") return GeneratorClass::Battery;
    throw ValidationError("generator '" + id + "': unknown class '" + s + "'");
}

BusClass parse_bus_class(const std::string& s, const std::string& id)
{
    if (s == "AC") return BusClass::AC;
    if (s == "DC") return BusClass::DC;
    throw ValidationError("bus '" + id + "': unknown class '" + s + "'");
}

Component parse_component(const json& j)
{
    if (!j.is_object()) throw ParseError("component entry must be an object");
    Component c;
    c.id = json_util::required<std::string>(j, "id", "component");
    const auto kind = json_util::required<std::string>(j, "kind", c.id);
    const json params = j.contains("parameters") ? j.at("parameters") : json::object();
    if (!params.is_object()) throw ParseError("component '" + c.id + "': parameters must be an object");
    using json_util::optional;
    using json_util::required;

    if (kind == "Generator") {
        Generator g;
        g.cls = parse_generator_class(optional<std::string>(params, "class", "HVAC", c.id), c.id);
        const bool dc = g.cls == GeneratorClass::Battery;
        g.rated_voltage = optional<double>(params, "ratedVoltage", dc ? 28.0 : 115.0, c.id);
        g.rated_frequency = optional<double>(params, "ratedFrequency", dc ? 0.0 : 400.0, c.id);
        g.rated_power = required<double>(params, "ratedPower", c.id);
        g.internal_resistance = optional<double>(params, "internalResistance", 0.01, c.id);
        g.failure_rate = optional<double>(params, "failureRate", 0.0, c.id);
        g.regulator_time_constant = optional<double>(params, "regulatorTimeConstant", 0.02, c.id);
        c.kind = g;
    } else if (kind == "Contactor") {
        Contactor k;
        k.failure_rate = optional<double>(params, "failureRate", 0.0, c.id);
        k.open_delay = optional<double>(params, "openDelay", 0.0, c.id);
        k.close_delay = optional<double>(params, "closeDelay", 0.0, c.id);
        k.decay_time_constant = optional<double>(params, "decayTimeConstant", 2e-3, c.id);
        c.kind = k;
    } else if (kind == "Bus") {
        Bus b;
        b.cls = parse_bus_class(optional<std::string>(params, "class", "AC", c.id), c.id);
        b.essential = optional<bool>(params, "essential", false, c.id);
        if (params.contains("tMax")) b.t_max = required<double>(params, "tMax", c.id);
        c.kind = b;
    } else if (kind == "Transformer" || kind == "RectifierUnit" || kind == "TRU") {
        Converter cv;
        cv.kind = kind == "Transformer" ? ConverterKind::Transformer
                  : kind == "TRU"       ? ConverterKind::TRU
                                        : ConverterKind::RectifierUnit;
        cv.input = required<std::string>(params, "input", c.id);
        cv.output = required<std::string>(params, "output", c.id);
        if (params.contains("ratio")) {
            cv.gain = required<double>(params, "ratio", c.id);
        } else if (params.contains("outputVoltage")) {
            const double out = required<double>(params, "outputVoltage", c.id);
            const double in = optional<double>(params, "inputVoltage", 115.0, c.id);
            if (in <= 0) throw ValidationError("converter '" + c.id + "': inputVoltage must be > 0");
            cv.gain = out / in;
        } else {
            throw ValidationError("converter '" + c.id + "' needs 'ratio' or 'outputVoltage'");
        }
        cv.efficiency = optional<double>(params, "efficiency", 1.0, c.id);
        cv.failure_rate = optional<double>(params, "failureRate", 0.0, c.id);
        c.kind = cv;
    } else if (kind == "Load") {
        Load ld;
        ld.bus = required<std::string>(params, "bus", c.id);
        ld.resistance = required<double>(params, "resistance", c.id);
        ld.sheddable = optional<bool>(params, "sheddable", false, c.id);
        ld.essential = optional<bool>(params, "essential", false, c.id);
        ld.priority = optional<int>(params, "priority", 0, c.id);
        c.kind = ld;
    } else {
        throw ValidationError("component '" + c.id + "': unknown kind '" + kind + "'");
    }
    return c;
}

} // namespace

Topology load_topology(std::string_view document)
{
    const json doc = json_util::parse(document);
    if (!doc.is_object()) throw ParseError("topology document must be an object");

    const auto name = json_util::optional<std::string>(doc, "name", "", "topology");
    std::vector<Component> components;
    if (doc.contains("components")) {
        const auto& arr = doc.at("components");
        if (!arr.is_array()) throw ParseError("'components' must be an array");
        for (const auto& j : arr) components.push_back(parse_component(j));
    }
    std::vector<ContactorEdge> edges;
    if (doc.contains("edges")) {
        const auto& arr = doc.at("edges");
        if (!arr.is_array()) throw ParseError("'edges' must be an array");
        for (const auto& j : arr) {
            ContactorEdge e;
            e.contactor = json_util::required<std::string>(j, "contactor", "edge");
            e.a = json_util::required<std::string>(j, "a", e.contactor);
            e.b = json_util::required<std::string>(j, "b", e.contactor);
            edges.push_back(std::move(e));
        }
    }
    return Topology::build(name, std::move(components), std::move(edges));
}

Topology load_topology_file(const std::filesystem::path& path)
{
    return load_topology(json_util::read_file(path));
}

} // namespace epsvp

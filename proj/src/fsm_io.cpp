#include <epsvp/controller.hpp>
#include <epsvp/errors.hpp>
#include <epsvp/json_util.hpp>

namespace epsvp {

using nlohmann::json;

namespace {

Trigger parse_trigger(const std::string& s, std::size_t index)
{
    if (s == "always") return Trigger::Always;
    if (s == "event") return Trigger::Event;
    if (s == "tick") return Trigger::Tick;
    throw ParseError("transition " + std::to_string(index) + ": unknown trigger '" + s + "'");
}

} // namespace

BpcuFsm load_fsm(std::string_view document)
{
    const json doc = json_util::parse(document);
    if (!doc.is_object()) throw ParseError("controller document must be an object");
    using json_util::optional;
    using json_util::required;

    BpcuFsm fsm;
    fsm.name = optional<std::string>(doc, "name", "controller", "controller");
    fsm.sources = optional<std::vector<std::string>>(doc, "sources", {}, fsm.name);
    fsm.contactors = optional<std::vector<std::string>>(doc, "contactors", {}, fsm.name);
    fsm.loads = optional<std::vector<std::string>>(doc, "loads", {}, fsm.name);
    fsm.states = required<std::vector<std::string>>(doc, "states", fsm.name);
    fsm.initial = required<std::string>(doc, "initial", fsm.name);
    fsm.parameters = optional<std::map<std::string, double>>(doc, "parameters", {}, fsm.name);

    if (doc.contains("transitions")) {
        const auto& arr = doc.at("transitions");
        if (!arr.is_array()) throw ParseError("'transitions' must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& j = arr[i];
            const std::string owner = "transition " + std::to_string(i);
            Transition t;
            t.from = required<std::string>(j, "from", owner);
            t.to = required<std::string>(j, "to", owner);
            t.trigger = parse_trigger(optional<std::string>(j, "on", "event", owner), i);
            t.guard = Guard::parse(optional<std::string>(j, "guard", "true", owner));
            for (const auto& a : optional<std::vector<std::string>>(j, "actions", {}, owner)) {
                t.actions.push_back(Action::parse(a));
            }
            fsm.transitions.push_back(std::move(t));
        }
    }
    return fsm;
}

BpcuFsm load_fsm_file(const std::filesystem::path& path)
{
    return load_fsm(json_util::read_file(path));
}

std::string save_fsm(const BpcuFsm& fsm)
{
    json doc;
    doc["name"] = fsm.name;
    doc["sources"] = fsm.sources;
    doc["contactors"] = fsm.contactors;
    doc["loads"] = fsm.loads;
    doc["states"] = fsm.states;
    doc["initial"] = fsm.initial;
    doc["parameters"] = fsm.parameters;
    json arr = json::array();
    for (const auto& t : fsm.transitions) {
        json actions = json::array();
        for (const auto& a : t.actions) actions.push_back(a.str());
        arr.push_back({{"from", t.from},
                       {"to", t.to},
                       {"on", to_string(t.trigger)},
                       {"guard", t.guard.str()},
                       {"actions", actions}});
    }
    doc["transitions"] = arr;
    return doc.dump(2) + "\n";
}

} // namespace epsvp

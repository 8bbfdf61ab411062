#include <epsvp/discrete.hpp>
#include <epsvp/errors.hpp>
#include <epsvp/json_util.hpp>

#include <cmath>
#include <sstream>

namespace epsvp {

using nlohmann::json;

void EventTrace::add(long step, std::string actor, std::string event, std::string payload)
{
    events.push_back({step, std::move(actor), std::move(event), std::move(payload)});
}

std::string EventTrace::str() const
{
    std::string out;
    for (const auto& e : events) {
        out += std::to_string(e.step);
        out += '\t';
        out += e.actor;
        out += '\t';
        out += e.event;
        out += '\t';
        out += e.payload;
        out += '\n';
    }
    return out;
}

EventTrace EventTrace::parse(std::string_view text)
{
    EventTrace trace;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
            if (tab == std::string_view::npos) break;
            start = tab + 1;
        }
        if (fields.size() < 3 || fields.size() > 4) {
            throw ParseError("trace line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated fields");
        }
        TraceEvent e;
        try {
            std::size_t used = 0;
            e.step = std::stol(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument("step");
        } catch (const std::exception&) {
            throw ParseError("trace line " + std::to_string(line_no) + ": bad step '" + fields[0] + "'");
        }
        if (!trace.events.empty() && e.step < trace.events.back().step) {
            throw ParseError("trace line " + std::to_string(line_no) + ": step goes backwards");
        }
        e.actor = fields[1];
        e.event = fields[2];
        if (fields.size() == 4) e.payload = fields[3];
        trace.events.push_back(std::move(e));
    }
    return trace;
}

EventTrace load_trace_file(const std::filesystem::path& path)
{
    return EventTrace::parse(json_util::read_file(path));
}

std::string EnvEvent::str() const
{
    switch (kind) {
        case Kind::SourceStatus: return target + "=" + to_string(status);
        case Kind::ContactorStuckOpen: return target + "=StuckOpen";
        case Kind::ConverterFailed: return target + "=ConverterFailed";
    }
    return "?";
}

namespace {

TimedEvent parse_timed_event(const json& j, std::size_t index)
{
    using json_util::optional;
    using json_util::required;
    const std::string owner = "scenario event " + std::to_string(index);
    TimedEvent te;
    if (j.contains("time")) te.time = required<double>(j, "time", owner);
    if (j.contains("step")) te.step = required<long>(j, "step", owner);
    if (!te.time && !te.step) throw ParseError(owner + ": needs 'time' or 'step'");
    if (te.time && !(*te.time >= 0)) throw ValidationError(owner + ": time must be >= 0");
    if (te.step && *te.step < 0) throw ValidationError(owner + ": step must be >= 0");

    if (j.contains("source")) {
        te.event.kind = EnvEvent::Kind::SourceStatus;
        te.event.target = required<std::string>(j, "source", owner);
        te.event.status = parse_source_status(required<std::string>(j, "status", owner));
    } else if (j.contains("contactor")) {
        te.event.kind = EnvEvent::Kind::ContactorStuckOpen;
        te.event.target = required<std::string>(j, "contactor", owner);
        const auto fault = optional<std::string>(j, "fault", "stuckOpen", owner);
        if (fault != "stuckOpen") throw ParseError(owner + ": unknown contactor fault '" + fault + "'");
    } else if (j.contains("converter")) {
        te.event.kind = EnvEvent::Kind::ConverterFailed;
        te.event.target = required<std::string>(j, "converter", owner);
    } else {
        throw ParseError(owner + ": needs 'source', 'contactor' or 'converter'");
    }
    return te;
}

} // namespace

Scenario load_scenario(std::string_view document)
{
    const json doc = json_util::parse(document);
    if (!doc.is_object()) throw ParseError("scenario document must be an object");
    using json_util::optional;
    Scenario s;
    s.name = optional<std::string>(doc, "name", "scenario", "scenario");
    s.step_duration = optional<double>(doc, "stepDuration", 1e-3, s.name);
    if (!(s.step_duration > 0)) throw ValidationError("scenario '" + s.name + "': stepDuration must be > 0");
    if (doc.contains("initial")) {
        const auto& init = doc.at("initial");
        if (!init.is_object()) throw ParseError("scenario '" + s.name + "': initial must be an object");
        for (const auto& [id, v] : init.items()) {
            if (!v.is_string()) throw ParseError("scenario '" + s.name + "': status of '" + id + "' must be a string");
            s.initial[id] = parse_source_status(v.get<std::string>());
        }
    }
    if (doc.contains("events")) {
        const auto& arr = doc.at("events");
        if (!arr.is_array()) throw ParseError("scenario '" + s.name + "': events must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) s.events.push_back(parse_timed_event(arr[i], i));
    }
    return s;
}

Scenario load_scenario_file(const std::filesystem::path& path)
{
    return load_scenario(json_util::read_file(path));
}

std::string save_scenario(const Scenario& s)
{
    json doc;
    doc["name"] = s.name;
    doc["stepDuration"] = s.step_duration;
    doc["initial"] = json::object();
    for (const auto& [id, st] : s.initial) doc["initial"][id] = to_string(st);
    doc["events"] = json::array();
    for (const auto& te : s.events) {
        json e;
        if (te.step) e["step"] = *te.step;
        if (te.time) e["time"] = *te.time;
        switch (te.event.kind) {
            case EnvEvent::Kind::SourceStatus:
                e["source"] = te.event.target;
                e["status"] = to_string(te.event.status);
                break;
            case EnvEvent::Kind::ContactorStuckOpen:
                e["contactor"] = te.event.target;
                e["fault"] = "stuckOpen";
                break;
            case EnvEvent::Kind::ConverterFailed: e["converter"] = te.event.target; break;
        }
        doc["events"].push_back(std::move(e));
    }
    return doc.dump(2) + "\n";
}

void validate_scenario(const Scenario& s, const Topology& t)
{
    for (const auto& [id, _] : s.initial) {
        if (!t.is_source(id)) throw ValidationError("scenario '" + s.name + "': unknown source '" + id + "'");
    }
    for (const auto& te : s.events) {
        const auto& e = te.event;
        bool ok = false;
        switch (e.kind) {
            case EnvEvent::Kind::SourceStatus: ok = t.is_source(e.target); break;
            case EnvEvent::Kind::ContactorStuckOpen: ok = t.is_contactor(e.target); break;
            case EnvEvent::Kind::ConverterFailed:
                ok = t.contains(e.target) && std::holds_alternative<Converter>(t.component(e.target).kind);
                break;
        }
        if (!ok) throw ValidationError("scenario '" + s.name + "': event names unknown component '" + e.target + "'");
    }
}

std::vector<SourceStatus> initial_statuses(const Topology& t, const Scenario& s)
{
    std::vector<SourceStatus> out;
    for (const auto& src : t.sources()) {
        auto it = s.initial.find(src);
        out.push_back(it == s.initial.end() ? SourceStatus::Available : it->second);
    }
    return out;
}

SequenceSpec load_sequence_spec(std::string_view document)
{
    const json doc = json_util::parse(document);
    if (!doc.is_object()) throw ParseError("sequence spec must be an object");
    using json_util::optional;
    using json_util::required;
    SequenceSpec spec;
    spec.name = optional<std::string>(doc, "name", "sequence", "sequence spec");
    spec.note = optional<std::string>(doc, "note", "", spec.name);
    if (!doc.contains("patterns") || !doc.at("patterns").is_array()) {
        throw ParseError("sequence spec '" + spec.name + "': missing 'patterns' array");
    }
    for (const auto& j : doc.at("patterns")) {
        spec.patterns.push_back({required<std::string>(j, "actor", spec.name), required<std::string>(j, "event", spec.name)});
    }
    if (spec.patterns.empty()) throw ValidationError("sequence spec '" + spec.name + "' has no patterns");
    return spec;
}

SequenceSpec load_sequence_spec_file(const std::filesystem::path& path)
{
    return load_sequence_spec(json_util::read_file(path));
}

ConformVerdict conform(const EventTrace& trace, const SequenceSpec& spec)
{
    std::size_t at = 0;
    for (std::size_t i = 0; i < spec.patterns.size(); ++i) {
        const auto& p = spec.patterns[i];
        while (at < trace.events.size() && !(trace.events[at].actor == p.actor && trace.events[at].event == p.event)) {
            ++at;
        }
        if (at == trace.events.size()) {
            return {false, i + 1, "pattern " + std::to_string(i + 1) + " (" + p.actor + " " + p.event + ") not matched"};
        }
        ++at;
    }
    return {};
}

} // namespace epsvp

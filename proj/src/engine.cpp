#include <epsvp/discrete.hpp>
#include <epsvp/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace epsvp {

namespace {

template <class T>
void put(std::string& out, const T& v)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

int latency_steps(double seconds, double step)
{
    return std::max(1, static_cast<int>(std::ceil(seconds / step - 1e-9)));
}

} // namespace

std::string GlobalState::key() const
{
    std::string k;
    k.reserve(64 + sources.size() + 3 * pending.size());
    put(k, controller.control);
    put(k, controller.feedback_closed);
    put(k, controller.low);
    for (auto s : controller.status) k.push_back(static_cast<char>(s));
    for (auto s : sources) k.push_back(static_cast<char>(s));
    put(k, closed);
    put(k, stuck);
    put(k, failed_converters);
    put(k, shed);
    for (std::size_t i = 0; i < pending.size(); ++i) {
        k.push_back(static_cast<char>(pending[i]));
        put(k, remaining[i]);
    }
    put(k, budget);
    return k;
}

DiscreteModel::DiscreteModel(const Topology& t, const BpcuFsm& fsm, double step_duration)
    : topology_(t), exec_(fsm)
{
    validate_against(fsm, t);
    if (!(step_duration > 0)) throw ValidationError("macro-step duration must be > 0");
    for (const auto& s : fsm.sources) ctl_to_topo_source_.push_back(t.source_index(s));
    topo_to_ctl_contactor_.assign(t.contactors().size(), -1);
    for (std::size_t i = 0; i < fsm.contactors.size(); ++i) {
        const int c = t.contactor_index(fsm.contactors[i]);
        ctl_to_topo_contactor_.push_back(c);
        topo_to_ctl_contactor_[c] = static_cast<int>(i);
    }
    for (const auto& id : t.contactors()) {
        const auto& k = t.as<Contactor>(id);
        open_steps_.push_back(latency_steps(k.open_delay, step_duration));
        close_steps_.push_back(latency_steps(k.close_delay, step_duration));
    }
}

void DiscreteModel::run_controller(GlobalState& s, const FsmExecutor::Input& in, long index,
                                   EventTrace* trace) const
{
    const auto& fsm = exec_.fsm();
    for (int tr : exec_.run(s.controller, in)) {
        const auto& def = fsm.transitions[tr];
        if (trace) trace->add(index, std::string(kTraceController), "transition", def.from + "->" + def.to);
        const auto& compiled = exec_.actions(tr);
        for (std::size_t a = 0; a < compiled.size(); ++a) {
            if (trace) trace->add(index, std::string(kTraceController), def.actions[a].str());
            const auto& act = compiled[a];
            switch (act.kind) {
                case Action::Kind::Open:
                case Action::Kind::Close: {
                    const int c = ctl_to_topo_contactor_[act.index];
                    const bool open = act.kind == Action::Kind::Open;
                    s.pending[c] = open ? 1 : 2;
                    s.remaining[c] = static_cast<std::uint16_t>(open ? open_steps_[c] : close_steps_[c]);
                    break;
                }
                case Action::Kind::Shed: s.shed |= bit(act.index); break;
                case Action::Kind::Restore: s.shed &= ~bit(act.index); break;
            }
        }
    }
}

GlobalState DiscreteModel::initialize(const std::vector<SourceStatus>& statuses, int budget,
                                      EventTrace* trace) const
{
    if (statuses.size() != topology_.sources().size()) {
        throw ExecutionError("initial status vector does not match the topology's sources");
    }
    std::vector<SourceStatus> ctl;
    for (int s : ctl_to_topo_source_) ctl.push_back(statuses[s]);

    GlobalState g;
    g.controller = exec_.initial_state(ctl);
    g.sources = statuses;
    g.pending.assign(topology_.contactors().size(), 0);
    g.remaining.assign(topology_.contactors().size(), 0);
    g.budget = budget;
    if (trace) {
        std::string payload;
        for (std::size_t i = 0; i < statuses.size(); ++i) {
            if (i) payload += ',';
            payload += topology_.sources()[i] + "=" + to_string(statuses[i]);
        }
        trace->add(0, std::string(kTraceEnvironment), "init", payload);
    }
    run_controller(g, {FsmInput::Kind::Tick, -1, SourceStatus::Off}, 0, trace);
    return g;
}

bool DiscreteModel::can_apply(const GlobalState& s, const EnvEvent& e) const
{
    if (s.budget <= 0) return false;
    switch (e.kind) {
        case EnvEvent::Kind::SourceStatus: return s.sources[topology_.source_index(e.target)] != e.status;
        case EnvEvent::Kind::ContactorStuckOpen: return !has_bit(s.stuck, topology_.contactor_index(e.target));
        case EnvEvent::Kind::ConverterFailed:
            return !has_bit(s.failed_converters, topology_.converter_index(e.target));
    }
    return false;
}

GlobalState DiscreteModel::step(const GlobalState& s, const EnvEvent* event, long index, EventTrace* trace) const
{
    GlobalState n = s;
    const auto& ids = topology_.contactors();
    std::vector<FsmExecutor::Input> feedback;

    for (std::size_t c = 0; c < ids.size(); ++c) {
        if (!n.pending[c]) continue;
        if (--n.remaining[c] > 0) continue;
        const bool open = n.pending[c] == 1;
        n.pending[c] = 0;
        const int ci = static_cast<int>(c);
        const int ctl = topo_to_ctl_contactor_[c];
        if (open) {
            if (has_bit(n.closed, ci) && trace) trace->add(index, ids[c], "opened");
            n.closed &= ~bit(ci);
            if (ctl >= 0) {
                feedback.push_back({FsmInput::Kind::Opened, ctl, SourceStatus::Off});
                feedback.push_back({FsmInput::Kind::CurrentLow, ctl, SourceStatus::Off});
            }
        } else if (has_bit(n.stuck, ci)) {
            if (trace) trace->add(index, ids[c], "close_ignored", "stuck open");
        } else {
            if (!has_bit(n.closed, ci) && trace) trace->add(index, ids[c], "closed");
            n.closed |= bit(ci);
            if (ctl >= 0) feedback.push_back({FsmInput::Kind::Closed, ctl, SourceStatus::Off});
        }
    }

    std::optional<FsmExecutor::Input> env_input;
    if (event) {
        if (!can_apply(n, *event)) {
            throw ExecutionError("environment event " + event->str() + " cannot be applied at step " +
                                 std::to_string(index));
        }
        --n.budget;
        switch (event->kind) {
            case EnvEvent::Kind::SourceStatus: {
                const int si = topology_.source_index(event->target);
                n.sources[si] = event->status;
                if (trace) trace->add(index, event->target, to_string(event->status));
                const auto it = std::find(ctl_to_topo_source_.begin(), ctl_to_topo_source_.end(), si);
                if (it != ctl_to_topo_source_.end()) {
                    env_input = FsmExecutor::Input{FsmInput::Kind::Source,
                                                   static_cast<int>(it - ctl_to_topo_source_.begin()), event->status};
                }
                break;
            }
            case EnvEvent::Kind::ContactorStuckOpen: {
                const int c = topology_.contactor_index(event->target);
                n.stuck |= bit(c);
                n.closed &= ~bit(c);
                if (trace) trace->add(index, event->target, "stuck_open");
                break;
            }
            case EnvEvent::Kind::ConverterFailed:
                n.failed_converters |= bit(topology_.converter_index(event->target));
                if (trace) trace->add(index, event->target, "failed");
                break;
        }
    }

    if (env_input) run_controller(n, *env_input, index, trace);
    for (const auto& f : feedback) run_controller(n, f, index, trace);
    run_controller(n, {FsmInput::Kind::Tick, -1, SourceStatus::Off}, index, trace);
    return n;
}

bool DiscreteModel::quiescent(const GlobalState& s) const
{
    if (std::any_of(s.pending.begin(), s.pending.end(), [](std::int8_t p) { return p != 0; })) return false;
    return step(s, nullptr, 0) == s;
}

Mask DiscreteModel::available(const GlobalState& s) const
{
    Mask m = 0;
    for (std::size_t i = 0; i < s.sources.size(); ++i)
        if (s.sources[i] == SourceStatus::Available) m |= bit(static_cast<int>(i));
    return m;
}

std::vector<Mask> DiscreteModel::reach(const GlobalState& s) const
{
    return powered_by(topology_, s.closed, s.failed_converters);
}

DiscreteRun simulate_events(const Topology& t, const BpcuFsm& fsm, const Scenario& scenario,
                            const SimulateOptions& options)
{
    validate_scenario(scenario, t);
    const DiscreteModel model(t, fsm, scenario.step_duration);
    const auto safety = compile_masks(compile_no_paralleling(t), t);

    // One environment event per macro-step: collisions move to the next free step.
    std::vector<std::pair<long, EnvEvent>> timed;
    for (const auto& te : scenario.events) {
        long k = te.step ? *te.step : std::llround(*te.time / scenario.step_duration);
        timed.emplace_back(std::max(1L, k), te.event);
    }
    std::stable_sort(timed.begin(), timed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < timed.size(); ++i)
        timed[i].first = std::max(timed[i].first, timed[i - 1].first + 1);

    DiscreteRun run;
    const int budget = static_cast<int>(timed.size()) + 1;
    try {
        GlobalState s = model.initialize(initial_statuses(t, scenario), budget, &run.trace);
        auto note_violation = [&](long k) {
            const int v = safety.first_violation(s.closed);
            if (v >= 0 && run.first_violation < 0) {
                run.first_violation = k;
                run.violated = t.contactor_ids(safety.forbidden[v]);
            }
        };
        note_violation(0);
        std::size_t next = 0;
        long k = 1;
        const long last = timed.empty() ? 0 : timed.back().first;
        for (;; ++k) {
            const EnvEvent* e = nullptr;
            if (next < timed.size() && timed[next].first == k) e = &timed[next++].second;
            if (e && !model.can_apply(s, *e)) {
                run.trace.add(k, e->target, "ignored", e->str());
                e = nullptr;
            }
            s = model.step(s, e, k, &run.trace);
            note_violation(k);
            if (k >= last && model.quiescent(s)) break;
            if (k - last > options.settle_limit) {
                throw ExecutionError("no quiescence within " + std::to_string(options.settle_limit) +
                                     " macro-steps after the last event");
            }
        }
        run.steps = k;
        run.final_state = std::move(s);
    } catch (const ExecutionError& e) {
        throw ExecutionError(std::string(e.what()) + "\npartial trace:\n" + run.trace.str());
    }
    return run;
}

} // namespace epsvp

#include <epsvp/controller.hpp>
#include <epsvp/errors.hpp>

#include <algorithm>
#include <set>

namespace epsvp {

namespace {

std::map<std::string, int> index_names(const std::vector<std::string>& names, const char* what)
{
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!out.emplace(names[i], static_cast<int>(i)).second) {
            throw ValidationError(std::string("duplicate ") + what + " '" + names[i] + "'");
        }
    }
    return out;
}

} // namespace

FsmExecutor::FsmExecutor(BpcuFsm fsm) : fsm_(std::move(fsm))
{
    if (fsm_.states.empty()) throw ValidationError("controller '" + fsm_.name + "' has no states");
    if (fsm_.sources.size() > 64 || fsm_.contactors.size() > 64) {
        throw ValidationError("controller '" + fsm_.name + "' declares more than 64 sources or contactors");
    }
    states_ = index_names(fsm_.states, "state");
    sources_ = index_names(fsm_.sources, "source");
    contactors_ = index_names(fsm_.contactors, "contactor");
    loads_ = index_names(fsm_.loads, "load");
    if (!states_.count(fsm_.initial)) throw ValidationError("initial state '" + fsm_.initial + "' is not declared");

    outgoing_.assign(fsm_.states.size(), {});
    for (std::size_t t = 0; t < fsm_.transitions.size(); ++t) {
        const auto& tr = fsm_.transitions[t];
        auto f = states_.find(tr.from);
        auto g = states_.find(tr.to);
        if (f == states_.end()) throw ValidationError("transition " + std::to_string(t) + " leaves unknown state '" + tr.from + "'");
        if (g == states_.end()) throw ValidationError("transition " + std::to_string(t) + " enters unknown state '" + tr.to + "'");
        from_.push_back(f->second);
        to_.push_back(g->second);
        outgoing_[f->second].push_back(static_cast<int>(t));
        guard_root_.push_back(compile_guard(tr.guard, static_cast<int>(t)));

        std::vector<CompiledAction> acts;
        for (const auto& a : tr.actions) {
            const bool contactor = a.kind == Action::Kind::Open || a.kind == Action::Kind::Close;
            const auto& table = contactor ? contactors_ : loads_;
            auto it = table.find(a.target);
            if (it == table.end()) {
                throw ValidationError("transition " + std::to_string(t) + " commands unknown " +
                                      (contactor ? "contactor" : "load") + " '" + a.target + "'");
            }
            acts.push_back({a.kind, it->second});
        }
        compiled_actions_.push_back(std::move(acts));
    }
    check_determinism();
}

int FsmExecutor::compile_guard(const Guard& g, int transition)
{
    Node n{g.op, -1, g.status, {}};
    auto lookup = [&](const std::map<std::string, int>& table, const char* what) {
        auto it = table.find(g.subject);
        if (it == table.end()) {
            throw ValidationError("transition " + std::to_string(transition) + " guard reads unknown " + what +
                                  " '" + g.subject + "'");
        }
        return it->second;
    };
    switch (g.op) {
        case Guard::Op::StatusEq:
        case Guard::Op::StatusNe: n.index = lookup(sources_, "source"); break;
        case Guard::Op::Low:
        case Guard::Op::Opened:
        case Guard::Op::Closed: n.index = lookup(contactors_, "contactor"); break;
        case Guard::Op::Not:
        case Guard::Op::And:
        case Guard::Op::Or:
            for (const auto& c : g.children) n.children.push_back(compile_guard(c, transition));
            break;
        default: break;
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
}

bool FsmExecutor::eval(const Node& n, const ControllerState& s) const
{
    switch (n.op) {
        case Guard::Op::True: return true;
        case Guard::Op::False: return false;
        case Guard::Op::StatusEq: return s.status[n.index] == n.status;
        case Guard::Op::StatusNe: return s.status[n.index] != n.status;
        case Guard::Op::Low: return has_bit(s.low, n.index);
        case Guard::Op::Opened: return !has_bit(s.feedback_closed, n.index);
        case Guard::Op::Closed: return has_bit(s.feedback_closed, n.index);
        case Guard::Op::Not: return !eval(nodes_[n.children[0]], s);
        case Guard::Op::And:
            return std::all_of(n.children.begin(), n.children.end(), [&](int c) { return eval(nodes_[c], s); });
        case Guard::Op::Or:
            return std::any_of(n.children.begin(), n.children.end(), [&](int c) { return eval(nodes_[c], s); });
    }
    return false;
}

void FsmExecutor::check_determinism() const
{
    // Exhaustive over the variables two guards read, when small enough.
    for (std::size_t st = 0; st < outgoing_.size(); ++st) {
        const auto& out = outgoing_[st];
        for (std::size_t i = 0; i < out.size(); ++i) {
            for (std::size_t j = i + 1; j < out.size(); ++j) {
                const int a = out[i], b = out[j];
                std::set<int> srcs, ctrs;
                std::vector<int> stack{guard_root_[a], guard_root_[b]};
                while (!stack.empty()) {
                    const auto& n = nodes_[stack.back()];
                    stack.pop_back();
                    if (n.op == Guard::Op::StatusEq || n.op == Guard::Op::StatusNe) srcs.insert(n.index);
                    else if (n.index >= 0) ctrs.insert(n.index);
                    for (int c : n.children) stack.push_back(c);
                }
                double combos = 1;
                for (std::size_t k = 0; k < srcs.size(); ++k) combos *= 3;
                for (std::size_t k = 0; k < ctrs.size(); ++k) combos *= 4;
                if (combos > 65536) continue;

                const std::vector<int> sv(srcs.begin(), srcs.end()), cv(ctrs.begin(), ctrs.end());
                ControllerState s;
                s.status.assign(fsm_.sources.size(), SourceStatus::Off);
                const auto total = static_cast<long>(combos);
                for (long code = 0; code < total; ++code) {
                    long rest = code;
                    for (int x : sv) {
                        s.status[x] = static_cast<SourceStatus>(rest % 3);
                        rest /= 3;
                    }
                    s.feedback_closed = 0;
                    s.low = 0;
                    for (int x : cv) {
                        if (rest & 1) s.feedback_closed |= bit(x);
                        if (rest & 2) s.low |= bit(x);
                        rest /= 4;
                    }
                    if (eval(nodes_[guard_root_[a]], s) && eval(nodes_[guard_root_[b]], s)) {
                        throw ValidationError("controller '" + fsm_.name + "' is nondeterministic in state '" +
                                              fsm_.states[st] + "': transitions " + std::to_string(a) + " and " +
                                              std::to_string(b) + " can both fire");
                    }
                }
            }
        }
    }
}

int FsmExecutor::state_index(const std::string& name) const
{
    auto it = states_.find(name);
    if (it == states_.end()) throw ExecutionError("unknown controller state '" + name + "'");
    return it->second;
}

int FsmExecutor::source_index(const std::string& id) const
{
    auto it = sources_.find(id);
    if (it == sources_.end()) throw ExecutionError("controller has no source '" + id + "'");
    return it->second;
}

int FsmExecutor::contactor_index(const std::string& id) const
{
    auto it = contactors_.find(id);
    if (it == contactors_.end()) throw ExecutionError("controller has no contactor '" + id + "'");
    return it->second;
}

int FsmExecutor::load_index(const std::string& id) const
{
    auto it = loads_.find(id);
    if (it == loads_.end()) throw ExecutionError("controller has no load '" + id + "'");
    return it->second;
}

ControllerState FsmExecutor::initial_state(const std::vector<SourceStatus>& statuses) const
{
    if (statuses.size() != fsm_.sources.size()) {
        throw ExecutionError("initial status vector does not match the controller's sources");
    }
    ControllerState s;
    s.control = states_.at(fsm_.initial);
    s.status = statuses;
    s.feedback_closed = 0;
    s.low = fsm_.contactors.empty() ? 0 : (~Mask{0} >> (64 - fsm_.contactors.size()));
    return s;
}

FsmExecutor::Input FsmExecutor::resolve(const FsmInput& in) const
{
    Input r{in.kind, -1, in.status};
    switch (in.kind) {
        case FsmInput::Kind::None:
        case FsmInput::Kind::Tick: break;
        case FsmInput::Kind::Source: r.index = source_index(in.id); break;
        case FsmInput::Kind::Opened:
        case FsmInput::Kind::Closed:
        case FsmInput::Kind::CurrentLow: r.index = contactor_index(in.id); break;
    }
    return r;
}

FsmExecutor::IndexedStep FsmExecutor::step(const ControllerState& s, const Input& in) const
{
    if (s.control < 0 || s.control >= static_cast<int>(fsm_.states.size())) {
        throw ExecutionError("controller state index " + std::to_string(s.control) + " out of range");
    }
    IndexedStep r{s, -1};
    auto& n = r.next;
    switch (in.kind) {
        case FsmInput::Kind::Source: n.status[in.index] = in.status; break;
        case FsmInput::Kind::Opened: n.feedback_closed &= ~bit(in.index); break;
        case FsmInput::Kind::Closed:
            n.feedback_closed |= bit(in.index);
            n.low &= ~bit(in.index);
            break;
        case FsmInput::Kind::CurrentLow: n.low |= bit(in.index); break;
        default: break;
    }
    for (int t : outgoing_[s.control]) {
        const auto trig = fsm_.transitions[t].trigger;
        if (trig == Trigger::Event && in.kind == FsmInput::Kind::None) continue;
        if (trig == Trigger::Tick && in.kind != FsmInput::Kind::Tick) continue;
        if (!eval(nodes_[guard_root_[t]], n)) continue;
        if (r.transition >= 0) {
            throw ExecutionError("controller '" + fsm_.name + "' nondeterministic in state '" + fsm_.states[s.control] +
                                 "': transitions " + std::to_string(r.transition) + " and " + std::to_string(t));
        }
        r.transition = t;
    }
    if (r.transition >= 0) n.control = to_[r.transition];
    return r;
}

FsmStep FsmExecutor::step(const ControllerState& s, const FsmInput& in) const
{
    auto r = step(s, resolve(in));
    FsmStep out{std::move(r.next), {}, r.transition};
    if (r.transition >= 0) out.actions = fsm_.transitions[r.transition].actions;
    return out;
}

std::vector<int> FsmExecutor::run(ControllerState& s, const Input& in) const
{
    std::vector<int> taken;
    auto r = step(s, in);
    s = std::move(r.next);
    if (r.transition < 0) return taken;
    taken.push_back(r.transition);
    for (int i = 0; i < kQuiescenceBound; ++i) {
        r = step(s, Input{});
        s = std::move(r.next);
        if (r.transition < 0) return taken;
        taken.push_back(r.transition);
    }
    throw ExecutionError("controller '" + fsm_.name + "' did not quiesce within " +
                         std::to_string(kQuiescenceBound) + " internal steps (livelock in state '" +
                         fsm_.states[s.control] + "')");
}

FsmStep step_fsm(const BpcuFsm& fsm, const ControllerState& state, const FsmInput& input)
{
    return FsmExecutor(fsm).step(state, input);
}

void validate_against(const BpcuFsm& fsm, const Topology& t)
{
    for (const auto& s : fsm.sources) {
        if (!t.is_source(s)) throw ValidationError("controller reads unknown source '" + s + "'");
    }
    for (const auto& c : fsm.contactors) {
        if (!t.is_contactor(c)) throw ValidationError("controller commands unknown contactor '" + c + "'");
    }
    for (const auto& l : fsm.loads) {
        if (!t.contains(l) || !std::holds_alternative<Load>(t.component(l).kind)) {
            throw ValidationError("controller sheds unknown load '" + l + "'");
        }
    }
}

} // namespace epsvp

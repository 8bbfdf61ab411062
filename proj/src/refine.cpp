#include <epsvp/controller.hpp>
#include <epsvp/errors.hpp>

#include <cmath>

namespace epsvp {

int BreakBeforeMakeParams::delay_ticks() const
{
    return static_cast<int>(std::ceil(deterministic_delay / clock_period - 1e-9));
}

void BreakBeforeMakeParams::validate() const
{
    if (!(current_threshold_fraction > 0 && current_threshold_fraction < 1))
        throw ValidationError("current threshold fraction must lie in (0, 1)");
    if (confirm_samples < 1) throw ValidationError("confirmSamples must be >= 1");
    if (!(deterministic_delay >= 0)) throw ValidationError("deterministic delay must be >= 0");
    if (!(clock_period > 0)) throw ValidationError("clock period must be > 0");
}

BpcuFsm refine_break_before_make(const BpcuFsm& fsm, const BreakBeforeMakeParams& p)
{
    p.validate();
    BpcuFsm out = fsm;
    out.transitions.clear();
    out.parameters["currentThresholdFraction"] = p.current_threshold_fraction;
    out.parameters["confirmSamples"] = p.confirm_samples;
    out.parameters["deterministicDelay"] = p.deterministic_delay;
    out.parameters["clockPeriod"] = p.clock_period;

    const int confirm = p.confirm_samples;
    const int stages = confirm + p.delay_ticks();

    for (std::size_t k = 0; k < fsm.transitions.size(); ++k) {
        const auto& tr = fsm.transitions[k];
        std::vector<Action> first, last;
        std::vector<Guard> lows;
        bool opens = false, closes = false;
        for (const auto& a : tr.actions) {
            switch (a.kind) {
                case Action::Kind::Open:
                    opens = true;
                    lows.push_back(Guard::low(a.target));
                    first.push_back(a);
                    break;
                case Action::Kind::Shed: first.push_back(a); break;
                case Action::Kind::Close:
                    closes = true;
                    last.push_back(a);
                    break;
                case Action::Kind::Restore: last.push_back(a); break;
            }
        }
        if (!opens || !closes) {
            out.transitions.push_back(tr);
            continue;
        }

        const std::string base = tr.from + ">" + tr.to + "#" + std::to_string(k);
        auto stage_name = [&](int i) {
            if (i == stages) return tr.to;
            return base + (i < confirm ? "/w" + std::to_string(i) : "/d" + std::to_string(i - confirm + 1));
        };
        for (int i = 0; i < stages; ++i) out.states.push_back(stage_name(i));

        out.transitions.push_back({tr.from, stage_name(0), tr.trigger, tr.guard, first});
        const Guard all_low = Guard::all_of(lows);
        for (int i = 0; i < stages; ++i) {
            Transition fwd{stage_name(i), stage_name(i + 1), Trigger::Tick,
                           i < confirm ? all_low : Guard::always(), {}};
            if (i + 1 == stages) fwd.actions = last;
            out.transitions.push_back(std::move(fwd));
            if (i > 0 && i < confirm) {
                out.transitions.push_back({stage_name(i), stage_name(0), Trigger::Tick, Guard::negate(all_low), {}});
            }
        }
    }
    return out;
}

} // namespace epsvp

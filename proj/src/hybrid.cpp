#include <epsvp/errors.hpp>
#include <epsvp/hybrid.hpp>
#include <epsvp/network.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

namespace epsvp {

long SimConfig::samples() const { return std::lround(duration / step); }

void SimConfig::validate() const
{
    if (!(step > 0)) throw ValidationError("simulation step must be > 0");
    if (!(duration >= step)) throw ValidationError("simulation duration must be >= step");
    if (controller_period < 1) throw ValidationError("controller period must be >= 1 step");
    if (!(powered_fraction > 0 && powered_fraction < 1)) throw ValidationError("powered fraction must lie in (0, 1)");
    if (!(rms_window_cycles > 0)) throw ValidationError("rms window must be > 0 cycles");
    if (!(settling_time >= 0)) throw ValidationError("settling time must be >= 0");
}

int WaveformSet::index(const std::string& name) const
{
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

const std::vector<double>& WaveformSet::at(const std::string& name) const
{
    const int i = index(name);
    if (i < 0) throw LookupError("no waveform '" + name + "'");
    return columns[i];
}

std::string WaveformSet::csv() const
{
    std::string out = "time";
    for (const auto& n : names) out += "," + n;
    out += '\n';
    char buf[32];
    out.reserve(out.size() + time.size() * (names.size() + 1) * 14);
    for (std::size_t k = 0; k < time.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.9g", time[k]);
        out += buf;
        for (const auto& c : columns) {
            std::snprintf(buf, sizeof buf, ",%.9g", c[k]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

double instantaneous(double envelope, double frequency, double time)
{
    if (frequency <= 0) return envelope;
    return std::sqrt(2.0) * envelope * std::sin(2.0 * M_PI * frequency * time);
}

double windowed_rms(const WaveformSet& w, const std::string& name, double frequency, long k, double cycles)
{
    const auto& v = w.at(name);
    if (k < 0 || k >= static_cast<long>(v.size())) throw LookupError("sample index out of range");
    if (frequency <= 0) return std::abs(v[k]);
    const long span = std::max(1L, std::lround(cycles / frequency / w.step));
    const long first = std::max(0L, k - span + 1);
    double acc = 0;
    for (long i = first; i <= k; ++i) {
        const double x = instantaneous(v[i], frequency, w.time[i]);
        acc += x * x;
    }
    return std::sqrt(acc / static_cast<double>(k - first + 1));
}

namespace {

enum class Phase { Open, Closed, Opening };

struct ContactorDyn
{
    Phase phase = Phase::Open;
    long since = 0;
    double i0 = 0;
    bool notified = false;
    bool silent = false;   // controller not told about this separation
    bool stuck = false;
    int pending = 0;   // 0 none, 1 open, 2 close
    long due = 0;
    int record = -1;
};

class Simulator
{
  public:
    Simulator(const Topology& t, const BpcuFsm& fsm, const Scenario& sc, const RequirementSet& req, const SimConfig& cfg)
        : t_(t), exec_(fsm), sc_(sc), req_(req), cfg_(cfg), solver_(t, cfg.gmin)
    {
        cfg.validate();
        validate_scenario(sc, t);
        validate_against(fsm, t);
        auto p = fsm.parameters.find("currentThresholdFraction");
        fraction_ = p == fsm.parameters.end() ? 0.10 : p->second;
        if (!(fraction_ > 0 && fraction_ < 1)) throw ValidationError("currentThresholdFraction must lie in (0, 1)");

        for (const auto& s : fsm.sources) ctl_source_.push_back(t.source_index(s));
        topo_ctl_contactor_.assign(t.contactors().size(), -1);
        for (std::size_t i = 0; i < fsm.contactors.size(); ++i) {
            const int c = t.contactor_index(fsm.contactors[i]);
            ctl_contactor_.push_back(c);
            topo_ctl_contactor_[c] = static_cast<int>(i);
        }
        for (const auto& l : fsm.loads) {
            const auto& all = t.loads();
            ctl_load_.push_back(static_cast<int>(std::find(all.begin(), all.end(), l) - all.begin()));
        }
        for (const auto& id : t.contactors()) {
            const auto& k = t.as<Contactor>(id);
            open_steps_.push_back(std::max(0L, std::lround(std::ceil(k.open_delay / cfg.step - 1e-9))));
            close_steps_.push_back(std::max(0L, std::lround(std::ceil(k.close_delay / cfg.step - 1e-9))));
            tau_c_.push_back(k.decay_time_constant);
        }
        for (std::size_t s = 0; s < t.sources().size(); ++s) {
            const auto& g = t.as<Generator>(t.sources()[s]);
            nominal_.push_back(g.rated_voltage);
            alpha_.push_back(g.regulator_time_constant > 0 ? -std::expm1(-cfg.step / g.regulator_time_constant) : 1.0);
            if (g.is_ac() || req.paralleling_includes_dc) paralleling_sources_ |= bit(static_cast<int>(s));
        }
        for (const auto& b : t.buses()) {
            if (t.as<Bus>(b).cls == BusClass::AC || req.paralleling_includes_dc) watched_buses_.push_back(t.node_index(b));
        }
    }

    HybridResult run()
    {
        const long n_samples = cfg_.samples();
        const double h = cfg_.step;

        std::vector<std::pair<long, EnvEvent>> events;
        for (const auto& te : sc_.events) {
            const double time = te.time ? *te.time : static_cast<double>(*te.step) * sc_.step_duration;
            const long k = std::lround(time / h);
            if (k >= n_samples) {
                res_.report.notes.push_back("event " + te.event.str() + " at t=" + fmt(time) +
                                            " s lies beyond the simulated duration and never fired");
                continue;
            }
            events.emplace_back(k, te.event);
        }
        std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

        status_ = initial_statuses(t_, sc_);
        for (std::size_t s = 0; s < status_.size(); ++s)
            emf_.push_back(status_[s] == SourceStatus::Available ? nominal_[s] : 0.0);
        std::vector<SourceStatus> ctl;
        for (int s : ctl_source_) ctl.push_back(status_[s]);
        cs_ = exec_.initial_state(ctl);
        dyn_.assign(t_.contactors().size(), {});
        prev_current_.assign(t_.contactors().size(), 0.0);

        auto& w = res_.waves;
        w.step = h;
        for (const auto& b : t_.buses()) w.names.push_back("V(" + b + ")");
        for (const auto& c : t_.contactors()) w.names.push_back("I(" + c + ")");
        for (const auto& s : t_.sources()) w.names.push_back("E(" + s + ")");
        w.columns.assign(w.names.size(), std::vector<double>(n_samples));
        w.time.resize(n_samples);

        std::size_t next = 0;
        long par_start = -1;
        std::string par_detail;
        for (long n = 0; n < n_samples; ++n) {
            n_ = n;
            while (next < events.size() && events[next].first == n) apply_event(events[next++].second);
            if (n % cfg_.controller_period == 0) deliver({FsmInput::Kind::Tick, -1, SourceStatus::Off});
            apply_due();

            for (std::size_t s = 0; s < emf_.size(); ++s) {
                const double target = status_[s] == SourceStatus::Available ? nominal_[s] : 0.0;
                emf_[s] += (target - emf_[s]) * alpha_[s];
            }
            Mask closed = 0;
            for (std::size_t c = 0; c < dyn_.size(); ++c)
                if (dyn_[c].phase == Phase::Closed) closed |= bit(static_cast<int>(c));
            const auto sol = solver_.solve(emf_, closed, shed_, 0);

            Mask conducting = closed;
            std::vector<double> current(dyn_.size(), 0.0);
            for (std::size_t c = 0; c < dyn_.size(); ++c) {
                auto& d = dyn_[c];
                if (d.phase == Phase::Closed) {
                    current[c] = std::abs(sol.contactor_current[c]);
                } else if (d.phase == Phase::Opening) {
                    const double i = d.i0 * std::exp(-static_cast<double>(n - d.since) * h / tau_c_[c]);
                    current[c] = i;
                    if (!d.notified && i <= fraction_ * d.i0) {
                        d.notified = true;
                        res_.openings[d.record].below_step = n;
                        res_.trace.add(n, t_.contactors()[c], "current_low");
                        res_.trace.add(n, t_.contactors()[c], "opened");
                        if (!d.silent) notify_open(static_cast<int>(c));
                    }
                    if (!d.notified) conducting |= bit(static_cast<int>(c));
                    if (i < 1e-6 * d.i0) {
                        d.phase = Phase::Open;
                        res_.openings[d.record].open_step = n;
                    }
                }
            }
            prev_current_ = current;

            w.time[n] = static_cast<double>(n) * h;
            std::size_t col = 0;
            for (const auto& b : t_.buses()) w.columns[col++][n] = std::abs(sol.node_voltage[t_.node_index(b)]);
            for (std::size_t c = 0; c < dyn_.size(); ++c) w.columns[col++][n] = current[c];
            for (std::size_t s = 0; s < emf_.size(); ++s) w.columns[col++][n] = emf_[s];
            for (double v : sol.node_voltage)
                if (!std::isfinite(v)) throw SimulationError("non-finite voltage at t=" + fmt(w.time[n]));

            // R1: two energized AC sources reaching one bus over conducting contactors
            const std::string detail = paralleling(conducting);
            if (!detail.empty() && par_start < 0) {
                par_start = n;
                par_detail = detail;
            } else if (detail.empty() && par_start >= 0) {
                close_paralleling(par_start, n - 1, par_detail);
                par_start = -1;
            }
        }
        if (par_start >= 0) close_paralleling(par_start, n_samples - 1, par_detail);

        for (auto& v : observe_voltage_bands(w, t_, req_, cfg_.settling_time, cfg_.powered_fraction))
            res_.report.violations.push_back(std::move(v));
        for (auto& v : observe_tmax(w, t_, req_, cfg_.powered_fraction)) res_.report.violations.push_back(std::move(v));
        return std::move(res_);
    }

  private:
    static std::string fmt(double x)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g", x);
        return buf;
    }

    std::string paralleling(Mask conducting) const
    {
        Mask energized = 0;
        for (std::size_t s = 0; s < emf_.size(); ++s) {
            if (status_[s] == SourceStatus::Available || emf_[s] > 0.1 * nominal_[s]) energized |= bit(static_cast<int>(s));
        }
        energized &= paralleling_sources_;
        if (std::popcount(energized) < 2) return {};
        const auto reach = powered_by(t_, conducting);
        std::string out;
        for (int b : watched_buses_) {
            const Mask m = reach[b] & energized;
            if (std::popcount(m) < 2) continue;
            out += (out.empty() ? "" : "; ") + t_.nodes()[b] + " fed by";
            for (std::size_t s = 0; s < t_.sources().size(); ++s)
                if (has_bit(m, static_cast<int>(s))) out += " " + t_.sources()[s];
        }
        return out;
    }

    void close_paralleling(long first, long last, const std::string& detail)
    {
        res_.paralleling.emplace_back(first, last);
        res_.report.violations.push_back({req_.no_paralleling_id, "paralleling", first * cfg_.step, last * cfg_.step, detail});
    }

    void apply_event(const EnvEvent& e)
    {
        switch (e.kind) {
            case EnvEvent::Kind::SourceStatus: {
                const int s = t_.source_index(e.target);
                if (status_[s] == e.status) {
                    res_.trace.add(n_, e.target, "ignored", e.str());
                    return;
                }
                status_[s] = e.status;
                if (e.status == SourceStatus::Available) emf_[s] = nominal_[s];
                res_.trace.add(n_, e.target, to_string(e.status));
                auto it = std::find(ctl_source_.begin(), ctl_source_.end(), s);
                if (it != ctl_source_.end())
                    deliver({FsmInput::Kind::Source, static_cast<int>(it - ctl_source_.begin()), e.status});
                break;
            }
            case EnvEvent::Kind::ContactorStuckOpen: {
                const int c = t_.contactor_index(e.target);
                res_.trace.add(n_, e.target, "stuck_open");
                if (dyn_[c].phase == Phase::Closed) begin_opening(c, false);
                dyn_[c].stuck = true;
                break;
            }
            case EnvEvent::Kind::ConverterFailed:
                throw ValidationError("converter failures are not simulated in the hybrid model");
        }
    }

    void deliver(const FsmExecutor::Input& in)
    {
        const auto& fsm = exec_.fsm();
        for (int tr : exec_.run(cs_, in)) {
            const auto& def = fsm.transitions[tr];
            res_.trace.add(n_, std::string(kTraceController), "transition", def.from + "->" + def.to);
            const auto& acts = exec_.actions(tr);
            for (std::size_t a = 0; a < acts.size(); ++a) {
                res_.trace.add(n_, std::string(kTraceController), def.actions[a].str());
                const auto& act = acts[a];
                switch (act.kind) {
                    case Action::Kind::Open:
                    case Action::Kind::Close: {
                        const int c = ctl_contactor_[act.index];
                        const bool open = act.kind == Action::Kind::Open;
                        dyn_[c].pending = open ? 1 : 2;
                        dyn_[c].due = n_ + (open ? open_steps_[c] : close_steps_[c]);
                        break;
                    }
                    case Action::Kind::Shed: shed_ |= bit(ctl_load_[act.index]); break;
                    case Action::Kind::Restore: shed_ &= ~bit(ctl_load_[act.index]); break;
                }
            }
        }
    }

    void notify_open(int c)
    {
        const int ctl = topo_ctl_contactor_[c];
        if (ctl < 0) return;
        deliver({FsmInput::Kind::Opened, ctl, SourceStatus::Off});
        deliver({FsmInput::Kind::CurrentLow, ctl, SourceStatus::Off});
    }

    void begin_opening(int c, bool inform)
    {
        auto& d = dyn_[c];
        const double i0 = prev_current_[c];
        if (i0 <= 1e-12) {
            d.phase = Phase::Open;
            res_.trace.add(n_, t_.contactors()[c], "opened");
            if (inform) notify_open(c);
            return;
        }
        d.phase = Phase::Opening;
        d.since = n_;
        d.i0 = i0;
        d.notified = false;
        d.silent = !inform;
        d.record = static_cast<int>(res_.openings.size());
        res_.openings.push_back({t_.contactors()[c], n_, i0, -1, -1});
    }

    void apply_due()
    {
        // Commands landing now may trigger further zero-latency commands.
        for (int guard = 0; guard < 64; ++guard) {
            bool any = false;
            for (std::size_t i = 0; i < dyn_.size(); ++i) {
                auto& d = dyn_[i];
                if (!d.pending || d.due > n_) continue;
                any = true;
                const int c = static_cast<int>(i);
                const bool open = d.pending == 1;
                d.pending = 0;
                if (open) {
                    if (d.phase == Phase::Closed) begin_opening(c, true);
                    else if (d.phase == Phase::Open) notify_open(c);
                } else if (d.stuck) {
                    res_.trace.add(n_, t_.contactors()[c], "close_ignored", "stuck open");
                } else {
                    if (d.phase != Phase::Closed) {
                        d.phase = Phase::Closed;
                        res_.trace.add(n_, t_.contactors()[c], "closed");
                        res_.closings.emplace_back(n_, t_.contactors()[c]);
                    }
                    const int ctl = topo_ctl_contactor_[c];
                    if (ctl >= 0) deliver({FsmInput::Kind::Closed, ctl, SourceStatus::Off});
                }
            }
            if (!any) return;
        }
        throw ExecutionError("zero-latency command cascade did not settle at step " + std::to_string(n_));
    }

    const Topology& t_;
    FsmExecutor exec_;
    const Scenario& sc_;
    const RequirementSet& req_;
    SimConfig cfg_;
    NetworkSolver<double> solver_;
    double fraction_ = 0.10;

    std::vector<int> ctl_source_, ctl_contactor_, topo_ctl_contactor_, ctl_load_;
    std::vector<long> open_steps_, close_steps_;
    std::vector<double> tau_c_, nominal_, alpha_;
    Mask paralleling_sources_ = 0;
    std::vector<int> watched_buses_;

    long n_ = 0;
    std::vector<SourceStatus> status_;
    std::vector<double> emf_;
    ControllerState cs_;
    std::vector<ContactorDyn> dyn_;
    std::vector<double> prev_current_;
    Mask shed_ = 0;
    HybridResult res_;
};

} // namespace

HybridResult run_hybrid(const Topology& t, const BpcuFsm& fsm, const Scenario& scenario, const RequirementSet& req,
                        const SimConfig& cfg)
{
    return Simulator(t, fsm, scenario, req, cfg).run();
}

} // namespace epsvp

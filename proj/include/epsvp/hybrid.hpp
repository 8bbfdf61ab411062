#pragma once

#include <epsvp/controller.hpp>
#include <epsvp/discrete.hpp>
#include <epsvp/requirements.hpp>
#include <epsvp/topology.hpp>

#include <string>
#include <vector>

namespace epsvp {

struct SimConfig
{
    double step = 1e-5;                 // seconds
    double duration = 2.0;              // seconds
    double rms_window_cycles = 1.0;     // instantaneous reconstruction window
    int controller_period = 100;        // steps per controller tick
    double settling_time = 0.1;         // band checks start here
    double powered_fraction = 0.10;     // of nominal, below which a bus is unpowered
    double gmin = 1e-12;

    /// Number of samples: duration / step.
    long samples() const;
    void validate() const;
};

/// Sampled envelopes. Columns are named `V(bus)`, `I(contactor)`, `E(source)`.
struct WaveformSet
{
    double step = 0;
    std::vector<double> time;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    int index(const std::string& name) const;   // -1 when absent
    const std::vector<double>& at(const std::string& name) const;
    std::size_t size() const { return time.size(); }

    /// Delimited text: header `time,<names...>`, values with 9 significant digits.
    std::string csv() const;
};

/// Sinusoid v(t) = sqrt(2) * V * sin(2 pi f t) for an AC envelope `V`
/// (the envelope itself for DC, f = 0).
double instantaneous(double envelope, double frequency, double time);

/// RMS of the reconstructed sinusoid over `cycles` periods ending at sample `k`.
double windowed_rms(const WaveformSet& w, const std::string& name, double frequency, long k, double cycles);

struct ObserverViolation
{
    std::string requirement;
    std::string signal;
    double start = 0;
    double end = 0;
    std::string detail;
};

struct ObserverReport
{
    std::vector<ObserverViolation> violations;
    std::vector<std::string> notes;

    bool empty() const { return violations.empty(); }
    std::size_t count(const std::string& requirement) const;
    std::string json() const;
};

/// Contact separation record of one commanded opening.
struct OpeningRecord
{
    std::string contactor;
    long step = 0;              // command applied
    double current = 0;         // envelope at separation
    long below_step = -1;       // first step at or below the notification threshold
    long open_step = -1;        // overlay fully decayed
};

struct HybridResult
{
    WaveformSet waves;
    ObserverReport report;
    EventTrace trace;
    std::vector<OpeningRecord> openings;
    /// Steps at which each close command landed, in order: (step, contactor).
    std::vector<std::pair<long, std::string>> closings;
    /// Steps during which some bus was fed by two energized AC sources.
    std::vector<std::pair<long, long>> paralleling;
};

/// Fixed-step envelope simulation of the closed loop with runtime observers.
HybridResult run_hybrid(const Topology& t, const BpcuFsm& fsm, const Scenario& scenario,
                        const RequirementSet& req, const SimConfig& cfg = {});

/// Violation intervals of powered buses outside their band after `settling`.
std::vector<ObserverViolation> observe_voltage_bands(const WaveformSet& w, const Topology& t,
                                                     const RequirementSet& req, double settling,
                                                     double powered_fraction = 0.10);

/// Unpowered intervals on essential buses longer than their t_max.
std::vector<ObserverViolation> observe_tmax(const WaveformSet& w, const Topology& t, const RequirementSet& req,
                                            double powered_fraction = 0.10);

} // namespace epsvp

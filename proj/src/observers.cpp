#include <epsvp/errors.hpp>
#include <epsvp/hybrid.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>

namespace epsvp {

std::size_t ObserverReport::count(const std::string& requirement) const
{
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const ObserverViolation& v) { return v.requirement == requirement; }));
}

std::string ObserverReport::json() const
{
    nlohmann::json doc;
    doc["violations"] = nlohmann::json::array();
    for (const auto& v : violations) {
        doc["violations"].push_back({{"requirement", v.requirement},
                                     {"signal", v.signal},
                                     {"start", v.start},
                                     {"end", v.end},
                                     {"detail", v.detail}});
    }
    doc["notes"] = notes;
    return doc.dump(2) + "\n";
}

namespace {

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double nominal_of(const Topology& t, const RequirementSet& req, const std::string& bus)
{
    return req.band_for(t.as<Bus>(bus).cls).nominal;
}

} // namespace

std::vector<ObserverViolation> observe_voltage_bands(const WaveformSet& w, const Topology& t, const RequirementSet& req,
                                                     double settling, double powered_fraction)
{
    std::vector<ObserverViolation> out;
    for (const auto& bus : t.buses()) {
        const int col = w.index("V(" + bus + ")");
        if (col < 0) continue;
        const auto& v = w.columns[col];
        const auto& band = req.band_for(t.as<Bus>(bus).cls);
        const double powered = powered_fraction * band.nominal;
        long start = -1;
        double lo = 0, hi = 0;
        auto flush = [&](long last) {
            out.push_back({req.voltage_band_id, "V(" + bus + ")", w.time[start], w.time[last],
                           "envelope in [" + num(lo) + ", " + num(hi) + "] V outside " + num(band.low()) + ".." +
                               num(band.high()) + " V"});
            start = -1;
        };
        for (std::size_t k = 0; k < v.size(); ++k) {
            const bool bad = w.time[k] >= settling && v[k] >= powered && (v[k] < band.low() || v[k] > band.high());
            if (bad) {
                if (start < 0) {
                    start = static_cast<long>(k);
                    lo = hi = v[k];
                }
                lo = std::min(lo, v[k]);
                hi = std::max(hi, v[k]);
            } else if (start >= 0) {
                flush(static_cast<long>(k) - 1);
            }
        }
        if (start >= 0) flush(static_cast<long>(v.size()) - 1);
    }
    return out;
}

std::vector<ObserverViolation> observe_tmax(const WaveformSet& w, const Topology& t, const RequirementSet& req,
                                            double powered_fraction)
{
    std::vector<ObserverViolation> out;
    if (w.time.empty()) return out;
    const double end_time = w.time.back() + w.step;
    for (const auto& bus : t.buses()) {
        const auto& b = t.as<Bus>(bus);
        if (!b.essential) continue;
        if (!b.t_max) throw ValidationError("essential bus '" + bus + "' has no tMax");
        const auto& v = w.at("V(" + bus + ")");
        const double powered = powered_fraction * nominal_of(t, req, bus);
        long start = -1;
        auto flush = [&](double until) {
            const double gap = until - w.time[start];
            if (gap > *b.t_max) {
                out.push_back({req.essential_power_id, "V(" + bus + ")", w.time[start], until,
                               "unpowered for " + num(gap) + " s (tMax " + num(*b.t_max) + " s)"});
            }
            start = -1;
        };
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (v[k] < powered) {
                if (start < 0) start = static_cast<long>(k);
            } else if (start >= 0) {
                flush(w.time[k]);
            }
        }
        if (start >= 0) flush(end_time);
    }
    return out;
}

} // namespace epsvp

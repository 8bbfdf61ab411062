#pragma once

// Brute-force reference implementations used only by the tests.

#include <epsvp/topology.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Ids = std::set<std::string>;

inline std::string data(const std::string& rel)
{
    return std::string(EPSVP_DATA_DIR) + "/" + rel;
}

// Sources reaching `target` when exactly `closed` contactors conduct and
// components in `failed` are gone.
inline Ids reaching_sources(const epsvp::Topology& t, const Ids& closed, const std::string& target,
                            const Ids& failed = {})
{
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& e : t.edges()) {
        if (!closed.count(e.contactor) || failed.count(e.contactor)) continue;
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    for (const auto& c : t.converters()) {
        if (failed.count(c)) continue;
        const auto& cv = t.as<epsvp::Converter>(c);
        adj[cv.input].push_back(cv.output);
    }
    Ids out;
    for (const auto& s : t.sources()) {
        if (failed.count(s)) continue;
        Ids seen{s};
        std::vector<std::string> stack{s};
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            if (u == target) {
                out.insert(s);
                break;
            }
            for (const auto& v : adj[u])
                if (seen.insert(v).second) stack.push_back(v);
        }
    }
    return out;
}

inline Ids all_contactors(const epsvp::Topology& t)
{
    return Ids(t.contactors().begin(), t.contactors().end());
}

// Some bus fed by two or more sources.
inline bool paralleled(const epsvp::Topology& t, const Ids& closed)
{
    for (const auto& b : t.buses())
        if (reaching_sources(t, closed, b).size() >= 2) return true;
    return false;
}

inline std::vector<std::string> failable(const epsvp::Topology& t)
{
    std::vector<std::string> ids(t.sources().begin(), t.sources().end());
    ids.insert(ids.end(), t.contactors().begin(), t.contactors().end());
    ids.insert(ids.end(), t.converters().begin(), t.converters().end());
    return ids;
}

inline bool disconnected(const epsvp::Topology& t, const std::string& bus, const Ids& failed)
{
    return reaching_sources(t, all_contactors(t), bus, failed).empty();
}

// Minimal failure sets up to `max_size` that disconnect `bus`.
inline std::set<Ids> cut_sets(const epsvp::Topology& t, const std::string& bus, std::size_t max_size)
{
    const auto ids = failable(t);
    const std::size_t n = ids.size();
    std::set<Ids> out;
    for (unsigned long m = 1; m < (1UL << n); ++m) {
        if (static_cast<std::size_t>(__builtin_popcountl(m)) > max_size) continue;
        Ids s;
        for (std::size_t i = 0; i < n; ++i)
            if (m >> i & 1UL) s.insert(ids[i]);
        if (!disconnected(t, bus, s)) continue;
        bool minimal = true;
        for (const auto& x : s) {
            Ids smaller = s;
            smaller.erase(x);
            if (disconnected(t, bus, smaller)) {
                minimal = false;
                break;
            }
        }
        if (minimal) out.insert(s);
    }
    return out;
}

} // namespace oracle

#pragma once

#include <epsvp/errors.hpp>
#include <epsvp/topology.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace epsvp {

/// Quasi-static resistive network solution.
template <class Scalar>
struct NetworkSolution
{
    std::vector<Scalar> node_voltage;       // per topology node
    std::vector<Scalar> contactor_current;  // per contactor, positive from edge end a to end b
    std::vector<Scalar> source_current;     // per source, delivered into its node
    std::vector<Scalar> converter_current;  // per converter, delivered into its output node
    std::vector<Scalar> load_current;       // per load
};

/// Nodal analysis over the single-line diagram.
///
/// Closed contactors are ideal: the nodes they join are merged into one
/// unknown. Sources are an EMF behind their internal resistance, loads are
/// resistors to the return, converters are voltage-controlled voltage
/// sources (output = gain * input) whose input draws gain * I_out / efficiency.
/// A tiny conductance to the return keeps isolated nodes determined.
template <class Scalar>
class NetworkSolver
{
  public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    explicit NetworkSolver(const Topology& t, Scalar gmin = Scalar(1e-12)) : t_(t), gmin_(gmin)
    {
        for (const auto& s : t.sources()) {
            const auto& g = t.as<Generator>(s);
            if (!(g.internal_resistance > 0)) {
                throw ValidationError("source '" + s + "' needs a positive internal resistance for simulation");
            }
        }
        for (const auto& l : t.loads()) {
            const auto& ld = t.as<Load>(l);
            load_node_.push_back(t.node_index(ld.bus));
            if (!(ld.resistance > 0)) throw ValidationError("load '" + l + "' needs a positive resistance");
        }
        for (const auto& c : t.converters()) {
            const auto& cv = t.as<Converter>(c);
            conv_in_.push_back(t.node_index(cv.input));
            conv_out_.push_back(t.node_index(cv.output));
        }
    }

    /// `emf` per source, `closed` contactors conducting, `shed` topology load
    /// indices disconnected, `failed_converters` not conducting.
    NetworkSolution<Scalar> solve(const std::vector<Scalar>& emf, Mask closed, Mask shed = 0,
                                  Mask failed_converters = 0) const
    {
        const int n = static_cast<int>(t_.nodes().size());
        const int nc = static_cast<int>(t_.contactors().size());

        // Union-find over closed contactors; a redundant closed edge is an ideal loop.
        std::vector<int> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (int c = 0; c < nc; ++c) {
            if (!has_bit(closed, c)) continue;
            const auto [a, b] = t_.contactor_ends(c);
            const int ra = find(a), rb = find(b);
            if (ra == rb) throw SimulationError("singular network: closed ideal loop through " + loop_ids(closed, c));
            parent[ra] = rb;
        }
        std::vector<int> group(n, -1);
        int groups = 0;
        for (int i = 0; i < n; ++i) {
            const int r = find(i);
            if (group[r] < 0) group[r] = groups++;
            group[i] = group[r];
        }

        std::vector<int> active;   // converter indices in the system
        for (int k = 0; k < static_cast<int>(conv_in_.size()); ++k)
            if (!has_bit(failed_converters, k)) active.push_back(k);
        const int dim = groups + static_cast<int>(active.size());

        Matrix A = Matrix::Zero(dim, dim);
        Vector rhs = Vector::Zero(dim);
        for (int i = 0; i < n; ++i) A(group[i], group[i]) += gmin_;
        for (std::size_t s = 0; s < t_.sources().size(); ++s) {
            const Scalar g = Scalar(1) / Scalar(t_.as<Generator>(t_.sources()[s]).internal_resistance);
            const int k = group[t_.source_node(static_cast<int>(s))];
            A(k, k) += g;
            rhs(k) += emf[s] * g;
        }
        for (std::size_t l = 0; l < load_node_.size(); ++l) {
            if (has_bit(shed, static_cast<int>(l))) continue;
            const int k = group[load_node_[l]];
            A(k, k) += Scalar(1) / Scalar(t_.as<Load>(t_.loads()[l]).resistance);
        }
        for (std::size_t j = 0; j < active.size(); ++j) {
            const int c = active[j];
            const auto& cv = t_.as<Converter>(t_.converters()[c]);
            const int row = groups + static_cast<int>(j);
            const int gi = group[conv_in_[c]], go = group[conv_out_[c]];
            A(go, row) -= Scalar(1);                                        // delivers I into output
            A(gi, row) += Scalar(cv.gain) / Scalar(cv.efficiency);          // draws from input
            A(row, go) += Scalar(1);
            A(row, gi) -= Scalar(cv.gain);
        }

        Eigen::FullPivLU<Matrix> lu(A);
        if (!lu.isInvertible()) throw SimulationError("singular network matrix");
        const Vector x = lu.solve(rhs);
        for (int i = 0; i < dim; ++i) {
            if (!std::isfinite(static_cast<double>(x(i)))) throw SimulationError("non-finite network solution");
        }

        NetworkSolution<Scalar> out;
        out.node_voltage.resize(n);
        for (int i = 0; i < n; ++i) out.node_voltage[i] = x(group[i]);
        out.source_current.resize(t_.sources().size());
        for (std::size_t s = 0; s < t_.sources().size(); ++s) {
            const int node = t_.source_node(static_cast<int>(s));
            out.source_current[s] = (emf[s] - out.node_voltage[node]) /
                                    Scalar(t_.as<Generator>(t_.sources()[s]).internal_resistance);
        }
        out.load_current.assign(load_node_.size(), Scalar(0));
        for (std::size_t l = 0; l < load_node_.size(); ++l) {
            if (has_bit(shed, static_cast<int>(l))) continue;
            out.load_current[l] = out.node_voltage[load_node_[l]] / Scalar(t_.as<Load>(t_.loads()[l]).resistance);
        }
        out.converter_current.assign(conv_in_.size(), Scalar(0));
        for (std::size_t j = 0; j < active.size(); ++j) out.converter_current[active[j]] = x(groups + static_cast<int>(j));

        // Net current each node must receive over its closed contactors.
        std::vector<Scalar> demand(n, Scalar(0));
        for (int i = 0; i < n; ++i) demand[i] += gmin_ * out.node_voltage[i];
        for (std::size_t s = 0; s < t_.sources().size(); ++s)
            demand[t_.source_node(static_cast<int>(s))] -= out.source_current[s];
        for (std::size_t l = 0; l < load_node_.size(); ++l) demand[load_node_[l]] += out.load_current[l];
        for (int c : active) {
            const auto& cv = t_.as<Converter>(t_.converters()[c]);
            demand[conv_out_[c]] -= out.converter_current[c];
            demand[conv_in_[c]] += out.converter_current[c] * Scalar(cv.gain) / Scalar(cv.efficiency);
        }
        out.contactor_current = tree_flows(closed, demand);
        return out;
    }

  private:
    // Flows on the closed-contactor forest satisfying every node demand.
    std::vector<Scalar> tree_flows(Mask closed, const std::vector<Scalar>& demand) const
    {
        const int n = static_cast<int>(demand.size());
        const int nc = static_cast<int>(t_.contactors().size());
        std::vector<Scalar> flow(nc, Scalar(0));
        std::vector<std::vector<std::pair<int, int>>> adj(n);   // (neighbour, contactor)
        for (int c = 0; c < nc; ++c) {
            if (!has_bit(closed, c)) continue;
            const auto [a, b] = t_.contactor_ends(c);
            adj[a].emplace_back(b, c);
            adj[b].emplace_back(a, c);
        }
        std::vector<int> order, via(n, -1), up(n, -1);
        std::vector<bool> seen(n, false);
        for (int root = 0; root < n; ++root) {
            if (seen[root]) continue;
            seen[root] = true;
            std::vector<int> stack{root};
            while (!stack.empty()) {
                const int u = stack.back();
                stack.pop_back();
                order.push_back(u);
                for (const auto& [v, c] : adj[u]) {
                    if (seen[v]) continue;
                    seen[v] = true;
                    up[v] = u;
                    via[v] = c;
                    stack.push_back(v);
                }
            }
        }
        std::vector<Scalar> subtree = demand;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int v = *it;
            if (up[v] < 0) continue;
            // parent sends subtree[v] to v
            const auto [a, b] = t_.contactor_ends(via[v]);
            flow[via[v]] = (a == up[v] && b == v) ? subtree[v] : -subtree[v];
            subtree[up[v]] += subtree[v];
        }
        return flow;
    }

    std::string loop_ids(Mask closed, int closing) const
    {
        // path between the ends of `closing` over the other closed contactors
        const int n = static_cast<int>(t_.nodes().size());
        const auto [a, b] = t_.contactor_ends(closing);
        std::vector<int> via(n, -2), prev(n, -1);
        via[a] = -1;
        std::vector<int> queue{a};
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int u = queue[q];
            for (int c = 0; c < closing; ++c) {
                if (!has_bit(closed, c)) continue;
                const auto [x, y] = t_.contactor_ends(c);
                const int v = x == u ? y : y == u ? x : -1;
                if (v < 0 || via[v] != -2) continue;
                via[v] = c;
                prev[v] = u;
                queue.push_back(v);
            }
        }
        std::vector<std::string> ids{t_.contactors()[closing]};
        for (int v = b; v != a && v >= 0 && via[v] >= 0; v = prev[v]) ids.push_back(t_.contactors()[via[v]]);
        std::sort(ids.begin(), ids.end());
        std::string out;
        for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
        return out;
    }

    const Topology& t_;
    Scalar gmin_;
    std::vector<int> load_node_, conv_in_, conv_out_;
};

extern template class NetworkSolver<double>;

} // namespace epsvp

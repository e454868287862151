#pragma once

// Inner (geodesic) metric on grid domains and inner-Lipschitz seminorms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <queue>
#include <utility>
#include <vector>

#include "wsob/core.hpp"
#include "wsob/error.hpp"
#include "wsob/geometry.hpp"
#include "wsob/rng.hpp"

namespace wsob {

enum class DistanceMode {
    Lattice,  // shortest path in the stencil graph
    Taut,     // shortest path in the graph of all visible lattice offsets up to 3 steps
};

namespace detail {

/// Primitive lattice offsets (i, j) with max(|i|, |j|) <= r, one of each +- pair.
inline std::vector<std::array<int, 2>> primitive_half_offsets(int r) {
    std::vector<std::array<int, 2>> out;
    for (int i = 0; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
            if (i == 0 && j <= 0) continue;
            if (std::gcd(i, std::abs(j)) == 1) out.push_back({i, j});
        }
    return out;
}

/// Undirected weighted graph in compressed adjacency form, with component labels.
struct AdjacencyGraph {
    std::vector<int> offset, target, component;
    std::vector<double> weight;
    int components = 0;

    AdjacencyGraph() = default;
    AdjacencyGraph(std::size_t n, const std::vector<Edge>& edges) {
        std::vector<int> degree(n, 0);
        for (const Edge& e : edges) {
            require(e.length > 0, ErrorCode::InvalidArgument, "edge of zero length");
            ++degree[e.a];
            ++degree[e.b];
        }
        offset.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + degree[i];
        target.resize(offset[n]);
        weight.resize(offset[n]);
        std::vector<int> fill(offset.begin(), offset.end() - 1);
        for (const Edge& e : edges) {
            target[fill[e.a]] = e.b;
            weight[fill[e.a]++] = e.length;
            target[fill[e.b]] = e.a;
            weight[fill[e.b]++] = e.length;
        }
        component.assign(n, -1);
        for (std::size_t s = 0; s < n; ++s) {
            if (component[s] >= 0) continue;
            std::vector<int> stack{static_cast<int>(s)};
            component[s] = components;
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int k = offset[v]; k < offset[v + 1]; ++k)
                    if (component[target[k]] < 0) {
                        component[target[k]] = components;
                        stack.push_back(target[k]);
                    }
            }
            ++components;
        }
    }

    /// Dijkstra from src; stops once `stop` is settled when stop >= 0.
    std::vector<double> dijkstra(int src, std::vector<int>* pred, int stop = -1) const {
        std::size_t n = component.size();
        std::vector<double> dist(n, infinity);
        if (pred) pred->assign(n, -1);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[src] = 0.0;
        heap.push({0.0, src});
        while (!heap.empty()) {
            auto [d, v] = heap.top();
            heap.pop();
            if (d > dist[v]) continue;
            if (v == stop) break;
            for (int k = offset[v]; k < offset[v + 1]; ++k) {
                int w = target[k];
                double nd = d + weight[k];
                if (nd < dist[w]) {
                    dist[w] = nd;
                    if (pred) (*pred)[w] = v;
                    heap.push({nd, w});
                }
            }
        }
        return dist;
    }
};

}  // namespace detail

/// Weighted stencil graph of a grid domain, plus a denser graph for taut distances.
/// Holds a reference: the domain must outlive it.
class InnerMetricGraph {
public:
    explicit InnerMetricGraph(const GridDomain& domain) : domain_(domain), lattice_(domain.size(), domain.edges()) {
        if (domain.dim() != 2 || !domain.has_membership()) {
            taut_ = lattice_;
            return;
        }
        // every primitive offset up to 3 steps whose segment stays inside: the direction set
        // is dense enough that straight runs are within about 1.3% of their length
        std::vector<Edge> edges;
        double h = domain.h();
        auto offsets = detail::primitive_half_offsets(3);
        for (std::size_t k = 0; k < domain.size(); ++k) {
            auto [i, j] = domain.lattice()[k];
            for (auto [di, dj] : offsets) {
                int other = domain.find_lattice(i + di, j + dj);
                if (other < 0 || !domain.segment_inside(domain.node(static_cast<int>(k)), domain.node(other))) continue;
                edges.push_back({static_cast<int>(k), other, h * std::hypot(double(di), double(dj))});
            }
        }
        taut_ = detail::AdjacencyGraph(domain.size(), edges);
    }

    const GridDomain& domain() const { return domain_; }
    std::size_t size() const { return domain_.size(); }
    int component(int node) const { return lattice_.component[node]; }
    int component_count() const { return lattice_.components; }

    template <class Fn>
    void for_each_neighbor(int v, Fn&& fn) const {
        for (int k = lattice_.offset[v]; k < lattice_.offset[v + 1]; ++k) fn(lattice_.target[k], lattice_.weight[k]);
    }

    /// Single-source shortest paths; unreachable nodes get +inf. `pred` receives the tree.
    std::vector<double> distances_from(int src, std::vector<int>* pred = nullptr,
                                       DistanceMode mode = DistanceMode::Lattice) const {
        check_node(src);
        return graph(mode).dijkstra(src, pred);
    }

    /// Length of the shortest a-b path; +inf if there is none.
    double path_length(int a, int b, DistanceMode mode) const {
        check_node(a);
        check_node(b);
        const detail::AdjacencyGraph& g = graph(mode);
        if (g.component[a] != g.component[b]) return infinity;
        return g.dijkstra(a, nullptr, b)[b];
    }

    /// Geodesic from a to b as a node sequence (empty if disconnected).
    std::vector<int> shortest_path(int a, int b, DistanceMode mode = DistanceMode::Lattice) const {
        std::vector<int> pred;
        std::vector<double> dist = distances_from(a, &pred, mode);
        if (!std::isfinite(dist[b])) return {};
        std::vector<int> path{b};
        while (path.back() != a) path.push_back(pred[path.back()]);
        std::reverse(path.begin(), path.end());
        return path;
    }

    void check_node(int v) const {
        require(v >= 0 && static_cast<std::size_t>(v) < size(), ErrorCode::InvalidArgument, "node index out of range");
    }

private:
    const detail::AdjacencyGraph& graph(DistanceMode mode) const {
        return mode == DistanceMode::Lattice ? lattice_ : taut_;
    }

    const GridDomain& domain_;
    detail::AdjacencyGraph lattice_, taut_;
};

/// d_X(a, b); +inf across components. Symmetric by construction (evaluated from min(a, b)).
inline double inner_distance(const InnerMetricGraph& g, int a, int b, DistanceMode mode = DistanceMode::Taut) {
    g.check_node(a);
    g.check_node(b);
    if (a == b) return 0.0;
    return g.path_length(std::min(a, b), std::max(a, b), mode);
}

// ---------------------------------------------------------------------------
// Inner-Lipschitz seminorm

enum class SeminormMode { EdgeQuotient, AllPairs };

struct SeminormOptions {
    SeminormMode mode = SeminormMode::EdgeQuotient;
    int pairs = 10000;  // AllPairs sample size
    std::uint64_t seed = 1;
    DistanceMode distance = DistanceMode::Lattice;
};

namespace detail {

inline void check_finite(const std::vector<double>& u, int node) {
    if (!std::isfinite(u[node]))
        throw Error(ErrorCode::NonFiniteValue, "function is not finite at node " + std::to_string(node));
}

}  // namespace detail

/// Lower estimate of sup |u(a)-u(b)| / d_X(a, b).
inline double inner_lipschitz_seminorm(const InnerMetricGraph& g, const std::vector<double>& u,
                                       SeminormOptions opt = {}) {
    require(u.size() == g.size(), ErrorCode::InvalidArgument, "function size does not match the graph");
    const GridDomain& dom = g.domain();
    double best = 0.0;
    if (opt.mode == SeminormMode::EdgeQuotient) {
        for (const Edge& e : dom.edges()) {
            detail::check_finite(u, e.a);
            detail::check_finite(u, e.b);
            best = std::max(best, std::abs(u[e.a] - u[e.b]) / e.length);
        }
        return best;
    }
    // AllPairs: ~sqrt(k) seeded sources, each paired with k/sqrt(k) seeded targets
    require(opt.pairs > 0, ErrorCode::InvalidArgument, "pair sample size must be positive");
    Rng rng(opt.seed);
    int sources = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(opt.pairs))));
    int per_source = (opt.pairs + sources - 1) / sources;
    for (int s = 0; s < sources; ++s) {
        int a = static_cast<int>(rng.index(g.size()));
        detail::check_finite(u, a);
        std::vector<int> pred;
        std::vector<double> dist = g.distances_from(a, &pred);
        for (int k = 0; k < per_source; ++k) {
            int b = static_cast<int>(rng.index(g.size()));
            if (b == a || !std::isfinite(dist[b])) continue;
            detail::check_finite(u, b);
            double d = dist[b];
            if (opt.distance == DistanceMode::Taut) d = inner_distance(g, a, b, DistanceMode::Taut);
            best = std::max(best, std::abs(u[a] - u[b]) / d);
        }
    }
    return best;
}

/// sup|u| + inner-Lipschitz seminorm.
inline double cech_norm(const InnerMetricGraph& g, const std::vector<double>& u, double sup_u,
                        SeminormOptions opt = {}) {
    return sup_u + inner_lipschitz_seminorm(g, u, opt);
}

inline double cech_norm(const InnerMetricGraph& g, const std::vector<double>& u, SeminormOptions opt = {}) {
    double sup = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        detail::check_finite(u, static_cast<int>(i));
        sup = std::max(sup, std::abs(u[i]));
    }
    return cech_norm(g, u, sup, opt);
}

/// Distance matrix between the listed nodes as CSV (quadratic in the list length).
inline void write_distance_csv(std::ostream& os, const InnerMetricGraph& g, const std::vector<int>& nodes,
                               DistanceMode mode = DistanceMode::Taut) {
    os.precision(12);
    os << "node";
    for (int b : nodes) os << ',' << b;
    os << '\n';
    for (int a : nodes) {
        os << a;
        for (int b : nodes) {
            double d = inner_distance(g, a, b, mode);
            os << ',';
            if (std::isinf(d)) os << "inf"; else os << d;
        }
        os << '\n';
    }
}

}  // namespace wsob

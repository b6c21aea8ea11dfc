#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "weights.hpp"

namespace crg {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

struct SimpleGraph {
    std::size_t n = 0;
    std::vector<Edge> edges;  // stored with first < second
    std::vector<double> vertex_weights;

    void add_edge(Vertex u, Vertex v) {
        if (u > v) std::swap(u, v);
        edges.emplace_back(u, v);
    }

    void normalize() {
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }

    bool valid() const {
        auto e = edges;
        std::sort(e.begin(), e.end());
        if (std::adjacent_find(e.begin(), e.end()) != e.end()) return false;
        for (auto [u, v] : e)
            if (u >= v || v >= n) return false;
        return vertex_weights.size() == n;
    }
};

struct Adjacency {
    std::vector<std::size_t> offset;
    std::vector<Vertex> nbr;

    std::size_t degree(Vertex v) const { return offset[v + 1] - offset[v]; }
    const Vertex* begin(Vertex v) const { return nbr.data() + offset[v]; }
    const Vertex* end(Vertex v) const { return nbr.data() + offset[v + 1]; }
};

inline Adjacency adjacency(const SimpleGraph& g) {
    Adjacency a;
    a.offset.assign(g.n + 1, 0);
    for (auto [u, v] : g.edges) {
        ++a.offset[u + 1];
        ++a.offset[v + 1];
    }
    std::partial_sum(a.offset.begin(), a.offset.end(), a.offset.begin());
    a.nbr.resize(a.offset[g.n]);
    std::vector<std::size_t> pos(a.offset.begin(), a.offset.end() - 1);
    for (auto [u, v] : g.edges) {
        a.nbr[pos[u]++] = v;
        a.nbr[pos[v]++] = u;
    }
    return a;
}

// Samples every pair i < j independently with probability 1 - exp(-t x_i x_j).
// x is sorted in descending order, so along a row i the probabilities are
// nonincreasing in j. With the current row bound r = t x_i x_cur the number of
// pairs skipped before the next candidate is geometric with failure
// probability exp(-r), i.e. floor(log(U) / -r). The candidate j is kept with
// probability q_ij / q_i,cur, which is thinning of a dominating Bernoulli
// sequence and therefore exact. Expected work is O(n + |E|).
inline SimpleGraph sample_mc_graph(const WeightSequence& x, double t, Rng& rng) {
    if (t < 0.0) throw ParameterError("t must be nonnegative");
    SimpleGraph g;
    g.n = x.n();
    g.vertex_weights = x.values();
    if (t == 0.0) return g;
    const auto& v = x.values();
    std::size_t n = v.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t j = i + 1;
        double rate = t * v[i] * v[j];
        double q = -std::expm1(-rate);
        while (j < n) {
            double skip = std::floor(std::log(uniform_open(rng)) / -rate);
            if (skip >= static_cast<double>(n - j)) break;
            j += static_cast<std::size_t>(skip);
            double rate_j = t * v[i] * v[j];
            double q_j = -std::expm1(-rate_j);
            if (uniform01(rng) * q < q_j) g.edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
            rate = rate_j;
            q = q_j;
            ++j;
        }
    }
    return g;
}

// Norros-Reittu graph at window parameter lambda, realized through the exact
// identity t x_i x_j = (1 + lambda n^{-eta}) w_i w_j / l_n.
inline SimpleGraph sample_nr_graph(const WeightSequence& w, double lambda, double tau, Rng& rng) {
    if (w.empty()) throw ParameterError("empty weight sequence");
    auto mc = nr_to_mc_params(w, lambda, tau);
    SimpleGraph g = sample_mc_graph(mc.x, mc.t, rng);
    g.vertex_weights = critical_window(w, tau, lambda).values();
    return g;
}

struct Component {
    std::vector<Vertex> vertices;  // sorted
    double mass = 0.0;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), Vertex{0});
    }
    Vertex find(Vertex v) {
        while (parent_[v] != v) {
            parent_[v] = parent_[parent_[v]];
            v = parent_[v];
        }
        return v;
    }
    bool unite(Vertex a, Vertex b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

private:
    std::vector<Vertex> parent_;
    std::vector<std::size_t> size_;
};

inline void sort_components(std::vector<Component>& comps) {
    std::sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
        if (a.mass != b.mass) return a.mass > b.mass;
        return a.vertices.front() < b.vertices.front();
    });
}

inline std::vector<Component> components(const SimpleGraph& g) {
    UnionFind uf(g.n);
    for (auto [u, v] : g.edges) uf.unite(u, v);
    std::vector<std::int64_t> slot(g.n, -1);
    std::vector<Component> comps;
    for (Vertex v = 0; v < g.n; ++v) {
        Vertex r = uf.find(v);
        if (slot[r] < 0) {
            slot[r] = static_cast<std::int64_t>(comps.size());
            comps.emplace_back();
        }
        auto& c = comps[static_cast<std::size_t>(slot[r])];
        c.vertices.push_back(v);
        c.mass += g.vertex_weights[v];
    }
    sort_components(comps);
    return comps;
}

inline bool is_connected(const SimpleGraph& g) {
    if (g.n <= 1) return true;
    UnionFind uf(g.n);
    std::size_t merges = 0;
    for (auto [u, v] : g.edges) merges += uf.unite(u, v);
    return merges + 1 == g.n;
}

struct ConditionedSample {
    SimpleGraph graph;
    std::size_t attempts = 0;
};

// Exact sample from the connectivity-conditioned law with q_ij = 1 - exp(-a p_i p_j)
// by resampling the whole graph until it is connected.
inline ConditionedSample sample_connected_conditioned(const std::vector<double>& p, double a, Rng& rng,
                                                      std::size_t max_attempts = 1000000) {
    std::size_t m = p.size();
    if (m < 1) throw ParameterError("need at least one vertex");
    if (!(a > 0.0)) throw ParameterError("a must be positive");
    std::vector<double> q;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) q.push_back(-std::expm1(-a * p[i] * p[j]));
    ConditionedSample out;
    out.graph.n = m;
    out.graph.vertex_weights = p;
    while (out.attempts < max_attempts) {
        ++out.attempts;
        out.graph.edges.clear();
        std::size_t k = 0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j, ++k)
                if (uniform01(rng) < q[k]) out.graph.edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
        if (is_connected(out.graph)) return out;
    }
    throw std::runtime_error("connectivity rejection gave up after " + std::to_string(max_attempts) +
                             " attempts; acceptance probability below about " +
                             std::to_string(1.0 / static_cast<double>(max_attempts)));
}

inline std::map<std::size_t, std::size_t> degree_histogram(const SimpleGraph& g) {
    std::vector<std::size_t> deg(g.n, 0);
    for (auto [u, v] : g.edges) {
        ++deg[u];
        ++deg[v];
    }
    std::map<std::size_t, std::size_t> h;
    for (auto d : deg) ++h[d];
    return h;
}

// Bit index of pair (i,j), i<j, in the lexicographic pair order on m vertices.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t m) {
    if (i > j) std::swap(i, j);
    return i * m - i * (i + 1) / 2 + (j - i - 1);
}

inline std::uint64_t edge_mask(const SimpleGraph& g) {
    std::uint64_t mask = 0;
    for (auto [u, v] : g.edges) mask |= std::uint64_t{1} << pair_index(u, v, g.n);
    return mask;
}

inline void write_edge_list(std::ostream& os, const SimpleGraph& g) {
    os << "# n=" << g.n << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < g.n; ++i) os << "w " << i << ' ' << g.vertex_weights[i] << '\n';
    for (auto [u, v] : g.edges) os << u << ' ' << v << '\n';
}

}  // namespace crg

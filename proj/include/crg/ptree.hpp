#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "graph.hpp"
#include "metric.hpp"
#include "rng.hpp"

namespace crg {

inline constexpr Vertex kNoVertex = std::numeric_limits<Vertex>::max();

// children[v] lists the children of v from left (oldest) to right (youngest);
// depth-first exploration visits them in that order.
struct OrderedTree {
    std::size_t m = 0;
    Vertex root = 0;
    std::vector<Vertex> parent;  // kNoVertex at the root
    std::vector<std::vector<Vertex>> children;

    static OrderedTree single(std::size_t m_, Vertex root_) {
        OrderedTree t;
        t.m = m_;
        t.root = root_;
        t.parent.assign(m_, kNoVertex);
        t.children.assign(m_, {});
        return t;
    }

    void attach(Vertex child, Vertex par) {
        parent[child] = par;
        children[par].push_back(child);
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> e;
        for (Vertex v = 0; v < m; ++v)
            if (parent[v] != kNoVertex) e.emplace_back(std::min(v, parent[v]), std::max(v, parent[v]));
        return e;
    }

    bool valid() const {
        if (parent.size() != m || children.size() != m || root >= m || parent[root] != kNoVertex) return false;
        std::size_t listed = 0;
        for (Vertex v = 0; v < m; ++v) {
            for (Vertex c : children[v])
                if (c >= m || parent[c] != v) return false;
            listed += children[v].size();
        }
        if (listed + 1 != m) return false;
        std::vector<bool> seen(m, false);
        std::vector<Vertex> stack{root};
        std::size_t count = 0;
        while (!stack.empty()) {
            Vertex v = stack.back();
            stack.pop_back();
            if (seen[v]) return false;
            seen[v] = true;
            ++count;
            for (Vertex c : children[v]) stack.push_back(c);
        }
        return count == m;
    }

    // parent array with the root marked by its own id; ignores child order
    std::vector<Vertex> shape_key() const {
        std::vector<Vertex> k(parent);
        k[root] = root;
        return k;
    }

    std::vector<Vertex> ordered_key() const {
        auto k = shape_key();
        for (Vertex v = 0; v < m; ++v) {
            k.push_back(kNoVertex);
            k.insert(k.end(), children[v].begin(), children[v].end());
        }
        return k;
    }

    SimpleGraph as_graph(const std::vector<double>& weights) const {
        SimpleGraph g;
        g.n = m;
        g.vertex_weights = weights;
        g.edges = edges();
        g.normalize();
        return g;
    }
};

inline void check_pmf(const std::vector<double>& p) {
    if (p.empty()) throw ParameterError("empty probability vector");
    double s = 0.0;
    for (double v : p) {
        if (!(v > 0.0)) throw ParameterError("probabilities must be positive");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ParameterError("probabilities must sum to 1");
}

// Depth-first encoding of a p-tree from distinct points u in (0,1).
inline OrderedTree ptree_exploration(const std::vector<double>& p, std::vector<double> u) {
    check_pmf(p);
    std::size_t m = p.size();
    if (u.size() != m) throw ParameterError("u and p differ in length");
    {
        auto s = u;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ParameterError("u must be distinct");
    }
    std::vector<std::size_t> by_u(m);
    Vertex root = 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::iota(by_u.begin(), by_u.end(), std::size_t{0});
        std::sort(by_u.begin(), by_u.end(), [&](auto a, auto b) { return u[a] < u[b]; });
        double acc = 0.0, best = std::numeric_limits<double>::infinity();
        std::size_t ties = 0;
        for (std::size_t v : by_u) {
            double f = -u[v] + acc;
            if (f < best) {
                best = f;
                root = static_cast<Vertex>(v);
                ties = 1;
            } else if (f == best) {
                ++ties;
            }
            acc += p[v];
        }
        if (ties == 1) break;
        for (std::size_t v = 0; v < m; ++v) u[v] += static_cast<double>(v + 1) * 1e-15;
    }
    std::vector<double> y(m);
    for (std::size_t v = 0; v < m; ++v) {
        y[v] = u[v] - u[root];
        if (y[v] < 0.0) y[v] += 1.0;
    }
    std::vector<std::size_t> by_y(m);
    std::iota(by_y.begin(), by_y.end(), std::size_t{0});
    std::sort(by_y.begin(), by_y.end(), [&](auto a, auto b) { return y[a] < y[b]; });

    OrderedTree t = OrderedTree::single(m, root);
    std::vector<Vertex> stack{root};
    std::size_t next = 1;  // by_y[0] is the root
    double ystar = 0.0;
    std::vector<Vertex> found;
    for (std::size_t i = 0; i < m; ++i) {
        if (stack.empty()) throw std::logic_error("exploration stack emptied early");
        Vertex v = stack.back();
        stack.pop_back();
        double lo = ystar;
        ystar += p[v];
        found.clear();
        while (next < m && y[by_y[next]] > lo && y[by_y[next]] < ystar) {
            found.push_back(static_cast<Vertex>(by_y[next]));
            ++next;
        }
        for (Vertex c : found) stack.push_back(c);
        for (auto it = found.rbegin(); it != found.rend(); ++it) t.attach(*it, v);
    }
    return t;
}

inline OrderedTree sample_ordered_ptree(const std::vector<double>& p, Rng& rng) {
    std::vector<double> u(p.size());
    for (auto& x : u) x = uniform_open(rng);
    return ptree_exploration(p, std::move(u));
}

struct BirthdayResult {
    OrderedTree tree;
    std::vector<Vertex> repeats;
    std::size_t steps = 0;
};

inline BirthdayResult ptree_birthday_from(const std::vector<Vertex>& Y, std::size_t m) {
    if (Y.empty()) throw ParameterError("empty sequence");
    BirthdayResult out;
    out.tree = OrderedTree::single(m, Y[0]);
    std::vector<bool> seen(m, false);
    seen[Y[0]] = true;
    for (std::size_t j = 1; j < Y.size(); ++j) {
        if (seen[Y[j]]) {
            out.repeats.push_back(Y[j - 1]);
        } else {
            seen[Y[j]] = true;
            out.tree.attach(Y[j], Y[j - 1]);
        }
    }
    out.steps = Y.size();
    return out;
}

// i.i.d. draws from p until every vertex has appeared and n_repeats repeat
// times have been seen.
inline BirthdayResult ptree_birthday(const std::vector<double>& p, Rng& rng, std::size_t n_repeats = 1) {
    std::size_t m = p.size();
    std::discrete_distribution<Vertex> draw(p.begin(), p.end());
    std::vector<Vertex> Y{draw(rng)};
    std::vector<bool> seen(m, false);
    seen[Y[0]] = true;
    std::size_t distinct = 1, reps = 0;
    while (distinct < m || reps < n_repeats) {
        Vertex v = draw(rng);
        if (seen[v]) {
            ++reps;
        } else {
            seen[v] = true;
            ++distinct;
        }
        Y.push_back(v);
    }
    return ptree_birthday_from(Y, m);
}

struct DfsAnnotation {
    std::vector<Vertex> order;               // v(1), ..., v(m)
    std::vector<double> active_weight;       // total p on the stack after each step
    std::vector<std::pair<Vertex, Vertex>> permitted;  // (v(i), u), filled when requested
    std::vector<double> dA;
    double Lambda = 0.0;
    double Lambda_pairs = 0.0;
    double tilt_I = 1.0;
    double tilt_Lbar = 1.0;
    double tilt_L = 1.0;
};

inline double tilt_factor(double x) { return x == 0.0 ? 1.0 : std::expm1(x) / x; }

inline DfsAnnotation dfs_annotate(const OrderedTree& t, const std::vector<double>& p, double a,
                                  bool keep_pairs = true) {
    DfsAnnotation ann;
    ann.dA.assign(t.m, 0.0);
    std::vector<Vertex> stack{t.root};
    double on_stack = p[t.root];
    double sum_pv_dA = 0.0, pair_sum = 0.0;
    while (!stack.empty()) {
        Vertex v = stack.back();
        stack.pop_back();
        on_stack -= p[v];
        ann.order.push_back(v);
        double d = 0.0;
        for (Vertex u : stack) {
            d += p[u];
            if (keep_pairs) {
                ann.permitted.emplace_back(v, u);
                pair_sum += p[v] * p[u];
            }
        }
        ann.dA[v] = d;
        sum_pv_dA += p[v] * d;
        const auto& ch = t.children[v];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
            stack.push_back(*it);
            on_stack += p[*it];
        }
        ann.active_weight.push_back(on_stack);
    }
    ann.Lambda = a * sum_pv_dA;
    ann.Lambda_pairs = keep_pairs ? a * pair_sum : ann.Lambda;
    if (keep_pairs && std::abs(ann.Lambda - ann.Lambda_pairs) > 1e-10 * std::max(1.0, ann.Lambda))
        throw std::logic_error("Lambda identity violated");
    for (auto [u, v] : t.edges()) ann.tilt_I *= tilt_factor(a * p[u] * p[v]);
    ann.tilt_Lbar = std::exp(ann.Lambda);
    ann.tilt_L = ann.tilt_I * ann.tilt_Lbar;
    return ann;
}

// Vertices strictly to the right of the root-to-v path: the younger siblings
// of v and of each of its ancestors. These are the stack contents when v is
// explored.
inline std::vector<Vertex> right_of_path(const OrderedTree& t, Vertex v) {
    std::vector<Vertex> out;
    Vertex cur = v;
    while (t.parent[cur] != kNoVertex) {
        const auto& sib = t.children[t.parent[cur]];
        auto it = std::find(sib.begin(), sib.end(), cur);
        out.insert(out.end(), it + 1, sib.end());
        cur = t.parent[cur];
    }
    return out;
}

// ---- enumeration oracle for small m ----

inline std::vector<OrderedTree> enumerate_rooted_trees(std::size_t m) {
    std::vector<OrderedTree> out;
    std::vector<Vertex> par(m, 0);
    std::size_t total = 1;
    for (std::size_t i = 0; i < m; ++i) total *= (m + 1);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code, roots = 0;
        Vertex root = 0;
        for (std::size_t v = 0; v < m; ++v) {
            std::size_t d = c % (m + 1);
            c /= (m + 1);
            if (d == m) {
                par[v] = kNoVertex;
                ++roots;
                root = static_cast<Vertex>(v);
            } else {
                par[v] = static_cast<Vertex>(d);
            }
        }
        if (roots != 1) continue;
        bool ok = true;
        for (std::size_t v = 0; v < m && ok; ++v) {
            Vertex cur = static_cast<Vertex>(v);
            for (std::size_t s = 0; s <= m && cur != kNoVertex; ++s) cur = par[cur];
            ok = cur == kNoVertex;
        }
        if (!ok) continue;
        OrderedTree t = OrderedTree::single(m, root);
        for (Vertex v = 0; v < m; ++v)
            if (par[v] != kNoVertex) t.attach(v, par[v]);
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<OrderedTree> enumerate_ordered_trees(std::size_t m) {
    std::vector<OrderedTree> out;
    for (auto& base : enumerate_rooted_trees(m)) {
        std::vector<OrderedTree> acc{base};
        for (Vertex v = 0; v < m; ++v) {
            std::vector<OrderedTree> next;
            for (auto& t : acc) {
                auto ch = t.children[v];
                std::sort(ch.begin(), ch.end());
                do {
                    OrderedTree s = t;
                    s.children[v] = ch;
                    next.push_back(std::move(s));
                } while (std::next_permutation(ch.begin(), ch.end()));
            }
            acc = std::move(next);
        }
        for (auto& t : acc) out.push_back(std::move(t));
    }
    return out;
}

inline double ordered_ptree_weight(const OrderedTree& t, const std::vector<double>& p) {
    double w = 1.0;
    for (Vertex v = 0; v < t.m; ++v) {
        auto d = t.children[v].size();
        w *= std::pow(p[v], static_cast<double>(d)) / std::tgamma(static_cast<double>(d) + 1.0);
    }
    return w;
}

inline double ptree_weight(const OrderedTree& t, const std::vector<double>& p) {
    double w = 1.0;
    for (Vertex v = 0; v < t.m; ++v) w *= std::pow(p[v], static_cast<double>(t.children[v].size()));
    return w;
}

struct TreeTable {
    std::vector<OrderedTree> trees;
    std::vector<double> prob;
};

inline TreeTable tilted_table(const std::vector<double>& p, double a) {
    if (p.size() > 5) throw ParameterError("exact enumeration is limited to m <= 5");
    TreeTable tab;
    tab.trees = enumerate_ordered_trees(p.size());
    double z = 0.0;
    for (auto& t : tab.trees) {
        double w = ordered_ptree_weight(t, p) * dfs_annotate(t, p, a, false).tilt_L;
        tab.prob.push_back(w);
        z += w;
    }
    for (auto& w : tab.prob) w /= z;
    return tab;
}

enum class TiltMode { exact_enum, rejection };

class TiltedSampler {
public:
    TiltedSampler(std::vector<double> p, double a, TiltMode mode, Rng& rng, std::size_t pilot = 10000)
        : p_(std::move(p)), a_(a), mode_(mode) {
        check_pmf(p_);
        if (mode_ == TiltMode::exact_enum) {
            table_ = tilted_table(p_, a_);
            cdf_ = mass_cdf(table_.prob);
        } else {
            double mx = 0.0;
            for (std::size_t i = 0; i < pilot; ++i)
                mx = std::max(mx, dfs_annotate(sample_ordered_ptree(p_, rng), p_, a_, false).tilt_L);
            envelope_ = 10.0 * mx;
        }
    }

    OrderedTree sample(Rng& rng) {
        if (mode_ == TiltMode::exact_enum) return table_.trees[sample_point(cdf_, rng)];
        for (;;) {
            OrderedTree t = sample_ordered_ptree(p_, rng);
            double L = dfs_annotate(t, p_, a_, false).tilt_L;
            ++proposals_;
            if (L > envelope_) {
                ++overflows_;
                std::clog << "tilted sampler: L=" << L << " above envelope " << envelope_ << ", enlarging\n";
                envelope_ = 10.0 * L;
                continue;
            }
            if (uniform01(rng) * envelope_ < L) return t;
        }
    }

    double envelope() const { return envelope_; }
    std::size_t overflows() const { return overflows_; }
    std::size_t proposals() const { return proposals_; }

private:
    std::vector<double> p_;
    double a_;
    TiltMode mode_;
    TreeTable table_;
    std::vector<double> cdf_;
    double envelope_ = 0.0;
    std::size_t overflows_ = 0, proposals_ = 0;
};

inline OrderedTree sample_tilted_ptree(const std::vector<double>& p, double a, Rng& rng, TiltMode mode) {
    if (p.size() == 1) return OrderedTree::single(1, 0);
    TiltedSampler s(p, a, mode, rng);
    return s.sample(rng);
}

struct SurplusDraw {
    Vertex first;   // endpoint chosen with weight p_v dA(v)
    Vertex second;  // right-of-path vertex chosen with weight p_u
};

// Poisson(Lambda) surplus draws. The second endpoint uses the stack contents
// at the first endpoint, laid out in ascending id order over [0, dA(v)).
inline std::vector<SurplusDraw> draw_surplus(const OrderedTree& t, const std::vector<double>& p,
                                             const DfsAnnotation& ann, Rng& rng) {
    std::vector<SurplusDraw> out;
    if (ann.Lambda <= 0.0) return out;
    std::poisson_distribution<long> pois(ann.Lambda);
    long n = pois(rng);
    if (n == 0) return out;
    std::vector<double> w(t.m);
    for (Vertex v = 0; v < t.m; ++v) w[v] = p[v] * ann.dA[v];
    auto cdf = mass_cdf(w);
    for (long k = 0; k < n; ++k) {
        Vertex v = static_cast<Vertex>(sample_point(cdf, rng));
        auto right = right_of_path(t, v);
        std::sort(right.begin(), right.end());
        double r = uniform01(rng) * ann.dA[v], acc = 0.0;
        Vertex u = right.back();
        for (Vertex c : right) {
            acc += p[c];
            if (r < acc) {
                u = c;
                break;
            }
        }
        out.push_back({v, u});
    }
    return out;
}

struct SurplusResult {
    SimpleGraph graph;
    std::size_t n_star = 0;
    double Lambda = 0.0;
};

inline SurplusResult add_surplus_edges(const OrderedTree& t, const std::vector<double>& p, double a, Rng& rng) {
    auto ann = dfs_annotate(t, p, a, false);
    auto draws = draw_surplus(t, p, ann, rng);
    SurplusResult out;
    out.Lambda = ann.Lambda;
    out.n_star = draws.size();
    out.graph = t.as_graph(p);
    for (auto d : draws) out.graph.add_edge(d.first, d.second);
    out.graph.normalize();
    return out;
}

struct ModifiedSpace {
    MeasuredMetricSpace space;
    std::vector<std::size_t> class_of;  // vertex -> point index
    std::vector<std::pair<Vertex, Vertex>> identifications;
};

// 0-1 BFS distances in the tree where each identified pair is joined by an
// edge of length zero.
inline void zero_one_bfs(const std::vector<std::vector<std::pair<Vertex, int>>>& adj, Vertex src,
                         std::vector<int>& dist) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<int>::max());
    std::deque<Vertex> dq{src};
    dist[src] = 0;
    while (!dq.empty()) {
        Vertex v = dq.front();
        dq.pop_front();
        for (auto [w, len] : adj[v]) {
            if (dist[v] + len < dist[w]) {
                dist[w] = dist[v] + len;
                if (len == 0)
                    dq.push_front(w);
                else
                    dq.push_back(w);
            }
        }
    }
}

// Each surplus draw (v, u) identifies v with y = parent(u), the path vertex
// carrying the chosen right child. All identifications are kept. Points of the
// returned space are identification classes carrying the summed masses.
inline ModifiedSpace build_modified_space(const OrderedTree& t, const std::vector<double>& p, double a, Rng& rng,
                                          LandmarkMode mode = {}) {
    auto ann = dfs_annotate(t, p, a, false);
    auto draws = draw_surplus(t, p, ann, rng);
    ModifiedSpace out;
    std::vector<std::vector<std::pair<Vertex, int>>> adj(t.m);
    for (auto [u, v] : t.edges()) {
        adj[u].emplace_back(v, 1);
        adj[v].emplace_back(u, 1);
    }
    UnionFind uf(t.m);
    for (auto d : draws) {
        Vertex y = t.parent[d.second];
        out.identifications.emplace_back(d.first, y);
        adj[d.first].emplace_back(y, 0);
        adj[y].emplace_back(d.first, 0);
        uf.unite(d.first, y);
    }
    std::vector<std::int64_t> slot(t.m, -1);
    std::vector<Vertex> rep;
    std::vector<double> mass;
    out.class_of.resize(t.m);
    for (Vertex v = 0; v < t.m; ++v) {
        Vertex r = uf.find(v);
        if (slot[r] < 0) {
            slot[r] = static_cast<std::int64_t>(rep.size());
            rep.push_back(v);
            mass.push_back(0.0);
        }
        out.class_of[v] = static_cast<std::size_t>(slot[r]);
        mass[out.class_of[v]] += p[v];
    }
    std::vector<std::size_t> pick;
    if (mode.count == 0 || mode.count >= rep.size()) {
        pick.resize(rep.size());
        std::iota(pick.begin(), pick.end(), std::size_t{0});
    } else {
        pick = weighted_sample_without_replacement(mass, mode.count, rng);
    }
    auto& s = out.space;
    s = MeasuredMetricSpace(pick.size());
    double total = 0.0;
    for (auto i : pick) total += mass[i];
    for (std::size_t i = 0; i < pick.size(); ++i) s.mu[i] = mass[pick[i]] / total;
    std::vector<int> dist(t.m);
    for (std::size_t i = 0; i < pick.size(); ++i) {
        zero_one_bfs(adj, rep[pick[i]], dist);
        for (std::size_t j = 0; j < pick.size(); ++j) s.d(i, j) = dist[rep[pick[j]]];
    }
    return out;
}

inline void write_tree(std::ostream& os, const OrderedTree& t) {
    os << "t " << t.root;
    for (Vertex v = 0; v < t.m; ++v) os << ' ' << (t.parent[v] == kNoVertex ? -1 : static_cast<long>(t.parent[v]));
    os << '\n';
    for (Vertex v = 0; v < t.m; ++v) {
        if (t.children[v].empty()) continue;
        os << "c " << v;
        for (Vertex c : t.children[v]) os << ' ' << c;
        os << '\n';
    }
}

}  // namespace crg

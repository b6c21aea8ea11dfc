#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"

namespace crg {

struct MeasuredMetricSpace {
    std::size_t k = 0;
    std::vector<double> dist;  // row-major k x k
    std::vector<double> mu;

    MeasuredMetricSpace() = default;
    explicit MeasuredMetricSpace(std::size_t k_) : k(k_), dist(k_ * k_, 0.0), mu(k_, k_ ? 1.0 / k_ : 0.0) {}

    double d(std::size_t i, std::size_t j) const { return dist[i * k + j]; }
    double& d(std::size_t i, std::size_t j) { return dist[i * k + j]; }

    double diameter() const {
        double m = 0.0;
        for (double v : dist) m = std::max(m, v);
        return m;
    }
};

inline bool check_space(const MeasuredMetricSpace& s, Rng* rng = nullptr, double tol = 1e-9) {
    if (s.dist.size() != s.k * s.k || s.mu.size() != s.k) return false;
    double total = 0.0;
    for (double m : s.mu) {
        if (m < 0.0) return false;
        total += m;
    }
    if (s.k > 0 && std::abs(total - 1.0) > 1e-9) return false;
    for (std::size_t i = 0; i < s.k; ++i) {
        if (s.d(i, i) != 0.0) return false;
        for (std::size_t j = 0; j < s.k; ++j)
            if (s.d(i, j) < 0.0 || s.d(i, j) != s.d(j, i)) return false;
    }
    auto triangle = [&](std::size_t a, std::size_t b, std::size_t c) {
        return s.d(a, c) <= s.d(a, b) + s.d(b, c) + tol;
    };
    if (s.k <= 200) {
        for (std::size_t a = 0; a < s.k; ++a)
            for (std::size_t b = 0; b < s.k; ++b)
                for (std::size_t c = 0; c < s.k; ++c)
                    if (!triangle(a, b, c)) return false;
        return true;
    }
    Rng local(12345);
    Rng& r = rng ? *rng : local;
    std::uniform_int_distribution<std::size_t> pick(0, s.k - 1);
    for (int t = 0; t < 10000; ++t)
        if (!triangle(pick(r), pick(r), pick(r))) return false;
    return true;
}

// BFS distances from src, written into out for the vertices listed in index
// (index[v] = position of v in the space, or -1 when v is not represented).
inline void bfs_distances(const Adjacency& adj, Vertex src, std::vector<std::int32_t>& level,
                          std::vector<Vertex>& queue) {
    std::size_t n = adj.offset.size() - 1;
    if (level.size() != n) {
        level.assign(n, -1);
    } else {
        for (Vertex v : queue) level[v] = -1;  // only the previous search touched these
    }
    queue.clear();
    queue.push_back(src);
    level[src] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
        Vertex v = queue[h];
        for (const Vertex* it = adj.begin(v); it != adj.end(v); ++it)
            if (level[*it] < 0) {
                level[*it] = level[v] + 1;
                queue.push_back(*it);
            }
    }
}

struct LandmarkMode {
    std::size_t count = 0;  // 0 selects exact mode
};

// Successive sampling without replacement, proportional to weight.
inline std::vector<std::size_t> weighted_sample_without_replacement(const std::vector<double>& w, std::size_t k,
                                                                    Rng& rng) {
    // Efraimidis-Spirakis keys u^(1/w); largest k keys win.
    std::vector<std::pair<double, std::size_t>> keys(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) keys[i] = {std::log(uniform_open(rng)) / w[i], i};
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                      [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = keys[i].second;
    std::sort(out.begin(), out.end());
    return out;
}

inline MeasuredMetricSpace graph_metric_space(const SimpleGraph& g, const Adjacency& adj, const Component& comp,
                                              LandmarkMode mode, Rng& rng) {
    std::vector<double> w;
    for (Vertex v : comp.vertices) w.push_back(g.vertex_weights[v]);
    std::vector<std::size_t> pick;
    if (mode.count == 0 || mode.count >= comp.vertices.size()) {
        pick.resize(comp.vertices.size());
        std::iota(pick.begin(), pick.end(), std::size_t{0});
    } else {
        pick = weighted_sample_without_replacement(w, mode.count, rng);
    }
    MeasuredMetricSpace s(pick.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pick.size(); ++i) total += w[pick[i]];
    for (std::size_t i = 0; i < pick.size(); ++i) s.mu[i] = w[pick[i]] / total;
    std::vector<std::int32_t> level;
    std::vector<Vertex> queue;
    for (std::size_t i = 0; i < pick.size(); ++i) {
        bfs_distances(adj, comp.vertices[pick[i]], level, queue);
        for (std::size_t j = 0; j < pick.size(); ++j) {
            auto l = level[comp.vertices[pick[j]]];
            if (l < 0) throw ParameterError("component is not connected in the graph");
            s.d(i, j) = l;
        }
    }
    return s;
}

inline MeasuredMetricSpace graph_metric_space(const SimpleGraph& g, const Component& comp,
                                              LandmarkMode mode, Rng& rng) {
    return graph_metric_space(g, adjacency(g), comp, mode, rng);
}

inline MeasuredMetricSpace scale(MeasuredMetricSpace s, double factor) {
    if (!(factor > 0.0)) throw ParameterError("scale factor must be positive");
    for (double& v : s.dist) v *= factor;
    return s;
}

// Exact Gromov-Hausdorff distance for spaces of at most five points.
// Distortion only grows when pairs are added, so the optimum is attained by a
// minimal correspondence, and every minimal correspondence consists of a map
// f: X -> Y together with one partner in X for each y missed by f. The search
// assigns f point by point, then the partners, keeping the running distortion
// and cutting any branch that already reaches the best value found.
class GhSolver {
public:
    GhSolver(const MeasuredMetricSpace& X, const MeasuredMetricSpace& Y, bool rooted)
        : X_(X), Y_(Y), rooted_(rooted) {}

    double solve() {
        best_ = std::numeric_limits<double>::infinity();
        if (X_.k == 0 || Y_.k == 0) return X_.k == Y_.k ? 0.0 : best_;
        pairs_.clear();
        assign_x(0, 0.0);
        return best_ / 2.0;
    }

private:
    double added_distortion(std::size_t x, std::size_t y) const {
        double d = 0.0;
        for (auto [a, b] : pairs_) d = std::max(d, std::abs(X_.d(x, a) - Y_.d(y, b)));
        return d;
    }

    void assign_x(std::size_t x, double dis) {
        if (dis >= best_) return;
        if (x == X_.k) {
            std::vector<std::size_t> missing;
            std::vector<bool> hit(Y_.k, false);
            for (auto [a, b] : pairs_) hit[b] = true;
            for (std::size_t y = 0; y < Y_.k; ++y)
                if (!hit[y]) missing.push_back(y);
            assign_y(missing, 0, dis);
            return;
        }
        for (std::size_t y = 0; y < Y_.k; ++y) {
            if (rooted_ && x == 0 && y != 0) continue;
            double nd = std::max(dis, added_distortion(x, y));
            if (nd >= best_) continue;
            pairs_.emplace_back(x, y);
            assign_x(x + 1, nd);
            pairs_.pop_back();
        }
    }

    void assign_y(const std::vector<std::size_t>& missing, std::size_t i, double dis) {
        if (dis >= best_) return;
        if (i == missing.size()) {
            best_ = dis;
            return;
        }
        std::size_t y = missing[i];
        for (std::size_t x = 0; x < X_.k; ++x) {
            double nd = std::max(dis, added_distortion(x, y));
            if (nd >= best_) continue;
            pairs_.emplace_back(x, y);
            assign_y(missing, i + 1, nd);
            pairs_.pop_back();
        }
    }

    const MeasuredMetricSpace& X_;
    const MeasuredMetricSpace& Y_;
    bool rooted_;
    double best_ = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

// rooted = true forces the pair (point 0 of X, point 0 of Y) into the correspondence.
inline double gh_exact(const MeasuredMetricSpace& X, const MeasuredMetricSpace& Y, bool rooted = false) {
    if (X.k > 5 || Y.k > 5) throw ParameterError("gh_exact handles at most 5 points; use ghp_upper");
    return GhSolver(X, Y, rooted).solve();
}

inline double tv_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double pos = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        (d > 0 ? pos : neg) += std::abs(d);
    }
    return std::max(pos, neg);
}

// Upper bound on the GHP distance. Each trial builds a correspondence greedily
// (points taken in random order, each matched to the partner adding the least
// distortion) and scores it with two couplings: a greedy transport supported
// on C, and the product coupling. The best score over all trials is returned.
inline double ghp_upper(const MeasuredMetricSpace& X, const MeasuredMetricSpace& Y, std::size_t trials, Rng& rng) {
    using Pair = std::pair<std::size_t, std::size_t>;
    auto distortion = [&](const std::vector<Pair>& C) {
        double d = 0.0;
        for (auto [a, b] : C)
            for (auto [c, e] : C) d = std::max(d, std::abs(X.d(a, c) - Y.d(b, e)));
        return d;
    };
    auto score = [&](const std::vector<Pair>& C) {
        double half_dis = distortion(C) / 2.0;
        std::vector<double> r1 = X.mu, r2 = Y.mu, m1(X.k, 0.0), m2(Y.k, 0.0);
        for (auto [a, b] : C) {
            double f = std::min(r1[a], r2[b]);
            r1[a] -= f;
            r2[b] -= f;
            m1[a] += f;
            m2[b] += f;
        }
        double on_c = std::max(half_dis, tv_norm(m1, X.mu) + tv_norm(m2, Y.mu));
        double outside = 1.0;
        for (auto [a, b] : C) outside -= X.mu[a] * Y.mu[b];
        double product = std::max(half_dis, std::max(0.0, outside));
        return std::min(on_c, product);
    };
    double best = std::numeric_limits<double>::infinity();
    if (X.k == Y.k) {
        std::vector<Pair> C;
        for (std::size_t i = 0; i < X.k; ++i) C.emplace_back(i, i);
        best = score(C);
    }
    std::vector<std::size_t> ox(X.k), oy(Y.k);
    std::iota(ox.begin(), ox.end(), std::size_t{0});
    std::iota(oy.begin(), oy.end(), std::size_t{0});
    for (std::size_t t = 0; t < trials; ++t) {
        std::shuffle(ox.begin(), ox.end(), rng);
        std::shuffle(oy.begin(), oy.end(), rng);
        std::vector<Pair> C;
        std::vector<bool> hit(Y.k, false);
        auto extra = [&](std::size_t a, std::size_t b) {
            double d = 0.0;
            for (auto [c, e] : C) d = std::max(d, std::abs(X.d(a, c) - Y.d(b, e)));
            return d;
        };
        for (std::size_t a : ox) {
            std::size_t bb = oy[0];
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t b : oy) {
                double d = extra(a, b);
                if (d < bd) bd = d, bb = b;
            }
            C.emplace_back(a, bb);
            hit[bb] = true;
        }
        for (std::size_t b : oy) {
            if (hit[b]) continue;
            std::size_t ba = ox[0];
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t a : ox) {
                double d = extra(a, b);
                if (d < bd) bd = d, ba = a;
            }
            C.emplace_back(ba, b);
        }
        best = std::min(best, score(C));
    }
    return best;
}

inline std::size_t sample_point(const std::vector<double>& cdf, Rng& rng) {
    double u = uniform01(rng) * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

inline std::vector<double> mass_cdf(const std::vector<double>& mu) {
    std::vector<double> cdf(mu.size());
    std::partial_sum(mu.begin(), mu.end(), cdf.begin());
    return cdf;
}

struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// phi receives the ell x ell distance matrix (row-major) of ell points drawn i.i.d. from mu.
inline Estimate polynomial_functional(const MeasuredMetricSpace& s, std::size_t ell,
                                      const std::function<double(const std::vector<double>&, std::size_t)>& phi,
                                      std::size_t samples, Rng& rng) {
    if (ell < 2) throw ParameterError("polynomial degree must be at least 2");
    auto cdf = mass_cdf(s.mu);
    std::vector<std::size_t> pts(ell);
    std::vector<double> D(ell * ell);
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < samples; ++r) {
        for (auto& p : pts) p = sample_point(cdf, rng);
        for (std::size_t i = 0; i < ell; ++i)
            for (std::size_t j = 0; j < ell; ++j) D[i * ell + j] = s.d(pts[i], pts[j]);
        double v = phi(D, ell);
        sum += v;
        sq += v * v;
    }
    Estimate e;
    double n = static_cast<double>(samples);
    e.mean = sum / n;
    e.stderr_ = samples > 1 ? std::sqrt(std::max(0.0, sq / n - e.mean * e.mean) / (n - 1.0)) : 0.0;
    return e;
}

inline std::vector<double> typical_distance_sample(const MeasuredMetricSpace& s, std::size_t pairs, Rng& rng) {
    if (pairs < 1) throw ParameterError("pairs must be at least 1");
    auto cdf = mass_cdf(s.mu);
    std::vector<double> out(pairs);
    for (auto& v : out) {
        std::size_t a = sample_point(cdf, rng);
        std::size_t b = sample_point(cdf, rng);
        v = s.d(a, b);
    }
    return out;
}

// Greedy cover by open balls: repeatedly take the uncovered point whose ball
// contains the most uncovered points (lowest index on ties).
inline std::size_t ball_cover_count(const MeasuredMetricSpace& s, double delta) {
    if (!(delta > 0.0)) throw ParameterError("delta must be positive");
    std::size_t k = s.k;
    std::vector<std::size_t> gain(k, 0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) gain[i] += s.d(i, j) < delta;
    std::vector<bool> covered(k, false);
    std::size_t left = k, balls = 0;
    while (left > 0) {
        std::size_t best = k;
        for (std::size_t i = 0; i < k; ++i)
            if (!covered[i] && (best == k || gain[i] > gain[best])) best = i;
        ++balls;
        for (std::size_t j = 0; j < k; ++j) {
            if (covered[j] || s.d(best, j) >= delta) continue;
            covered[j] = true;
            --left;
            for (std::size_t i = 0; i < k; ++i)
                if (s.d(i, j) < delta) --gain[i];
        }
    }
    return balls;
}

// Minimal open-ball cover by exhaustive search, for at most 20 points. Any
// cover must contain a ball holding the lowest uncovered point, so the search
// branches only over those balls, with iterative deepening on the cover size.
inline std::size_t ball_cover_exact(const MeasuredMetricSpace& s, double delta) {
    if (s.k > 20) throw ParameterError("exact cover is limited to 20 points");
    if (s.k == 0) return 0;
    std::vector<std::uint32_t> ball(s.k, 0);
    for (std::size_t i = 0; i < s.k; ++i)
        for (std::size_t j = 0; j < s.k; ++j)
            if (s.d(i, j) < delta) ball[i] |= 1u << j;
    std::uint32_t full = s.k == 32 ? ~0u : ((1u << s.k) - 1u);
    std::function<bool(std::uint32_t, std::size_t)> search = [&](std::uint32_t cov, std::size_t budget) {
        if (cov == full) return true;
        if (budget == 0) return false;
        std::size_t low = static_cast<std::size_t>(__builtin_ctz(~cov & full));
        for (std::size_t i = 0; i < s.k; ++i)
            if ((ball[i] >> low) & 1u)
                if (search(cov | ball[i], budget - 1)) return true;
        return false;
    };
    for (std::size_t b = 1; b <= s.k; ++b)
        if (search(0u, b)) return b;
    return s.k;
}

struct DimEstimate {
    double slope = 0.0;
    std::vector<std::size_t> counts;
};

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline DimEstimate dim_estimate(const MeasuredMetricSpace& s, const std::vector<double>& delta_grid) {
    if (delta_grid.size() < 3) throw ParameterError("dimension estimate needs at least 3 grid points");
    std::vector<double> x, y;
    DimEstimate out;
    for (double d : delta_grid) {
        auto n = ball_cover_count(s, d);
        out.counts.push_back(n);
        x.push_back(std::log(1.0 / d));
        y.push_back(std::log(static_cast<double>(n)));
    }
    double mn = *std::min_element(x.begin(), x.end()), mxv = *std::max_element(x.begin(), x.end());
    if (mxv - mn <= 0.0) throw ParameterError("degenerate delta grid");
    out.slope = ls_slope(x, y);
    return out;
}

inline MeasuredMetricSpace path_space(std::size_t n) {
    MeasuredMetricSpace s(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s.d(i, j) = std::abs(static_cast<double>(i) - static_cast<double>(j));
    return s;
}

inline void write_space(std::ostream& os, const MeasuredMetricSpace& s) {
    os << "# k=" << s.k << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < s.k; ++i) {
        for (std::size_t j = 0; j < s.k; ++j) os << s.d(i, j) << ',';
        os << s.mu[i] << '\n';
    }
}

}  // namespace crg

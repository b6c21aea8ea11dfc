#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "weights.hpp"

namespace crg {

class Fenwick {
public:
    explicit Fenwick(const std::vector<double>& w) : tree_(w.size() + 1, 0.0), w_(w) {
        for (std::size_t i = 0; i < w.size(); ++i) add_raw(i, w[i]);
        total_ = 0.0;
        for (double v : w) total_ += v;
    }
    void remove(std::size_t i) {
        add_raw(i, -w_[i]);
        total_ -= w_[i];
        w_[i] = 0.0;
    }
    double total() const { return total_; }
    // smallest index with prefix sum > target
    std::size_t find(double target) const {
        std::size_t pos = 0, step = 1;
        while (step * 2 < tree_.size()) step *= 2;
        for (; step > 0; step /= 2) {
            if (pos + step < tree_.size() && tree_[pos + step] <= target) {
                pos += step;
                target -= tree_[pos];
            }
        }
        return std::min(pos, w_.size() - 1);
    }
    double weight(std::size_t i) const { return w_[i]; }

private:
    void add_raw(std::size_t i, double d) {
        for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += d;
    }
    std::vector<double> tree_;
    std::vector<double> w_;
    double total_ = 0.0;
};

struct WalkEvent {
    double time;   // explored weight
    double value;  // walk value right after the event
    std::size_t component;
};

struct WalkTrace {
    std::vector<Vertex> order;       // v(1), v(2), ...
    std::vector<double> step_times;  // T_i
    std::vector<WalkEvent> events;
    std::vector<std::pair<double, double>> component_bounds;  // [start, end) per discovery index
};

struct ExploreResult {
    WalkTrace trace;
    std::vector<Component> components;  // by mass, ties by smallest id
};

// Breadth-first exploration of G_n(x, t). For the vertex u being explored,
// the candidates v with eta_{u,v} <= x_u are found with the same geometric
// skipping as the graph sampler, over the whole weight-sorted order;
// candidates already reached are discarded, which leaves exactly the
// undiscovered neighbours. A kept candidate gets its birth time from the
// exponential law conditioned on eta <= x_u.
inline ExploreResult explore(const WeightSequence& x, double t, Rng& rng) {
    if (!(t > 0.0)) throw ParameterError("t must be positive");
    const auto& w = x.values();
    std::size_t n = w.size();
    ExploreResult res;
    auto& tr = res.trace;
    Fenwick unseen(w);
    std::vector<char> reached(n, 0);
    std::vector<Vertex> queue;
    queue.reserve(n);
    std::vector<std::pair<double, Vertex>> kids;
    double T = 0.0, Z = 0.0;
    std::size_t head = 0;
    while (tr.order.size() < n) {
        if (head == queue.size()) {
            double target = uniform01(rng) * unseen.total();
            std::size_t r = unseen.find(target);
            while (reached[r]) r = (r + 1) % n;  // rounding guard at the very end of the prefix sums
            reached[r] = 1;
            unseen.remove(r);
            queue.push_back(static_cast<Vertex>(r));
            res.components.emplace_back();
            tr.component_bounds.emplace_back(T, T);
            tr.events.push_back({T, Z, res.components.size() - 1});
        }
        Vertex u = queue[head++];
        std::size_t comp = res.components.size() - 1;
        res.components.back().vertices.push_back(u);
        res.components.back().mass += w[u];
        tr.order.push_back(u);

        kids.clear();
        double xu = w[u];
        std::size_t j = 0;
        double rate = t * xu * w[0];
        double q = -std::expm1(-rate);
        while (j < n) {
            double skip = std::floor(std::log(uniform_open(rng)) / -rate);
            if (skip >= static_cast<double>(n - j)) break;
            j += static_cast<std::size_t>(skip);
            double rj = t * xu * w[j];
            double qj = -std::expm1(-rj);
            if (uniform01(rng) * q < qj && !reached[j]) {
                double eta = -std::log1p(-uniform01(rng) * qj) / (t * w[j]);
                kids.emplace_back(eta, static_cast<Vertex>(j));
            }
            rate = rj;
            q = qj;
            ++j;
        }
        std::sort(kids.begin(), kids.end());
        double since = 0.0;
        for (auto [eta, v] : kids) {
            reached[v] = 1;
            unseen.remove(v);
            queue.push_back(v);
            Z += -(eta - since) + w[v];
            since = eta;
            tr.events.push_back({T + eta, Z, comp});
        }
        Z -= xu - since;
        T += xu;
        tr.step_times.push_back(T);
        tr.events.push_back({T, Z, comp});
        tr.component_bounds.back().second = T;
    }
    for (auto& c : res.components) std::sort(c.vertices.begin(), c.vertices.end());
    sort_components(res.components);
    return res;
}

struct SumSquares {
    std::vector<double> times;  // T_i
    std::vector<double> S;      // S_{n,2}(T_i)
    std::vector<double> R;      // R^eps_n(T_i)
};

inline SumSquares sum_squares_process(const WalkTrace& tr, const WeightSequence& x, double sigma2, double epsilon) {
    SumSquares out;
    double s = 0.0, r = 0.0;
    for (std::size_t i = 0; i < tr.order.size(); ++i) {
        double v = x[tr.order[i]] / sigma2;
        s += v * v;
        if (x[tr.order[i]] < epsilon * sigma2) r += v * v;
        out.times.push_back(tr.step_times[i]);
        out.S.push_back(s);
        out.R.push_back(r);
    }
    return out;
}

inline std::vector<std::pair<double, double>> rescaled_walk(const WalkTrace& tr, double sigma2) {
    if (!(sigma2 > 0.0)) throw ParameterError("sigma2 must be positive");
    std::vector<std::pair<double, double>> out;
    out.reserve(tr.events.size());
    for (const auto& e : tr.events) out.emplace_back(e.time, e.value / sigma2);
    return out;
}

inline void write_walk_csv(std::ostream& os, const WalkTrace& tr) {
    os << "explored_weight,walk_value,component_id\n";
    os.precision(17);
    for (const auto& e : tr.events) os << e.time << ',' << e.value << ',' << e.component << '\n';
}

}  // namespace crg

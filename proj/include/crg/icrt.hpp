#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <vector>

#include "levy.hpp"
#include "metric.hpp"
#include "ptree.hpp"
#include "rng.hpp"

namespace crg {

struct ThetaSequence {
    std::vector<double> theta;
    bool normalized = false;
};

inline ThetaSequence normalize_theta(std::vector<double> th) {
    std::sort(th.begin(), th.end(), std::greater<>());
    double s = 0.0;
    for (double v : th) {
        if (!(v > 0.0)) throw ParameterError("theta entries must be positive");
        s += v * v;
    }
    s = std::sqrt(s);
    for (double& v : th) v /= s;
    return {std::move(th), true};
}

struct Segment {
    double start;           // position eta_k on the line
    double length;
    long attach_segment;    // -1 for the first segment
    double attach_offset;
    long hub;               // process whose joinpoint carries the attachment, -1 for the first segment
    bool clipped = false;   // cut short by the horizon
};

struct Hub {
    long label;             // process index, 0-based
    double position;        // first point of the process on the line
    std::size_t segment;
    double offset;
};

class StickBreakTree {
public:
    std::vector<Segment> segments;
    std::vector<Hub> hubs;
    std::vector<double> theta;
    std::uint64_t mark_seed = 0;
    double horizon = 0.0;

    // position eta_j of leaf j (1-based); leaf j closes segment j - 1
    std::size_t leaf_count() const {
        std::size_t c = 0;
        for (const auto& s : segments) c += !s.clipped;
        return c;
    }
    double leaf_position(std::size_t j) const { return segments[j - 1].start + segments[j - 1].length; }

    double total_length() const {
        double s = 0.0;
        for (const auto& seg : segments) s += seg.length;
        return s;
    }

    // uniform order mark of subtree `branch` above hub `label`; branch 0 is the
    // continuation of the segment through the hub, branch k >= 1 the segment
    // attached there. Drawn from the seed stream on demand.
    double mark(long label, std::size_t branch) const {
        Rng r(split_seed(split_seed(mark_seed, static_cast<std::uint64_t>(label)), branch));
        return uniform_open(r);
    }

    const Hub* hub_by_label(long label) const {
        for (const auto& h : hubs)
            if (h.label == label) return &h;
        return nullptr;
    }

    // Hubs met on the way from the root to (segment, offset), from the point
    // upwards, each with the subtree branch that contains the point.
    std::vector<std::pair<long, std::size_t>> hubs_on_path(std::size_t seg, double offset) const {
        std::vector<std::pair<long, std::size_t>> out;
        long s = static_cast<long>(seg);
        double off = offset;
        std::size_t via = 0;  // branch index when arriving through an attachment
        bool through_attachment = false;
        while (s >= 0) {
            for (const auto& h : hubs) {
                if (h.segment != static_cast<std::size_t>(s)) continue;
                if (through_attachment && h.offset == off) {
                    out.emplace_back(h.label, via);
                } else if (h.offset < off) {
                    out.emplace_back(h.label, 0);
                }
            }
            const auto& sg = segments[static_cast<std::size_t>(s)];
            if (sg.attach_segment < 0) break;
            via = static_cast<std::size_t>(s);
            through_attachment = true;
            off = sg.attach_offset;
            s = sg.attach_segment;
        }
        return out;
    }

    double dA(std::size_t seg, double offset) const {
        double v = 0.0;
        for (auto [label, branch] : hubs_on_path(seg, offset)) v += theta[static_cast<std::size_t>(label)] * mark(label, branch);
        return v;
    }
};

inline StickBreakTree sample_icrt(const ThetaSequence& th, double horizon, Rng& rng) {
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    StickBreakTree t;
    t.theta = th.theta;
    t.horizon = horizon;
    t.mark_seed = rng();
    struct Cut {
        double pos;
        long proc;
    };
    std::vector<Cut> cuts;
    std::vector<double> join(th.theta.size(), -1.0);
    for (std::size_t i = 0; i < th.theta.size(); ++i) {
        double pos = 0.0;
        bool first = true;
        for (;;) {
            pos += exponential(rng, th.theta[i]);
            if (pos > horizon) break;
            if (first) {
                join[i] = pos;
                first = false;
            } else {
                cuts.push_back({pos, static_cast<long>(i)});
            }
        }
    }
    std::sort(cuts.begin(), cuts.end(), [](const Cut& a, const Cut& b) { return a.pos < b.pos; });
    std::vector<double> starts{0.0};
    for (auto& c : cuts) starts.push_back(c.pos);
    auto locate = [&](double pos) {
        std::size_t k = static_cast<std::size_t>(std::lower_bound(starts.begin(), starts.end(), pos) - starts.begin());
        return k == 0 ? std::size_t{0} : k - 1;
    };
    for (std::size_t k = 0; k < starts.size(); ++k) {
        double end = k + 1 < starts.size() ? starts[k + 1] : horizon;
        Segment s{starts[k], end - starts[k], -1, 0.0, -1, k + 1 == starts.size()};
        if (k > 0) {
            long proc = cuts[k - 1].proc;
            double jp = join[static_cast<std::size_t>(proc)];
            std::size_t host = locate(jp);
            s.attach_segment = static_cast<long>(host);
            s.attach_offset = jp - starts[host];
            s.hub = proc;
        }
        t.segments.push_back(s);
    }
    for (std::size_t i = 0; i < join.size(); ++i) {
        if (join[i] < 0.0) continue;
        std::size_t host = locate(join[i]);
        t.hubs.push_back({static_cast<long>(i), join[i], host, join[i] - starts[host]});
    }
    return t;
}

struct ReducedNode {
    long parent = -1;
    double edge_length = 0.0;
    long hub = -1;         // hub label carried by the node, if retained
    std::size_t leaf = 0;  // 1..J for leaves
};

struct ReducedTree {
    std::vector<ReducedNode> nodes;  // node 0 is the root
    std::vector<double> leaf_values;                          // dA at leaves 1..J
    std::vector<std::vector<std::pair<long, double>>> measures;  // Q at leaves: (hub label, mass)

    std::size_t leaf_total() const {
        std::size_t c = 0;
        for (const auto& n : nodes) c += n.leaf > 0;
        return c;
    }
};

// Subtree spanned by the root and leaves 1..J, with hubs of label < I kept as
// marked nodes. Branch points are always joinpoints, so they are hubs too.
inline ReducedTree reduced_tree(const StickBreakTree& t, std::size_t I, std::size_t J) {
    if (J > t.leaf_count()) throw ParameterError("not enough leaves in the stick-breaking tree");
    // offsets of interest per segment
    std::map<std::size_t, std::map<double, std::pair<long, std::size_t>>> points;  // seg -> offset -> (hub, leaf)
    std::map<std::size_t, double> reach;
    for (std::size_t j = 1; j <= J; ++j) {
        std::size_t s = j - 1;
        double off = t.segments[s].length;
        points[s][off].second = j;
        for (;;) {
            reach[s] = std::max(reach[s], off);
            const auto& sg = t.segments[s];
            if (sg.attach_segment < 0) break;
            off = sg.attach_offset;
            s = static_cast<std::size_t>(sg.attach_segment);
            points[s][off];
        }
    }
    for (const auto& h : t.hubs) {
        auto it = reach.find(h.segment);
        if (it == reach.end() || h.offset > it->second) continue;
        bool branch = points[h.segment].count(h.offset) > 0;
        if (branch || static_cast<std::size_t>(h.label) < I) points[h.segment][h.offset].first = h.label + 1;
    }
    ReducedTree r;
    r.nodes.push_back({});
    std::map<std::pair<std::size_t, double>, std::size_t> node_of;
    // segments in index order: parents always precede children
    for (auto& [s, pts] : points) {
        const auto& sg = t.segments[s];
        std::size_t prev;
        if (sg.attach_segment < 0) {
            prev = 0;
        } else {
            prev = node_of.at({static_cast<std::size_t>(sg.attach_segment), sg.attach_offset});
        }
        double prev_off = 0.0;
        for (auto& [off, info] : pts) {
            ReducedNode n;
            n.parent = static_cast<long>(prev);
            n.edge_length = off - prev_off;
            n.hub = info.first - 1;
            n.leaf = info.second;
            if (n.edge_length <= 0.0) throw std::logic_error("nonpositive reduced edge");
            r.nodes.push_back(n);
            prev = r.nodes.size() - 1;
            prev_off = off;
            node_of[{s, off}] = prev;
        }
    }
    r.leaf_values.resize(J);
    r.measures.resize(J);
    for (std::size_t j = 1; j <= J; ++j) {
        auto path = t.hubs_on_path(j - 1, t.segments[j - 1].length);
        double total = 0.0;
        for (auto [label, branch] : path) total += t.theta[static_cast<std::size_t>(label)] * t.mark(label, branch);
        r.leaf_values[j - 1] = total;
        for (auto [label, branch] : path)
            r.measures[j - 1].emplace_back(label, t.theta[static_cast<std::size_t>(label)] * t.mark(label, branch) / total);
    }
    return r;
}

struct SurrogateWeights {
    std::vector<double> p;
    double sigma;
};

// p_i = theta_i * s for i <= K and the share `small_share` spread evenly over
// the remaining m - K vertices.
inline SurrogateWeights surrogate_weights(const ThetaSequence& th, std::size_t m, double small_share = 0.5,
                                          double tolerance = 0.05) {
    std::size_t K = th.theta.size();
    if (m <= K) throw ParameterError("m must exceed the number of hubs");
    SurrogateWeights out;
    out.p.assign(m, 0.0);
    if (K == 0) {
        std::fill(out.p.begin(), out.p.end(), 1.0 / static_cast<double>(m));
    } else {
        double S1 = 0.0;
        for (double v : th.theta) S1 += v;
        double s = (1.0 - small_share) / S1;
        for (std::size_t i = 0; i < K; ++i) out.p[i] = th.theta[i] * s;
        for (std::size_t i = K; i < m; ++i) out.p[i] = small_share / static_cast<double>(m - K);
    }
    double sq = 0.0;
    for (double v : out.p) sq += v * v;
    out.sigma = std::sqrt(sq);
    for (std::size_t i = 0; i < K; ++i)
        if (std::abs(out.p[i] / out.sigma - th.theta[i]) > tolerance)
            throw ParameterError("theta too concentrated for this m: surrogate weights miss theta");
    return out;
}

struct SurrogateTree {
    OrderedTree tree;
    SurrogateWeights weights;
};

inline SurrogateTree icrt_via_ptree(const ThetaSequence& th, std::size_t m, Rng& rng) {
    SurrogateTree s{{}, surrogate_weights(th, m)};
    s.tree = sample_ordered_ptree(s.weights.p, rng);
    return s;
}

struct LimitSpaceOptions {
    std::size_t pilot = 200;
    LandmarkMode landmarks{};
};

// Tilted p-tree surrogate with a = gamma / sigma(p), identifications from the
// modified construction, distances multiplied by sigma(p).
inline MeasuredMetricSpace build_limit_space(const ThetaSequence& th, double gamma, std::size_t m, Rng& rng,
                                             LimitSpaceOptions opt = {}) {
    if (gamma < 0.0) throw ParameterError("gamma must be nonnegative");
    auto sw = surrogate_weights(th, m);
    double a = gamma / sw.sigma;
    TiltedSampler sampler(sw.p, a, TiltMode::rejection, rng, opt.pilot);
    OrderedTree t = sampler.sample(rng);
    auto mod = build_modified_space(t, sw.p, a, rng, opt.landmarks);
    return scale(std::move(mod.space), sw.sigma);
}

struct LimitComponent {
    MeasuredMetricSpace space;
    LimitParams params;
};

inline LimitComponent limit_space_from_params(const LimitParams& lp, std::size_t m, Rng& rng,
                                              LimitSpaceOptions opt = {}) {
    auto th = normalize_theta(lp.theta);
    LimitComponent out{build_limit_space(th, lp.gamma_bar, m, rng, opt), lp};
    out.space = scale(std::move(out.space), lp.Gamma);
    return out;
}

// i is 1-based: the i-th longest complete excursion of the reflected process.
inline LimitComponent limit_component_space(const EntranceBoundary& c, double lambda, std::size_t i, std::size_t m,
                                            double horizon, Rng& rng, LimitSpaceOptions opt = {}) {
    auto path = build_levy_path(c, lambda, horizon, rng);
    auto ex = excursions(reflect(path));
    if (i < 1 || i > ex.complete.size()) throw ParameterError("requested excursion is not inside the horizon");
    return limit_space_from_params(component_limit_params(ex.complete[i - 1], c), m, rng, opt);
}

inline void write_stick_break_csv(std::ostream& os, const StickBreakTree& t) {
    os << "index,length,attach_segment,attach_offset,hub_label\n";
    os.precision(17);
    for (std::size_t k = 0; k < t.segments.size(); ++k) {
        const auto& s = t.segments[k];
        os << k << ',' << s.length << ',' << s.attach_segment << ',' << s.attach_offset << ',' << s.hub << '\n';
    }
}

}  // namespace crg

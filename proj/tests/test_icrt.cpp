#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "crg/icrt.hpp"

using namespace crg;

namespace {

ThetaSequence boundary_theta(std::size_t K) { return normalize_theta(entrance_boundary(1.0, 3.5, K).c); }

double mean_typical_distance(const MeasuredMetricSpace& s, Rng& rng) {
    auto v = typical_distance_sample(s, 2000, rng);
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(Theta, Normalization) {
    auto th = normalize_theta({1.0, 3.0, 2.0});
    EXPECT_TRUE(std::is_sorted(th.theta.rbegin(), th.theta.rend()));
    double s = 0.0;
    for (double v : th.theta) s += v * v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_THROW(normalize_theta({1.0, 0.0}), ParameterError);
}

TEST(StickBreak, SingleHubStar) {
    Rng rng = make_rng(1, 0);
    auto t = sample_icrt(normalize_theta({1.0}), 10.0, rng);
    ASSERT_EQ(t.hubs.size(), 1u);
    for (std::size_t k = 1; k < t.segments.size(); ++k) {
        EXPECT_EQ(t.segments[k].hub, 0);
        EXPECT_EQ(t.segments[k].attach_segment, static_cast<long>(t.hubs[0].segment));
        EXPECT_DOUBLE_EQ(t.segments[k].attach_offset, t.hubs[0].offset);
    }
}

TEST(StickBreak, CutpointExpectation) {
    // cutpoints are the points of a rate-1 Poisson process on [0,2] after the first:
    // E = 2 - (1 - e^{-2}) = 1 + e^{-2}
    std::size_t R = 40000;
    double total = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        Rng rng = make_rng(2, r);
        double c = static_cast<double>(sample_icrt(normalize_theta({1.0}), 2.0, rng).segments.size() - 1);
        total += c;
        sq += c * c;
    }
    double mean = total / static_cast<double>(R);
    double se = std::sqrt((sq / static_cast<double>(R) - mean * mean) / static_cast<double>(R));
    EXPECT_NEAR(mean, 1.0 + std::exp(-2.0), 3.0 * se);
}

TEST(StickBreak, ValidTreeAndDeterministic) {
    auto th = boundary_theta(100);
    for (std::uint64_t r = 0; r < 50; ++r) {
        Rng a = make_rng(3, r), b = make_rng(3, r);
        auto t = sample_icrt(th, 30.0, a);
        auto u = sample_icrt(th, 30.0, b);
        ASSERT_EQ(t.segments.size(), u.segments.size());
        double len = 0.0;
        for (std::size_t k = 0; k < t.segments.size(); ++k) {
            const auto& s = t.segments[k];
            EXPECT_EQ(s.length, u.segments[k].length);
            EXPECT_EQ(s.attach_offset, u.segments[k].attach_offset);
            ASSERT_GT(s.length, 0.0);
            len += s.length;
            if (k == 0) {
                EXPECT_EQ(s.attach_segment, -1);
            } else {
                ASSERT_GE(s.attach_segment, 0);
                ASSERT_LT(s.attach_segment, static_cast<long>(k));
                EXPECT_LE(s.attach_offset, t.segments[static_cast<std::size_t>(s.attach_segment)].length);
            }
        }
        EXPECT_NEAR(len, t.total_length(), 1e-9);
        EXPECT_NEAR(len, 30.0, 1e-9);
        EXPECT_EQ(t.mark(0, 1), u.mark(0, 1));
    }
    Rng rng = make_rng(4, 0);
    EXPECT_THROW(sample_icrt(th, 0.0, rng), ParameterError);
}

TEST(StickBreak, NoCutpointIsSingleSegment) {
    Rng rng = make_rng(5, 0);
    auto t = sample_icrt(normalize_theta({1.0}), 1e-9, rng);
    EXPECT_EQ(t.segments.size(), 1u);
    EXPECT_EQ(t.leaf_count(), 0u);
}

TEST(Reduced, SingleLeafSegment) {
    for (std::uint64_t r = 0; r < 20; ++r) {
        Rng rng = make_rng(6, r);
        auto t = sample_icrt(boundary_theta(50), 20.0, rng);
        if (t.leaf_count() < 1) continue;
        auto red = reduced_tree(t, 0, 1);
        ASSERT_EQ(red.nodes.size(), 2u);
        EXPECT_EQ(red.nodes[1].leaf, 1u);
        EXPECT_NEAR(red.nodes[1].edge_length, t.leaf_position(1), 1e-12);
    }
}

TEST(Reduced, LeavesEdgesAndMeasures) {
    for (std::uint64_t r = 0; r < 50; ++r) {
        Rng rng = make_rng(7, r);
        auto t = sample_icrt(boundary_theta(200), 40.0, rng);
        std::size_t J = std::min<std::size_t>(t.leaf_count(), 8);
        if (J == 0) continue;
        auto red = reduced_tree(t, 5, J);
        EXPECT_EQ(red.leaf_total(), J);
        for (std::size_t k = 1; k < red.nodes.size(); ++k) {
            EXPECT_GT(red.nodes[k].edge_length, 0.0);
            EXPECT_LT(red.nodes[k].parent, static_cast<long>(k));
        }
        for (const auto& m : red.measures) {
            double s = 0.0;
            for (auto [label, mass] : m) s += mass;
            if (!m.empty()) { EXPECT_NEAR(s, 1.0, 1e-12); }
        }
        EXPECT_THROW(reduced_tree(t, 5, t.leaf_count() + 1), ParameterError);
    }
}

TEST(Reduced, SingleHubLeafValueIsMark) {
    for (std::uint64_t r = 0; r < 30; ++r) {
        Rng rng = make_rng(8, r);
        auto t = sample_icrt(normalize_theta({1.0}), 8.0, rng);
        std::size_t J = t.leaf_count();
        if (J < 2) continue;
        auto red = reduced_tree(t, 1, J);
        for (std::size_t j = 1; j <= J; ++j) {
            // leaf 1 continues through the hub, leaf j >= 2 sits on the branch attached by segment j-1
            std::size_t branch = j == 1 ? 0 : j - 1;
            bool below = j > 1 || t.hubs[0].offset < t.segments[0].length;
            if (below) { EXPECT_DOUBLE_EQ(red.leaf_values[j - 1], t.mark(0, branch)); }
        }
    }
}

TEST(Surrogate, UniformWithoutHubs) {
    auto sw = surrogate_weights(ThetaSequence{}, 10);
    for (double p : sw.p) EXPECT_NEAR(p, 0.1, 1e-15);
    EXPECT_THROW(surrogate_weights(boundary_theta(10), 10), ParameterError);
}

TEST(Surrogate, MatchesThetaAtTenThousand) {
    auto th = boundary_theta(10);
    auto sw = surrogate_weights(th, 10000);
    double gap = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < 10; ++i) gap = std::max(gap, std::abs(sw.p[i] / sw.sigma - th.theta[i]));
    for (double p : sw.p) tot += p;
    EXPECT_LT(gap, 0.01);
    EXPECT_NEAR(tot, 1.0, 1e-12);
    // a single dominant theta cannot be matched with few vertices
    EXPECT_THROW(surrogate_weights(normalize_theta({1.0, 1e-3}), 4), ParameterError);
}

TEST(Surrogate, HubDegreeGrows) {
    auto th = boundary_theta(10);
    double small = 0.0, large = 0.0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        Rng a = make_rng(9, r), b = make_rng(10, r);
        small += static_cast<double>(icrt_via_ptree(th, 1000, a).tree.children[0].size());
        large += static_cast<double>(icrt_via_ptree(th, 10000, b).tree.children[0].size());
    }
    EXPECT_GT(large, small);
}

TEST(LimitSpace, ZeroGammaHasNoIdentifications) {
    Rng rng = make_rng(11, 0);
    auto s = build_limit_space(boundary_theta(10), 0.0, 300, rng);
    EXPECT_EQ(s.k, 300u);
    EXPECT_TRUE(check_space(s, &rng));
    EXPECT_THROW(build_limit_space(boundary_theta(10), -1.0, 300, rng), ParameterError);
}

TEST(LimitSpace, ProbabilityMeasure) {
    Rng rng = make_rng(12, 0);
    auto s = build_limit_space(boundary_theta(10), 2.0, 400, rng);
    double tot = std::accumulate(s.mu.begin(), s.mu.end(), 0.0);
    EXPECT_NEAR(tot, 1.0, 1e-12);
    EXPECT_TRUE(check_space(s, &rng));
}

TEST(LimitSpace, RescalingKeepsDistancesOfOrderOne) {
    // raw tree distances grow with m while sigma(p) shrinks; the product stays bounded
    auto th = boundary_theta(10);
    std::vector<double> scaled;
    for (std::size_t m : {100, 1000, 10000}) {
        double acc = 0.0;
        for (std::uint64_t r = 0; r < 4; ++r) {
            Rng rng = make_rng(13, r);
            LimitSpaceOptions opt;
            opt.landmarks = LandmarkMode{150};
            acc += mean_typical_distance(build_limit_space(th, 1.0, m, rng, opt), rng);
        }
        scaled.push_back(acc / 4.0);
    }
    auto s3 = surrogate_weights(th, 100).sigma, s5 = surrogate_weights(th, 10000).sigma;
    EXPECT_LT(s5, s3);
    for (double v : scaled) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 10.0);
    }
    EXPECT_LT(scaled[2] / scaled[0], 3.0);
    EXPECT_GT(scaled[2] / scaled[0], 1.0 / 3.0);
}

TEST(LimitComponent, GammaScaling) {
    LimitParams lp{1.0, {0.8, 0.6}, 1.0};
    LimitParams lp2 = lp;
    lp2.Gamma = 2.5;
    Rng a = make_rng(14, 0), b = make_rng(14, 0);
    auto x = limit_space_from_params(lp, 200, a);
    auto y = limit_space_from_params(lp2, 200, b);
    ASSERT_EQ(x.space.k, y.space.k);
    for (std::size_t i = 0; i < x.space.dist.size(); ++i) EXPECT_DOUBLE_EQ(y.space.dist[i], 2.5 * x.space.dist[i]);
    EXPECT_EQ(x.space.mu, y.space.mu);
}

TEST(LimitComponent, SingleJumpParameters) {
    auto c = entrance_boundary_from({0.5});
    for (std::uint64_t r = 0; r < 10; ++r) {
        Rng rng = make_rng(15, r);
        try {
            auto comp = limit_component_space(c, 0.0, 1, 100, 50.0, rng);
            EXPECT_NEAR(comp.params.gamma_bar, 1.0, 1e-12);
            EXPECT_NEAR(comp.params.Gamma, 4.0, 1e-12);
            EXPECT_EQ(comp.params.theta, (std::vector<double>{1.0}));
        } catch (const ParameterError&) {
            // the single jump fell outside the horizon
        }
    }
    Rng rng = make_rng(16, 0);
    EXPECT_THROW(limit_component_space(c, 0.0, 5, 100, 50.0, rng), ParameterError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "crg/exploration.hpp"
#include "crg/harness.hpp"

using namespace crg;

TEST(Explore, TinyTimeGivesSingletons) {
    auto x = power_law_weights(200, 3.5, 1.0);
    double t = 1e-7 / (x[0] * x[0]);
    Rng rng = make_rng(1, 0);
    auto res = explore(x, t, rng);
    ASSERT_EQ(res.components.size(), 200u);
    for (std::size_t k = 0; k < 200; ++k) {
        ASSERT_EQ(res.components[k].vertices.size(), 1u);
        EXPECT_EQ(res.components[k].mass, x[res.components[k].vertices[0]]);
    }
    EXPECT_THROW(explore(x, 0.0, rng), ParameterError);
}

TEST(Explore, TwoVerticesHalfConnected) {
    WeightSequence x({1.0, 1.0});
    double t = std::log(2.0);
    Rng rng = make_rng(2, 0);
    std::size_t R = 40000, joined = 0;
    for (std::size_t r = 0; r < R; ++r) joined += explore(x, t, rng).components.size() == 1;
    EXPECT_NEAR(static_cast<double>(joined) / static_cast<double>(R), 0.5, 0.01);
}

TEST(Explore, WalkInvariants) {
    auto w = power_law_weights(5000, 3.5, critical_iota(3.5));
    auto mc = nr_to_mc_params(w, 0.0, 3.5);
    Rng rng = make_rng(3, 0);
    auto res = explore(mc.x, mc.t, rng);
    const auto& tr = res.trace;
    ASSERT_EQ(tr.order.size(), 5000u);
    for (std::size_t i = 1; i < tr.step_times.size(); ++i) ASSERT_LT(tr.step_times[i - 1], tr.step_times[i]);
    // every vertex explored once, masses sum to sigma_1
    std::vector<int> seen(5000, 0);
    for (Vertex v : tr.order) ++seen[v];
    for (int s : seen) ASSERT_EQ(s, 1);
    double total = 0.0;
    for (const auto& c : res.components) total += c.mass;
    EXPECT_NEAR(total, mc.x.sigma1(), 1e-9 * mc.x.sigma1());
    EXPECT_NEAR(tr.step_times.back(), mc.x.sigma1(), 1e-9 * mc.x.sigma1());
    // component mass = excursion length, and the walk stays above its end value
    std::vector<double> lengths, masses;
    for (const auto& b : tr.component_bounds) lengths.push_back(b.second - b.first);
    for (const auto& c : res.components) masses.push_back(c.mass);
    std::sort(lengths.begin(), lengths.end());
    std::sort(masses.begin(), masses.end());
    ASSERT_EQ(lengths.size(), masses.size());
    for (std::size_t k = 0; k < lengths.size(); ++k) EXPECT_NEAR(lengths[k], masses[k], 1e-10 * std::max(1.0, masses[k]));
    std::vector<double> end_value(tr.component_bounds.size());
    for (const auto& e : tr.events) end_value[e.component] = e.value;
    for (const auto& e : tr.events) ASSERT_GE(e.value, end_value[e.component] - 1e-9);
}

TEST(Explore, ComponentsAreGraphComponents) {
    // each explored component is a union of mass-sorted vertex sets with sorted ids
    Rng rng = make_rng(4, 0);
    auto x = power_law_weights(300, 3.5, 1.0);
    auto res = explore(x, 1.0 / x.sigma1(), rng);
    for (std::size_t k = 1; k < res.components.size(); ++k) EXPECT_GE(res.components[k - 1].mass, res.components[k].mass);
    for (const auto& c : res.components) EXPECT_TRUE(std::is_sorted(c.vertices.begin(), c.vertices.end()));
}

TEST(Explore, LargestMassLawMatchesGraph) {
    auto w = power_law_weights(100, 3.5, critical_iota(3.5));
    auto mc = nr_to_mc_params(w, 0.0, 3.5);
    std::size_t R = 10000;
    std::vector<double> a(R), b(R);
    for (std::size_t r = 0; r < R; ++r) {
        Rng r1 = make_rng(5, r), r2 = make_rng(6, r);
        a[r] = explore(mc.x, mc.t, r1).components.front().mass;
        auto g = sample_mc_graph(mc.x, mc.t, r2);
        g.vertex_weights = mc.x.values();
        b[r] = components(g).front().mass;
    }
    EXPECT_LE(ks_statistic(a, b), 0.02);
}

TEST(SumSquares, Examples) {
    WeightSequence x(std::vector<double>(50, 0.2));
    Rng rng = make_rng(7, 0);
    auto res = explore(x, 1.0, rng);
    double s2 = std::sqrt(50 * 0.04);
    auto ss = sum_squares_process(res.trace, x, s2, 1.0);
    for (std::size_t k = 0; k < ss.S.size(); ++k) {
        EXPECT_NEAR(ss.S[k], static_cast<double>(k + 1) * std::pow(0.2 / s2, 2), 1e-12);
        EXPECT_EQ(ss.R[k], ss.S[k]);
    }
    auto none = sum_squares_process(res.trace, x, s2, 1e-9);
    for (double r : none.R) EXPECT_EQ(r, 0.0);
}

TEST(SumSquares, MonotoneAndDominated) {
    auto x = power_law_weights(2000, 3.5, 1.0);
    Rng rng = make_rng(8, 0);
    auto res = explore(x, 1.0 / x.sigma1(), rng);
    double s2 = 0.0;
    for (double v : x.values()) s2 += v * v;
    s2 = std::sqrt(s2);
    auto ss = sum_squares_process(res.trace, x, s2, 0.05);
    for (std::size_t k = 0; k < ss.S.size(); ++k) {
        if (k > 0) { EXPECT_GE(ss.S[k], ss.S[k - 1]); }
        EXPECT_LE(ss.R[k], ss.S[k]);
    }
    EXPECT_NEAR(ss.S.back(), 1.0, 1e-9);
}

TEST(RescaledWalk, Identities) {
    auto x = power_law_weights(500, 3.5, 1.0);
    Rng rng = make_rng(9, 0);
    auto res = explore(x, 1.0 / x.sigma1(), rng);
    auto one = rescaled_walk(res.trace, 1.0);
    auto sc = rescaled_walk(res.trace, 2.5);
    ASSERT_EQ(one.size(), res.trace.events.size());
    for (std::size_t k = 0; k < one.size(); ++k) {
        EXPECT_EQ(one[k].second, res.trace.events[k].value);
        EXPECT_EQ(sc[k].first, one[k].first);
        EXPECT_NEAR(sc[k].second * 2.5, one[k].second, 1e-12 * std::max(1.0, std::abs(one[k].second)));
    }
    EXPECT_THROW(rescaled_walk(res.trace, 0.0), ParameterError);
}

TEST(WalkCsv, Header) {
    WeightSequence x({1.0});
    Rng rng = make_rng(10, 0);
    std::ostringstream os;
    write_walk_csv(os, explore(x, 1.0, rng).trace);
    EXPECT_EQ(os.str().rfind("explored_weight,walk_value,component_id\n", 0), 0u);
}

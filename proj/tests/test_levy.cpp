#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "crg/levy.hpp"

using namespace crg;

namespace {

double uniform_time(Rng& rng, double h) { return uniform01(rng) * h; }

}  // namespace

TEST(LevyPath, SingleJumpFormula) {
    auto c = entrance_boundary_from({0.7});
    for (std::uint64_t r = 0; r < 20; ++r) {
        Rng rng = make_rng(1, r);
        auto p = build_levy_path(c, 0.0, 50.0, rng);
        EXPECT_NEAR(p.drift, -0.49, 1e-15);
        if (p.jumps.empty()) continue;
        double xi = p.jumps[0].time;
        for (double s : {0.5 * xi, xi, xi + 0.3, 2 * xi + 1})
            EXPECT_NEAR(p.value(s), -0.49 * s + (s >= xi ? 0.7 : 0.0), 1e-12);
    }
}

TEST(LevyPath, ExpectedJumpCount) {
    auto c = entrance_boundary(1.0, 3.5, 200);
    double h = 3.0, expect = 0.0, var = 0.0;
    for (double v : c.c) {
        double q = -std::expm1(-v * h);
        expect += q;
        var += q * (1 - q);
    }
    std::size_t R = 5000;
    double total = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        Rng rng = make_rng(2, r);
        total += static_cast<double>(build_levy_path(c, 0.0, h, rng).jumps.size());
    }
    EXPECT_NEAR(total / static_cast<double>(R), expect, 3.0 * std::sqrt(var / static_cast<double>(R)));
}

TEST(LevyPath, LambdaShiftIsLinear) {
    auto c = entrance_boundary(1.0, 3.5, 500);
    Rng r0 = make_rng(3, 0), r1 = make_rng(3, 0);
    auto p0 = build_levy_path(c, 0.0, 10.0, r0);
    auto p1 = build_levy_path(c, 1.0, 10.0, r1);
    Rng q = make_rng(4, 0);
    for (int k = 0; k < 100; ++k) {
        double s = uniform_time(q, 10.0);
        EXPECT_NEAR(p1.value(s) - p0.value(s), s, 1e-9);
    }
    EXPECT_THROW(build_levy_path(c, 0.0, 0.0, q), ParameterError);
}

TEST(LevyPath, JumpTimesStrictlyIncreasing) {
    auto c = entrance_boundary(1.0, 3.5, 2000);
    Rng rng = make_rng(5, 0);
    auto p = build_levy_path(c, 0.0, 30.0, rng);
    for (std::size_t k = 1; k < p.jumps.size(); ++k) EXPECT_LT(p.jumps[k - 1].time, p.jumps[k].time);
    std::vector<Jump> tied{{1.0, 0.5, 3}, {1.0, 0.5, 1}};
    order_jumps(tied);
    EXPECT_EQ(tied[0].index, 1);
    EXPECT_GT(tied[1].time, tied[0].time);
}

TEST(Reflect, OneJumpAlgebra) {
    PiecewiseLinearPath p;
    double c1 = 0.5, xi = 2.0;
    p.drift = -c1 * c1;
    p.horizon = 20.0;
    p.jumps = {{xi, c1, 0}};
    auto r = reflect(p);
    EXPECT_EQ(r.value(1.0), 0.0);
    EXPECT_EQ(r.value(1.999), 0.0);
    for (double u : {0.0, 0.5, 1.0, 1.9}) EXPECT_NEAR(r.value(xi + u), c1 - c1 * c1 * u, 1e-12);
    EXPECT_EQ(r.value(xi + 5.0), 0.0);
    auto ex = excursions(r);
    ASSERT_EQ(ex.complete.size(), 1u);
    EXPECT_NEAR(ex.complete[0].start, xi, 1e-15);
    EXPECT_NEAR(ex.complete[0].length, 1.0 / c1, 1e-12);
    EXPECT_EQ(ex.complete[0].jumps, (std::vector<long>{0}));
}

TEST(Reflect, PositiveDriftNoJumps) {
    PiecewiseLinearPath p;
    p.drift = 0.3;
    p.horizon = 5.0;
    auto r = reflect(p);
    for (double s : {0.0, 1.0, 4.5}) EXPECT_NEAR(r.value(s), 0.3 * s, 1e-15);
    auto ex = excursions(r);
    EXPECT_TRUE(ex.complete.empty());
    ASSERT_EQ(ex.incomplete.size(), 1u);
    EXPECT_FALSE(ex.incomplete[0].complete);
}

TEST(Reflect, NonnegativeIdempotentAgainstBruteForce) {
    auto c = entrance_boundary(1.0, 3.5, 1000);
    Rng q = make_rng(6, 0);
    for (std::uint64_t r = 0; r < 200; ++r) {
        Rng rng = make_rng(7, r);
        auto p = build_levy_path(c, 0.5, 15.0, rng);
        auto k = to_knots(p);
        auto rf = reflect(k);
        auto rr = reflect(rf);
        for (int s = 0; s < 100; ++s) {
            double t = uniform_time(q, 15.0);
            double v = rf.value(t);
            ASSERT_GE(v, 0.0);
            EXPECT_NEAR(rr.value(t), v, 1e-9);
            // running minimum from the knots: the path is linear between knots
            double m = 0.0;
            for (const auto& kn : k.knots) {
                if (kn.t > t) break;
                m = std::min(m, kn.before);
                m = std::min(m, kn.after);
            }
            m = std::min(m, k.value(t));
            EXPECT_NEAR(v, k.value(t) - m, 1e-9);
        }
    }
}

TEST(Excursions, EmptyForNegativeDriftWithoutJumps) {
    PiecewiseLinearPath p;
    p.drift = -1.0;
    p.horizon = 3.0;
    auto ex = excursions(reflect(p));
    EXPECT_TRUE(ex.complete.empty());
    EXPECT_TRUE(ex.incomplete.empty());
}

TEST(Excursions, DisjointSortedAndContainJumps) {
    auto c = entrance_boundary(1.0, 3.5, 1000);
    for (std::uint64_t r = 0; r < 1000; ++r) {
        Rng rng = make_rng(8, r);
        auto p = build_levy_path(c, 0.0, 20.0, rng);
        auto ex = excursions(reflect(p));
        std::vector<std::pair<double, double>> iv;
        for (std::size_t k = 0; k < ex.complete.size(); ++k) {
            const auto& e = ex.complete[k];
            ASSERT_GT(e.length, 0.0);
            ASSERT_NEAR(e.length, e.end - e.start, 1e-12);
            if (k > 0) { ASSERT_GE(ex.complete[k - 1].length, e.length); }
            iv.emplace_back(e.start, e.end);
            for (long j : e.jumps) {
                auto it = std::find_if(p.jumps.begin(), p.jumps.end(), [&](const Jump& x) { return x.index == j; });
                ASSERT_NE(it, p.jumps.end());
                ASSERT_GE(it->time, e.start);
                ASSERT_LT(it->time, e.end);
            }
        }
        std::sort(iv.begin(), iv.end());
        for (std::size_t k = 1; k < iv.size(); ++k) ASSERT_LE(iv[k - 1].second, iv[k].first);
    }
}

TEST(Excursions, LargestStabilizesInJ) {
    // shared exponentials: the first J entries draw identical times for every J
    double tau = 3.5;
    std::size_t R = 30;
    double near = 0.0, far = 0.0;
    for (std::uint64_t r = 0; r < R; ++r) {
        std::vector<double> len;
        for (std::size_t J : {100, 1000, 10000}) {
            Rng rng = make_rng(9, r);
            auto ex = excursions(reflect(build_levy_path(entrance_boundary(1.0, tau, J), 0.0, 60.0, rng)));
            len.push_back(ex.complete.empty() ? 0.0 : ex.complete[0].length);
        }
        near += std::abs(len[2] - len[1]);
        far += std::abs(len[1] - len[0]);
    }
    EXPECT_LT(near, far);
}

TEST(LimitParams, Examples) {
    auto c1 = entrance_boundary_from({0.5});
    Excursion e;
    e.length = 4.0;
    e.jumps = {0};
    auto lp = component_limit_params(e, c1);
    EXPECT_NEAR(lp.gamma_bar, 2.0, 1e-15);
    EXPECT_NEAR(lp.Gamma, 8.0, 1e-15);
    EXPECT_EQ(lp.theta, (std::vector<double>{1.0}));
    // single jump with length 1/c_1: (1, (1), 1/c_1^2)
    e.length = 2.0;
    lp = component_limit_params(e, c1);
    EXPECT_NEAR(lp.gamma_bar, 1.0, 1e-15);
    EXPECT_NEAR(lp.Gamma, 4.0, 1e-15);

    auto c2 = entrance_boundary_from({0.8, 0.6});
    Excursion f;
    f.length = 1.7;
    f.jumps = {1, 0};
    auto lq = component_limit_params(f, c2);
    EXPECT_NEAR(lq.gamma_bar, 1.7, 1e-15);
    EXPECT_NEAR(lq.Gamma, 1.7, 1e-15);
    ASSERT_EQ(lq.theta.size(), 2u);
    EXPECT_NEAR(lq.theta[0], 0.8, 1e-15);
    EXPECT_NEAR(lq.theta[1], 0.6, 1e-15);

    Excursion none;
    EXPECT_THROW(component_limit_params(none, c2), ParameterError);
    f.complete = false;
    EXPECT_THROW(component_limit_params(f, c2), ParameterError);
}

TEST(LimitParams, ThetaUnitNorm) {
    auto c = entrance_boundary(1.0, 3.5, 1000);
    for (std::uint64_t r = 0; r < 200; ++r) {
        Rng rng = make_rng(10, r);
        auto ex = excursions(reflect(build_levy_path(c, 0.0, 20.0, rng)));
        for (const auto& e : ex.complete) {
            if (e.jumps.empty()) continue;
            auto lp = component_limit_params(e, c);
            double s = 0.0;
            for (double v : lp.theta) s += v * v;
            ASSERT_NEAR(s, 1.0, 1e-12);
            ASSERT_TRUE(std::is_sorted(lp.theta.rbegin(), lp.theta.rend()));
        }
    }
}

TEST(NrConstants, ZetaAgainstRiemannZeta) {
    // each bracket is positive and the series sums to -zeta_R(s) on (0,1)
    for (double s : {0.7, 0.8, 0.9}) {
        double ser = zeta_bracket_series(s);
        EXPECT_GT(ser, 0.0);
        EXPECT_NEAR(ser, -std::riemann_zeta(s), 1e-8 * std::abs(std::riemann_zeta(s)));
    }
    auto k = nr_limit_constants(3.5, 1.0, 1.0, 0.0);
    EXPECT_LE(k.zeta, 0.0);
    EXPECT_NEAR(k.zeta, std::riemann_zeta(0.8), 1e-8 * 5.0);
    EXPECT_NEAR(k.t_nr, k.zeta, 1e-15);
}

TEST(NrConstants, DirectSummationOracle) {
    // 10^7 brackets summed in closed form, plus the Euler-Maclaurin tail to leading order
    double s = 0.8, sum = 0.0;
    const std::size_t N = 10000000;
    for (std::size_t i = N; i >= 1; --i) {
        double x = static_cast<double>(i);
        sum += -std::pow(x, 1 - s) * std::expm1((1 - s) * std::log1p(-1.0 / x)) / (1 - s) - std::pow(x, -s);
    }
    sum += 0.5 * std::pow(static_cast<double>(N), -s);
    EXPECT_NEAR(zeta_bracket_series(s), sum, 1e-8);
}

TEST(NrConstants, FirstEntryAndScaling) {
    double tau = 3.5, cF = 0.3, EW = 1.7;
    auto k = nr_limit_constants(tau, cF, EW, 0.4);
    EXPECT_NEAR(k.c_nr.c[0], std::pow(cF, 1.0 / (tau - 1.0)) / EW, 1e-15);
    EXPECT_NEAR(k.c_nr.c[9], std::pow(cF / 10.0, 1.0 / (tau - 1.0)) / EW, 1e-15);
    EXPECT_NEAR(k.t_nr, (0.4 + k.zeta) / EW, 1e-15);
}

TEST(Thinned, ZeroSlopeDegenerate) {
    Rng rng = make_rng(11, 0);
    auto pos = thinned_levy(1, 1.0, 0.0, 0.5, 3.5, 100, 10.0, rng);
    EXPECT_TRUE(pos.path.jumps.empty());
    EXPECT_FALSE(pos.hitting_time.has_value());
    auto neg = thinned_levy(1, 1.0, 0.0, -0.5, 3.5, 100, 10.0, rng);
    ASSERT_TRUE(neg.hitting_time.has_value());
    EXPECT_EQ(*neg.hitting_time, 0.0);
    auto zero = thinned_levy(1, 1.0, 0.0, 0.0, 3.5, 100, 10.0, rng);
    ASSERT_TRUE(zero.hitting_time.has_value());
    EXPECT_EQ(*zero.hitting_time, 0.0);
}

TEST(Thinned, FlipProbabilities) {
    double a = 0.8, tau = 3.5, h = 2.0, e = 1.0 / (tau - 1.0);
    std::size_t R = 20000, J = 50;
    ThinnedLevy proc(3, a, 1.0, 0.0, tau, J, h);
    std::vector<double> hits(J + 1, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        Rng rng = make_rng(12, r);
        for (const auto& j : proc.sample(rng).path.jumps) {
            hits[static_cast<std::size_t>(j.index)] += 1.0;
            ASSERT_LE(j.time, h);
        }
    }
    EXPECT_EQ(hits[3], 0.0);
    for (std::size_t j : {1, 2, 4, 10, 50}) {
        double q = -std::expm1(-a * h * std::pow(static_cast<double>(j), -e));
        EXPECT_NEAR(hits[j] / static_cast<double>(R), q, 3.5 * std::sqrt(q * (1 - q) / static_cast<double>(R)));
    }
}

TEST(Thinned, DriftAndHittingTimeExact) {
    double a = 0.5, b = 0.7, c = 0.2, tau = 3.5;
    std::size_t J = 20;
    ThinnedLevy proc(2, a, b, c, tau, J, 5.0);
    double comp = 0.0;
    for (std::size_t j = 1; j <= J; ++j)
        if (j != 2) comp += b * a * std::pow(static_cast<double>(j), -0.8);
    EXPECT_NEAR(proc.drift(), -a * b + c - comp, 1e-14);
    for (std::uint64_t r = 0; r < 200; ++r) {
        Rng rng = make_rng(13, r);
        auto res = proc.sample(rng);
        if (!res.hitting_time) continue;
        double t = *res.hitting_time;
        EXPECT_NEAR(res.start + res.path.value(t), 0.0, 1e-9);
        // nothing earlier on a fine grid is below zero
        for (double s = 0; s < t; s += t / 200) EXPECT_GT(res.start + res.path.value(s), -1e-9);
    }
}

TEST(PathCsv, Format) {
    PiecewiseLinearPath p;
    p.drift = -1.0;
    p.horizon = 2.0;
    p.jumps = {{1.0, 3.0, 0}};
    std::ostringstream os;
    write_path_csv(os, to_knots(p));
    EXPECT_EQ(os.str(), "time,value\n0,0\n1,-1\n1,2\n2,1\n");
}

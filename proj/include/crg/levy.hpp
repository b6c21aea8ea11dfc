#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "rng.hpp"
#include "weights.hpp"

namespace crg {

struct Jump {
    double time;
    double size;
    long index;  // position in the driving sequence
};

// drift * s + sum of jump sizes up to s.
struct PiecewiseLinearPath {
    double drift = 0.0;
    std::vector<Jump> jumps;
    double horizon = 0.0;

    double value(double s) const {
        double v = drift * s;
        for (const auto& j : jumps) {
            if (j.time > s) break;
            v += j.size;
        }
        return v;
    }
};

// Generic right-continuous piecewise-linear path: linear from `after` at knot
// k to `before` at knot k+1.
struct Knot {
    double t;
    double before;
    double after;
    long jump = -1;
};

struct KnotPath {
    std::vector<Knot> knots;

    double value(double s) const {
        auto it = std::upper_bound(knots.begin(), knots.end(), s, [](double x, const Knot& k) { return x < k.t; });
        if (it == knots.begin()) return knots.front().before;
        const Knot& k = *(it - 1);
        if (it == knots.end() || s == k.t) return k.after;
        double f = (s - k.t) / (it->t - k.t);
        return (1.0 - f) * k.after + f * it->before;
    }

    double horizon() const { return knots.back().t; }
};

inline void order_jumps(std::vector<Jump>& jumps) {
    std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) {
        return a.time != b.time ? a.time < b.time : a.index < b.index;
    });
    for (std::size_t k = 1; k < jumps.size(); ++k)
        if (jumps[k].time <= jumps[k - 1].time)
            jumps[k].time = std::nextafter(jumps[k - 1].time, std::numeric_limits<double>::infinity());
}

inline PiecewiseLinearPath build_levy_path(const EntranceBoundary& c, double lambda, double horizon, Rng& rng) {
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    PiecewiseLinearPath p;
    p.horizon = horizon;
    p.drift = lambda - c.square_sum();
    for (std::size_t j = 0; j < c.J(); ++j) {
        double xi = exponential(rng, c.c[j]);
        if (xi <= horizon) p.jumps.push_back({xi, c.c[j], static_cast<long>(j)});
    }
    order_jumps(p.jumps);
    return p;
}

inline KnotPath to_knots(const PiecewiseLinearPath& p) {
    KnotPath k;
    k.knots.push_back({0.0, 0.0, 0.0, -1});
    double level = 0.0;
    for (const auto& j : p.jumps) {
        if (j.time > p.horizon) break;
        double before = level + p.drift * j.time;
        if (j.time == 0.0) {
            k.knots.front().after += j.size;
            k.knots.front().jump = j.index;
        } else {
            k.knots.push_back({j.time, before, before + j.size, j.index});
        }
        level += j.size;
    }
    double end = level + p.drift * p.horizon;
    if (k.knots.back().t < p.horizon) k.knots.push_back({p.horizon, end, end, -1});
    return k;
}

// V minus its running minimum. A knot is inserted wherever a segment crosses
// below the current minimum, so the result is again exactly piecewise linear.
inline KnotPath reflect(const KnotPath& path) {
    KnotPath r;
    double M = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.knots.size(); ++i) {
        const Knot& k = path.knots[i];
        if (i > 0) {
            const Knot& prev = path.knots[i - 1];
            double a = prev.after, b = k.before;
            if (b < M && a > M) {
                double tc = prev.t + (M - a) / (b - a) * (k.t - prev.t);
                if (tc > prev.t && tc < k.t) r.knots.push_back({tc, 0.0, 0.0, -1});
            }
        }
        M = std::min(M, k.before);
        double before = k.before - M;
        M = std::min(M, k.after);
        double after = k.after - M;
        r.knots.push_back({k.t, before, after, k.jump});
    }
    return r;
}

inline KnotPath reflect(const PiecewiseLinearPath& p) { return reflect(to_knots(p)); }

struct Excursion {
    double start = 0.0;
    double end = 0.0;
    double length = 0.0;
    std::vector<long> jumps;
    bool complete = true;
};

struct ExcursionSet {
    std::vector<Excursion> complete;    // by length descending, ties by start
    std::vector<Excursion> incomplete;  // clipped by the horizon
};

inline ExcursionSet excursions(const KnotPath& refl) {
    ExcursionSet out;
    const auto& K = refl.knots;
    bool in = false;
    Excursion cur;
    for (std::size_t i = 0; i < K.size(); ++i) {
        const Knot& k = K[i];
        if (in && k.before <= 0.0) {
            cur.end = k.t;
            cur.length = cur.end - cur.start;
            out.complete.push_back(cur);
            in = false;
        }
        bool rises = k.after > 0.0 || (i + 1 < K.size() && K[i + 1].before > 0.0);
        if (!in && rises && i + 1 < K.size()) {
            in = true;
            cur = Excursion{};
            cur.start = k.t;
        }
        if (in && k.jump >= 0) cur.jumps.push_back(k.jump);
    }
    if (in) {
        cur.end = K.back().t;
        cur.length = cur.end - cur.start;
        cur.complete = false;
        out.incomplete.push_back(cur);
    }
    std::stable_sort(out.complete.begin(), out.complete.end(), [](const Excursion& a, const Excursion& b) {
        return a.length != b.length ? a.length > b.length : a.start < b.start;
    });
    return out;
}

struct LimitParams {
    double gamma_bar;
    std::vector<double> theta;  // descending, unit l2 norm
    double Gamma;
};

inline LimitParams component_limit_params(const Excursion& exc, const EntranceBoundary& c) {
    if (!exc.complete) throw ParameterError("excursion is clipped by the horizon");
    if (exc.jumps.empty()) throw ParameterError("excursion without jumps has no theta");
    double s2 = 0.0;
    std::vector<double> th;
    for (long j : exc.jumps) {
        double v = c.c[static_cast<std::size_t>(j)];
        s2 += v * v;
        th.push_back(v);
    }
    std::sort(th.begin(), th.end(), std::greater<>());
    double norm = 0.0;
    for (double v : th) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : th) v /= norm;
    double r = std::sqrt(s2);
    return {exc.length * r, std::move(th), exc.length / r};
}

struct NrConstants {
    EntranceBoundary c_nr;
    double zeta;
    double t_nr;
};

// sum_{i>=1} [ int_{i-1}^{i} u^{-s} du - i^{-s} ] for s in (0,1). The first N
// terms are summed directly; the remainder comes from the Euler-Maclaurin
// expansion of sum_{i>N} i^{-s} against its integral.
inline double zeta_bracket_series(double s, std::size_t N = 100000) {
    double sum = 0.0;
    double prev = 0.0;  // integral from 0 to i-1
    for (std::size_t i = 1; i <= N; ++i) {
        double x = static_cast<double>(i);
        double upto = std::pow(x, 1.0 - s) / (1.0 - s);
        sum += (upto - prev) - std::pow(x, -s);
        prev = upto;
    }
    double x = static_cast<double>(N);
    double f = std::pow(x, -s);
    double f1 = -s * std::pow(x, -s - 1.0);
    double f3 = -s * (s + 1.0) * (s + 2.0) * std::pow(x, -s - 3.0);
    return sum + f / 2.0 + f1 / 12.0 - f3 / 720.0;
}

inline NrConstants nr_limit_constants(double tau, double c_F, double mean_W, double lambda, std::size_t J = 10000) {
    check_tau(tau);
    double e = 1.0 / (tau - 1.0);
    NrConstants out;
    out.c_nr = entrance_boundary(std::pow(c_F, e) / mean_W, tau, J);
    out.zeta = -(std::pow(c_F, 2.0 * e) / mean_W) * zeta_bracket_series(2.0 * e);
    out.t_nr = (lambda + out.zeta) / mean_W;
    return out;
}

struct ThinnedResult {
    PiecewiseLinearPath path;
    double start;
    std::optional<double> hitting_time;
};

// b - a b t + c t + sum_{j != i, j <= J} (b / j^{1/(tau-1)}) [I_j(t) - a t / j^{1/(tau-1)}],
// where I_j switches on at an Exp(a / j^{1/(tau-1)}) time. Only switches inside
// the horizon are generated: the switch probabilities decrease in j, so the
// next candidate index is found by geometric skipping against the current
// bound and accepted with the ratio of probabilities. Given a switch, its time
// is exponential conditioned on the horizon.
class ThinnedLevy {
public:
    ThinnedLevy(std::size_t i, double a, double b, double c_const, double tau, std::size_t J, double horizon)
        : i_(i), a_(a), b_(b), J_(J), horizon_(horizon) {
        check_tau(tau);
        if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
        e_ = 1.0 / (tau - 1.0);
        double comp = 0.0;
        for (std::size_t j = 1; j <= J; ++j)
            if (j != i) comp += b * a * std::pow(static_cast<double>(j), -2.0 * e_);
        drift_ = -a * b + c_const - comp;
    }

    double drift() const { return drift_; }

    ThinnedResult sample(Rng& rng) const {
        ThinnedResult r;
        r.start = b_;
        r.path.horizon = horizon_;
        r.path.drift = drift_;
        if (a_ > 0.0 && b_ != 0.0) {
            auto rate = [&](std::size_t j) { return a_ * std::pow(static_cast<double>(j), -e_); };
            std::size_t j = 1;
            double q = -std::expm1(-rate(j) * horizon_);
            while (j <= J_) {
                double skip = std::floor(std::log(uniform_open(rng)) / std::log1p(-q));
                if (!(skip < static_cast<double>(J_ - j + 1))) break;
                j += static_cast<std::size_t>(skip);
                double rj = rate(j);
                double qj = -std::expm1(-rj * horizon_);
                if (uniform01(rng) * q < qj && j != i_) {
                    double t = -std::log1p(-uniform01(rng) * qj) / rj;
                    r.path.jumps.push_back({t, b_ * std::pow(static_cast<double>(j), -e_), static_cast<long>(j)});
                }
                q = qj;
                ++j;
            }
        }
        order_jumps(r.path.jumps);
        r.hitting_time = first_zero(r.start, r.path);
        return r;
    }

    // first t > 0 with start + path(t) <= 0, if it happens within the horizon
    static std::optional<double> first_zero(double start, const PiecewiseLinearPath& p) {
        double t0 = 0.0, v = start, d = p.drift;
        std::size_t k = 0;
        while (k < p.jumps.size() && p.jumps[k].time == 0.0) v += p.jumps[k++].size;
        for (;;) {
            double t1 = k < p.jumps.size() ? p.jumps[k].time : p.horizon;
            if (v < 0.0 || (v == 0.0 && d <= 0.0)) return t0;
            if (d < 0.0) {
                double hit = t0 + v / -d;
                if (hit <= t1) return hit;
            }
            if (k >= p.jumps.size()) return std::nullopt;
            v += d * (t1 - t0) + p.jumps[k].size;
            t0 = t1;
            ++k;
        }
    }

private:
    std::size_t i_;
    double a_, b_;
    std::size_t J_;
    double horizon_;
    double e_ = 0.0;
    double drift_ = 0.0;
};

inline ThinnedResult thinned_levy(std::size_t i, double a, double b, double c_const, double tau, std::size_t J,
                                  double horizon, Rng& rng) {
    return ThinnedLevy(i, a, b, c_const, tau, J, horizon).sample(rng);
}

inline void write_path_csv(std::ostream& os, const KnotPath& p) {
    os << "time,value\n";
    os.precision(17);
    for (const auto& k : p.knots) {
        os << k.t << ',' << k.before << '\n';
        if (k.after != k.before) os << k.t << ',' << k.after << '\n';
    }
}

inline void write_excursions_csv(std::ostream& os, const ExcursionSet& ex) {
    os << "rank,start,end,length,n_jumps\n";
    os.precision(17);
    std::size_t r = 1;
    for (const auto& e : ex.complete) os << r++ << ',' << e.start << ',' << e.end << ',' << e.length << ',' << e.jumps.size() << '\n';
}

}  // namespace crg

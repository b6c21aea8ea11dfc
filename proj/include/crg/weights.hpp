#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rng.hpp"

namespace crg {

class WeightSequence {
public:
    WeightSequence() = default;
    explicit WeightSequence(std::vector<double> values) : values_(std::move(values)) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
                throw ParameterError("weights must be finite and positive");
            if (i > 0 && values_[i] > values_[i - 1])
                throw ParameterError("weights must be sorted in descending order");
        }
        s1_ = sigma(1);
        s2_ = sigma(2);
        s3_ = sigma(3);
    }

    std::size_t n() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    double sigma1() const { return s1_; }
    double sigma2() const { return s2_; }
    double sigma3() const { return s3_; }

    double sigma(double r) const {
        double s = 0.0;
        for (double v : values_) s += std::pow(v, r);
        return s;
    }

private:
    std::vector<double> values_;
    double s1_ = 0.0, s2_ = 0.0, s3_ = 0.0;
};

struct ExponentSet {
    double tau, eta, rho, pi_dim;

    explicit ExponentSet(double tau_) : tau(tau_) {
        if (!(tau > 3.0 && tau < 4.0)) throw ParameterError("tau must lie in (3,4)");
        eta = (tau - 3.0) / (tau - 1.0);
        rho = (tau - 2.0) / (tau - 1.0);
        pi_dim = (tau - 2.0) / (tau - 3.0);
    }
};

inline void check_tau(double tau) { ExponentSet{tau}; }

// Moments of the exact power law 1 - F(x) = (iota/x)^(tau-1), x >= iota.
inline double power_law_mean(double tau, double iota) { return iota * (tau - 1.0) / (tau - 2.0); }
inline double power_law_second_moment(double tau, double iota) {
    return iota * iota * (tau - 1.0) / (tau - 3.0);
}
// iota for which E[W^2]/E[W] = 1.
inline double critical_iota(double tau) { return (tau - 3.0) / (tau - 2.0); }

inline WeightSequence power_law_weights(std::size_t n, double tau, double iota) {
    check_tau(tau);
    if (n < 1) throw ParameterError("n must be at least 1");
    if (!(iota > 0.0)) throw ParameterError("iota must be positive");
    std::vector<double> w(n);
    double e = 1.0 / (tau - 1.0);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = iota * std::pow(static_cast<double>(n) / static_cast<double>(i + 1), e);
    return WeightSequence(std::move(w));
}

inline double window_multiplier(std::size_t n, double tau, double lambda) {
    return 1.0 + lambda * std::pow(static_cast<double>(n), -ExponentSet(tau).eta);
}

inline WeightSequence critical_window(const WeightSequence& w, double tau, double lambda) {
    if (w.empty()) throw ParameterError("empty weight sequence");
    double mult = window_multiplier(w.n(), tau, lambda);
    if (!(mult > 0.0)) throw ParameterError("critical window multiplier must be positive");
    std::vector<double> v = w.values();
    for (double& x : v) x *= mult;
    return WeightSequence(std::move(v));
}

struct McParams {
    WeightSequence x;
    double t;
};

// x_i = n^{-rho} w_i and t = (1 + lambda n^{-eta}) n^{2 rho} / l_n, so that
// t x_i x_j equals the window-adjusted w_i w_j / l_n.
inline McParams nr_to_mc_params(const WeightSequence& w, double lambda, double tau) {
    ExponentSet ex(tau);
    if (w.empty()) throw ParameterError("empty weight sequence");
    double n = static_cast<double>(w.n());
    double scale = std::pow(n, -ex.rho);
    std::vector<double> x = w.values();
    for (double& v : x) v *= scale;
    double t = window_multiplier(w.n(), tau, lambda) * std::pow(n, 2.0 * ex.rho) / w.sigma1();
    return {WeightSequence(std::move(x)), t};
}

struct EntranceBoundary {
    std::vector<double> c;
    std::optional<double> tau;
    std::optional<double> alpha;

    std::size_t J() const { return c.size(); }

    double square_sum() const {
        double s = 0.0;
        for (double v : c) s += v * v;
        return s;
    }

    // Sum of c_j^3 over all j >= 1. For the power-law family the part beyond
    // the truncation index is added from the integral of the continuous tail.
    double cube_sum() const {
        double s = 0.0;
        for (double v : c) s += v * v * v;
        if (tau && alpha) {
            double p = 3.0 / (*tau - 1.0);
            s += std::pow(*alpha, 3.0) * std::pow(static_cast<double>(J()) + 0.5, 1.0 - p) / (p - 1.0);
        }
        return s;
    }
};

inline EntranceBoundary entrance_boundary(double alpha, double tau, std::size_t J) {
    check_tau(tau);
    if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
    if (J < 1) throw ParameterError("J must be at least 1");
    EntranceBoundary b;
    b.tau = tau;
    b.alpha = alpha;
    b.c.resize(J);
    for (std::size_t j = 0; j < J; ++j)
        b.c[j] = alpha * std::pow(static_cast<double>(j + 1), -1.0 / (tau - 1.0));
    return b;
}

inline EntranceBoundary entrance_boundary_from(std::vector<double> c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(c[i] > 0.0)) throw ParameterError("entrance boundary entries must be positive");
        if (i > 0 && c[i] > c[i - 1]) throw ParameterError("entrance boundary must be descending");
    }
    EntranceBoundary b;
    b.c = std::move(c);
    return b;
}

struct EntranceRow {
    std::size_t n;
    double sigma2;
    double cube_ratio;  // sigma3 / sigma2^3
    double cube_gap;    // |cube_ratio - sum c^3|
    double coord_gap;   // max_{j <= J} |x_j / sigma2 - c_j|
};

struct EntranceReport {
    std::vector<EntranceRow> rows;
    bool sigma2_vanishing = true;
    bool cube_gap_decreasing = true;
    bool coord_gap_decreasing = true;
    bool coord_mismatch = false;
    std::vector<std::string> flags;
};

inline EntranceReport check_entrance_assumptions(const std::vector<WeightSequence>& family,
                                                 const EntranceBoundary& c,
                                                 double mismatch_tol = 0.25) {
    if (family.size() < 2) throw ParameterError("need at least two members in the family");
    EntranceReport rep;
    double target = c.cube_sum();
    for (const auto& x : family) {
        EntranceRow r{x.n(), x.sigma2(), 0, 0, 0};
        r.cube_ratio = x.sigma3() / std::pow(x.sigma2(), 3.0);
        r.cube_gap = std::abs(r.cube_ratio - target);
        std::size_t J = std::min(c.J(), x.n());
        for (std::size_t j = 0; j < J; ++j)
            r.coord_gap = std::max(r.coord_gap, std::abs(x[j] / x.sigma2() - c.c[j]));
        rep.rows.push_back(r);
    }
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        const auto &a = rep.rows[k - 1], &b = rep.rows[k];
        if (!(b.sigma2 < a.sigma2)) rep.sigma2_vanishing = false;
        if (b.cube_gap > a.cube_gap) rep.cube_gap_decreasing = false;
        if (b.coord_gap > a.coord_gap) rep.coord_gap_decreasing = false;
    }
    rep.coord_mismatch = rep.rows.back().coord_gap > mismatch_tol;
    if (!rep.sigma2_vanishing) rep.flags.push_back("sigma2 does not decrease towards 0");
    if (!rep.cube_gap_decreasing) rep.flags.push_back("sigma3/sigma2^3 gap not monotone");
    if (!rep.coord_gap_decreasing) rep.flags.push_back("x_j/sigma2 gap not monotone");
    if (rep.coord_mismatch) rep.flags.push_back("x_j/sigma2 does not approach c_j");
    return rep;
}

}  // namespace crg

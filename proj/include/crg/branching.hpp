#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rng.hpp"
#include "weights.hpp"

namespace crg {

class DiscreteDistribution {
public:
    DiscreteDistribution() = default;
    DiscreteDistribution(std::vector<double> values, std::vector<double> probs)
        : values_(std::move(values)), probs_(std::move(probs)) {
        if (values_.size() != probs_.size() || values_.empty()) throw ParameterError("bad discrete distribution");
        double s = 0.0;
        for (double p : probs_) {
            if (p < 0.0) throw ParameterError("negative probability");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12) throw ParameterError("probabilities must sum to 1");
        draw_ = std::discrete_distribution<std::size_t>(probs_.begin(), probs_.end());
    }

    static DiscreteDistribution point(double v) { return {{v}, {1.0}}; }

    // uniform law on the atoms of a weight sequence, i.e. W_n
    static DiscreteDistribution empirical(const WeightSequence& w) {
        std::vector<double> p(w.n(), 1.0 / static_cast<double>(w.n()));
        double s = std::accumulate(p.begin(), p.end(), 0.0);
        p.back() += 1.0 - s;
        return {w.values(), p};
    }

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& probs() const { return probs_; }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * probs_[i];
        return m;
    }

    double sample(Rng& rng) const { return values_[draw_(rng)]; }

private:
    std::vector<double> values_, probs_;
    mutable std::discrete_distribution<std::size_t> draw_;
};

inline DiscreteDistribution size_biased(const DiscreteDistribution& d) {
    double m = d.mean();
    if (!(m > 0.0)) throw ParameterError("size-biasing needs a positive mean");
    std::vector<double> p(d.probs().size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = d.values()[i] * d.probs()[i] / m;
    double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= s;
    return {d.values(), p};
}

// Size-biased version of the exact power law with support [iota, inf):
// P(W > x) = (iota / x)^(tau - 2).
struct SizeBiasedPowerLaw {
    double tau;
    double iota;

    double mean() const { return iota * (tau - 2.0) / (tau - 3.0); }
    double sample(Rng& rng) const { return iota * std::pow(uniform_open(rng), -1.0 / (tau - 2.0)); }

    static SizeBiasedPowerLaw with_mean(double tau, double mean) {
        return {tau, mean * (tau - 3.0) / (tau - 2.0)};
    }
};

// P(Poi(W) = k) for W drawn from the mix above:
// (tau-2) iota^(tau-2) Gamma(k - (tau-2), iota) / k!. The incomplete gamma at
// the negative order is reached from order s0 + 2 > 0 by the recursion
// Gamma(s, x) = (Gamma(s + 1, x) - x^s e^{-x}) / s, and then stepped upward.
inline std::vector<double> offspring_pmf(const SizeBiasedPowerLaw& mix, std::size_t kmax) {
    double a = mix.tau - 2.0, x = mix.iota;
    double s0 = -a;
    double g2 = boost::math::tgamma(s0 + 2.0, x);
    double g1 = (g2 - std::pow(x, s0 + 1.0) * std::exp(-x)) / (s0 + 1.0);
    double g0 = (g1 - std::pow(x, s0) * std::exp(-x)) / s0;
    std::vector<double> pmf(kmax + 1);
    double pref = a * std::pow(x, a);
    // r = Gamma(k + s0, x) / k!, kept scaled so large k neither overflows nor loses digits
    double r = g0;
    for (std::size_t k = 0; k <= kmax; ++k) {
        pmf[k] = pref * r;
        double kk = static_cast<double>(k), s = kk + s0;
        r = (s * r + std::exp(s * std::log(x) - x - std::lgamma(kk + 1.0))) / (kk + 1.0);
    }
    return pmf;
}

inline std::vector<double> offspring_pmf(const DiscreteDistribution& mix, std::size_t kmax) {
    std::vector<double> pmf(kmax + 1, 0.0);
    for (std::size_t i = 0; i < mix.values().size(); ++i) {
        double w = mix.values()[i], term = std::exp(-w);
        for (std::size_t k = 0; k <= kmax; ++k) {
            if (k > 0) term *= w / static_cast<double>(k);
            pmf[k] += mix.probs()[i] * term;
        }
    }
    return pmf;
}

struct BranchingTree {
    std::vector<std::size_t> generation_sizes;
    std::vector<std::size_t> parent;  // parent[0] is the root itself
    bool truncated = false;

    std::size_t total() const { return std::accumulate(generation_sizes.begin(), generation_sizes.end(), std::size_t{0}); }
    std::size_t height() const { return generation_sizes.size() - 1; }
};

inline long poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>(mean)(rng);
}

// Root gets Poi(root_mix) children, every later vertex Poi(offspring_mix).
// Generation max_gen is created but not expanded; truncated is set when it is
// nonempty.
template <class OffMix, class RootMix>
BranchingTree sample_mixed_poisson_bp(const OffMix& offspring_mix, const RootMix& root_mix, std::size_t max_gen,
                                      Rng& rng) {
    BranchingTree t;
    t.generation_sizes.push_back(1);
    t.parent.push_back(0);
    std::size_t lo = 0, hi = 1;
    for (std::size_t g = 0; g < max_gen && lo < hi; ++g) {
        std::size_t next_lo = hi;
        for (std::size_t v = lo; v < hi; ++v) {
            double w = g == 0 ? root_mix.sample(rng) : offspring_mix.sample(rng);
            long kids = poisson(rng, w);
            for (long c = 0; c < kids; ++c) t.parent.push_back(v);
        }
        hi = t.parent.size();
        lo = next_lo;
        if (hi > lo) t.generation_sizes.push_back(hi - lo);
    }
    t.truncated = t.generation_sizes.size() == max_gen + 1 && t.generation_sizes.back() > 0;
    return t;
}

// Total progeny only, stopping as soon as it exceeds cap (returns cap + 1).
template <class OffMix, class RootMix>
std::size_t total_progeny(const OffMix& offspring_mix, const RootMix& root_mix, std::size_t cap, Rng& rng) {
    std::size_t total = 1, current = 1;
    bool root = true;
    while (current > 0) {
        double w = 0.0;
        for (std::size_t v = 0; v < current; ++v) w += root ? root_mix.sample(rng) : offspring_mix.sample(rng);
        root = false;
        current = static_cast<std::size_t>(poisson(rng, w));
        total += current;
        if (total > cap) return cap + 1;
    }
    return total;
}

struct OtterDwass {
    double probability;
    double mass_deficit;  // probability mass missing from the supplied pmf
};

// (1/k) P(X_1 + ... + X_k = k - 1) by repeated convolution, keeping only
// coefficients up to k - 1.
inline OtterDwass otter_dwass_pmf(const std::vector<double>& offspring, std::size_t k) {
    if (k < 1) throw ParameterError("k must be at least 1");
    std::size_t len = k;  // degrees 0..k-1
    std::vector<double> power(len, 0.0), next(len);
    power[0] = 1.0;
    for (std::size_t step = 0; step < k; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            if (power[i] == 0.0) continue;
            for (std::size_t j = 0; j < offspring.size() && i + j < len; ++j) next[i + j] += power[i] * offspring[j];
        }
        power.swap(next);
    }
    double total = std::accumulate(offspring.begin(), offspring.end(), 0.0);
    return {power[k - 1] / static_cast<double>(k), std::max(0.0, 1.0 - total)};
}

// P(|T| = k) for k = 1..kmax in one sweep of convolution powers.
inline std::vector<double> otter_dwass_table(const std::vector<double>& offspring, std::size_t kmax) {
    std::vector<double> out(kmax + 1, 0.0);
    std::vector<double> power(kmax, 0.0), next(kmax);
    power[0] = 1.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < kmax; ++i) {
            if (power[i] == 0.0) continue;
            for (std::size_t j = 0; j < offspring.size() && i + j < kmax; ++j) next[i + j] += power[i] * offspring[j];
        }
        power.swap(next);
        out[k] = power[k - 1] / static_cast<double>(k);
    }
    return out;
}

struct TailPoint {
    std::size_t m;
    double p_hat;
    double stderr_;
};

// Height of a mixed-Poisson tree, capped at top. Only generation sizes are
// tracked: the next generation is Poisson with mean equal to the summed mixing
// values.
template <class Mix>
std::size_t sampled_height(const Mix& mix, std::size_t top, Rng& rng) {
    std::size_t current = 1, gen = 0;
    while (current > 0 && gen < top) {
        double w = 0.0;
        for (std::size_t v = 0; v < current; ++v) w += mix.sample(rng);
        current = static_cast<std::size_t>(poisson(rng, w));
        if (current > 0) ++gen;
    }
    return gen;
}

// Monte-Carlo estimate of P(height >= m); replica r uses make_rng(seed, r).
template <class Mix>
std::vector<TailPoint> height_tail(const Mix& mix, const std::vector<std::size_t>& m_values, std::size_t replicas,
                                   std::uint64_t seed) {
    std::size_t top = m_values.empty() ? 0 : *std::max_element(m_values.begin(), m_values.end());
    std::vector<std::size_t> reached(top + 1, 0);
    for (std::size_t r = 0; r < replicas; ++r) {
        Rng rng = make_rng(seed, r);
        ++reached[sampled_height(mix, top, rng)];
    }
    std::vector<TailPoint> out;
    double n = static_cast<double>(replicas);
    for (auto m : m_values) {
        std::size_t hits = 0;
        for (std::size_t g = m; g <= top; ++g) hits += reached[g];
        double p = static_cast<double>(hits) / n;
        out.push_back({m, p, std::sqrt(p * (1.0 - p) / n)});
    }
    return out;
}

}  // namespace crg

#ifndef BDK_MARKOV_TV_HPP
#define BDK_MARKOV_TV_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/vec.hpp"

namespace bdk {

/// Probability vector: nonnegative entries summing to 1 within 1e-12.
struct DiscreteDistribution {
    std::vector<double> probs;

    static DiscreteDistribution from(std::vector<double> p) {
        DiscreteDistribution d{std::move(p)};
        d.validate();
        return d;
    }

    void validate() const {
        require(!probs.empty(), "distribution: empty support");
        double total = 0.0;
        for (double v : probs) {
            require(v >= 0.0, "distribution: negative probability");
            total += v;
        }
        require(std::abs(total - 1.0) <= 1e-12, "distribution: probabilities must sum to 1");
    }

    std::size_t size() const { return probs.size(); }
};

/// Row-stochastic transition matrix over a finite state space.
struct DiscreteChain {
    std::vector<std::vector<double>> P;

    static DiscreteChain from(std::vector<std::vector<double>> rows) {
        DiscreteChain c{std::move(rows)};
        c.validate();
        return c;
    }

    void validate() const {
        require(!P.empty(), "chain: empty transition matrix");
        const std::size_t n = P.size();
        for (const auto& row : P) {
            require(row.size() == n, "chain: transition matrix must be square");
            double total = 0.0;
            for (double v : row) {
                require(v >= 0.0, "chain: negative transition probability");
                total += v;
            }
            require(std::abs(total - 1.0) <= 1e-12, "chain: rows must sum to 1");
        }
    }

    std::size_t states() const { return P.size(); }
};

/// Half the L1 distance between two distributions on the same support.
inline double tv_distance(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
    require(mu.size() == nu.size(), "tv_distance: support mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) acc += std::abs(mu.probs[i] - nu.probs[i]);
    return 0.5 * acc;
}

/// The defining maximum over all 2^n events of |mu(A) - nu(A)|. Exponential
/// by construction; the independent oracle for tv_distance.
inline double tv_distance_bruteforce(const DiscreteDistribution& mu,
                                     const DiscreteDistribution& nu) {
    require(mu.size() == nu.size(), "tv_distance_bruteforce: support mismatch");
    require(mu.size() <= 20, "tv_distance_bruteforce: support too large to enumerate");
    const std::size_t n = mu.size();
    const std::uint32_t n_events = 1u << n;
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < n_events; ++mask) {
        double pm = 0.0, pn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                pm += mu.probs[i];
                pn += nu.probs[i];
            }
        }
        best = std::max(best, std::abs(pm - pn));
    }
    return best;
}

inline DiscreteDistribution step_distribution(const DiscreteChain& chain,
                                              const DiscreteDistribution& mu) {
    require(mu.size() == chain.states(), "step_distribution: size mismatch");
    std::vector<double> out(mu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < mu.size(); ++j) out[j] += mu.probs[i] * chain.P[i][j];
    return DiscreteDistribution{std::move(out)};
}

/// Stationary distribution by power iteration from pi0; empty when the
/// iteration does not settle within the budget (periodic or reducible
/// chains).
inline std::optional<DiscreteDistribution> stationary_distribution(
    const DiscreteChain& chain, const DiscreteDistribution& pi0, int max_iters = 100000,
    double tol = 1e-12) {
    DiscreteDistribution cur = pi0;
    for (int it = 0; it < max_iters; ++it) {
        DiscreteDistribution next = step_distribution(chain, cur);
        if (tv_distance(cur, next) <= tol) return next;
        cur = std::move(next);
    }
    return std::nullopt;
}

struct MixingTimeResult {
    std::optional<int> t_mix;            // empty: not mixed within budget
    std::vector<double> worst_tv_by_t;   // worst-start TV after t steps, t = 1..
    DiscreteDistribution stationary{{1.0}};
    bool stationary_found = false;
};

/// Smallest t with max_x TV(P^t(x,.), pi) <= epsilon.
inline MixingTimeResult chain_mixing_time(const DiscreteChain& chain,
                                          const DiscreteDistribution& pi0, double epsilon,
                                          int budget = 10000) {
    require(epsilon > 0.0 && epsilon < 1.0, "chain_mixing_time: epsilon must be in (0,1)");
    require(pi0.size() == chain.states(), "chain_mixing_time: pi0 size mismatch");
    require(budget >= 1, "chain_mixing_time: budget must be >= 1");

    MixingTimeResult res;
    auto pi = stationary_distribution(chain, pi0);
    if (!pi.has_value()) return res;  // typed outcome, not a crash
    res.stationary = *pi;
    res.stationary_found = true;

    const std::size_t n = chain.states();
    // rows of P^t, one per start state
    std::vector<DiscreteDistribution> rows;
    rows.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
        std::vector<double> delta(n, 0.0);
        delta[x] = 1.0;
        rows.push_back(DiscreteDistribution{std::move(delta)});
    }

    for (int t = 1; t <= budget; ++t) {
        double worst = 0.0;
        for (auto& row : rows) {
            row = step_distribution(chain, row);
            worst = std::max(worst, tv_distance(row, *pi));
        }
        res.worst_tv_by_t.push_back(worst);
        if (worst <= epsilon) {
            res.t_mix = t;
            return res;
        }
    }
    return res;
}

/// Random walk on the cyclic group Z_n with the given increment law:
/// P(x, x+g) = increments[g].
inline DiscreteChain cyclic_walk(const DiscreteDistribution& increments) {
    const std::size_t n = increments.size();
    require(n >= 2, "cyclic_walk: group must have at least 2 elements");
    std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t g = 0; g < n; ++g) P[x][(x + g) % n] += increments.probs[g];
    return DiscreteChain::from(std::move(P));
}

/// Increment law of the reversed walk: mu_hat(g) = mu(-g).
inline DiscreteDistribution reversed_increments(const DiscreteDistribution& increments) {
    const std::size_t n = increments.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t g = 0; g < n; ++g) out[(n - g) % n] = increments.probs[g];
    return DiscreteDistribution{std::move(out)};
}

struct TimeReversalResult {
    std::optional<int> t_mix_forward;
    std::optional<int> t_mix_reversed;
    bool equal = false;
};

/// Mixing time of a cyclic-group walk and of its time reversal; the two are
/// equal whenever both walks mix.
inline TimeReversalResult time_reversal_check(const DiscreteDistribution& increments,
                                              double epsilon = 0.25, int budget = 10000) {
    const std::size_t n = increments.size();
    std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    DiscreteDistribution pi0{uniform};

    TimeReversalResult res;
    res.t_mix_forward =
        chain_mixing_time(cyclic_walk(increments), pi0, epsilon, budget).t_mix;
    res.t_mix_reversed =
        chain_mixing_time(cyclic_walk(reversed_increments(increments)), pi0, epsilon, budget).t_mix;
    res.equal = res.t_mix_forward.has_value() && res.t_mix_reversed.has_value() &&
                *res.t_mix_forward == *res.t_mix_reversed;
    return res;
}

} // namespace bdk

#endif // BDK_MARKOV_TV_HPP

#ifndef BDK_SCHEDULE_HPP
#define BDK_SCHEDULE_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/vec.hpp"

namespace bdk {

/// Variance schedule of a diffusion chain with T steps.
///
/// beta[t-1] is the per-step variance at step t (steps are 1-based);
/// alpha_bar[t-1] is the cumulative product of (1 - beta) up to step t.
/// eta controls the stochasticity of the implicit sampler (0 = deterministic).
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha_bar;
    double eta = 0.0;
    double beta_start = 0.0;
    double beta_end = 0.0;

    double beta_at(int t) const {
        require(t >= 1 && t <= T, "beta_at: step out of range");
        return beta[static_cast<std::size_t>(t) - 1];
    }

    /// Cumulative alpha with the convention alpha_bar(0) = 1 (clean data).
    double alpha_bar_at(int t) const {
        require(t >= 0 && t <= T, "alpha_bar_at: step out of range");
        if (t == 0) return 1.0;
        return alpha_bar[static_cast<std::size_t>(t) - 1];
    }
};

enum class ChainDirection { denoise, invert };

/// Strictly increasing step indices tau_1 = 0 < ... <= T shared by both
/// chain directions; `direction` records how a consumer walks them.
struct StepPlan {
    std::vector<int> taus;
    ChainDirection direction = ChainDirection::denoise;

    int entry_step() const {
        require(!taus.empty(), "step plan is empty");
        return direction == ChainDirection::denoise ? taus.back() : taus.front();
    }
    int target_step() const {
        require(!taus.empty(), "step plan is empty");
        return direction == ChainDirection::denoise ? taus.front() : taus.back();
    }
};

inline NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end,
                                          double eta = 0.0) {
    require(T >= 1, "make_linear_schedule: T must be >= 1");
    require(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end,
            "make_linear_schedule: need 0 < beta_start <= beta_end < 1");
    require(eta >= 0.0 && eta <= 1.0, "make_linear_schedule: eta must be in [0,1]");

    NoiseSchedule s;
    s.T = T;
    s.eta = eta;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.beta.resize(static_cast<std::size_t>(T));
    s.alpha_bar.resize(static_cast<std::size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(t) / (T - 1);
        const double b = beta_start + frac * (beta_end - beta_start);
        s.beta[static_cast<std::size_t>(t)] = b;
        prod *= (1.0 - b);
        s.alpha_bar[static_cast<std::size_t>(t)] = prod;
    }
    return s;
}

/// Default training schedule: T=1000 linear 1e-4..0.02. Desk-scale work uses
/// the same endpoints with T=100; step-indexed quantities scale with T.
inline NoiseSchedule default_schedule(int T = 1000, double eta = 0.0) {
    return make_linear_schedule(T, 1e-4, 0.02, eta);
}

/// Closed-form forward noising: x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) noise.
inline Vec q_sample(const NoiseSchedule& s, std::span<const double> x0, int t,
                    std::span<const double> noise) {
    require(t >= 1 && t <= s.T, "q_sample: step out of range");
    require(x0.size() == noise.size(), "q_sample: noise dimension mismatch");
    const double ab = s.alpha_bar_at(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Vec out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * noise[i];
    return out;
}

/// Evenly spaced plan 0..t_end with n_steps segments (deduplicated).
inline StepPlan make_step_plan(const NoiseSchedule& s, int n_steps, int t_end,
                               ChainDirection direction) {
    require(n_steps >= 1, "make_step_plan: n_steps must be >= 1");
    require(t_end <= s.T, "make_step_plan: t_end exceeds schedule length");
    require(n_steps <= t_end, "make_step_plan: more steps than indices available");

    StepPlan plan;
    plan.direction = direction;
    plan.taus.reserve(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i) {
        const int tau = static_cast<int>(std::llround(
            static_cast<double>(i) * static_cast<double>(t_end) / n_steps));
        if (plan.taus.empty() || tau > plan.taus.back()) plan.taus.push_back(tau);
    }
    return plan;
}

} // namespace bdk

#endif // BDK_SCHEDULE_HPP

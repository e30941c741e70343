#ifndef BDK_TRAJECTORY_HPP
#define BDK_TRAJECTORY_HPP

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/noise_model.hpp"
#include "bdk/rng.hpp"
#include "bdk/schedule.hpp"
#include "bdk/vec.hpp"

namespace bdk {

enum class LatentSource { sampled, inverted, intermediate };

struct LatentState {
    Vec x;
    int t = 0;
    LatentSource source = LatentSource::intermediate;
};

enum class TrajectoryMode { deterministic, stochastic, mixed };

/// Stochastic kernel used by stochastic/mixed runs: the ancestral update
/// with sigma_t z (the implicit sampler at full stochasticity), or the
/// classic posterior step with variance beta_t.
enum class StochasticKernel { implicit_eta1, ancestral_ddpm };

struct Trajectory {
    std::vector<LatentState> states;  // in visit order
    TrajectoryMode mode = TrajectoryMode::deterministic;

    const LatentState& final_state() const {
        require(!states.empty(), "trajectory is empty");
        return states.back();
    }
};

inline Vec sample_standard_latent(int d, Rng& rng) {
    Vec x(static_cast<std::size_t>(d));
    for (double& v : x) v = rng.normal();
    return x;
}

/// One reverse step x_t -> x_{t-1} with posterior variance beta_t:
/// x_{t-1} = (x_t - beta_t/sqrt(1-abar_t) * eps) / sqrt(1-beta_t) + sqrt(beta_t) z.
inline LatentState ddpm_step(const NoisePredictor& m, const NoiseSchedule& s,
                             const LatentState& state, Rng& rng) {
    require(state.t >= 1, "ddpm_step: already at t=0");
    const int t = state.t;
    const double beta = s.beta_at(t);
    const double ab = s.alpha_bar_at(t);
    const Vec eps = predict_noise(m, state.x, t).noise;

    const double inv = 1.0 / std::sqrt(1.0 - beta);
    const double coeff = beta / std::sqrt(1.0 - ab);
    const double noise_scale = std::sqrt(beta);

    LatentState next;
    next.t = t - 1;
    next.source = state.source;
    next.x.resize(state.x.size());
    for (std::size_t i = 0; i < state.x.size(); ++i)
        next.x[i] = inv * (state.x[i] - coeff * eps[i]) + noise_scale * rng.normal();
    return next;
}

/// Stochasticity scale of the implicit sampler between t and t_prev.
inline double implicit_sigma(const NoiseSchedule& s, int t, int t_prev, double eta) {
    const double ab_t = s.alpha_bar_at(t);
    const double ab_p = s.alpha_bar_at(t_prev);
    return eta * std::sqrt((1.0 - ab_p) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_p);
}

/// Implicit-sampler step x_t -> x_{t_prev} (t_prev < t, possibly a jump):
/// predicted-x0 term + direction term + sigma_t z. With eta = 0 the step is
/// deterministic and consumes no randomness.
inline LatentState ddim_step(const NoisePredictor& m, const NoiseSchedule& s,
                             const LatentState& state, int t_prev, double eta,
                             Rng* rng = nullptr) {
    require(t_prev < state.t, "ddim_step: t_prev must be below the current step");
    require(t_prev >= 0, "ddim_step: negative target step");
    require(eta >= 0.0 && eta <= 1.0, "ddim_step: eta must be in [0,1]");
    const int t = state.t;
    const double ab_t = s.alpha_bar_at(t);
    const double ab_p = s.alpha_bar_at(t_prev);
    const double sigma = implicit_sigma(s, t, t_prev, eta);
    require(sigma == 0.0 || rng != nullptr, "ddim_step: stochastic step needs an rng");

    const Vec eps = predict_noise(m, state.x, t).noise;
    const double x0_scale = std::sqrt(ab_p) / std::sqrt(ab_t);
    const double x0_eps = std::sqrt(ab_p) * std::sqrt(1.0 - ab_t) / std::sqrt(ab_t);
    const double dir_scale = std::sqrt(std::max(0.0, 1.0 - ab_p - sigma * sigma));

    LatentState next;
    next.t = t_prev;
    next.source = state.source;
    next.x.resize(state.x.size());
    for (std::size_t i = 0; i < state.x.size(); ++i) {
        double v = x0_scale * state.x[i] + (dir_scale - x0_eps) * eps[i];
        if (sigma > 0.0) v += sigma * rng->normal();
        next.x[i] = v;
    }
    return next;
}

/// Deterministic inversion of a data sample along an increasing plan.
/// Each step rewrites the state at the next index through the predicted
/// clean sample, so the map is the exact inverse of the deterministic
/// denoise step up to where the noise estimate is evaluated.
inline LatentState ddim_invert(const NoisePredictor& m, const NoiseSchedule& s,
                               std::span<const double> x0, const StepPlan& plan) {
    require(plan.direction == ChainDirection::invert, "ddim_invert: plan direction mismatch");
    require(plan.taus.size() >= 2, "ddim_invert: plan needs at least two steps");
    require(static_cast<int>(x0.size()) == m.data_dim(), "ddim_invert: dimension mismatch");

    Vec x(x0.begin(), x0.end());
    for (std::size_t i = 0; i + 1 < plan.taus.size(); ++i) {
        const int t_cur = plan.taus[i];
        const int t_next = plan.taus[i + 1];
        const double ab_c = s.alpha_bar_at(t_cur);
        const double ab_n = s.alpha_bar_at(t_next);
        // model is trained on t >= 1; clamp the query at the clean end
        const Vec eps = predict_noise(m, x, std::max(t_cur, 1)).noise;
        const double x0_scale = std::sqrt(ab_n) / std::sqrt(ab_c);
        const double eps_scale =
            std::sqrt(1.0 - ab_n) - std::sqrt(ab_n) * std::sqrt(1.0 - ab_c) / std::sqrt(ab_c);
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] = x0_scale * x[j] + eps_scale * eps[j];
    }
    LatentState out;
    out.x = std::move(x);
    out.t = plan.taus.back();
    out.source = LatentSource::inverted;
    return out;
}

struct RunOptions {
    TrajectoryMode mode = TrajectoryMode::deterministic;
    StochasticKernel kernel = StochasticKernel::implicit_eta1;
    std::optional<int> t_m;  // required for mixed mode
    int record_stride = 1;   // record steps divisible by this, plus endpoints
};

/// Walks a denoise plan from its entry step down to 0, recording states at
/// the requested stride. Mixed mode is deterministic above t_m and
/// stochastic at and below it.
inline Trajectory run_trajectory(const NoisePredictor& m, const NoiseSchedule& s,
                                 const LatentState& start, const StepPlan& plan,
                                 const RunOptions& opts, Rng& rng) {
    require(plan.direction == ChainDirection::denoise, "run_trajectory: denoise plan required");
    require(start.t == plan.entry_step(), "run_trajectory: start step does not match plan entry");
    require(opts.record_stride >= 1, "run_trajectory: stride must be >= 1");
    if (opts.mode == TrajectoryMode::mixed) {
        require(opts.t_m.has_value(), "run_trajectory: mixed mode needs a configured t_m");
        bool found = false;
        for (int tau : plan.taus) found |= (tau == *opts.t_m);
        require(found, "run_trajectory: t_m is not a plan step");
    }

    auto should_record = [&](int t) {
        return t == plan.entry_step() || t == plan.target_step() || t % opts.record_stride == 0;
    };

    Trajectory traj;
    traj.mode = opts.mode;
    LatentState cur = start;
    if (should_record(cur.t)) traj.states.push_back(cur);

    auto stochastic_to = [&](const LatentState& st, int t_prev) {
        if (opts.kernel == StochasticKernel::ancestral_ddpm) {
            // the posterior kernel is single-step; walk intermediate indices
            LatentState w = st;
            while (w.t > t_prev) w = ddpm_step(m, s, w, rng);
            return w;
        }
        return ddim_step(m, s, st, t_prev, 1.0, &rng);
    };

    for (std::size_t i = plan.taus.size(); i-- > 1;) {
        const int t_prev = plan.taus[i - 1];
        bool stochastic = false;
        switch (opts.mode) {
            case TrajectoryMode::deterministic: stochastic = false; break;
            case TrajectoryMode::stochastic: stochastic = true; break;
            case TrajectoryMode::mixed: stochastic = (cur.t <= *opts.t_m); break;
        }
        cur = stochastic ? stochastic_to(cur, t_prev) : ddim_step(m, s, cur, t_prev, 0.0);
        if (should_record(cur.t)) traj.states.push_back(cur);
    }
    return traj;
}

} // namespace bdk

#endif // BDK_TRAJECTORY_HPP

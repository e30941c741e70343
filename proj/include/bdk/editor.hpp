#ifndef BDK_EDITOR_HPP
#define BDK_EDITOR_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdk/boundary.hpp"
#include "bdk/errors.hpp"
#include "bdk/geometry.hpp"
#include "bdk/rng.hpp"
#include "bdk/trajectory.hpp"
#include "bdk/vec.hpp"

namespace bdk {

enum class EditMode { set_distance, additive };

/// How often the edited bottleneck vector is injected into the stochastic
/// tail: only at the mixing step, or at the first k steps below it.
struct HInjection {
    enum class Kind { single_step, iterative };
    Kind kind = Kind::single_step;
    int k = 1;

    static HInjection single_step() { return {}; }
    static HInjection iterative(int k) {
        require(k >= 1, "HInjection: k must be >= 1");
        return {Kind::iterative, k};
    }

    int steps() const { return kind == Kind::single_step ? 1 : k; }
};

struct BoundaryEdit {
    Boundary boundary;
    double zeta = 0.0;  // target signed distance (set_distance) or step (additive)
};

/// One edit per latent level; at least one must be present.
struct EditSpec {
    std::optional<BoundaryEdit> epsilon_edit;
    std::optional<BoundaryEdit> h_edit;
    EditMode mode = EditMode::set_distance;
    HInjection h_injection = HInjection::single_step();
};

/// Moves x along the boundary normal. set_distance lands exactly at signed
/// distance zeta; additive steps by zeta regardless of the current distance.
inline Vec edit_latent(std::span<const double> x, const Boundary& b, double zeta,
                       EditMode mode) {
    require(x.size() == b.normal.size(), "edit_latent: dimension mismatch");
    require(std::isfinite(zeta), "edit_latent: zeta must be finite");
    Vec out(x.begin(), x.end());
    const double step = (mode == EditMode::set_distance) ? zeta - signed_distance(b, x) : zeta;
    axpy(step, b.normal, out);
    return out;
}

struct EditEvent {
    int step = 0;
    LatentSpace space = LatentSpace::epsilon;
    double pre_distance = 0.0;
    double post_distance = 0.0;
};

struct EditOutcome {
    Vec image;                     // denoised output x0'
    Vec latent_pre_edit;           // epsilon latent at t_m before any edit
    Vec latent_post_edit;          // epsilon latent that the stochastic tail started from
    std::vector<EditEvent> events; // one entry per latent mutation
    Trajectory prefix;             // deterministic segment above t_m (recorded states)
    Trajectory tail;               // stochastic segment from t_m down to 0
};

namespace detail {

inline void check_spec(const EditSpec& spec, const NoisePredictor& m, int t_m) {
    require(spec.epsilon_edit.has_value() || spec.h_edit.has_value(),
            "edit spec: at least one boundary required");
    if (spec.epsilon_edit) {
        const Boundary& b = spec.epsilon_edit->boundary;
        require(b.space == LatentSpace::epsilon, "edit spec: epsilon slot holds a non-epsilon boundary");
        require(b.t_m == t_m, "edit spec: boundary t_m does not match the requested mixing step");
        require(b.dim() == m.data_dim(), "edit spec: epsilon boundary dimension mismatch");
        require(std::isfinite(spec.epsilon_edit->zeta), "edit spec: zeta must be finite");
    }
    if (spec.h_edit) {
        const Boundary& b = spec.h_edit->boundary;
        require(b.space == LatentSpace::h, "edit spec: h slot holds a non-h boundary");
        require(b.t_m == t_m, "edit spec: boundary t_m does not match the requested mixing step");
        require(b.dim() == m.bottleneck_dim(), "edit spec: h boundary dimension mismatch");
        require(std::isfinite(spec.h_edit->zeta), "edit spec: zeta must be finite");
    }
}

/// Stochastic denoise from state.t = t_m down to 0 along an even plan,
/// injecting h_override into the first `inject_steps` noise queries.
inline Trajectory stochastic_tail(const NoisePredictor& m, const NoiseSchedule& s,
                                  LatentState state, int n_steps,
                                  const std::optional<Vec>& h_override, int inject_steps,
                                  Rng& rng) {
    const int t_m = state.t;
    require(t_m >= 1, "stochastic tail: t_m must be >= 1");
    n_steps = std::min(n_steps, t_m);
    StepPlan plan = make_step_plan(s, n_steps, t_m, ChainDirection::denoise);

    Trajectory traj;
    traj.mode = TrajectoryMode::mixed;
    traj.states.push_back(state);
    int injected = 0;
    for (std::size_t i = plan.taus.size(); i-- > 1;) {
        const int t_prev = plan.taus[i - 1];
        const int t = state.t;
        const double sigma = implicit_sigma(s, t, t_prev, 1.0);

        Vec eps;
        if (h_override && injected < inject_steps) {
            eps = predict_noise_with_injection(m, state.x, t, *h_override);
            ++injected;
        } else {
            eps = predict_noise(m, state.x, t).noise;
        }

        const double ab_t = s.alpha_bar_at(t);
        const double ab_p = s.alpha_bar_at(t_prev);
        const double x0_scale = std::sqrt(ab_p) / std::sqrt(ab_t);
        const double x0_eps = std::sqrt(ab_p) * std::sqrt(1.0 - ab_t) / std::sqrt(ab_t);
        const double dir_scale = std::sqrt(std::max(0.0, 1.0 - ab_p - sigma * sigma));
        LatentState next;
        next.t = t_prev;
        next.source = state.source;
        next.x.resize(state.x.size());
        for (std::size_t j = 0; j < state.x.size(); ++j) {
            double v = x0_scale * state.x[j] + (dir_scale - x0_eps) * eps[j];
            if (sigma > 0.0) v += sigma * rng.normal();
            next.x[j] = v;
        }
        state = std::move(next);
        traj.states.push_back(state);
    }
    return traj;
}

/// Applies the spec at t_m: the epsilon latent is mutated at most once, and
/// the edited h vector for downstream injection is computed if requested.
inline EditOutcome apply_edits_and_denoise(const NoisePredictor& m, const NoiseSchedule& s,
                                           LatentState at_tm, const EditSpec& spec,
                                           int s_gen, Rng& rng) {
    EditOutcome out;
    out.latent_pre_edit = at_tm.x;

    std::optional<Vec> h_edited;
    if (spec.h_edit) {
        const Vec h_now = predict_noise(m, at_tm.x, at_tm.t).h;
        const double pre = signed_distance(spec.h_edit->boundary, h_now);
        h_edited = edit_latent(h_now, spec.h_edit->boundary, spec.h_edit->zeta, spec.mode);
        out.events.push_back({at_tm.t, LatentSpace::h, pre,
                              signed_distance(spec.h_edit->boundary, *h_edited)});
    }
    if (spec.epsilon_edit) {
        const double pre = signed_distance(spec.epsilon_edit->boundary, at_tm.x);
        at_tm.x = edit_latent(at_tm.x, spec.epsilon_edit->boundary, spec.epsilon_edit->zeta,
                              spec.mode);
        out.events.push_back({at_tm.t, LatentSpace::epsilon, pre,
                              signed_distance(spec.epsilon_edit->boundary, at_tm.x)});
    }
    out.latent_post_edit = at_tm.x;

    out.tail = stochastic_tail(m, s, at_tm, s_gen, h_edited,
                               spec.h_edit ? spec.h_injection.steps() : 0, rng);
    out.image = out.tail.final_state().x;
    return out;
}

} // namespace detail

/// Conditional editing: deterministic inversion of x0 up to t_m, a single
/// boundary-guided mutation there, then the stochastic tail down to 0.
inline EditOutcome boundary_diffusion_conditional(const NoisePredictor& m,
                                                  const NoiseSchedule& s, const Vec& x0,
                                                  const EditSpec& spec, int t_m, int s_inv,
                                                  int s_gen, Rng& rng) {
    require_trained(m, "boundary_diffusion_conditional");
    require(t_m >= 1 && t_m <= s.T, "boundary_diffusion_conditional: t_m out of range");
    detail::check_spec(spec, m, t_m);
    require(s_inv >= 1 && s_gen >= 1, "boundary_diffusion_conditional: step counts must be >= 1");

    StepPlan inv_plan = make_step_plan(s, std::min(s_inv, t_m), t_m, ChainDirection::invert);
    LatentState at_tm = ddim_invert(m, s, x0, inv_plan);

    EditOutcome out = detail::apply_edits_and_denoise(m, s, std::move(at_tm), spec, s_gen, rng);
    out.prefix.mode = TrajectoryMode::deterministic;  // inversion is the deterministic segment
    return out;
}

/// Unconditional semantic control: x_T drawn from the standard Gaussian,
/// deterministic denoise T -> t_m, edit, stochastic tail.
inline EditOutcome boundary_diffusion_unconditional(const NoisePredictor& m,
                                                    const NoiseSchedule& s,
                                                    const EditSpec& spec, int t_m, int s_top,
                                                    int s_gen, Rng& rng) {
    require_trained(m, "boundary_diffusion_unconditional");
    require(t_m >= 1 && t_m < s.T, "boundary_diffusion_unconditional: t_m out of range");
    detail::check_spec(spec, m, t_m);
    require(s_top >= 1 && s_gen >= 1, "boundary_diffusion_unconditional: step counts must be >= 1");

    Rng draw = rng.split(1);
    Rng tail_rng = rng.split(2);
    LatentState state{sample_standard_latent(m.data_dim(), draw), s.T, LatentSource::sampled};

    // deterministic segment T -> t_m on an even sub-plan
    Trajectory prefix;
    prefix.mode = TrajectoryMode::deterministic;
    prefix.states.push_back(state);
    const int span = s.T - t_m;
    const int n_top = std::min(s_top, span);
    for (int i = 1; i <= n_top; ++i) {
        const int target = s.T - static_cast<int>(std::llround(
                                      static_cast<double>(i) * span / static_cast<double>(n_top)));
        if (target >= state.t) continue;
        state = ddim_step(m, s, state, target, 0.0);
        prefix.states.push_back(state);
    }
    require(state.t == t_m, "boundary_diffusion_unconditional: prefix did not land on t_m");

    EditOutcome out = detail::apply_edits_and_denoise(m, s, std::move(state), spec, s_gen, tail_rng);
    out.prefix = std::move(prefix);
    return out;
}

struct SweepRow {
    double zeta = 0.0;
    Vec image;
    double oracle_score = 0.0;
    double nn_rmse = 0.0;
    bool degraded = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// One edited output per grid value with a shared stochastic tail, scored by
/// the supplied oracle statistic and flagged when the nearest-neighbor
/// distance to the reference set exceeds the degradation threshold.
inline SweepResult strength_sweep(const NoisePredictor& m, const NoiseSchedule& s, const Vec& x0,
                                  const Boundary& boundary, std::span<const double> zeta_grid,
                                  int t_m, int s_inv, int s_gen, Rng& rng,
                                  const std::function<double(const Vec&)>& oracle_score,
                                  std::span<const Vec> reference,
                                  double degradation_threshold) {
    require(zeta_grid.size() >= 2, "strength_sweep: grid needs at least 2 values");
    require(boundary.space == LatentSpace::epsilon, "strength_sweep: epsilon boundary required");

    const std::uint64_t tail_seed = rng.split(7).lineage();
    SweepResult res;
    for (double zeta : zeta_grid) {
        EditSpec spec;
        spec.epsilon_edit = BoundaryEdit{boundary, zeta};
        spec.mode = EditMode::set_distance;
        Rng tail(tail_seed);  // identical tail noise across the grid
        EditOutcome out = boundary_diffusion_conditional(m, s, x0, spec, t_m, s_inv, s_gen, tail);
        SweepRow row;
        row.zeta = zeta;
        row.oracle_score = oracle_score(out.image);
        row.nn_rmse = reference.empty() ? 0.0 : nearest_neighbor_rmse(out.image, reference);
        row.degraded = !reference.empty() && row.nn_rmse > degradation_threshold;
        row.image = std::move(out.image);
        res.rows.push_back(std::move(row));
    }
    return res;
}

struct MultiEditResult {
    EditOutcome outcome;
    std::vector<double> residual_distances;  // signed distance to each boundary after all edits
};

/// Sequential set_distance edits against every stacked boundary, in declared
/// order, at the single step t_m. Residual distances record how much earlier
/// targets moved when later non-orthogonal edits were applied.
inline MultiEditResult multi_attribute_edit(const NoisePredictor& m, const NoiseSchedule& s,
                                            const Vec& x0, const MultiBoundary& multi,
                                            std::span<const double> zetas, int t_m, int s_inv,
                                            int s_gen, Rng& rng) {
    require(multi.count() >= 1, "multi_attribute_edit: empty boundary stack");
    require(zetas.size() == multi.count(), "multi_attribute_edit: zeta count mismatch");
    require(multi.space == LatentSpace::epsilon, "multi_attribute_edit: epsilon boundaries required");
    require(multi.t_m == t_m, "multi_attribute_edit: stack t_m does not match");
    require_trained(m, "multi_attribute_edit");

    StepPlan inv_plan = make_step_plan(s, std::min(s_inv, t_m), t_m, ChainDirection::invert);
    LatentState at_tm = ddim_invert(m, s, x0, inv_plan);

    MultiEditResult res;
    res.outcome.latent_pre_edit = at_tm.x;
    for (std::size_t i = 0; i < multi.count(); ++i) {
        Boundary b;
        b.normal = multi.normals[i];
        b.bias = multi.biases[i];
        b.space = multi.space;
        b.t_m = multi.t_m;
        b.attribute = multi.attributes[i];
        const double pre = signed_distance(b, at_tm.x);
        at_tm.x = edit_latent(at_tm.x, b, zetas[i], EditMode::set_distance);
        res.outcome.events.push_back(
            {t_m, LatentSpace::epsilon, pre, signed_distance(b, at_tm.x)});
    }
    res.outcome.latent_post_edit = at_tm.x;
    for (std::size_t i = 0; i < multi.count(); ++i) {
        Boundary b;
        b.normal = multi.normals[i];
        b.bias = multi.biases[i];
        res.residual_distances.push_back(dot(b.normal, at_tm.x) + b.bias);
    }

    res.outcome.tail = detail::stochastic_tail(m, s, std::move(at_tm), s_gen, std::nullopt, 0, rng);
    res.outcome.image = res.outcome.tail.final_state().x;
    return res;
}

} // namespace bdk

#endif // BDK_EDITOR_HPP

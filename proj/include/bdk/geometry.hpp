#ifndef BDK_GEOMETRY_HPP
#define BDK_GEOMETRY_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/rng.hpp"
#include "bdk/trajectory.hpp"
#include "bdk/vec.hpp"

namespace bdk {

/// Gaussian radius estimate: sqrt of the mean squared sample length, with a
/// delta-method standard error from the variance of the squared lengths.
struct RadiusEstimate {
    double r = 0.0;
    int n_samples = 0;
    int d = 0;
    double std_error = 0.0;
};

inline RadiusEstimate radius_from_squared_lengths(std::span<const double> sq, int d) {
    require(!sq.empty(), "radius estimate: no samples");
    require(d >= 1, "radius estimate: dimension must be positive");
    RadiusEstimate est;
    est.n_samples = static_cast<int>(sq.size());
    est.d = d;
    const double m = mean(sq);
    est.r = std::sqrt(m);
    if (sq.size() >= 2) {
        const double se_mean = std::sqrt(variance(sq) / static_cast<double>(sq.size()));
        est.std_error = se_mean / (2.0 * est.r);
    } else {
        est.std_error = std::numeric_limits<double>::infinity();
    }
    return est;
}

inline RadiusEstimate estimate_radius(std::span<const Vec> samples) {
    require(!samples.empty(), "estimate_radius: empty input");
    const std::size_t d = samples.front().size();
    std::vector<double> sq;
    sq.reserve(samples.size());
    for (const Vec& x : samples) {
        require(x.size() == d, "estimate_radius: dimension mismatch across samples");
        sq.push_back(squared_norm(x));
    }
    return radius_from_squared_lengths(sq, static_cast<int>(d));
}

/// Streaming variant for dimensions too large to keep N samples in memory.
/// sample_fn(i, out) must fill out with the i-th sample.
inline RadiusEstimate estimate_radius_streaming(
    int d, int n, const std::function<void(int, Vec&)>& sample_fn) {
    require(n >= 1, "estimate_radius_streaming: n must be >= 1");
    require(d >= 1, "estimate_radius_streaming: d must be >= 1");
    std::vector<double> sq(static_cast<std::size_t>(n));
    Vec buf(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        sample_fn(i, buf);
        require(static_cast<int>(buf.size()) == d, "estimate_radius_streaming: dimension changed");
        sq[static_cast<std::size_t>(i)] = squared_norm(buf);
    }
    return radius_from_squared_lengths(sq, d);
}

/// Radius of N(0, I_d) estimated from n fresh draws on split substreams.
inline RadiusEstimate standard_normal_radius(int d, int n, const Rng& rng) {
    return estimate_radius_streaming(d, n, [&](int i, Vec& out) {
        Rng stream = rng.split(static_cast<std::uint64_t>(i));
        for (double& v : out) v = stream.normal();
    });
}

// ---------------------------------------------------------------------------
// Radius scans along the denoising trajectory
// ---------------------------------------------------------------------------

struct RadiusScanEntry {
    int step = 0;
    double r = 0.0;
    double std_error = 0.0;
    double delta_r = 0.0;  // r(step) - r(next recorded step below); see has_delta
    bool has_delta = false;
};

/// Radius per recorded step, ordered from the departure step downward.
/// delta_r at a step is the shift over the stride leaving that step, which is
/// the convention under which the detector labels the mixing step.
struct RadiusScan {
    std::vector<RadiusScanEntry> entries;
    int stride = 1;
    int n_samples = 0;
};

/// Builds a scan directly from (step, delta_r) rows, e.g. published tables.
inline RadiusScan scan_from_deltas(std::span<const int> steps, std::span<const double> deltas,
                                   int stride) {
    require(steps.size() == deltas.size(), "scan_from_deltas: length mismatch");
    require(!steps.empty(), "scan_from_deltas: empty rows");
    RadiusScan scan;
    scan.stride = stride;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        RadiusScanEntry e;
        e.step = steps[i];
        e.delta_r = deltas[i];
        e.has_delta = true;
        scan.entries.push_back(e);
    }
    return scan;
}

/// Runs each start through the full denoising chain and estimates the radius
/// at every recorded step. All starts must sit at the departure step T.
inline RadiusScan radius_scan(const NoisePredictor& m, const NoiseSchedule& s,
                              std::span<const LatentState> starts, TrajectoryMode mode,
                              StochasticKernel kernel, int stride, const Rng& rng) {
    require(starts.size() >= 1, "radius_scan: no starts");
    require(stride >= 1 && stride <= s.T, "radius_scan: bad stride");
    for (const auto& st : starts)
        require(st.t == s.T, "radius_scan: all starts must be at step T");
    require(mode != TrajectoryMode::mixed, "radius_scan: scan modes are pure");

    StepPlan plan = make_step_plan(s, s.T, s.T, ChainDirection::denoise);
    RunOptions opts;
    opts.mode = mode;
    opts.kernel = kernel;
    opts.record_stride = stride;

    // accumulate squared lengths per recorded step; identical record pattern
    // for every start, so index by position in the first trajectory
    std::vector<int> rec_steps;
    std::vector<std::vector<double>> sq_by_step;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        Rng stream = rng.split(static_cast<std::uint64_t>(i));
        Trajectory traj = run_trajectory(m, s, starts[i], plan, opts, stream);
        if (i == 0) {
            rec_steps.reserve(traj.states.size());
            for (const auto& st : traj.states) rec_steps.push_back(st.t);
            sq_by_step.resize(traj.states.size());
        }
        require(traj.states.size() == rec_steps.size(), "radius_scan: inconsistent recording");
        for (std::size_t k = 0; k < traj.states.size(); ++k)
            sq_by_step[k].push_back(squared_norm(traj.states[k].x));
    }
    require(rec_steps.size() >= 2, "radius_scan: fewer than 2 recorded steps");

    const int d = static_cast<int>(starts.front().x.size());
    RadiusScan scan;
    scan.stride = stride;
    scan.n_samples = static_cast<int>(starts.size());
    // trajectories record top-down already (entry step first)
    for (std::size_t k = 0; k < rec_steps.size(); ++k) {
        RadiusEstimate est = radius_from_squared_lengths(sq_by_step[k], d);
        RadiusScanEntry e;
        e.step = rec_steps[k];
        e.r = est.r;
        e.std_error = est.std_error;
        scan.entries.push_back(e);
    }
    for (std::size_t k = 0; k + 1 < scan.entries.size(); ++k) {
        scan.entries[k].delta_r = scan.entries[k].r - scan.entries[k + 1].r;
        scan.entries[k].has_delta = true;
    }
    return scan;
}

// ---------------------------------------------------------------------------
// Sphere geometry and concentration probes
// ---------------------------------------------------------------------------

struct SphereMeasure {
    double volume = 0.0;
    double area = 0.0;
    double log_volume = 0.0;
    double log_area = 0.0;
};

/// Unit-sphere surface area 2 pi^{d/2} / Gamma(d/2) and volume area/d,
/// evaluated through lgamma so large d degrades to underflow, not overflow.
inline SphereMeasure unit_sphere_volume_area(int d) {
    require(d >= 1, "unit_sphere_volume_area: d must be >= 1");
    SphereMeasure out;
    const double half_d = 0.5 * d;
    out.log_area = std::log(2.0) + half_d * std::log(std::numbers::pi) - std::lgamma(half_d);
    out.log_volume = out.log_area - std::log(static_cast<double>(d));
    out.area = std::exp(out.log_area);
    out.volume = std::exp(out.log_volume);
    return out;
}

struct SlabFraction {
    double fraction = 0.0;   // of the hemisphere volume above x1 = c/sqrt(d-1)
    double std_error = 0.0;
    double bound = 0.0;      // (2/c) exp(-c^2/2)
    int n = 0;
};

/// Monte Carlo over uniform points in the unit ball (Gaussian direction,
/// radius U^{1/d}); the hemisphere is exactly half the ball by symmetry.
inline SlabFraction hemisphere_slab_fraction(int d, double c, int n, Rng& rng) {
    require(d >= 2, "hemisphere_slab_fraction: d must be >= 2");
    require(c > 0.0, "hemisphere_slab_fraction: c must be positive");
    require(n >= 1, "hemisphere_slab_fraction: n must be >= 1");

    const double threshold = c / std::sqrt(static_cast<double>(d) - 1.0);
    Vec x(static_cast<std::size_t>(d));
    long hits = 0;
    for (int i = 0; i < n; ++i) {
        for (double& v : x) v = rng.normal();
        const double nrm = norm(x);
        const double radius = std::pow(rng.uniform(), 1.0 / d);
        if (nrm > 0.0 && x[0] / nrm * radius >= threshold) ++hits;
    }
    const double p = static_cast<double>(hits) / n;
    SlabFraction out;
    out.n = n;
    out.fraction = 2.0 * p;
    out.std_error = 2.0 * std::sqrt(std::max(0.0, p * (1.0 - p)) / n);
    out.bound = (2.0 / c) * std::exp(-0.5 * c * c);
    return out;
}

struct ProjectionCheck {
    double failure_rate = 0.0;  // empirical P(| |w|^2 - k/d | >= eps k/d)
    double bound = 0.0;         // 4 exp(-k eps^2 / 64)
    double mean_sq_len = 0.0;
    int n = 0;
};

/// Projects random unit vectors onto the first k coordinates (equivalent in
/// law to projecting a fixed unit vector onto a random k-subspace).
inline ProjectionCheck random_projection_check(int d, int k, int n, double eps, Rng& rng) {
    require(k >= 1 && k <= d, "random_projection_check: need 1 <= k <= d");
    require(n >= 1, "random_projection_check: n must be >= 1");
    require(eps > 0.0 && eps <= 1.0, "random_projection_check: eps must be in (0,1]");

    const double expected = static_cast<double>(k) / d;
    Vec x(static_cast<std::size_t>(d));
    long failures = 0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        for (double& v : x) v = rng.normal();
        const double total = squared_norm(x);
        double head = 0.0;
        for (int j = 0; j < k; ++j) head += x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
        const double sq = head / total;
        sum_sq += sq;
        if (std::abs(sq - expected) >= eps * expected) ++failures;
    }
    ProjectionCheck out;
    out.n = n;
    out.failure_rate = static_cast<double>(failures) / n;
    out.bound = 4.0 * std::exp(-static_cast<double>(k) * eps * eps / 64.0);
    out.mean_sq_len = sum_sq / n;
    return out;
}

/// Spherical interpolation with the norm interpolated linearly between the
/// endpoint norms. Zero or antipodal endpoints have no defined arc.
inline Vec slerp(std::span<const double> a, std::span<const double> b, double lambda) {
    require(a.size() == b.size(), "slerp: dimension mismatch");
    require(lambda >= 0.0 && lambda <= 1.0, "slerp: lambda must be in [0,1]");
    const double na = norm(a), nb = norm(b);
    require(na > 0.0 && nb > 0.0, "slerp: zero vector endpoint");

    double cosang = dot(a, b) / (na * nb);
    cosang = std::max(-1.0, std::min(1.0, cosang));
    require(cosang > -1.0 + 1e-12, "slerp: antipodal endpoints, angle undefined");

    const double target_norm = (1.0 - lambda) * na + lambda * nb;
    const double theta = std::acos(cosang);
    Vec out(a.size());
    if (theta < 1e-12) {
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / na * target_norm;
        return out;
    }
    const double sa = std::sin((1.0 - lambda) * theta) / std::sin(theta);
    const double sb = std::sin(lambda * theta) / std::sin(theta);
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = (sa * a[i] / na + sb * b[i] / nb) * target_norm;
    return out;
}

inline double nearest_neighbor_rmse(std::span<const double> image, std::span<const Vec> dataset) {
    require(!dataset.empty(), "nearest_neighbor_rmse: empty reference set");
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& ref : dataset) best = std::min(best, rmse(image, ref));
    return best;
}

// ---------------------------------------------------------------------------
// Distance effect: interpolate departure latents, denoise, score
// ---------------------------------------------------------------------------

struct DistanceEffectCurve {
    std::string source;            // "sampled", "inverted", "inverted+mixed"
    std::vector<double> lambdas;
    std::vector<double> mean_nn;   // nearest-neighbor rmse averaged over pairs
};

struct DistanceEffectReport {
    std::vector<DistanceEffectCurve> curves;
};

struct DistanceEffectConfig {
    int n_pairs = 8;
    int lambda_points = 5;
    int t_m = 0;              // for the mixed-tail variant; 0 disables it
    std::uint64_t seed = 1;
};

/// Interpolates pairs of departure latents from both sources, denoises each
/// grid point deterministically, and scores outputs against the dataset.
/// When t_m > 0, an extra curve denoises the inverted pairs with the
/// stochastic tail below t_m.
inline DistanceEffectReport distance_effect_experiment(const NoisePredictor& m,
                                                       const NoiseSchedule& s,
                                                       std::span<const Vec> dataset,
                                                       const DistanceEffectConfig& cfg) {
    require_trained(m, "distance_effect_experiment");
    require(cfg.n_pairs >= 1, "distance_effect_experiment: need at least one pair");
    require(cfg.lambda_points >= 2, "distance_effect_experiment: need at least two grid points");
    require(dataset.size() >= 2 * static_cast<std::size_t>(cfg.n_pairs),
            "distance_effect_experiment: dataset too small for the requested pairs");

    const int d = m.data_dim();
    Rng root(cfg.seed);
    StepPlan denoise_plan = make_step_plan(s, s.T, s.T, ChainDirection::denoise);
    StepPlan invert_plan = make_step_plan(s, s.T, s.T, ChainDirection::invert);

    std::vector<double> lambdas(static_cast<std::size_t>(cfg.lambda_points));
    for (int i = 0; i < cfg.lambda_points; ++i)
        lambdas[static_cast<std::size_t>(i)] = static_cast<double>(i) / (cfg.lambda_points - 1);

    auto denoise_score = [&](const Vec& latent, TrajectoryMode mode, Rng tail_rng) {
        LatentState start{latent, s.T, LatentSource::intermediate};
        RunOptions opts;
        opts.mode = mode;
        opts.kernel = StochasticKernel::implicit_eta1;
        if (mode == TrajectoryMode::mixed) opts.t_m = cfg.t_m;
        opts.record_stride = s.T;  // endpoints only
        Trajectory traj = run_trajectory(m, s, start, denoise_plan, opts, tail_rng);
        return nearest_neighbor_rmse(traj.final_state().x, dataset);
    };

    auto run_source = [&](const std::string& name, bool inverted, TrajectoryMode mode) {
        DistanceEffectCurve curve;
        curve.source = name;
        curve.lambdas = lambdas;
        curve.mean_nn.assign(lambdas.size(), 0.0);
        for (int pair = 0; pair < cfg.n_pairs; ++pair) {
            Rng pair_rng = root.split(inverted ? 2u : 1u).split(static_cast<std::uint64_t>(pair));
            Vec end_a, end_b;
            if (inverted) {
                end_a = ddim_invert(m, s, dataset[2 * static_cast<std::size_t>(pair)], invert_plan).x;
                end_b = ddim_invert(m, s, dataset[2 * static_cast<std::size_t>(pair) + 1], invert_plan).x;
            } else {
                end_a = sample_standard_latent(d, pair_rng);
                end_b = sample_standard_latent(d, pair_rng);
            }
            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                Vec latent = slerp(end_a, end_b, lambdas[li]);
                curve.mean_nn[li] +=
                    denoise_score(latent, mode, pair_rng.split(100 + static_cast<std::uint64_t>(li)));
            }
        }
        for (double& v : curve.mean_nn) v /= cfg.n_pairs;
        return curve;
    };

    DistanceEffectReport report;
    report.curves.push_back(run_source("sampled", false, TrajectoryMode::deterministic));
    report.curves.push_back(run_source("inverted", true, TrajectoryMode::deterministic));
    if (cfg.t_m > 0)
        report.curves.push_back(run_source("inverted+mixed", true, TrajectoryMode::mixed));
    return report;
}

} // namespace bdk

#endif // BDK_GEOMETRY_HPP

#ifndef BDK_MIXING_HPP
#define BDK_MIXING_HPP

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/geometry.hpp"
#include "bdk/trajectory.hpp"

namespace bdk {

/// How a radius scan is turned into a mixing step.
///
/// The published detection rule is an absolute shift threshold of about 4 at
/// r ~ 110; across resolutions the published firing shifts are all about 4%
/// of the departure radius, so `relative` divides each shift by the scan's
/// reference radius before thresholding. Short chains re-equilibrate
/// off-shell departures within the first stride; `burn_in_strides` excludes
/// that many leading shifts from detection. `drops_only` ignores radius
/// increases (equilibration overshoot); the knee is always a contraction.
struct MixingDetectionPolicy {
    double threshold = 4.0;
    bool normalize_per_100 = false;  // rescale shifts to a 100-step stride
    bool drops_only = false;
    bool relative = false;           // threshold as a fraction of the reference radius
    int burn_in_strides = 0;
};

/// Result of a mixing-step search over one radius scan. t_m is empty when no
/// recorded shift reaches the threshold.
struct MixingReport {
    std::optional<int> t_m;
    RadiusScan scan;
    MixingDetectionPolicy policy;
    double reference_r = 0.0;  // radius the relative mode scales by
    bool wide_std_error = false;  // raised when the scan has < 2 samples
};

/// Scans from the departure step downward and returns the first recorded
/// step whose radius shift reaches the threshold. Detection halts at the
/// first firing; radii recorded below it are reported but never consulted,
/// since the latent distribution past the mixing step is no longer
/// Gaussian-like.
inline MixingReport find_mixing_step(const RadiusScan& scan, const MixingDetectionPolicy& policy) {
    int populated = 0;
    for (const auto& e : scan.entries) populated += e.has_delta ? 1 : 0;
    require(populated >= 2, "find_mixing_step: need at least 2 steps with a radius shift");
    require(policy.threshold > 0.0, "find_mixing_step: threshold must be positive");
    require(policy.burn_in_strides >= 0, "find_mixing_step: negative burn-in");
    require(scan.stride >= 1, "find_mixing_step: scan stride must be >= 1");

    MixingReport report;
    report.scan = scan;
    report.policy = policy;
    report.wide_std_error = scan.n_samples > 0 && scan.n_samples < 2;

    const double scale = policy.normalize_per_100 ? 100.0 / scan.stride : 1.0;
    int index = 0;
    for (const auto& e : scan.entries) {
        const int position = index++;
        if (!e.has_delta || position < policy.burn_in_strides) continue;
        if (report.reference_r == 0.0) report.reference_r = e.r;
        double shift = e.delta_r * scale;
        if (policy.drops_only && shift <= 0.0) continue;
        shift = std::abs(shift);
        if (policy.relative) {
            require(report.reference_r > 0.0, "find_mixing_step: relative mode needs radii");
            shift /= report.reference_r;
        }
        if (shift >= policy.threshold) {
            report.t_m = e.step;
            break;
        }
    }
    return report;
}

/// The published rule: first step from the top whose |delta r| crosses the
/// threshold, optionally rescaled to a 100-step stride.
inline MixingReport find_mixing_step(const RadiusScan& scan, double threshold,
                                     bool normalize_per_100 = false) {
    MixingDetectionPolicy policy;
    policy.threshold = threshold;
    policy.normalize_per_100 = normalize_per_100;
    return find_mixing_step(scan, policy);
}

/// The four departure-source x sampler combinations of a cross-validated
/// mixing search, plus agreement diagnostics.
struct MixingCrossValidation {
    std::map<std::string, MixingReport> combos;
    bool all_detected = false;
    bool agree_within_one_stride = false;
    std::optional<int> consensus_t_m;  // set when all four agree exactly
    std::optional<int> agreed_t_m;     // min detection when they agree up to one stride:
                                       // the largest step every combo places at or past its knee
    int stride = 1;
    MixingDetectionPolicy policy;
};

inline const char* to_string(TrajectoryMode mode) {
    switch (mode) {
        case TrajectoryMode::deterministic: return "deterministic";
        case TrajectoryMode::stochastic: return "stochastic";
        case TrajectoryMode::mixed: return "mixed";
    }
    return "?";
}

/// Runs radius scans for {sampled, inverted} departures x {stochastic,
/// deterministic} samplers and detects the mixing step in each. The mixing
/// step is a property of the trained model, so the four detections are
/// expected to agree up to one stride. Stochastic combos use the classic
/// posterior kernel; deterministic combos the implicit sampler.
inline MixingCrossValidation cross_validate_mixing(const NoisePredictor& m,
                                                   const NoiseSchedule& s,
                                                   std::span<const Vec> dataset, int n_samples,
                                                   int stride,
                                                   const MixingDetectionPolicy& policy,
                                                   const Rng& rng) {
    require(n_samples >= 1, "cross_validate_mixing: n_samples must be >= 1");
    require(dataset.size() >= static_cast<std::size_t>(n_samples),
            "cross_validate_mixing: dataset smaller than n_samples");

    const int d = m.data_dim();
    Rng sample_rng = rng.split(1);

    std::vector<LatentState> sampled;
    sampled.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        Rng stream = sample_rng.split(static_cast<std::uint64_t>(i));
        sampled.push_back({sample_standard_latent(d, stream), s.T, LatentSource::sampled});
    }

    StepPlan invert_plan = make_step_plan(s, s.T, s.T, ChainDirection::invert);
    std::vector<LatentState> inverted;
    inverted.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i)
        inverted.push_back(ddim_invert(m, s, dataset[static_cast<std::size_t>(i)], invert_plan));

    MixingCrossValidation cv;
    cv.stride = stride;
    cv.policy = policy;

    struct Combo {
        const char* name;
        const std::vector<LatentState>* starts;
        TrajectoryMode mode;
        std::uint64_t stream;
    };
    const Combo combos[] = {
        {"sampled+stochastic", &sampled, TrajectoryMode::stochastic, 10},
        {"sampled+deterministic", &sampled, TrajectoryMode::deterministic, 11},
        {"inverted+stochastic", &inverted, TrajectoryMode::stochastic, 12},
        {"inverted+deterministic", &inverted, TrajectoryMode::deterministic, 13},
    };

    int lo = 0, hi = 0;
    bool first = true;
    cv.all_detected = true;
    for (const Combo& c : combos) {
        RadiusScan scan = radius_scan(m, s, *c.starts, c.mode,
                                      StochasticKernel::ancestral_ddpm, stride, rng.split(c.stream));
        MixingReport rep = find_mixing_step(scan, policy);
        if (!rep.t_m.has_value()) {
            cv.all_detected = false;
        } else if (first) {
            lo = hi = *rep.t_m;
            first = false;
        } else {
            lo = std::min(lo, *rep.t_m);
            hi = std::max(hi, *rep.t_m);
        }
        cv.combos.emplace(c.name, std::move(rep));
    }
    if (cv.all_detected) {
        cv.agree_within_one_stride = (hi - lo) <= stride;
        if (hi == lo) cv.consensus_t_m = lo;
        if (cv.agree_within_one_stride) cv.agreed_t_m = lo;
    }
    return cv;
}

/// Published-rule cross-validation with a flat threshold.
inline MixingCrossValidation cross_validate_mixing(const NoisePredictor& m,
                                                   const NoiseSchedule& s,
                                                   std::span<const Vec> dataset, int n_samples,
                                                   int stride, double threshold,
                                                   bool normalize_per_100, const Rng& rng,
                                                   int burn_in_strides = 1) {
    MixingDetectionPolicy policy;
    policy.threshold = threshold;
    policy.normalize_per_100 = normalize_per_100;
    policy.burn_in_strides = burn_in_strides;
    return cross_validate_mixing(m, s, dataset, n_samples, stride, policy, rng);
}

} // namespace bdk

#endif // BDK_MIXING_HPP

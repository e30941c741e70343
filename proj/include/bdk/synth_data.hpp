#ifndef BDK_SYNTH_DATA_HPP
#define BDK_SYNTH_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/io.hpp"
#include "bdk/rng.hpp"
#include "bdk/vec.hpp"

namespace bdk {

/// Procedural sprite images in [-1,1]^d with exactly known binary attributes:
///   marker    - bright square patch present / absent
///   stripe    - horizontal / vertical stripe orientation
///   intensity - bright / dark background class
struct SpriteConfig {
    int side = 16;
    int channels = 1;
    std::vector<std::string> attributes = {"marker", "stripe", "intensity"};
    int position_jitter = 1;        // marker placement, in pixels
    double amplitude_jitter = 0.05; // background level noise
    double pixel_noise = 0.02;
    std::uint64_t seed = 1;

    int dim() const { return side * side * channels; }
};

namespace sprite_constants {
// generator levels
inline constexpr double kBaseBright = 0.25;
inline constexpr double kBaseDark = -0.25;
inline constexpr double kStripeAmplitude = 0.35;
inline constexpr int kStripePeriod = 4;
inline constexpr double kMarkerValue = 0.95;
inline constexpr int kMarkerSize = 6;
// oracle thresholds; the gap between them is the dead band
// (clean statistics: marker-present windows read ~0.94, absent ~0.39)
inline constexpr double kMarkerPositive = 0.52;
inline constexpr double kMarkerNegative = 0.46;
inline constexpr double kStripeMargin = 0.3;
inline constexpr double kIntensityMargin = 0.12;
inline constexpr double kBlankRange = 0.3;  // below this dynamic range: undecided
} // namespace sprite_constants

struct SpriteDataset {
    SpriteConfig config;
    std::vector<Vec> images;
    std::map<std::string, std::vector<int>> labels;  // +1 / -1 per image

    int dim() const { return config.dim(); }
    std::size_t size() const { return images.size(); }
};

inline bool is_known_attribute(const std::string& a) {
    return a == "marker" || a == "stripe" || a == "intensity";
}

namespace detail {

inline void render_sprite(const SpriteConfig& cfg, int marker, int stripe, int intensity,
                          Rng& rng, Vec& out) {
    namespace sc = sprite_constants;
    const int side = cfg.side;
    const double base = (intensity > 0 ? sc::kBaseBright : sc::kBaseDark) +
                        rng.uniform(-cfg.amplitude_jitter, cfg.amplitude_jitter);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    int mx = 0, my = 0;
    if (marker > 0) {
        const int center = (side - sc::kMarkerSize) / 2;
        const int jx = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * cfg.position_jitter + 1))) -
                       cfg.position_jitter;
        const int jy = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * cfg.position_jitter + 1))) -
                       cfg.position_jitter;
        mx = std::clamp(center + jx, 0, side - sc::kMarkerSize);
        my = std::clamp(center + jy, 0, side - sc::kMarkerSize);
    }

    out.assign(static_cast<std::size_t>(cfg.dim()), 0.0);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const int along = stripe > 0 ? y : x;
            double v = base + sc::kStripeAmplitude *
                                  std::cos(2.0 * std::numbers::pi * along / sc::kStripePeriod + phase);
            if (marker > 0 && x >= mx && x < mx + sc::kMarkerSize && y >= my &&
                y < my + sc::kMarkerSize)
                v = sc::kMarkerValue;
            v += cfg.pixel_noise * rng.normal();
            v = std::clamp(v, -1.0, 1.0);
            for (int c = 0; c < cfg.channels; ++c)
                out[static_cast<std::size_t>(c) * side * side +
                    static_cast<std::size_t>(y) * side + x] = v;
        }
    }
}

/// Per-pixel channel mean as a side x side plane.
inline Vec luminance(const Vec& image, const SpriteConfig& cfg) {
    const int plane = cfg.side * cfg.side;
    Vec lum(static_cast<std::size_t>(plane), 0.0);
    for (int c = 0; c < cfg.channels; ++c)
        for (int i = 0; i < plane; ++i)
            lum[static_cast<std::size_t>(i)] +=
                image[static_cast<std::size_t>(c) * plane + i] / cfg.channels;
    return lum;
}

} // namespace detail

/// Balanced by construction: each attribute gets exactly floor(n/2) positive
/// labels, independently shuffled. Bitwise deterministic in config.seed.
inline SpriteDataset generate_sprite_dataset(const SpriteConfig& cfg, int n) {
    require(n >= 1, "generate_sprite_dataset: n must be >= 1");
    require(cfg.side >= 8, "generate_sprite_dataset: side must be >= 8");
    require(cfg.channels == 1 || cfg.channels == 3,
            "generate_sprite_dataset: channels must be 1 or 3");
    require(!cfg.attributes.empty(), "generate_sprite_dataset: need at least one attribute");
    for (const auto& a : cfg.attributes)
        require(is_known_attribute(a), "generate_sprite_dataset: unknown attribute '" + a + "'");

    Rng root(cfg.seed);
    SpriteDataset ds;
    ds.config = cfg;

    auto balanced_labels = [&](std::uint64_t stream) {
        std::vector<int> lab(static_cast<std::size_t>(n), -1);
        for (int i = 0; i < n / 2; ++i) lab[static_cast<std::size_t>(i)] = 1;
        Rng r = root.split(stream);
        for (std::size_t i = lab.size(); i > 1; --i)
            std::swap(lab[i - 1], lab[r.below(i)]);
        return lab;
    };

    // all three attributes are always generated; unlisted ones just carry no labels
    const std::vector<int> marker = balanced_labels(21);
    const std::vector<int> stripe = balanced_labels(22);
    const std::vector<int> intensity = balanced_labels(23);

    ds.images.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng img_rng = root.split(10).split(static_cast<std::uint64_t>(i));
        detail::render_sprite(cfg, marker[static_cast<std::size_t>(i)],
                              stripe[static_cast<std::size_t>(i)],
                              intensity[static_cast<std::size_t>(i)], img_rng,
                              ds.images[static_cast<std::size_t>(i)]);
    }
    for (const auto& a : cfg.attributes) {
        if (a == "marker") ds.labels[a] = marker;
        if (a == "stripe") ds.labels[a] = stripe;
        if (a == "intensity") ds.labels[a] = intensity;
    }
    return ds;
}

enum class OracleVerdict { positive, negative, undecided };

/// Continuous statistic behind each oracle decision. Exposed so strength
/// sweeps can plot a number instead of a verdict.
inline double attribute_statistic(const Vec& image, const SpriteConfig& cfg,
                                  const std::string& attribute) {
    require(static_cast<int>(image.size()) == cfg.dim(), "attribute_statistic: dimension mismatch");
    require(is_known_attribute(attribute), "attribute_statistic: unknown attribute '" + attribute + "'");
    namespace sc = sprite_constants;
    const int side = cfg.side;
    const Vec lum = detail::luminance(image, cfg);

    if (attribute == "marker") {
        // brightest marker-sized window mean
        double best = -2.0;
        for (int y = 0; y + sc::kMarkerSize <= side; ++y) {
            for (int x = 0; x + sc::kMarkerSize <= side; ++x) {
                double acc = 0.0;
                for (int dy = 0; dy < sc::kMarkerSize; ++dy)
                    for (int dx = 0; dx < sc::kMarkerSize; ++dx)
                        acc += lum[static_cast<std::size_t>(y + dy) * side + (x + dx)];
                best = std::max(best, acc / (sc::kMarkerSize * sc::kMarkerSize));
            }
        }
        return best;
    }
    if (attribute == "stripe") {
        // orientation contrast at the stripe frequency; a localized patch
        // barely registers in the period-4 mode of either profile
        std::vector<double> row_mean(static_cast<std::size_t>(side), 0.0);
        std::vector<double> col_mean(static_cast<std::size_t>(side), 0.0);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                const double v = lum[static_cast<std::size_t>(y) * side + x];
                row_mean[static_cast<std::size_t>(y)] += v / side;
                col_mean[static_cast<std::size_t>(x)] += v / side;
            }
        auto mode_energy = [&](const std::vector<double>& prof) {
            double re = 0.0, im = 0.0;
            for (int i = 0; i < side; ++i) {
                const double phase = 2.0 * std::numbers::pi * i / sc::kStripePeriod;
                re += prof[static_cast<std::size_t>(i)] * std::cos(phase);
                im += prof[static_cast<std::size_t>(i)] * std::sin(phase);
            }
            return re * re + im * im;
        };
        const double eh = mode_energy(row_mean), ev = mode_energy(col_mean);
        return (eh - ev) / (eh + ev + 1e-12);
    }
    // intensity: symmetric trimmed mean; the stripe pattern is symmetric
    // around the base level and the marker patch falls inside the trim
    Vec sorted = lum;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t trim = sorted.size() * 3 / 20;  // 15% each side
    double acc = 0.0;
    for (std::size_t i = trim; i < sorted.size() - trim; ++i) acc += sorted[i];
    return acc / static_cast<double>(sorted.size() - 2 * trim);
}

inline OracleVerdict attribute_oracle(const Vec& image, const SpriteConfig& cfg,
                                      const std::string& attribute) {
    require(static_cast<int>(image.size()) == cfg.dim(), "attribute_oracle: dimension mismatch");
    require(is_known_attribute(attribute), "attribute_oracle: unknown attribute '" + attribute + "'");
    namespace sc = sprite_constants;

    // degenerate (near-constant) images carry no attribute signal
    double lo = image[0], hi = image[0];
    for (double v : image) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < sc::kBlankRange) return OracleVerdict::undecided;

    const double stat = attribute_statistic(image, cfg, attribute);
    if (attribute == "marker") {
        if (stat >= sc::kMarkerPositive) return OracleVerdict::positive;
        if (stat <= sc::kMarkerNegative) return OracleVerdict::negative;
        return OracleVerdict::undecided;
    }
    if (attribute == "stripe") {
        if (stat >= sc::kStripeMargin) return OracleVerdict::positive;
        if (stat <= -sc::kStripeMargin) return OracleVerdict::negative;
        return OracleVerdict::undecided;
    }
    const double mid = 0.5 * (sprite_constants::kBaseBright + sprite_constants::kBaseDark);
    if (stat >= mid + sc::kIntensityMargin) return OracleVerdict::positive;
    if (stat <= mid - sc::kIntensityMargin) return OracleVerdict::negative;
    return OracleVerdict::undecided;
}

// ---------------------------------------------------------------------------
// Dataset file: magic "BDKD", version, config echo, labels, float32 payload,
// trailing checksum.
// ---------------------------------------------------------------------------

inline constexpr char kDatasetMagic[4] = {'B', 'D', 'K', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

inline void save_dataset(const SpriteDataset& ds, const std::string& path) {
    BinaryWriter w;
    w.write_bytes(kDatasetMagic, 4);
    w.write_u32(kDatasetVersion);
    w.write_i32(ds.config.side);
    w.write_i32(ds.config.channels);
    w.write_i32(ds.config.position_jitter);
    w.write_f64(ds.config.amplitude_jitter);
    w.write_f64(ds.config.pixel_noise);
    w.write_u64(ds.config.seed);
    w.write_u32(static_cast<std::uint32_t>(ds.images.size()));
    w.write_u32(static_cast<std::uint32_t>(ds.labels.size()));
    for (const auto& [name, labels] : ds.labels) {
        w.write_string(name);
        for (int v : labels) w.write_i32(v);
    }
    for (const Vec& img : ds.images)
        for (double v : img) w.write_f32(static_cast<float>(v));
    w.save_with_checksum(path);
}

inline SpriteDataset load_dataset(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    char magic[4];
    r.read_bytes(magic, 4);
    if (std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw IoError("dataset magic mismatch: not a dataset file");
    const std::uint32_t version = r.read_u32();
    if (version != kDatasetVersion)
        throw IoError("dataset version mismatch: got " + std::to_string(version));
    r.verify_trailing_checksum();

    SpriteDataset ds;
    ds.config.side = r.read_i32();
    ds.config.channels = r.read_i32();
    ds.config.position_jitter = r.read_i32();
    ds.config.amplitude_jitter = r.read_f64();
    ds.config.pixel_noise = r.read_f64();
    ds.config.seed = r.read_u64();
    const std::uint32_t n = r.read_u32();
    const std::uint32_t n_attrs = r.read_u32();
    ds.config.attributes.clear();
    for (std::uint32_t a = 0; a < n_attrs; ++a) {
        const std::string name = r.read_string();
        ds.config.attributes.push_back(name);
        std::vector<int> labels(n);
        for (auto& v : labels) v = r.read_i32();
        ds.labels[name] = std::move(labels);
    }
    ds.images.resize(n);
    for (auto& img : ds.images) {
        img.resize(static_cast<std::size_t>(ds.config.dim()));
        for (double& v : img) v = static_cast<double>(r.read_f32());
    }
    return ds;
}

} // namespace bdk

#endif // BDK_SYNTH_DATA_HPP

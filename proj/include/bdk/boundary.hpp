#ifndef BDK_BOUNDARY_HPP
#define BDK_BOUNDARY_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/io.hpp"
#include "bdk/rng.hpp"
#include "bdk/trajectory.hpp"
#include "bdk/vec.hpp"

namespace bdk {

enum class LatentSpace { epsilon, h };

inline const char* to_string(LatentSpace s) {
    return s == LatentSpace::epsilon ? "epsilon" : "h";
}

inline LatentSpace latent_space_from_string(const std::string& s) {
    if (s == "epsilon") return LatentSpace::epsilon;
    if (s == "h") return LatentSpace::h;
    throw ValidationError("unknown latent space '" + s + "'");
}

/// Semantic hyperplane: unit normal plus bias, tagged with the attribute,
/// the latent space it lives in, and the chain step it was fitted at.
struct Boundary {
    Vec normal;
    double bias = 0.0;
    std::string attribute;
    LatentSpace space = LatentSpace::epsilon;
    int t_m = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;

    int dim() const { return static_cast<int>(normal.size()); }
};

struct MultiBoundary {
    std::vector<Vec> normals;
    std::vector<double> biases;
    std::vector<std::string> attributes;
    LatentSpace space = LatentSpace::epsilon;
    int t_m = 0;
    std::vector<std::vector<double>> pairwise_cosine;

    std::size_t count() const { return normals.size(); }
};

/// Latents at a fixed step with labels carried over from the raw images.
struct LatentDataset {
    std::vector<Vec> latents;
    std::vector<int> labels;  // +1 / -1
    std::string attribute;
    LatentSpace space = LatentSpace::epsilon;
    int t_m = 0;
};

/// Sign-sensitive distance n.x + bias.
inline double signed_distance(const Boundary& b, std::span<const double> x) {
    require(x.size() == b.normal.size(), "signed_distance: dimension mismatch");
    return dot(b.normal, x) + b.bias;
}

/// Inverts each labeled image deterministically to t_m; stores either the
/// latent itself or the bottleneck activation evaluated there.
inline LatentDataset assemble_latent_dataset(const NoisePredictor& m, const NoiseSchedule& s,
                                             std::span<const Vec> images,
                                             std::span<const int> labels,
                                             const std::string& attribute, int t_m,
                                             LatentSpace space, int inversion_steps = 0) {
    require(!images.empty(), "assemble_latent_dataset: no images");
    require(images.size() == labels.size(), "assemble_latent_dataset: missing labels");
    require(t_m >= 1 && t_m <= s.T, "assemble_latent_dataset: t_m out of range");
    require_trained(m, "assemble_latent_dataset");
    for (int v : labels)
        require(v == 1 || v == -1, "assemble_latent_dataset: labels must be +1/-1");

    if (inversion_steps <= 0) inversion_steps = t_m;
    StepPlan plan = make_step_plan(s, inversion_steps, t_m, ChainDirection::invert);

    LatentDataset ds;
    ds.attribute = attribute;
    ds.space = space;
    ds.t_m = t_m;
    ds.labels.assign(labels.begin(), labels.end());
    ds.latents.reserve(images.size());
    for (const Vec& img : images) {
        LatentState st = ddim_invert(m, s, img, plan);
        if (space == LatentSpace::h) {
            ds.latents.push_back(predict_noise(m, st.x, t_m).h);
        } else {
            ds.latents.push_back(std::move(st.x));
        }
    }
    return ds;
}

struct SvmConfig {
    int epochs = 60;
    double lambda = 1e-4;
    std::uint64_t seed = 1;
    double holdout_fraction = 0.2;
    bool fit_bias = true;
};

namespace detail {

inline double split_accuracy(std::span<const Vec> xs, std::span<const int> ys,
                             std::span<const std::size_t> idx, const Vec& w, double b) {
    if (idx.empty()) return 0.0;
    int correct = 0;
    for (std::size_t i : idx) {
        const double score = dot(w, xs[i]) + b;
        const int pred = score >= 0.0 ? 1 : -1;
        if (pred == ys[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

} // namespace detail

/// Hinge-loss linear separator trained by projected stochastic subgradient
/// descent with step 1/(lambda t). The returned normal is unit length with
/// the bias rescaled to match, so signed distances are in latent units.
/// Accuracies come from a fixed seeded holdout split.
inline Boundary fit_boundary(const LatentDataset& ds, const SvmConfig& cfg = {}) {
    require(ds.latents.size() == ds.labels.size(), "fit_boundary: labels/latents mismatch");
    require(ds.latents.size() >= 2, "fit_boundary: need at least 2 samples");
    require(cfg.lambda > 0.0, "fit_boundary: lambda must be positive");
    require(cfg.epochs >= 1, "fit_boundary: epochs must be >= 1");
    require(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0,
            "fit_boundary: holdout fraction must be in [0,1)");
    bool has_pos = false, has_neg = false;
    for (int y : ds.labels) {
        has_pos |= (y == 1);
        has_neg |= (y == -1);
    }
    require(has_pos && has_neg, "fit_boundary: dataset contains a single class");

    const std::size_t n = ds.latents.size();
    const std::size_t dim = ds.latents.front().size();
    for (const Vec& x : ds.latents)
        require(x.size() == dim, "fit_boundary: inconsistent latent dimensions");

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    const std::size_t n_test = static_cast<std::size_t>(
        std::floor(cfg.holdout_fraction * static_cast<double>(n)));
    std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    require(!train_idx.empty(), "fit_boundary: empty training split");

    Vec w(dim, 0.0);
    double b = 0.0;
    const double radius = 1.0 / std::sqrt(cfg.lambda);  // pegasos feasible ball
    std::size_t t = 1;
    std::vector<std::size_t> epoch_order = train_idx;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = epoch_order.size(); i > 1; --i)
            std::swap(epoch_order[i - 1], epoch_order[rng.below(i)]);
        for (std::size_t idx : epoch_order) {
            const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
            const Vec& x = ds.latents[idx];
            const double y = static_cast<double>(ds.labels[idx]);
            const double margin = y * (dot(w, x) + b);
            const double keep = 1.0 - eta * cfg.lambda;
            for (double& v : w) v *= keep;
            if (margin < 1.0) {
                axpy(eta * y, x, w);
                if (cfg.fit_bias) b += eta * y;
            }
            const double wn = norm(w);
            if (wn > radius) {
                const double shrink = radius / wn;
                for (double& v : w) v *= shrink;
                b *= shrink;
            }
            ++t;
        }
    }

    const double wn = norm(w);
    if (!(wn > 0.0) || !std::isfinite(wn))
        throw NumericError("fit_boundary: degenerate separator (zero or non-finite weights)");

    Boundary out;
    out.attribute = ds.attribute;
    out.space = ds.space;
    out.t_m = ds.t_m;
    out.train_accuracy = detail::split_accuracy(ds.latents, ds.labels, train_idx, w, b);
    out.test_accuracy =
        test_idx.empty() ? 0.0 : detail::split_accuracy(ds.latents, ds.labels, test_idx, w, b);
    out.normal = scaled(w, 1.0 / wn);
    out.bias = b / wn;
    return out;
}

/// Fraction of samples whose distance sign matches the label.
inline double evaluate_boundary(const Boundary& b, const LatentDataset& ds) {
    require(!ds.latents.empty(), "evaluate_boundary: empty dataset");
    require(ds.latents.size() == ds.labels.size(), "evaluate_boundary: labels/latents mismatch");
    require(ds.space == b.space, "evaluate_boundary: latent space mismatch");
    int correct = 0;
    for (std::size_t i = 0; i < ds.latents.size(); ++i) {
        const int pred = signed_distance(b, ds.latents[i]) >= 0.0 ? 1 : -1;
        if (pred == ds.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.latents.size());
}

inline MultiBoundary stack_boundaries(std::span<const Boundary> boundaries) {
    require(!boundaries.empty(), "stack_boundaries: no boundaries");
    MultiBoundary mb;
    mb.space = boundaries.front().space;
    mb.t_m = boundaries.front().t_m;
    const std::size_t dim = boundaries.front().normal.size();
    for (const Boundary& b : boundaries) {
        require(b.space == mb.space, "stack_boundaries: mixed latent spaces");
        require(b.t_m == mb.t_m, "stack_boundaries: mixed fitting steps");
        require(b.normal.size() == dim, "stack_boundaries: dimension mismatch");
        mb.normals.push_back(b.normal);
        mb.biases.push_back(b.bias);
        mb.attributes.push_back(b.attribute);
    }
    const std::size_t k = mb.normals.size();
    mb.pairwise_cosine.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            mb.pairwise_cosine[i][j] = dot(mb.normals[i], mb.normals[j]);
    return mb;
}

// ---------------------------------------------------------------------------
// Boundary file: line-oriented key/value text with a trailing checksum over
// the payload lines.
// ---------------------------------------------------------------------------

inline std::string boundary_to_text(const Boundary& b) {
    std::ostringstream out;
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "bdk-boundary v1\n";
    out << "attribute = " << b.attribute << "\n";
    out << "space = " << to_string(b.space) << "\n";
    out << "t_m = " << b.t_m << "\n";
    out << "dim = " << b.dim() << "\n";
    out << "bias = " << fmt(b.bias) << "\n";
    out << "train_accuracy = " << fmt(b.train_accuracy) << "\n";
    out << "test_accuracy = " << fmt(b.test_accuracy) << "\n";
    out << "normal =";
    for (double v : b.normal) out << " " << fmt(v);
    out << "\n";
    return out.str();
}

inline void save_boundary(const Boundary& b, const std::string& path) {
    std::string text = boundary_to_text(b);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    text += "checksum = ";
    text += buf;
    text += "\n";
    write_text_file(path, text);
}

inline Boundary load_boundary(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;

    if (!std::getline(in, line) || line != "bdk-boundary v1")
        throw IoError("boundary header mismatch: not a boundary file");

    Boundary b;
    int dim = -1;
    std::string checksum_hex;
    std::string payload = line + "\n";
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw IoError("boundary file: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        if (key == "checksum") {
            checksum_hex = value;
            break;
        }
        payload += line + "\n";
        if (key == "attribute") b.attribute = value;
        else if (key == "space") b.space = latent_space_from_string(value);
        else if (key == "t_m") b.t_m = std::stoi(value);
        else if (key == "dim") dim = std::stoi(value);
        else if (key == "bias") b.bias = std::stod(value);
        else if (key == "train_accuracy") b.train_accuracy = std::stod(value);
        else if (key == "test_accuracy") b.test_accuracy = std::stod(value);
        else if (key == "normal") {
            std::istringstream vals(value);
            double v;
            while (vals >> v) b.normal.push_back(v);
        } else {
            throw IoError("boundary file: unknown key '" + key + "'");
        }
    }
    if (checksum_hex.empty()) throw IoError("boundary file: missing checksum");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(payload)));
    if (checksum_hex != buf) throw IoError("boundary file: checksum mismatch");
    if (dim != b.dim()) throw IoError("boundary file: normal length does not match dim");
    const double n = norm(b.normal);
    if (std::abs(n - 1.0) > 1e-9)
        throw IoError("boundary file: stored normal is not unit length");
    return b;
}

} // namespace bdk

#endif // BDK_BOUNDARY_HPP

#ifndef BDK_NOISE_MODEL_HPP
#define BDK_NOISE_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdk/errors.hpp"
#include "bdk/io.hpp"
#include "bdk/rng.hpp"
#include "bdk/schedule.hpp"
#include "bdk/vec.hpp"

namespace bdk {

/// Fully connected noise predictor eps(x_t, t) -> estimated noise.
///
/// The sinusoidal embedding of t is concatenated to x_t at the input, so the
/// first layer sees layer_sizes[0] + time_embed_dim features. Hidden layers
/// use tanh; the output layer is linear. One interior layer is designated the
/// bottleneck: its post-activation vector is the low-dimensional latent that
/// editing operates on, and it can be overridden during a forward pass.
///
/// The funnel's output lies on a manifold of dimension at most the
/// bottleneck width, while the ideal noise estimate at high t is close to an
/// isotropic identity map of x_t. The optional passthrough supplies that
/// component: a time-conditioned scalar gain g(t) = w_g . emb(t) adds
/// g(t) * x_t to the output. It appends exactly time_embed_dim parameters
/// after the layer parameters and is off by default.
///
/// Parameters are stored as float32 (checkpoint round trips are bit-exact);
/// all arithmetic runs in double.
struct NoisePredictor {
    std::vector<int> layer_sizes;   // input d, hidden..., output d
    int time_embed_dim = 0;
    int bottleneck_index = 0;       // index into layer_sizes
    bool passthrough = false;       // time-gated identity component
    std::vector<float> params;      // per layer: row-major weights, then bias;
                                    // then w_g when passthrough is on

    int data_dim() const { return layer_sizes.front(); }
    int bottleneck_dim() const {
        return layer_sizes[static_cast<std::size_t>(bottleneck_index)];
    }
    int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }

    int fan_in(int layer) const {
        int f = layer_sizes[static_cast<std::size_t>(layer)];
        if (layer == 0) f += time_embed_dim;
        return f;
    }
    int fan_out(int layer) const {
        return layer_sizes[static_cast<std::size_t>(layer) + 1];
    }

    std::size_t layer_param_count() const {
        std::size_t n = 0;
        for (int l = 0; l < num_layers(); ++l)
            n += static_cast<std::size_t>(fan_in(l) + 1) * static_cast<std::size_t>(fan_out(l));
        return n;
    }

    std::size_t param_count() const {
        return layer_param_count() +
               (passthrough ? static_cast<std::size_t>(time_embed_dim) : 0u);
    }

    std::size_t layer_offset(int layer) const {
        std::size_t off = 0;
        for (int l = 0; l < layer; ++l)
            off += static_cast<std::size_t>(fan_in(l) + 1) * static_cast<std::size_t>(fan_out(l));
        return off;
    }
};

inline Vec sinusoidal_time_embedding(int t, int dim) {
    Vec e(static_cast<std::size_t>(dim));
    if (dim == 0) return e;
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / (half > 1 ? half - 1 : 1));
        e[static_cast<std::size_t>(2 * i)] = std::sin(t * freq);
        e[static_cast<std::size_t>(2 * i + 1)] = std::cos(t * freq);
    }
    if (dim % 2 == 1) e[static_cast<std::size_t>(dim) - 1] = static_cast<double>(t);
    return e;
}

/// Glorot-uniform weights, zero biases, zero passthrough gain; deterministic
/// in the seed.
inline NoisePredictor init_predictor(std::vector<int> layer_sizes, int time_embed_dim,
                                     std::uint64_t seed, bool passthrough = false) {
    require(layer_sizes.size() >= 3, "init_predictor: need at least 3 layers");
    require(time_embed_dim >= 0, "init_predictor: negative embedding width");
    require(!passthrough || time_embed_dim >= 1,
            "init_predictor: passthrough needs a time embedding");
    for (int s : layer_sizes) require(s >= 1, "init_predictor: layer sizes must be positive");
    require(layer_sizes.front() == layer_sizes.back(),
            "init_predictor: input and output dimension must match");

    NoisePredictor m;
    m.layer_sizes = std::move(layer_sizes);
    m.time_embed_dim = time_embed_dim;
    m.passthrough = passthrough;
    m.bottleneck_index = static_cast<int>(m.layer_sizes.size()) / 2;
    require(m.bottleneck_dim() < m.data_dim(),
            "init_predictor: bottleneck must be strictly narrower than the data");

    m.params.assign(m.param_count(), 0.0f);
    Rng rng(seed);
    std::size_t off = 0;
    for (int l = 0; l < m.num_layers(); ++l) {
        const int fi = m.fan_in(l), fo = m.fan_out(l);
        const double bound = std::sqrt(6.0 / (fi + fo));
        for (int i = 0; i < fi * fo; ++i)
            m.params[off + static_cast<std::size_t>(i)] =
                static_cast<float>(rng.uniform(-bound, bound));
        off += static_cast<std::size_t>(fi) * fo;
        off += static_cast<std::size_t>(fo);  // biases stay zero
    }
    return m;
}

struct PredictOutput {
    Vec noise;  // dim d
    Vec h;      // bottleneck dim
};

/// All-zero parameters are the one detectable "never trained" state.
inline void require_trained(const NoisePredictor& m, const char* who) {
    for (float p : m.params)
        if (p != 0.0f) return;
    throw ValidationError(std::string(who) + ": predictor has all-zero parameters (untrained)");
}

namespace detail {

struct ForwardTrace {
    std::vector<Vec> activations;  // activations[0] = input (x ++ time embed)
    std::vector<Vec> pre;          // pre[l] = W a + b of layer l
};

inline Vec layer_apply(const NoisePredictor& m, int layer, std::span<const double> in) {
    const int fi = m.fan_in(layer), fo = m.fan_out(layer);
    const std::size_t off = m.layer_offset(layer);
    const float* W = m.params.data() + off;
    const float* b = W + static_cast<std::size_t>(fi) * fo;
    Vec out(static_cast<std::size_t>(fo));
    for (int o = 0; o < fo; ++o) {
        const float* row = W + static_cast<std::size_t>(o) * fi;
        double acc = static_cast<double>(b[o]);
        for (int i = 0; i < fi; ++i) acc += static_cast<double>(row[i]) * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = acc;
    }
    return out;
}

inline ForwardTrace forward(const NoisePredictor& m, std::span<const double> x, int t,
                            const Vec* h_override) {
    require(static_cast<int>(x.size()) == m.data_dim(), "predict_noise: input dimension mismatch");
    ForwardTrace tr;
    const int L = m.num_layers();
    tr.activations.resize(static_cast<std::size_t>(L) + 1);
    tr.pre.resize(static_cast<std::size_t>(L));

    Vec a0(x.begin(), x.end());
    const Vec emb = sinusoidal_time_embedding(t, m.time_embed_dim);
    a0.insert(a0.end(), emb.begin(), emb.end());
    tr.activations[0] = std::move(a0);

    for (int l = 0; l < L; ++l) {
        Vec z = layer_apply(m, l, tr.activations[static_cast<std::size_t>(l)]);
        tr.pre[static_cast<std::size_t>(l)] = z;
        Vec a;
        if (l == L - 1) {
            a = std::move(z);  // linear output
        } else {
            a.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) a[i] = std::tanh(z[i]);
        }
        if (h_override != nullptr && l + 1 == m.bottleneck_index) {
            require(static_cast<int>(h_override->size()) == m.bottleneck_dim(),
                    "h override dimension mismatch");
            a = *h_override;
        }
        tr.activations[static_cast<std::size_t>(l) + 1] = std::move(a);
    }
    if (m.passthrough) {
        const Vec& a0 = tr.activations[0];  // x followed by the embedding
        const float* wg = m.params.data() + m.layer_param_count();
        double gain = 0.0;
        for (int j = 0; j < m.time_embed_dim; ++j)
            gain += static_cast<double>(wg[j]) * a0[static_cast<std::size_t>(m.data_dim() + j)];
        Vec& out = tr.activations.back();
        for (int i = 0; i < m.data_dim(); ++i)
            out[static_cast<std::size_t>(i)] += gain * a0[static_cast<std::size_t>(i)];
    }
    return tr;
}

} // namespace detail

/// Pure forward pass; also exposes the bottleneck activation.
inline PredictOutput predict_noise(const NoisePredictor& m, std::span<const double> x, int t) {
    auto tr = detail::forward(m, x, t, nullptr);
    PredictOutput out;
    out.noise = tr.activations.back();
    out.h = tr.activations[static_cast<std::size_t>(m.bottleneck_index)];
    return out;
}

/// Forward pass with the bottleneck activation replaced before the
/// downstream layers. Overriding with the model's own activation
/// reproduces predict_noise exactly.
inline Vec predict_noise_with_injection(const NoisePredictor& m, std::span<const double> x,
                                        int t, const Vec& h_override) {
    auto tr = detail::forward(m, x, t, &h_override);
    return tr.activations.back();
}

struct TrainingExample {
    Vec x_t;
    int t = 1;
    Vec target;  // the noise the model should recover
};

/// Mean over the batch of per-coordinate MSE between prediction and target.
inline double mse_loss(const NoisePredictor& m, std::span<const TrainingExample> batch) {
    require(!batch.empty(), "mse_loss: empty batch");
    double total = 0.0;
    for (const auto& ex : batch) {
        auto tr = detail::forward(m, ex.x_t, ex.t, nullptr);
        const Vec& out = tr.activations.back();
        require(out.size() == ex.target.size(), "mse_loss: target dimension mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - ex.target[i];
            acc += d * d;
        }
        total += acc / static_cast<double>(out.size());
    }
    return total / static_cast<double>(batch.size());
}

/// Backpropagated gradient of mse_loss with respect to every parameter.
/// grad is resized to param_count().
inline double mse_loss_and_gradient(const NoisePredictor& m,
                                    std::span<const TrainingExample> batch,
                                    std::vector<double>& grad) {
    require(!batch.empty(), "mse_loss_and_gradient: empty batch");
    grad.assign(m.param_count(), 0.0);
    const int L = m.num_layers();
    double total = 0.0;

    for (const auto& ex : batch) {
        auto tr = detail::forward(m, ex.x_t, ex.t, nullptr);
        const Vec& out = tr.activations.back();
        const std::size_t d = out.size();

        Vec delta(d);  // dLoss/dz of the current layer
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = out[i] - ex.target[i];
            acc += diff * diff;
            delta[i] = 2.0 * diff / (static_cast<double>(d) * batch.size());
        }
        total += acc / static_cast<double>(d);

        if (m.passthrough) {
            // the passthrough branch sees the same output delta
            const Vec& a0 = tr.activations[0];
            double proj = 0.0;
            for (std::size_t i = 0; i < d; ++i) proj += delta[i] * a0[i];
            double* gw = grad.data() + m.layer_param_count();
            for (int j = 0; j < m.time_embed_dim; ++j)
                gw[j] += proj * a0[static_cast<std::size_t>(m.data_dim() + j)];
        }

        for (int l = L - 1; l >= 0; --l) {
            const int fi = m.fan_in(l), fo = m.fan_out(l);
            const std::size_t off = m.layer_offset(l);
            const Vec& a_in = tr.activations[static_cast<std::size_t>(l)];
            double* gW = grad.data() + off;
            double* gb = gW + static_cast<std::size_t>(fi) * fo;
            for (int o = 0; o < fo; ++o) {
                const double dz = delta[static_cast<std::size_t>(o)];
                double* row = gW + static_cast<std::size_t>(o) * fi;
                for (int i = 0; i < fi; ++i) row[i] += dz * a_in[static_cast<std::size_t>(i)];
                gb[o] += dz;
            }
            if (l == 0) break;
            const float* W = m.params.data() + off;
            Vec prev(static_cast<std::size_t>(fi), 0.0);
            for (int o = 0; o < fo; ++o) {
                const double dz = delta[static_cast<std::size_t>(o)];
                const float* row = W + static_cast<std::size_t>(o) * fi;
                for (int i = 0; i < fi; ++i)
                    prev[static_cast<std::size_t>(i)] += dz * static_cast<double>(row[i]);
            }
            // through the tanh of layer l-1
            const Vec& z_prev = tr.pre[static_cast<std::size_t>(l) - 1];
            for (int i = 0; i < fi; ++i) {
                const double th = std::tanh(z_prev[static_cast<std::size_t>(i)]);
                prev[static_cast<std::size_t>(i)] *= (1.0 - th * th);
            }
            delta = std::move(prev);
        }
    }
    return total / static_cast<double>(batch.size());
}

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 0.02;
    std::uint64_t seed = 1;
};

struct TrainResult {
    NoisePredictor model;
    std::vector<double> loss_curve;  // one entry per epoch
};

/// Plain SGD on the denoising objective: for each example draw a uniform
/// step t and fresh Gaussian noise, form x_t in closed form, and regress
/// the noise. Deterministic given the seed; per-example noise comes from
/// split streams keyed by (epoch, dataset index), so the shuffle order
/// does not change which noise a given image sees.
inline TrainResult train_predictor(NoisePredictor model, std::span<const Vec> dataset,
                                   const NoiseSchedule& schedule, const TrainConfig& cfg) {
    require(!dataset.empty(), "train_predictor: empty dataset");
    require(cfg.batch_size >= 1, "train_predictor: batch_size must be >= 1");
    require(cfg.learning_rate >= 0.0, "train_predictor: negative learning rate");
    for (const Vec& x : dataset)
        require(static_cast<int>(x.size()) == model.data_dim(),
                "train_predictor: sample dimension mismatch");

    Rng root(cfg.seed);
    const std::size_t n = dataset.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainResult res;
    res.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
    std::vector<double> grad;
    std::vector<TrainingExample> batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = root.split(0x5u).split(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = shuffle_rng.below(i);
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, begin + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t idx = order[k];
                Rng ex_rng = root.split(0x6u)
                                 .split(static_cast<std::uint64_t>(epoch))
                                 .split(static_cast<std::uint64_t>(idx));
                TrainingExample ex;
                ex.t = 1 + static_cast<int>(ex_rng.below(static_cast<std::uint64_t>(schedule.T)));
                ex.target.resize(dataset[idx].size());
                for (double& v : ex.target) v = ex_rng.normal();
                ex.x_t = q_sample(schedule, dataset[idx], ex.t, ex.target);
                batch.push_back(std::move(ex));
            }
            const double loss = mse_loss_and_gradient(model, batch, grad);
            if (!std::isfinite(loss))
                throw NumericError("train_predictor: non-finite loss at epoch " +
                                   std::to_string(epoch));
            for (std::size_t p = 0; p < grad.size(); ++p)
                model.params[p] = static_cast<float>(model.params[p] - cfg.learning_rate * grad[p]);
            epoch_loss += loss;
            ++batches;
        }
        res.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
    }
    res.model = std::move(model);
    return res;
}

// ---------------------------------------------------------------------------
// Checkpoint file: magic "BDKT", version, schedule block, architecture block,
// float32 parameter payload, trailing 64-bit checksum.
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[4] = {'B', 'D', 'K', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const NoisePredictor& m, const NoiseSchedule& s,
                            const std::string& path) {
    BinaryWriter w;
    w.write_bytes(kCheckpointMagic, 4);
    w.write_u32(kCheckpointVersion);
    w.write_i32(s.T);
    w.write_f64(s.beta_start);
    w.write_f64(s.beta_end);
    w.write_f64(s.eta);
    w.write_u32(static_cast<std::uint32_t>(m.layer_sizes.size()));
    for (int v : m.layer_sizes) w.write_i32(v);
    w.write_i32(m.time_embed_dim);
    w.write_i32(m.bottleneck_index);
    w.write_u32(m.passthrough ? 1u : 0u);
    w.write_u64(static_cast<std::uint64_t>(m.params.size()));
    for (float p : m.params) w.write_f32(p);
    w.save_with_checksum(path);
}

struct Checkpoint {
    NoisePredictor predictor;
    NoiseSchedule schedule;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);

    char magic[4];
    r.read_bytes(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw IoError("checkpoint magic mismatch: not a checkpoint file");
    const std::uint32_t version = r.read_u32();
    if (version != kCheckpointVersion)
        throw IoError("checkpoint version mismatch: got " + std::to_string(version));

    r.verify_trailing_checksum();

    Checkpoint ck;
    const int T = r.read_i32();
    const double beta_start = r.read_f64();
    const double beta_end = r.read_f64();
    const double eta = r.read_f64();
    ck.schedule = make_linear_schedule(T, beta_start, beta_end, eta);

    const std::uint32_t n_sizes = r.read_u32();
    ck.predictor.layer_sizes.resize(n_sizes);
    for (auto& v : ck.predictor.layer_sizes) v = r.read_i32();
    ck.predictor.time_embed_dim = r.read_i32();
    ck.predictor.bottleneck_index = r.read_i32();
    ck.predictor.passthrough = (r.read_u32() != 0);
    const std::uint64_t n_params = r.read_u64();
    if (n_params != ck.predictor.param_count())
        throw IoError("checkpoint parameter count does not match architecture");
    ck.predictor.params.resize(n_params);
    for (auto& p : ck.predictor.params) p = r.read_f32();
    return ck;
}

inline std::uint64_t checkpoint_file_checksum(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    r.verify_trailing_checksum();
    if (r.size() < 8) throw IoError("truncated file: shorter than checksum");
    std::vector<std::uint8_t> body(r.size() - 8);
    r.read_bytes(body.data(), body.size());
    return fnv1a64(std::span<const std::uint8_t>(body.data(), body.size()));
}

} // namespace bdk

#endif // BDK_NOISE_MODEL_HPP

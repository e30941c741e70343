#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "bdk/noise_model.hpp"
#include "bdk/schedule.hpp"

using namespace bdk;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<TrainingExample> fixed_batch(const NoisePredictor& m, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainingExample> batch;
    for (int i = 0; i < count; ++i) {
        TrainingExample ex;
        ex.t = 1 + static_cast<int>(rng.below(100));
        ex.x_t.resize(static_cast<std::size_t>(m.data_dim()));
        ex.target.resize(static_cast<std::size_t>(m.data_dim()));
        for (double& v : ex.x_t) v = rng.normal();
        for (double& v : ex.target) v = rng.normal();
        batch.push_back(std::move(ex));
    }
    return batch;
}

} // namespace

TEST_CASE("init: deterministic in the seed, distinct across seeds") {
    auto a = init_predictor({8, 16, 4, 16, 8}, 6, 11);
    auto b = init_predictor({8, 16, 4, 16, 8}, 6, 11);
    auto c = init_predictor({8, 16, 4, 16, 8}, 6, 12);
    CHECK(a.params == b.params);
    CHECK(a.params != c.params);
}

TEST_CASE("init: parameter count per layer, no embedding") {
    auto m = init_predictor({4, 8, 2, 8, 4}, 0, 1);
    CHECK(m.param_count() == 118);  // 40 + 18 + 24 + 36
    CHECK(m.params.size() == 118);
    CHECK(m.bottleneck_index == 2);
    CHECK(m.bottleneck_dim() == 2);
}

TEST_CASE("init: embedding widens only the first fan-in") {
    auto m = init_predictor({4, 8, 2, 8, 4}, 4, 1);
    CHECK(m.param_count() == 118 + 4 * 8);
}

TEST_CASE("passthrough: adds exactly time_embed_dim parameters, zero means no-op") {
    auto base = init_predictor({6, 10, 3, 10, 6}, 4, 9);
    auto pass = init_predictor({6, 10, 3, 10, 6}, 4, 9, true);
    CHECK(pass.param_count() == base.param_count() + 4);

    // the gain initializes to zero, so outputs match the plain funnel
    Vec x{0.2, -0.4, 0.6, 0.1, -0.9, 0.3};
    CHECK(predict_noise(pass, x, 7).noise == predict_noise(base, x, 7).noise);

    // a nonzero gain shifts the output along x
    NoisePredictor gained = pass;
    gained.params[gained.layer_param_count()] = 0.5f;
    auto with_gain = predict_noise(gained, x, 7).noise;
    auto without = predict_noise(pass, x, 7).noise;
    const Vec emb = sinusoidal_time_embedding(7, 4);
    for (int i = 0; i < 6; ++i)
        CHECK(with_gain[static_cast<std::size_t>(i)] - without[static_cast<std::size_t>(i)] ==
              doctest::Approx(0.5 * emb[0] * x[static_cast<std::size_t>(i)]).epsilon(1e-12));

    CHECK_THROWS_AS(init_predictor({6, 10, 3, 10, 6}, 0, 9, true), ValidationError);
}

TEST_CASE("passthrough: gradient of the gain matches finite differences") {
    auto m = init_predictor({6, 12, 3, 12, 6}, 4, 23, true);
    // give the gain weights some signal
    for (int j = 0; j < 4; ++j)
        m.params[m.layer_param_count() + static_cast<std::size_t>(j)] =
            0.1f * static_cast<float>(j + 1);
    auto batch = fixed_batch(m, 3, 66);
    std::vector<double> grad;
    mse_loss_and_gradient(m, batch, grad);
    REQUIRE(grad.size() == m.param_count());

    for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t i = m.layer_param_count() + j;
        NoisePredictor plus = m, minus = m;
        plus.params[i] = static_cast<float>(static_cast<double>(m.params[i]) + 1e-5);
        minus.params[i] = static_cast<float>(static_cast<double>(m.params[i]) - 1e-5);
        const double delta =
            static_cast<double>(plus.params[i]) - static_cast<double>(minus.params[i]);
        const double fd = (mse_loss(plus, batch) - mse_loss(minus, batch)) / delta;
        CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(1e-8, std::max(std::abs(fd), std::abs(grad[i]))));
    }
}

TEST_CASE("init: rejects bottleneck >= d and bad shapes") {
    CHECK_THROWS_AS(init_predictor({4, 8, 4, 8, 4}, 0, 1), ValidationError);   // h == d
    CHECK_THROWS_AS(init_predictor({4, 8, 6, 8, 4}, 0, 1), ValidationError);   // h > d
    CHECK_THROWS_AS(init_predictor({4, 8}, 0, 1), ValidationError);            // too shallow
    CHECK_THROWS_AS(init_predictor({4, 8, 2, 8, 5}, 0, 1), ValidationError);   // in != out
}

TEST_CASE("predict: zero parameters give a zero estimate") {
    auto m = init_predictor({6, 10, 3, 10, 6}, 4, 1);
    for (auto& p : m.params) p = 0.0f;
    Vec x(6, 1.5);
    auto out = predict_noise(m, x, 3);
    for (double v : out.noise) CHECK(v == 0.0);
}

TEST_CASE("predict: pure function of inputs") {
    auto m = init_predictor({6, 10, 3, 10, 6}, 4, 2);
    Vec x{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
    auto a = predict_noise(m, x, 7);
    auto b = predict_noise(m, x, 7);
    CHECK(a.noise == b.noise);
    CHECK(a.h == b.h);
    CHECK(a.h.size() == 3);

    Vec bad(5, 0.0);
    CHECK_THROWS_AS(predict_noise(m, bad, 7), ValidationError);
}

TEST_CASE("injection: self-activation reproduces the plain pass exactly") {
    auto m = init_predictor({6, 12, 3, 12, 6}, 4, 3);
    Vec x{0.3, 0.1, -0.7, 0.2, 0.9, -0.4};
    auto plain = predict_noise(m, x, 5);
    auto injected = predict_noise_with_injection(m, x, 5, plain.h);
    CHECK(plain.noise == injected);
}

TEST_CASE("injection: zero override equals downstream pass on zeros") {
    auto m = init_predictor({6, 12, 3, 12, 6}, 0, 3);
    Vec x{0.3, 0.1, -0.7, 0.2, 0.9, -0.4};
    Vec zeros(3, 0.0);
    auto out = predict_noise_with_injection(m, x, 5, zeros);
    // biases are zero at init, so downstream-of-zero is exactly zero
    for (double v : out) CHECK(v == 0.0);

    Vec bad(2, 0.0);
    CHECK_THROWS_AS(predict_noise_with_injection(m, x, 5, bad), ValidationError);
}

TEST_CASE("injection: distinct overrides give distinct outputs") {
    auto m = init_predictor({6, 12, 3, 12, 6}, 4, 3);
    Vec x{0.3, 0.1, -0.7, 0.2, 0.9, -0.4};
    Vec h1{0.5, -0.5, 0.25}, h2{-0.1, 0.8, 0.0};
    CHECK(predict_noise_with_injection(m, x, 5, h1) !=
          predict_noise_with_injection(m, x, 5, h2));
}

TEST_CASE("gradients match central finite differences on random slices") {
    auto m = init_predictor({6, 12, 3, 12, 6}, 4, 17);
    auto batch = fixed_batch(m, 3, 55);

    std::vector<double> grad;
    mse_loss_and_gradient(m, batch, grad);
    REQUIRE(grad.size() == m.param_count());

    Rng pick(77);
    int checked = 0;
    while (checked < 12) {
        const std::size_t i = pick.below(m.params.size());
        if (std::abs(grad[i]) < 1e-6) continue;  // relative error needs signal
        NoisePredictor plus = m, minus = m;
        const double h = 1e-5;
        plus.params[i] = static_cast<float>(static_cast<double>(m.params[i]) + h);
        minus.params[i] = static_cast<float>(static_cast<double>(m.params[i]) - h);
        // exact float deltas keep the quotient unbiased
        const double actual_delta =
            static_cast<double>(plus.params[i]) - static_cast<double>(minus.params[i]);
        const double fd = (mse_loss(plus, batch) - mse_loss(minus, batch)) / actual_delta;
        CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(std::abs(fd), std::abs(grad[i])));
        ++checked;
    }
}

TEST_CASE("training: single repeated point converges") {
    // the bottleneck caps what is learnable (the optimal map is full rank),
    // so the loss floor is about 1/d of the initial loss; a near-full
    // bottleneck leaves room to land under 10%
    auto m = init_predictor({16, 64, 15, 64, 16}, 8, 5);
    auto schedule = make_linear_schedule(1, 0.5, 0.5);
    std::vector<Vec> data(64, Vec(16, 0.7));
    TrainConfig cfg;
    cfg.epochs = 1000;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.07;
    cfg.seed = 3;
    auto res = train_predictor(m, data, schedule, cfg);
    CHECK(res.loss_curve.size() == 1000);
    CHECK(res.loss_curve.back() < 0.10 * res.loss_curve.front());
}

TEST_CASE("training: zero learning rate leaves parameters unchanged") {
    auto m = init_predictor({8, 16, 3, 16, 8}, 4, 5);
    auto schedule = default_schedule(50);
    std::vector<Vec> data(8, Vec(8, 0.2));
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.0;
    auto res = train_predictor(m, data, schedule, cfg);
    CHECK(res.model.params == m.params);
}

TEST_CASE("training: deterministic given the seed") {
    auto m = init_predictor({8, 16, 3, 16, 8}, 4, 5);
    auto schedule = default_schedule(50);
    std::vector<Vec> data;
    Rng rng(1);
    for (int i = 0; i < 12; ++i) {
        Vec v(8);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        data.push_back(v);
    }
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.05;
    cfg.seed = 9;
    auto a = train_predictor(m, data, schedule, cfg);
    auto b = train_predictor(m, data, schedule, cfg);
    CHECK(a.model.params == b.model.params);
    CHECK(a.loss_curve == b.loss_curve);
}

TEST_CASE("training: empty dataset rejected") {
    auto m = init_predictor({8, 16, 3, 16, 8}, 4, 5);
    auto schedule = default_schedule(50);
    std::vector<Vec> data;
    CHECK_THROWS_AS(train_predictor(m, data, schedule, {}), ValidationError);
}

TEST_CASE("checkpoint: bitwise round trip") {
    auto m = init_predictor({8, 16, 3, 16, 8}, 4, 21);
    auto schedule = make_linear_schedule(64, 2e-4, 0.015, 0.5);
    const std::string path = temp_path("bdk_ckpt_test.bdkc");
    save_checkpoint(m, schedule, path);
    auto ck = load_checkpoint(path);
    CHECK(ck.predictor.params == m.params);
    CHECK(ck.predictor.layer_sizes == m.layer_sizes);
    CHECK(ck.predictor.time_embed_dim == m.time_embed_dim);
    CHECK(ck.predictor.bottleneck_index == m.bottleneck_index);
    CHECK(ck.schedule.T == 64);
    CHECK(ck.schedule.beta == schedule.beta);
    CHECK(ck.schedule.alpha_bar == schedule.alpha_bar);
    CHECK(ck.schedule.eta == 0.5);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint: corrupted header, truncation, and bit flips are distinct errors") {
    auto m = init_predictor({8, 16, 3, 16, 8}, 4, 21);
    auto schedule = default_schedule(32);
    const std::string path = temp_path("bdk_ckpt_corrupt.bdkc");
    save_checkpoint(m, schedule, path);
    const std::string original = read_text_file(path);

    // header byte -> magic error
    {
        std::string bytes = original;
        bytes[0] = 'X';
        write_text_file(path, bytes);
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"), IoError);
    }
    // version field -> version error
    {
        std::string bytes = original;
        bytes[4] = static_cast<char>(99);
        write_text_file(path, bytes);
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("version"), IoError);
    }
    // truncated payload -> checksum error
    {
        write_text_file(path, original.substr(0, original.size() - 20));
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("checksum"), IoError);
    }
    // flipped payload bit -> checksum error
    {
        std::string bytes = original;
        bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 1);
        write_text_file(path, bytes);
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("checksum"), IoError);
    }
    std::filesystem::remove(path);
}

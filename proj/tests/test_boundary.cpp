#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "bdk/boundary.hpp"
#include "bdk/noise_model.hpp"
#include "bdk/synth_data.hpp"

using namespace bdk;

namespace {

/// Two well-separated Gaussian blobs along a random direction.
LatentDataset separable_blobs(int n_per_class, int d, double gap, std::uint64_t seed) {
    Rng rng(seed);
    Vec dir(static_cast<std::size_t>(d));
    for (double& v : dir) v = rng.normal();
    dir = unit(dir);

    LatentDataset ds;
    ds.attribute = "blob";
    ds.space = LatentSpace::epsilon;
    ds.t_m = 1;
    for (int i = 0; i < 2 * n_per_class; ++i) {
        const int label = (i % 2 == 0) ? 1 : -1;
        Rng stream = rng.split(static_cast<std::uint64_t>(i));
        Vec x(static_cast<std::size_t>(d));
        for (double& v : x) v = stream.normal();
        axpy(label * gap / 2.0, dir, x);
        ds.latents.push_back(std::move(x));
        ds.labels.push_back(label);
    }
    return ds;
}

} // namespace

TEST_CASE("separable blobs are classified nearly perfectly") {
    auto ds = separable_blobs(100, 32, 8.0, 3);
    auto b = fit_boundary(ds, {});
    CHECK(norm(b.normal) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b.test_accuracy >= 0.99);
    CHECK(b.train_accuracy >= 0.99);
}

TEST_CASE("randomly permuted labels hover near chance") {
    auto ds = separable_blobs(100, 32, 8.0, 4);
    Rng rng(9);
    for (std::size_t i = ds.labels.size(); i > 1; --i)
        std::swap(ds.labels[i - 1], ds.labels[rng.below(i)]);
    auto b = fit_boundary(ds, {});
    CHECK(b.test_accuracy >= 0.35);
    CHECK(b.test_accuracy <= 0.65);
}

TEST_CASE("single-class dataset rejected") {
    LatentDataset ds;
    ds.latents = {Vec{1.0, 0.0}, Vec{0.0, 1.0}};
    ds.labels = {1, 1};
    CHECK_THROWS_AS(fit_boundary(ds, {}), ValidationError);
}

TEST_CASE("fit is deterministic given seed and split") {
    auto ds = separable_blobs(60, 16, 6.0, 5);
    SvmConfig cfg;
    cfg.seed = 42;
    auto a = fit_boundary(ds, cfg);
    auto b = fit_boundary(ds, cfg);
    CHECK(a.normal == b.normal);
    CHECK(a.bias == b.bias);
    CHECK(a.test_accuracy == b.test_accuracy);
}

TEST_CASE("signed distance: basis normal, orthogonality, linear shift") {
    Boundary b;
    b.normal = Vec{1.0, 0.0, 0.0};
    b.bias = 0.0;
    CHECK(signed_distance(b, Vec{3.0, 5.0, -2.0}) == 3.0);
    CHECK(signed_distance(b, Vec{0.0, 7.0, 1.0}) == 0.0);

    Vec x{0.5, 1.0, -1.0};
    Vec shifted = x;
    axpy(2.0, b.normal, shifted);
    CHECK(signed_distance(b, shifted) - signed_distance(b, x) ==
          doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(signed_distance(b, Vec{1.0, 2.0}), ValidationError);
}

TEST_CASE("scale invariance: classification ignores positive rescaling of weights") {
    // the pre-normalization weight scale cannot change any sign decision
    auto ds = separable_blobs(50, 8, 5.0, 7);
    auto b = fit_boundary(ds, {});
    Boundary scaled_up = b;
    for (double& v : scaled_up.normal) v *= 17.0;
    scaled_up.bias *= 17.0;
    for (const auto& x : ds.latents) {
        const bool s1 = signed_distance(b, x) >= 0.0;
        const bool s2 = signed_distance(scaled_up, x) >= 0.0;
        CHECK(s1 == s2);
    }
}

TEST_CASE("evaluate_boundary: training set reproduces recorded accuracy; negation flips") {
    auto ds = separable_blobs(50, 16, 3.0, 8);
    SvmConfig cfg;
    cfg.holdout_fraction = 0.0;  // train on everything so the comparison is exact
    auto b = fit_boundary(ds, cfg);
    CHECK(evaluate_boundary(b, ds) == doctest::Approx(b.train_accuracy).epsilon(1e-12));

    Boundary neg = b;
    for (double& v : neg.normal) v = -v;
    neg.bias = -neg.bias;
    const double acc = evaluate_boundary(b, ds);
    CHECK(evaluate_boundary(neg, ds) == doctest::Approx(1.0 - acc).epsilon(1e-9));
}

TEST_CASE("no-bias mode keeps the literal inner-product rule") {
    auto ds = separable_blobs(50, 8, 6.0, 11);
    SvmConfig cfg;
    cfg.fit_bias = false;
    auto b = fit_boundary(ds, cfg);
    CHECK(b.bias == 0.0);
    CHECK(b.test_accuracy >= 0.9);  // blobs are centered, bias-free works
}

TEST_CASE("stacking: one boundary passes through; orthogonal edits do not interact") {
    Boundary b1;
    b1.normal = Vec{1.0, 0.0, 0.0};
    b1.attribute = "a";
    b1.t_m = 5;
    Boundary b2;
    b2.normal = Vec{0.0, 1.0, 0.0};
    b2.attribute = "b";
    b2.t_m = 5;

    auto single = stack_boundaries(std::vector<Boundary>{b1});
    CHECK(single.count() == 1);
    CHECK(single.normals[0] == b1.normal);

    auto mb = stack_boundaries(std::vector<Boundary>{b1, b2});
    CHECK(mb.pairwise_cosine[0][1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mb.pairwise_cosine[0][0] == doctest::Approx(1.0).epsilon(1e-12));

    // moving along b1's normal leaves b2's distance unchanged
    Vec x{0.3, -0.2, 0.9};
    Vec moved = x;
    axpy(4.0, b1.normal, moved);
    CHECK(signed_distance(b2, moved) == doctest::Approx(signed_distance(b2, x)).epsilon(1e-12));
}

TEST_CASE("stacking: non-orthogonal normals report their cosine") {
    Boundary b1;
    b1.normal = unit(Vec{1.0, 1.0, 0.0});
    Boundary b2;
    b2.normal = Vec{1.0, 0.0, 0.0};
    auto mb = stack_boundaries(std::vector<Boundary>{b1, b2});
    CHECK(mb.pairwise_cosine[0][1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("stacking: mixed spaces rejected") {
    Boundary b1;
    b1.normal = Vec{1.0, 0.0};
    b1.space = LatentSpace::epsilon;
    Boundary b2;
    b2.normal = Vec{0.0, 1.0};
    b2.space = LatentSpace::h;
    CHECK_THROWS_AS(stack_boundaries(std::vector<Boundary>{b1, b2}), ValidationError);
}

TEST_CASE("boundary file: round trip is exact") {
    auto ds = separable_blobs(40, 12, 5.0, 13);
    auto b = fit_boundary(ds, {});
    b.attribute = "marker";
    b.t_m = 37;
    const auto path = (std::filesystem::temp_directory_path() / "bdk_boundary_test.bdy").string();
    save_boundary(b, path);
    auto r = load_boundary(path);
    CHECK(r.normal == b.normal);
    CHECK(r.bias == b.bias);
    CHECK(r.attribute == b.attribute);
    CHECK(r.space == b.space);
    CHECK(r.t_m == b.t_m);
    CHECK(r.train_accuracy == b.train_accuracy);
    CHECK(r.test_accuracy == b.test_accuracy);
    std::filesystem::remove(path);
}

TEST_CASE("boundary file: tampering is detected") {
    auto ds = separable_blobs(40, 12, 5.0, 14);
    auto b = fit_boundary(ds, {});
    const auto path =
        (std::filesystem::temp_directory_path() / "bdk_boundary_corrupt.bdy").string();
    save_boundary(b, path);
    std::string text = read_text_file(path);
    const auto pos = text.find("t_m = ");
    text[pos + 6] = '9';
    write_text_file(path, text);
    CHECK_THROWS_WITH_AS(load_boundary(path), doctest::Contains("checksum"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("assemble_latent_dataset: labels preserved, deterministic, h goes to the bottleneck") {
    SpriteConfig cfg;
    cfg.side = 8;
    cfg.seed = 5;
    auto sprites = generate_sprite_dataset(cfg, 20);
    const int d = cfg.dim();
    auto m = init_predictor({d, 24, 6, 24, d}, 8, 3);
    auto s = default_schedule(20);

    const auto& labels = sprites.labels.at("marker");
    auto eps_ds = assemble_latent_dataset(m, s, sprites.images, labels, "marker", 10,
                                          LatentSpace::epsilon);
    CHECK(eps_ds.latents.size() == 20);
    CHECK(eps_ds.labels == std::vector<int>(labels.begin(), labels.end()));
    CHECK(static_cast<int>(eps_ds.latents[0].size()) == d);
    CHECK(eps_ds.t_m == 10);

    auto eps_ds2 = assemble_latent_dataset(m, s, sprites.images, labels, "marker", 10,
                                           LatentSpace::epsilon);
    CHECK(eps_ds.latents == eps_ds2.latents);

    auto h_ds = assemble_latent_dataset(m, s, sprites.images, labels, "marker", 10,
                                        LatentSpace::h);
    CHECK(static_cast<int>(h_ds.latents[0].size()) == m.bottleneck_dim());

    // untrained (all-zero) model rejected
    auto zero = m;
    for (auto& p : zero.params) p = 0.0f;
    CHECK_THROWS_AS(assemble_latent_dataset(zero, s, sprites.images, labels, "marker", 10,
                                            LatentSpace::epsilon),
                    ValidationError);

    // missing labels rejected
    std::vector<int> short_labels(labels.begin(), labels.begin() + 10);
    CHECK_THROWS_AS(assemble_latent_dataset(m, s, sprites.images, short_labels, "marker", 10,
                                            LatentSpace::epsilon),
                    ValidationError);
}

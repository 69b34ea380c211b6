#include <catch2/catch_amalgamated.hpp>

#include "edm/gan/pix2pix.hpp"

#include "test_util.hpp"

using namespace edm;
using namespace edm::gan;
using nn::Tensor;

namespace {

// Tiny synthetic pairs: a bright square on the RGB side, the matching blob on
// the target side. Enough structure for a short smoke training run.
std::vector<GanPair> square_pairs(int n, int side, Rng& rng) {
    std::vector<GanPair> pairs;
    for (int p = 0; p < n; ++p) {
        GanPair pair;
        pair.rgb = Tensor({3, side, side});
        pair.target = Tensor({1, side, side});
        pair.rgb.fill(-0.8);
        pair.target.fill(-1.0);
        int cx = 8 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(side - 24)));
        int cy = 8 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(side - 24)));
        int r = 4 + static_cast<int>(rng.uniform_int(6));
        for (int i = cy - r; i <= cy + r; ++i)
            for (int j = cx - r; j <= cx + r; ++j) {
                if (i < 0 || i >= side || j < 0 || j >= side) continue;
                for (int c = 0; c < 3; ++c) pair.rgb.at3(c, i, j) = 0.6;
                pair.target.at3(0, i, j) = 0.4;
            }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

GanConfig tiny_config(int epochs, std::uint64_t seed) {
    GanConfig cfg;
    cfg.image_side = 64;
    cfg.epochs = epochs;
    cfg.base_channels = 4;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("gan config validation", "[gan]") {
    GanConfig cfg = tiny_config(1, 0);
    REQUIRE_NOTHROW(cfg.validate());
    cfg.image_side = 96; // not a power of two
    REQUIRE_THROWS(cfg.validate());
    cfg.image_side = 32; // below the minimum
    REQUIRE_THROWS(cfg.validate());
    cfg = tiny_config(1, 0);
    cfg.l1_weight = -1.0;
    REQUIRE_THROWS(cfg.validate());
}

TEST_CASE("training needs at least two pairs", "[gan]") {
    Rng rng(1);
    auto pairs = square_pairs(1, 64, rng);
    REQUIRE_THROWS(train_density_generator(pairs, tiny_config(1, 0)));
    REQUIRE_THROWS(train_density_generator({}, tiny_config(1, 0)));
}

TEST_CASE("generator output is 1-channel, bounded, deterministic", "[gan]") {
    Rng rng(2);
    auto pairs = square_pairs(2, 64, rng);
    auto result = train_density_generator(pairs, tiny_config(1, 3));

    Tensor out = generate_density_map(result.model, pairs[0].rgb);
    REQUIRE(out.shape() == std::vector<int>{1, 64, 64});
    for (double v : out) {
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 1.0);
    }
    Tensor again = generate_density_map(result.model, pairs[0].rgb);
    REQUIRE(out == again); // bitwise identical inference

    // resize is off by default, permitted on request
    Tensor big({3, 80, 80});
    big.fill(0.1);
    REQUIRE_THROWS(generate_density_map(result.model, big));
    Tensor resized = generate_density_map(result.model, big, /*allow_resize=*/true);
    REQUIRE(resized.shape() == std::vector<int>{1, 64, 64});
}

TEST_CASE("same seed reproduces loss histories bit-exactly", "[gan]") {
    Rng rng(4);
    auto pairs = square_pairs(3, 64, rng);
    auto a = train_density_generator(pairs, tiny_config(2, 11));
    auto b = train_density_generator(pairs, tiny_config(2, 11));
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        REQUIRE(a.history[e].d_loss == b.history[e].d_loss);
        REQUIRE(a.history[e].g_adv == b.history[e].g_adv);
        REQUIRE(a.history[e].g_l1 == b.history[e].g_l1);
        REQUIRE(a.history[e].g_total == b.history[e].g_total);
    }
    auto c = train_density_generator(pairs, tiny_config(2, 12));
    REQUIRE(a.history[0].g_total != c.history[0].g_total);
}

TEST_CASE("zero l1 weight removes the reconstruction term", "[gan]") {
    Rng rng(5);
    auto pairs = square_pairs(2, 64, rng);
    GanConfig cfg = tiny_config(2, 7);
    cfg.l1_weight = 0.0;
    auto result = train_density_generator(pairs, cfg);
    for (const auto& s : result.history) {
        REQUIRE(s.g_l1_weighted == 0.0);
        REQUIRE(s.g_total == s.g_adv);
    }
}

TEST_CASE("checkpoint save/load reproduces inference bit-exactly", "[gan]") {
    TempDir tmp("ganckpt");
    Rng rng(6);
    auto pairs = square_pairs(2, 64, rng);
    auto result = train_density_generator(pairs, tiny_config(2, 21));
    Tensor before = generate_density_map(result.model, pairs[1].rgb);

    save_generator(tmp.file("g.ckpt"), result.model);
    auto loaded = load_generator(tmp.file("g.ckpt"));
    REQUIRE(loaded.config.image_side == 64);
    REQUIRE(loaded.provenance["epochs_completed"] == 2);
    REQUIRE(loaded.provenance["config_hash"] == result.model.config.hash());
    Tensor after = generate_density_map(loaded, pairs[1].rgb);
    REQUIRE(before == after);
}

TEST_CASE("bce with logits matches a direct evaluation and its gradient", "[gan]") {
    Rng rng(7);
    Tensor z({5});
    for (auto& v : z) v = rng.uniform(-3.0, 3.0);
    Tensor grad;
    double loss = bce_with_logits(z, 1.0, &grad);

    double expected = 0.0;
    for (double v : z) expected += -std::log(1.0 / (1.0 + std::exp(-v)));
    expected /= 5.0;
    REQUIRE(loss == Catch::Approx(expected).epsilon(1e-12));

    for (std::size_t i = 0; i < 5; ++i) {
        double h = 1e-6, orig = z[i];
        z[i] = orig + h;
        double fp = bce_with_logits(z, 1.0);
        z[i] = orig - h;
        double fm = bce_with_logits(z, 1.0);
        z[i] = orig;
        REQUIRE(grad[i] == Catch::Approx((fp - fm) / (2 * h)).margin(1e-8));
    }
}

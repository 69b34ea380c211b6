#include <catch2/catch_amalgamated.hpp>

#include "edm/nn/adam.hpp"
#include "edm/nn/checkpoint.hpp"
#include "edm/nn/modules.hpp"
#include "edm/nn/tensor.hpp"

#include "test_util.hpp"

using namespace edm;
using namespace edm::nn;

namespace {

// Scalar objective: weighted sum of the module output.
double weighted_loss(const Tensor& y, const Tensor& c) {
    double loss = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) loss += y[i] * c[i];
    return loss;
}

// Compares analytic input/parameter gradients against central differences on
// a deterministic sample of coordinates.
void gradcheck(Module& m, Tensor x, Rng& rng, double h = 1e-6, double tol = 1e-6) {
    Tensor y0 = m.forward(x);
    Tensor c(y0.shape());
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);

    std::vector<Parameter*> params;
    m.collect_params(params);
    zero_grads(params);
    m.forward(x); // refresh caches right before backward
    Tensor dx = m.backward(c);

    auto loss_at = [&]() { return weighted_loss(m.forward(x), c); };
    auto check_slot = [&](double& slot, double analytic) {
        const double orig = slot;
        slot = orig + h;
        double fp = loss_at();
        slot = orig - h;
        double fm = loss_at();
        slot = orig;
        double numeric = (fp - fm) / (2.0 * h);
        REQUIRE(std::abs(analytic - numeric) <=
                tol * std::max({1.0, std::abs(analytic), std::abs(numeric)}));
    };

    const int n_samples = 20;
    for (int s = 0; s < n_samples; ++s) {
        std::size_t i = rng.uniform_int(x.numel());
        if (std::abs(x[i]) < 1e-3) continue; // keep clear of activation kinks
        check_slot(x[i], dx[i]);
    }
    for (Parameter* p : params) {
        for (int s = 0; s < std::min<int>(n_samples, static_cast<int>(p->value.numel())); ++s) {
            std::size_t i = rng.uniform_int(p->value.numel());
            check_slot(p->value[i], p->grad[i]);
        }
    }
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t) v = rng.uniform(lo, hi);
    return t;
}

} // namespace

TEST_CASE("conv2d forward matches a direct convolution", "[nn]") {
    Rng rng(1);
    Conv2d conv(2, 3, 3, 1, 1, rng);
    Tensor x = random_tensor({2, 5, 5}, rng);
    Tensor y = conv.forward(x);
    REQUIRE(y.shape() == std::vector<int>{3, 5, 5});

    std::vector<Parameter*> params;
    conv.collect_params(params);
    const Tensor& w = params[0]->value; // (3, 2*3*3)
    const Tensor& b = params[1]->value;
    // direct evaluation at a few positions
    for (auto [oc, oi, oj] : {std::tuple{0, 0, 0}, std::tuple{2, 2, 3}, std::tuple{1, 4, 4}}) {
        double acc = b[static_cast<std::size_t>(oc)];
        for (int ci = 0; ci < 2; ++ci)
            for (int ki = 0; ki < 3; ++ki)
                for (int kj = 0; kj < 3; ++kj) {
                    int ii = oi - 1 + ki, jj = oj - 1 + kj;
                    if (ii < 0 || ii >= 5 || jj < 0 || jj >= 5) continue;
                    acc += w[static_cast<std::size_t>(oc) * 18 +
                             static_cast<std::size_t>((ci * 3 + ki) * 3 + kj)] *
                           x.at3(ci, ii, jj);
                }
        REQUIRE(y.at3(oc, oi, oj) == Catch::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("conv2d gradients match finite differences", "[nn]") {
    Rng rng(2);
    SECTION("stride 1") {
        Conv2d conv(2, 3, 3, 1, 1, rng);
        gradcheck(conv, random_tensor({2, 6, 6}, rng), rng);
    }
    SECTION("stride 2") {
        Conv2d conv(3, 4, 4, 2, 1, rng);
        gradcheck(conv, random_tensor({3, 8, 8}, rng), rng);
    }
}

TEST_CASE("linear gradients match finite differences", "[nn]") {
    Rng rng(3);
    Linear lin(10, 4, rng);
    gradcheck(lin, random_tensor({10}, rng), rng);
}

TEST_CASE("activation gradients match finite differences", "[nn]") {
    Rng rng(4);
    SECTION("relu") {
        ReLU relu;
        gradcheck(relu, random_tensor({24}, rng), rng);
    }
    SECTION("leaky relu") {
        LeakyReLU lrelu(0.2);
        gradcheck(lrelu, random_tensor({24}, rng), rng);
    }
    SECTION("tanh") {
        Tanh tanh_m;
        gradcheck(tanh_m, random_tensor({24}, rng), rng);
    }
}

TEST_CASE("maxpool and upsample gradients match finite differences", "[nn]") {
    Rng rng(5);
    SECTION("maxpool") {
        MaxPool2d pool(2, 2);
        gradcheck(pool, random_tensor({3, 8, 8}, rng), rng);
    }
    SECTION("upsample") {
        Upsample2x up;
        gradcheck(up, random_tensor({3, 5, 5}, rng), rng);
    }
}

TEST_CASE("layer norm normalizes and its gradients check out", "[nn]") {
    Rng rng(6);
    SECTION("pre-affine moments") {
        Tensor x = random_tensor({4, 3, 3}, rng, -3.0, 5.0);
        Tensor y = layer_normalize(x);
        double mean = 0.0, var = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.numel());
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.numel());
        REQUIRE(std::abs(mean) < 1e-12);
        REQUIRE(var == Catch::Approx(1.0).epsilon(1e-4));
    }
    SECTION("gradients, tensor input with per-channel affine") {
        LayerNorm ln(4);
        std::vector<Parameter*> params;
        ln.collect_params(params);
        for (auto& v : params[0]->value) v = rng.uniform(0.5, 1.5);
        for (auto& v : params[1]->value) v = rng.uniform(-0.5, 0.5);
        gradcheck(ln, random_tensor({4, 3, 3}, rng), rng);
    }
    SECTION("gradients, vector input") {
        LayerNorm ln(12);
        gradcheck(ln, random_tensor({12}, rng), rng);
    }
}

TEST_CASE("group norm normalizes groups and its gradients check out", "[nn]") {
    Rng rng(7);
    SECTION("per-group moments") {
        GroupNorm gn(64, 32);
        Tensor x = random_tensor({64}, rng, -2.0, 6.0);
        Tensor y = gn.forward(x); // affine starts at identity
        for (int g = 0; g < 2; ++g) {
            double mean = 0.0, var = 0.0;
            for (int i = 0; i < 32; ++i) mean += y[static_cast<std::size_t>(g * 32 + i)];
            mean /= 32.0;
            for (int i = 0; i < 32; ++i) {
                double d = y[static_cast<std::size_t>(g * 32 + i)] - mean;
                var += d * d;
            }
            var /= 32.0;
            REQUIRE(std::abs(mean) < 1e-12);
            REQUIRE(var == Catch::Approx(1.0).epsilon(1e-4));
        }
    }
    SECTION("gradients") {
        GroupNorm gn(64, 32);
        std::vector<Parameter*> params;
        gn.collect_params(params);
        for (auto& v : params[0]->value) v = rng.uniform(0.5, 1.5);
        for (auto& v : params[1]->value) v = rng.uniform(-0.5, 0.5);
        gradcheck(gn, random_tensor({64}, rng), rng);
    }
    SECTION("channel count must divide into groups") {
        Rng r2(1);
        REQUIRE_THROWS(GroupNorm(33, 32));
    }
}

TEST_CASE("sequential composes forward and backward", "[nn]") {
    Rng rng(8);
    Sequential net;
    net.add<Conv2d>(1, 2, 3, 2, 1, rng);
    net.add<ReLU>();
    net.add<Flatten>();
    std::vector<Parameter*> params;
    net.collect_params(params);
    REQUIRE(params.size() == 2);
    gradcheck(net, random_tensor({1, 8, 8}, rng), rng);
}

TEST_CASE("concat and split are inverse", "[nn]") {
    Rng rng(9);
    Tensor a = random_tensor({2, 4, 4}, rng), b = random_tensor({3, 4, 4}, rng);
    Tensor cat = concat_channels({&a, &b});
    REQUIRE(cat.shape() == std::vector<int>{5, 4, 4});
    auto parts = split_channels(cat, {2, 3});
    REQUIRE(parts[0] == a);
    REQUIRE(parts[1] == b);
}

TEST_CASE("adam minimizes a quadratic", "[nn]") {
    Rng rng(10);
    Parameter p;
    p.init_shape({4});
    for (auto& v : p.value) v = rng.uniform(2.0, 4.0);
    Adam adam({&p}, 0.1);
    for (int step = 0; step < 300; ++step) {
        adam.zero_grad();
        for (std::size_t i = 0; i < 4; ++i) p.grad[i] = 2.0 * p.value[i];
        adam.step();
    }
    for (double v : p.value) REQUIRE(std::abs(v) < 1e-2);
}

TEST_CASE("checkpoints round trip doubles bit-exactly", "[nn]") {
    TempDir tmp("ckpt");
    Rng rng(11);
    Tensor a = random_tensor({3, 5}, rng), b = random_tensor({7}, rng);
    nlohmann::json meta = {{"kind", "test"}, {"note", 42}};
    save_checkpoint(tmp.file("m.ckpt"), meta, {{"a", &a}, {"b", &b}});
    auto ck = load_checkpoint(tmp.file("m.ckpt"));
    REQUIRE(ck.meta["kind"] == "test");
    REQUIRE(ck.meta["note"] == 42);
    REQUIRE(ck.tensors.size() == 2);
    REQUIRE(ck.tensors[0].first == "a");
    REQUIRE(ck.tensors[0].second == a);
    REQUIRE(ck.tensors[1].second == b);
}

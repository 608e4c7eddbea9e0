#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "unicoal/ad/conv.hpp"
#include "unicoal/ad/ops.hpp"
#include "unicoal/ad/resample.hpp"
#include "unicoal/signal/filter_design.hpp"

using namespace unicoal;
using namespace unicoal::ad;
using testutil::finite_diff_check;

namespace {

Tensor rnd(std::vector<int64_t> shape, uint64_t seed, double scale = 1.0) {
    RandomStream rng(seed, "ad-test");
    return Tensor::randn(std::move(shape), rng, scale);
}

// Project to a scalar through a fixed random weighting so every output
// coordinate participates in the checked gradient.
Var weigh(const Var& v, uint64_t seed) {
    Tensor w = rnd(v.shape(), seed);
    return sum_all(mul(v, Var::constant(w)));
}

} // namespace

TEST_CASE("elementwise gradients match finite differences") {
    Tensor a = rnd({3, 4}, 1), b = rnd({3, 4}, 2);
    auto fd = [&](auto f) { return finite_diff_check(f, {a, b}); };

    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(add(v[0], v[1]), 10); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(sub(v[0], v[1]), 11); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(mul(v[0], v[1]), 12); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(scale(v[0], -1.7), 13); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(add_scalar(v[0], 0.3), 14); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(tanh_op(v[0]), 15); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(sigmoid(v[0]), 16); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(softplus(v[0]), 17); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(square(v[0]), 18); }) < 1e-6);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(leaky_relu(v[0], 0.2), 19); }) < 1e-5);
    REQUIRE(fd([](const std::vector<Var>& v) { return weigh(abs_op(v[0]), 20); }) < 1e-5);
    REQUIRE(fd([](const std::vector<Var>& v) {
                return weigh(rsqrt_eps(square(v[0]), 1e-3), 21);
            }) < 1e-4);
}

TEST_CASE("reduction and broadcast gradients") {
    Tensor x4 = rnd({2, 3, 4, 5}, 3);
    Tensor x2 = rnd({4, 6}, 4);
    Tensor x1 = rnd({6}, 5);
    Tensor s = rnd({1}, 6);
    Tensor col = rnd({4, 1}, 7);

    REQUIRE(finite_diff_check([](const std::vector<Var>& v) { return sum_all(v[0]); }, {x4}) < 1e-6);
    REQUIRE(finite_diff_check([](const std::vector<Var>& v) { return weigh(sum_hw(v[0]), 30); }, {x4}) < 1e-6);
    REQUIRE(finite_diff_check([](const std::vector<Var>& v) { return weigh(sum_nhw(v[0]), 31); }, {x4}) < 1e-6);
    REQUIRE(finite_diff_check([](const std::vector<Var>& v) { return weigh(sum_rows(v[0]), 32); }, {x2}) < 1e-6);
    REQUIRE(finite_diff_check([](const std::vector<Var>& v) { return weigh(sum_cols(v[0]), 33); }, {x2}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(broadcast_fill(v[0], {2, 3}), 34); },
                {s}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(broadcast_rows(v[0], 5), 35); },
                {x1}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(broadcast_cols(v[0], 7), 36); },
                {col}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(broadcast_c(v[0], 2, 3, 4), 37); },
                {x1}) < 1e-6);
    REQUIRE(finite_diff_check(
                [&](const std::vector<Var>& v) {
                    return weigh(broadcast_hw(reshape(v[0], {8, 3}), 2, 2), 38);
                },
                {rnd({24}, 8)}) < 1e-6);
}

TEST_CASE("matmul gradients for all transpose combinations") {
    Tensor a = rnd({3, 4}, 10), at = rnd({4, 3}, 11);
    Tensor b = rnd({4, 5}, 12), bt = rnd({5, 4}, 13);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(matmul(v[0], v[1]), 40); },
                {a, b}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(matmul(v[0], v[1], true, false), 41); },
                {at, b}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(matmul(v[0], v[1], false, true), 42); },
                {a, bt}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(matmul(v[0], v[1], true, true), 43); },
                {at, bt}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(linear(v[0], v[1], v[2]), 44); },
                {a, rnd({6, 4}, 14), rnd({6}, 15)}) < 1e-6);
}

TEST_CASE("shape op gradients") {
    Tensor x = rnd({2, 6, 3, 3}, 20);
    Tensor y = rnd({2, 2, 3, 3}, 21);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(reshape(v[0], {4, 27}), 50); },
                {x}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(concat_ch({v[0], v[1]}), 51); },
                {x, y}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(slice_ch(v[0], 1, 3), 52); },
                {x}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(concat_n({v[0], v[1]}), 53); },
                {x, x}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) { return weigh(slice_n(v[0], 1, 1), 54); },
                {x}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) {
                    return weigh(gather_rows(v[0], {0, 2, 2, 1}), 55);
                },
                {rnd({3, 5}, 22)}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) {
                    return weigh(scatter_rows(v[0], {1, 1, 0}, 4), 56);
                },
                {rnd({3, 5}, 23)}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) {
                    return weigh(scale_channels(v[0], v[1]), 57);
                },
                {x, rnd({2, 6}, 24)}) < 1e-6);
    REQUIRE(finite_diff_check(
                [](const std::vector<Var>& v) {
                    return weigh(add_channel_bias(v[0], v[1]), 58);
                },
                {x, rnd({6}, 25)}) < 1e-6);
}

TEST_CASE("conv ops: adjoint identities and gradients") {
    RandomStream rng(31, "conv");
    Tensor x = Tensor::randn({2, 3, 7, 8}, rng);
    Tensor w = Tensor::randn({4, 3, 3, 3}, rng);

    SECTION("inner-product identities") {
        Var vx = Var::constant(x), vw = Var::constant(w);
        Var y = conv2d(vx, vw, 1);
        Tensor g = Tensor::randn(y.shape(), rng);
        Var gx = conv_transpose2d(Var::constant(g), vw, 1);
        Var gw = conv2d_wgrad(vx, Var::constant(g), 1, 3, 3);
        double yg = 0.0, xgx = 0.0, wgw = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) yg += y.val()[i] * g[i];
        for (int64_t i = 0; i < x.numel(); ++i) xgx += x[i] * gx.val()[i];
        for (int64_t i = 0; i < w.numel(); ++i) wgw += w[i] * gw.val()[i];
        REQUIRE(yg == Catch::Approx(xgx).epsilon(1e-10));
        REQUIRE(yg == Catch::Approx(wgw).epsilon(1e-10));
    }

    SECTION("finite differences") {
        REQUIRE(finite_diff_check(
                    [](const std::vector<Var>& v) { return weigh(conv2d(v[0], v[1], 1), 60); },
                    {x, w}) < 1e-5);
        Tensor g = rnd({2, 4, 7, 8}, 33);
        REQUIRE(finite_diff_check(
                    [](const std::vector<Var>& v) {
                        return weigh(conv_transpose2d(v[0], v[1], 1), 61);
                    },
                    {g, w}) < 1e-5);
        REQUIRE(finite_diff_check(
                    [](const std::vector<Var>& v) {
                        return weigh(conv2d_wgrad(v[0], v[1], 1, 3, 3), 62);
                    },
                    {x, g}) < 1e-5);
    }
}

TEST_CASE("resampling op gradients") {
    auto taps = std::make_shared<const std::vector<double>>(
        signal::design_lowpass(6.0, 3.0, 32.0, 12).taps);
    Tensor x = rnd({1, 2, 10, 10}, 40);

    REQUIRE(finite_diff_check(
                [&](const std::vector<Var>& v) {
                    return weigh(upfirdn2d_op(v[0], taps, 2, 1, 6, 5, 2.0), 70);
                },
                {x}) < 1e-5);
    REQUIRE(finite_diff_check(
                [&](const std::vector<Var>& v) {
                    return weigh(upfirdn2d_op(v[0], taps, 1, 2, 5, 5, 1.0), 71);
                },
                {x}) < 1e-5);
    for (auto mode : {PadMode::Zero, PadMode::Edge, PadMode::Reflect}) {
        REQUIRE(finite_diff_check(
                    [&](const std::vector<Var>& v) {
                        return weigh(pad2d_op(v[0], 3, 2, 1, 4, mode), 72);
                    },
                    {x}) < 1e-5);
    }
    REQUIRE(finite_diff_check(
                [&](const std::vector<Var>& v) {
                    return weigh(crop2d_op(v[0], 2, 3, 5, 4), 73);
                },
                {x}) < 1e-5);
    REQUIRE(finite_diff_check(
                [&](const std::vector<Var>& v) { return weigh(blur2d(v[0], 1.3), 74); },
                {x}) < 1e-5);
    REQUIRE(finite_diff_check(
                [&](const std::vector<Var>& v) {
                    return weigh(resize_bilinear(v[0], 6, 14), 75);
                },
                {x}) < 1e-5);
}

TEST_CASE("second-order gradients (double backprop)") {
    SECTION("analytic: d/dx of sum(c * d(sum(x^3))/dx) = 6xc") {
        Tensor xt = rnd({5}, 80);
        Tensor ct = rnd({5}, 81);
        Var x = Var::leaf(xt, true);
        Var c = Var::constant(ct);
        Var y = sum_all(mul(x, mul(x, x)));
        Var gx = grad(y, {x})[0];
        Var h = sum_all(mul(gx, c));
        Var ggx = grad(h, {x})[0];
        for (int64_t i = 0; i < 5; ++i)
            REQUIRE(ggx.val()[i] == Catch::Approx(6.0 * xt[i] * ct[i]).epsilon(1e-10));
    }

    SECTION("R1-style: grad of a gradient-norm penalty through a conv net") {
        RandomStream rng(83, "r1");
        Tensor xt = Tensor::randn({1, 2, 6, 6}, rng);
        Tensor wt = Tensor::randn({3, 2, 3, 3}, rng, 0.5);

        auto penalty = [&](const Tensor& wv) {
            Var x = Var::leaf(xt, true);
            Var w = Var::leaf(wv, true);
            Var logit = sum_all(leaky_relu(conv2d(x, w, 1), 0.2));
            Var gx = grad(logit, {x})[0];
            return std::pair<Var, Var>(sum_all(square(gx)), w);
        };

        auto [r1, wvar] = penalty(wt);
        Var gw = grad(r1, {wvar})[0];

        // Central differences on the penalty as a function of the weights.
        const double h = 1e-5;
        double worst = 0.0;
        for (int64_t i = 0; i < wt.numel(); i += 5) {
            Tensor wp = wt.clone(), wm = wt.clone();
            wp[i] += h;
            wm[i] -= h;
            const double fd = (penalty(wp).first.item() - penalty(wm).first.item()) / (2 * h);
            const double an = gw.val()[i];
            worst = std::max(worst, std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
        }
        REQUIRE(worst < 1e-4);
    }
}

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "unicoal/signal/filter_design.hpp"
#include "unicoal/signal/resample2d.hpp"
#include "unicoal/signal/schedule.hpp"
#include "unicoal/signal/upfirdn.hpp"

using namespace unicoal;
using namespace unicoal::signal;
using testutil::fir_response;
using testutil::interior_rms;
using testutil::interior_rms_diff;
using testutil::make_tone;

TEST_CASE("kaiser lowpass: DC gain and symmetry") {
    for (int taps : {6, 12, 24}) {
        FilterKernel k = design_lowpass(2.0, 2.5, 16.0, taps);
        double sum = 0.0;
        for (double t : k.taps) sum += t;
        REQUIRE(std::abs(sum - 1.0) < 1e-12);
        for (int i = 0; i < taps / 2; ++i)
            REQUIRE(std::abs(k.taps[size_t(i)] - k.taps[size_t(taps - 1 - i)]) < 1e-12);
    }
}

TEST_CASE("kaiser lowpass: spectral oracle") {
    FilterKernel k = design_lowpass(4.0, 2.0, 16.0, 12);
    // Passband tone at half the cutoff keeps its amplitude within 1 %.
    REQUIRE(std::abs(fir_response(k.taps, 16.0, 2.0) - 1.0) < 0.01);
    // Stopband edge f_c + f_h attenuated at least 20 dB.
    REQUIRE(fir_response(k.taps, 16.0, 6.0) < 0.1);
    // Impulse through the kernel reproduces the separable tap outer product.
    Tensor imp({1, 1, 25, 25});
    imp[12 * 25 + 12] = 1.0;
    Tensor out = upfirdn2d(imp, k.taps, 1, 1, 0, 0, 1.0);
    REQUIRE(out.dim(2) == 14);
    for (int i = 1; i <= 12; ++i)
        for (int j = 1; j <= 12; ++j)
            REQUIRE(out[i * 14 + j] ==
                    Catch::Approx(k.taps[size_t(12 - i)] * k.taps[size_t(12 - j)]).margin(1e-15));
}

TEST_CASE("kaiser lowpass: preconditions") {
    REQUIRE_THROWS_AS(design_lowpass(9.0, 1.0, 16.0, 12), ConfigError);  // above Nyquist
    REQUIRE_THROWS_AS(design_lowpass(-1.0, 1.0, 16.0, 12), ConfigError);
    REQUIRE_THROWS_AS(design_lowpass(2.0, -1.0, 16.0, 12), ConfigError);
}

TEST_CASE("schedule: endpoints and derived quantities at r_N=256") {
    LayerSchedule s = build_schedule(14, 256);
    REQUIRE(s.layers.size() == 14);
    // Critically sampled head.
    REQUIRE(s.layer(0).f_c == 128.0);
    REQUIRE(s.layer(1).f_c == 128.0);
    REQUIRE(s.layer(2).f_c == Catch::Approx(128.0).epsilon(1e-12));
    REQUIRE(s.layer(13).f_c == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(s.layer(0).f_t == Catch::Approx(std::exp2(0.3) * 128.0).epsilon(1e-12));
    REQUIRE(s.layer(13).f_t == Catch::Approx(std::exp2(2.1)).epsilon(1e-12));
    REQUIRE(s.layer(13).r == 9); // min(ceil(2 * 2^2.1), 256)

    for (const auto& b : s.layers) {
        REQUIRE(b.r == std::min(int(std::ceil(2.0 * b.f_t)), 256));
        REQUIRE(b.f_h == Catch::Approx(std::max(double(b.r) / 2.0, b.f_t) - b.f_c).epsilon(1e-12));
    }
    for (size_t l = 1; l < s.layers.size(); ++l) {
        REQUIRE(s.layers[l].f_c <= s.layers[l - 1].f_c);
        REQUIRE(s.layers[l].r <= s.layers[l - 1].r);
    }
}

TEST_CASE("schedule: geometric ratio is constant (r_N=64)") {
    LayerSchedule s = build_schedule(14, 64);
    const double ratio = std::pow(2.0 / 32.0, 1.0 / 11.0);
    for (int l = 3; l < 14; ++l)
        REQUIRE(s.layer(l).f_c / s.layer(l - 1).f_c == Catch::Approx(ratio).epsilon(1e-9));
}

TEST_CASE("schedule: configuration errors") {
    REQUIRE_THROWS_AS(build_schedule(2, 64), ConfigError);
    REQUIRE_THROWS_AS(build_schedule(14, 8), ConfigError); // ceil(2*2^2.1)=9 > 8
}

TEST_CASE("upfirdn: forward/adjoint inner-product identity") {
    RandomStream rng(11, "upfirdn-adj");
    const FilterKernel k = design_lowpass(6.0, 3.0, 32.0, 12);
    struct Case {
        int up, down, lo, hi;
    };
    for (const Case c : {Case{1, 2, 5, 5}, Case{2, 1, 6, 5}, Case{1, 1, 3, 2},
                         Case{2, 1, 0, -1}, Case{1, 4, 10, 10}}) {
        Tensor x = Tensor::randn({2, 3, 12, 16}, rng);
        Tensor y = upfirdn2d(x, k.taps, c.up, c.down, c.lo, c.hi, 1.5);
        Tensor gy = Tensor::randn(y.shape(), rng);
        Tensor gx = upfirdn2d_adjoint(gy, k.taps, c.up, c.down, c.lo, c.hi, 1.5, 12, 16);
        double lhs = 0.0, rhs = 0.0;
        for (int64_t i = 0; i < y.numel(); ++i) lhs += y[i] * gy[i];
        for (int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * gx[i];
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("resample2d: DC preservation") {
    LayerBand band{6.0, 9.0, 3.0, 18};
    Tensor grid = Tensor::full({32, 32}, 5.0);
    Tensor up = resample2d(grid, 32, 64, band);
    REQUIRE(up.dim(0) == 64);
    for (int64_t i = 0; i < up.numel(); ++i) REQUIRE(up[i] == Catch::Approx(5.0).epsilon(1e-9));
    Tensor down = resample2d(grid, 32, 16, band);
    REQUIRE(down.dim(0) == 16);
    for (int64_t i = 0; i < down.numel(); ++i) REQUIRE(down[i] == Catch::Approx(5.0).epsilon(1e-9));
    // Factor 1 is a pass-through.
    Tensor same = resample2d(grid, 32, 32, band);
    REQUIRE(same.dim(0) == 32);
}

TEST_CASE("resample2d: band-limited round trip within 1 % RMS") {
    LayerBand band{10.0, 16.0, 6.0, 32};
    Tensor tone = make_tone(64, 64, 1.5, 1.0, 32.0);
    Tensor up = resample2d(tone, 32, 64, band);
    Tensor back = resample2d(up, 64, 32, band);
    const double err = interior_rms_diff(tone, back, 12);
    const double ref = interior_rms(tone, 12);
    REQUIRE(err < 0.01 * ref);
}

TEST_CASE("resample2d: alias suppression of a tone above output Nyquist") {
    // Downsample 32 -> 16 with cutoff 4; output Nyquist is 8.
    LayerBand band{4.0, 7.0, 3.0, 14};
    Tensor tone = make_tone(96, 96, 11.0, 0.0, 32.0);
    const double e_in = interior_rms(tone, 16);
    Tensor out = resample2d(tone, 32, 16, band);
    const double e_out = interior_rms(out, 8);
    REQUIRE(e_out < 0.1 * e_in); // >= 20 dB down
}

TEST_CASE("resample2d: exact translation equivariance on interior pixels") {
    RandomStream rng(5, "equiv");
    LayerBand band{6.0, 9.0, 3.0, 18};
    const int64_t H = 48, W = 48;
    Tensor x = Tensor::randn({H, W}, rng);

    auto shifted = [&](const Tensor& t, int64_t dy) {
        Tensor s(t.shape());
        const int64_t h = t.dim(0), w = t.dim(1);
        for (int64_t i = 0; i < h; ++i)
            for (int64_t j = 0; j < w; ++j) {
                const int64_t si = std::clamp<int64_t>(i - dy, 0, h - 1);
                s[i * w + j] = t[si * w + j];
            }
        return s;
    };

    SECTION("downsample by 2, shift 2 -> shift 1") {
        Tensor a = resample2d(shifted(x, 2), 32, 16, band);
        Tensor b = shifted(resample2d(x, 32, 16, band), 1);
        REQUIRE(interior_rms_diff(a, b, 8) < 1e-12);
    }
    SECTION("upsample by 2, shift 1 -> shift 2") {
        Tensor a = resample2d(shifted(x, 1), 32, 64, band);
        Tensor b = shifted(resample2d(x, 32, 64, band), 2);
        REQUIRE(interior_rms_diff(a, b, 16) < 1e-12);
    }
}

TEST_CASE("wrapped nonlinearity") {
    LayerBand band{8.0, 12.0, 4.0, 24};

    SECTION("positive inputs reduce to plain rectification") {
        Tensor tone = make_tone(64, 64, 2.0, 1.0, 32.0, 0.3);
        for (int64_t i = 0; i < tone.numel(); ++i) tone[i] += 2.0; // strictly positive
        Tensor out = wrapped_nonlinearity(tone, band, 32);
        const double err = interior_rms_diff(out, tone, 12);
        REQUIRE(err < 0.01 * interior_rms(tone, 12));
    }
    SECTION("zero maps to zero") {
        Tensor z({16, 16});
        Tensor out = wrapped_nonlinearity(z, band, 32);
        for (int64_t i = 0; i < out.numel(); ++i) REQUIRE(out[i] == 0.0);
    }
    SECTION("positive homogeneity") {
        RandomStream rng(9, "wrap");
        Tensor x = Tensor::randn({32, 32}, rng);
        Tensor a = wrapped_nonlinearity(x, band, 32);
        Tensor xs = x.clone();
        for (int64_t i = 0; i < xs.numel(); ++i) xs[i] *= 3.5;
        Tensor b = wrapped_nonlinearity(xs, band, 32);
        for (int64_t i = 0; i < a.numel(); ++i)
            REQUIRE(b[i] == Catch::Approx(3.5 * a[i]).margin(1e-9));
    }
}

TEST_CASE("pad_margin") {
    RandomStream rng(3, "pad");
    Tensor x = Tensor::randn({24, 20}, rng);
    Tensor padded = pad_margin(x, 10);
    REQUIRE(padded.dim(0) == 44);
    REQUIRE(padded.dim(1) == 40);
    REQUIRE(pad_margin(x, 0).dim(0) == 24);
    Tensor back = crop_margin(padded, 10);
    for (int64_t i = 0; i < x.numel(); ++i) REQUIRE(back[i] == x[i]);
    // Edge replication: corner of the padded grid equals the source corner.
    REQUIRE(padded[0] == x[0]);
}

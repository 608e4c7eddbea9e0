#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "helpers.hpp"
#include "unicoal/volume/volume.hpp"
#include "unicoal/volume/volume_io.hpp"

using namespace unicoal;

namespace {

MRVolume make_volume(int64_t S, int64_t H, int64_t W, uint64_t seed, const std::string& mod) {
    RandomStream rng(seed, "vol");
    MRVolume v;
    v.voxels = Tensor::uniform({S, H, W}, rng, -1.0, 1.0);
    v.modality = mod;
    v.thickness_mm = 2.0;
    v.inplane_spacing_mm = {0.9375, 0.9375};
    v.id = "test-vol";
    return v;
}

// Independent clamp oracle for the expected window indices.
std::vector<int64_t> clamp_oracle(int64_t S, int64_t n, int64_t m) {
    std::vector<int64_t> out;
    for (int64_t i = n - (m / 2 - 1); i <= n + m / 2; ++i)
        out.push_back(i < 0 ? 0 : (i >= S ? S - 1 : i));
    return out;
}

} // namespace

TEST_CASE("source_index: tagged examples and properties") {
    auto [n1, d1] = source_index(7, 5.0, 1.0);
    REQUIRE(n1 == 1);
    REQUIRE(d1 == Catch::Approx(0.4).margin(1e-12));

    auto [n2, d2] = source_index(0, 5.0, 1.0);
    REQUIRE(n2 == 0);
    REQUIRE(d2 == 0.0);

    auto [n3, d3] = source_index(10, 5.0, 1.0);
    REQUIRE(n3 == 2);
    REQUIRE(d3 == 0.0);

    REQUIRE_THROWS_AS(source_index(-1, 5.0, 1.0), UserError);
    REQUIRE_THROWS_AS(source_index(1, 0.0, 1.0), UserError);
    REQUIRE_THROWS_AS(source_index(1, 5.0, -1.0), UserError);

    RandomStream rng(1, "prop");
    for (int t = 0; t < 500; ++t) {
        const int64_t k = int64_t(rng.next_below(1000));
        const double h0 = rng.uniform(0.3, 10.0), h1 = rng.uniform(0.3, 10.0);
        auto [n, d] = source_index(k, h0, h1);
        REQUIRE(d >= 0.0);
        REQUIRE(d < 1.0);
    }
}

TEST_CASE("extract_window: clamped index pattern") {
    MRVolume vol = make_volume(10, 6, 6, 2, "T1");
    // Make each slice identifiable by its value.
    for (int64_t s = 0; s < 10; ++s)
        for (int64_t i = 0; i < 36; ++i) vol.voxels[s * 36 + i] = double(s);

    auto expect = [&](int64_t n, const std::vector<int64_t>& want) {
        SliceWindow w = extract_window(vol, n, 4);
        REQUIRE(w.count() == 4);
        for (int64_t i = 0; i < 4; ++i)
            REQUIRE(w.slices[i * 36] == Catch::Approx(double(want[size_t(i)])));
        REQUIRE(window_indices(10, n, 4) == want);
        REQUIRE(window_indices(10, n, 4) == clamp_oracle(10, n, 4));
    };
    expect(1, {0, 1, 2, 3});
    expect(0, {0, 0, 1, 2});
    expect(9, {8, 9, 9, 9});

    REQUIRE_THROWS_AS(extract_window(vol, 10, 4), UserError);
    REQUIRE_THROWS_AS(extract_window(vol, -1, 4), UserError);
    REQUIRE_THROWS_AS(extract_window(vol, 1, 3), UserError);
}

TEST_CASE("replicate_window") {
    MRVolume vol = make_volume(1, 8, 8, 3, "T2");
    Tensor s = vol.slice(0);
    SliceWindow w = replicate_window(s, 4);
    REQUIRE(w.count() == 4);
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t p = 0; p < 64; ++p) REQUIRE(w.slices[i * 64 + p] == s[p]);
    REQUIRE(replicate_window(s, 1).count() == 1);

    // Equivalence with extract_window on a slice-identical volume.
    MRVolume rep;
    rep.voxels = Tensor({6, 8, 8});
    for (int64_t k = 0; k < 6; ++k)
        std::copy(s.begin(), s.end(), rep.voxels.data() + k * 64);
    rep.modality = "T2";
    SliceWindow we = extract_window(rep, 3, 4);
    for (int64_t i = 0; i < we.slices.numel(); ++i) REQUIRE(we.slices[i] == w.slices[i]);
}

TEST_CASE("normalize: percentile scaling") {
    MRVolume vol;
    vol.voxels = Tensor({1, 1, 2}, {0.0, 100.0});
    vol.modality = "T1";
    MRVolume out = normalize(vol, 0.0, 100.0);
    REQUIRE(out.voxels[0] == -1.0);
    REQUIRE(out.voxels[1] == 1.0);

    MRVolume three;
    three.voxels = Tensor({1, 1, 3}, {0.0, 50.0, 100.0});
    MRVolume out3 = normalize(three, 0.0, 100.0);
    REQUIRE(out3.voxels[0] == -1.0);
    REQUIRE(out3.voxels[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(out3.voxels[2] == 1.0);

    MRVolume flat;
    flat.voxels = Tensor::full({2, 3, 3}, 7.0);
    MRVolume outf = normalize(flat, 0.5, 99.5);
    for (int64_t i = 0; i < outf.voxels.numel(); ++i) REQUIRE(outf.voxels[i] == -1.0);

    REQUIRE_THROWS_AS(normalize(vol, 50.0, 50.0), UserError);
}

TEST_CASE("target grid: counts and delta range") {
    SECTION("h1 == h0 reduces to identity grid") {
        TargetGrid g = make_target_grid(12, 3.0, 3.0);
        REQUIRE(g.slice_count == 12);
        for (const auto& [n, d] : g.positions) REQUIRE(d == 0.0);
    }
    SECTION("integer DSF round trip") {
        for (int64_t d : {2, 4, 5, 8}) {
            TargetGrid g = make_target_grid(9, double(d), 1.0);
            REQUIRE(g.slice_count == d * 8 + 1);
            for (const auto& [n, delta] : g.positions) {
                REQUIRE(n < 9);
                REQUIRE(delta >= 0.0);
                REQUIRE(delta < 1.0);
            }
        }
    }
    SECTION("non-integer ratio accepted") {
        TargetGrid g = make_target_grid(10, 16.0 / 3.0, 1.0);
        REQUIRE(g.slice_count == int64_t(std::floor(9.0 * 16.0 / 3.0 + 1e-9)) + 1);
        for (const auto& [n, delta] : g.positions) REQUIRE(n < 10);
    }
}

TEST_CASE("volume file round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "unicoal_io_test";
    fs::create_directories(dir);
    MRVolume vol = make_volume(5, 12, 10, 9, "FLAIR");

    SECTION("nifti, plain and gz") {
        for (const char* name : {"v.nii", "v.nii.gz"}) {
            const std::string p = (dir / name).string();
            write_volume(p, vol);
            MRVolume back = read_volume(p);
            REQUIRE(back.slices() == 5);
            REQUIRE(back.height() == 12);
            REQUIRE(back.width() == 10);
            REQUIRE(back.modality == "FLAIR");
            REQUIRE(back.thickness_mm == Catch::Approx(2.0).margin(1e-6));
            REQUIRE(back.inplane_spacing_mm.first == Catch::Approx(0.9375).margin(1e-6));
            double max_err = 0.0;
            for (int64_t i = 0; i < vol.voxels.numel(); ++i)
                max_err = std::max(max_err, std::abs(back.voxels[i] - vol.voxels[i]));
            REQUIRE(max_err < 1e-6); // float32 storage
        }
    }
    SECTION("raw container is lossless") {
        const std::string p = (dir / "v.json").string();
        write_volume(p, vol);
        MRVolume back = read_volume(p);
        REQUIRE(back.modality == "FLAIR");
        REQUIRE(back.thickness_mm == 2.0);
        for (int64_t i = 0; i < vol.voxels.numel(); ++i)
            REQUIRE(back.voxels[i] == vol.voxels[i]);
    }
    SECTION("unknown extension") {
        REQUIRE_THROWS_AS(read_volume((dir / "v.xyz").string()), UserError);
    }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "unicoal/common.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal {

// A 3-d intensity grid with acquisition geometry. Axis order is [S,H,W]:
// slice (through-plane), row, column.
struct MRVolume {
    Tensor voxels; // [S,H,W]
    std::string modality;
    double thickness_mm = 1.0;
    std::pair<double, double> inplane_spacing_mm{1.0, 1.0};
    std::string id;

    int64_t slices() const { return voxels.dim(0); }
    int64_t height() const { return voxels.dim(1); }
    int64_t width() const { return voxels.dim(2); }

    Tensor slice(int64_t k) const {
        check(k >= 0 && k < slices(), "slice index out of range");
        const int64_t HW = height() * width();
        Tensor s({height(), width()});
        std::copy(voxels.data() + k * HW, voxels.data() + (k + 1) * HW, s.data());
        return s;
    }

    void validate() const {
        check_user(voxels.ndim() == 3, "volume must be 3-d");
        check_user(slices() >= 1 && height() >= 1 && width() >= 1, "empty volume");
        check_user(thickness_mm > 0.0, "thickness must be positive");
        check_user(voxels.all_finite(), "volume contains non-finite intensities");
    }
};

// Ordered stack of m neighboring slices around a target position.
struct SliceWindow {
    Tensor slices; // [m,H,W]
    int64_t center_index = 0;
    std::string source_volume_id;

    int64_t count() const { return slices.dim(0); }
};

// Fractional source coordinate of target slice k: n = floor(k h1/h0),
// delta = k h1/h0 - n.
inline std::pair<int64_t, double> source_index(int64_t k, double h0, double h1) {
    check_user(k >= 0, "source_index: negative slice index");
    check_user(h0 > 0.0 && h1 > 0.0, "source_index: thickness must be positive");
    const double pos = double(k) * h1 / h0;
    int64_t n = int64_t(std::floor(pos));
    double delta = pos - double(n);
    if (delta >= 1.0) { // guard against floating rounding at exact multiples
        n += 1;
        delta = 0.0;
    }
    return {n, delta};
}

// Target positions for reconstructing at thickness h1 from a source with
// S0 slices of thickness h0. The count keeps every position inside the
// scanned extent.
struct TargetGrid {
    double target_thickness_mm = 1.0;
    int64_t slice_count = 0;
    std::vector<std::pair<int64_t, double>> positions; // (n, delta) per k
};

inline TargetGrid make_target_grid(int64_t source_slices, double h0, double h1) {
    check_user(source_slices >= 1, "target grid: empty source");
    check_user(h0 > 0.0 && h1 > 0.0, "target grid: thickness must be positive");
    TargetGrid g;
    g.target_thickness_mm = h1;
    g.slice_count = int64_t(std::floor(double(source_slices - 1) * h0 / h1 + 1e-9)) + 1;
    g.positions.reserve(size_t(g.slice_count));
    for (int64_t k = 0; k < g.slice_count; ++k) {
        auto [n, delta] = source_index(k, h0, h1);
        check(n < source_slices, "target grid: position outside source extent");
        g.positions.push_back({n, delta});
    }
    return g;
}

// Slices n-(m/2-1) .. n+m/2 with out-of-range indices clamped to the volume.
inline SliceWindow extract_window(const MRVolume& vol, int64_t n, int64_t m) {
    check_user(m >= 2 && m % 2 == 0, "extract_window: m must be even");
    const int64_t S = vol.slices();
    check_user(n >= 0 && n < S, "extract_window: center index out of range");
    SliceWindow w;
    w.center_index = n;
    w.source_volume_id = vol.id;
    w.slices = Tensor({m, vol.height(), vol.width()});
    const int64_t HW = vol.height() * vol.width();
    for (int64_t i = 0; i < m; ++i) {
        const int64_t want = n - (m / 2 - 1) + i;
        const int64_t idx = std::clamp<int64_t>(want, 0, S - 1);
        std::copy(vol.voxels.data() + idx * HW, vol.voxels.data() + (idx + 1) * HW,
                  w.slices.data() + i * HW);
    }
    return w;
}

inline std::vector<int64_t> window_indices(int64_t S, int64_t n, int64_t m) {
    std::vector<int64_t> idx;
    for (int64_t i = 0; i < m; ++i)
        idx.push_back(std::clamp<int64_t>(n - (m / 2 - 1) + i, 0, S - 1));
    return idx;
}

// One-to-one mode: the window is m copies of the same slice.
inline SliceWindow replicate_window(const Tensor& slice, int64_t m) {
    check_user(m >= 1, "replicate_window: m must be positive");
    check(slice.ndim() == 2, "replicate_window: expects a 2-d slice");
    SliceWindow w;
    w.center_index = 0;
    w.slices = Tensor({m, slice.dim(0), slice.dim(1)});
    const int64_t HW = slice.numel();
    for (int64_t i = 0; i < m; ++i)
        std::copy(slice.data(), slice.data() + HW, w.slices.data() + i * HW);
    return w;
}

inline double percentile(std::vector<double>& sorted, double pct) {
    check(!sorted.empty(), "percentile of empty data");
    const double pos = pct / 100.0 * double(sorted.size() - 1);
    const size_t lo = size_t(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - double(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Affine map of the [lo_pct, hi_pct] percentile range onto [-1, 1], clipped.
// A constant volume degenerates to all -1 (with a warning).
inline MRVolume normalize(const MRVolume& vol, double lo_pct = 0.5, double hi_pct = 99.5) {
    check_user(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0,
               "normalize: bad percentile range");
    std::vector<double> sorted(vol.voxels.begin(), vol.voxels.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = percentile(sorted, lo_pct);
    const double hi = percentile(sorted, hi_pct);

    MRVolume out = vol;
    out.voxels = vol.voxels.clone();
    if (hi <= lo) {
        std::cerr << "[unicoal] warning: constant volume '" << vol.id
                  << "', normalizing to -1\n";
        std::fill(out.voxels.begin(), out.voxels.end(), -1.0);
        return out;
    }
    for (double& v : out.voxels) v = std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
    return out;
}

} // namespace unicoal

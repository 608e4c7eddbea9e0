#pragma once

#include <vector>

#include "unicoal/common.hpp"
#include "unicoal/signal/filter_design.hpp"
#include "unicoal/signal/schedule.hpp"
#include "unicoal/signal/upfirdn.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal::signal {

// Tap support per unit resampling factor; the kernel spans `kFilterSupport`
// samples of the lower rate, i.e. 6*factor taps at the rate it runs at.
constexpr int kFilterSupport = 6;

inline int integer_factor(int rate_a, int rate_b) {
    check_config(rate_a % rate_b == 0,
                 "resample2d: non-integer factor " + std::to_string(rate_a) + "/" +
                     std::to_string(rate_b) + " unsupported; cascade integer factors");
    return rate_a / rate_b;
}

// Filtered resampling between integer-related rates with edge-replicated
// boundaries. Factor 1 is a pass-through.
inline Tensor resample2d(const Tensor& grid, int rate_in, int rate_out, const LayerBand& band) {
    check_config(rate_in >= 1 && rate_out >= 1, "resample2d: rates must be positive");
    if (rate_in == rate_out) return grid;

    if (rate_out > rate_in) {
        const int u = integer_factor(rate_out, rate_in);
        const int T = kFilterSupport * u;
        const FilterKernel k = design_lowpass(band.f_c, band.f_h, double(rate_out), T);
        const PadPair p = resample_pads(u, 1, T);
        const int64_t pre = ceil_div(p.lo, u);
        Tensor padded = pad2d(grid, pre, pre, pre, pre, PadMode::Edge);
        return upfirdn2d(padded, k.taps, u, 1, int(p.lo - pre * u), int(p.hi - pre * u),
                         double(u));
    }

    const int d = integer_factor(rate_in, rate_out);
    const int T = kFilterSupport * d;
    const FilterKernel k = design_lowpass(band.f_c, band.f_h, double(rate_in), T);
    const PadPair p = resample_pads(1, d, T);
    Tensor padded = pad2d(grid, p.lo, p.lo, p.lo, p.lo, PadMode::Edge);
    return upfirdn2d(padded, k.taps, 1, d, 0, p.hi - p.lo, 1.0);
}

inline Tensor leaky_relu_grid(const Tensor& x, double slope = 0.2) {
    Tensor y = x.clone();
    for (double& v : y)
        if (v < 0.0) v *= slope;
    return y;
}

// Leaky rectification evaluated on a 2x oversampled grid so the harmonics it
// introduces are filtered out before returning to the layer's rate.
inline Tensor wrapped_nonlinearity(const Tensor& grid, const LayerBand& band, int rate,
                                   double slope = 0.2) {
    Tensor up = resample2d(grid, rate, 2 * rate, band);
    Tensor act = leaky_relu_grid(up, slope);
    return resample2d(act, 2 * rate, rate, band);
}

inline Tensor pad_margin(const Tensor& grid, int margin = 10) {
    check_config(margin >= 0, "pad_margin: negative margin");
    if (margin == 0) return grid;
    return pad2d(grid, margin, margin, margin, margin, PadMode::Edge);
}

inline Tensor crop_margin(const Tensor& grid, int margin = 10) {
    if (margin == 0) return grid;
    const int64_t H = grid.dim(grid.ndim() - 2), W = grid.dim(grid.ndim() - 1);
    return crop2d(grid, margin, margin, H - 2 * margin, W - 2 * margin);
}

} // namespace unicoal::signal

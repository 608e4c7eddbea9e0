#pragma once

#include <cmath>
#include <vector>

#include "unicoal/common.hpp"

namespace unicoal::signal {

// Per-layer frequency band of the anti-aliased stacks. All frequencies are
// in cycles per unit (the image spans r_N units), resolutions in samples.
struct LayerBand {
    double f_c = 0.0; // cutoff
    double f_t = 0.0; // minimum acceptable stopband frequency
    double f_h = 0.0; // transition band half-width
    int r = 0;        // sampling resolution, min(ceil(2 f_t), r_N)
};

struct LayerSchedule {
    int num_layers = 0;
    int r_N = 0; // image resolution
    std::vector<LayerBand> layers;

    const LayerBand& layer(int l) const { return layers.at(size_t(l)); } // 0-based
};

// Frequency plan of the 14-layer stacks: the first two layers are critically
// sampled at f_c = r_N/2; from the third layer on, f_c decays geometrically
// to 2 and f_t from 2^0.3 * r_N/2 to 2^2.1. r and f_h follow from f_t.
inline LayerSchedule build_schedule(int num_layers, int r_N) {
    check_config(num_layers >= 3, "build_schedule: need at least 3 layers");
    check_config(r_N >= 8, "build_schedule: image resolution too small");

    const double f_t_end = std::exp2(2.1);
    check_config(int(std::ceil(2.0 * f_t_end)) <= r_N,
                 "build_schedule: resolution " + std::to_string(r_N) +
                     " cannot hold the final stopband (needs >= " +
                     std::to_string(int(std::ceil(2.0 * f_t_end))) + ")");

    LayerSchedule s;
    s.num_layers = num_layers;
    s.r_N = r_N;
    s.layers.resize(size_t(num_layers));

    const double fc_hi = double(r_N) / 2.0;
    const double fc_lo = 2.0;
    const double ft_hi = std::exp2(0.3) * fc_hi;
    const double intervals = double(num_layers - 3);

    for (int l = 0; l < num_layers; ++l) {
        LayerBand& b = s.layers[size_t(l)];
        if (l < 2) {
            b.f_c = fc_hi;
            b.f_t = ft_hi;
        } else {
            const double a = intervals > 0 ? double(l - 2) / intervals : 1.0;
            b.f_c = std::exp2((1.0 - a) * std::log2(fc_hi) + a * std::log2(fc_lo));
            b.f_t = std::exp2((1.0 - a) * std::log2(ft_hi) + a * 2.1);
        }
        b.r = std::min(int(std::ceil(2.0 * b.f_t)), r_N);
        b.f_h = std::max(double(b.r) / 2.0, b.f_t) - b.f_c;
    }
    return s;
}

// Grid resolutions the stacks actually run at: schedule resolutions rounded
// up to powers of two (capped at r_N) so consecutive layers differ by
// integer cascade factors.
inline std::vector<int> operating_rates(const LayerSchedule& s) {
    std::vector<int> rates(size_t(s.num_layers));
    for (int l = 0; l < s.num_layers; ++l)
        rates[size_t(l)] = int(std::min<int64_t>(next_pow2(s.layers[size_t(l)].r), s.r_N));
    return rates;
}

} // namespace unicoal::signal

#pragma once

#include <cmath>
#include <vector>

#include "unicoal/common.hpp"

namespace unicoal::signal {

inline double bessel_i0(double x) {
    // Series expansion; converges quickly for the beta range used here.
    double sum = 1.0, term = 1.0;
    const double y = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= y / double(k * k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

// Kaiser attenuation estimate for a given tap count and transition width,
// width expressed as a fraction of the Nyquist frequency.
inline double kaiser_atten(int numtaps, double width) {
    return 2.285 * double(numtaps - 1) * kPi * width + 7.95;
}

inline double kaiser_beta(double atten) {
    if (atten > 50.0) return 0.1102 * (atten - 8.7);
    if (atten >= 21.0) return 0.5842 * std::pow(atten - 21.0, 0.4) + 0.07886 * (atten - 21.0);
    return 0.0;
}

// Separable 1-d low-pass prototype. `rate` is the sampling rate the filter
// runs at; taps sum to exactly 1 and are symmetric by construction.
struct FilterKernel {
    std::vector<double> taps;
    double rate = 0.0;
    double cutoff = 0.0;
    double beta = 0.0;

    int size() const { return int(taps.size()); }
};

// Kaiser-windowed sinc design. The transition half-width f_h drives beta
// through the standard Kaiser attenuation relation; tap count is chosen by
// the caller (resampling paths use support x factor taps at the high rate).
inline FilterKernel design_lowpass(double f_c, double f_h, double rate, int numtaps = 6) {
    check_config(f_c > 0.0, "design_lowpass: cutoff must be positive");
    check_config(f_h >= 0.0, "design_lowpass: negative transition half-width");
    check_config(numtaps >= 1, "design_lowpass: need at least one tap");
    check_config(rate >= 2.0 * f_c, "design_lowpass: cutoff above Nyquist for rate " + std::to_string(rate));

    FilterKernel k;
    k.rate = rate;
    k.cutoff = f_c;
    const double width = 2.0 * f_h / (rate / 2.0);
    k.beta = kaiser_beta(kaiser_atten(numtaps, width));

    k.taps.resize(size_t(numtaps));
    const double center = double(numtaps - 1) / 2.0;
    const double fn = f_c / rate; // cycles per sample, <= 0.5
    const double i0b = bessel_i0(k.beta);
    for (int n = 0; n < numtaps; ++n) {
        const double m = double(n) - center;
        const double x = 2.0 * kPi * fn * m;
        const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x;
        const double r = numtaps == 1 ? 0.0 : 2.0 * double(n) / double(numtaps - 1) - 1.0;
        const double w = bessel_i0(k.beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        k.taps[size_t(n)] = 2.0 * fn * sinc * w;
    }
    // Unity DC gain; symmetry is preserved because the normalization is uniform.
    double sum = 0.0;
    for (double t : k.taps) sum += t;
    for (double& t : k.taps) t /= sum;
    return k;
}

// Normalized Gaussian taps, radius = ceil(3 sigma). sigma <= 0 collapses to
// the identity kernel.
inline std::vector<double> gaussian_taps(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> taps(size_t(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
        taps[size_t(i + radius)] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

} // namespace unicoal::signal

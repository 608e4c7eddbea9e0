#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "unicoal/ad/autodiff.hpp"
#include "unicoal/ad/ops.hpp"
#include "unicoal/common.hpp"
#include "unicoal/rng.hpp"
#include "unicoal/tensor.hpp"

namespace testutil {

using unicoal::Tensor;

// Continuous-frequency response of a FIR filter at frequency f (cycles/unit)
// for taps running at `rate` samples/unit. Independent of the library's
// filtering code; used as the spectral oracle.
inline double fir_response(const std::vector<double>& taps, double rate, double f) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t n = 0; n < taps.size(); ++n) {
        const double phase = -2.0 * unicoal::kPi * f * double(n) / rate;
        acc += taps[n] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return std::abs(acc);
}

// 2-d cosine tone at (fy, fx) cycles/unit on a half-sample-centered grid.
inline Tensor make_tone(int64_t H, int64_t W, double fy, double fx, double rate,
                        double amp = 1.0, double phase = 0.0) {
    Tensor t({H, W});
    for (int64_t i = 0; i < H; ++i)
        for (int64_t j = 0; j < W; ++j) {
            const double y = (double(i) + 0.5) / rate;
            const double x = (double(j) + 0.5) / rate;
            t[i * W + j] = amp * std::cos(2.0 * unicoal::kPi * (fy * y + fx * x) + phase);
        }
    return t;
}

inline double interior_rms(const Tensor& t, int64_t apron) {
    const int64_t H = t.dim(t.ndim() - 2), W = t.dim(t.ndim() - 1);
    double acc = 0.0;
    int64_t cnt = 0;
    for (int64_t i = apron; i < H - apron; ++i)
        for (int64_t j = apron; j < W - apron; ++j) {
            const double v = t[i * W + j];
            acc += v * v;
            ++cnt;
        }
    return cnt ? std::sqrt(acc / double(cnt)) : 0.0;
}

inline double interior_rms_diff(const Tensor& a, const Tensor& b, int64_t apron) {
    const int64_t H = a.dim(a.ndim() - 2), W = a.dim(a.ndim() - 1);
    double acc = 0.0;
    int64_t cnt = 0;
    for (int64_t i = apron; i < H - apron; ++i)
        for (int64_t j = apron; j < W - apron; ++j) {
            const double v = a[i * W + j] - b[i * W + j];
            acc += v * v;
            ++cnt;
        }
    return cnt ? std::sqrt(acc / double(cnt)) : 0.0;
}

// Central-difference gradient check for a scalar-valued graph builder.
// Returns the maximum relative error across all probed coordinates.
inline double finite_diff_check(
    const std::function<unicoal::ad::Var(const std::vector<unicoal::ad::Var>&)>& f,
    std::vector<Tensor> inputs, double h = 1e-5, int max_coords = 64) {
    using unicoal::ad::Var;

    std::vector<Var> leaves;
    for (auto& t : inputs) leaves.push_back(Var::leaf(t, true));
    Var out = f(leaves);
    std::vector<Var> grads = unicoal::ad::grad(out, leaves);

    double worst = 0.0;
    unicoal::RandomStream pick(7, "fd-pick");
    for (size_t ii = 0; ii < inputs.size(); ++ii) {
        const int64_t n = inputs[ii].numel();
        const int64_t probes = std::min<int64_t>(n, max_coords);
        for (int64_t pi = 0; pi < probes; ++pi) {
            const int64_t idx = probes == n ? pi : int64_t(pick.next_below(uint64_t(n)));
            std::vector<Var> pl, ml;
            for (size_t jj = 0; jj < inputs.size(); ++jj) {
                Tensor tp = inputs[jj].clone(), tm = inputs[jj].clone();
                if (jj == ii) {
                    tp[idx] += h;
                    tm[idx] -= h;
                }
                pl.push_back(Var::constant(tp));
                ml.push_back(Var::constant(tm));
            }
            const double fd = (f(pl).item() - f(ml).item()) / (2.0 * h);
            const double an = grads[ii].val()[idx];
            const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

} // namespace testutil

#pragma once

#include <vector>

#include "unicoal/common.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal::signal {

inline int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline int64_t ceil_div(int64_t a, int64_t b) { return -floor_div(-a, b); }

// Output length of upfirdn with the given padding (pads may be negative,
// which crops instead of padding).
inline int64_t upfirdn_len(int64_t L, int up, int down, int pad_lo, int pad_hi, int T) {
    return floor_div(L * up + pad_lo + pad_hi - T, down) + 1;
}

// Padding that maps content length L to L*up/down while keeping the
// up/down-sampled grids aligned under half-sample-centered coordinates.
struct PadPair {
    int lo = 0;
    int hi = 0;
};

inline PadPair resample_pads(int up, int down, int numtaps) {
    const int total = numtaps - down;
    const int lo = (total + up) / 2;
    return {lo, total - lo};
}

// y[j] = gain * sum_k taps[pad_lo + k*up - j*down] * x[k]; strided 1-d line.
inline void upfirdn_line(const double* x, int64_t L, int64_t sx, const double* taps, int T,
                         int up, int down, int64_t pad_lo, double gain, double* y, int64_t Lout,
                         int64_t sy) {
    for (int64_t j = 0; j < Lout; ++j) {
        const int64_t base = j * down - pad_lo;
        int64_t k0 = ceil_div(base, up);
        int64_t k1 = floor_div(base + T - 1, up);
        if (k0 < 0) k0 = 0;
        if (k1 > L - 1) k1 = L - 1;
        double acc = 0.0;
        for (int64_t k = k0; k <= k1; ++k) acc += taps[k * up - base] * x[k * sx];
        y[j * sy] = gain * acc;
    }
}

// Exact transpose of upfirdn_line: gx[k] = gain * sum_j taps[...] * gy[j].
inline void upfirdn_line_adjoint(const double* gy, int64_t Lout, int64_t sy, const double* taps,
                                 int T, int up, int down, int64_t pad_lo, double gain, double* gx,
                                 int64_t L, int64_t sx) {
    for (int64_t k = 0; k < L; ++k) {
        const int64_t i = pad_lo + k * up;
        int64_t j0 = ceil_div(i - T + 1, down);
        int64_t j1 = floor_div(i, down);
        if (j0 < 0) j0 = 0;
        if (j1 > Lout - 1) j1 = Lout - 1;
        double acc = 0.0;
        for (int64_t j = j0; j <= j1; ++j) acc += taps[i - j * down] * gy[j * sy];
        gx[k * sx] = gain * acc;
    }
}

// Separable 2-d upfirdn over every [H,W] plane of a [...,H,W] tensor.
// `gain` applies per axis (an up-by-u axis wants gain u to preserve DC).
inline Tensor upfirdn2d(const Tensor& x, const std::vector<double>& taps, int up, int down,
                        int pad_lo, int pad_hi, double gain) {
    const auto& s = x.shape();
    check(s.size() >= 2, "upfirdn2d: tensor must have spatial dims");
    const int64_t H = s[s.size() - 2], W = s[s.size() - 1];
    const int64_t planes = x.numel() / (H * W);
    const int T = int(taps.size());
    const int64_t Ho = upfirdn_len(H, up, down, pad_lo, pad_hi, T);
    const int64_t Wo = upfirdn_len(W, up, down, pad_lo, pad_hi, T);
    check(Ho >= 1 && Wo >= 1, "upfirdn2d: output would be empty");

    std::vector<int64_t> mid_shape(s.begin(), s.end() - 2);
    mid_shape.push_back(Ho);
    mid_shape.push_back(W);
    Tensor mid(mid_shape);
    std::vector<int64_t> out_shape(s.begin(), s.end() - 2);
    out_shape.push_back(Ho);
    out_shape.push_back(Wo);
    Tensor out(out_shape);

    const double* xd = x.data();
    double* md = mid.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* xp = xd + p * H * W;
        double* mp = md + p * Ho * W;
        for (int64_t w = 0; w < W; ++w)
            upfirdn_line(xp + w, H, W, taps.data(), T, up, down, pad_lo, gain, mp + w, Ho, W);
    }
    double* od = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* mp = md + p * Ho * W;
        double* op = od + p * Ho * Wo;
        for (int64_t h = 0; h < Ho; ++h)
            upfirdn_line(mp + h * W, W, 1, taps.data(), T, up, down, pad_lo, gain, op + h * Wo, Wo, 1);
    }
    return out;
}

// Transpose of upfirdn2d, mapping cotangents back to the input geometry.
inline Tensor upfirdn2d_adjoint(const Tensor& gy, const std::vector<double>& taps, int up,
                                int down, int pad_lo, int pad_hi, double gain, int64_t Hin,
                                int64_t Win) {
    const auto& s = gy.shape();
    const int64_t Ho = s[s.size() - 2], Wo = s[s.size() - 1];
    const int64_t planes = gy.numel() / (Ho * Wo);
    const int T = int(taps.size());
    check(Ho == upfirdn_len(Hin, up, down, pad_lo, pad_hi, T) &&
              Wo == upfirdn_len(Win, up, down, pad_lo, pad_hi, T),
          "upfirdn2d_adjoint: geometry mismatch");

    std::vector<int64_t> mid_shape(s.begin(), s.end() - 2);
    mid_shape.push_back(Ho);
    mid_shape.push_back(Win);
    Tensor mid(mid_shape);
    std::vector<int64_t> out_shape(s.begin(), s.end() - 2);
    out_shape.push_back(Hin);
    out_shape.push_back(Win);
    Tensor out(out_shape);

    const double* gd = gy.data();
    double* md = mid.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* gp = gd + p * Ho * Wo;
        double* mp = md + p * Ho * Win;
        for (int64_t h = 0; h < Ho; ++h)
            upfirdn_line_adjoint(gp + h * Wo, Wo, 1, taps.data(), T, up, down, pad_lo, gain,
                                 mp + h * Win, Win, 1);
    }
    double* od = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* mp = md + p * Ho * Win;
        double* op = od + p * Hin * Win;
        for (int64_t w = 0; w < Win; ++w)
            upfirdn_line_adjoint(mp + w, Ho, Win, taps.data(), T, up, down, pad_lo, gain, op + w,
                                 Hin, Win);
    }
    return out;
}

enum class PadMode { Zero, Edge, Reflect };

// Pads the two trailing dims; amounts may differ per side.
inline Tensor pad2d(const Tensor& x, int64_t top, int64_t bottom, int64_t left, int64_t right,
                    PadMode mode) {
    const auto& s = x.shape();
    const int64_t H = s[s.size() - 2], W = s[s.size() - 1];
    const int64_t planes = x.numel() / (H * W);
    const int64_t Ho = H + top + bottom, Wo = W + left + right;
    check(Ho >= 1 && Wo >= 1, "pad2d: negative pads shrink below one pixel");
    if (mode == PadMode::Reflect)
        check(top < H && bottom < H && left < W && right < W, "pad2d: reflect pad too large");

    std::vector<int64_t> out_shape(s.begin(), s.end() - 2);
    out_shape.push_back(Ho);
    out_shape.push_back(Wo);
    Tensor out(out_shape);

    auto src_index = [&](int64_t v, int64_t n) -> int64_t {
        if (v >= 0 && v < n) return v;
        switch (mode) {
            case PadMode::Zero: return -1;
            case PadMode::Edge: return v < 0 ? 0 : n - 1;
            case PadMode::Reflect: return v < 0 ? -v : 2 * n - 2 - v;
        }
        return -1;
    };

    const double* xd = x.data();
    double* od = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* xp = xd + p * H * W;
        double* op = od + p * Ho * Wo;
        for (int64_t i = 0; i < Ho; ++i) {
            const int64_t si = src_index(i - top, H);
            for (int64_t j = 0; j < Wo; ++j) {
                const int64_t sj = src_index(j - left, W);
                op[i * Wo + j] = (si < 0 || sj < 0) ? 0.0 : xp[si * W + sj];
            }
        }
    }
    return out;
}

// Adjoint of pad2d: folds cotangents of padded positions back onto the
// source pixels they replicate (zero mode simply crops).
inline Tensor fold2d(const Tensor& gy, int64_t top, int64_t bottom, int64_t left, int64_t right,
                     PadMode mode, int64_t Hin, int64_t Win) {
    const auto& s = gy.shape();
    const int64_t Ho = s[s.size() - 2], Wo = s[s.size() - 1];
    const int64_t planes = gy.numel() / (Ho * Wo);
    check(Ho == Hin + top + bottom && Wo == Win + left + right, "fold2d: geometry mismatch");

    std::vector<int64_t> out_shape(s.begin(), s.end() - 2);
    out_shape.push_back(Hin);
    out_shape.push_back(Win);
    Tensor out(out_shape);

    auto src_index = [&](int64_t v, int64_t n) -> int64_t {
        if (v >= 0 && v < n) return v;
        switch (mode) {
            case PadMode::Zero: return -1;
            case PadMode::Edge: return v < 0 ? 0 : n - 1;
            case PadMode::Reflect: return v < 0 ? -v : 2 * n - 2 - v;
        }
        return -1;
    };

    const double* gd = gy.data();
    double* od = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* gp = gd + p * Ho * Wo;
        double* op = od + p * Hin * Win;
        for (int64_t i = 0; i < Ho; ++i) {
            const int64_t si = src_index(i - top, Hin);
            if (si < 0) continue;
            for (int64_t j = 0; j < Wo; ++j) {
                const int64_t sj = src_index(j - left, Win);
                if (sj < 0) continue;
                op[si * Win + sj] += gp[i * Wo + j];
            }
        }
    }
    return out;
}

inline Tensor crop2d(const Tensor& x, int64_t top, int64_t left, int64_t Hout, int64_t Wout) {
    return pad2d(x, -top, Hout - (x.dim(x.ndim() - 2) - top), -left,
                 Wout - (x.dim(x.ndim() - 1) - left), PadMode::Zero);
}

} // namespace unicoal::signal

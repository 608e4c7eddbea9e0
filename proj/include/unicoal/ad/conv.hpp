#pragma once

#include <Eigen/Dense>

#include <vector>

#include "unicoal/ad/ops.hpp"

namespace unicoal::ad {

// Stride-1 zero-padded convolutions via im2col + GEMM. The three ops
// (forward, input-gradient, weight-gradient) are mutually closed under
// differentiation, which gives exact higher-order gradients.

namespace detail {

inline void im2col(const double* x, int64_t C, int64_t H, int64_t W, int kh, int kw, int pad,
                   double* cols, int64_t Ho, int64_t Wo) {
    for (int64_t c = 0; c < C; ++c)
        for (int di = 0; di < kh; ++di)
            for (int dj = 0; dj < kw; ++dj) {
                double* row = cols + ((c * kh + di) * kw + dj) * Ho * Wo;
                for (int64_t i = 0; i < Ho; ++i) {
                    const int64_t si = i + di - pad;
                    if (si < 0 || si >= H) {
                        std::fill(row + i * Wo, row + (i + 1) * Wo, 0.0);
                        continue;
                    }
                    for (int64_t j = 0; j < Wo; ++j) {
                        const int64_t sj = j + dj - pad;
                        row[i * Wo + j] = (sj < 0 || sj >= W) ? 0.0 : x[(c * H + si) * W + sj];
                    }
                }
            }
}

inline void col2im_add(const double* cols, int64_t C, int64_t H, int64_t W, int kh, int kw,
                       int pad, double* x, int64_t Ho, int64_t Wo) {
    for (int64_t c = 0; c < C; ++c)
        for (int di = 0; di < kh; ++di)
            for (int dj = 0; dj < kw; ++dj) {
                const double* row = cols + ((c * kh + di) * kw + dj) * Ho * Wo;
                for (int64_t i = 0; i < Ho; ++i) {
                    const int64_t si = i + di - pad;
                    if (si < 0 || si >= H) continue;
                    for (int64_t j = 0; j < Wo; ++j) {
                        const int64_t sj = j + dj - pad;
                        if (sj >= 0 && sj < W) x[(c * H + si) * W + sj] += row[i * Wo + j];
                    }
                }
            }
}

inline Tensor conv2d_fwd(const Tensor& x, const Tensor& w, int pad) {
    const auto& sx = x.shape();
    const auto& sw = w.shape();
    check(sx.size() == 4 && sw.size() == 4, "conv2d: expects 4-d tensors");
    check(sx[1] == sw[1], "conv2d: channel mismatch");
    const int64_t N = sx[0], Ci = sx[1], H = sx[2], W = sx[3];
    const int64_t Co = sw[0];
    const int kh = int(sw[2]), kw = int(sw[3]);
    const int64_t Ho = H + 2 * pad - kh + 1, Wo = W + 2 * pad - kw + 1;
    check(Ho >= 1 && Wo >= 1, "conv2d: kernel larger than padded input");

    Tensor y({N, Co, Ho, Wo});
    const int64_t K = Ci * kh * kw;
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n) {
        std::vector<double> cols(size_t(K * Ho * Wo));
        im2col(x.data() + n * Ci * H * W, Ci, H, W, kh, kw, pad, cols.data(), Ho, Wo);
        ECMap mw(w.data(), Co, K);
        ECMap mc(cols.data(), K, Ho * Wo);
        EMap my(y.data() + n * Co * Ho * Wo, Co, Ho * Wo);
        my.noalias() = mw * mc;
    }
    return y;
}

inline Tensor conv_transpose2d_fwd(const Tensor& g, const Tensor& w, int pad) {
    const auto& sg = g.shape();
    const auto& sw = w.shape();
    check(sg.size() == 4 && sw.size() == 4 && sg[1] == sw[0], "conv_transpose2d: shape mismatch");
    const int64_t N = sg[0], Co = sg[1], Ho = sg[2], Wo = sg[3];
    const int64_t Ci = sw[1];
    const int kh = int(sw[2]), kw = int(sw[3]);
    const int64_t H = Ho + kh - 1 - 2 * pad, W = Wo + kw - 1 - 2 * pad;
    check(H >= 1 && W >= 1, "conv_transpose2d: empty output");

    Tensor x({N, Ci, H, W});
    const int64_t K = Ci * kh * kw;
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n) {
        std::vector<double> cols(size_t(K * Ho * Wo));
        ECMap mw(w.data(), Co, K);
        ECMap mg(g.data() + n * Co * Ho * Wo, Co, Ho * Wo);
        EMap mc(cols.data(), K, Ho * Wo);
        mc.noalias() = mw.transpose() * mg;
        col2im_add(cols.data(), Ci, H, W, kh, kw, pad, x.data() + n * Ci * H * W, Ho, Wo);
    }
    return x;
}

inline Tensor conv2d_wgrad_fwd(const Tensor& x, const Tensor& g, int pad, int kh, int kw) {
    const auto& sx = x.shape();
    const auto& sg = g.shape();
    check(sx.size() == 4 && sg.size() == 4 && sx[0] == sg[0], "conv2d_wgrad: shape mismatch");
    const int64_t N = sx[0], Ci = sx[1], H = sx[2], W = sx[3];
    const int64_t Co = sg[1], Ho = sg[2], Wo = sg[3];
    check(Ho == H + 2 * pad - kh + 1 && Wo == W + 2 * pad - kw + 1,
          "conv2d_wgrad: geometry mismatch");

    const int64_t K = Ci * kh * kw;
    Tensor wg({Co, Ci, kh, kw});
    // Per-sample partial products are summed in fixed order for determinism.
    std::vector<Tensor> partial;
    partial.resize(size_t(N));
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < N; ++n) {
        std::vector<double> cols(size_t(K * Ho * Wo));
        im2col(x.data() + n * Ci * H * W, Ci, H, W, int(kh), int(kw), pad, cols.data(), Ho, Wo);
        Tensor part({Co, Ci, int64_t(kh), int64_t(kw)});
        ECMap mg(g.data() + n * Co * Ho * Wo, Co, Ho * Wo);
        ECMap mc(cols.data(), K, Ho * Wo);
        EMap mp(part.data(), Co, K);
        mp.noalias() = mg * mc.transpose();
        partial[size_t(n)] = part;
    }
    for (int64_t n = 0; n < N; ++n) {
        const double* pp = partial[size_t(n)].data();
        double* pw = wg.data();
        const int64_t cnt = wg.numel();
        for (int64_t i = 0; i < cnt; ++i) pw[i] += pp[i];
    }
    return wg;
}

} // namespace detail

inline Var conv2d(const Var& x, const Var& w, int pad);
inline Var conv_transpose2d(const Var& g, const Var& w, int pad);
inline Var conv2d_wgrad(const Var& x, const Var& g, int pad, int kh, int kw);

inline Var conv2d(const Var& x, const Var& w, int pad) {
    Tensor y = detail::conv2d_fwd(x.val(), w.val(), pad);
    const int kh = int(w.dim(2)), kw = int(w.dim(3));
    return make_op(std::move(y), {x, w}, [x, w, pad, kh, kw](const Var& gy) {
        return std::vector<Var>{conv_transpose2d(gy, w, pad), conv2d_wgrad(x, gy, pad, kh, kw)};
    });
}

inline Var conv_transpose2d(const Var& g, const Var& w, int pad) {
    Tensor y = detail::conv_transpose2d_fwd(g.val(), w.val(), pad);
    return make_op(std::move(y), {g, w}, [g, w, pad](const Var& gy) {
        const int kh = int(w.dim(2)), kw = int(w.dim(3));
        return std::vector<Var>{conv2d(gy, w, pad), conv2d_wgrad(gy, g, pad, kh, kw)};
    });
}

inline Var conv2d_wgrad(const Var& x, const Var& g, int pad, int kh, int kw) {
    Tensor y = detail::conv2d_wgrad_fwd(x.val(), g.val(), pad, kh, kw);
    return make_op(std::move(y), {x, g}, [x, g, pad](const Var& gy) {
        return std::vector<Var>{conv_transpose2d(g, gy, pad), conv2d(x, gy, pad)};
    });
}

} // namespace unicoal::ad

#pragma once

#include <memory>
#include <vector>

#include "unicoal/ad/ops.hpp"
#include "unicoal/signal/filter_design.hpp"
#include "unicoal/signal/upfirdn.hpp"

namespace unicoal::ad {

using signal::PadMode;

inline Var upfirdn2d_op(const Var& x, std::shared_ptr<const std::vector<double>> taps, int up,
                        int down, int pad_lo, int pad_hi, double gain);
inline Var upfirdn2d_adjoint_op(const Var& gy, std::shared_ptr<const std::vector<double>> taps,
                                int up, int down, int pad_lo, int pad_hi, double gain,
                                int64_t Hin, int64_t Win);

inline Var upfirdn2d_op(const Var& x, std::shared_ptr<const std::vector<double>> taps, int up,
                        int down, int pad_lo, int pad_hi, double gain) {
    Tensor y = signal::upfirdn2d(x.val(), *taps, up, down, pad_lo, pad_hi, gain);
    const int64_t Hin = x.dim(x.shape().size() - 2), Win = x.dim(x.shape().size() - 1);
    return make_op(std::move(y), {x},
                   [taps, up, down, pad_lo, pad_hi, gain, Hin, Win](const Var& gy) {
                       return std::vector<Var>{upfirdn2d_adjoint_op(gy, taps, up, down, pad_lo,
                                                                    pad_hi, gain, Hin, Win)};
                   });
}

inline Var upfirdn2d_adjoint_op(const Var& gy, std::shared_ptr<const std::vector<double>> taps,
                                int up, int down, int pad_lo, int pad_hi, double gain,
                                int64_t Hin, int64_t Win) {
    Tensor y = signal::upfirdn2d_adjoint(gy.val(), *taps, up, down, pad_lo, pad_hi, gain, Hin, Win);
    return make_op(std::move(y), {gy}, [taps, up, down, pad_lo, pad_hi, gain](const Var& g2) {
        return std::vector<Var>{upfirdn2d_op(g2, taps, up, down, pad_lo, pad_hi, gain)};
    });
}

inline Var pad2d_op(const Var& x, int64_t top, int64_t bottom, int64_t left, int64_t right,
                    PadMode mode);
inline Var fold2d_op(const Var& gy, int64_t top, int64_t bottom, int64_t left, int64_t right,
                     PadMode mode, int64_t Hin, int64_t Win);

inline Var pad2d_op(const Var& x, int64_t top, int64_t bottom, int64_t left, int64_t right,
                    PadMode mode) {
    Tensor y = signal::pad2d(x.val(), top, bottom, left, right, mode);
    const int64_t Hin = x.dim(x.shape().size() - 2), Win = x.dim(x.shape().size() - 1);
    return make_op(std::move(y), {x}, [top, bottom, left, right, mode, Hin, Win](const Var& gy) {
        return std::vector<Var>{fold2d_op(gy, top, bottom, left, right, mode, Hin, Win)};
    });
}

inline Var fold2d_op(const Var& gy, int64_t top, int64_t bottom, int64_t left, int64_t right,
                     PadMode mode, int64_t Hin, int64_t Win) {
    Tensor y = signal::fold2d(gy.val(), top, bottom, left, right, mode, Hin, Win);
    return make_op(std::move(y), {gy}, [top, bottom, left, right, mode](const Var& g2) {
        return std::vector<Var>{pad2d_op(g2, top, bottom, left, right, mode)};
    });
}

inline Var crop2d_op(const Var& x, int64_t top, int64_t left, int64_t Hout, int64_t Wout) {
    const int64_t H = x.dim(x.shape().size() - 2), W = x.dim(x.shape().size() - 1);
    return pad2d_op(x, -top, Hout - (H - top), -left, Wout - (W - left), PadMode::Zero);
}

// Gaussian smoothing at the same rate with reflective boundaries; sigma <= 0
// is the identity.
inline Var blur2d(const Var& x, double sigma) {
    if (sigma <= 0.0) return x;
    auto taps = std::make_shared<const std::vector<double>>(signal::gaussian_taps(sigma));
    const int64_t radius = (int64_t(taps->size()) - 1) / 2;
    Var padded = pad2d_op(x, radius, radius, radius, radius, PadMode::Reflect);
    return upfirdn2d_op(padded, taps, 1, 1, 0, 0, 1.0);
}

// Separable bilinear resize under half-sample-centered coordinates; linear,
// with an exact adjoint.
namespace detail {

struct ResizeTable {
    std::vector<int64_t> i0, i1;
    std::vector<double> w0, w1;
};

inline ResizeTable resize_table(int64_t n_in, int64_t n_out) {
    ResizeTable t;
    t.i0.resize(size_t(n_out));
    t.i1.resize(size_t(n_out));
    t.w0.resize(size_t(n_out));
    t.w1.resize(size_t(n_out));
    for (int64_t i = 0; i < n_out; ++i) {
        double p = (double(i) + 0.5) * double(n_in) / double(n_out) - 0.5;
        p = std::min(std::max(p, 0.0), double(n_in - 1));
        const int64_t lo = int64_t(std::floor(p));
        const int64_t hi = std::min(lo + 1, n_in - 1);
        t.i0[size_t(i)] = lo;
        t.i1[size_t(i)] = hi;
        t.w1[size_t(i)] = p - double(lo);
        t.w0[size_t(i)] = 1.0 - t.w1[size_t(i)];
    }
    return t;
}

inline Tensor resize_bilinear_fwd(const Tensor& x, int64_t Ho, int64_t Wo) {
    const auto& s = x.shape();
    const int64_t H = s[s.size() - 2], W = s[s.size() - 1];
    const int64_t planes = x.numel() / (H * W);
    const ResizeTable th = resize_table(H, Ho), tw = resize_table(W, Wo);
    std::vector<int64_t> out_shape(s.begin(), s.end() - 2);
    out_shape.push_back(Ho);
    out_shape.push_back(Wo);
    Tensor out(out_shape);
    const double* px = x.data();
    double* po = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* xp = px + p * H * W;
        double* op = po + p * Ho * Wo;
        for (int64_t i = 0; i < Ho; ++i)
            for (int64_t j = 0; j < Wo; ++j) {
                const double a = th.w0[size_t(i)] * xp[th.i0[size_t(i)] * W + tw.i0[size_t(j)]] +
                                 th.w1[size_t(i)] * xp[th.i1[size_t(i)] * W + tw.i0[size_t(j)]];
                const double b = th.w0[size_t(i)] * xp[th.i0[size_t(i)] * W + tw.i1[size_t(j)]] +
                                 th.w1[size_t(i)] * xp[th.i1[size_t(i)] * W + tw.i1[size_t(j)]];
                op[i * Wo + j] = tw.w0[size_t(j)] * a + tw.w1[size_t(j)] * b;
            }
    }
    return out;
}

inline Tensor resize_bilinear_adj(const Tensor& gy, int64_t Hin, int64_t Win) {
    const auto& s = gy.shape();
    const int64_t Ho = s[s.size() - 2], Wo = s[s.size() - 1];
    const int64_t planes = gy.numel() / (Ho * Wo);
    const ResizeTable th = resize_table(Hin, Ho), tw = resize_table(Win, Wo);
    std::vector<int64_t> out_shape(s.begin(), s.end() - 2);
    out_shape.push_back(Hin);
    out_shape.push_back(Win);
    Tensor out(out_shape);
    const double* pg = gy.data();
    double* po = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
        const double* gp = pg + p * Ho * Wo;
        double* op = po + p * Hin * Win;
        for (int64_t i = 0; i < Ho; ++i)
            for (int64_t j = 0; j < Wo; ++j) {
                const double g = gp[i * Wo + j];
                op[th.i0[size_t(i)] * Win + tw.i0[size_t(j)]] += th.w0[size_t(i)] * tw.w0[size_t(j)] * g;
                op[th.i1[size_t(i)] * Win + tw.i0[size_t(j)]] += th.w1[size_t(i)] * tw.w0[size_t(j)] * g;
                op[th.i0[size_t(i)] * Win + tw.i1[size_t(j)]] += th.w0[size_t(i)] * tw.w1[size_t(j)] * g;
                op[th.i1[size_t(i)] * Win + tw.i1[size_t(j)]] += th.w1[size_t(i)] * tw.w1[size_t(j)] * g;
            }
    }
    return out;
}

} // namespace detail

inline Var resize_bilinear(const Var& x, int64_t Ho, int64_t Wo);
inline Var resize_bilinear_adjoint(const Var& gy, int64_t Hin, int64_t Win);

inline Var resize_bilinear(const Var& x, int64_t Ho, int64_t Wo) {
    const int64_t Hin = x.dim(x.shape().size() - 2), Win = x.dim(x.shape().size() - 1);
    if (Hin == Ho && Win == Wo) return x;
    Tensor y = detail::resize_bilinear_fwd(x.val(), Ho, Wo);
    return make_op(std::move(y), {x}, [Hin, Win](const Var& gy) {
        return std::vector<Var>{resize_bilinear_adjoint(gy, Hin, Win)};
    });
}

inline Var resize_bilinear_adjoint(const Var& gy, int64_t Hin, int64_t Win) {
    Tensor y = detail::resize_bilinear_adj(gy.val(), Hin, Win);
    const int64_t Ho = gy.dim(gy.shape().size() - 2), Wo = gy.dim(gy.shape().size() - 1);
    return make_op(std::move(y), {gy}, [Ho, Wo](const Var& g2) {
        return std::vector<Var>{resize_bilinear(g2, Ho, Wo)};
    });
}

} // namespace unicoal::ad

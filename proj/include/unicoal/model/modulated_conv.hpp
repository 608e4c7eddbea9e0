#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "unicoal/ad/conv.hpp"
#include "unicoal/ad/ops.hpp"
#include "unicoal/model/params.hpp"

namespace unicoal {

constexpr double kDemodEpsilon = 1e-8;

// softplus(x + c) == 1 at x == 0, so styles start out neutral.
inline double softplus_unit_bias() { return std::log(std::exp(1.0) - 1.0); }

// Explicit per-style weight demodulation; the network path uses the
// equivalent input/output scaling, this form exists for the contract and
// its norm invariant. Weight layout [out][in][spatial], style indexed by
// input channel.
inline Tensor demodulate_weights(const Tensor& w, const std::vector<double>& s,
                                 double eps = kDemodEpsilon) {
    check(w.ndim() == 4, "demodulate_weights: weights must be [Co,Ci,kh,kw]");
    const int64_t Co = w.dim(0), Ci = w.dim(1), K = w.dim(2) * w.dim(3);
    check(int64_t(s.size()) == Ci, "demodulate_weights: style length mismatch");
    for (double v : s) check(std::isfinite(v), "demodulate_weights: non-finite style");

    Tensor out({Co, Ci, w.dim(2), w.dim(3)});
    for (int64_t j = 0; j < Co; ++j) {
        double norm_sq = 0.0;
        for (int64_t i = 0; i < Ci; ++i)
            for (int64_t k = 0; k < K; ++k) {
                const double m = s[size_t(i)] * w[(j * Ci + i) * K + k];
                norm_sq += m * m;
            }
        const double inv = 1.0 / std::sqrt(norm_sq + eps);
        for (int64_t i = 0; i < Ci; ++i)
            for (int64_t k = 0; k < K; ++k)
                out[(j * Ci + i) * K + k] = s[size_t(i)] * w[(j * Ci + i) * K + k] * inv;
    }
    return out;
}

// Style-modulated convolution with optional demodulation, computed as
// input scaling -> shared convolution -> per-channel rescale, which is
// algebraically identical to convolving with demodulated weights.
class ModulatedConv {
public:
    ModulatedConv() = default;

    ModulatedConv(ParamStore& params, const std::string& prefix, int64_t in_ch, int64_t out_ch,
                  int kernel, int64_t style_src_dim, bool demodulate, RandomStream& rng)
        : kernel_(kernel), pad_(kernel / 2), demodulate_(demodulate) {
        const double w_std = std::sqrt(2.0 / double(in_ch * kernel * kernel));
        weight_ = params.create(prefix + ".weight", {out_ch, in_ch, kernel, kernel}, rng, w_std);
        bias_ = params.create_filled(prefix + ".bias", {out_ch}, 0.0);
        affine_w_ = params.create(prefix + ".affine.weight", {in_ch, style_src_dim}, rng,
                                  1.0 / std::sqrt(double(style_src_dim)));
        affine_b_ = params.create_filled(prefix + ".affine.bias", {in_ch}, softplus_unit_bias());
    }

    // style_src: [N, style_src_dim]; x: [N, in_ch, H, W].
    ad::Var forward(const ad::Var& x, const ad::Var& style_src) const {
        ad::Var s = styles(style_src);
        ad::Var y = ad::conv2d(ad::scale_channels(x, s), weight_, pad_);
        if (demodulate_) {
            const int64_t Co = weight_.dim(0), Ci = weight_.dim(1);
            const int64_t K = weight_.dim(2) * weight_.dim(3);
            // d[n,j] = 1/sqrt(sum_i s[n,i]^2 * sum_k w[j,i,k]^2 + eps)
            ad::Var wsq = ad::reshape(
                ad::sum_cols(ad::reshape(ad::square(weight_), {Co * Ci, K})), {Co, Ci});
            ad::Var denom_sq = ad::matmul(ad::square(s), wsq, false, true); // [N, Co]
            y = ad::scale_channels(y, ad::rsqrt_eps(denom_sq, kDemodEpsilon));
        }
        return ad::add_channel_bias(y, bias_);
    }

    // Positive styles via a shifted softplus (unit at init).
    ad::Var styles(const ad::Var& style_src) const {
        return ad::softplus(ad::linear(style_src, affine_w_, affine_b_));
    }

    const ad::Var& weight() const { return weight_; }
    int64_t in_channels() const { return weight_.dim(1); }
    int64_t out_channels() const { return weight_.dim(0); }

private:
    int kernel_ = 3;
    int pad_ = 1;
    bool demodulate_ = true;
    ad::Var weight_, bias_, affine_w_, affine_b_;
};

} // namespace unicoal

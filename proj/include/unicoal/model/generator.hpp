#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "unicoal/ad/conv.hpp"
#include "unicoal/ad/ops.hpp"
#include "unicoal/ad/resample.hpp"
#include "unicoal/config.hpp"
#include "unicoal/model/mapping.hpp"
#include "unicoal/model/modulated_conv.hpp"
#include "unicoal/model/params.hpp"
#include "unicoal/signal/filter_design.hpp"
#include "unicoal/signal/schedule.hpp"
#include "unicoal/signal/upfirdn.hpp"
#include "unicoal/volume/volume.hpp"

namespace unicoal {

using TapsPtr = std::shared_ptr<const std::vector<double>>;

inline TapsPtr make_taps(double f_c, double f_h, double rate, int numtaps) {
    return std::make_shared<const std::vector<double>>(
        signal::design_lowpass(f_c, f_h, rate, numtaps).taps);
}

// Co-modulated alias-free generator: attribute-modulated encoder, mapping
// networks for the stochastic and encoder attribute representations, and a
// skip-connected synthesizer whose resampling/nonlinearity operators follow
// the layer frequency schedule.
class Generator {
public:
    struct EncoderOut {
        ad::Var e;                   // image-conditioned representation [N, style]
        ad::Var bottleneck;          // [N, C_bot, 4, 4]
        std::map<int, ad::Var> skips; // operating rate -> canvas feature
    };

    Generator() = default;

    Generator(ParamStore& params, const ModelConfig& cfg, RandomStream& rng) : cfg_(cfg) {
        cfg_.validate();
        sched_ = signal::build_schedule(cfg.num_layers, cfg.image_size);
        rates_ = signal::operating_rates(sched_);
        const int L = cfg.num_layers;

        mapping_m_ = MappingNetwork(params, cfg, "g.map_m", true, rng);
        mapping_n_ = MappingNetwork(params, cfg, "g.map_n", false, rng);

        enc_convs_.resize(size_t(L));
        dec_convs_.resize(size_t(L));
        wrap_taps_.resize(size_t(L));
        enc_down_taps_.resize(size_t(L));
        dec_up_taps_.resize(size_t(L));

        for (int l = 0; l < L; ++l) {
            const auto& b = sched_.layer(l);
            wrap_taps_[size_t(l)] = make_taps(b.f_c, b.f_h, 2.0 * rates_[size_t(l)], 12);
            if (l > 0 && rates_[size_t(l - 1)] > rates_[size_t(l)]) {
                // Filter runs at the higher rate on both sides of the mirror.
                enc_down_taps_[size_t(l)] = make_taps(b.f_c, b.f_h, rates_[size_t(l - 1)], 12);
                dec_up_taps_[size_t(l)] = enc_down_taps_[size_t(l)];
            }
        }

        // Encoder convolutions, modulated by the encoder attributes v.
        for (int l = 0; l < L; ++l) {
            const int64_t in_ch = l == 0 ? cfg.window : channels(rates_[size_t(l - 1)]);
            const int64_t out_ch = channels(rates_[size_t(l)]);
            enc_convs_[size_t(l)] = ModulatedConv(params, "g.enc.l" + two(l), in_ch, out_ch, 3,
                                                  cfg.style_dim, true, rng);
        }

        // Bottleneck resample to 4x4 and the image-conditioned representation.
        const int rate_last = rates_[size_t(L - 1)];
        check_config(rate_last % 4 == 0, "final operating rate must be divisible by 4");
        bottleneck_factor_ = rate_last / 4;
        const auto& bl = sched_.layer(L - 1);
        bottleneck_taps_ = make_taps(bl.f_c, bl.f_h, rate_last, 6 * bottleneck_factor_);
        c_bot_ = channels(rate_last);
        const int64_t flat = c_bot_ * 16;
        e_w_ = params.create("g.e_head.weight", {cfg.style_dim, flat}, rng,
                             std::sqrt(2.0 / double(flat)));
        e_b_ = params.create_filled("g.e_head.bias", {cfg.style_dim}, 0.0);

        // Synthesizer convolutions, modulated by concat(e, w).
        for (int l = L - 1; l >= 0; --l) {
            int64_t in_ch;
            if (l == L - 1)
                in_ch = c_bot_ + channels(rates_[size_t(l)]);
            else if (rates_[size_t(l)] > rates_[size_t(l + 1)])
                in_ch = channels(rates_[size_t(l + 1)]) + channels(rates_[size_t(l)]);
            else
                in_ch = channels(rates_[size_t(l + 1)]);
            dec_convs_[size_t(l)] = ModulatedConv(params, "g.dec.l" + two(l), in_ch,
                                                  channels(rates_[size_t(l)]), 3,
                                                  2 * cfg.style_dim, true, rng);
        }
        out_conv_ = ModulatedConv(params, "g.dec.rgb", channels(rates_[0]), 1, 1,
                                  2 * cfg.style_dim, false, rng);
    }

    int64_t channels(int rate) const {
        const int64_t c = int64_t(cfg_.channel_base) * cfg_.image_size / rate;
        return std::min<int64_t>(std::max<int64_t>(c, 4), cfg_.channel_cap);
    }

    const signal::LayerSchedule& schedule() const { return sched_; }
    const std::vector<int>& operating_rates() const { return rates_; }
    const ModelConfig& config() const { return cfg_; }
    const std::vector<ModulatedConv>& encoder_convs() const { return enc_convs_; }

    // Stochastic attribute representation w from (latent, c1, delta).
    ad::Var map_attributes(const std::vector<AttributeCondition>& conds) const {
        std::vector<int64_t> mods;
        std::vector<double> deltas;
        Tensor lat({int64_t(conds.size()), cfg_.latent_dim});
        for (size_t i = 0; i < conds.size(); ++i) {
            conds[i].validate(cfg_);
            mods.push_back(cfg_.modality_index(conds[i].target_modality));
            deltas.push_back(conds[i].delta);
            std::copy(conds[i].latent.begin(), conds[i].latent.end(),
                      lat.data() + int64_t(i) * cfg_.latent_dim);
        }
        return mapping_m_.forward(mods, deltas, ad::Var::constant(lat));
    }

    // Encoder attribute representation v from (c1, delta); no latent input.
    ad::Var map_encoder_attributes(const std::vector<std::string>& modalities,
                                   const std::vector<double>& deltas) const {
        std::vector<int64_t> mods;
        for (const auto& m : modalities) mods.push_back(cfg_.modality_index(m));
        for (double d : deltas) check_user(d >= 0.0 && d < 1.0, "delta must lie in [0,1)");
        return mapping_n_.forward(mods, deltas, ad::Var());
    }

    // 14 layers of modulated convolution, rectification and filtered
    // downsampling; keeps the last feature at each rate as a skip.
    EncoderOut encode(const ad::Var& window, const ad::Var& v) const {
        check(window.shape().size() == 4, "encode: window must be [N,m,H,W]");
        check(window.dim(1) == cfg_.window, "encode: window slice count mismatch");
        check(window.dim(2) == cfg_.image_size && window.dim(3) == cfg_.image_size,
              "encode: resolution does not match the schedule (expected " +
                  std::to_string(cfg_.image_size) + ")");
        const int L = cfg_.num_layers;
        const int m = cfg_.margin;

        EncoderOut out;
        ad::Var x = ad::pad2d_op(window, m, m, m, m, ad::PadMode::Edge);
        for (int l = 0; l < L; ++l) {
            x = enc_convs_[size_t(l)].forward(x, v);
            x = ad::scale(ad::leaky_relu(x, 0.2), std::sqrt(2.0));
            const bool last_at_rate = l == L - 1 || rates_[size_t(l + 1)] < rates_[size_t(l)];
            if (last_at_rate) out.skips.emplace(rates_[size_t(l)], x);
            if (l + 1 < L && rates_[size_t(l + 1)] < rates_[size_t(l)]) {
                x = ad::upfirdn2d_op(x, enc_down_taps_[size_t(l + 1)], 1, 2, 5, 5, 1.0);
                x = ad::pad2d_op(x, m / 2, m / 2, m / 2, m / 2, ad::PadMode::Edge);
            }
        }

        // Resample the final map to 4x4 and project to e.
        const int64_t canvas = x.dim(2);
        ad::Var content = ad::crop2d_op(x, m, m, canvas - 2 * m, canvas - 2 * m);
        const int d = bottleneck_factor_;
        const signal::PadPair pp = signal::resample_pads(1, d, 6 * d);
        ad::Var padded = ad::pad2d_op(content, pp.lo, pp.lo, pp.lo, pp.lo, ad::PadMode::Edge);
        out.bottleneck = ad::upfirdn2d_op(padded, bottleneck_taps_, 1, d, 0, pp.hi - pp.lo, 1.0);
        ad::Var flat = ad::reshape(out.bottleneck, {window.dim(0), c_bot_ * 16});
        out.e = ad::linear(flat, e_w_, e_b_);
        return out;
    }

    // Mirrors the encoder: modulated convolution, filtered upsampling where
    // the encoder downsampled, wrapped rectification, skip concatenation.
    ad::Var synthesize(const EncoderOut& enc, const ad::Var& e, const ad::Var& w) const {
        const int L = cfg_.num_layers;
        const int m = cfg_.margin;
        ad::Var style_src = concat_style(e, w);

        // 4x4 -> final encoder rate, then onto the margin canvas.
        const int f = bottleneck_factor_;
        const signal::PadPair pp = signal::resample_pads(f, 1, 6 * f);
        ad::Var x = ad::upfirdn2d_op(enc.bottleneck, bottleneck_taps_, f, 1, pp.lo, pp.hi,
                                     double(f));
        x = ad::pad2d_op(x, m, m, m, m, ad::PadMode::Edge);
        x = ad::concat_ch({x, skip_at(enc, rates_[size_t(L - 1)])});

        for (int l = L - 1; l >= 0; --l) {
            x = dec_convs_[size_t(l)].forward(x, style_src);
            if (l > 0 && rates_[size_t(l - 1)] > rates_[size_t(l)]) {
                // Filtered 2x upsampling, then the wrapped nonlinearity at
                // the new rate; the skip joins at its matching resolution.
                x = ad::upfirdn2d_op(x, dec_up_taps_[size_t(l)], 2, 1, 6, 5, 2.0);
                const int64_t c = x.dim(2);
                x = ad::crop2d_op(x, m, m, c - 2 * m, c - 2 * m);
                x = wrapped_leaky(x, wrap_taps_[size_t(l)]);
                x = ad::concat_ch({x, skip_at(enc, rates_[size_t(l - 1)])});
            } else {
                x = wrapped_leaky(x, wrap_taps_[size_t(l)]);
            }
        }

        ad::Var y = out_conv_.forward(x, style_src);
        const int64_t c = y.dim(2);
        y = ad::crop2d_op(y, m, m, c - 2 * m, c - 2 * m);
        return ad::tanh_op(y);
    }

    // Full pipeline for a batch of windows and conditions.
    ad::Var generate(const ad::Var& window, const std::vector<AttributeCondition>& conds) const {
        std::vector<std::string> mods;
        std::vector<double> deltas;
        for (const auto& c : conds) {
            mods.push_back(c.target_modality);
            deltas.push_back(c.delta);
        }
        ad::Var v = map_encoder_attributes(mods, deltas);
        EncoderOut enc = encode(window, v);
        ad::Var w = map_attributes(conds);
        return synthesize(enc, enc.e, w);
    }

private:
    static std::string two(int l) { return (l < 10 ? "0" : "") + std::to_string(l); }

    static ad::Var concat_style(const ad::Var& e, const ad::Var& w) {
        const int64_t N = e.dim(0);
        ad::Var a = ad::reshape(e, {N, e.dim(1), 1, 1});
        ad::Var b = ad::reshape(w, {N, w.dim(1), 1, 1});
        return ad::reshape(ad::concat_ch({a, b}), {N, e.dim(1) + w.dim(1)});
    }

    static ad::Var skip_at(const EncoderOut& enc, int rate) {
        auto it = enc.skips.find(rate);
        check(it != enc.skips.end(),
              "synthesize: missing skip feature for rate " + std::to_string(rate));
        return it->second;
    }

    // up 2x -> leaky -> down 2x with the layer's band filter; the canvas
    // margin doubles inside and lands back unchanged.
    ad::Var wrapped_leaky(const ad::Var& x, const TapsPtr& taps) const {
        ad::Var up = ad::upfirdn2d_op(x, taps, 2, 1, 6, 5, 2.0);
        ad::Var act = ad::leaky_relu(up, 0.2);
        ad::Var down = ad::upfirdn2d_op(act, taps, 1, 2, 5, 5, 1.0);
        return ad::scale(down, std::sqrt(2.0));
    }

    ModelConfig cfg_;
    signal::LayerSchedule sched_;
    std::vector<int> rates_;
    MappingNetwork mapping_m_, mapping_n_;
    std::vector<ModulatedConv> enc_convs_, dec_convs_;
    ModulatedConv out_conv_;
    std::vector<TapsPtr> wrap_taps_, enc_down_taps_, dec_up_taps_;
    TapsPtr bottleneck_taps_;
    int bottleneck_factor_ = 4;
    int64_t c_bot_ = 0;
    ad::Var e_w_, e_b_;
};

} // namespace unicoal

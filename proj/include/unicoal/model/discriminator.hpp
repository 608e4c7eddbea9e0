#pragma once

#include <memory>
#include <string>
#include <vector>

#include "unicoal/ad/conv.hpp"
#include "unicoal/ad/ops.hpp"
#include "unicoal/ad/resample.hpp"
#include "unicoal/config.hpp"
#include "unicoal/model/params.hpp"

namespace unicoal {

namespace d_detail {
inline ad::Var sum_members(const ad::Var& xg, int64_t g) {
    ad::Var acc = ad::slice_n(xg, 0, 1);
    for (int64_t i = 1; i < g; ++i) acc = ad::add(acc, ad::slice_n(xg, i, 1));
    return acc;
}
inline ad::Var tile_members(const ad::Var& one, int64_t g) {
    std::vector<ad::Var> copies(size_t(g), one);
    return ad::concat_n(copies);
}
} // namespace d_detail

// Appends one channel holding the per-group feature standard deviation,
// group size min(batch, 4) shrunk to divide the batch.
inline ad::Var minibatch_stddev(const ad::Var& x, int64_t group_size = 4) {
    const int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
    int64_t g = std::min<int64_t>(group_size, N);
    while (N % g != 0) --g;

    std::vector<ad::Var> feats;
    for (int64_t off = 0; off < N; off += g) {
        ad::Var xg = ad::slice_n(x, off, g);
        ad::Var mu = ad::scale(d_detail::sum_members(xg, g), 1.0 / double(g)); // [1,C,H,W]
        ad::Var centered = ad::sub(xg, d_detail::tile_members(mu, g));
        ad::Var var = ad::scale(d_detail::sum_members(ad::square(centered), g), 1.0 / double(g));
        ad::Var std = ad::sqrt_eps(var, 1e-8);
        ad::Var avg = ad::mean_all(std); // scalar
        feats.push_back(ad::broadcast_fill(avg, {g, 1, H, W}));
    }
    return ad::concat_ch({x, ad::concat_n(feats)});
}

// Conditional projection discriminator: 7 residual downsampling blocks, a
// minibatch-discrimination channel, fully connected head, and a projection
// of the embedded attributes onto the image feature vector.
class Discriminator {
public:
    Discriminator() = default;

    Discriminator(ParamStore& params, const ModelConfig& cfg, RandomStream& rng) : cfg_(cfg) {
        const int64_t c0 = channels(cfg.image_size);
        from_input_w_ = params.create("d.from_input.weight",
                                      {c0, int64_t(cfg.window) + 1, 3, 3}, rng,
                                      std::sqrt(2.0 / double((cfg.window + 1) * 9)));
        from_input_b_ = params.create_filled("d.from_input.bias", {c0}, 0.0);

        int rate = cfg.image_size;
        int64_t ch_in = c0;
        blocks_.resize(kBlocks);
        for (int b = 0; b < kBlocks; ++b) {
            const int rate_out = std::max(4, rate / 2);
            const int64_t ch_out = channels(rate_out);
            auto& blk = blocks_[size_t(b)];
            const std::string p = "d.block" + std::to_string(b);
            blk.conv1_w = params.create(p + ".conv1.weight", {ch_in, ch_in, 3, 3}, rng,
                                        std::sqrt(2.0 / double(ch_in * 9)));
            blk.conv1_b = params.create_filled(p + ".conv1.bias", {ch_in}, 0.0);
            blk.conv2_w = params.create(p + ".conv2.weight", {ch_out, ch_in, 3, 3}, rng,
                                        std::sqrt(2.0 / double(ch_in * 9)));
            blk.conv2_b = params.create_filled(p + ".conv2.bias", {ch_out}, 0.0);
            blk.skip_w = params.create(p + ".skip.weight", {ch_out, ch_in, 1, 1}, rng,
                                       std::sqrt(1.0 / double(ch_in)));
            blk.downsample = rate_out < rate;
            rate = rate_out;
            ch_in = ch_out;
        }
        final_rate_ = rate;
        final_ch_ = ch_in;

        conv_out_w_ = params.create("d.conv_out.weight", {final_ch_, final_ch_ + 1, 3, 3}, rng,
                                    std::sqrt(2.0 / double((final_ch_ + 1) * 9)));
        conv_out_b_ = params.create_filled("d.conv_out.bias", {final_ch_}, 0.0);

        const int64_t flat = final_ch_ * final_rate_ * final_rate_;
        fc_w_ = params.create("d.fc.weight", {cfg.style_dim, flat}, rng,
                              std::sqrt(2.0 / double(flat)));
        fc_b_ = params.create_filled("d.fc.bias", {cfg.style_dim}, 0.0);
        psi_w_ = params.create("d.psi.weight", {1, cfg.style_dim}, rng,
                               std::sqrt(1.0 / double(cfg.style_dim)));
        psi_b_ = params.create_filled("d.psi.bias", {1}, 0.0);
        proj_w_ = params.create("d.proj.weight", {cfg.style_dim, cfg.style_dim}, rng,
                                std::sqrt(1.0 / double(cfg.style_dim)));

        avg_taps_ = std::make_shared<const std::vector<double>>(std::vector<double>{0.5, 0.5});
    }

    int64_t channels(int rate) const {
        const int64_t c = int64_t(cfg_.channel_base) * cfg_.image_size / rate;
        return std::min<int64_t>(std::max<int64_t>(c, 4), cfg_.channel_cap);
    }

    // window [N,m,H,W] + candidate [N,1,H,W], attributes v [N,style].
    ad::Var forward(const ad::Var& window, const ad::Var& candidate, const ad::Var& v) const {
        check(window.dim(2) == candidate.dim(2) && window.dim(3) == candidate.dim(3),
              "discriminator: candidate shape mismatch");
        ad::Var x = ad::concat_ch({window, candidate});
        return forward_stacked(x, v);
    }

    // Same network on an already concatenated [N, m+1, H, W] input; the R1
    // penalty differentiates against this stacked input.
    ad::Var forward_stacked(const ad::Var& x_in, const ad::Var& v) const {
        ad::Var x = lrelu(ad::add_channel_bias(ad::conv2d(x_in, from_input_w_, 1), from_input_b_));
        for (const auto& blk : blocks_) {
            ad::Var y = lrelu(ad::add_channel_bias(ad::conv2d(x, blk.conv1_w, 1), blk.conv1_b));
            y = lrelu(ad::add_channel_bias(ad::conv2d(y, blk.conv2_w, 1), blk.conv2_b));
            ad::Var s = ad::conv2d(x, blk.skip_w, 0);
            if (blk.downsample) {
                y = avg_pool2(y);
                s = avg_pool2(s);
            }
            x = ad::scale(ad::add(y, s), 1.0 / std::sqrt(2.0));
        }
        x = minibatch_stddev(x);
        x = lrelu(ad::add_channel_bias(ad::conv2d(x, conv_out_w_, 1), conv_out_b_));
        ad::Var phi = lrelu(ad::linear(ad::reshape(x, {x.dim(0), final_ch_ * final_rate_ * final_rate_}),
                                       fc_w_, fc_b_));
        ad::Var logit = ad::linear(phi, psi_w_, psi_b_); // [N,1]
        // Projection term <v, P phi> per sample.
        ad::Var proj = ad::sum_cols(ad::mul(v, ad::matmul(phi, proj_w_, false, true)));
        return ad::add(logit, proj);
    }

private:
    static constexpr int kBlocks = 7;

    struct Block {
        ad::Var conv1_w, conv1_b, conv2_w, conv2_b, skip_w;
        bool downsample = true;
    };

    static ad::Var lrelu(const ad::Var& x) {
        return ad::scale(ad::leaky_relu(x, 0.2), std::sqrt(2.0));
    }

    ad::Var avg_pool2(const ad::Var& x) const {
        return ad::upfirdn2d_op(x, avg_taps_, 1, 2, 0, 0, 1.0);
    }

    ModelConfig cfg_;
    std::vector<Block> blocks_;
    ad::Var from_input_w_, from_input_b_;
    ad::Var conv_out_w_, conv_out_b_;
    ad::Var fc_w_, fc_b_, psi_w_, psi_b_, proj_w_;
    std::shared_ptr<const std::vector<double>> avg_taps_;
    int final_rate_ = 4;
    int64_t final_ch_ = 0;
};

} // namespace unicoal

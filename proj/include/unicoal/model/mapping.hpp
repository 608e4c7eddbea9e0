#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "unicoal/ad/ops.hpp"
#include "unicoal/config.hpp"
#include "unicoal/model/params.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal {

// Conditioning triple for one target slice.
struct AttributeCondition {
    Tensor latent;               // [latent_dim]
    std::string target_modality; // must be in the configured modality set
    double delta = 0.0;          // relative slice index in [0, 1)

    void validate(const ModelConfig& cfg) const {
        check_user(delta >= 0.0 && delta < 1.0, "condition delta must lie in [0,1)");
        check_user(int(latent.numel()) == cfg.latent_dim, "latent size mismatch");
        (void)cfg.modality_index(target_modality); // throws on unknown modality
        check_user(latent.all_finite(), "latent contains non-finite values");
    }
};

// Sinusoidal features of the relative slice index: geometric frequencies keep
// the embedding continuous in delta, which is what makes non-integer target
// grids possible at inference.
inline Tensor delta_embedding(const std::vector<double>& deltas, int freqs) {
    const int64_t N = int64_t(deltas.size());
    Tensor out({N, int64_t(2 * freqs)});
    for (int64_t n = 0; n < N; ++n)
        for (int f = 0; f < freqs; ++f) {
            const double arg = 2.0 * kPi * std::exp2(double(f)) * deltas[size_t(n)];
            out[n * 2 * freqs + 2 * f] = std::sin(arg);
            out[n * 2 * freqs + 2 * f + 1] = std::cos(arg);
        }
    return out;
}

// Two fully connected layers over [embedded delta, embedded class, latent].
// The encoder-side network N uses the same scheme without the latent input.
class MappingNetwork {
public:
    MappingNetwork() = default;

    MappingNetwork(ParamStore& params, const ModelConfig& cfg, const std::string& prefix,
                   bool with_latent, RandomStream& rng)
        : cfg_(cfg), with_latent_(with_latent) {
        const int64_t in_dim =
            2 * cfg.delta_freqs + cfg.embed_dim + (with_latent ? cfg.latent_dim : 0);
        table_ = params.create(prefix + ".class_table",
                               {int64_t(cfg.modalities.size()), cfg.embed_dim}, rng, 1.0);
        fc1_w_ = params.create(prefix + ".fc1.weight", {cfg.style_dim, in_dim}, rng,
                               std::sqrt(2.0 / double(in_dim)));
        fc1_b_ = params.create_filled(prefix + ".fc1.bias", {cfg.style_dim}, 0.0);
        fc2_w_ = params.create(prefix + ".fc2.weight", {cfg.style_dim, cfg.style_dim}, rng,
                               std::sqrt(2.0 / double(cfg.style_dim)));
        fc2_b_ = params.create_filled(prefix + ".fc2.bias", {cfg.style_dim}, 0.0);
    }

    // latents: [N, latent_dim] (ignored when the network has no latent input).
    ad::Var forward(const std::vector<int64_t>& modality_idx, const std::vector<double>& deltas,
                    const ad::Var& latents) const {
        const int64_t N = int64_t(deltas.size());
        check(int64_t(modality_idx.size()) == N, "mapping: arity mismatch");
        ad::Var demb = ad::Var::constant(delta_embedding(deltas, cfg_.delta_freqs));
        ad::Var cemb = ad::gather_rows(table_, modality_idx);
        ad::Var x = with_latent_ ? concat_cols({demb, cemb, latents}) : concat_cols({demb, cemb});
        x = ad::leaky_relu(ad::linear(x, fc1_w_, fc1_b_), 0.2);
        return ad::linear(x, fc2_w_, fc2_b_);
    }

private:
    // Column-wise concat of [N,Fi] matrices via reshape to channel layout.
    static ad::Var concat_cols(const std::vector<ad::Var>& parts) {
        std::vector<ad::Var> as4d;
        int64_t total = 0;
        const int64_t N = parts[0].dim(0);
        for (const auto& p : parts) {
            as4d.push_back(ad::reshape(p, {N, p.dim(1), 1, 1}));
            total += p.dim(1);
        }
        return ad::reshape(ad::concat_ch(as4d), {N, total});
    }

    ModelConfig cfg_;
    bool with_latent_ = true;
    ad::Var table_, fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

} // namespace unicoal

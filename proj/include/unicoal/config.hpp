#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "unicoal/common.hpp"

namespace unicoal {

struct ModelConfig {
    int image_size = 256; // r_N; must be a power of two
    int num_layers = 14;
    int margin = 10;
    int window = 4; // m input slices
    int latent_dim = 512;
    int style_dim = 512;
    int embed_dim = 16; // learned modality embedding width
    int delta_freqs = 8;
    int channel_base = 32; // channels at full resolution, grows as 1/rate
    int channel_cap = 512;
    std::vector<std::string> modalities{"T1", "T2", "FLAIR"};

    int64_t modality_index(const std::string& name) const {
        for (size_t i = 0; i < modalities.size(); ++i)
            if (modalities[i] == name) return int64_t(i);
        throw UserError("unknown modality '" + name + "' (configured: " + joined() + ")");
    }

    std::string joined() const {
        std::string s;
        for (const auto& m : modalities) s += (s.empty() ? "" : ",") + m;
        return s;
    }

    void validate() const {
        check_config(is_pow2(image_size), "model.image_size must be a power of two");
        check_config(num_layers >= 3, "model.num_layers must be >= 3");
        check_config(margin >= 0 && margin % 2 == 0, "model.margin must be even and >= 0");
        check_config(window >= 2 && window % 2 == 0, "model.window must be even");
        check_config(!modalities.empty(), "model.modalities must not be empty");
        check_config(latent_dim >= 1 && style_dim >= 1, "model dims must be positive");
    }
};

struct LossConfig {
    double lambda1 = 10.0; // pixel L1 weight
    double lambda2 = 1.0;  // feature-guidance weight
    double gamma_g = 1.0;  // R1 strength
    int64_t blur_images = 100000;
    double blur_sigma0 = 2.0;
};

struct SamConfig {
    std::string backend = "stub"; // stub | identity | checkpoint
    std::string checkpoint;       // extractor weights when backend == checkpoint
    int stub_channels = 4;
    int input_size = 0; // 0 = flexible; otherwise mosaics are resized to this
    uint64_t stub_seed = 17;
};

struct TrainConfig {
    int batch_size = 16;
    int epochs = 100;
    int64_t steps = 0; // overrides epochs when > 0
    double lr_g = 0.0025;
    double lr_d = 0.0020;
    double ema_beta = 0.999;
    int64_t ema_ramp_images = 10000;
    uint64_t seed = 0;
    int64_t checkpoint_every = 1000; // steps
    int64_t log_every = 50;
    std::string out_dir = "runs/default";
};

struct DataConfig {
    std::string manifest;          // dataset manifest path; empty = phantom
    std::string task = "cmsr";     // cms | sr | cmsr
    std::vector<int> dsf_choices{2, 4, 6};
    int phantom_subjects = 16;
    int phantom_size = 32;
    uint64_t phantom_seed = 1234;
};

struct Config {
    ModelConfig model;
    LossConfig loss;
    TrainConfig train;
    DataConfig data;
    SamConfig sam;
};

inline void from_json_section(const nlohmann::json& j, ModelConfig& c) {
    c.image_size = j.value("image_size", c.image_size);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.margin = j.value("margin", c.margin);
    c.window = j.value("window", c.window);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.style_dim = j.value("style_dim", c.style_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.delta_freqs = j.value("delta_freqs", c.delta_freqs);
    c.channel_base = j.value("channel_base", c.channel_base);
    c.channel_cap = j.value("channel_cap", c.channel_cap);
    if (j.contains("modalities")) c.modalities = j["modalities"].get<std::vector<std::string>>();
}

inline void from_json_section(const nlohmann::json& j, LossConfig& c) {
    c.lambda1 = j.value("lambda1", c.lambda1);
    c.lambda2 = j.value("lambda2", c.lambda2);
    c.gamma_g = j.value("gamma_g", c.gamma_g);
    c.blur_images = j.value("blur_images", c.blur_images);
    c.blur_sigma0 = j.value("blur_sigma0", c.blur_sigma0);
}

inline void from_json_section(const nlohmann::json& j, SamConfig& c) {
    c.backend = j.value("backend", c.backend);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.stub_channels = j.value("stub_channels", c.stub_channels);
    c.input_size = j.value("input_size", c.input_size);
    c.stub_seed = j.value("stub_seed", c.stub_seed);
}

inline void from_json_section(const nlohmann::json& j, TrainConfig& c) {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.steps = j.value("steps", c.steps);
    c.lr_g = j.value("lr_g", c.lr_g);
    c.lr_d = j.value("lr_d", c.lr_d);
    c.ema_beta = j.value("ema_beta", c.ema_beta);
    c.ema_ramp_images = j.value("ema_ramp_images", c.ema_ramp_images);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.log_every = j.value("log_every", c.log_every);
    c.out_dir = j.value("out_dir", c.out_dir);
}

inline void from_json_section(const nlohmann::json& j, DataConfig& c) {
    c.manifest = j.value("manifest", c.manifest);
    c.task = j.value("task", c.task);
    if (j.contains("dsf_choices")) c.dsf_choices = j["dsf_choices"].get<std::vector<int>>();
    c.phantom_subjects = j.value("phantom_subjects", c.phantom_subjects);
    c.phantom_size = j.value("phantom_size", c.phantom_size);
    c.phantom_seed = j.value("phantom_seed", c.phantom_seed);
}

inline Config config_from_json(const nlohmann::json& j) {
    Config c;
    if (j.contains("model")) from_json_section(j["model"], c.model);
    if (j.contains("loss")) from_json_section(j["loss"], c.loss);
    if (j.contains("train")) from_json_section(j["train"], c.train);
    if (j.contains("data")) from_json_section(j["data"], c.data);
    if (j.contains("sam")) from_json_section(j["sam"], c.sam);
    c.model.validate();
    return c;
}

inline nlohmann::json config_to_json(const Config& c) {
    nlohmann::json j;
    j["model"] = {{"image_size", c.model.image_size},
                  {"num_layers", c.model.num_layers},
                  {"margin", c.model.margin},
                  {"window", c.model.window},
                  {"latent_dim", c.model.latent_dim},
                  {"style_dim", c.model.style_dim},
                  {"embed_dim", c.model.embed_dim},
                  {"delta_freqs", c.model.delta_freqs},
                  {"channel_base", c.model.channel_base},
                  {"channel_cap", c.model.channel_cap},
                  {"modalities", c.model.modalities}};
    j["loss"] = {{"lambda1", c.loss.lambda1},
                 {"lambda2", c.loss.lambda2},
                 {"gamma_g", c.loss.gamma_g},
                 {"blur_images", c.loss.blur_images},
                 {"blur_sigma0", c.loss.blur_sigma0}};
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"epochs", c.train.epochs},
                  {"steps", c.train.steps},
                  {"lr_g", c.train.lr_g},
                  {"lr_d", c.train.lr_d},
                  {"ema_beta", c.train.ema_beta},
                  {"ema_ramp_images", c.train.ema_ramp_images},
                  {"seed", c.train.seed},
                  {"checkpoint_every", c.train.checkpoint_every},
                  {"log_every", c.train.log_every},
                  {"out_dir", c.train.out_dir}};
    j["data"] = {{"manifest", c.data.manifest},
                 {"task", c.data.task},
                 {"dsf_choices", c.data.dsf_choices},
                 {"phantom_subjects", c.data.phantom_subjects},
                 {"phantom_size", c.data.phantom_size},
                 {"phantom_seed", c.data.phantom_seed}};
    j["sam"] = {{"backend", c.sam.backend},
                {"checkpoint", c.sam.checkpoint},
                {"stub_channels", c.sam.stub_channels},
                {"input_size", c.sam.input_size},
                {"stub_seed", c.sam.stub_seed}};
    return j;
}

inline Config load_config(const std::string& path) {
    std::ifstream f(path);
    check_user(f.good(), "cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UserError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace unicoal

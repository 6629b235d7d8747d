#include "svc/model.hpp"

#include <nlohmann/json.hpp>

#include "svc/errors.hpp"

namespace svc {

void validate(const ModelConfig& c) {
    auto positive = [](int64_t v, const char* name) {
        if (v < 1) throw ArgumentError(std::string(name) + " must be >= 1");
    };
    positive(c.d_model, "d_model");
    positive(c.heads, "heads");
    positive(c.enc_layers, "enc_layers");
    positive(c.dec_blocks, "dec_blocks");
    positive(c.ffn_hidden, "ffn_hidden");
    positive(c.dec_conv_hidden, "dec_conv_hidden");
    positive(c.fbank_dim, "fbank_dim");
    positive(c.mel_dim, "mel_dim");
    positive(c.ppg_classes, "ppg_classes");
    positive(c.num_speakers, "num_speakers");
    positive(c.sample_rate, "sample_rate");
    positive(c.hop_samples, "hop_samples");
    positive(c.bands, "bands");
    positive(c.voc_pre_kernel, "voc_pre_kernel");
    positive(c.voc_post_kernel, "voc_post_kernel");
    if (c.d_model % c.heads != 0) {
        throw ArgumentError("d_model must be divisible by heads");
    }
    if (c.upsample_factors.empty()) throw ArgumentError("upsample_factors is empty");
    int64_t product = 1;
    for (int64_t f : c.upsample_factors) {
        positive(f, "upsample factor");
        product *= f;
    }
    if (product * c.bands != c.hop_samples) {
        throw ArgumentError("upsample factors times bands must equal hop_samples (" +
                            std::to_string(product) + " * " + std::to_string(c.bands) +
                            " != " + std::to_string(c.hop_samples) + ")");
    }
    if (c.voc_channels.size() != c.upsample_factors.size() + 1) {
        throw ArgumentError("voc_channels needs one entry per stage boundary");
    }
    for (int64_t w : c.voc_channels) positive(w, "vocoder width");
    if (c.resblock_kernels.empty() || c.resblock_dilations.empty()) {
        throw ArgumentError("resblock kernel and dilation lists must be non-empty");
    }
    for (int64_t k : c.resblock_kernels) positive(k, "resblock kernel");
    for (int64_t d : c.resblock_dilations) positive(d, "resblock dilation");
    if (c.pqmf_taps < c.bands) throw ArgumentError("pqmf_taps must be >= bands");
    if (c.default_chunk_ms < 40 || c.default_chunk_ms % 40 != 0) {
        throw ArgumentError("default_chunk_ms must be a positive multiple of 40 ms");
    }
    if (c.default_history < 0) throw ArgumentError("default_history must be >= 0");
}

namespace {

nlohmann::json config_json(const ModelConfig& c) {
    nlohmann::json j;
    j["d_model"] = c.d_model;
    j["heads"] = c.heads;
    j["enc_layers"] = c.enc_layers;
    j["dec_blocks"] = c.dec_blocks;
    j["ffn_hidden"] = c.ffn_hidden;
    j["dec_conv_hidden"] = c.dec_conv_hidden;
    j["fbank_dim"] = c.fbank_dim;
    j["mel_dim"] = c.mel_dim;
    j["ppg_classes"] = c.ppg_classes;
    j["num_speakers"] = c.num_speakers;
    j["ppg_softmax"] = c.ppg_softmax;
    j["sample_rate"] = c.sample_rate;
    j["hop_samples"] = c.hop_samples;
    j["upsample_factors"] = c.upsample_factors;
    j["voc_channels"] = c.voc_channels;
    j["resblock_kernels"] = c.resblock_kernels;
    j["resblock_dilations"] = c.resblock_dilations;
    j["voc_pre_kernel"] = c.voc_pre_kernel;
    j["voc_post_kernel"] = c.voc_post_kernel;
    j["bands"] = c.bands;
    j["pqmf_taps"] = c.pqmf_taps;
    j["pqmf_cutoff"] = c.pqmf_cutoff;
    j["pqmf_beta"] = c.pqmf_beta;
    j["default_chunk_ms"] = c.default_chunk_ms;
    j["default_history"] = c.default_history;
    return j;
}

ModelConfig config_from(const nlohmann::json& j) {
    ModelConfig c;
    c.d_model = j.at("d_model").get<int64_t>();
    c.heads = j.at("heads").get<int64_t>();
    c.enc_layers = j.at("enc_layers").get<int64_t>();
    c.dec_blocks = j.at("dec_blocks").get<int64_t>();
    c.ffn_hidden = j.at("ffn_hidden").get<int64_t>();
    c.dec_conv_hidden = j.at("dec_conv_hidden").get<int64_t>();
    c.fbank_dim = j.at("fbank_dim").get<int64_t>();
    c.mel_dim = j.at("mel_dim").get<int64_t>();
    c.ppg_classes = j.at("ppg_classes").get<int64_t>();
    c.num_speakers = j.at("num_speakers").get<int64_t>();
    c.ppg_softmax = j.at("ppg_softmax").get<bool>();
    c.sample_rate = j.at("sample_rate").get<int64_t>();
    c.hop_samples = j.at("hop_samples").get<int64_t>();
    c.upsample_factors = j.at("upsample_factors").get<std::vector<int64_t>>();
    c.voc_channels = j.at("voc_channels").get<std::vector<int64_t>>();
    c.resblock_kernels = j.at("resblock_kernels").get<std::vector<int64_t>>();
    c.resblock_dilations = j.at("resblock_dilations").get<std::vector<int64_t>>();
    c.voc_pre_kernel = j.at("voc_pre_kernel").get<int64_t>();
    c.voc_post_kernel = j.at("voc_post_kernel").get<int64_t>();
    c.bands = j.at("bands").get<int64_t>();
    c.pqmf_taps = j.at("pqmf_taps").get<int64_t>();
    c.pqmf_cutoff = j.at("pqmf_cutoff").get<double>();
    c.pqmf_beta = j.at("pqmf_beta").get<double>();
    c.default_chunk_ms = j.at("default_chunk_ms").get<int64_t>();
    c.default_history = j.at("default_history").get<int64_t>();
    return c;
}

}  // namespace

std::string config_to_json(const ModelConfig& config) {
    return config_json(config).dump(2);
}

ModelConfig config_from_json(const std::string& text) {
    try {
        return config_from(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("model config JSON: ") + e.what());
    }
}

Model make_model(const ModelConfig& config) {
    validate(config);
    const int64_t d = config.d_model;
    Model m;
    m.config = config;

    auto ln = [&](LayerNormParams& p, int64_t width) {
        p.g = Tensor({width});
        p.b = Tensor({width});
    };
    auto lin = [&](LinearParams& p, int64_t in, int64_t out) {
        p.w = Tensor({in, out});
        p.b = Tensor({out});
    };
    auto conv = [&](ConvParams& p, int64_t out, int64_t in, int64_t k) {
        p.w = Tensor({out, in, k});
        p.b = Tensor({out});
    };
    auto attn = [&](AttnWeights& w) {
        w.wq = Tensor({d, d});
        w.wk = Tensor({d, d});
        w.wv = Tensor({d, d});
        w.wo = Tensor({d, d});
        w.bq = Tensor({d});
        w.bk = Tensor({d});
        w.bv = Tensor({d});
        w.bo = Tensor({d});
    };

    conv(m.encoder.sub1, d, config.fbank_dim, 3);
    conv(m.encoder.sub2, d, d, 3);
    m.encoder.layers.resize(static_cast<size_t>(config.enc_layers));
    for (auto& layer : m.encoder.layers) {
        ln(layer.ln1, d);
        attn(layer.attn);
        ln(layer.ln2, d);
        lin(layer.ffn1, d, config.ffn_hidden);
        lin(layer.ffn2, config.ffn_hidden, d);
    }
    ln(m.encoder.ln_out, d);
    lin(m.encoder.proj, d, config.ppg_classes);

    lin(m.decoder.input, config.ppg_classes, d);
    m.decoder.spk_embed = Tensor({config.num_speakers, d});
    m.decoder.blocks.resize(static_cast<size_t>(config.dec_blocks));
    for (auto& block : m.decoder.blocks) {
        ln(block.ln1, d);
        attn(block.attn);
        ln(block.ln2, d);
        conv(block.conv1, config.dec_conv_hidden, d, 3);
        conv(block.conv2, d, config.dec_conv_hidden, 1);
    }
    ln(m.decoder.ln_out, d);
    lin(m.decoder.out, d, config.mel_dim);

    conv(m.vocoder.pre, config.voc_channels[0], config.mel_dim, config.voc_pre_kernel);
    m.vocoder.stages.resize(config.upsample_factors.size());
    for (size_t s = 0; s < m.vocoder.stages.size(); ++s) {
        VocoderStage& stage = m.vocoder.stages[s];
        const int64_t cin = config.voc_channels[s];
        const int64_t cout = config.voc_channels[s + 1];
        conv(stage.up, cout, cin, 2 * config.upsample_factors[s] + 1);
        stage.res.resize(config.resblock_kernels.size() * config.resblock_dilations.size());
        size_t idx = 0;
        for (int64_t k : config.resblock_kernels) {
            for (size_t di = 0; di < config.resblock_dilations.size(); ++di) {
                conv(stage.res[idx++], cout, cout, k);
            }
        }
    }
    conv(m.vocoder.post, config.bands, config.voc_channels.back(), config.voc_post_kernel);

    m.pqmf = design_bank(config.bands, config.pqmf_taps, config.pqmf_cutoff, config.pqmf_beta);
    return m;
}

void validate(const RuntimeConfig& rc, const ModelConfig& mc) {
    if (rc.chunk_ms < 40 || rc.chunk_ms % 40 != 0 || rc.chunk_ms > 200) {
        throw ArgumentError("chunk-ms must be a multiple of 40 ms in [40, 200], got " +
                            std::to_string(rc.chunk_ms));
    }
    if (rc.history_chunks < 0) throw ArgumentError("history must be >= 0");
    if (rc.speaker_id < 0 || rc.speaker_id >= mc.num_speakers) {
        throw ArgumentError("speaker id " + std::to_string(rc.speaker_id) +
                            " outside table of " + std::to_string(mc.num_speakers));
    }
    if (rc.crossfade_n != 0 && (rc.crossfade_n < 3 || rc.crossfade_n % 2 == 0)) {
        throw ArgumentError("crossfade window length must be odd and >= 3 (or 0 for none)");
    }
}

}  // namespace svc

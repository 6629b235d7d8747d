#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svc/nn_kernels.hpp"
#include "svc/pqmf.hpp"
#include "svc/tensor.hpp"

namespace svc {

// Architecture hyperparameters plus audio framing constants. These are
// configuration defaults, free to change per model file; only the framing
// relations between them are enforced.
struct ModelConfig {
    int64_t d_model = 256;
    int64_t heads = 4;
    int64_t enc_layers = 6;
    int64_t dec_blocks = 4;
    int64_t ffn_hidden = 1024;
    int64_t dec_conv_hidden = 1024;
    int64_t fbank_dim = 80;
    int64_t mel_dim = 80;
    int64_t ppg_classes = 212;
    int64_t num_speakers = 8;
    bool ppg_softmax = true;  // emit PPGs as probabilities (softmax) or raw logits

    int64_t sample_rate = 16000;
    int64_t hop_samples = 160;  // 10 ms at 16 kHz

    // vocoder generator
    std::vector<int64_t> upsample_factors = {5, 4, 2};
    std::vector<int64_t> voc_channels = {128, 64, 32, 16};  // per stage boundary
    std::vector<int64_t> resblock_kernels = {3, 7};
    std::vector<int64_t> resblock_dilations = {1, 3};
    int64_t voc_pre_kernel = 7;
    int64_t voc_post_kernel = 7;

    // sub-band merge
    int64_t bands = 4;
    int64_t pqmf_taps = 62;
    double pqmf_cutoff = 0.142;
    double pqmf_beta = 9.0;

    // streaming defaults carried with the model
    int64_t default_chunk_ms = 160;
    int64_t default_history = 10;
};

// Throws ArgumentError when fields are out of range or inconsistent
// (e.g. upsample factors times bands not matching the hop).
void validate(const ModelConfig& config);

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

struct LayerNormParams {
    Tensor g, b;
};
struct LinearParams {
    Tensor w, b;
};
struct ConvParams {
    Tensor w, b;
};

struct EncoderLayer {
    LayerNormParams ln1;
    AttnWeights attn;
    LayerNormParams ln2;
    LinearParams ffn1, ffn2;
};

struct EncoderNet {
    ConvParams sub1, sub2;  // valid-mode stride-2 kernel-3 pair
    std::vector<EncoderLayer> layers;
    LayerNormParams ln_out;
    LinearParams proj;  // d_model -> ppg_classes
};

struct DecoderBlock {
    LayerNormParams ln1;
    AttnWeights attn;
    LayerNormParams ln2;
    ConvParams conv1, conv2;  // causal k=3 expand, k=1 project back
};

struct DecoderNet {
    LinearParams input;  // ppg_classes -> d_model
    Tensor spk_embed;    // [num_speakers, d_model], added after the input projection
    std::vector<DecoderBlock> blocks;
    LayerNormParams ln_out;
    LinearParams out;  // d_model -> mel_dim
};

struct VocoderStage {
    ConvParams up;                // conv after nearest upsampling
    std::vector<ConvParams> res;  // [kernel x dilation], row-major
};

struct VocoderNet {
    ConvParams pre;
    std::vector<VocoderStage> stages;
    ConvParams post;  // to `bands` channels, tanh head
};

struct Model {
    ModelConfig config;
    EncoderNet encoder;
    DecoderNet decoder;
    VocoderNet vocoder;
    PqmfBank pqmf;  // derived from config, not serialized tensor-by-tensor
};

// Allocates every tensor at its schema shape, zero-filled, and designs the
// sub-band filter bank.
Model make_model(const ModelConfig& config);

// How a streaming conversion session should run. chunk_ms is constrained to
// whole 40 ms multiples because the encoder emits one subsampled frame per
// 40 ms of input.
enum class VocoderMode { mbs_streaming, mb_offline_crossfade };

struct RuntimeConfig {
    int64_t chunk_ms = 160;
    int64_t history_chunks = 10;
    int64_t speaker_id = 0;
    VocoderMode mode = VocoderMode::mbs_streaming;
    int64_t crossfade_n = 319;  // odd window length in samples, 0 = no overlap
};

void validate(const RuntimeConfig& config, const ModelConfig& model_config);

}  // namespace svc

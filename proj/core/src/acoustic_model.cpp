#include "svc/acoustic_model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "svc/errors.hpp"

namespace svc {

namespace {

int64_t valid_out(int64_t n, int64_t k, int64_t s) {
    return n < k ? 0 : (n - k) / s + 1;
}

Tensor transpose(const Tensor& x) {
    Tensor y({x.dim(1), x.dim(0)});
    for (int64_t i = 0; i < x.dim(0); ++i) {
        for (int64_t j = 0; j < x.dim(1); ++j) y.at(j, i) = x.at(i, j);
    }
    return y;
}

void add_inplace(Tensor& y, const Tensor& x) {
    for (int64_t i = 0; i < y.numel(); ++i) y.at(i) += x.at(i);
}

void row_softmax(Tensor& x) {
    for (int64_t t = 0; t < x.rows(); ++t) {
        float* row = x.row(t);
        float peak = row[0];
        for (int64_t j = 1; j < x.cols(); ++j) peak = std::max(peak, row[j]);
        double total = 0.0;
        for (int64_t j = 0; j < x.cols(); ++j) {
            row[j] = std::exp(row[j] - peak);
            total += row[j];
        }
        const float inv = static_cast<float>(1.0 / total);
        for (int64_t j = 0; j < x.cols(); ++j) row[j] *= inv;
    }
}

// Sinusoidal position code added in place, anchored at absolute frame
// `start` so a streamed run lines up with the offline pass.
void add_positional(Tensor& x, int64_t start) {
    const int64_t d = x.cols();
    for (int64_t t = 0; t < x.rows(); ++t) {
        const double pos = static_cast<double>(start + t);
        float* row = x.row(t);
        for (int64_t i = 0; i < d; i += 2) {
            const double rate = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                         static_cast<double>(d));
            row[i] += static_cast<float>(std::sin(pos * rate));
            if (i + 1 < d) row[i + 1] += static_cast<float>(std::cos(pos * rate));
        }
    }
}

ConvSpec sub1_spec(const ModelConfig& c) {
    return {c.fbank_dim, c.d_model, 3, 1, 2, false};
}
ConvSpec sub2_spec(const ModelConfig& c) {
    return {c.d_model, c.d_model, 3, 1, 2, false};
}
ConvSpec dec_conv1_spec(const ModelConfig& c) {
    return {c.d_model, c.dec_conv_hidden, 3, 1, 1, true};
}
ConvSpec dec_conv2_spec(const ModelConfig& c) {
    return {c.dec_conv_hidden, c.d_model, 1, 1, 1, true};
}

// Runs the two valid-mode convolutions on raw frames [n, fbank]. The caller
// guarantees at least one full window, i.e. n >= 7.
Tensor run_subsample(const Model& m, const Tensor& frames) {
    Tensor x = transpose(frames);
    x = relu(conv1d(x, sub1_spec(m.config), m.encoder.sub1.w, m.encoder.sub1.b));
    x = relu(conv1d(x, sub2_spec(m.config), m.encoder.sub2.w, m.encoder.sub2.b));
    return transpose(x);
}

// The transformer stack above the subsampler. Exactly one of mask/caches is
// active: the offline pass sees the whole sequence under the chunk mask, the
// streamed pass sees one chunk against its per-layer caches. Both routes end
// in the same attention core, which is what makes them agree.
Tensor encoder_stack(const Model& m, Tensor x, const AttentionMask* mask,
                     std::vector<AttnCache>* caches) {
    const int64_t heads = m.config.heads;
    for (size_t li = 0; li < m.encoder.layers.size(); ++li) {
        const EncoderLayer& l = m.encoder.layers[li];
        Tensor h = layer_norm(x, l.ln1.g, l.ln1.b);
        Tensor a = mask ? masked_mhsa(h, *mask, l.attn, heads)
                        : mhsa_streaming_step(h, (*caches)[li], l.attn, heads);
        add_inplace(a, x);
        Tensor f = layer_norm(a, l.ln2.g, l.ln2.b);
        f = relu(linear(f, l.ffn1.w, l.ffn1.b));
        f = linear(f, l.ffn2.w, l.ffn2.b);
        add_inplace(f, a);
        x = std::move(f);
    }
    x = layer_norm(x, m.encoder.ln_out.g, m.encoder.ln_out.b);
    x = linear(x, m.encoder.proj.w, m.encoder.proj.b);
    if (m.config.ppg_softmax) row_softmax(x);
    return x;
}

Tensor decoder_stack(const Model& m, Tensor x, const AttentionMask* mask,
                     std::vector<AttnCache>* attn, std::vector<ConvCache>* conv1,
                     std::vector<ConvCache>* conv2) {
    const ModelConfig& c = m.config;
    const ConvSpec s1 = dec_conv1_spec(c);
    const ConvSpec s2 = dec_conv2_spec(c);
    for (size_t bi = 0; bi < m.decoder.blocks.size(); ++bi) {
        const DecoderBlock& b = m.decoder.blocks[bi];
        Tensor h = layer_norm(x, b.ln1.g, b.ln1.b);
        Tensor a = mask ? masked_mhsa(h, *mask, b.attn, c.heads)
                        : mhsa_streaming_step(h, (*attn)[bi], b.attn, c.heads);
        add_inplace(a, x);
        Tensor u = transpose(layer_norm(a, b.ln2.g, b.ln2.b));
        u = conv1 ? conv1d_streaming_step(u, (*conv1)[bi], s1, b.conv1.w, b.conv1.b)
                  : conv1d(u, s1, b.conv1.w, b.conv1.b);
        u = relu(std::move(u));
        u = conv2 ? conv1d_streaming_step(u, (*conv2)[bi], s2, b.conv2.w, b.conv2.b)
                  : conv1d(u, s2, b.conv2.w, b.conv2.b);
        Tensor y = transpose(u);
        add_inplace(y, a);
        x = std::move(y);
    }
    x = layer_norm(x, m.decoder.ln_out.g, m.decoder.ln_out.b);
    return linear(x, m.decoder.out.w, m.decoder.out.b);
}

void check_speaker(int64_t speaker, const ModelConfig& c) {
    if (speaker < 0 || speaker >= c.num_speakers) {
        throw ArgumentError("speaker " + std::to_string(speaker) + " outside [0, " +
                            std::to_string(c.num_speakers) + ")");
    }
}

// 4x length regulation, input projection, additive speaker embedding, then
// the position code at absolute mel frame `start`.
Tensor regulate_and_project(const Model& m, const Tensor& ppgs, int64_t speaker,
                            int64_t start) {
    Tensor rep({4 * ppgs.rows(), ppgs.cols()});
    for (int64_t t = 0; t < ppgs.rows(); ++t) {
        for (int64_t r = 0; r < 4; ++r) {
            std::copy(ppgs.row(t), ppgs.row(t) + ppgs.cols(), rep.row(4 * t + r));
        }
    }
    Tensor x = linear(rep, m.decoder.input.w, m.decoder.input.b);
    const float* spk = m.decoder.spk_embed.row(speaker);
    for (int64_t t = 0; t < x.rows(); ++t) {
        float* row = x.row(t);
        for (int64_t j = 0; j < x.cols(); ++j) row[j] += spk[j];
    }
    add_positional(x, start);
    return x;
}

}  // namespace

int64_t subsample_output_count(int64_t frames) {
    return valid_out(valid_out(frames, 3, 2), 3, 2);
}

std::vector<int64_t> ppg_chunk_partition(int64_t total_frames, int64_t chunk_frames) {
    if (total_frames < 0) throw ArgumentError("total frame count must be >= 0");
    if (chunk_frames < 1) throw ArgumentError("chunk frame count must be >= 1");
    std::vector<int64_t> lens;
    int64_t done = 0;
    for (int64_t at = 0; at < total_frames; at += chunk_frames) {
        const int64_t upto = std::min(at + chunk_frames, total_frames);
        const int64_t cum = subsample_output_count(upto);
        lens.push_back(cum - done);
        done = cum;
    }
    return lens;
}

Tensor subsample_step(const Model& model, SubsampleState& state, const Tensor& frames) {
    require_rank(frames, 2, "fbank frames");
    if (frames.cols() != model.config.fbank_dim) {
        throw ShapeError("fbank dimension " + std::to_string(frames.cols()) + ", expected " +
                         std::to_string(model.config.fbank_dim));
    }
    if (state.pending.numel() == 0 && state.pending.rank() != 2) {
        state.pending = Tensor({0, model.config.fbank_dim});
    }
    Tensor merged({state.pending.rows() + frames.rows(), model.config.fbank_dim});
    for (int64_t t = 0; t < state.pending.rows(); ++t) {
        std::copy(state.pending.row(t), state.pending.row(t) + merged.cols(), merged.row(t));
    }
    for (int64_t t = 0; t < frames.rows(); ++t) {
        std::copy(frames.row(t), frames.row(t) + merged.cols(),
                  merged.row(state.pending.rows() + t));
    }

    const int64_t emit = subsample_output_count(merged.rows());
    if (emit == 0) {
        state.pending = std::move(merged);
        return Tensor({0, model.config.d_model});
    }
    Tensor out = run_subsample(model, merged);

    // windows start every 4 frames; everything before the next window start
    // is consumed for good
    Tensor keep({merged.rows() - 4 * emit, model.config.fbank_dim});
    for (int64_t t = 0; t < keep.rows(); ++t) {
        std::copy(merged.row(4 * emit + t), merged.row(4 * emit + t) + keep.cols(),
                  keep.row(t));
    }
    state.pending = std::move(keep);
    return out;
}

Tensor subsample_offline(const Model& model, const Tensor& fbank) {
    require_rank(fbank, 2, "fbank frames");
    if (fbank.cols() != model.config.fbank_dim) {
        throw ShapeError("fbank dimension " + std::to_string(fbank.cols()) + ", expected " +
                         std::to_string(model.config.fbank_dim));
    }
    if (subsample_output_count(fbank.rows()) == 0) {
        return Tensor({0, model.config.d_model});
    }
    return run_subsample(model, fbank);
}

Tensor encode_offline(const Model& model, const Tensor& fbank, int64_t chunk_frames,
                      int64_t history) {
    if (chunk_frames < 4 || chunk_frames % 4 != 0) {
        throw ArgumentError("chunk must cover whole 40 ms groups, got " +
                            std::to_string(chunk_frames) + " frames");
    }
    if (history < 0) throw ArgumentError("history must be >= 0");
    Tensor sub = subsample_offline(model, fbank);
    if (sub.rows() == 0) return Tensor({0, model.config.ppg_classes});
    add_positional(sub, 0);
    const AttentionMask mask =
        build_partition_mask(ppg_chunk_partition(fbank.rows(), chunk_frames), history);
    return encoder_stack(model, std::move(sub), &mask, nullptr);
}

Tensor decode_offline(const Model& model, const Tensor& ppgs, int64_t speaker,
                      const std::vector<int64_t>& ppg_chunk_lens, int64_t history) {
    require_rank(ppgs, 2, "ppg frames");
    if (ppgs.cols() != model.config.ppg_classes) {
        throw ShapeError("ppg dimension " + std::to_string(ppgs.cols()) + ", expected " +
                         std::to_string(model.config.ppg_classes));
    }
    if (ppgs.rows() < 1) throw ArgumentError("decode needs at least one ppg frame");
    check_speaker(speaker, model.config);
    if (history < 0) throw ArgumentError("history must be >= 0");
    int64_t covered = 0;
    std::vector<int64_t> mel_lens;
    mel_lens.reserve(ppg_chunk_lens.size());
    for (int64_t len : ppg_chunk_lens) {
        if (len < 0) throw ArgumentError("chunk lengths must be >= 0");
        covered += len;
        mel_lens.push_back(4 * len);
    }
    if (covered != ppgs.rows()) {
        throw ArgumentError("chunk lengths cover " + std::to_string(covered) +
                            " frames, input has " + std::to_string(ppgs.rows()));
    }
    Tensor x = regulate_and_project(model, ppgs, speaker, 0);
    const AttentionMask mask = build_partition_mask(mel_lens, history);
    return decoder_stack(model, std::move(x), &mask, nullptr, nullptr, nullptr);
}

AcousticSession::AcousticSession(const Model& model, const RuntimeConfig& runtime)
    : model_(&model) {
    validate(model.config);
    validate(runtime, model.config);
    chunk_frames_ = runtime.chunk_ms * model.config.sample_rate / 1000 / model.config.hop_samples;
    history_ = runtime.history_chunks;

    enc_attn_.resize(static_cast<size_t>(model.config.enc_layers));
    for (AttnCache& c : enc_attn_) c.retention_frames = history_ * (chunk_frames_ / 4);
    dec_attn_.resize(static_cast<size_t>(model.config.dec_blocks));
    for (AttnCache& c : dec_attn_) c.retention_frames = history_ * chunk_frames_;
    dec_conv1_.resize(static_cast<size_t>(model.config.dec_blocks));
    dec_conv2_.resize(static_cast<size_t>(model.config.dec_blocks));
    sub_.pending = Tensor({0, model.config.fbank_dim});
}

Tensor AcousticSession::encode_chunk(const Tensor& fbank_chunk) {
    require_rank(fbank_chunk, 2, "fbank chunk");
    const int64_t n = fbank_chunk.rows();
    if (n < 4 || n % 4 != 0) {
        throw ArgumentError("encode chunk must cover whole 40 ms groups, got " +
                            std::to_string(n) + " frames");
    }
    if (n > chunk_frames_) {
        throw ArgumentError("encode chunk of " + std::to_string(n) +
                            " frames exceeds the configured " +
                            std::to_string(chunk_frames_));
    }
    Tensor sub = subsample_step(*model_, sub_, fbank_chunk);
    consumed_fbank_ += n;
    add_positional(sub, enc_pos_);
    enc_pos_ += sub.rows();
    Tensor ppg = encoder_stack(*model_, std::move(sub), nullptr, &enc_attn_);
    emitted_ppg_ += ppg.rows();
    return ppg;
}

Tensor AcousticSession::decode_chunk(const Tensor& ppgs, int64_t speaker) {
    require_rank(ppgs, 2, "ppg chunk");
    if (ppgs.cols() != model_->config.ppg_classes) {
        throw ShapeError("ppg dimension " + std::to_string(ppgs.cols()) + ", expected " +
                         std::to_string(model_->config.ppg_classes));
    }
    check_speaker(speaker, model_->config);
    if (speaker_ && *speaker_ != speaker) {
        throw ContractError("session speaker changed from " + std::to_string(*speaker_) +
                            " to " + std::to_string(speaker) + " mid-stream");
    }
    speaker_ = speaker;
    Tensor x = regulate_and_project(*model_, ppgs, speaker, dec_pos_);
    dec_pos_ += x.rows();
    Tensor mel = decoder_stack(*model_, std::move(x), nullptr, &dec_attn_, &dec_conv1_,
                               &dec_conv2_);
    emitted_mel_ += mel.rows();
    return mel;
}

void AcousticSession::reset() {
    sub_.pending = Tensor({0, model_->config.fbank_dim});
    for (AttnCache& c : enc_attn_) c.clear();
    for (AttnCache& c : dec_attn_) c.clear();
    for (ConvCache& c : dec_conv1_) c.clear();
    for (ConvCache& c : dec_conv2_) c.clear();
    enc_pos_ = 0;
    dec_pos_ = 0;
    speaker_.reset();
    consumed_fbank_ = 0;
    emitted_ppg_ = 0;
    emitted_mel_ = 0;
}

int64_t AcousticSession::encoder_cache_frames() const {
    int64_t peak = 0;
    for (const AttnCache& c : enc_attn_) peak = std::max(peak, c.frames());
    return peak;
}

int64_t AcousticSession::decoder_cache_frames() const {
    int64_t peak = 0;
    for (const AttnCache& c : dec_attn_) peak = std::max(peak, c.frames());
    return peak;
}

}  // namespace svc

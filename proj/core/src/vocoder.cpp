#include "svc/vocoder.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "svc/errors.hpp"
#include "svc/nn_kernels.hpp"

namespace svc {

namespace {

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

ConvSpec vspec(int64_t cin, int64_t cout, int64_t k, int64_t dil, bool causal) {
    return {cin, cout, k, dil, 1, causal};
}

// Centered layout: zero-pad so output length matches input length.
Tensor conv_same(const Tensor& x, const ConvSpec& spec, const Tensor& W, const Tensor& b) {
    const int64_t total = spec.dilation * (spec.kernel_size - 1);
    const int64_t left = total / 2;
    Tensor padded({x.rows(), x.cols() + total});
    padded.fill(0.0f);
    for (int64_t i = 0; i < x.rows(); ++i) {
        std::copy(x.row(i), x.row(i) + x.cols(), padded.row(i) + left);
    }
    ConvSpec valid = spec;
    valid.causal = false;
    return conv1d(padded, valid, W, b);
}

Tensor run_conv(const Tensor& x, const ConvSpec& spec, const ConvParams& p,
                std::vector<ConvCache>* caches, size_t* next) {
    if (caches) return conv1d_streaming_step(x, (*caches)[(*next)++], spec, p.w, p.b);
    if (spec.causal) return conv1d(x, spec, p.w, p.b);
    return conv_same(x, spec, p.w, p.b);
}

size_t conv_count(const ModelConfig& c) {
    const size_t per_stage = 1 + c.resblock_kernels.size() * c.resblock_dilations.size();
    return 2 + c.upsample_factors.size() * per_stage;
}

// The full generator up to the sub-band head: [mel_dim, T] in, [K, T * prod]
// out, values in (-1, 1). With `caches` set every convolution consumes and
// refreshes its stream state in a fixed traversal order; all other layers
// are pointwise or expand time uniformly, so chunked runs concatenate to the
// whole-sequence result.
Tensor generator_forward(const Model& m, const Tensor& mel_ct, bool causal,
                         std::vector<ConvCache>* caches) {
    const ModelConfig& c = m.config;
    const size_t kernels = c.resblock_kernels.size();
    const size_t dilations = c.resblock_dilations.size();
    size_t next = 0;

    Tensor x = run_conv(mel_ct, vspec(c.mel_dim, c.voc_channels[0], c.voc_pre_kernel, 1, causal),
                        m.vocoder.pre, caches, &next);
    for (size_t s = 0; s < m.vocoder.stages.size(); ++s) {
        const VocoderStage& stage = m.vocoder.stages[s];
        const int64_t cout = c.voc_channels[s + 1];
        x = leaky_relu(std::move(x));
        x = nearest_upsample(x, c.upsample_factors[s]);
        x = run_conv(x,
                     vspec(c.voc_channels[s], cout, 2 * c.upsample_factors[s] + 1, 1, causal),
                     stage.up, caches, &next);

        // one residual branch per kernel size, dilations applied in series,
        // branches averaged
        Tensor merged;
        for (size_t ki = 0; ki < kernels; ++ki) {
            Tensor h = x;
            for (size_t di = 0; di < dilations; ++di) {
                Tensor t = leaky_relu(h);
                t = run_conv(t,
                             vspec(cout, cout, c.resblock_kernels[ki],
                                   c.resblock_dilations[di], causal),
                             stage.res[ki * dilations + di], caches, &next);
                add_inplace(h, t);
            }
            if (ki == 0) {
                merged = std::move(h);
            } else {
                add_inplace(merged, h);
            }
        }
        const float scale = 1.0f / static_cast<float>(kernels);
        for (int64_t i = 0; i < merged.numel(); ++i) merged.at(i) *= scale;
        x = std::move(merged);
    }
    x = leaky_relu(std::move(x));
    x = run_conv(x, vspec(c.voc_channels.back(), c.bands, c.voc_post_kernel, 1, causal),
                 m.vocoder.post, caches, &next);
    for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = std::tanh(x.at(i));
    return x;
}

Tensor merge_bands(const Tensor& bands, const PqmfBank& bank, PqmfSynthState* state) {
    const std::vector<float> merged =
        state ? synthesis_step(bands, *state, bank) : synthesis(bands, bank);
    Tensor out({static_cast<int64_t>(merged.size())});
    for (size_t i = 0; i < merged.size(); ++i) {
        out.at(static_cast<int64_t>(i)) = std::clamp(merged[i], -1.0f, 1.0f);
    }
    return out;
}

void check_mels(const Tensor& mels, const ModelConfig& c) {
    require_rank(mels, 2, "mel input");
    if (mels.cols() != c.mel_dim) {
        throw ShapeError("mel dimension " + std::to_string(mels.cols()) + ", expected " +
                         std::to_string(c.mel_dim));
    }
}

Tensor slice1d(const Tensor& x, int64_t from, int64_t count) {
    Tensor y({count});
    for (int64_t i = 0; i < count; ++i) y.at(i) = x.at(from + i);
    return y;
}

Tensor rows_slice_copy(const Tensor& x, int64_t from, int64_t count) {
    Tensor y({count, x.cols()});
    for (int64_t t = 0; t < count; ++t) {
        std::copy(x.row(from + t), x.row(from + t) + x.cols(), y.row(t));
    }
    return y;
}

}  // namespace

Tensor generate_offline(const Model& model, const Tensor& mels, bool causal) {
    check_mels(mels, model.config);
    if (mels.rows() < 1) throw InsufficientInputError("generator needs at least one mel frame");
    const Tensor bands = generator_forward(model, transpose(mels), causal, nullptr);
    return merge_bands(bands, model.pqmf, nullptr);
}

VocoderSession::VocoderSession(const Model& model, bool causal) : model_(&model) {
    if (!causal) {
        throw ArgumentError("streaming generation requires the causal generator layout");
    }
    validate(model.config);
    caches_.resize(conv_count(model.config));
}

Tensor VocoderSession::generate(const Tensor& mels) {
    check_mels(mels, model_->config);
    if (mels.rows() == 0) return Tensor({0});
    const Tensor bands = generator_forward(*model_, transpose(mels), true, &caches_);
    frames_ += mels.rows();
    return merge_bands(bands, model_->pqmf, &synth_);
}

void VocoderSession::reset() {
    for (ConvCache& c : caches_) c.clear();
    synth_ = PqmfSynthState{};
    frames_ = 0;
}

int64_t VocoderSession::cache_footprint() const {
    int64_t floats = synth_.tail.numel();
    for (const ConvCache& c : caches_) floats += c.buffer.numel();
    return floats;
}

Tensor hann_window(int64_t n) {
    if (n < 3 || n % 2 == 0) {
        throw ArgumentError("window length must be odd and >= 3, got " + std::to_string(n));
    }
    Tensor w({n});
    const int64_t half = (n - 1) / 2;
    for (int64_t j = 0; j < n; ++j) {
        const double centered = static_cast<double>(j - half);
        w.at(j) = static_cast<float>(
            0.5 * (1.0 + std::cos(2.0 * M_PI * centered / static_cast<double>(n - 1))));
    }
    return w;
}

int64_t crossfade_overlap(const CrossfadeSpec& spec) {
    if (spec.window_length == 0) return 0;
    if (spec.window_length < 3 || spec.window_length % 2 == 0) {
        throw ArgumentError("crossfade window must be 0 or odd >= 3, got " +
                            std::to_string(spec.window_length));
    }
    return (spec.window_length + 1) / 2;
}

Tensor crossfade_join(const Tensor& head, const Tensor& tail, const CrossfadeSpec& spec) {
    require_rank(head, 1, "crossfade head");
    require_rank(tail, 1, "crossfade tail");
    const int64_t overlap = crossfade_overlap(spec);
    if (head.dim(0) < overlap || tail.dim(0) < overlap) {
        throw ArgumentError("overlap of " + std::to_string(overlap) +
                            " samples exceeds a chunk (" + std::to_string(head.dim(0)) +
                            ", " + std::to_string(tail.dim(0)) + ")");
    }
    Tensor out({head.dim(0) + tail.dim(0) - overlap});
    for (int64_t i = 0; i < head.dim(0); ++i) out.at(i) = head.at(i);
    if (overlap > 0) {
        // descending half of the window, center included: weight 1 at the
        // first blended sample, 0 at the last
        const Tensor w = hann_window(spec.window_length);
        const int64_t start = head.dim(0) - overlap;
        for (int64_t i = 0; i < overlap; ++i) {
            const float fade_out = w.at((spec.window_length - 1) / 2 + i);
            // tail + w * (head - tail): the implicit fade-in weight is
            // exactly 1 - w, and equal inputs pass through untouched
            out.at(start + i) =
                tail.at(i) + fade_out * (head.at(start + i) - tail.at(i));
        }
    }
    for (int64_t i = overlap; i < tail.dim(0); ++i) {
        out.at(head.dim(0) - overlap + i) = tail.at(i);
    }
    return out;
}

ChunkedAudio generate_chunked(const Model& model, const Tensor& mels, int64_t chunk_frames,
                              const CrossfadeSpec& fade) {
    check_mels(mels, model.config);
    if (mels.rows() < 1) throw InsufficientInputError("generator needs at least one mel frame");
    if (chunk_frames < 1) throw ArgumentError("chunk must hold at least one mel frame");
    const int64_t hop = model.config.hop_samples;
    const int64_t overlap = crossfade_overlap(fade);
    if (overlap >= chunk_frames * hop) {
        throw ArgumentError("overlap of " + std::to_string(overlap) +
                            " samples must stay below the chunk length of " +
                            std::to_string(chunk_frames * hop));
    }
    // Extra frames rendered on each side of a chunk and then discarded.
    // The centered convolutions reach about three mel frames, so without
    // this margin the blend region would sit inside the edge transient of
    // the incoming chunk. Disabled blending keeps the bare per-chunk render.
    const int64_t seam_context = overlap > 0 ? 4 : 0;
    const int64_t lookback = (overlap + hop - 1) / hop + seam_context;

    ChunkedAudio out;
    for (int64_t at = 0; at < mels.rows(); at += chunk_frames) {
        const int64_t len = std::min(chunk_frames, mels.rows() - at);
        const int64_t right = std::min(seam_context, mels.rows() - at - len);
        if (at == 0) {
            const Tensor audio =
                generate_offline(model, rows_slice_copy(mels, 0, len + right), false);
            out.samples = slice1d(audio, 0, len * hop);
            continue;
        }
        // re-render a short lookback so the new chunk supplies the fade-in
        // half of the overlap region
        const int64_t lb = std::min(lookback, at);
        const Tensor audio = generate_offline(
            model, rows_slice_copy(mels, at - lb, lb + len + right), false);
        out.joints.push_back(at * hop);
        out.samples = crossfade_join(
            out.samples, slice1d(audio, lb * hop - overlap, overlap + len * hop), fade);
    }
    return out;
}

}  // namespace svc

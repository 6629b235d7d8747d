#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "svc/masking.hpp"
#include "svc/model.hpp"
#include "svc/nn_kernels.hpp"
#include "svc/tensor.hpp"

namespace svc {

// Conversion front half: fbank frames -> phonetic posteriors -> mel frames.
//
// The encoder subsamples 4x with two valid-mode stride-2 convolutions, so
// one output frame covers 7 input frames and each later one starts 4 frames
// after the previous. Both encoder and decoder attend under the chunk mask;
// a streaming session reproduces the offline masked pass to float precision
// because both share the same attention and convolution cores.

// Output frames a valid-mode k=3,s=2 x2 subsampler yields from `frames`
// inputs seen so far. 6 -> 0, 7 -> 1, 11 -> 2.
int64_t subsample_output_count(int64_t frames);

// Per-chunk subsampled frame counts when `total_frames` fbank frames arrive
// in chunks of `chunk_frames`. Leading entries may be zero while the first
// window fills. Sums to subsample_output_count(total_frames).
std::vector<int64_t> ppg_chunk_partition(int64_t total_frames, int64_t chunk_frames);

// Streaming subsampler: frames wait in `pending` until a full 7-frame window
// exists, then every complete stride-4 window is emitted and consumed.
struct SubsampleState {
    Tensor pending;
};

Tensor subsample_step(const Model& model, SubsampleState& state, const Tensor& frames);

// Whole-sequence references. These run one masked pass over everything and
// serve both as the non-streaming path and as the oracle the session is
// tested against.
Tensor subsample_offline(const Model& model, const Tensor& fbank);
Tensor encode_offline(const Model& model, const Tensor& fbank, int64_t chunk_frames,
                      int64_t history);
Tensor decode_offline(const Model& model, const Tensor& ppgs, int64_t speaker,
                      const std::vector<int64_t>& ppg_chunk_lens, int64_t history);

// Chunk-by-chunk driver. Single-owner: one thread at a time; separate
// sessions over the same model never interfere.
class AcousticSession {
  public:
    AcousticSession(const Model& model, const RuntimeConfig& runtime);

    // One chunk of fbank frames [n, fbank_dim]; n must be a positive
    // multiple of 4 (whole 40 ms groups) and at most the configured chunk
    // length. Returns the PPG frames [m, ppg_classes] this chunk completes;
    // m can be zero while the first 70 ms window fills.
    Tensor encode_chunk(const Tensor& fbank_chunk);

    // PPG frames [m, ppg_classes] -> mel frames [4m, mel_dim]. The first
    // call fixes the speaker for the session; changing it mid-stream is a
    // contract violation, not a recoverable input error.
    Tensor decode_chunk(const Tensor& ppgs, int64_t speaker);

    // Back to the fresh-construction state, bit for bit.
    void reset();

    int64_t consumed_fbank_frames() const { return consumed_fbank_; }
    int64_t emitted_ppg_frames() const { return emitted_ppg_; }
    int64_t emitted_mel_frames() const { return emitted_mel_; }

    // Largest per-layer cache occupancy, in frames at the respective rate.
    // Bounded by (history + 1) chunks regardless of stream length.
    int64_t encoder_cache_frames() const;
    int64_t decoder_cache_frames() const;

  private:
    const Model* model_;
    int64_t chunk_frames_;  // fbank frames per nominal chunk
    int64_t history_;

    SubsampleState sub_;  // fbank frames not yet consumed by the subsampler
    std::vector<AttnCache> enc_attn_;
    int64_t enc_pos_ = 0;  // subsampled frames emitted, anchors the encoding position

    std::vector<AttnCache> dec_attn_;
    std::vector<ConvCache> dec_conv1_;
    std::vector<ConvCache> dec_conv2_;
    int64_t dec_pos_ = 0;  // mel frames emitted
    std::optional<int64_t> speaker_;

    int64_t consumed_fbank_ = 0;
    int64_t emitted_ppg_ = 0;
    int64_t emitted_mel_ = 0;
};

}  // namespace svc

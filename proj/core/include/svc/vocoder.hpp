#pragma once

#include <cstdint>
#include <vector>

#include "svc/model.hpp"
#include "svc/pqmf.hpp"
#include "svc/tensor.hpp"

namespace svc {

// Waveform generator: mel frames -> upsampling conv stack -> K sub-bands
// (tanh head) -> filter-bank synthesis. One 10 ms mel frame becomes exactly
// hop_samples audio samples. The causal build replaces every centered
// convolution with a left-padded one, which is what makes the frame-by-frame
// session below reproduce the whole-sequence pass; after band merging a
// limiter pins the output to [-1, 1].

// mels is [T, mel_dim], T >= 1. causal=false pads convolutions on both
// sides (the non-streaming layout); causal=true is the streaming-identical
// reference.
Tensor generate_offline(const Model& model, const Tensor& mels, bool causal);

// Frame-by-frame generator. Fixed cache footprint regardless of how much
// audio has been produced; only the causal layout can stream.
class VocoderSession {
  public:
    explicit VocoderSession(const Model& model, bool causal = true);

    // [m, mel_dim] -> [m * hop_samples] samples; m = 0 is a no-op.
    Tensor generate(const Tensor& mels);

    void reset();

    int64_t frames_done() const { return frames_; }
    // Total cached floats across conv and synthesis state; constant.
    int64_t cache_footprint() const;

  private:
    const Model* model_;
    std::vector<ConvCache> caches_;
    PqmfSynthState synth_;
    int64_t frames_ = 0;
};

// Raised-cosine window on the symmetric index range
// [-(N-1)/2, (N-1)/2]: w[center] = 1, endpoints 0. N odd, >= 3.
Tensor hann_window(int64_t n);

// Overlap smoothing between consecutive independently generated chunks.
// window_length 0 disables blending entirely.
struct CrossfadeSpec {
    int64_t window_length = 319;  // odd; overlap covers (N+1)/2 samples
};

int64_t crossfade_overlap(const CrossfadeSpec& spec);

// Blends the last overlap samples of `head` against the first overlap
// samples of `tail` with complementary raised-cosine weights (the outgoing
// chunk fades from 1 to 0, the incoming one from 0 to 1, summing to one at
// every sample). Output length = len(head) + len(tail) - overlap.
Tensor crossfade_join(const Tensor& head, const Tensor& tail, const CrossfadeSpec& spec);

// Chunked non-streaming generation: each chunk of mel frames is rendered
// independently with the centered (non-causal) generator, re-rendering a
// short lookback so consecutive chunks overlap by the crossfade length.
// A few extra context frames per side are rendered and discarded to keep
// convolution edge transients out of the blended region. `joints` marks the
// sample index where each later chunk takes over, for boundary inspection.
struct ChunkedAudio {
    Tensor samples;
    std::vector<int64_t> joints;
};

ChunkedAudio generate_chunked(const Model& model, const Tensor& mels, int64_t chunk_frames,
                              const CrossfadeSpec& fade);

}  // namespace svc

#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "svc/masking.hpp"
#include "svc/tensor.hpp"

namespace svc {

// y[t] = x[t] . W + b       x: [T,din]  W: [din,dout]  b: [dout]
Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b);

// Row-wise normalization over the last dimension with learned gain and shift.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);

Tensor relu(Tensor x);
Tensor leaky_relu(Tensor x, float slope = 0.1f);

// Softmax of one score row restricted to allowed columns. Disallowed logits
// receive an additive -1e9 (kept finite on purpose), which leaves their
// weights below 1e-8 after normalization. allowed = nullptr means all columns
// are in play. A row with no allowed column cannot normalize: ContractError.
void masked_softmax_row(float* scores, const uint8_t* allowed, int64_t n);

// Row-by-row application over a [T,T] score matrix with a same-size mask.
Tensor masked_softmax_rows(const Tensor& scores, const AttentionMask& mask);

struct AttnWeights {
    Tensor wq, wk, wv, wo;  // [d,d]
    Tensor bq, bk, bv, bo;  // [d]
};

// Scaled dot-product self-attention over the full sequence; mask rows select
// the visible keys per query frame.
Tensor masked_mhsa(const Tensor& x, const AttentionMask& mask,
                   const AttnWeights& w, int64_t heads);

// Accumulated keys/values of one attention layer across streamed chunks.
// Bounded history drops oldest whole chunks once the total frame count
// exceeds retention_frames; the drop happens after the step that pushed past
// the bound, so every query still sees its own chunk plus the retained ones.
struct AttnCache {
    Tensor k, v;  // [frames, d]
    std::deque<int64_t> chunk_lens;
    std::optional<int64_t> retention_frames;

    int64_t frames() const { return k.rank() == 2 ? k.rows() : 0; }
    void clear();
};

// Queries come from x_chunk only; keys/values are the cache contents plus
// this chunk. Within the cache everything is visible (the chunk mask never
// hides frames of a retained chunk), so no mask is applied here. Streamed
// outputs match masked_mhsa rows over the concatenated input.
Tensor mhsa_streaming_step(const Tensor& x_chunk, AttnCache& cache,
                           const AttnWeights& w, int64_t heads);

struct ConvSpec {
    int64_t in_channels = 0;
    int64_t out_channels = 0;
    int64_t kernel_size = 0;
    int64_t dilation = 1;
    int64_t stride = 1;
    bool causal = true;
};

// x: [C,T]  W: [out,in,k]  b: [out], cross-correlation form.
// Causal mode left-pads (kernel_size-1)*dilation zeros: T' = ceil(T/stride)
// and output t depends only on inputs <= t. Valid mode pads nothing:
// T' = floor((T - dilation*(k-1) - 1)/stride) + 1, and T below the kernel
// extent is InsufficientInputError.
Tensor conv1d(const Tensor& x, const ConvSpec& spec, const Tensor& W, const Tensor& b);

// Left context carried between streamed calls. The buffer holds the most
// recent (kernel_size-1)*dilation input columns, zeros before the first call.
struct ConvCache {
    Tensor buffer;  // [in_channels, (k-1)*dilation]
    void clear() { buffer = Tensor(); }
};

// Streamed causal convolution. Concatenated step outputs equal conv1d on the
// concatenated input (same inner arithmetic, so the match is exact). Chunk
// lengths must be multiples of the stride to keep output phase aligned.
Tensor conv1d_streaming_step(const Tensor& x_chunk, ConvCache& cache,
                             const ConvSpec& spec, const Tensor& W, const Tensor& b);

// y[:, t] = x[:, floor(t/factor)]
Tensor nearest_upsample(const Tensor& x, int64_t factor);

}  // namespace svc

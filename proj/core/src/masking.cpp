#include "svc/masking.hpp"

#include <string>

#include "svc/errors.hpp"

namespace svc {

AttentionMask build_chunk_mask(const ChunkSpec& spec) {
    if (spec.chunk_frames < 1 || spec.num_chunks < 1) {
        throw ArgumentError("chunk mask needs chunk_frames >= 1 and num_chunks >= 1");
    }
    if (spec.history_chunks && *spec.history_chunks < 0) {
        throw ArgumentError("history_chunks must be >= 0");
    }
    const int64_t c = spec.chunk_frames;
    const int64_t t = c * spec.num_chunks;
    AttentionMask mask(t);
    for (int64_t i = 0; i < t; ++i) {
        const int64_t qc = i / c;
        for (int64_t j = 0; j < t; ++j) {
            const int64_t kc = j / c;
            bool vis = kc <= qc;
            if (vis && spec.history_chunks) vis = qc - kc <= *spec.history_chunks;
            mask.set(i, j, vis);
        }
    }
    return mask;
}

AttentionMask build_partition_mask(const std::vector<int64_t>& chunk_lens,
                                   std::optional<int64_t> history_chunks) {
    int64_t t = 0;
    for (int64_t len : chunk_lens) {
        if (len < 0) throw ArgumentError("negative chunk length in partition");
        t += len;
    }
    if (history_chunks && *history_chunks < 0) {
        throw ArgumentError("history_chunks must be >= 0");
    }
    // chunk index per frame
    std::vector<int64_t> chunk_of(static_cast<size_t>(t));
    int64_t frame = 0;
    for (size_t ci = 0; ci < chunk_lens.size(); ++ci) {
        for (int64_t k = 0; k < chunk_lens[ci]; ++k) chunk_of[frame++] = static_cast<int64_t>(ci);
    }
    AttentionMask mask(t);
    for (int64_t i = 0; i < t; ++i) {
        for (int64_t j = 0; j < t; ++j) {
            bool vis = chunk_of[j] <= chunk_of[i];
            if (vis && history_chunks) vis = chunk_of[i] - chunk_of[j] <= *history_chunks;
            mask.set(i, j, vis);
        }
    }
    return mask;
}

int64_t DynamicChunkSampler::sample(int64_t range_min, int64_t range_max) {
    if (range_min < 1 || range_min > range_max) {
        throw ArgumentError("invalid chunk range [" + std::to_string(range_min) + ", " +
                            std::to_string(range_max) + "]");
    }
    std::uniform_int_distribution<int64_t> dist(range_min, range_max);
    return dist(rng_);
}

int64_t sample_dynamic_chunk(int64_t range_min, int64_t range_max, uint64_t rng_seed) {
    DynamicChunkSampler sampler(rng_seed);
    return sampler.sample(range_min, range_max);
}

}  // namespace svc

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace svc {

// Layout of a sequence split into fixed-size chunks for attention masking.
// history_chunks absent = unlimited history; present h = each query chunk sees
// itself plus the h immediately preceding chunks.
struct ChunkSpec {
    int64_t chunk_frames = 0;
    int64_t num_chunks = 0;
    std::optional<int64_t> history_chunks;
};

// T x T boolean connectivity matrix: row = query frame, column = key frame.
class AttentionMask {
public:
    AttentionMask() = default;
    explicit AttentionMask(int64_t size)
        : size_(size), bits_(static_cast<size_t>(size * size), 0) {}

    int64_t size() const { return size_; }
    bool at(int64_t q, int64_t k) const { return bits_[static_cast<size_t>(q * size_ + k)] != 0; }
    void set(int64_t q, int64_t k, bool v) {
        bits_[static_cast<size_t>(q * size_ + k)] = v ? 1 : 0;
    }
    const uint8_t* row(int64_t q) const { return bits_.data() + q * size_; }

    bool operator==(const AttentionMask& other) const {
        return size_ == other.size_ && bits_ == other.bits_;
    }

private:
    int64_t size_ = 0;
    std::vector<uint8_t> bits_;
};

// bits[i][j] = true iff chunk(j) <= chunk(i) and, with history h present,
// chunk(i) - chunk(j) <= h, where chunk(x) = floor(x / chunk_frames).
AttentionMask build_chunk_mask(const ChunkSpec& spec);

// Same visibility rule over an explicit chunk partition: chunk i occupies
// chunk_lens[i] consecutive frames (zero-length chunks allowed, they still
// occupy a chunk index). Used as the offline oracle for streamed runs whose
// warmup chunks are shorter than the steady-state chunk size.
AttentionMask build_partition_mask(const std::vector<int64_t>& chunk_lens,
                                   std::optional<int64_t> history_chunks);

// Seedable uniform integer source for dynamic chunk-size schedules.
class DynamicChunkSampler {
public:
    explicit DynamicChunkSampler(uint64_t seed) : rng_(seed) {}
    int64_t sample(int64_t range_min, int64_t range_max);

private:
    std::mt19937_64 rng_;
};

// One-shot draw; equals the first sample of a fresh DynamicChunkSampler(seed).
int64_t sample_dynamic_chunk(int64_t range_min, int64_t range_max, uint64_t rng_seed);

}  // namespace svc

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "svc/acoustic_model.hpp"
#include "svc/features.hpp"
#include "svc/metrics.hpp"
#include "svc/model.hpp"
#include "svc/vocoder.hpp"

namespace svc {

// Wall time spent inside each stage so far, in milliseconds, plus the number
// of whole chunks pushed through the acoustic model.
struct StageTimes {
    double feature_ms = 0.0;
    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    double vocoder_ms = 0.0;
    int64_t chunks = 0;
};

// Sample-in, sample-out streaming conversion: raw audio is framed into
// fbanks, fed to the acoustic session one chunk at a time, and the resulting
// mel frames are rendered either frame by frame (mbs_streaming) or all at
// once with chunked crossfade stitching at finish (mb_offline_crossfade).
//
// finish() completes the last partial 40 ms group with zeros and appends one
// zero group, which flushes the subsampling lookahead: a stream of T whole
// frames comes out as 4 * ceil(T / 4) mel frames, so 1 s of input yields
// exactly 16,000 output samples.
class StreamingConverter {
public:
    StreamingConverter(const Model& model, const RuntimeConfig& runtime);

    std::vector<float> push(const std::vector<float>& samples);
    std::vector<float> finish();
    void reset();

    int64_t consumed_samples() const { return consumed_samples_; }
    int64_t emitted_samples() const { return emitted_samples_; }
    // Input consumed at the moment the first output sample appeared.
    std::optional<int64_t> first_emit_consumed_samples() const {
        return first_emit_;
    }
    StageTimes stage_times() const { return times_; }
    const RuntimeConfig& runtime() const { return runtime_; }

private:
    std::vector<float> drain_chunks(bool flush);
    std::vector<float> run_chunk(const Tensor& frames);
    void note_emitted(const std::vector<float>& out);

    const Model& model_;
    RuntimeConfig runtime_;
    int64_t chunk_frames_ = 0;
    FbankExtractor fbank_;
    std::vector<float> pending_;  // fbank rows awaiting a full chunk
    int64_t pending_rows_ = 0;
    AcousticSession acoustic_;
    VocoderSession vocoder_;           // mbs_streaming path
    std::vector<float> mel_rows_;      // mb_offline_crossfade path
    int64_t mel_count_ = 0;
    bool finished_ = false;
    int64_t consumed_samples_ = 0;
    int64_t emitted_samples_ = 0;
    std::optional<int64_t> first_emit_;
    StageTimes times_;
};

// Runs seeded white noise through a full streaming conversion and reports
// mean per-chunk stage times in the first-packet accounting model. The rtf
// passed to serialization should come from rtf(compute, audio) on the same
// run; this returns both.
struct BenchResult {
    LatencyReport report;
    double rtf = 0.0;
};

BenchResult measure_latency(const Model& model, int64_t chunk_ms,
                            double seconds, uint64_t seed);

// Real-time factor of the streaming generator alone, frame by frame on
// seeded random mels.
double measure_vocoder_rtf(const Model& model, double seconds, uint64_t seed);

}  // namespace svc

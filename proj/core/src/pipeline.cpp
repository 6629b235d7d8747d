#include "svc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <random>

#include "svc/errors.hpp"

namespace svc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

StreamingConverter::StreamingConverter(const Model& model,
                                       const RuntimeConfig& runtime)
    : model_(model),
      runtime_(runtime),
      fbank_(model.config.fbank_dim, model.config.sample_rate),
      acoustic_(model, runtime),
      vocoder_(model, true) {
    validate(runtime_, model_.config);
    chunk_frames_ = runtime_.chunk_ms * model_.config.sample_rate / 1000 /
                    model_.config.hop_samples;
}

std::vector<float> StreamingConverter::push(const std::vector<float>& samples) {
    if (finished_) {
        throw ContractError("push after finish; reset the converter first");
    }
    consumed_samples_ += static_cast<int64_t>(samples.size());
    const Clock::time_point t0 = Clock::now();
    Tensor frames = fbank_.push(samples);
    times_.feature_ms += ms_since(t0);
    if (frames.rows() > 0) {
        pending_.insert(pending_.end(), frames.data(),
                        frames.data() + frames.numel());
        pending_rows_ += frames.rows();
    }
    std::vector<float> out = drain_chunks(false);
    note_emitted(out);
    return out;
}

std::vector<float> StreamingConverter::finish() {
    if (finished_) {
        return {};
    }
    finished_ = true;

    // Close the last 40 ms group and push one zero group after it; those
    // zeros play the role of the lookahead frames the front convolutions
    // hold back, so every whole input group produces its mel frames.
    const int64_t dim = model_.config.fbank_dim;
    const int64_t pad = (4 - pending_rows_ % 4) % 4 + 4;
    pending_.insert(pending_.end(), static_cast<size_t>(pad * dim), 0.0f);
    pending_rows_ += pad;

    std::vector<float> out = drain_chunks(true);

    if (runtime_.mode == VocoderMode::mb_offline_crossfade && mel_count_ > 0) {
        Tensor mels({mel_count_, model_.config.mel_dim});
        std::memcpy(mels.data(), mel_rows_.data(),
                    static_cast<size_t>(mels.numel()) * sizeof(float));
        const Clock::time_point t0 = Clock::now();
        ChunkedAudio audio = generate_chunked(model_, mels, chunk_frames_,
                                              CrossfadeSpec{runtime_.crossfade_n});
        times_.vocoder_ms += ms_since(t0);
        out.insert(out.end(), audio.samples.data(),
                   audio.samples.data() + audio.samples.numel());
    }
    note_emitted(out);
    return out;
}

std::vector<float> StreamingConverter::drain_chunks(bool flush) {
    const int64_t dim = model_.config.fbank_dim;
    std::vector<float> out;
    while (flush ? pending_rows_ > 0 : pending_rows_ >= chunk_frames_) {
        const int64_t take = std::min(chunk_frames_, pending_rows_);
        Tensor chunk({take, dim});
        std::memcpy(chunk.data(), pending_.data(),
                    static_cast<size_t>(chunk.numel()) * sizeof(float));
        pending_.erase(pending_.begin(), pending_.begin() + chunk.numel());
        pending_rows_ -= take;
        std::vector<float> piece = run_chunk(chunk);
        out.insert(out.end(), piece.begin(), piece.end());
    }
    return out;
}

std::vector<float> StreamingConverter::run_chunk(const Tensor& frames) {
    Clock::time_point t0 = Clock::now();
    Tensor ppgs = acoustic_.encode_chunk(frames);
    times_.encoder_ms += ms_since(t0);

    t0 = Clock::now();
    Tensor mels = acoustic_.decode_chunk(ppgs, runtime_.speaker_id);
    times_.decoder_ms += ms_since(t0);
    times_.chunks += 1;

    if (runtime_.mode == VocoderMode::mb_offline_crossfade) {
        if (mels.rows() > 0) {
            mel_rows_.insert(mel_rows_.end(), mels.data(),
                             mels.data() + mels.numel());
            mel_count_ += mels.rows();
        }
        return {};
    }

    t0 = Clock::now();
    Tensor audio = vocoder_.generate(mels);
    times_.vocoder_ms += ms_since(t0);
    return std::vector<float>(audio.data(), audio.data() + audio.numel());
}

void StreamingConverter::note_emitted(const std::vector<float>& out) {
    if (!out.empty() && !first_emit_.has_value()) {
        first_emit_ = consumed_samples_;
    }
    emitted_samples_ += static_cast<int64_t>(out.size());
}

void StreamingConverter::reset() {
    fbank_.reset();
    pending_.clear();
    pending_rows_ = 0;
    acoustic_.reset();
    vocoder_.reset();
    mel_rows_.clear();
    mel_count_ = 0;
    finished_ = false;
    consumed_samples_ = 0;
    emitted_samples_ = 0;
    first_emit_.reset();
    times_ = StageTimes{};
}

BenchResult measure_latency(const Model& model, int64_t chunk_ms,
                            double seconds, uint64_t seed) {
    if (!(seconds > 0.0)) {
        throw ArgumentError("bench duration must be positive seconds");
    }
    RuntimeConfig rc;
    rc.chunk_ms = chunk_ms;
    rc.history_chunks = model.config.default_history;
    rc.speaker_id = 0;
    rc.mode = VocoderMode::mbs_streaming;
    StreamingConverter conv(model, rc);

    const int64_t total = static_cast<int64_t>(
        seconds * static_cast<double>(model.config.sample_rate));
    const int64_t block = chunk_ms * model.config.sample_rate / 1000;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    int64_t fed = 0;
    while (fed < total) {
        const int64_t n = std::min(block, total - fed);
        std::vector<float> chunk(static_cast<size_t>(n));
        for (float& v : chunk) v = dist(rng);
        conv.push(chunk);
        fed += n;
    }
    conv.finish();

    const StageTimes st = conv.stage_times();
    const double chunks = static_cast<double>(std::max<int64_t>(1, st.chunks));
    BenchResult result;
    result.report = latency_report(chunk_ms, st.encoder_ms / chunks,
                                   st.decoder_ms / chunks,
                                   st.vocoder_ms / chunks);
    const double compute_s =
        (st.feature_ms + st.encoder_ms + st.decoder_ms + st.vocoder_ms) / 1e3;
    result.rtf = rtf(compute_s, static_cast<double>(total) /
                                    static_cast<double>(model.config.sample_rate));
    return result;
}

double measure_vocoder_rtf(const Model& model, double seconds, uint64_t seed) {
    if (!(seconds > 0.0)) {
        throw ArgumentError("bench duration must be positive seconds");
    }
    const double frames_per_second = static_cast<double>(model.config.sample_rate) /
                                     static_cast<double>(model.config.hop_samples);
    const int64_t frames =
        std::max<int64_t>(1, static_cast<int64_t>(seconds * frames_per_second));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    VocoderSession session(model, true);
    double compute_ms = 0.0;
    for (int64_t t = 0; t < frames; ++t) {
        Tensor mel({1, model.config.mel_dim});
        for (int64_t j = 0; j < model.config.mel_dim; ++j) mel.at(0, j) = dist(rng);
        const Clock::time_point t0 = Clock::now();
        session.generate(mel);
        compute_ms += ms_since(t0);
    }
    const double audio_s = static_cast<double>(frames) *
                           static_cast<double>(model.config.hop_samples) /
                           static_cast<double>(model.config.sample_rate);
    return rtf(compute_ms / 1e3, audio_s);
}

}  // namespace svc

// Per-stage microbenchmarks at the full-size architecture. The chunked ones
// measure steady-state cost per chunk, which is what decides whether a
// configuration keeps up with real time.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "svc/acoustic_model.hpp"
#include "svc/features.hpp"
#include "svc/masking.hpp"
#include "svc/model_io.hpp"
#include "svc/pipeline.hpp"
#include "svc/pqmf.hpp"
#include "svc/vocoder.hpp"

using namespace svc;

namespace {

const Model& default_model() {
    static const Model m = random_init(ModelConfig{}, 1);
    return m;
}

Tensor rand_tensor(std::mt19937_64& rng, std::vector<int64_t> shape, float scale = 1.0f) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> dist(-scale, scale);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = dist(rng);
    return t;
}

RuntimeConfig runtime_for(int64_t chunk_ms) {
    RuntimeConfig rt;
    rt.chunk_ms = chunk_ms;
    return rt;
}

}  // namespace

static void BM_EncodeChunk(benchmark::State& state) {
    const Model& m = default_model();
    const int64_t chunk_ms = state.range(0);
    const int64_t cf = chunk_ms / 10;
    std::mt19937_64 rng(2);
    const Tensor chunk = rand_tensor(rng, {cf, m.config.fbank_dim});

    AcousticSession sess(m, runtime_for(chunk_ms));
    for (int i = 0; i < 12; ++i) sess.encode_chunk(chunk);  // fill the cache window
    for (auto _ : state) {
        benchmark::DoNotOptimize(sess.encode_chunk(chunk));
    }
}
BENCHMARK(BM_EncodeChunk)->Arg(40)->Arg(80)->Arg(120)->Arg(160)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_DecodeChunk(benchmark::State& state) {
    const Model& m = default_model();
    const int64_t chunk_ms = state.range(0);
    std::mt19937_64 rng(3);
    // steady state: one subsampled frame per 40 ms of input
    const Tensor ppgs = rand_tensor(rng, {chunk_ms / 40, m.config.ppg_classes});

    AcousticSession sess(m, runtime_for(chunk_ms));
    for (int i = 0; i < 12; ++i) sess.decode_chunk(ppgs, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sess.decode_chunk(ppgs, 0));
    }
}
BENCHMARK(BM_DecodeChunk)->Arg(40)->Arg(80)->Arg(120)->Arg(160)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_VocoderFrame(benchmark::State& state) {
    const Model& m = default_model();
    std::mt19937_64 rng(4);
    const Tensor frame = rand_tensor(rng, {1, m.config.mel_dim});

    VocoderSession sess(m);
    for (int i = 0; i < 8; ++i) sess.generate(frame);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sess.generate(frame));
    }
}
BENCHMARK(BM_VocoderFrame)->Unit(benchmark::kMillisecond);

static void BM_StreamChunk(benchmark::State& state) {
    const Model& m = default_model();
    const int64_t chunk_ms = state.range(0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    std::vector<float> chunk(static_cast<size_t>(chunk_ms * m.config.sample_rate / 1000));
    for (float& v : chunk) v = dist(rng);

    StreamingConverter conv(m, runtime_for(chunk_ms));
    for (int i = 0; i < 4; ++i) conv.push(chunk);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv.push(chunk));
    }
}
BENCHMARK(BM_StreamChunk)->Arg(40)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

static void BM_FbankFrame(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<float> dist(-0.5f, 0.5f);
    std::vector<float> hop(160);
    for (float& v : hop) v = dist(rng);

    FbankExtractor fx;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fx.push(hop));
    }
}
BENCHMARK(BM_FbankFrame)->Unit(benchmark::kMicrosecond);

static void BM_PqmfSynthesisChunk(benchmark::State& state) {
    const PqmfBank bank = default_bank();
    std::mt19937_64 rng(7);
    // one 160-sample hop of output per 40 band samples
    const Tensor sub = rand_tensor(rng, {bank.num_bands, 40});

    PqmfSynthState st;
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesis_step(sub, st, bank));
    }
}
BENCHMARK(BM_PqmfSynthesisChunk)->Unit(benchmark::kMicrosecond);

static void BM_BuildMask(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_chunk_mask({16, 32, 10}));
    }
}
BENCHMARK(BM_BuildMask)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svc/tensor.hpp"

namespace svc {

// 16-bit PCM mono WAV, read as float in [-1, 1].
struct WavData {
    int64_t sample_rate = 0;
    std::vector<float> samples;
};

// Strict reader: RIFF/WAVE, PCM, mono, 16-bit. Unknown chunks are skipped.
WavData read_wav(const std::string& path);

// Read and normalize to 16 kHz: 16 kHz passes through, 48 kHz is lowpassed
// and decimated by 3, anything else is rejected.
std::vector<float> load_audio_16k(const std::string& path);

void write_wav(const std::string& path, const std::vector<float>& samples,
               int64_t sample_rate = 16000);

// Full-scale symmetric mapping: +-1.0 -> +-32767, clamped.
int16_t float_to_pcm16(float v);
float pcm16_to_float(int16_t v);

// Decimation by 3 behind a zero-phase 91-tap windowed-sinc lowpass at 0.15
// cycles/sample (7.2 kHz at 48 kHz input). Output holds ceil(n/3) samples.
std::vector<float> decimate3(const std::vector<float>& x);

// Mel interchange file: "SVML" magic, u32 version (1), u32 dim, u64 frame
// count, then frames x dim float32 little-endian. The payload is the decoder
// output layout, one row per 10 ms frame.
void write_mel(const std::string& path, const Tensor& mel);
Tensor read_mel(const std::string& path);

}  // namespace svc

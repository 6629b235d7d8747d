#pragma once

#include <cstdint>
#include <vector>

#include "svc/tensor.hpp"

namespace svc {

// Log-mel filterbank features: 25 ms Hann window every 10 ms, 512-point FFT,
// triangular mel filters from 0 Hz to Nyquist, log with a 1e-10 power floor.
// Framing is causal: frame t covers samples [(t+1)*hop - win, (t+1)*hop),
// zero-padded on the left at the start, so frame t never reads past sample
// (t+1)*hop - 1 and n samples yield exactly floor(n/hop) frames.
Tensor fbank_offline(const std::vector<float>& x, int64_t mel_bins = 80,
                     int64_t sample_rate = 16000);

// Streaming extractor: push any number of samples, get back the frames they
// complete. Output across any split of the input is bitwise identical to
// fbank_offline on the concatenation.
class FbankExtractor {
public:
    explicit FbankExtractor(int64_t mel_bins = 80, int64_t sample_rate = 16000);

    Tensor push(const std::vector<float>& samples);
    void reset();

    int64_t frames_done() const { return frames_done_; }
    int64_t mel_bins() const { return mel_bins_; }

private:
    int64_t mel_bins_ = 0;
    int64_t sample_rate_ = 0;
    std::vector<float> carry_;  // window minus hop trailing samples
    int64_t frames_done_ = 0;
};

}  // namespace svc

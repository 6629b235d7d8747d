#include "svc/features.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "fft.hpp"
#include "svc/errors.hpp"

namespace svc {

namespace {

constexpr int64_t kFftSize = 512;
constexpr double kPi = 3.14159265358979323846;
constexpr double kPowerFloor = 1e-10;

int64_t window_samples(int64_t rate) { return rate * 25 / 1000; }
int64_t hop_samples(int64_t rate) { return rate * 10 / 1000; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular filters, equally spaced on the mel scale from 0 Hz to Nyquist.
// Dense [mel_bins, fft/2 + 1] weight matrix.
std::vector<double> mel_filterbank(int64_t mel_bins, int64_t rate) {
    const int64_t bins = kFftSize / 2 + 1;
    const double nyquist = static_cast<double>(rate) / 2.0;
    std::vector<double> points(static_cast<size_t>(mel_bins + 2));
    const double mel_max = hz_to_mel(nyquist);
    for (int64_t i = 0; i < mel_bins + 2; ++i) {
        points[static_cast<size_t>(i)] = mel_to_hz(
            mel_max * static_cast<double>(i) / static_cast<double>(mel_bins + 1));
    }
    std::vector<double> fb(static_cast<size_t>(mel_bins * bins), 0.0);
    for (int64_t m = 0; m < mel_bins; ++m) {
        const double lo = points[static_cast<size_t>(m)];
        const double mid = points[static_cast<size_t>(m + 1)];
        const double hi = points[static_cast<size_t>(m + 2)];
        for (int64_t b = 0; b < bins; ++b) {
            const double f = static_cast<double>(b) * static_cast<double>(rate) /
                             static_cast<double>(kFftSize);
            double w = 0.0;
            if (f > lo && f < mid) {
                w = (f - lo) / (mid - lo);
            } else if (f >= mid && f < hi) {
                w = (hi - f) / (hi - mid);
            }
            fb[static_cast<size_t>(m * bins + b)] = w;
        }
    }
    return fb;
}

void check_options(int64_t mel_bins, int64_t rate) {
    if (mel_bins <= 0) {
        throw ArgumentError("mel bin count must be positive");
    }
    if (rate <= 0) {
        throw ArgumentError("sample rate must be positive");
    }
    if (window_samples(rate) > kFftSize) {
        throw ArgumentError("25 ms at " + std::to_string(rate) +
                            " Hz does not fit the 512-point analysis FFT");
    }
}

// frames rows from a contiguous buffer; frame i reads buf[i*hop, i*hop+win).
Tensor analyze(const std::vector<float>& buf, int64_t frames, int64_t mel_bins,
               int64_t rate) {
    const int64_t win = window_samples(rate);
    const int64_t hop = hop_samples(rate);
    const int64_t bins = kFftSize / 2 + 1;
    static thread_local std::vector<double> fb;
    static thread_local int64_t fb_bins = 0;
    static thread_local int64_t fb_rate = 0;
    if (fb_bins != mel_bins || fb_rate != rate) {
        fb = mel_filterbank(mel_bins, rate);
        fb_bins = mel_bins;
        fb_rate = rate;
    }
    std::vector<double> window(static_cast<size_t>(win));
    for (int64_t i = 0; i < win; ++i) {
        window[static_cast<size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                 static_cast<double>(win));
    }
    Tensor out({frames, mel_bins});
    std::vector<std::complex<double>> buf_c(static_cast<size_t>(kFftSize));
    std::vector<double> power(static_cast<size_t>(bins));
    for (int64_t t = 0; t < frames; ++t) {
        std::fill(buf_c.begin(), buf_c.end(), std::complex<double>(0.0, 0.0));
        for (int64_t i = 0; i < win; ++i) {
            buf_c[static_cast<size_t>(i)] =
                static_cast<double>(buf[static_cast<size_t>(t * hop + i)]) *
                window[static_cast<size_t>(i)];
        }
        detail::fft_inplace(buf_c);
        for (int64_t b = 0; b < bins; ++b) {
            power[static_cast<size_t>(b)] = std::norm(buf_c[static_cast<size_t>(b)]);
        }
        for (int64_t m = 0; m < mel_bins; ++m) {
            double e = 0.0;
            const double* row = fb.data() + m * bins;
            for (int64_t b = 0; b < bins; ++b) {
                e += row[static_cast<size_t>(b)] * power[static_cast<size_t>(b)];
            }
            out.at(t, m) = static_cast<float>(std::log(std::max(e, kPowerFloor)));
        }
    }
    return out;
}

}  // namespace

Tensor fbank_offline(const std::vector<float>& x, int64_t mel_bins,
                     int64_t sample_rate) {
    check_options(mel_bins, sample_rate);
    const int64_t win = window_samples(sample_rate);
    const int64_t hop = hop_samples(sample_rate);
    const int64_t frames = static_cast<int64_t>(x.size()) / hop;
    std::vector<float> buf(static_cast<size_t>(win - hop), 0.0f);
    buf.insert(buf.end(), x.begin(), x.end());
    return analyze(buf, frames, mel_bins, sample_rate);
}

FbankExtractor::FbankExtractor(int64_t mel_bins, int64_t sample_rate)
    : mel_bins_(mel_bins), sample_rate_(sample_rate) {
    check_options(mel_bins, sample_rate);
    reset();
}

Tensor FbankExtractor::push(const std::vector<float>& samples) {
    const int64_t win = window_samples(sample_rate_);
    const int64_t hop = hop_samples(sample_rate_);
    carry_.insert(carry_.end(), samples.begin(), samples.end());
    const int64_t len = static_cast<int64_t>(carry_.size());
    const int64_t frames = len >= win ? (len - win) / hop + 1 : 0;
    Tensor out = analyze(carry_, frames, mel_bins_, sample_rate_);
    carry_.erase(carry_.begin(), carry_.begin() + frames * hop);
    frames_done_ += frames;
    return out;
}

void FbankExtractor::reset() {
    const int64_t pad =
        window_samples(sample_rate_) - hop_samples(sample_rate_);
    carry_.assign(static_cast<size_t>(pad), 0.0f);
    frames_done_ = 0;
}

}  // namespace svc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svc/tensor.hpp"

namespace svc {

// Mel cepstral distortion in dB, averaged over frames. Inputs are [T, C]
// coefficient matrices (mel cepstra, or any per-frame coefficient vectors the
// caller wants compared the same way); column 0 is the energy term and is
// excluded, columns 1..num_coeffs enter the distance. Frame counts must match;
// there is no time alignment here.
double mcd(const Tensor& ref, const Tensor& hyp, int64_t num_coeffs = 13);

struct F0Metrics {
    double rmse_hz = 0.0;
    double corr = 0.0;
};

// RMSE and Pearson correlation over frames voiced in both sequences
// (f0 > 0 on both sides). Unvoiced frames carry 0. Fewer than two jointly
// voiced frames, or zero variance on either side, leaves the correlation
// undefined and raises ArgumentError.
F0Metrics f0_metrics(const std::vector<double>& ref_f0,
                     const std::vector<double>& hyp_f0);

// Plain autocorrelation pitch tracker: 25 ms frames every 10 ms, peak search
// over lags for [fmin, fmax], voiced iff the peak's normalized autocorrelation
// exceeds voicing_threshold. One value per frame, 0 for unvoiced. Meant as a
// convenient default; f0_metrics accepts any tracker's output.
std::vector<double> track_f0(const std::vector<float>& x, int64_t sample_rate,
                             double fmin = 50.0, double fmax = 500.0,
                             double voicing_threshold = 0.3);

struct StftResolution {
    int64_t fft_size = 0;
    int64_t hop = 0;
    int64_t window = 0;
};

// (1024, 120, 600), (2048, 240, 1200), (512, 50, 240).
std::vector<StftResolution> default_stft_resolutions();

// Sum over resolutions of spectral convergence plus log-magnitude L1.
// Spectral convergence is |||X|-|Y|||_F / max(||X||_F, ||Y||_F), symmetric in
// its arguments; magnitudes are floored at 1e-7 before the log. Inputs must
// have equal length and cover at least one analysis window per resolution.
double mrstft_distance(const std::vector<float>& x, const std::vector<float>& y,
                       const std::vector<StftResolution>& resolutions =
                           default_stft_resolutions());

// Weights the published vocoder generator objective puts on the time-domain
// and spectral terms next to the adversarial term.
inline constexpr double kTimeLossWeight = 10.0;
inline constexpr double kStftLossWeight = 2.0;

// l_g + kTimeLossWeight * l_time + kStftLossWeight * l_stft. A forward
// combination of already-computed loss values; non-finite inputs raise
// ArgumentError.
double combine_vocoder_loss(double l_g, double l_time, double l_stft);

// Training-time constants recorded for completeness; nothing at inference
// time consumes them. The recognizer behind the content encoder was trained
// on (1 - w) * ctc + w * attention with w = 0.7, and the acoustic model on
// mel reconstruction plus speaker classification, unweighted.
inline constexpr double kRecognizerAttentionBlend = 0.7;

// First-packet accounting: the first chunk must be captured in full
// (chunk_ms), the front convolutions consume three more 10 ms frames before
// anything comes out (lookahead_ms = 30), and each stage's compute adds on
// top. Real time means the per-chunk compute fits inside the chunk itself.
struct LatencyReport {
    int64_t chunk_ms = 0;
    int64_t lookahead_ms = 30;
    double encoder_ms = 0.0;
    double decoder_ms = 0.0;
    double vocoder_ms = 0.0;
    double total_ms = 0.0;
    bool realtime_ok = false;
};

// chunk_ms must be a positive multiple of 40 ms; stage times must be >= 0.
LatencyReport latency_report(int64_t chunk_ms, double encoder_ms,
                             double decoder_ms, double vocoder_ms);

// JSON record for benchmark output: model, device_label, chunk_ms,
// lookahead_ms, encoder_ms, decoder_ms, vocoder_ms, total_ms, realtime_ok,
// rtf.
std::string latency_to_json(const LatencyReport& report,
                            const std::string& model,
                            const std::string& device_label, double rtf_value);

// Real-time factor: compute time over audio time, < 1 is faster than real
// time. audio_seconds must be > 0; compute_seconds must be >= 0.
double rtf(double compute_seconds, double audio_seconds);

}  // namespace svc

#include "svc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <nlohmann/json.hpp>

#include "fft.hpp"
#include "svc/errors.hpp"

namespace svc {

namespace {

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw ArgumentError(std::string(what) + " must be finite");
    }
}

// Magnitude spectrogram, flattened. Hann analysis window of length
// res.window, zero-padded to res.fft_size; frames start at multiples of
// res.hop. Only the fft_size/2 + 1 non-redundant bins are kept.
std::vector<double> magnitude_frames(const std::vector<float>& x,
                                     const StftResolution& res) {
    const int64_t n = static_cast<int64_t>(x.size());
    const int64_t frames = (n - res.window) / res.hop + 1;
    std::vector<double> window(static_cast<size_t>(res.window));
    for (int64_t i = 0; i < res.window; ++i) {
        window[static_cast<size_t>(i)] =
            0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 *
                                 static_cast<double>(i) /
                                 static_cast<double>(res.window));
    }
    const int64_t bins = res.fft_size / 2 + 1;
    std::vector<double> mags(static_cast<size_t>(frames * bins));
    std::vector<std::complex<double>> buf(static_cast<size_t>(res.fft_size));
    for (int64_t t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        const int64_t start = t * res.hop;
        for (int64_t i = 0; i < res.window; ++i) {
            buf[static_cast<size_t>(i)] = x[static_cast<size_t>(start + i)] *
                                          window[static_cast<size_t>(i)];
        }
        detail::fft_inplace(buf);
        for (int64_t b = 0; b < bins; ++b) {
            mags[static_cast<size_t>(t * bins + b)] =
                std::abs(buf[static_cast<size_t>(b)]);
        }
    }
    return mags;
}

}  // namespace

double mcd(const Tensor& ref, const Tensor& hyp, int64_t num_coeffs) {
    require_rank(ref, 2, "mcd ref");
    require_rank(hyp, 2, "mcd hyp");
    if (num_coeffs < 1) {
        throw ArgumentError("mcd needs at least one coefficient, got " +
                            std::to_string(num_coeffs));
    }
    if (!ref.same_shape(hyp)) {
        throw ShapeError("mcd inputs are not frame-aligned: " +
                         shape_string(ref) + " vs " + shape_string(hyp));
    }
    if (ref.cols() < num_coeffs + 1) {
        throw ArgumentError(
            "mcd with " + std::to_string(num_coeffs) +
            " coefficients needs " + std::to_string(num_coeffs + 1) +
            " columns (column 0 is skipped), got " + std::to_string(ref.cols()));
    }
    if (ref.rows() == 0) {
        throw ArgumentError("mcd needs at least one frame");
    }
    const double scale = 10.0 / std::log(10.0);
    double total = 0.0;
    for (int64_t t = 0; t < ref.rows(); ++t) {
        double sq = 0.0;
        for (int64_t i = 1; i <= num_coeffs; ++i) {
            const double d = static_cast<double>(ref.at(t, i)) -
                             static_cast<double>(hyp.at(t, i));
            sq += d * d;
        }
        total += scale * std::sqrt(2.0 * sq);
    }
    return total / static_cast<double>(ref.rows());
}

F0Metrics f0_metrics(const std::vector<double>& ref_f0,
                     const std::vector<double>& hyp_f0) {
    if (ref_f0.size() != hyp_f0.size()) {
        throw ShapeError("f0 sequences differ in length: " +
                         std::to_string(ref_f0.size()) + " vs " +
                         std::to_string(hyp_f0.size()));
    }
    std::vector<double> r;
    std::vector<double> h;
    for (size_t i = 0; i < ref_f0.size(); ++i) {
        if (ref_f0[i] > 0.0 && hyp_f0[i] > 0.0) {
            r.push_back(ref_f0[i]);
            h.push_back(hyp_f0[i]);
        }
    }
    const size_t n = r.size();
    if (n < 2) {
        throw ArgumentError(
            "correlation undefined: " + std::to_string(n) +
            " jointly voiced frame(s), need at least 2");
    }
    double se = 0.0;
    double mr = 0.0;
    double mh = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = r[i] - h[i];
        se += d * d;
        mr += r[i];
        mh += h[i];
    }
    mr /= static_cast<double>(n);
    mh /= static_cast<double>(n);
    double cov = 0.0;
    double vr = 0.0;
    double vh = 0.0;
    for (size_t i = 0; i < n; ++i) {
        cov += (r[i] - mr) * (h[i] - mh);
        vr += (r[i] - mr) * (r[i] - mr);
        vh += (h[i] - mh) * (h[i] - mh);
    }
    if (vr == 0.0 || vh == 0.0) {
        throw ArgumentError(
            "correlation undefined: an f0 sequence is constant over the "
            "jointly voiced frames");
    }
    F0Metrics out;
    out.rmse_hz = std::sqrt(se / static_cast<double>(n));
    out.corr = cov / std::sqrt(vr * vh);
    return out;
}

std::vector<double> track_f0(const std::vector<float>& x, int64_t sample_rate,
                             double fmin, double fmax,
                             double voicing_threshold) {
    if (sample_rate <= 0) {
        throw ArgumentError("sample rate must be positive");
    }
    if (!(fmin > 0.0) || !(fmax > fmin)) {
        throw ArgumentError("need 0 < fmin < fmax");
    }
    const int64_t frame = sample_rate * 25 / 1000;
    const int64_t hop = sample_rate * 10 / 1000;
    const int64_t lag_min = std::max<int64_t>(
        1, static_cast<int64_t>(std::floor(static_cast<double>(sample_rate) / fmax)));
    const int64_t lag_max = std::min(
        frame - 1,
        static_cast<int64_t>(std::ceil(static_cast<double>(sample_rate) / fmin)));
    if (lag_max <= lag_min) {
        throw ArgumentError("f0 search range collapses at this sample rate");
    }
    std::vector<double> f0;
    const int64_t n = static_cast<int64_t>(x.size());
    for (int64_t start = 0; start + frame <= n; start += hop) {
        double energy = 0.0;
        for (int64_t i = 0; i < frame; ++i) {
            const double s = x[static_cast<size_t>(start + i)];
            energy += s * s;
        }
        double best = 0.0;
        int64_t best_lag = 0;
        if (energy > 0.0) {
            for (int64_t lag = lag_min; lag <= lag_max; ++lag) {
                double acc = 0.0;
                for (int64_t i = 0; i + lag < frame; ++i) {
                    acc += static_cast<double>(x[static_cast<size_t>(start + i)]) *
                           static_cast<double>(x[static_cast<size_t>(start + i + lag)]);
                }
                if (acc > best) {
                    best = acc;
                    best_lag = lag;
                }
            }
        }
        const bool voiced = energy > 0.0 && best / energy > voicing_threshold;
        f0.push_back(voiced ? static_cast<double>(sample_rate) /
                                  static_cast<double>(best_lag)
                            : 0.0);
    }
    return f0;
}

std::vector<StftResolution> default_stft_resolutions() {
    return {{1024, 120, 600}, {2048, 240, 1200}, {512, 50, 240}};
}

double mrstft_distance(const std::vector<float>& x, const std::vector<float>& y,
                       const std::vector<StftResolution>& resolutions) {
    if (x.size() != y.size()) {
        throw ShapeError("waveforms differ in length: " +
                         std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    }
    if (resolutions.empty()) {
        throw ArgumentError("need at least one stft resolution");
    }
    double total = 0.0;
    for (const StftResolution& res : resolutions) {
        if (res.fft_size <= 0 || res.hop <= 0 || res.window <= 0) {
            throw ArgumentError("stft resolution fields must be positive");
        }
        if (res.hop >= res.fft_size) {
            throw ArgumentError("stft hop " + std::to_string(res.hop) +
                                " must be smaller than fft size " +
                                std::to_string(res.fft_size));
        }
        if (res.window > res.fft_size) {
            throw ArgumentError("stft window " + std::to_string(res.window) +
                                " does not fit in fft size " +
                                std::to_string(res.fft_size));
        }
        if (static_cast<int64_t>(x.size()) < res.window) {
            throw InsufficientInputError(
                "waveform of " + std::to_string(x.size()) +
                " samples is shorter than the " + std::to_string(res.window) +
                "-sample analysis window");
        }
        const std::vector<double> mx = magnitude_frames(x, res);
        const std::vector<double> my = magnitude_frames(y, res);
        double diff_sq = 0.0;
        double nx_sq = 0.0;
        double ny_sq = 0.0;
        double log_l1 = 0.0;
        for (size_t i = 0; i < mx.size(); ++i) {
            const double d = mx[i] - my[i];
            diff_sq += d * d;
            nx_sq += mx[i] * mx[i];
            ny_sq += my[i] * my[i];
            log_l1 += std::abs(std::log(std::max(mx[i], 1e-7)) -
                               std::log(std::max(my[i], 1e-7)));
        }
        const double denom = std::sqrt(std::max(nx_sq, ny_sq));
        const double sc = denom > 0.0 ? std::sqrt(diff_sq) / denom : 0.0;
        total += sc + log_l1 / static_cast<double>(mx.size());
    }
    return total;
}

double combine_vocoder_loss(double l_g, double l_time, double l_stft) {
    check_finite(l_g, "l_g");
    check_finite(l_time, "l_time");
    check_finite(l_stft, "l_stft");
    return l_g + kTimeLossWeight * l_time + kStftLossWeight * l_stft;
}

LatencyReport latency_report(int64_t chunk_ms, double encoder_ms,
                             double decoder_ms, double vocoder_ms) {
    if (chunk_ms <= 0 || chunk_ms % 40 != 0) {
        throw ArgumentError("chunk_ms must be a positive multiple of 40 ms, got " +
                            std::to_string(chunk_ms));
    }
    if (encoder_ms < 0.0 || decoder_ms < 0.0 || vocoder_ms < 0.0) {
        throw ArgumentError("stage times must be non-negative");
    }
    check_finite(encoder_ms, "encoder_ms");
    check_finite(decoder_ms, "decoder_ms");
    check_finite(vocoder_ms, "vocoder_ms");
    LatencyReport r;
    r.chunk_ms = chunk_ms;
    r.encoder_ms = encoder_ms;
    r.decoder_ms = decoder_ms;
    r.vocoder_ms = vocoder_ms;
    const double compute = encoder_ms + decoder_ms + vocoder_ms;
    r.total_ms = static_cast<double>(r.chunk_ms + r.lookahead_ms) + compute;
    r.realtime_ok = compute < static_cast<double>(chunk_ms);
    return r;
}

std::string latency_to_json(const LatencyReport& report,
                            const std::string& model,
                            const std::string& device_label,
                            double rtf_value) {
    nlohmann::json j;
    j["model"] = model;
    j["device_label"] = device_label;
    j["chunk_ms"] = report.chunk_ms;
    j["lookahead_ms"] = report.lookahead_ms;
    j["encoder_ms"] = report.encoder_ms;
    j["decoder_ms"] = report.decoder_ms;
    j["vocoder_ms"] = report.vocoder_ms;
    j["total_ms"] = report.total_ms;
    j["realtime_ok"] = report.realtime_ok;
    j["rtf"] = rtf_value;
    return j.dump(2);
}

double rtf(double compute_seconds, double audio_seconds) {
    check_finite(compute_seconds, "compute_seconds");
    check_finite(audio_seconds, "audio_seconds");
    if (audio_seconds <= 0.0) {
        throw ArgumentError("audio duration must be positive, got " +
                            std::to_string(audio_seconds));
    }
    if (compute_seconds < 0.0) {
        throw ArgumentError("compute time must be non-negative, got " +
                            std::to_string(compute_seconds));
    }
    return compute_seconds / audio_seconds;
}

}  // namespace svc

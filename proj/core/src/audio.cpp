#include "svc/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "svc/errors.hpp"

namespace svc {

namespace {

uint32_t read_u32(const std::vector<char>& buf, size_t at) {
    uint32_t v = 0;
    std::memcpy(&v, buf.data() + at, 4);
    return v;
}

uint16_t read_u16(const std::vector<char>& buf, size_t at) {
    uint16_t v = 0;
    std::memcpy(&v, buf.data() + at, 2);
    return v;
}

std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot open " + path);
    }
    std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    return buf;
}

void append_u32(std::string& out, uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void append_u16(std::string& out, uint16_t v) {
    char b[2];
    std::memcpy(b, &v, 2);
    out.append(b, 2);
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("short write to " + path);
    }
}

}  // namespace

WavData read_wav(const std::string& path) {
    const std::vector<char> buf = read_file(path);
    if (buf.size() < 12) {
        throw TruncatedFileError(path + ": too short for a RIFF header");
    }
    if (std::memcmp(buf.data(), "RIFF", 4) != 0) {
        throw BadMagicError(path + ": not a RIFF file");
    }
    if (std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
        throw BadMagicError(path + ": RIFF payload is not WAVE");
    }

    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    size_t data_at = 0, data_size = 0;
    bool have_data = false;

    size_t at = 12;
    while (at + 8 <= buf.size()) {
        char id[4];
        std::memcpy(id, buf.data() + at, 4);
        const uint32_t size = read_u32(buf, at + 4);
        at += 8;
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16 || at + 16 > buf.size()) {
                throw TruncatedFileError(path + ": fmt chunk too short");
            }
            format = read_u16(buf, at);
            channels = read_u16(buf, at + 2);
            rate = read_u32(buf, at + 4);
            bits = read_u16(buf, at + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_at = at;
            data_size = size;
            have_data = true;
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        at += size + (size & 1);
    }

    if (!have_fmt) {
        throw LoadError(path + ": no fmt chunk");
    }
    if (!have_data) {
        throw LoadError(path + ": no data chunk");
    }
    if (format != 1) {
        throw LoadError(path + ": only PCM (format 1) is supported, got format " +
                        std::to_string(format));
    }
    if (channels != 1) {
        throw LoadError(path + ": only mono is supported, got " +
                        std::to_string(channels) + " channels");
    }
    if (bits != 16) {
        throw LoadError(path + ": only 16-bit samples are supported, got " +
                        std::to_string(bits));
    }
    if (data_at + data_size > buf.size()) {
        throw TruncatedFileError(path + ": data chunk extends past end of file");
    }

    WavData wav;
    wav.sample_rate = rate;
    const size_t n = data_size / 2;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int16_t s = 0;
        std::memcpy(&s, buf.data() + data_at + 2 * i, 2);
        wav.samples[i] = pcm16_to_float(s);
    }
    return wav;
}

std::vector<float> load_audio_16k(const std::string& path) {
    WavData wav = read_wav(path);
    if (wav.sample_rate == 16000) {
        return std::move(wav.samples);
    }
    if (wav.sample_rate == 48000) {
        return decimate3(wav.samples);
    }
    throw ArgumentError(path + ": sample rate " +
                        std::to_string(wav.sample_rate) +
                        " is not supported (need 16000 or 48000)");
}

void write_wav(const std::string& path, const std::vector<float>& samples,
               int64_t sample_rate) {
    if (sample_rate <= 0) {
        throw ArgumentError("sample rate must be positive");
    }
    const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
    std::string out;
    out.reserve(44 + data_size);
    out.append("RIFF", 4);
    append_u32(out, 36 + data_size);
    out.append("WAVE", 4);
    out.append("fmt ", 4);
    append_u32(out, 16);
    append_u16(out, 1);  // PCM
    append_u16(out, 1);  // mono
    append_u32(out, static_cast<uint32_t>(sample_rate));
    append_u32(out, static_cast<uint32_t>(sample_rate * 2));  // byte rate
    append_u16(out, 2);   // block align
    append_u16(out, 16);  // bits
    out.append("data", 4);
    append_u32(out, data_size);
    for (float v : samples) {
        const int16_t s = float_to_pcm16(v);
        char b[2];
        std::memcpy(b, &s, 2);
        out.append(b, 2);
    }
    write_file(path, out);
}

int16_t float_to_pcm16(float v) {
    const float clamped = std::clamp(v, -1.0f, 1.0f);
    return static_cast<int16_t>(std::lrintf(clamped * 32767.0f));
}

float pcm16_to_float(int16_t v) {
    return static_cast<float>(v) / 32767.0f;
}

std::vector<float> decimate3(const std::vector<float>& x) {
    constexpr int64_t kTaps = 91;
    constexpr int64_t kCenter = (kTaps - 1) / 2;
    constexpr double kCutoff = 0.15;  // cycles per input sample
    static const std::vector<double> h = [] {
        std::vector<double> f(kTaps);
        double sum = 0.0;
        for (int64_t k = 0; k < kTaps; ++k) {
            const double t = static_cast<double>(k - kCenter);
            const double arg = 2.0 * 3.14159265358979323846 * kCutoff * t;
            const double sinc = t == 0.0 ? 1.0 : std::sin(arg) / arg;
            const double win =
                0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 *
                                     static_cast<double>(k) /
                                     static_cast<double>(kTaps - 1));
            f[static_cast<size_t>(k)] = 2.0 * kCutoff * sinc * win;
            sum += f[static_cast<size_t>(k)];
        }
        for (double& v : f) v /= sum;  // unit DC gain
        return f;
    }();

    const int64_t n = static_cast<int64_t>(x.size());
    std::vector<float> y(static_cast<size_t>((n + 2) / 3));
    for (int64_t i = 0; 3 * i < n; ++i) {
        double acc = 0.0;
        for (int64_t k = 0; k < kTaps; ++k) {
            const int64_t j = 3 * i + k - kCenter;
            if (j >= 0 && j < n) {
                acc += h[static_cast<size_t>(k)] *
                       static_cast<double>(x[static_cast<size_t>(j)]);
            }
        }
        y[static_cast<size_t>(i)] = static_cast<float>(acc);
    }
    return y;
}

void write_mel(const std::string& path, const Tensor& mel) {
    require_rank(mel, 2, "mel matrix");
    std::string out;
    out.append("SVML", 4);
    append_u32(out, 1);
    append_u32(out, static_cast<uint32_t>(mel.cols()));
    const uint64_t frames = static_cast<uint64_t>(mel.rows());
    char b[8];
    std::memcpy(b, &frames, 8);
    out.append(b, 8);
    out.append(reinterpret_cast<const char*>(mel.data()),
               static_cast<size_t>(mel.numel()) * 4);
    write_file(path, out);
}

Tensor read_mel(const std::string& path) {
    const std::vector<char> buf = read_file(path);
    if (buf.size() < 4) {
        throw TruncatedFileError(path + ": too short for a magic");
    }
    if (std::memcmp(buf.data(), "SVML", 4) != 0) {
        throw BadMagicError(path + ": not a mel file");
    }
    if (buf.size() < 20) {
        throw TruncatedFileError(path + ": header cut short");
    }
    const uint32_t version = read_u32(buf, 4);
    if (version != 1) {
        throw BadVersionError(path + ": unsupported mel file version " +
                              std::to_string(version));
    }
    const uint32_t dim = read_u32(buf, 8);
    if (dim == 0) {
        throw LoadError(path + ": zero-dimensional frames");
    }
    uint64_t frames = 0;
    std::memcpy(&frames, buf.data() + 12, 8);
    const uint64_t payload = frames * static_cast<uint64_t>(dim) * 4;
    if (buf.size() < 20 + payload) {
        throw TruncatedFileError(path + ": payload cut short");
    }
    if (buf.size() > 20 + payload) {
        throw LoadError(path + ": trailing bytes after payload");
    }
    Tensor mel({static_cast<int64_t>(frames), static_cast<int64_t>(dim)});
    std::memcpy(mel.data(), buf.data() + 20, static_cast<size_t>(payload));
    return mel;
}

}  // namespace svc

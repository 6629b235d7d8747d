#include "svc/pqmf.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "svc/errors.hpp"

namespace svc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Modified Bessel function of the first kind, order zero, by power series.
double bessel_i0(double x) {
    const double half = x / 2.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < sum * 1e-16) break;
    }
    return sum;
}

std::vector<double> kaiser_window(int64_t length, double beta) {
    std::vector<double> w(static_cast<size_t>(length));
    const double denom = bessel_i0(beta);
    for (int64_t n = 0; n < length; ++n) {
        const double r = 2.0 * n / (length - 1) - 1.0;
        w[static_cast<size_t>(n)] = bessel_i0(beta * std::sqrt(1.0 - r * r)) / denom;
    }
    return w;
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

}  // namespace

PqmfBank design_bank(int64_t num_bands, int64_t taps, double cutoff_ratio,
                     double kaiser_beta) {
    if (num_bands < 1) throw ArgumentError("filter bank needs at least 1 band");
    if (taps < num_bands) throw ArgumentError("taps must be >= num_bands");
    if (!(cutoff_ratio > 0.0 && cutoff_ratio < 0.5)) {
        throw ArgumentError("cutoff_ratio must lie in (0, 0.5)");
    }
    if (kaiser_beta < 0.0) throw ArgumentError("kaiser_beta must be >= 0");

    PqmfBank bank;
    bank.num_bands = num_bands;
    bank.taps = taps;
    bank.cutoff_ratio = cutoff_ratio;
    bank.kaiser_beta = kaiser_beta;

    const int64_t L = taps;
    const double center = (L - 1) / 2.0;
    const std::vector<double> win = kaiser_window(L, kaiser_beta);
    std::vector<double> proto(static_cast<size_t>(L));
    // compute the left half and mirror it, so symmetry is exact by construction
    for (int64_t n = 0; n <= (L - 1) / 2; ++n) {
        const double v = sinc(cutoff_ratio * (n - center)) * win[size_t(n)];
        proto[size_t(n)] = v;
        proto[size_t(L - 1 - n)] = v;
    }
    double dc = 0.0;
    for (double v : proto) dc += v;
    for (double& v : proto) v /= dc;  // unit DC gain
    bank.prototype.resize(static_cast<size_t>(L));
    for (int64_t n = 0; n < L; ++n) bank.prototype[size_t(n)] = static_cast<float>(proto[size_t(n)]);

    bank.analysis_filters = Tensor({num_bands, L});
    bank.synthesis_filters = Tensor({num_bands, L});
    if (num_bands == 1) {
        // Degenerate single-band case: identity analysis, pure L-1 delay at
        // synthesis. The modulation formula only tiles the spectrum for K >= 2.
        bank.analysis_filters.at(0, 0) = 1.0f;
        bank.synthesis_filters.at(0, L - 1) = 1.0f;
        return bank;
    }
    for (int64_t k = 0; k < num_bands; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        for (int64_t n = 0; n < L; ++n) {
            const double phase =
                (2 * k + 1) * (kPi / (2.0 * num_bands)) * (n - center) + sign * kPi / 4.0;
            bank.analysis_filters.at(k, n) =
                static_cast<float>(2.0 * proto[size_t(n)] * std::cos(phase));
        }
        for (int64_t n = 0; n < L; ++n) {
            bank.synthesis_filters.at(k, n) = bank.analysis_filters.at(k, L - 1 - n);
        }
    }
    return bank;
}

PqmfBank default_bank() { return design_bank(4, 62, 0.142, 9.0); }

Tensor analysis(const std::vector<float>& x, const PqmfBank& bank) {
    const int64_t n = static_cast<int64_t>(x.size());
    const int64_t K = bank.num_bands, L = bank.taps;
    if (n < L) {
        throw InsufficientInputError("analysis input shorter than the filter (" +
                                     std::to_string(n) + " < " + std::to_string(L) + ")");
    }
    const int64_t frames = (n + K - 1) / K;
    Tensor sub({K, frames});
    for (int64_t k = 0; k < K; ++k) {
        const float* h = bank.analysis_filters.row(k);
        float* out = sub.row(k);
        for (int64_t m = 0; m < frames; ++m) {
            const int64_t t = m * K;
            float acc = 0.0f;
            const int64_t jmax = std::min<int64_t>(L - 1, t);
            for (int64_t j = 0; j <= jmax; ++j) acc += h[j] * x[static_cast<size_t>(t - j)];
            out[m] = acc;
        }
    }
    return sub;
}

std::vector<float> synthesis_step(const Tensor& sub, PqmfSynthState& state,
                                  const PqmfBank& bank) {
    require_rank(sub, 2, "subband signal");
    const int64_t K = bank.num_bands, L = bank.taps;
    if (sub.rows() != K) {
        throw ShapeError("subband channels " + std::to_string(sub.rows()) +
                         " vs bank with " + std::to_string(K) + " bands");
    }
    if (state.tail.rank() == 0) state.tail = Tensor({K, L - 1});
    require_shape(state.tail, {K, L - 1}, "synthesis state");

    const int64_t frames = sub.cols();
    const int64_t out_len = frames * K;
    std::vector<float> y(static_cast<size_t>(out_len), 0.0f);
    const float gain = static_cast<float>(K);
    // Per band: history of L-1 stuffed samples followed by the new stuffed
    // chunk, filtered causally; only the new sample positions are emitted.
    Tensor stuffed({1, L - 1 + out_len});
    for (int64_t k = 0; k < K; ++k) {
        float* buf = stuffed.data();
        std::copy(state.tail.row(k), state.tail.row(k) + (L - 1), buf);
        std::fill(buf + (L - 1), buf + (L - 1 + out_len), 0.0f);
        const float* band = sub.row(k);
        for (int64_t m = 0; m < frames; ++m) buf[L - 1 + m * K] = band[m];
        const float* g = bank.synthesis_filters.row(k);
        for (int64_t t = 0; t < out_len; ++t) {
            float acc = 0.0f;
            const float* window = buf + t;  // covers stuffed[t .. t+L-1]
            for (int64_t j = 0; j < L; ++j) acc += g[j] * window[L - 1 - j];
            y[static_cast<size_t>(t)] += gain * acc;
        }
        std::copy(buf + out_len, buf + out_len + (L - 1), state.tail.row(k));
    }
    return y;
}

std::vector<float> synthesis(const Tensor& sub, const PqmfBank& bank) {
    PqmfSynthState state;
    return synthesis_step(sub, state, bank);
}

std::string bank_to_json(const PqmfBank& bank) {
    nlohmann::json j;
    j["num_bands"] = bank.num_bands;
    j["taps"] = bank.taps;
    j["cutoff_ratio"] = bank.cutoff_ratio;
    j["kaiser_beta"] = bank.kaiser_beta;
    j["prototype"] = bank.prototype;
    auto matrix = [](const Tensor& t) {
        std::vector<std::vector<float>> rows;
        for (int64_t i = 0; i < t.rows(); ++i) {
            rows.emplace_back(t.row(i), t.row(i) + t.cols());
        }
        return rows;
    };
    j["analysis"] = matrix(bank.analysis_filters);
    j["synthesis"] = matrix(bank.synthesis_filters);
    return j.dump(2);
}

PqmfBank bank_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("filter bank JSON: ") + e.what());
    }
    try {
        PqmfBank bank;
        bank.num_bands = j.at("num_bands").get<int64_t>();
        bank.taps = j.at("taps").get<int64_t>();
        bank.cutoff_ratio = j.at("cutoff_ratio").get<double>();
        bank.kaiser_beta = j.at("kaiser_beta").get<double>();
        bank.prototype = j.at("prototype").get<std::vector<float>>();
        if (static_cast<int64_t>(bank.prototype.size()) != bank.taps) {
            throw LoadError("filter bank JSON: prototype length != taps");
        }
        auto load_matrix = [&](const char* key) {
            const auto rows = j.at(key).get<std::vector<std::vector<float>>>();
            if (static_cast<int64_t>(rows.size()) != bank.num_bands) {
                throw LoadError(std::string("filter bank JSON: ") + key + " row count");
            }
            Tensor t({bank.num_bands, bank.taps});
            for (int64_t i = 0; i < bank.num_bands; ++i) {
                if (static_cast<int64_t>(rows[size_t(i)].size()) != bank.taps) {
                    throw LoadError(std::string("filter bank JSON: ") + key + " row length");
                }
                std::copy(rows[size_t(i)].begin(), rows[size_t(i)].end(), t.row(i));
            }
            return t;
        };
        bank.analysis_filters = load_matrix("analysis");
        bank.synthesis_filters = load_matrix("synthesis");
        return bank;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("filter bank JSON: ") + e.what());
    }
}

}  // namespace svc

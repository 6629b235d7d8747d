#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svc/tensor.hpp"

namespace svc {

// Cosine-modulated pseudo-QMF bank. The prototype is a Kaiser-windowed sinc
// lowpass (cutoff in Nyquist units, DC gain normalized to 1); band k of the
// analysis side is
//   h_k[n] = 2 h[n] cos((2k+1) (pi/2K) (n - (L-1)/2) + (-1)^k pi/4)
// and the synthesis side is its time reversal. K = 1 degenerates to a pure
// passthrough delay line: a single modulated filter cannot cover the whole
// spectrum, so the bank becomes analysis = identity, synthesis = delay of
// L-1 samples, keeping the round-trip delay contract intact.
struct PqmfBank {
    int64_t num_bands = 0;
    int64_t taps = 0;
    double cutoff_ratio = 0.0;
    double kaiser_beta = 0.0;
    std::vector<float> prototype;  // L coefficients, symmetric
    Tensor analysis_filters;       // [K, L]
    Tensor synthesis_filters;      // [K, L], time-reversed analysis
};

PqmfBank design_bank(int64_t num_bands, int64_t taps, double cutoff_ratio,
                     double kaiser_beta);

// Defaults used by the vocoder: 4 bands, 62 taps, cutoff 0.142, beta 9.0.
PqmfBank default_bank();

// Causal filtering with each analysis filter, then decimation by K.
// Output is [K, ceil(len(x)/K)].
Tensor analysis(const std::vector<float>& x, const PqmfBank& bank);

// Streaming synthesis state: the last L-1 zero-stuffed input samples per band.
struct PqmfSynthState {
    Tensor tail;  // [K, L-1]
    void clear() { tail = Tensor(); }
};

// Zero-stuff each band by K, filter with the synthesis filters scaled by K,
// sum. Chunk lengths are per-band sample counts; the full-signal call is the
// same code with a fresh state, so streamed output matches offline exactly.
std::vector<float> synthesis_step(const Tensor& sub, PqmfSynthState& state,
                                  const PqmfBank& bank);
std::vector<float> synthesis(const Tensor& sub, const PqmfBank& bank);

// JSON round-trip for the design artifact emitted by the CLI.
std::string bank_to_json(const PqmfBank& bank);
PqmfBank bank_from_json(const std::string& text);

}  // namespace svc

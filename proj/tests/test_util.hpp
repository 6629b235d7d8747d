#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "svc/nn_kernels.hpp"
#include "svc/tensor.hpp"

inline svc::Tensor rand_tensor(std::mt19937_64& rng, std::vector<int64_t> shape,
                               float scale = 1.0f) {
    svc::Tensor t(std::move(shape));
    std::uniform_real_distribution<float> dist(-scale, scale);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = dist(rng);
    return t;
}

inline svc::AttnWeights rand_attn_weights(std::mt19937_64& rng, int64_t d) {
    const float s = 1.0f / std::sqrt(static_cast<float>(d));
    svc::AttnWeights w;
    w.wq = rand_tensor(rng, {d, d}, s);
    w.wk = rand_tensor(rng, {d, d}, s);
    w.wv = rand_tensor(rng, {d, d}, s);
    w.wo = rand_tensor(rng, {d, d}, s);
    w.bq = rand_tensor(rng, {d}, s);
    w.bk = rand_tensor(rng, {d}, s);
    w.bv = rand_tensor(rng, {d}, s);
    w.bo = rand_tensor(rng, {d}, s);
    return w;
}

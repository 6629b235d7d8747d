#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svc/model.hpp"

namespace svc {

// One entry of the canonical tensor schema. The registry is the single
// source of truth for tensor names, shapes and order; save, load and
// random_init all walk it. Encoder entries are read-only: the runtime never
// mutates them after load.
struct TensorRef {
    std::string name;
    Tensor* tensor;
    bool read_only;
    int64_t fan_in;  // init scale source; 0 = constant zero, -1 = constant one
};

std::vector<TensorRef> tensor_registry(Model& model);

// Deterministic per seed: every weight uniform in +-1/sqrt(fan_in), layer
// norm gains one, layer norm shifts zero.
Model random_init(const ModelConfig& config, uint64_t seed);

// Container layout: "SVCM" magic, u32 format version, u64 metadata length,
// JSON metadata (config + tensor directory), then raw little-endian f32
// payload. Tensors appear exactly once each, offsets contiguous in registry
// order.
void save(const Model& model, const std::string& path);
Model load(const std::string& path);

}  // namespace svc

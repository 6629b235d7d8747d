#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "svc/errors.hpp"

namespace svc {

// Row-major float32 array of rank 1..3, the carrier between all kernels.
// Element access is unchecked; shape validation happens at operation entry.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);

    static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows);

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // 2D convenience
    int64_t rows() const { return shape_[0]; }
    int64_t cols() const { return shape_[1]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float* row(int64_t i) { return data_.data() + i * stride0_; }
    const float* row(int64_t i) const { return data_.data() + i * stride0_; }

    float& at(int64_t i) { return data_[static_cast<size_t>(i)]; }
    float at(int64_t i) const { return data_[static_cast<size_t>(i)]; }
    float& at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * stride0_ + j)]; }
    float at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * stride0_ + j)]; }
    float& at(int64_t i, int64_t j, int64_t k) {
        return data_[static_cast<size_t>(i * stride0_ + j * stride1_ + k)];
    }
    float at(int64_t i, int64_t j, int64_t k) const {
        return data_[static_cast<size_t>(i * stride0_ + j * stride1_ + k)];
    }

    void fill(float v);

private:
    std::vector<int64_t> shape_;
    std::vector<float> data_;
    int64_t stride0_ = 0;  // elements per step along dim 0
    int64_t stride1_ = 0;  // elements per step along dim 1 (rank 3 only)
};

std::string shape_string(const Tensor& t);

// Throw ShapeError unless t has exactly the given shape.
void require_shape(const Tensor& t, const std::vector<int64_t>& shape, const char* what);
void require_rank(const Tensor& t, int rank, const char* what);

// Largest |a-b| over all elements, divided by the largest magnitude present
// in either input (floored at 1e-12). Shapes must agree.
float max_rel_dev(const Tensor& a, const Tensor& b);
float max_abs_dev(const Tensor& a, const Tensor& b);

}  // namespace svc

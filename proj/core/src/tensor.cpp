#include "svc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svc {

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3) {
        throw ShapeError("tensor rank must be 1..3, got " + std::to_string(shape_.size()));
    }
    int64_t n = 1;
    for (int64_t d : shape_) {
        if (d < 0) throw ShapeError("negative tensor dimension");
        n *= d;
    }
    data_.assign(static_cast<size_t>(n), 0.0f);
    if (shape_.size() == 2) {
        stride0_ = shape_[1];
    } else if (shape_.size() == 3) {
        stride1_ = shape_[2];
        stride0_ = shape_[1] * shape_[2];
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
    const int64_t r = static_cast<int64_t>(rows.size());
    const int64_t c = r > 0 ? static_cast<int64_t>(rows.begin()->size()) : 0;
    Tensor t({r, c});
    int64_t i = 0;
    for (const auto& src : rows) {
        if (static_cast<int64_t>(src.size()) != c) {
            throw ShapeError("ragged initializer rows");
        }
        std::copy(src.begin(), src.end(), t.row(i));
        ++i;
    }
    return t;
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const Tensor& t) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < t.rank(); ++i) {
        if (i) os << ",";
        os << t.dim(i);
    }
    os << "]";
    return os.str();
}

void require_shape(const Tensor& t, const std::vector<int64_t>& shape, const char* what) {
    if (t.shape() != shape) {
        std::ostringstream os;
        os << what << ": expected shape [";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) os << ",";
            os << shape[i];
        }
        os << "], got " << shape_string(t);
        throw ShapeError(os.str());
    }
}

void require_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_string(t));
    }
}

float max_rel_dev(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("max_rel_dev: shape mismatch");
    float diff = 0.0f, scale = 1e-12f;
    for (int64_t i = 0; i < a.numel(); ++i) {
        diff = std::max(diff, std::fabs(a.at(i) - b.at(i)));
        scale = std::max({scale, std::fabs(a.at(i)), std::fabs(b.at(i))});
    }
    return diff / scale;
}

float max_abs_dev(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_dev: shape mismatch");
    float diff = 0.0f;
    for (int64_t i = 0; i < a.numel(); ++i) {
        diff = std::max(diff, std::fabs(a.at(i) - b.at(i)));
    }
    return diff;
}

}  // namespace svc

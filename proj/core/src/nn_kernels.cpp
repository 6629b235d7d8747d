#include "svc/nn_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "svc/errors.hpp"

namespace svc {

Tensor linear(const Tensor& x, const Tensor& W, const Tensor& b) {
    require_rank(x, 2, "linear input");
    require_rank(W, 2, "linear weight");
    require_rank(b, 1, "linear bias");
    const int64_t t = x.rows(), din = x.cols(), dout = W.cols();
    if (W.rows() != din) {
        throw ShapeError("linear: input width " + std::to_string(din) +
                         " vs weight rows " + std::to_string(W.rows()));
    }
    if (b.dim(0) != dout) throw ShapeError("linear: bias width mismatch");
    Tensor y({t, dout});
    for (int64_t r = 0; r < t; ++r) {
        float* yr = y.row(r);
        std::copy(b.data(), b.data() + dout, yr);
        const float* xr = x.row(r);
        for (int64_t i = 0; i < din; ++i) {
            const float xi = xr[i];
            const float* wr = W.row(i);
            for (int64_t o = 0; o < dout; ++o) yr[o] += xi * wr[o];
        }
    }
    return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
    require_rank(x, 2, "layer_norm input");
    const int64_t t = x.rows(), d = x.cols();
    require_shape(gamma, {d}, "layer_norm gain");
    require_shape(beta, {d}, "layer_norm shift");
    Tensor y({t, d});
    for (int64_t r = 0; r < t; ++r) {
        const float* xr = x.row(r);
        double mean = 0.0;
        for (int64_t i = 0; i < d; ++i) mean += xr[i];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (int64_t i = 0; i < d; ++i) {
            const double c = xr[i] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const float inv = 1.0f / std::sqrt(static_cast<float>(var) + eps);
        const float m = static_cast<float>(mean);
        float* yr = y.row(r);
        for (int64_t i = 0; i < d; ++i) {
            yr[i] = (xr[i] - m) * inv * gamma.at(i) + beta.at(i);
        }
    }
    return y;
}

Tensor relu(Tensor x) {
    float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) p[i] = p[i] > 0.0f ? p[i] : 0.0f;
    return x;
}

Tensor leaky_relu(Tensor x, float slope) {
    float* p = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) p[i] = p[i] > 0.0f ? p[i] : slope * p[i];
    return x;
}

void masked_softmax_row(float* scores, const uint8_t* allowed, int64_t n) {
    bool any = n > 0;
    if (allowed) {
        any = false;
        for (int64_t i = 0; i < n; ++i) {
            if (allowed[i]) {
                any = true;
            } else {
                scores[i] += -1e9f;
            }
        }
    }
    if (!any) throw ContractError("softmax row with every key masked out");
    float mx = -std::numeric_limits<float>::infinity();
    for (int64_t i = 0; i < n; ++i) mx = std::max(mx, scores[i]);
    float sum = 0.0f;
    for (int64_t i = 0; i < n; ++i) {
        scores[i] = std::exp(scores[i] - mx);
        sum += scores[i];
    }
    for (int64_t i = 0; i < n; ++i) scores[i] /= sum;
}

Tensor masked_softmax_rows(const Tensor& scores, const AttentionMask& mask) {
    require_rank(scores, 2, "masked_softmax_rows input");
    if (scores.rows() != mask.size() || scores.cols() != mask.size()) {
        throw ShapeError("masked_softmax_rows: scores " + shape_string(scores) +
                         " vs mask size " + std::to_string(mask.size()));
    }
    Tensor out = scores;
    for (int64_t i = 0; i < out.rows(); ++i) {
        masked_softmax_row(out.row(i), mask.row(i), out.cols());
    }
    return out;
}

namespace {

void check_attn_weights(const AttnWeights& w, int64_t d, int64_t heads) {
    if (heads < 1 || d % heads != 0) {
        throw ArgumentError("model width " + std::to_string(d) +
                            " not divisible by " + std::to_string(heads) + " heads");
    }
    require_shape(w.wq, {d, d}, "wq");
    require_shape(w.wk, {d, d}, "wk");
    require_shape(w.wv, {d, d}, "wv");
    require_shape(w.wo, {d, d}, "wo");
    require_shape(w.bq, {d}, "bq");
    require_shape(w.bk, {d}, "bk");
    require_shape(w.bv, {d}, "bv");
    require_shape(w.bo, {d}, "bo");
}

// Attention proper for query rows q against keys/values k/v. mask row i (when
// given) selects visible key columns for query i; nullptr = all visible.
// Shared by the offline and streaming paths so their arithmetic is identical.
Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v,
              const AttentionMask* mask, int64_t heads) {
    const int64_t tq = q.rows(), tk = k.rows(), d = q.cols();
    const int64_t dh = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    Tensor ctx({tq, d});
    std::vector<float> scores(static_cast<size_t>(tk));
    for (int64_t i = 0; i < tq; ++i) {
        const uint8_t* allowed = mask ? mask->row(i) : nullptr;
        const float* qi = q.row(i);
        float* ci = ctx.row(i);
        for (int64_t h = 0; h < heads; ++h) {
            const int64_t off = h * dh;
            for (int64_t j = 0; j < tk; ++j) {
                const float* kj = k.row(j) + off;
                float dot = 0.0f;
                for (int64_t m = 0; m < dh; ++m) dot += qi[off + m] * kj[m];
                scores[static_cast<size_t>(j)] = dot * scale;
            }
            masked_softmax_row(scores.data(), allowed, tk);
            for (int64_t j = 0; j < tk; ++j) {
                const float wj = scores[static_cast<size_t>(j)];
                const float* vj = v.row(j) + off;
                for (int64_t m = 0; m < dh; ++m) ci[off + m] += wj * vj[m];
            }
        }
    }
    return ctx;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.numel() == 0) return b;
    if (a.cols() != b.cols()) throw ShapeError("concat_rows: width mismatch");
    Tensor out({a.rows() + b.rows(), a.cols()});
    std::copy(a.data(), a.data() + a.numel(), out.data());
    std::copy(b.data(), b.data() + b.numel(), out.data() + a.numel());
    return out;
}

Tensor drop_leading_rows(const Tensor& t, int64_t n) {
    Tensor out({t.rows() - n, t.cols()});
    std::copy(t.row(n), t.row(n) + out.numel(), out.data());
    return out;
}

}  // namespace

Tensor masked_mhsa(const Tensor& x, const AttentionMask& mask,
                   const AttnWeights& w, int64_t heads) {
    require_rank(x, 2, "attention input");
    const int64_t t = x.rows(), d = x.cols();
    check_attn_weights(w, d, heads);
    if (mask.size() != t) {
        throw ShapeError("attention: input frames " + std::to_string(t) +
                         " vs mask size " + std::to_string(mask.size()));
    }
    const Tensor q = linear(x, w.wq, w.bq);
    const Tensor k = linear(x, w.wk, w.bk);
    const Tensor v = linear(x, w.wv, w.bv);
    const Tensor ctx = attend(q, k, v, &mask, heads);
    return linear(ctx, w.wo, w.bo);
}

void AttnCache::clear() {
    k = Tensor();
    v = Tensor();
    chunk_lens.clear();
}

Tensor mhsa_streaming_step(const Tensor& x_chunk, AttnCache& cache,
                           const AttnWeights& w, int64_t heads) {
    require_rank(x_chunk, 2, "attention chunk");
    const int64_t d = x_chunk.cols();
    check_attn_weights(w, d, heads);
    if (cache.frames() > 0 && cache.k.cols() != d) {
        throw ShapeError("attention cache width " + std::to_string(cache.k.cols()) +
                         " vs chunk width " + std::to_string(d));
    }
    const Tensor q = linear(x_chunk, w.wq, w.bq);
    cache.k = concat_rows(cache.k, linear(x_chunk, w.wk, w.bk));
    cache.v = concat_rows(cache.v, linear(x_chunk, w.wv, w.bv));
    cache.chunk_lens.push_back(x_chunk.rows());

    const Tensor ctx = attend(q, cache.k, cache.v, nullptr, heads);
    Tensor y = linear(ctx, w.wo, w.bo);

    if (cache.retention_frames) {
        int64_t total = cache.frames();
        int64_t drop = 0;
        while (total > *cache.retention_frames && !cache.chunk_lens.empty()) {
            drop += cache.chunk_lens.front();
            total -= cache.chunk_lens.front();
            cache.chunk_lens.pop_front();
        }
        if (drop > 0) {
            cache.k = drop_leading_rows(cache.k, drop);
            cache.v = drop_leading_rows(cache.v, drop);
        }
    }
    return y;
}

namespace {

// Valid cross-correlation core shared by every conv path, so offline and
// streamed results are the same floating-point sums.
Tensor conv_valid(const Tensor& x, const ConvSpec& spec, const Tensor& W, const Tensor& b) {
    const int64_t cin = spec.in_channels, cout = spec.out_channels;
    const int64_t k = spec.kernel_size, dil = spec.dilation, s = spec.stride;
    const int64_t t = x.cols();
    const int64_t extent = dil * (k - 1) + 1;
    const int64_t tout = (t - extent) / s + 1;
    Tensor y({cout, tout});
    for (int64_t o = 0; o < cout; ++o) {
        float* yo = y.row(o);
        for (int64_t n = 0; n < tout; ++n) yo[n] = b.at(o);
        for (int64_t i = 0; i < cin; ++i) {
            const float* xi = x.row(i);
            for (int64_t j = 0; j < k; ++j) {
                const float wij = W.at(o, i, j);
                const int64_t base = j * dil;
                for (int64_t n = 0; n < tout; ++n) yo[n] += wij * xi[n * s + base];
            }
        }
    }
    return y;
}

void check_conv_args(const Tensor& x, const ConvSpec& spec, const Tensor& W, const Tensor& b) {
    if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel_size < 1 ||
        spec.dilation < 1 || spec.stride < 1) {
        throw ArgumentError("conv spec fields must all be >= 1");
    }
    require_rank(x, 2, "conv input");
    require_shape(W, {spec.out_channels, spec.in_channels, spec.kernel_size}, "conv weight");
    require_shape(b, {spec.out_channels}, "conv bias");
    if (x.rows() != spec.in_channels) {
        throw ShapeError("conv input channels " + std::to_string(x.rows()) +
                         " vs spec " + std::to_string(spec.in_channels));
    }
}

Tensor pad_left(const Tensor& x, int64_t pad) {
    if (pad == 0) return x;
    Tensor out({x.rows(), x.cols() + pad});
    for (int64_t i = 0; i < x.rows(); ++i) {
        std::copy(x.row(i), x.row(i) + x.cols(), out.row(i) + pad);
    }
    return out;
}

}  // namespace

Tensor conv1d(const Tensor& x, const ConvSpec& spec, const Tensor& W, const Tensor& b) {
    check_conv_args(x, spec, W, b);
    const int64_t pad = spec.dilation * (spec.kernel_size - 1);
    if (spec.causal) {
        if (x.cols() < 1) throw InsufficientInputError("causal conv needs at least 1 frame");
        return conv_valid(pad_left(x, pad), spec, W, b);
    }
    if (x.cols() < pad + 1) {
        throw InsufficientInputError("valid conv needs " + std::to_string(pad + 1) +
                                     " frames, got " + std::to_string(x.cols()));
    }
    return conv_valid(x, spec, W, b);
}

Tensor conv1d_streaming_step(const Tensor& x_chunk, ConvCache& cache,
                             const ConvSpec& spec, const Tensor& W, const Tensor& b) {
    check_conv_args(x_chunk, spec, W, b);
    if (!spec.causal) {
        throw ArgumentError("streaming convolution requires a causal spec");
    }
    if (x_chunk.cols() % spec.stride != 0) {
        throw ArgumentError("chunk length " + std::to_string(x_chunk.cols()) +
                            " not a multiple of stride " + std::to_string(spec.stride));
    }
    const int64_t pad = spec.dilation * (spec.kernel_size - 1);
    if (cache.buffer.numel() == 0 && cache.buffer.rank() == 0) {
        cache.buffer = Tensor({spec.in_channels, pad});
    }
    require_shape(cache.buffer, {spec.in_channels, pad}, "conv cache");

    // buffer = [cache | chunk]; valid core over it emits exactly the new
    // output columns, then the last pad columns become the next cache.
    Tensor buf({spec.in_channels, pad + x_chunk.cols()});
    for (int64_t i = 0; i < spec.in_channels; ++i) {
        float* bi = buf.row(i);
        std::copy(cache.buffer.row(i), cache.buffer.row(i) + pad, bi);
        std::copy(x_chunk.row(i), x_chunk.row(i) + x_chunk.cols(), bi + pad);
    }
    Tensor y = x_chunk.cols() > 0 ? conv_valid(buf, spec, W, b)
                                  : Tensor({spec.out_channels, 0});
    for (int64_t i = 0; i < spec.in_channels; ++i) {
        const float* end = buf.row(i) + buf.cols();
        std::copy(end - pad, end, cache.buffer.row(i));
    }
    return y;
}

Tensor nearest_upsample(const Tensor& x, int64_t factor) {
    if (factor < 1) throw ArgumentError("upsample factor must be >= 1");
    require_rank(x, 2, "upsample input");
    Tensor y({x.rows(), x.cols() * factor});
    for (int64_t i = 0; i < x.rows(); ++i) {
        const float* xi = x.row(i);
        float* yi = y.row(i);
        for (int64_t t = 0; t < x.cols(); ++t) {
            const float v = xi[t];
            for (int64_t f = 0; f < factor; ++f) yi[t * factor + f] = v;
        }
    }
    return y;
}

}  // namespace svc

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "svc/errors.hpp"
#include "svc/masking.hpp"
#include "svc/nn_kernels.hpp"
#include "test_util.hpp"

using namespace svc;

namespace {

// Plain double-precision attention, written independently of the library
// kernel: explicit head loops, -1e9 additive masking, no shared helpers.
Tensor reference_attention(const Tensor& x, const AttentionMask& mask,
                           const AttnWeights& w, int64_t heads) {
    const int64_t t = x.rows(), d = x.cols(), dh = d / heads;
    auto matmul = [](const Tensor& a, const Tensor& b, const Tensor& bias) {
        Tensor y({a.rows(), b.cols()});
        for (int64_t i = 0; i < a.rows(); ++i) {
            for (int64_t j = 0; j < b.cols(); ++j) {
                double acc = bias.at(j);
                for (int64_t m = 0; m < a.cols(); ++m) acc += double(a.at(i, m)) * b.at(m, j);
                y.at(i, j) = static_cast<float>(acc);
            }
        }
        return y;
    };
    const Tensor q = matmul(x, w.wq, w.bq);
    const Tensor k = matmul(x, w.wk, w.bk);
    const Tensor v = matmul(x, w.wv, w.bv);
    Tensor ctx({t, d});
    for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < t; ++i) {
            std::vector<double> logit(static_cast<size_t>(t));
            double mx = -1e300;
            for (int64_t j = 0; j < t; ++j) {
                double s = 0.0;
                for (int64_t m = 0; m < dh; ++m) {
                    s += double(q.at(i, h * dh + m)) * k.at(j, h * dh + m);
                }
                s /= std::sqrt(double(dh));
                if (!mask.at(i, j)) s += -1e9;
                logit[size_t(j)] = s;
                mx = std::max(mx, s);
            }
            double denom = 0.0;
            for (int64_t j = 0; j < t; ++j) denom += std::exp(logit[size_t(j)] - mx);
            for (int64_t j = 0; j < t; ++j) {
                const double wt = std::exp(logit[size_t(j)] - mx) / denom;
                for (int64_t m = 0; m < dh; ++m) {
                    ctx.at(i, h * dh + m) += static_cast<float>(wt * v.at(j, h * dh + m));
                }
            }
        }
    }
    return matmul(ctx, w.wo, w.bo);
}

// Direct-definition convolution oracle in doubles.
Tensor reference_conv(const Tensor& x, const ConvSpec& sp, const Tensor& W, const Tensor& b) {
    const int64_t pad = sp.causal ? sp.dilation * (sp.kernel_size - 1) : 0;
    const int64_t t = x.cols() + pad;
    const int64_t extent = sp.dilation * (sp.kernel_size - 1) + 1;
    const int64_t tout = (t - extent) / sp.stride + 1;
    auto sample = [&](int64_t ch, int64_t pos) -> double {
        pos -= pad;
        if (pos < 0 || pos >= x.cols()) return 0.0;
        return x.at(ch, pos);
    };
    Tensor y({sp.out_channels, tout});
    for (int64_t o = 0; o < sp.out_channels; ++o) {
        for (int64_t n = 0; n < tout; ++n) {
            double acc = b.at(o);
            for (int64_t i = 0; i < sp.in_channels; ++i) {
                for (int64_t j = 0; j < sp.kernel_size; ++j) {
                    acc += double(W.at(o, i, j)) * sample(i, n * sp.stride + j * sp.dilation);
                }
            }
            y.at(o, n) = static_cast<float>(acc);
        }
    }
    return y;
}

}  // namespace

TEST_CASE("linear identity, hand oracle, zero weights") {
    Tensor x = Tensor::from_rows({{1, 2}});
    Tensor id = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor zero2({int64_t{2}});
    Tensor y = linear(x, id, zero2);
    CHECK(y.at(0, 0) == 1.0f);
    CHECK(y.at(0, 1) == 2.0f);

    Tensor x2 = Tensor::from_rows({{1, 0}, {0, 1}});
    Tensor w2 = Tensor::from_rows({{3, 0}, {0, 5}});
    Tensor b2 = Tensor::from_rows({{1, 1}});
    Tensor b1({int64_t{2}});
    b1.at(0) = 1.0f;
    b1.at(1) = 1.0f;
    Tensor y2 = linear(x2, w2, b1);
    CHECK(y2.at(0, 0) == 4.0f);
    CHECK(y2.at(0, 1) == 1.0f);
    CHECK(y2.at(1, 0) == 1.0f);
    CHECK(y2.at(1, 1) == 6.0f);

    std::mt19937_64 rng(1);
    Tensor xr = rand_tensor(rng, {5, 3});
    Tensor w0({3, 4});
    Tensor bc({int64_t{4}});
    bc.fill(2.5f);
    Tensor yr = linear(xr, w0, bc);
    for (int64_t i = 0; i < yr.numel(); ++i) CHECK(yr.at(i) == 2.5f);

    CHECK_THROWS_AS(linear(xr, Tensor({4, 4}), bc), ShapeError);
}

TEST_CASE("layer norm standardizes each row") {
    std::mt19937_64 rng(2);
    Tensor x = rand_tensor(rng, {4, 64}, 3.0f);
    Tensor gamma({int64_t{64}}), beta({int64_t{64}});
    gamma.fill(1.0f);
    Tensor y = layer_norm(x, gamma, beta);
    for (int64_t r = 0; r < y.rows(); ++r) {
        double mean = 0, var = 0;
        for (int64_t i = 0; i < 64; ++i) mean += y.at(r, i);
        mean /= 64;
        for (int64_t i = 0; i < 64; ++i) var += (y.at(r, i) - mean) * (y.at(r, i) - mean);
        var /= 64;
        CHECK(std::fabs(mean) < 1e-5);
        CHECK(std::fabs(var - 1.0) < 1e-3);
    }
}

TEST_CASE("masked softmax rows normalize and suppress masked keys") {
    std::mt19937_64 rng(3);
    const AttentionMask mask = build_chunk_mask({2, 3, 1});
    Tensor scores = rand_tensor(rng, {6, 6}, 4.0f);
    Tensor p = masked_softmax_rows(scores, mask);
    for (int64_t i = 0; i < 6; ++i) {
        float total = 0.0f;
        for (int64_t j = 0; j < 6; ++j) {
            total += p.at(i, j);
            if (!mask.at(i, j)) CHECK(p.at(i, j) < 1e-8f);
        }
        CHECK(std::fabs(total - 1.0f) < 1e-6f);
    }
}

TEST_CASE("a fully masked row cannot normalize") {
    AttentionMask empty_row(2);
    empty_row.set(1, 0, true);
    empty_row.set(1, 1, true);
    Tensor scores({2, 2});
    CHECK_THROWS_AS(masked_softmax_rows(scores, empty_row), ContractError);
}

TEST_CASE("single frame gets attention weight one") {
    std::mt19937_64 rng(4);
    const int64_t d = 8;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor x = rand_tensor(rng, {1, d});
    AttentionMask m(1);
    m.set(0, 0, true);
    Tensor y = masked_mhsa(x, m, w, 2);
    // weight is exactly 1, so the result is the v projection through the o projection
    Tensor expected = linear(linear(x, w.wv, w.bv), w.wo, w.bo);
    CHECK(max_abs_dev(y, expected) < 1e-6f);
}

TEST_CASE("identical frames give uniform attention") {
    std::mt19937_64 rng(5);
    const int64_t d = 16, t = 7;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor one = rand_tensor(rng, {1, d});
    Tensor x({t, d});
    for (int64_t r = 0; r < t; ++r) {
        for (int64_t i = 0; i < d; ++i) x.at(r, i) = one.at(0, i);
    }
    AttentionMask full(t);
    for (int64_t i = 0; i < t; ++i) {
        for (int64_t j = 0; j < t; ++j) full.set(i, j, true);
    }
    Tensor y = masked_mhsa(x, full, w, 4);
    // uniform 1/t weights over identical values reduce to the single-frame case
    AttentionMask m1(1);
    m1.set(0, 0, true);
    Tensor y1 = masked_mhsa(one, m1, w, 4);
    for (int64_t r = 0; r < t; ++r) {
        for (int64_t i = 0; i < d; ++i) {
            CHECK(std::fabs(y.at(r, i) - y1.at(0, i)) < 1e-5f);
        }
    }
}

TEST_CASE("chunk 0 rows match attention run on chunk 0 alone") {
    std::mt19937_64 rng(6);
    const int64_t d = 16, c = 2;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor x = rand_tensor(rng, {6, d});
    Tensor y = masked_mhsa(x, build_chunk_mask({c, 3, std::nullopt}), w, 4);
    Tensor x0({c, d});
    for (int64_t r = 0; r < c; ++r) {
        for (int64_t i = 0; i < d; ++i) x0.at(r, i) = x.at(r, i);
    }
    Tensor y0 = masked_mhsa(x0, build_chunk_mask({c, 1, std::nullopt}), w, 4);
    for (int64_t r = 0; r < c; ++r) {
        for (int64_t i = 0; i < d; ++i) {
            CHECK(std::fabs(y.at(r, i) - y0.at(r, i)) < 1e-6f);
        }
    }
}

TEST_CASE("attention matches a double-precision reference") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int64_t heads = 1 + trial % 4;
        const int64_t d = heads * (4 + trial % 3) * 2;
        const int64_t c = 1 + trial % 3, n = 1 + trial % 5;
        AttnWeights w = rand_attn_weights(rng, d);
        Tensor x = rand_tensor(rng, {c * n, d});
        std::optional<int64_t> h;
        if (trial % 2) h = trial % 3;
        const AttentionMask mask = build_chunk_mask({c, n, h});
        Tensor got = masked_mhsa(x, mask, w, heads);
        Tensor want = reference_attention(x, mask, w, heads);
        CHECK(max_rel_dev(got, want) < 1e-5f);
    }
}

TEST_CASE("first streamed chunk equals attention on the chunk alone") {
    std::mt19937_64 rng(8);
    const int64_t d = 16, c = 4;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor x = rand_tensor(rng, {c, d});
    AttnCache cache;
    Tensor ys = mhsa_streaming_step(x, cache, w, 4);
    Tensor yo = masked_mhsa(x, build_chunk_mask({c, 1, std::nullopt}), w, 4);
    CHECK(max_abs_dev(ys, yo) < 1e-6f);
    CHECK(cache.frames() == c);
}

TEST_CASE("three streamed chunks equal the offline masked run") {
    std::mt19937_64 rng(9);
    const int64_t d = 24, c = 3, n = 3;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor x = rand_tensor(rng, {c * n, d});
    Tensor offline = masked_mhsa(x, build_chunk_mask({c, n, std::nullopt}), w, 4);
    AttnCache cache;
    for (int64_t ch = 0; ch < n; ++ch) {
        Tensor xc({c, d});
        for (int64_t r = 0; r < c; ++r) {
            for (int64_t i = 0; i < d; ++i) xc.at(r, i) = x.at(ch * c + r, i);
        }
        Tensor yc = mhsa_streaming_step(xc, cache, w, 4);
        for (int64_t r = 0; r < c; ++r) {
            for (int64_t i = 0; i < d; ++i) {
                CHECK(std::fabs(yc.at(r, i) - offline.at(ch * c + r, i)) <= 1e-5f);
            }
        }
    }
}

TEST_CASE("retention of one chunk reproduces the history-limited mask") {
    std::mt19937_64 rng(10);
    const int64_t d = 16, c = 3;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor x = rand_tensor(rng, {3 * c, d});
    AttnCache cache;
    cache.retention_frames = c;  // one chunk of history
    Tensor last;
    for (int64_t ch = 0; ch < 3; ++ch) {
        Tensor xc({c, d});
        for (int64_t r = 0; r < c; ++r) {
            for (int64_t i = 0; i < d; ++i) xc.at(r, i) = x.at(ch * c + r, i);
        }
        last = mhsa_streaming_step(xc, cache, w, 4);
        CHECK(cache.frames() <= c);
    }
    // offline oracle: chunks {1,2} with history 1, take the chunk-2 rows
    Tensor x12({2 * c, d});
    for (int64_t r = 0; r < 2 * c; ++r) {
        for (int64_t i = 0; i < d; ++i) x12.at(r, i) = x.at(c + r, i);
    }
    Tensor off = masked_mhsa(x12, build_chunk_mask({c, 2, 1}), w, 4);
    for (int64_t r = 0; r < c; ++r) {
        for (int64_t i = 0; i < d; ++i) {
            CHECK(std::fabs(last.at(r, i) - off.at(c + r, i)) <= 1e-5f);
        }
    }
}

TEST_CASE("streamed attention equals offline for random specs and histories") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 12; ++trial) {
        const int64_t heads = 1 + trial % 3;
        const int64_t d = heads * 8;
        const int64_t c = 1 + trial % 4;
        const int64_t n = 2 + trial % 5;
        const int64_t h = trial % 4;
        AttnWeights w = rand_attn_weights(rng, d);
        Tensor x = rand_tensor(rng, {c * n, d});
        Tensor offline = masked_mhsa(x, build_chunk_mask({c, n, h}), w, heads);
        AttnCache cache;
        cache.retention_frames = h * c;
        Tensor streamed({c * n, d});
        for (int64_t ch = 0; ch < n; ++ch) {
            Tensor xc({c, d});
            for (int64_t r = 0; r < c; ++r) {
                for (int64_t i = 0; i < d; ++i) xc.at(r, i) = x.at(ch * c + r, i);
            }
            Tensor yc = mhsa_streaming_step(xc, cache, w, heads);
            for (int64_t r = 0; r < c; ++r) {
                for (int64_t i = 0; i < d; ++i) streamed.at(ch * c + r, i) = yc.at(r, i);
            }
        }
        CHECK(max_rel_dev(streamed, offline) < 1e-5f);
    }
}

TEST_CASE("future chunks never touch already-computed attention output") {
    std::mt19937_64 rng(12);
    const int64_t d = 16, c = 2, n = 4;
    AttnWeights w = rand_attn_weights(rng, d);
    const AttentionMask mask = build_chunk_mask({c, n, std::nullopt});
    Tensor x = rand_tensor(rng, {c * n, d});
    Tensor y1 = masked_mhsa(x, mask, w, 4);
    Tensor x2 = x;
    x2.at(c * n - 1, 0) += 10.0f;  // perturb the last chunk
    Tensor y2 = masked_mhsa(x2, mask, w, 4);
    for (int64_t r = 0; r < c * (n - 1); ++r) {
        for (int64_t i = 0; i < d; ++i) CHECK(y1.at(r, i) == y2.at(r, i));
    }
}

TEST_CASE("conv identity kernels and the tiny hand cases") {
    ConvSpec sp{1, 1, 1, 1, 1, true};
    Tensor w({1, 1, 1});
    w.at(0) = 1.0f;
    Tensor b({int64_t{1}});
    Tensor x({1, 3});
    x.at(0, 0) = 1;
    x.at(0, 1) = 2;
    x.at(0, 2) = 3;
    Tensor y = conv1d(x, sp, w, b);
    CHECK(y.at(0, 0) == 1.0f);
    CHECK(y.at(0, 1) == 2.0f);
    CHECK(y.at(0, 2) == 3.0f);

    ConvSpec sp2{1, 1, 2, 1, 1, true};
    Tensor w01({1, 1, 2});
    w01.at(0, 0, 0) = 0.0f;
    w01.at(0, 0, 1) = 1.0f;
    Tensor y01 = conv1d(x, sp2, w01, b);
    CHECK(y01.at(0, 0) == 1.0f);
    CHECK(y01.at(0, 1) == 2.0f);
    CHECK(y01.at(0, 2) == 3.0f);
    Tensor w10({1, 1, 2});
    w10.at(0, 0, 0) = 1.0f;
    w10.at(0, 0, 1) = 0.0f;
    Tensor y10 = conv1d(x, sp2, w10, b);
    CHECK(y10.at(0, 0) == 0.0f);
    CHECK(y10.at(0, 1) == 1.0f);
    CHECK(y10.at(0, 2) == 2.0f);
}

TEST_CASE("valid mode lengths and the seven-frame receptive field") {
    std::mt19937_64 rng(13);
    ConvSpec sp{2, 3, 3, 1, 2, false};
    Tensor w = rand_tensor(rng, {3, 2, 3});
    Tensor b = rand_tensor(rng, {3});
    Tensor x = rand_tensor(rng, {2, 7});
    Tensor y = conv1d(x, sp, w, b);
    CHECK(y.cols() == 3);
    CHECK(max_rel_dev(y, reference_conv(x, sp, w, b)) < 1e-6f);
    Tensor tiny = rand_tensor(rng, {2, 2});
    CHECK_THROWS_AS(conv1d(tiny, sp, w, b), InsufficientInputError);
}

TEST_CASE("convolution matches the direct-definition oracle") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        ConvSpec sp;
        sp.in_channels = 1 + trial % 3;
        sp.out_channels = 1 + (trial / 2) % 3;
        sp.kernel_size = 1 + trial % 5;
        sp.dilation = 1 + trial % 3;
        sp.stride = 1 + trial % 2;
        sp.causal = trial % 2 == 0;
        const int64_t t = sp.dilation * (sp.kernel_size - 1) + 1 + trial % 9;
        Tensor w = rand_tensor(rng, {sp.out_channels, sp.in_channels, sp.kernel_size});
        Tensor b = rand_tensor(rng, {sp.out_channels});
        Tensor x = rand_tensor(rng, {sp.in_channels, t});
        Tensor got = conv1d(x, sp, w, b);
        Tensor want = reference_conv(x, sp, w, b);
        REQUIRE(got.same_shape(want));
        CHECK(max_rel_dev(got, want) < 1e-5f);
        if (sp.causal && sp.stride == 1) CHECK(got.cols() == t);
    }
}

TEST_CASE("streamed convolution reproduces the offline result") {
    std::mt19937_64 rng(15);
    SUBCASE("one full-length chunk") {
        ConvSpec sp{3, 2, 3, 1, 1, true};
        Tensor w = rand_tensor(rng, {2, 3, 3});
        Tensor b = rand_tensor(rng, {2});
        Tensor x = rand_tensor(rng, {3, 20});
        ConvCache cache;
        Tensor ys = conv1d_streaming_step(x, cache, sp, w, b);
        CHECK(max_abs_dev(ys, conv1d(x, sp, w, b)) == 0.0f);
    }
    SUBCASE("one-frame chunks with dilation") {
        ConvSpec sp{2, 2, 3, 2, 1, true};
        Tensor w = rand_tensor(rng, {2, 2, 3});
        Tensor b = rand_tensor(rng, {2});
        Tensor x = rand_tensor(rng, {2, 17});
        Tensor offline = conv1d(x, sp, w, b);
        ConvCache cache;
        for (int64_t t = 0; t < x.cols(); ++t) {
            Tensor xc({2, 1});
            xc.at(0, 0) = x.at(0, t);
            xc.at(1, 0) = x.at(1, t);
            Tensor yc = conv1d_streaming_step(xc, cache, sp, w, b);
            REQUIRE(yc.cols() == 1);
            CHECK(std::fabs(yc.at(0, 0) - offline.at(0, t)) <= 1e-6f);
            CHECK(std::fabs(yc.at(1, 0) - offline.at(1, t)) <= 1e-6f);
            CHECK(cache.buffer.cols() == 4);
        }
    }
    SUBCASE("random partitions, kernels, dilations, strides") {
        for (int trial = 0; trial < 20; ++trial) {
            ConvSpec sp;
            sp.in_channels = 1 + trial % 3;
            sp.out_channels = 1 + (trial / 3) % 3;
            sp.kernel_size = 1 + trial % 4;
            sp.dilation = 1 + trial % 3;
            sp.stride = 1 + trial % 3;
            sp.causal = true;
            const int64_t chunks = 2 + trial % 4;
            std::vector<int64_t> lens;
            int64_t total = 0;
            std::uniform_int_distribution<int64_t> ld(1, 4);
            for (int64_t i = 0; i < chunks; ++i) {
                lens.push_back(ld(rng) * sp.stride);
                total += lens.back();
            }
            Tensor w = rand_tensor(rng, {sp.out_channels, sp.in_channels, sp.kernel_size});
            Tensor b = rand_tensor(rng, {sp.out_channels});
            Tensor x = rand_tensor(rng, {sp.in_channels, total});
            Tensor offline = conv1d(x, sp, w, b);
            ConvCache cache;
            int64_t in_pos = 0, out_pos = 0;
            for (int64_t len : lens) {
                Tensor xc({sp.in_channels, len});
                for (int64_t i = 0; i < sp.in_channels; ++i) {
                    for (int64_t t = 0; t < len; ++t) xc.at(i, t) = x.at(i, in_pos + t);
                }
                Tensor yc = conv1d_streaming_step(xc, cache, sp, w, b);
                REQUIRE(yc.cols() == len / sp.stride);
                for (int64_t i = 0; i < sp.out_channels; ++i) {
                    for (int64_t t = 0; t < yc.cols(); ++t) {
                        CHECK(std::fabs(yc.at(i, t) - offline.at(i, out_pos + t)) <= 1e-6f);
                    }
                }
                in_pos += len;
                out_pos += yc.cols();
            }
            CHECK(out_pos == offline.cols());
        }
    }
}

TEST_CASE("streaming rejects non-causal specs and misaligned chunks") {
    std::mt19937_64 rng(16);
    ConvSpec sp{1, 1, 3, 1, 2, false};
    Tensor w = rand_tensor(rng, {1, 1, 3});
    Tensor b = rand_tensor(rng, {1});
    Tensor x = rand_tensor(rng, {1, 4});
    ConvCache cache;
    CHECK_THROWS_AS(conv1d_streaming_step(x, cache, sp, w, b), ArgumentError);
    sp.causal = true;
    Tensor odd = rand_tensor(rng, {1, 3});
    ConvCache cache2;
    CHECK_THROWS_AS(conv1d_streaming_step(odd, cache2, sp, w, b), ArgumentError);
}

TEST_CASE("causal convolution ignores future samples") {
    std::mt19937_64 rng(17);
    ConvSpec sp{2, 2, 5, 2, 1, true};
    Tensor w = rand_tensor(rng, {2, 2, 5});
    Tensor b = rand_tensor(rng, {2});
    Tensor x = rand_tensor(rng, {2, 30});
    Tensor y1 = conv1d(x, sp, w, b);
    for (int64_t t : {5, 12, 28}) {
        Tensor x2 = x;
        x2.at(0, t) += 3.0f;
        Tensor y2 = conv1d(x2, sp, w, b);
        for (int64_t n = 0; n < t; ++n) {
            CHECK(y1.at(0, n) == y2.at(0, n));
            CHECK(y1.at(1, n) == y2.at(1, n));
        }
    }
}

TEST_CASE("nearest upsampling repeats frames") {
    Tensor x({1, 2});
    x.at(0, 0) = 1.0f;
    x.at(0, 1) = 2.0f;
    Tensor y = nearest_upsample(x, 3);
    REQUIRE(y.cols() == 6);
    const float want[6] = {1, 1, 1, 2, 2, 2};
    for (int64_t t = 0; t < 6; ++t) CHECK(y.at(0, t) == want[t]);

    std::mt19937_64 rng(18);
    Tensor xr = rand_tensor(rng, {3, 5});
    CHECK(max_abs_dev(nearest_upsample(xr, 1), xr) == 0.0f);
    Tensor up = nearest_upsample(xr, 4);
    for (int64_t i = 0; i < up.rows(); ++i) {
        for (int64_t t = 0; t < up.cols(); ++t) {
            CHECK(up.at(i, t) == xr.at(i, t / 4));  // no new values, ever
        }
    }
    CHECK_THROWS_AS(nearest_upsample(xr, 0), ArgumentError);
}

TEST_CASE("kernels are deterministic across repeat runs") {
    std::mt19937_64 rng(19);
    const int64_t d = 16;
    AttnWeights w = rand_attn_weights(rng, d);
    Tensor x = rand_tensor(rng, {6, d});
    const AttentionMask mask = build_chunk_mask({2, 3, std::nullopt});
    Tensor a = masked_mhsa(x, mask, w, 4);
    Tensor b = masked_mhsa(x, mask, w, 4);
    CHECK(max_abs_dev(a, b) == 0.0f);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "svc/errors.hpp"
#include "svc/model_io.hpp"

using namespace svc;

namespace {

// Small everywhere except the framing-constrained fields, so every suite
// case runs in milliseconds.
ModelConfig tiny_config() {
    ModelConfig c;
    c.d_model = 16;
    c.heads = 2;
    c.enc_layers = 2;
    c.dec_blocks = 1;
    c.ffn_hidden = 24;
    c.dec_conv_hidden = 20;
    c.fbank_dim = 8;
    c.mel_dim = 6;
    c.ppg_classes = 12;
    c.num_speakers = 3;
    c.voc_channels = {8, 8, 4, 4};
    c.resblock_kernels = {3};
    c.resblock_dilations = {1};
    return c;
}

std::string temp_path(const std::string& stem) {
    return "model_io_test_" + stem + ".bin";
}

std::vector<char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(bool(out));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

uint64_t meta_len_of(const std::vector<char>& bytes) {
    REQUIRE(bytes.size() >= 16);
    uint64_t len = 0;
    std::memcpy(&len, bytes.data() + 8, sizeof(len));
    return len;
}

// Re-writes the container with the metadata JSON transformed in place; the
// payload bytes are carried over untouched. Used to craft corrupt files from
// a known-good one.
void rewrite_meta(const std::string& src, const std::string& dst,
                  const std::function<void(nlohmann::json&)>& edit) {
    std::vector<char> bytes = read_all(src);
    const uint64_t len = meta_len_of(bytes);
    nlohmann::json meta = nlohmann::json::parse(std::string(bytes.data() + 16, len));
    edit(meta);
    const std::string text = meta.dump();

    std::vector<char> out;
    out.insert(out.end(), bytes.begin(), bytes.begin() + 8);
    const uint64_t new_len = text.size();
    const char* lp = reinterpret_cast<const char*>(&new_len);
    out.insert(out.end(), lp, lp + sizeof(new_len));
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len), bytes.end());
    write_all(dst, out);
}

void require_same_config(const ModelConfig& a, const ModelConfig& b) {
    CHECK(a.d_model == b.d_model);
    CHECK(a.heads == b.heads);
    CHECK(a.enc_layers == b.enc_layers);
    CHECK(a.dec_blocks == b.dec_blocks);
    CHECK(a.ffn_hidden == b.ffn_hidden);
    CHECK(a.dec_conv_hidden == b.dec_conv_hidden);
    CHECK(a.fbank_dim == b.fbank_dim);
    CHECK(a.mel_dim == b.mel_dim);
    CHECK(a.ppg_classes == b.ppg_classes);
    CHECK(a.num_speakers == b.num_speakers);
    CHECK(a.ppg_softmax == b.ppg_softmax);
    CHECK(a.sample_rate == b.sample_rate);
    CHECK(a.hop_samples == b.hop_samples);
    CHECK(a.upsample_factors == b.upsample_factors);
    CHECK(a.voc_channels == b.voc_channels);
    CHECK(a.resblock_kernels == b.resblock_kernels);
    CHECK(a.resblock_dilations == b.resblock_dilations);
    CHECK(a.voc_pre_kernel == b.voc_pre_kernel);
    CHECK(a.voc_post_kernel == b.voc_post_kernel);
    CHECK(a.bands == b.bands);
    CHECK(a.pqmf_taps == b.pqmf_taps);
    CHECK(a.pqmf_cutoff == b.pqmf_cutoff);  // JSON carries doubles exactly
    CHECK(a.pqmf_beta == b.pqmf_beta);
    CHECK(a.default_chunk_ms == b.default_chunk_ms);
    CHECK(a.default_history == b.default_history);
}

}  // namespace

TEST_CASE("registry covers the model once, encoder entries read-only") {
    Model m = make_model(tiny_config());
    std::vector<TensorRef> refs = tensor_registry(m);

    std::set<std::string> names;
    for (const TensorRef& ref : refs) {
        CHECK(names.insert(ref.name).second);
        CHECK(ref.tensor != nullptr);
        CHECK(ref.tensor->numel() > 0);
        CHECK(ref.read_only == (ref.name.rfind("enc.", 0) == 0));
    }
    // every section of the network is represented
    CHECK(names.count("enc.sub1.w") == 1);
    CHECK(names.count("enc.l1.attn.wq") == 1);
    CHECK(names.count("enc.proj.b") == 1);
    CHECK(names.count("dec.spk") == 1);
    CHECK(names.count("dec.b0.conv2.w") == 1);
    CHECK(names.count("voc.s2.up.b") == 1);
    CHECK(names.count("voc.post.w") == 1);
}

TEST_CASE("random_init is seed-deterministic and seed-sensitive") {
    const ModelConfig c = tiny_config();
    Model a = random_init(c, 7);
    Model b = random_init(c, 7);
    Model d = random_init(c, 8);

    std::vector<TensorRef> ra = tensor_registry(a);
    std::vector<TensorRef> rb = tensor_registry(b);
    std::vector<TensorRef> rd = tensor_registry(d);
    REQUIRE(ra.size() == rb.size());
    REQUIRE(ra.size() == rd.size());

    bool any_differs = false;
    for (size_t i = 0; i < ra.size(); ++i) {
        REQUIRE(ra[i].name == rb[i].name);
        const Tensor& ta = *ra[i].tensor;
        const Tensor& tb = *rb[i].tensor;
        REQUIRE(ta.shape() == tb.shape());
        CHECK(std::memcmp(ta.data(), tb.data(), ta.numel() * sizeof(float)) == 0);
        if (std::memcmp(ta.data(), rd[i].tensor->data(), ta.numel() * sizeof(float)) != 0) {
            any_differs = true;
        }
    }
    CHECK(any_differs);
}

TEST_CASE("random_init weight scale tracks fan-in, norms start at identity") {
    Model m = random_init(tiny_config(), 3);
    for (const TensorRef& ref : tensor_registry(m)) {
        const Tensor& t = *ref.tensor;
        if (ref.fan_in == 0) {
            for (int64_t i = 0; i < t.numel(); ++i) CHECK(t.at(i) == 0.0f);
        } else if (ref.fan_in == -1) {
            for (int64_t i = 0; i < t.numel(); ++i) CHECK(t.at(i) == 1.0f);
        } else {
            const float bound = 1.0f / std::sqrt(static_cast<float>(ref.fan_in));
            float peak = 0.0f;
            for (int64_t i = 0; i < t.numel(); ++i) {
                CHECK(std::abs(t.at(i)) <= bound);
                peak = std::max(peak, std::abs(t.at(i)));
            }
            CHECK(peak > 0.0f);
        }
    }
}

TEST_CASE("save then load reproduces every tensor bitwise and every config field") {
    ModelConfig c = tiny_config();
    c.ppg_softmax = false;
    c.default_chunk_ms = 80;
    Model m = random_init(c, 41);
    const std::string path = temp_path("roundtrip");
    save(m, path);

    Model back = load(path);
    require_same_config(m.config, back.config);

    std::vector<TensorRef> want = tensor_registry(m);
    std::vector<TensorRef> got = tensor_registry(back);
    REQUIRE(want.size() == got.size());
    for (size_t i = 0; i < want.size(); ++i) {
        CHECK(want[i].name == got[i].name);
        REQUIRE(want[i].tensor->shape() == got[i].tensor->shape());
        CHECK(std::memcmp(want[i].tensor->data(), got[i].tensor->data(),
                          want[i].tensor->numel() * sizeof(float)) == 0);
    }
    std::remove(path.c_str());
}

TEST_CASE("directory offsets are contiguous and payload is f32 little-endian") {
    Model m = random_init(tiny_config(), 11);
    const std::string path = temp_path("layout");
    save(m, path);

    std::vector<char> bytes = read_all(path);
    CHECK(std::memcmp(bytes.data(), "SVCM", 4) == 0);
    uint32_t version = 0;
    std::memcpy(&version, bytes.data() + 4, sizeof(version));
    CHECK(version == 1);

    const uint64_t meta_len = meta_len_of(bytes);
    nlohmann::json meta = nlohmann::json::parse(std::string(bytes.data() + 16, meta_len));
    const size_t payload_base = 16 + meta_len;

    uint64_t expect_offset = 0;
    for (const auto& entry : meta.at("tensors")) {
        CHECK(entry.at("dtype").get<std::string>() == "f32");
        CHECK(entry.at("offset").get<uint64_t>() == expect_offset);
        uint64_t numel = 1;
        for (int64_t d : entry.at("shape").get<std::vector<int64_t>>()) {
            numel *= static_cast<uint64_t>(d);
        }
        expect_offset += numel * sizeof(float);
    }
    CHECK(payload_base + expect_offset == bytes.size());

    // layer norm gains are stored as literal 1.0f; check the raw encoding
    for (const auto& entry : meta.at("tensors")) {
        if (entry.at("name").get<std::string>() != "enc.ln_out.g") continue;
        const size_t at = payload_base + entry.at("offset").get<uint64_t>();
        const unsigned char one[4] = {0x00, 0x00, 0x80, 0x3F};
        CHECK(std::memcmp(bytes.data() + at, one, 4) == 0);
    }

    // read-only markers in the file mirror the schema
    for (const auto& entry : meta.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        CHECK(entry.at("read_only").get<bool>() == (name.rfind("enc.", 0) == 0));
    }
    std::remove(path.c_str());
}

TEST_CASE("load rejects truncation at every boundary") {
    Model m = random_init(tiny_config(), 5);
    const std::string path = temp_path("whole");
    save(m, path);
    std::vector<char> bytes = read_all(path);
    const uint64_t meta_len = meta_len_of(bytes);

    const std::string cut = temp_path("cut");
    const size_t boundaries[] = {
        2,                                  // inside the magic
        6,                                  // inside the version
        12,                                 // inside the metadata length
        16 + static_cast<size_t>(meta_len) / 2,  // inside the metadata
        bytes.size() - 7,                   // inside the last tensor
    };
    for (size_t n : boundaries) {
        CAPTURE(n);
        write_all(cut, std::vector<char>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n)));
        CHECK_THROWS_AS(load(cut), TruncatedFileError);
    }
    std::remove(path.c_str());
    std::remove(cut.c_str());
}

TEST_CASE("load distinguishes bad magic and bad version") {
    Model m = random_init(tiny_config(), 5);
    const std::string path = temp_path("hdr");
    save(m, path);
    std::vector<char> bytes = read_all(path);

    std::vector<char> wrong_magic = bytes;
    std::memcpy(wrong_magic.data(), "RIFF", 4);
    const std::string p1 = temp_path("magic");
    write_all(p1, wrong_magic);
    CHECK_THROWS_AS(load(p1), BadMagicError);

    std::vector<char> wrong_version = bytes;
    const uint32_t v9 = 9;
    std::memcpy(wrong_version.data() + 4, &v9, sizeof(v9));
    const std::string p2 = temp_path("version");
    write_all(p2, wrong_version);
    CHECK_THROWS_AS(load(p2), BadVersionError);
    CHECK_THROWS_WITH_AS(load(p2), doctest::Contains("9"), BadVersionError);

    std::remove(path.c_str());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("load rejects directory corruption with distinct errors") {
    Model m = random_init(tiny_config(), 5);
    const std::string path = temp_path("good");
    save(m, path);
    const std::string bad = temp_path("bad");

    SUBCASE("unknown tensor name, named in the message") {
        rewrite_meta(path, bad, [](nlohmann::json& meta) {
            meta["tensors"][0]["name"] = "enc.stray.w";
        });
        CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("enc.stray.w"), UnknownTensorError);
    }
    SUBCASE("missing tensor, named in the message") {
        rewrite_meta(path, bad, [](nlohmann::json& meta) {
            nlohmann::json keep = nlohmann::json::array();
            for (const auto& e : meta["tensors"]) {
                if (e.at("name") != "dec.spk") keep.push_back(e);
            }
            meta["tensors"] = keep;
        });
        CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("dec.spk"), MissingTensorError);
    }
    SUBCASE("duplicated tensor entry") {
        rewrite_meta(path, bad, [](nlohmann::json& meta) {
            meta["tensors"].push_back(meta["tensors"][0]);
        });
        CHECK_THROWS_AS(load(bad), LoadError);
        CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("twice"), LoadError);
    }
    SUBCASE("shape mismatch against the schema") {
        rewrite_meta(path, bad, [](nlohmann::json& meta) {
            meta["tensors"][0]["shape"] = {1, 2, 3};
        });
        CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("shape"), LoadError);
    }
    SUBCASE("unsupported dtype") {
        rewrite_meta(path, bad, [](nlohmann::json& meta) {
            meta["tensors"][0]["dtype"] = "f16";
        });
        CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("dtype"), LoadError);
    }
    SUBCASE("metadata is not JSON") {
        std::vector<char> bytes = read_all(path);
        const uint64_t len = meta_len_of(bytes);
        for (uint64_t i = 0; i < len; ++i) bytes[16 + i] = '@';
        write_all(bad, bytes);
        CHECK_THROWS_AS(load(bad), LoadError);
    }
    std::remove(path.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("loaded subclasses all narrow from LoadError") {
    // the taxonomy stays catchable at any granularity
    CHECK_THROWS_AS(throw BadMagicError("x"), LoadError);
    CHECK_THROWS_AS(throw BadVersionError("x"), LoadError);
    CHECK_THROWS_AS(throw TruncatedFileError("x"), LoadError);
    CHECK_THROWS_AS(throw MissingTensorError("x"), LoadError);
    CHECK_THROWS_AS(throw UnknownTensorError("x"), LoadError);
    CHECK_THROWS_AS(throw LoadError("x"), Error);
}

TEST_CASE("config JSON survives a round trip") {
    ModelConfig c = tiny_config();
    c.ppg_softmax = false;
    c.pqmf_cutoff = 0.1375;
    c.default_history = 4;
    require_same_config(c, config_from_json(config_to_json(c)));
}

TEST_CASE("model config validation catches inconsistent framing") {
    ModelConfig c = tiny_config();
    CHECK_NOTHROW(validate(c));

    ModelConfig bad_hop = c;
    bad_hop.upsample_factors = {5, 4, 4};  // 80 * bands != 160
    CHECK_THROWS_AS(validate(bad_hop), ArgumentError);

    ModelConfig bad_heads = c;
    bad_heads.heads = 3;
    CHECK_THROWS_AS(validate(bad_heads), ArgumentError);

    ModelConfig bad_channels = c;
    bad_channels.voc_channels = {8, 8, 4};
    CHECK_THROWS_AS(validate(bad_channels), ArgumentError);

    ModelConfig bad_taps = c;
    bad_taps.pqmf_taps = 2;
    CHECK_THROWS_AS(validate(bad_taps), ArgumentError);
}

TEST_CASE("runtime config validation enforces the 40 ms grid") {
    const ModelConfig mc = tiny_config();
    RuntimeConfig rc;
    CHECK_NOTHROW(validate(rc, mc));

    RuntimeConfig off_grid = rc;
    off_grid.chunk_ms = 50;
    CHECK_THROWS_WITH_AS(validate(off_grid, mc), doctest::Contains("multiple of 40 ms"),
                         ArgumentError);

    RuntimeConfig too_long = rc;
    too_long.chunk_ms = 240;
    CHECK_THROWS_AS(validate(too_long, mc), ArgumentError);

    RuntimeConfig bad_speaker = rc;
    bad_speaker.speaker_id = mc.num_speakers;
    CHECK_THROWS_AS(validate(bad_speaker, mc), ArgumentError);

    RuntimeConfig negative_history = rc;
    negative_history.history_chunks = -1;
    CHECK_THROWS_AS(validate(negative_history, mc), ArgumentError);

    RuntimeConfig even_fade = rc;
    even_fade.crossfade_n = 320;
    CHECK_THROWS_AS(validate(even_fade, mc), ArgumentError);

    RuntimeConfig no_fade = rc;
    no_fade.crossfade_n = 0;
    CHECK_NOTHROW(validate(no_fade, mc));
}

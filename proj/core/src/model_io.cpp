#include "svc/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "svc/errors.hpp"

namespace svc {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'C', 'M'};
constexpr uint32_t kVersion = 1;

void add_ln(std::vector<TensorRef>& out, const std::string& prefix, LayerNormParams& p) {
    out.push_back({prefix + ".g", &p.g, false, -1});
    out.push_back({prefix + ".b", &p.b, false, 0});
}

void add_linear(std::vector<TensorRef>& out, const std::string& prefix, LinearParams& p) {
    const int64_t fan_in = p.w.dim(0);
    out.push_back({prefix + ".w", &p.w, false, fan_in});
    out.push_back({prefix + ".b", &p.b, false, fan_in});
}

void add_conv(std::vector<TensorRef>& out, const std::string& prefix, ConvParams& p) {
    const int64_t fan_in = p.w.dim(1) * p.w.dim(2);
    out.push_back({prefix + ".w", &p.w, false, fan_in});
    out.push_back({prefix + ".b", &p.b, false, fan_in});
}

void add_attn(std::vector<TensorRef>& out, const std::string& prefix, AttnWeights& w) {
    const int64_t d = w.wq.dim(0);
    out.push_back({prefix + ".wq", &w.wq, false, d});
    out.push_back({prefix + ".wk", &w.wk, false, d});
    out.push_back({prefix + ".wv", &w.wv, false, d});
    out.push_back({prefix + ".wo", &w.wo, false, d});
    out.push_back({prefix + ".bq", &w.bq, false, d});
    out.push_back({prefix + ".bk", &w.bk, false, d});
    out.push_back({prefix + ".bv", &w.bv, false, d});
    out.push_back({prefix + ".bo", &w.bo, false, d});
}

}  // namespace

std::vector<TensorRef> tensor_registry(Model& m) {
    std::vector<TensorRef> out;
    size_t enc_begin = out.size();
    add_conv(out, "enc.sub1", m.encoder.sub1);
    add_conv(out, "enc.sub2", m.encoder.sub2);
    for (size_t i = 0; i < m.encoder.layers.size(); ++i) {
        EncoderLayer& layer = m.encoder.layers[i];
        const std::string p = "enc.l" + std::to_string(i);
        add_ln(out, p + ".ln1", layer.ln1);
        add_attn(out, p + ".attn", layer.attn);
        add_ln(out, p + ".ln2", layer.ln2);
        add_linear(out, p + ".ffn1", layer.ffn1);
        add_linear(out, p + ".ffn2", layer.ffn2);
    }
    add_ln(out, "enc.ln_out", m.encoder.ln_out);
    add_linear(out, "enc.proj", m.encoder.proj);
    for (size_t i = enc_begin; i < out.size(); ++i) out[i].read_only = true;

    add_linear(out, "dec.in", m.decoder.input);
    out.push_back({"dec.spk", &m.decoder.spk_embed, false, m.decoder.spk_embed.dim(1)});
    for (size_t i = 0; i < m.decoder.blocks.size(); ++i) {
        DecoderBlock& block = m.decoder.blocks[i];
        const std::string p = "dec.b" + std::to_string(i);
        add_ln(out, p + ".ln1", block.ln1);
        add_attn(out, p + ".attn", block.attn);
        add_ln(out, p + ".ln2", block.ln2);
        add_conv(out, p + ".conv1", block.conv1);
        add_conv(out, p + ".conv2", block.conv2);
    }
    add_ln(out, "dec.ln_out", m.decoder.ln_out);
    add_linear(out, "dec.out", m.decoder.out);

    add_conv(out, "voc.pre", m.vocoder.pre);
    for (size_t s = 0; s < m.vocoder.stages.size(); ++s) {
        VocoderStage& stage = m.vocoder.stages[s];
        const std::string p = "voc.s" + std::to_string(s);
        add_conv(out, p + ".up", stage.up);
        for (size_t r = 0; r < stage.res.size(); ++r) {
            add_conv(out, p + ".r" + std::to_string(r), stage.res[r]);
        }
    }
    add_conv(out, "voc.post", m.vocoder.post);
    return out;
}

Model random_init(const ModelConfig& config, uint64_t seed) {
    Model m = make_model(config);
    std::mt19937_64 rng(seed);
    for (const TensorRef& ref : tensor_registry(m)) {
        if (ref.fan_in == 0) {
            ref.tensor->fill(0.0f);
        } else if (ref.fan_in == -1) {
            ref.tensor->fill(1.0f);
        } else {
            const float s = 1.0f / std::sqrt(static_cast<float>(ref.fan_in));
            std::uniform_real_distribution<float> dist(-s, s);
            for (int64_t i = 0; i < ref.tensor->numel(); ++i) ref.tensor->at(i) = dist(rng);
        }
    }
    return m;
}

void save(const Model& model, const std::string& path) {
    validate(model.config);
    // registry wants a mutable model; serialization never writes through it
    std::vector<TensorRef> refs = tensor_registry(const_cast<Model&>(model));

    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(config_to_json(model.config));
    nlohmann::json dir = nlohmann::json::array();
    uint64_t offset = 0;
    for (const TensorRef& ref : refs) {
        nlohmann::json entry;
        entry["name"] = ref.name;
        entry["dtype"] = "f32";
        entry["shape"] = ref.tensor->shape();
        entry["offset"] = offset;
        entry["read_only"] = ref.read_only;
        dir.push_back(entry);
        offset += static_cast<uint64_t>(ref.tensor->numel()) * sizeof(float);
    }
    meta["tensors"] = dir;
    const std::string meta_text = meta.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    const uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t meta_len = meta_text.size();
    out.write(reinterpret_cast<const char*>(&meta_len), sizeof(meta_len));
    out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    for (const TensorRef& ref : refs) {
        out.write(reinterpret_cast<const char*>(ref.tensor->data()),
                  static_cast<std::streamsize>(ref.tensor->numel() * sizeof(float)));
    }
    if (!out) throw Error("short write to " + path);
}

Model load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4) throw TruncatedFileError(path + ": shorter than the magic");
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw BadMagicError(path + ": not a model container");
    }
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (in.gcount() != sizeof(version)) throw TruncatedFileError(path + ": missing version");
    if (version != kVersion) {
        throw BadVersionError(path + ": format version " + std::to_string(version) +
                              ", expected " + std::to_string(kVersion));
    }
    uint64_t meta_len = 0;
    in.read(reinterpret_cast<char*>(&meta_len), sizeof(meta_len));
    if (in.gcount() != sizeof(meta_len)) throw TruncatedFileError(path + ": missing metadata length");
    std::string meta_text(meta_len, '\0');
    in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
    if (static_cast<uint64_t>(in.gcount()) != meta_len) {
        throw TruncatedFileError(path + ": metadata cut short");
    }

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_text);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path + ": metadata JSON: " + e.what());
    }

    Model m;
    try {
        m = make_model(config_from_json(meta.at("config").dump()));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path + ": metadata JSON: " + e.what());
    }
    std::vector<TensorRef> refs = tensor_registry(m);

    const std::streamoff payload_base = in.tellg();
    std::set<std::string> seen;
    if (!meta.contains("tensors") || !meta["tensors"].is_array()) {
        throw LoadError(path + ": metadata has no tensor directory");
    }
    for (const auto& entry : meta["tensors"]) {
        std::string name;
        std::vector<int64_t> shape;
        uint64_t offset = 0;
        try {
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<int64_t>>();
            offset = entry.at("offset").get<uint64_t>();
            if (entry.at("dtype").get<std::string>() != "f32") {
                throw LoadError(path + ": tensor " + name + " has unsupported dtype");
            }
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path + ": tensor directory entry: " + e.what());
        }
        TensorRef* target = nullptr;
        for (TensorRef& ref : refs) {
            if (ref.name == name) {
                target = &ref;
                break;
            }
        }
        if (!target) {
            throw UnknownTensorError(path + ": tensor \"" + name + "\" is not in the schema");
        }
        if (!seen.insert(name).second) {
            throw LoadError(path + ": tensor \"" + name + "\" appears twice");
        }
        if (target->tensor->shape() != shape) {
            throw LoadError(path + ": tensor \"" + name + "\" shape mismatch");
        }
        in.seekg(payload_base + static_cast<std::streamoff>(offset));
        const std::streamsize bytes = target->tensor->numel() * sizeof(float);
        in.read(reinterpret_cast<char*>(target->tensor->data()), bytes);
        if (in.gcount() != bytes) {
            throw TruncatedFileError(path + ": tensor \"" + name + "\" payload cut short");
        }
    }
    for (const TensorRef& ref : refs) {
        if (!seen.count(ref.name)) {
            throw MissingTensorError(path + ": tensor \"" + ref.name + "\" missing");
        }
    }
    return m;
}

}  // namespace svc

// Command-line front end: model creation, feature extraction, streaming
// conversion, vocoder-only synthesis, mask inspection, filter bank design,
// and the latency benchmark.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "svc/audio.hpp"
#include "svc/errors.hpp"
#include "svc/features.hpp"
#include "svc/masking.hpp"
#include "svc/metrics.hpp"
#include "svc/model_io.hpp"
#include "svc/pipeline.hpp"
#include "svc/pqmf.hpp"
#include "svc/vocoder.hpp"

namespace {

svc::ModelConfig preset_config(const std::string& name) {
    svc::ModelConfig c;  // "default": the full-size architecture
    if (name == "small") {
        c.d_model = 64;
        c.heads = 4;
        c.enc_layers = 4;
        c.dec_blocks = 2;
        c.ffn_hidden = 128;
        c.dec_conv_hidden = 128;
        c.ppg_classes = 64;
        c.voc_channels = {32, 16, 8, 8};
    } else if (name == "tiny") {
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
    }
    return c;
}

svc::VocoderMode parse_mode(const std::string& name) {
    if (name == "mbs_streaming") return svc::VocoderMode::mbs_streaming;
    return svc::VocoderMode::mb_offline_crossfade;
}

struct ConvertArgs {
    std::string model, in, out;
    int64_t speaker = 0;
    int64_t chunk_ms = -1;  // -1: model default
    int64_t history = -1;
    std::string mode = "mbs_streaming";
    int64_t crossfade_n = 319;
    std::string device_label = "cpu";
};

int run_convert(const ConvertArgs& args) {
    const svc::Model model = svc::load(args.model);
    const std::vector<float> audio = svc::load_audio_16k(args.in);

    svc::RuntimeConfig rc;
    rc.chunk_ms =
        args.chunk_ms >= 0 ? args.chunk_ms : model.config.default_chunk_ms;
    rc.history_chunks =
        args.history >= 0 ? args.history : model.config.default_history;
    rc.speaker_id = args.speaker;
    rc.mode = parse_mode(args.mode);
    rc.crossfade_n = args.crossfade_n;

    svc::StreamingConverter conv(model, rc);
    const size_t block = static_cast<size_t>(
        rc.chunk_ms * model.config.sample_rate / 1000);
    std::vector<float> out;
    size_t at = 0;
    while (at < audio.size()) {
        const size_t n = std::min(block, audio.size() - at);
        std::vector<float> piece(audio.begin() + static_cast<int64_t>(at),
                                 audio.begin() + static_cast<int64_t>(at + n));
        std::vector<float> part = conv.push(piece);
        out.insert(out.end(), part.begin(), part.end());
        at += n;
    }
    std::vector<float> tail = conv.finish();
    out.insert(out.end(), tail.begin(), tail.end());
    svc::write_wav(args.out, out);

    const svc::StageTimes st = conv.stage_times();
    const double chunks = static_cast<double>(std::max<int64_t>(1, st.chunks));
    const svc::LatencyReport report = svc::latency_report(
        rc.chunk_ms, st.encoder_ms / chunks, st.decoder_ms / chunks,
        st.vocoder_ms / chunks);
    const double compute_s =
        (st.feature_ms + st.encoder_ms + st.decoder_ms + st.vocoder_ms) / 1e3;
    const double audio_s = static_cast<double>(audio.size()) /
                           static_cast<double>(model.config.sample_rate);
    const double r = audio_s > 0.0 ? svc::rtf(compute_s, audio_s) : 0.0;
    std::cout << svc::latency_to_json(report, args.model, args.device_label, r)
              << "\n";
    return 0;
}

struct VocodeArgs {
    std::string model, mel, out;
    std::string mode = "mbs_streaming";
    int64_t crossfade_n = 319;
    int64_t chunk_frames = -1;  // -1: model default chunk
};

int run_vocode(const VocodeArgs& args) {
    const svc::Model model = svc::load(args.model);
    const svc::Tensor mels = svc::read_mel(args.mel);
    if (mels.rows() == 0) {
        throw svc::InsufficientInputError(args.mel + ": mel file has no frames");
    }
    if (mels.cols() != model.config.mel_dim) {
        throw svc::ShapeError(args.mel + ": " + std::to_string(mels.cols()) +
                              "-dim frames, model expects " +
                              std::to_string(model.config.mel_dim));
    }
    const int64_t chunk =
        args.chunk_frames > 0
            ? args.chunk_frames
            : model.config.default_chunk_ms * model.config.sample_rate / 1000 /
                  model.config.hop_samples;

    std::vector<float> out;
    if (parse_mode(args.mode) == svc::VocoderMode::mbs_streaming) {
        // Chunk size is a feeding granularity only; output is identical for
        // any split.
        svc::VocoderSession session(model, true);
        for (int64_t at = 0; at < mels.rows(); at += chunk) {
            const int64_t len = std::min(chunk, mels.rows() - at);
            svc::Tensor piece({len, mels.cols()});
            for (int64_t i = 0; i < len; ++i) {
                for (int64_t j = 0; j < mels.cols(); ++j) {
                    piece.at(i, j) = mels.at(at + i, j);
                }
            }
            svc::Tensor audio = session.generate(piece);
            out.insert(out.end(), audio.data(), audio.data() + audio.numel());
        }
    } else {
        svc::ChunkedAudio audio = svc::generate_chunked(
            model, mels, chunk, svc::CrossfadeSpec{args.crossfade_n});
        out.assign(audio.samples.data(),
                   audio.samples.data() + audio.samples.numel());
    }
    svc::write_wav(args.out, out);
    return 0;
}

struct BenchArgs {
    std::string model;
    std::vector<int64_t> chunk_ms = {40, 80, 120, 160, 200};
    double seconds = 2.0;
    std::string device_label = "cpu";
    uint64_t seed = 1234;
};

int run_bench(const BenchArgs& args) {
    const svc::Model model = svc::load(args.model);
    nlohmann::json doc;
    doc["model"] = args.model;
    doc["device_label"] = args.device_label;
    doc["reports"] = nlohmann::json::array();
    for (int64_t chunk : args.chunk_ms) {
        const svc::BenchResult r =
            svc::measure_latency(model, chunk, args.seconds, args.seed);
        doc["reports"].push_back(nlohmann::json::parse(svc::latency_to_json(
            r.report, args.model, args.device_label, r.rtf)));
    }
    doc["vocoder_rtf"] =
        svc::measure_vocoder_rtf(model, args.seconds, args.seed);
    std::cout << doc.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming voice conversion runtime"};
    app.require_subcommand(1);

    // init-model
    std::string im_out, im_preset = "default";
    uint64_t im_seed = 1234;
    CLI::App* im = app.add_subcommand(
        "init-model", "Write a randomly initialized model file");
    im->add_option("--out", im_out, "Output model path")->required();
    im->add_option("--seed", im_seed, "Initialization seed");
    im->add_option("--preset", im_preset, "Architecture preset")
        ->check(CLI::IsMember({"default", "small", "tiny"}));

    // features
    std::string ft_in, ft_out;
    int64_t ft_bins = 80;
    CLI::App* ft = app.add_subcommand(
        "features", "Extract log-mel filterbank features from a wav");
    ft->add_option("--in", ft_in, "Input wav (16 or 48 kHz, mono PCM16)")
        ->required();
    ft->add_option("--out", ft_out, "Output mel file")->required();
    ft->add_option("--bins", ft_bins, "Filterbank size");

    // convert
    ConvertArgs cv;
    CLI::App* conv = app.add_subcommand(
        "convert", "Stream a wav through the full conversion pipeline "
                   "(single session, single-threaded compute)");
    conv->add_option("--model", cv.model, "Model file")
        ->envname("SVC_MODEL")
        ->required();
    conv->add_option("--in", cv.in, "Input wav")->required();
    conv->add_option("--out", cv.out, "Output wav")->required();
    conv->add_option("--speaker", cv.speaker, "Target speaker id");
    conv->add_option("--chunk-ms", cv.chunk_ms,
                     "Chunk size in ms (multiple of 40; model default if unset)");
    conv->add_option("--history", cv.history, "History chunks kept in cache");
    conv->add_option("--mode", cv.mode, "Vocoder mode")
        ->check(CLI::IsMember({"mbs_streaming", "mb_offline_crossfade"}));
    conv->add_option("--crossfade-n", cv.crossfade_n,
                     "Crossfade window length in samples (odd, 0 disables)");
    conv->add_option("--device-label", cv.device_label,
                     "Free-form label for the latency report");

    // vocode
    VocodeArgs vo;
    CLI::App* voc = app.add_subcommand(
        "vocode", "Synthesize a waveform from a mel file");
    voc->add_option("--model", vo.model, "Model file")
        ->envname("SVC_MODEL")
        ->required();
    voc->add_option("--mel", vo.mel, "Input mel file")->required();
    voc->add_option("--out", vo.out, "Output wav")->required();
    voc->add_option("--mode", vo.mode, "Vocoder mode")
        ->check(CLI::IsMember({"mbs_streaming", "mb_offline_crossfade"}));
    voc->add_option("--crossfade-n", vo.crossfade_n,
                    "Crossfade window length in samples (odd, 0 disables)");
    voc->add_option("--chunk-frames", vo.chunk_frames,
                    "Mel frames per generation chunk");

    // mask
    int64_t mk_chunk = 0, mk_num = 0, mk_history = -1;
    CLI::App* mk = app.add_subcommand(
        "mask", "Print a chunk attention mask as 0/1 rows");
    mk->add_option("--chunk", mk_chunk, "Frames per chunk")->required();
    mk->add_option("--num-chunks", mk_num, "Number of chunks")->required();
    mk->add_option("--history", mk_history,
                   "Visible history chunks (-1 = unlimited)");

    // design-pqmf
    int64_t pq_bands = 4, pq_taps = 62;
    double pq_cutoff = 0.142, pq_beta = 9.0;
    std::string pq_out;
    CLI::App* pq = app.add_subcommand(
        "design-pqmf", "Design a sub-band filter bank and emit it as JSON");
    pq->add_option("--bands", pq_bands, "Number of sub-bands");
    pq->add_option("--taps", pq_taps, "Prototype filter length");
    pq->add_option("--cutoff", pq_cutoff, "Prototype cutoff in Nyquist units");
    pq->add_option("--beta", pq_beta, "Kaiser window beta");
    pq->add_option("--out", pq_out, "Output path (stdout if unset)");

    // bench
    BenchArgs bn;
    CLI::App* bench = app.add_subcommand(
        "bench", "Measure per-stage latency on synthetic audio "
                 "(sequential sessions, single-threaded compute)");
    bench->add_option("--model", bn.model, "Model file")
        ->envname("SVC_MODEL")
        ->required();
    bench->add_option("--chunk-ms", bn.chunk_ms, "Chunk sizes to measure");
    bench->add_option("--seconds", bn.seconds, "Synthetic audio duration");
    bench->add_option("--device-label", bn.device_label,
                      "Free-form label for the reports");
    bench->add_option("--seed", bn.seed, "Noise seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (im->parsed()) {
            const svc::Model model =
                svc::random_init(preset_config(im_preset), im_seed);
            svc::save(model, im_out);
            return 0;
        }
        if (ft->parsed()) {
            const std::vector<float> audio = svc::load_audio_16k(ft_in);
            svc::write_mel(ft_out, svc::fbank_offline(audio, ft_bins));
            return 0;
        }
        if (conv->parsed()) {
            return run_convert(cv);
        }
        if (voc->parsed()) {
            return run_vocode(vo);
        }
        if (mk->parsed()) {
            svc::ChunkSpec spec;
            spec.chunk_frames = mk_chunk;
            spec.num_chunks = mk_num;
            if (mk_history >= 0) spec.history_chunks = mk_history;
            const svc::AttentionMask mask = svc::build_chunk_mask(spec);
            for (int64_t q = 0; q < mask.size(); ++q) {
                std::string row;
                for (int64_t k = 0; k < mask.size(); ++k) {
                    row += mask.at(q, k) ? '1' : '0';
                }
                std::cout << row << "\n";
            }
            return 0;
        }
        if (pq->parsed()) {
            const svc::PqmfBank bank =
                svc::design_bank(pq_bands, pq_taps, pq_cutoff, pq_beta);
            const std::string text = svc::bank_to_json(bank);
            if (pq_out.empty()) {
                std::cout << text << "\n";
            } else {
                std::ofstream out(pq_out, std::ios::trunc);
                if (!out) {
                    throw svc::Error("cannot write " + pq_out);
                }
                out << text << "\n";
            }
            return 0;
        }
        if (bench->parsed()) {
            return run_bench(bn);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

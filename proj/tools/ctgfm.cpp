// Command-line front end for the CTG pipeline: synthesis, preprocessing,
// splits, pretraining, fine-tuning, alert fitting, inference, evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error.
// All randomness derives from one --seed per command via named sub-streams.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctgfm/data.hpp"
#include "ctgfm/inference.hpp"
#include "ctgfm/metrics.hpp"
#include "ctgfm/model.hpp"
#include "ctgfm/patch.hpp"
#include "ctgfm/preprocess.hpp"
#include "ctgfm/rng.hpp"
#include "ctgfm/synth.hpp"
#include "ctgfm/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctgfm;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

// Fills `target` from the config document when the flag was not given on the
// command line, implementing flags > config file > defaults.
template <typename T>
void cfg_fallback(const CLI::App& cmd, const json& cfg, const std::string& flag,
                  const std::string& key, T& target) {
    if (cmd.count(flag) == 0 && cfg.contains(key)) target = cfg.at(key).get<T>();
}

struct ModelFlags {
    model::ModelConfig mc;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--patch-len", mc.patch_len, "Samples per patch");
        cmd->add_option("--stride", mc.stride, "Patch stride in samples");
        cmd->add_option("--context-len", mc.context_len, "Window length in samples");
        cmd->add_option("--d-model", mc.d_model, "Token width");
        cmd->add_option("--n-heads", mc.n_heads, "Attention heads");
        cmd->add_option("--n-layers", mc.n_layers, "Encoder layers");
        cmd->add_option("--ff-dim", mc.ff_dim, "Feed-forward width");
        cmd->add_option("--dropout", mc.dropout, "Dropout rate");
    }

    void apply_config(const CLI::App& cmd, const json& cfg) {
        cfg_fallback(cmd, cfg, "--patch-len", "patch_len", mc.patch_len);
        cfg_fallback(cmd, cfg, "--stride", "stride", mc.stride);
        cfg_fallback(cmd, cfg, "--context-len", "context_len", mc.context_len);
        cfg_fallback(cmd, cfg, "--d-model", "d_model", mc.d_model);
        cfg_fallback(cmd, cfg, "--n-heads", "n_heads", mc.n_heads);
        cfg_fallback(cmd, cfg, "--n-layers", "n_layers", mc.n_layers);
        cfg_fallback(cmd, cfg, "--ff-dim", "ff_dim", mc.ff_dim);
        cfg_fallback(cmd, cfg, "--dropout", "dropout", mc.dropout);
    }
};

json model_config_json(const model::ModelConfig& mc) {
    json j;
    j["patch_len"] = mc.patch_len;
    j["stride"] = mc.stride;
    j["context_len"] = mc.context_len;
    j["d_model"] = mc.d_model;
    j["n_heads"] = mc.n_heads;
    j["n_layers"] = mc.n_layers;
    j["ff_dim"] = mc.ff_dim;
    j["dropout"] = mc.dropout;
    j["head_type"] = model::head_type_name(mc.head_type);
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::vector<std::string> csv_files_in(const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            out.push_back(entry.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw std::runtime_error("no .csv recordings in " + dir);
    return out;
}

std::vector<std::string> split_ids(const data::SplitAssignment& split, data::Split which) {
    std::vector<std::string> ids;
    for (const auto& [id, s] : split.assignment) {
        if (s == which) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

preprocess::CleanRecording load_clean_by_id(const std::string& dir, const std::string& id) {
    const fs::path p = fs::path(dir) / (id + ".csv");
    if (!fs::exists(p)) {
        throw std::runtime_error("no cleaned recording for id " + id + " in " + dir);
    }
    return preprocess::load_clean_recording(p.string());
}

// Accepts either a raw recording (preprocessed on the fly) or an already
// cleaned file, keyed on the CSV header.
preprocess::CleanRecording load_any_recording(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    std::getline(in, header);
    in.close();
    if (header.rfind("t_sec,fhr_bpm,uc_mmhg,fhr_norm", 0) == 0) {
        return preprocess::load_clean_recording(path);
    }
    return preprocess::preprocess_pipeline(data::load_recording(path));
}

std::map<std::string, bool> label_map(const std::vector<data::ClinicalMetadata>& metas) {
    std::map<std::string, bool> out;
    for (const auto& m : metas) out[m.id] = data::acidemia_label(m).positive;
    return out;
}

std::array<double, 4> largest_segment_features(
    const std::vector<inference::AlertSegment>& segments) {
    if (segments.empty()) return {0.0, 0.0, 0.0, 0.0};
    const inference::AlertSegment* best = &segments.front();
    for (const auto& seg : segments) {
        if (seg.length > best->length ||
            (seg.length == best->length &&
             (seg.weighted_integral > best->weighted_integral ||
              (seg.weighted_integral == best->weighted_integral && seg.start < best->start)))) {
            best = &seg;
        }
    }
    return inference::segment_features(*best);
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::size_t n = 10;
    std::string out_dir;
    double healthy_fraction = 0.8;
    synth::SynthConfig tmpl;
    std::string config_path;
    std::uint64_t seed = 0;
};

int run_synth(const CLI::App& cmd, SynthArgs& a) {
    if (!a.config_path.empty()) {
        const json cfg = load_json_file(a.config_path);
        cfg_fallback(cmd, cfg, "--n", "n", a.n);
        cfg_fallback(cmd, cfg, "--healthy-fraction", "healthy_fraction", a.healthy_fraction);
        cfg_fallback(cmd, cfg, "--duration-s", "duration_s", a.tmpl.duration_s);
        cfg_fallback(cmd, cfg, "--baseline", "baseline_bpm", a.tmpl.baseline_bpm);
        cfg_fallback(cmd, cfg, "--variability", "variability_bpm", a.tmpl.variability_bpm);
        cfg_fallback(cmd, cfg, "--period", "contraction_period_s", a.tmpl.contraction_period_s);
        cfg_fallback(cmd, cfg, "--amp", "contraction_amp_mmhg", a.tmpl.contraction_amp_mmhg);
        cfg_fallback(cmd, cfg, "--seed", "seed", a.seed);
    }
    fs::create_directories(a.out_dir);

    const auto corpus = synth::generate_raw_corpus(a.n, a.healthy_fraction, a.tmpl, a.seed);
    std::vector<data::ClinicalMetadata> metas;
    Rng meta_rng(derive_seed(a.seed, "synth-metadata"));
    for (const auto& rec : corpus) {
        const fs::path p = fs::path(a.out_dir) / (rec.result.recording.id + ".csv");
        data::save_recording(rec.result.recording, p.string());
        metas.push_back(synth::synth_metadata(rec.result.recording.id, rec.positive, meta_rng));
    }
    data::save_metadata(metas, (fs::path(a.out_dir) / "metadata.json").string());
    std::cerr << "wrote " << corpus.size() << " recordings to " << a.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
    std::string in_file, out_file, in_dir, out_dir;
};

int run_preprocess(PreprocessArgs& a) {
    const bool file_mode = !a.in_file.empty();
    const bool dir_mode = !a.in_dir.empty();
    if (file_mode == dir_mode) {
        std::cerr << "preprocess: use either --in/--out or --in-dir/--out-dir\n";
        return 1;
    }
    if (file_mode) {
        if (a.out_file.empty()) {
            std::cerr << "preprocess: --in requires --out\n";
            return 1;
        }
        preprocess::save_clean_recording(
            preprocess::preprocess_pipeline(data::load_recording(a.in_file)), a.out_file);
        return 0;
    }
    if (a.out_dir.empty()) {
        std::cerr << "preprocess: --in-dir requires --out-dir\n";
        return 1;
    }
    fs::create_directories(a.out_dir);
    std::size_t count = 0;
    for (const auto& path : csv_files_in(a.in_dir)) {
        const auto rec = preprocess::preprocess_pipeline(data::load_recording(path));
        const fs::path out = fs::path(a.out_dir) / fs::path(path).filename();
        preprocess::save_clean_recording(rec, out.string());
        ++count;
    }
    std::cerr << "preprocessed " << count << " recordings into " << a.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
    std::string metadata, out;
    std::uint64_t seed = 0;
    // -1 = unset; resolved to an automatic 80/10/10 stratified layout
    long long train_n = -1, train_pos = -1, val_n = -1, val_pos = -1, test_n = -1,
              test_pos = -1;
};

data::SplitSizes auto_sizes(const std::vector<data::Label>& labels) {
    const auto n = labels.size();
    std::size_t pos = 0;
    for (const auto& l : labels) pos += l.positive ? 1 : 0;

    data::SplitSizes s;
    s.train_n = static_cast<std::size_t>(std::llround(0.8 * double(n)));
    s.validation_n = static_cast<std::size_t>(std::llround(0.1 * double(n)));
    s.test_n = n - s.train_n - s.validation_n;
    s.train_pos = static_cast<std::size_t>(std::llround(0.8 * double(pos)));
    s.validation_pos = static_cast<std::size_t>(std::llround(0.1 * double(pos)));
    s.test_pos = pos - s.train_pos - s.validation_pos;
    // keep quotas feasible for tiny corpora
    s.train_pos = std::min(s.train_pos, s.train_n);
    s.validation_pos = std::min(s.validation_pos, s.validation_n);
    s.test_pos = std::min(pos - s.train_pos - s.validation_pos, s.test_n);
    return s;
}

int run_split(SplitArgs& a) {
    const auto metas = data::load_metadata(a.metadata);
    const auto labels = data::acidemia_labels(metas);

    const bool any_set = a.train_n >= 0 || a.train_pos >= 0 || a.val_n >= 0 ||
                         a.val_pos >= 0 || a.test_n >= 0 || a.test_pos >= 0;
    const bool all_set = a.train_n >= 0 && a.train_pos >= 0 && a.val_n >= 0 &&
                         a.val_pos >= 0 && a.test_n >= 0 && a.test_pos >= 0;
    if (any_set && !all_set) {
        std::cerr << "split: give all six size flags or none\n";
        return 1;
    }

    data::SplitSizes sizes;
    if (all_set) {
        sizes = {static_cast<std::size_t>(a.train_n), static_cast<std::size_t>(a.train_pos),
                 static_cast<std::size_t>(a.val_n),   static_cast<std::size_t>(a.val_pos),
                 static_cast<std::size_t>(a.test_n),  static_cast<std::size_t>(a.test_pos)};
    } else {
        sizes = auto_sizes(labels);
    }

    const auto split = data::stratified_split(labels, sizes, a.seed);
    data::save_split(split, a.out);
    std::cerr << "split " << labels.size() << " recordings: train " << sizes.train_n
              << ", validation " << sizes.validation_n << ", test " << sizes.test_n << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// pretrain

struct PretrainArgs {
    std::string data_dir, out, split_path, config_path, manifest;
    ModelFlags model;
    train::PretrainConfig pc;
};

int run_pretrain(const CLI::App& cmd, PretrainArgs& a) {
    json cfg;
    if (!a.config_path.empty()) {
        cfg = load_json_file(a.config_path);
        a.model.apply_config(cmd, cfg);
        cfg_fallback(cmd, cfg, "--epochs", "epochs", a.pc.epochs);
        cfg_fallback(cmd, cfg, "--mask-ratio", "mask_ratio", a.pc.mask_ratio);
        cfg_fallback(cmd, cfg, "--lr", "lr", a.pc.lr);
        cfg_fallback(cmd, cfg, "--batch-size", "batch_size", a.pc.batch_size);
        cfg_fallback(cmd, cfg, "--seed", "seed", a.pc.seed);
    }
    a.model.mc.head_type = model::HeadType::reconstruction;

    std::vector<preprocess::CleanRecording> corpus;
    if (!a.split_path.empty()) {
        const auto split = data::load_split(a.split_path);
        for (const auto& id : split_ids(split, data::Split::train)) {
            corpus.push_back(load_clean_by_id(a.data_dir, id));
        }
    } else {
        for (const auto& path : csv_files_in(a.data_dir)) {
            corpus.push_back(preprocess::load_clean_recording(path));
        }
    }

    const auto result = train::pretrain(corpus, a.model.mc, a.pc);
    model::save_params(result.params, a.out);

    json manifest;
    manifest["command"] = "pretrain";
    manifest["seed"] = a.pc.seed;
    manifest["model_config"] = model_config_json(result.params.config);
    manifest["train_config"] = {{"epochs", a.pc.epochs},
                                {"mask_ratio", a.pc.mask_ratio},
                                {"lr", a.pc.lr},
                                {"batch_size", a.pc.batch_size}};
    manifest["loss_history"] = result.loss_history;
    manifest["weights"] = a.out;
    write_json_file(manifest, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);

    std::cerr << "pretrained " << a.pc.epochs << " epochs; first-epoch loss "
              << result.loss_history.front() << ", last " << result.loss_history.back()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// finetune

struct FinetuneArgs {
    std::string data_dir, metadata, split_path, backbone, out, augment, manifest,
        config_path;
    train::FinetuneConfig fc;
};

int run_finetune(const CLI::App& cmd, FinetuneArgs& a) {
    if (!a.config_path.empty()) {
        const json cfg = load_json_file(a.config_path);
        cfg_fallback(cmd, cfg, "--epochs", "epochs", a.fc.epochs);
        cfg_fallback(cmd, cfg, "--patience", "patience", a.fc.patience);
        cfg_fallback(cmd, cfg, "--lr", "lr", a.fc.lr);
        cfg_fallback(cmd, cfg, "--weight-decay", "weight_decay", a.fc.weight_decay);
        cfg_fallback(cmd, cfg, "--seed", "seed", a.fc.seed);
    }

    const auto backbone = model::load_params(a.backbone);
    const auto metas = data::load_metadata(a.metadata);
    const auto split = data::load_split(a.split_path);

    std::map<std::string, bool> meta_labels = label_map(metas);
    std::vector<data::Label> train_labels;
    for (const auto& id : split_ids(split, data::Split::train)) {
        auto it = meta_labels.find(id);
        if (it == meta_labels.end()) {
            throw std::runtime_error("finetune: split id " + id + " missing from metadata");
        }
        train_labels.push_back({id, it->second});
    }

    if (!a.augment.empty()) {
        const json doc = load_json_file(a.augment);
        if (!doc.is_array()) throw std::runtime_error(a.augment + ": expected a JSON array");
        std::vector<train::ExtraRecording> extra;
        for (const auto& j : doc) {
            train::ExtraRecording e;
            e.id = j.at("id").get<std::string>();
            if (j.contains("stage2_duration_s") && !j.at("stage2_duration_s").is_null()) {
                e.stage2_duration_s = j.at("stage2_duration_s").get<double>();
            }
            extra.push_back(std::move(e));
        }
        train_labels = train::augment_positive(train_labels, extra);
    }

    std::map<std::string, bool> train_label_map;
    std::vector<preprocess::CleanRecording> train_recs;
    for (const auto& l : train_labels) {
        train_label_map[l.id] = l.positive;
        train_recs.push_back(load_clean_by_id(a.data_dir, l.id));
    }
    std::map<std::string, bool> val_label_map;
    std::vector<preprocess::CleanRecording> val_recs;
    for (const auto& id : split_ids(split, data::Split::validation)) {
        auto it = meta_labels.find(id);
        if (it == meta_labels.end()) {
            throw std::runtime_error("finetune: split id " + id + " missing from metadata");
        }
        val_label_map[id] = it->second;
        val_recs.push_back(load_clean_by_id(a.data_dir, id));
    }

    const auto train_set = train::terminal_windows(train_recs, train_label_map, backbone.config);
    const auto val_set = train::terminal_windows(val_recs, val_label_map, backbone.config);

    const auto result = train::finetune(backbone, train_set, val_set, a.fc);
    model::save_params(result.params, a.out);

    json manifest;
    manifest["command"] = "finetune";
    manifest["seed"] = a.fc.seed;
    manifest["model_config"] = model_config_json(result.params.config);
    manifest["train_config"] = {{"epochs", a.fc.epochs},
                                {"patience", a.fc.patience},
                                {"lr", a.fc.lr},
                                {"weight_decay", a.fc.weight_decay}};
    manifest["backbone"] = a.backbone;
    manifest["val_auc_history"] = result.val_auc_history;
    manifest["best_epoch"] = result.best_epoch;
    manifest["weights"] = a.out;
    write_json_file(manifest, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);

    std::cerr << "fine-tuned; best validation AUC "
              << result.val_auc_history[result.best_epoch - 1] << " at epoch "
              << result.best_epoch << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit-alerts

struct FitAlertsArgs {
    std::string data_dir, metadata, split_path, weights, out;
    std::size_t stride = 240;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

int run_fit_alerts(FitAlertsArgs& a) {
    const auto params = model::load_params(a.weights);
    const auto metas = data::load_metadata(a.metadata);
    const auto split = data::load_split(a.split_path);
    const auto labels = label_map(metas);

    std::vector<std::array<double, 4>> features;
    std::vector<bool> y;
    for (const auto& id : split_ids(split, data::Split::train)) {
        auto it = labels.find(id);
        if (it == labels.end()) {
            throw std::runtime_error("fit-alerts: split id " + id + " missing from metadata");
        }
        const auto rec = load_clean_by_id(a.data_dir, id);
        const auto trace = inference::sliding_predict(params, rec, a.stride, a.jobs);
        const auto segments = inference::extract_alerts(trace, a.threshold);
        features.push_back(largest_segment_features(segments));
        y.push_back(it->second);
    }

    const auto lr = train::fit_logistic(features, y, a.seed);
    train::save_logistic(lr, a.out);
    std::cerr << "fit alert classifier on " << features.size() << " recordings\n";
    return 0;
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
    std::string weights, alerts, recording, out, svg;
    std::size_t stride = 240;
    double threshold = 0.5;
    std::size_t jobs = 1;
};

int run_infer(InferArgs& a) {
    const auto params = model::load_params(a.weights);
    const auto lr = train::load_logistic(a.alerts);
    const auto rec = load_any_recording(a.recording);

    const auto trace = inference::sliding_predict(params, rec, a.stride, a.jobs);
    const auto segments = inference::extract_alerts(trace, a.threshold);
    if (!a.out.empty()) inference::emit_trace(trace, rec, segments, a.out, a.svg);

    json out;
    out["id"] = rec.id;
    out["probability"] = inference::classify_recording(segments, lr);
    out["segments"] = json::array();
    for (const auto& seg : segments) {
        out["segments"].push_back({{"start_s", double(seg.start) / rec.sample_rate_hz},
                                   {"end_s", double(seg.end) / rec.sample_rate_hz},
                                   {"length", seg.length},
                                   {"max", seg.max},
                                   {"cumsum", seg.cumsum},
                                   {"weighted_integral", seg.weighted_integral}});
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string data_dir, metadata, split_path, weights, alerts, out_csv;
    std::size_t stride = 240;
    double threshold = 0.5;
    std::size_t jobs = 1;
};

int run_evaluate(EvaluateArgs& a) {
    const auto params = model::load_params(a.weights);
    const auto lr = train::load_logistic(a.alerts);
    const auto metas = data::load_metadata(a.metadata);
    const auto split = data::load_split(a.split_path);
    const auto test_ids = split_ids(split, data::Split::test);

    std::vector<data::ClinicalMetadata> test_metas;
    for (const auto& m : metas) {
        auto it = split.assignment.find(m.id);
        if (it != split.assignment.end() && it->second == data::Split::test) {
            test_metas.push_back(m);
        }
    }

    std::map<std::string, double> scores;
    for (const auto& id : test_ids) {
        const auto rec = load_clean_by_id(a.data_dir, id);
        const auto trace = inference::sliding_predict(params, rec, a.stride, a.jobs);
        scores[id] = inference::classify_recording(inference::extract_alerts(trace, a.threshold), lr);
    }

    const auto report = metrics::evaluate_subgroups(scores, label_map(test_metas), test_metas);
    if (!a.out_csv.empty()) metrics::save_report_csv(report, a.out_csv);
    std::cout << metrics::format_report(report);
    return 0;
}

// ---------------------------------------------------------------------------
// dump-patches

struct DumpArgs {
    std::string in, out, channel = "fhr";
    std::size_t patch_len = 48, stride = 24, offset = 0, context_len = 1800;
};

int run_dump_patches(DumpArgs& a) {
    const auto rec = load_any_recording(a.in);
    if (a.offset + a.context_len > rec.length()) {
        throw std::runtime_error("dump-patches: window exceeds recording length");
    }
    const bool fhr = a.channel == "fhr";
    if (!fhr && a.channel != "uc") {
        std::cerr << "dump-patches: --channel must be fhr or uc\n";
        return 1;
    }
    const auto& series = fhr ? rec.fhr_norm : rec.uc_norm;
    std::vector<double> window(series.begin() + a.offset,
                               series.begin() + a.offset + a.context_len);
    const auto seq = patch::patchify(window, a.patch_len, a.stride,
                                     fhr ? patch::Channel::fhr : patch::Channel::uc, a.offset);

    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    out << "patch";
    for (std::size_t j = 0; j < seq.patch_len; ++j) out << ",s" << j;
    out << "\n";
    char buf[32];
    for (std::size_t k = 0; k < seq.n_patches(); ++k) {
        out << k;
        for (std::size_t j = 0; j < seq.patch_len; ++j) {
            std::snprintf(buf, sizeof(buf), ",%.9g", seq.patches.at(k, j));
            out << buf;
        }
        out << "\n";
    }
    std::cerr << "wrote " << seq.n_patches() << " patches\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CTG foundation-model pipeline"};
    app.require_subcommand(1);
    app.footer("All commands derive their randomness from --seed via named "
               "per-stage streams, so identical inputs and seed give identical outputs.");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic CTG corpus");
    synth_cmd->add_option("--n", synth_args.n, "Number of recordings");
    synth_cmd->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
    synth_cmd->add_option("--healthy-fraction", synth_args.healthy_fraction,
                          "Fraction of healthy recordings");
    synth_cmd->add_option("--duration-s", synth_args.tmpl.duration_s, "Recording length");
    synth_cmd->add_option("--baseline", synth_args.tmpl.baseline_bpm, "FHR baseline");
    synth_cmd->add_option("--variability", synth_args.tmpl.variability_bpm, "FHR variability");
    synth_cmd->add_option("--period", synth_args.tmpl.contraction_period_s,
                          "Contraction period");
    synth_cmd->add_option("--amp", synth_args.tmpl.contraction_amp_mmhg, "Contraction amplitude");
    synth_cmd->add_flag("--flat-uc", synth_args.tmpl.inject_flat_uc,
                        "Inject a flat UC stretch into every recording");
    synth_cmd->add_option("--config", synth_args.config_path, "JSON config file");
    synth_cmd->add_option("--seed", synth_args.seed, "Random seed");

    PreprocessArgs pre_args;
    auto* pre_cmd = app.add_subcommand("preprocess", "Clean and normalize recordings");
    pre_cmd->add_option("--in", pre_args.in_file, "One raw recording CSV");
    pre_cmd->add_option("--out", pre_args.out_file, "Cleaned output CSV");
    pre_cmd->add_option("--in-dir", pre_args.in_dir, "Directory of raw recordings");
    pre_cmd->add_option("--out-dir", pre_args.out_dir, "Directory for cleaned recordings");

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Stratified train/validation/test split");
    split_cmd->add_option("--metadata", split_args.metadata, "Metadata JSON")->required();
    split_cmd->add_option("--out", split_args.out, "Split JSON output")->required();
    split_cmd->add_option("--train-n", split_args.train_n, "Training size");
    split_cmd->add_option("--train-pos", split_args.train_pos, "Training positives");
    split_cmd->add_option("--val-n", split_args.val_n, "Validation size");
    split_cmd->add_option("--val-pos", split_args.val_pos, "Validation positives");
    split_cmd->add_option("--test-n", split_args.test_n, "Test size");
    split_cmd->add_option("--test-pos", split_args.test_pos, "Test positives");
    split_cmd->add_option("--seed", split_args.seed, "Random seed");

    PretrainArgs pre_train;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "Masked pretraining");
    pretrain_cmd->add_option("--data", pre_train.data_dir, "Cleaned recording directory")
        ->required();
    pretrain_cmd->add_option("--out", pre_train.out, "Weight file")->required();
    pretrain_cmd->add_option("--split", pre_train.split_path,
                             "Split JSON (restricts to the train split)");
    pretrain_cmd->add_option("--manifest", pre_train.manifest, "Run-manifest path");
    pretrain_cmd->add_option("--config", pre_train.config_path, "JSON config file");
    pre_train.model.add_options(pretrain_cmd);
    pretrain_cmd->add_option("--epochs", pre_train.pc.epochs, "Training epochs");
    pretrain_cmd->add_option("--mask-ratio", pre_train.pc.mask_ratio, "Masking ratio");
    pretrain_cmd->add_option("--lr", pre_train.pc.lr, "Learning rate");
    pretrain_cmd->add_option("--batch-size", pre_train.pc.batch_size,
                             "Windows per optimizer step");
    pretrain_cmd->add_option("--seed", pre_train.pc.seed, "Random seed");

    FinetuneArgs ft_args;
    auto* ft_cmd = app.add_subcommand("finetune", "Classification fine-tuning");
    ft_cmd->add_option("--data", ft_args.data_dir, "Cleaned recording directory")->required();
    ft_cmd->add_option("--metadata", ft_args.metadata, "Metadata JSON")->required();
    ft_cmd->add_option("--split", ft_args.split_path, "Split JSON")->required();
    ft_cmd->add_option("--backbone", ft_args.backbone, "Pretrained weight file")->required();
    ft_cmd->add_option("--out", ft_args.out, "Weight file")->required();
    ft_cmd->add_option("--augment", ft_args.augment,
                       "JSON array of {id, stage2_duration_s} augmentation candidates");
    ft_cmd->add_option("--manifest", ft_args.manifest, "Run-manifest path");
    ft_cmd->add_option("--config", ft_args.config_path, "JSON config file");
    ft_cmd->add_option("--epochs", ft_args.fc.epochs, "Max epochs");
    ft_cmd->add_option("--patience", ft_args.fc.patience, "Early-stopping patience");
    ft_cmd->add_option("--lr", ft_args.fc.lr, "Learning rate");
    ft_cmd->add_option("--weight-decay", ft_args.fc.weight_decay, "Decoupled weight decay");
    ft_cmd->add_option("--seed", ft_args.fc.seed, "Random seed");

    FitAlertsArgs fa_args;
    auto* fa_cmd = app.add_subcommand("fit-alerts", "Fit the alert-segment classifier");
    fa_cmd->add_option("--data", fa_args.data_dir, "Cleaned recording directory")->required();
    fa_cmd->add_option("--metadata", fa_args.metadata, "Metadata JSON")->required();
    fa_cmd->add_option("--split", fa_args.split_path, "Split JSON")->required();
    fa_cmd->add_option("--weights", fa_args.weights, "Classifier weight file")->required();
    fa_cmd->add_option("--out", fa_args.out, "Alert-model JSON output")->required();
    fa_cmd->add_option("--stride", fa_args.stride, "Sliding-window stride (samples)");
    fa_cmd->add_option("--threshold", fa_args.threshold, "Alert threshold");
    fa_cmd->add_option("--seed", fa_args.seed, "Random seed");
    fa_cmd->add_option("--jobs", fa_args.jobs, "Parallel window evaluations");

    InferArgs infer_args;
    auto* infer_cmd = app.add_subcommand("infer", "Risk trace and alerts for one recording");
    infer_cmd->add_option("--weights", infer_args.weights, "Classifier weight file")->required();
    infer_cmd->add_option("--alerts", infer_args.alerts, "Alert-model JSON")->required();
    infer_cmd->add_option("--recording", infer_args.recording, "Raw or cleaned CSV")->required();
    infer_cmd->add_option("--out", infer_args.out, "Trace CSV output");
    infer_cmd->add_option("--svg", infer_args.svg, "Optional SVG rendering");
    infer_cmd->add_option("--stride", infer_args.stride, "Sliding-window stride (samples)");
    infer_cmd->add_option("--threshold", infer_args.threshold, "Alert threshold");
    infer_cmd->add_option("--jobs", infer_args.jobs, "Parallel window evaluations");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Subgroup evaluation report");
    eval_cmd->add_option("--data", eval_args.data_dir, "Cleaned recording directory")->required();
    eval_cmd->add_option("--metadata", eval_args.metadata, "Metadata JSON")->required();
    eval_cmd->add_option("--split", eval_args.split_path, "Split JSON")->required();
    eval_cmd->add_option("--weights", eval_args.weights, "Classifier weight file")->required();
    eval_cmd->add_option("--alerts", eval_args.alerts, "Alert-model JSON")->required();
    eval_cmd->add_option("--out-csv", eval_args.out_csv, "Report CSV output");
    eval_cmd->add_option("--stride", eval_args.stride, "Sliding-window stride (samples)");
    eval_cmd->add_option("--threshold", eval_args.threshold, "Alert threshold");
    eval_cmd->add_option("--jobs", eval_args.jobs, "Parallel window evaluations");

    DumpArgs dump_args;
    auto* dump_cmd = app.add_subcommand("dump-patches", "Emit a patch matrix as CSV");
    dump_cmd->add_option("--in", dump_args.in, "Raw or cleaned recording CSV")->required();
    dump_cmd->add_option("--out", dump_args.out, "Patch CSV output")->required();
    dump_cmd->add_option("--channel", dump_args.channel, "fhr or uc");
    dump_cmd->add_option("--patch-len", dump_args.patch_len, "Samples per patch");
    dump_cmd->add_option("--stride", dump_args.stride, "Patch stride");
    dump_cmd->add_option("--offset", dump_args.offset, "Window start sample");
    dump_cmd->add_option("--context-len", dump_args.context_len, "Window length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(*synth_cmd, synth_args);
        if (pre_cmd->parsed()) return run_preprocess(pre_args);
        if (split_cmd->parsed()) return run_split(split_args);
        if (pretrain_cmd->parsed()) return run_pretrain(*pretrain_cmd, pre_train);
        if (ft_cmd->parsed()) return run_finetune(*ft_cmd, ft_args);
        if (fa_cmd->parsed()) return run_fit_alerts(fa_args);
        if (infer_cmd->parsed()) return run_infer(infer_args);
        if (eval_cmd->parsed()) return run_evaluate(eval_args);
        if (dump_cmd->parsed()) return run_dump_patches(dump_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

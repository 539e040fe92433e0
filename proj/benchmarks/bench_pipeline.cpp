#include <benchmark/benchmark.h>

#include <vector>

#include "ctgfm/inference.hpp"
#include "ctgfm/metrics.hpp"
#include "ctgfm/model.hpp"
#include "ctgfm/patch.hpp"
#include "ctgfm/preprocess.hpp"
#include "ctgfm/rng.hpp"
#include "ctgfm/synth.hpp"

namespace {

using namespace ctgfm;

synth::SynthResult sample_recording() {
    synth::SynthConfig cfg;
    cfg.decel_prob = 1.0;
    cfg.seed = 11;
    return synth::generate_recording(cfg, "bench");
}

void bm_preprocess_pipeline(benchmark::State& state) {
    const auto raw = sample_recording();
    for (auto _ : state) {
        benchmark::DoNotOptimize(preprocess::preprocess_pipeline(raw.recording));
    }
}
BENCHMARK(bm_preprocess_pipeline);

void bm_generate_mask(benchmark::State& state) {
    Rng rng(3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(patch::generate_mask(74, 0.4, rng));
    }
}
BENCHMARK(bm_generate_mask);

void bm_encoder_forward(benchmark::State& state) {
    model::ModelConfig cfg = model::ModelConfig::tiny(model::HeadType::reconstruction);
    cfg.context_len = 1800;
    cfg.patch_len = 48;
    cfg.stride = 24;
    auto params = model::init_params(cfg, 5);

    const auto clean = preprocess::preprocess_pipeline(sample_recording().recording);
    std::vector<double> fhr(clean.fhr_norm.begin(), clean.fhr_norm.begin() + cfg.context_len);
    std::vector<double> uc(clean.uc_norm.begin(), clean.uc_norm.begin() + cfg.context_len);
    const auto fp = patch::patchify(fhr, cfg.patch_len, cfg.stride, patch::Channel::fhr);
    const auto up = patch::patchify(uc, cfg.patch_len, cfg.stride, patch::Channel::uc);

    for (auto _ : state) {
        benchmark::DoNotOptimize(
            model::forward_channel_independent(fp, up, params, nn::Mode::infer));
    }
}
BENCHMARK(bm_encoder_forward);

void bm_auc(benchmark::State& state) {
    Rng rng(17);
    std::vector<bool> labels;
    std::vector<double> scores;
    for (int i = 0; i < 2000; ++i) {
        labels.push_back(rng.bernoulli(0.2));
        scores.push_back(rng.uniform());
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::auc(labels, scores));
    }
}
BENCHMARK(bm_auc);

}  // namespace

BENCHMARK_MAIN();

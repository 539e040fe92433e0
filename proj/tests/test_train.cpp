#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <vector>

#include "ctgfm/metrics.hpp"
#include "ctgfm/synth.hpp"
#include "ctgfm/train.hpp"
#include "doctest.h"

using namespace ctgfm;
using namespace ctgfm::train;
namespace fs = std::filesystem;

namespace {

model::ModelConfig small_config(model::HeadType head) {
    model::ModelConfig cfg;
    cfg.patch_len = 48;
    cfg.stride = 48;
    cfg.context_len = 960;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.ff_dim = 16;
    cfg.dropout = 0.2;
    cfg.head_type = head;
    return cfg;
}

std::vector<preprocess::CleanRecording> small_corpus(std::size_t n, double healthy_fraction,
                                                     std::uint64_t seed,
                                                     std::vector<synth::LabeledClean>* labeled
                                                     = nullptr) {
    synth::SynthConfig tmpl;
    tmpl.duration_s = 480.0;
    auto full = synth::generate_corpus(n, healthy_fraction, tmpl, seed);
    std::vector<preprocess::CleanRecording> recs;
    for (const auto& lc : full) recs.push_back(lc.rec);
    if (labeled) *labeled = std::move(full);
    return recs;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("early stopper follows the specified trace") {
    EarlyStopper stop(1);
    CHECK_FALSE(stop.observe(0.9));  // epoch 1: new best
    CHECK(stop.observe(0.8));        // epoch 2: one epoch without improvement
    CHECK(stop.best_epoch() == 1);
    CHECK(stop.best_value() == 0.9);
    CHECK(stop.epochs_seen() == 2);
}

TEST_CASE("early stopper resets on improvement and ignores ties") {
    EarlyStopper stop(2);
    CHECK_FALSE(stop.observe(0.5));
    CHECK_FALSE(stop.observe(0.4));
    CHECK_FALSE(stop.observe(0.6));  // improvement resets the counter
    CHECK_FALSE(stop.observe(0.6));  // a tie is not an improvement
    CHECK(stop.observe(0.6));
    CHECK(stop.best_epoch() == 3);
    CHECK(stop.best_value() == 0.6);
}

TEST_CASE("pretraining is deterministic and records one loss per epoch") {
    const auto corpus = small_corpus(3, 0.5, 101);
    PretrainConfig pcfg;
    pcfg.epochs = 3;
    pcfg.seed = 7;

    const PretrainResult r1 = pretrain(corpus, small_config(model::HeadType::reconstruction), pcfg);
    const PretrainResult r2 = pretrain(corpus, small_config(model::HeadType::reconstruction), pcfg);
    REQUIRE(r1.loss_history.size() == 3);
    CHECK(r1.loss_history == r2.loss_history);
    for (const auto& [name, t] : r1.params.tensors) {
        CHECK(r2.params.tensors.at(name).data() == t.data());
    }
    for (double v : r1.loss_history) CHECK(v > 0.0);

    pcfg.seed = 8;
    const PretrainResult r3 = pretrain(corpus, small_config(model::HeadType::reconstruction), pcfg);
    CHECK(r3.loss_history != r1.loss_history);
}

TEST_CASE("pretraining rejects unusable corpora") {
    PretrainConfig pcfg;
    pcfg.epochs = 1;
    CHECK_THROWS(pretrain({}, small_config(model::HeadType::reconstruction), pcfg));

    auto corpus = small_corpus(2, 0.5, 103);
    corpus[0].fhr.resize(100);
    corpus[0].uc.resize(100);
    corpus[0].fhr_norm.resize(100);
    corpus[0].uc_norm.resize(100);
    corpus[0].synthetic_mask.resize(100);
    CHECK_THROWS(pretrain(corpus, small_config(model::HeadType::reconstruction), pcfg));
}

TEST_CASE("gradient accumulation: batch size must divide into steps sanely") {
    const auto corpus = small_corpus(2, 0.5, 107);
    PretrainConfig pcfg;
    pcfg.epochs = 2;
    pcfg.seed = 3;
    pcfg.batch_size = 2;
    const PretrainResult r = pretrain(corpus, small_config(model::HeadType::reconstruction), pcfg);
    CHECK(r.loss_history.size() == 2);
    CHECK(std::isfinite(r.loss_history.back()));
}

TEST_CASE("terminal windows take the last context of each recording") {
    auto corpus = small_corpus(2, 0.5, 109);
    std::map<std::string, bool> labels{{corpus[0].id, false}, {corpus[1].id, true}};
    const auto cfg = small_config(model::HeadType::classification);
    const auto windows = terminal_windows(corpus, labels, cfg);
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].id == corpus[0].id);
    CHECK(windows[0].label == 0);
    CHECK(windows[1].label == 1);
    const std::size_t start = corpus[0].length() - cfg.context_len;
    CHECK(windows[0].fhr.source_window_start == start);
    CHECK(windows[0].fhr.patches.at(0, 0) == corpus[0].fhr_norm[start]);
    CHECK(windows[0].uc.patches.at(0, 3) == corpus[0].uc_norm[start + 3]);

    labels.erase(corpus[1].id);
    CHECK_THROWS(terminal_windows(corpus, labels, cfg));
}

TEST_CASE("fine-tuning snapshots the best-AUC epoch") {
    std::vector<synth::LabeledClean> labeled;
    const auto corpus = small_corpus(12, 0.5, 211, &labeled);
    std::map<std::string, bool> labels;
    for (const auto& lc : labeled) labels[lc.rec.id] = lc.positive;

    const auto cfg = small_config(model::HeadType::classification);
    auto cfg_recon = cfg;
    cfg_recon.head_type = model::HeadType::reconstruction;
    const model::ModelParams backbone = model::init_params(cfg_recon, 5);

    // corpus order is all-healthy then all-compromised, so deal windows out
    // by hand to give both sides of the split both classes
    const auto windows = terminal_windows(corpus, labels, cfg);
    std::vector<LabeledWindow> train_set, val_set;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        (i == 5 || i >= 9 ? val_set : train_set).push_back(windows[i]);
    }

    FinetuneConfig fcfg;
    fcfg.epochs = 6;
    fcfg.patience = 10;
    fcfg.seed = 17;
    const FinetuneResult res = finetune(backbone, train_set, val_set, fcfg);

    REQUIRE_FALSE(res.val_auc_history.empty());
    CHECK(res.val_auc_history.size() <= 6);
    const double best = *std::max_element(res.val_auc_history.begin(), res.val_auc_history.end());
    REQUIRE(res.best_epoch >= 1);
    CHECK(res.val_auc_history[res.best_epoch - 1] == best);
    // first strict maximum wins
    for (std::size_t e = 0; e + 1 < res.best_epoch; ++e) {
        CHECK(res.val_auc_history[e] < best);
    }
    CHECK(res.params.config.head_type == model::HeadType::classification);

    const FinetuneResult res2 = finetune(backbone, train_set, val_set, fcfg);
    CHECK(res2.val_auc_history == res.val_auc_history);
    for (const auto& [name, t] : res.params.tensors) {
        CHECK(res2.params.tensors.at(name).data() == t.data());
    }
}

TEST_CASE("fine-tuning requires both classes in validation") {
    std::vector<synth::LabeledClean> labeled;
    const auto corpus = small_corpus(4, 0.5, 213, &labeled);
    std::map<std::string, bool> labels;
    for (const auto& lc : labeled) labels[lc.rec.id] = false;  // all negative

    const auto cfg = small_config(model::HeadType::classification);
    auto cfg_recon = cfg;
    cfg_recon.head_type = model::HeadType::reconstruction;
    const model::ModelParams backbone = model::init_params(cfg_recon, 5);
    const auto windows = terminal_windows(corpus, labels, cfg);
    const std::vector<LabeledWindow> train_set(windows.begin(), windows.begin() + 2);
    const std::vector<LabeledWindow> val_set(windows.begin() + 2, windows.end());

    FinetuneConfig fcfg;
    fcfg.epochs = 2;
    CHECK_THROWS(finetune(backbone, train_set, val_set, fcfg));
}

TEST_CASE("positive-class augmentation") {
    const std::vector<data::Label> base = {{"a", false}, {"b", true}};
    std::ostringstream warnings;
    const auto out = augment_positive(
        base,
        {{"c", 0.0}, {"d", 1800.0}, {"e", std::nullopt}},
        &warnings);
    REQUIRE(out.size() == 3);
    CHECK(out[2].id == "c");
    CHECK(out[2].positive);
    CHECK(warnings.str().find("e") != std::string::npos);
    CHECK(warnings.str().find("skipped") != std::string::npos);
}

TEST_CASE("logistic model prediction formula") {
    LogisticModel m;
    m.weights = {1.0, -2.0, 0.0, 0.5};
    m.intercept = 0.3;
    m.means = {1.0, 0.0, 5.0, 2.0};
    m.stds = {2.0, 1.0, 1.0, 4.0};
    const std::array<double, 4> x{3.0, 1.0, 5.0, 6.0};
    const double z = 0.3 + 1.0 * (3.0 - 1.0) / 2.0 - 2.0 * 1.0 + 0.5 * (6.0 - 2.0) / 4.0;
    CHECK(predict(m, x) == doctest::Approx(sigmoid(z)).epsilon(1e-12));
}

TEST_CASE("all-zero features learn the base rate") {
    std::vector<std::array<double, 4>> feats(8, {0.0, 0.0, 0.0, 0.0});
    std::vector<bool> labels(8, false);
    labels[0] = labels[1] = true;  // prevalence 0.25
    const LogisticModel m = fit_logistic(feats, labels, 0);
    CHECK(m.intercept == doctest::Approx(std::log(0.25 / 0.75)).epsilon(1e-4));
    for (double w : m.weights) CHECK(w == 0.0);
    for (double s : m.stds) CHECK(s == 1.0);
    CHECK(predict(m, {0, 0, 0, 0}) == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("a separable feature is learned") {
    std::vector<std::array<double, 4>> feats;
    std::vector<bool> labels;
    for (int i = 0; i < 20; ++i) {
        const bool pos = i % 2 == 0;
        feats.push_back({pos ? 2.0 : -2.0, 0.0, 0.0, 0.0});
        labels.push_back(pos);
    }
    const LogisticModel m = fit_logistic(feats, labels, 0);
    CHECK(m.weights[0] > 1.0);
    CHECK(predict(m, {2.0, 0.0, 0.0, 0.0}) > 0.9);
    CHECK(predict(m, {-2.0, 0.0, 0.0, 0.0}) < 0.1);
    // constant columns stay pinned at zero
    CHECK(m.weights[1] == 0.0);
    CHECK(m.weights[2] == 0.0);
    CHECK(m.weights[3] == 0.0);
}

TEST_CASE("the fit satisfies its own optimality condition") {
    Rng rng(303);
    std::vector<std::array<double, 4>> feats;
    std::vector<bool> labels;
    for (int i = 0; i < 60; ++i) {
        std::array<double, 4> x{};
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        const bool pos = x[0] + 0.5 * x[1] - 0.2 * x[3] + 0.3 * rng.normal() > 0.0;
        feats.push_back(x);
        labels.push_back(pos);
    }
    const LogisticModel m = fit_logistic(feats, labels, 0);

    // recompute the penalized-gradient norm from the returned model
    std::array<double, 4> grad_w{};
    double grad_b = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        std::array<double, 4> z{};
        for (int j = 0; j < 4; ++j) z[j] = (feats[i][j] - m.means[j]) / m.stds[j];
        double lin = m.intercept;
        for (int j = 0; j < 4; ++j) lin += m.weights[j] * z[j];
        const double err = sigmoid(lin) - (labels[i] ? 1.0 : 0.0);
        for (int j = 0; j < 4; ++j) grad_w[j] += err * z[j];
        grad_b += err;
    }
    double norm2 = 0.0;
    const double n = static_cast<double>(feats.size());
    for (int j = 0; j < 4; ++j) {
        const double g = grad_w[j] / n + 2.0 * 1e-4 * m.weights[j];
        norm2 += g * g;
    }
    norm2 += (grad_b / n) * (grad_b / n);
    CHECK(std::sqrt(norm2) < 1e-5);
}

TEST_CASE("standardization statistics describe the training features") {
    std::vector<std::array<double, 4>> feats = {
        {1.0, 10.0, 0.0, -1.0}, {3.0, 10.0, 0.0, 1.0}, {5.0, 10.0, 0.0, 3.0},
        {7.0, 10.0, 0.0, 5.0}};
    std::vector<bool> labels = {false, false, true, true};
    const LogisticModel m = fit_logistic(feats, labels, 0);
    CHECK(m.means[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(m.means[3] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.stds[0] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));  // population
    CHECK(m.stds[1] == 1.0);  // constant -> pinned
    CHECK(m.weights[1] == 0.0);
}

TEST_CASE("single-class fits are rejected") {
    std::vector<std::array<double, 4>> feats(4, {1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS(fit_logistic(feats, std::vector<bool>(4, true), 0));
    CHECK_THROWS(fit_logistic(feats, std::vector<bool>(4, false), 0));
    CHECK_THROWS(fit_logistic({}, {}, 0));
}

TEST_CASE("logistic model JSON round trip") {
    LogisticModel m;
    m.weights = {0.25, -1.5, 3.0, 0.0};
    m.intercept = -0.75;
    m.means = {1.0, 2.0, 3.0, 4.0};
    m.stds = {1.5, 2.5, 1.0, 0.5};
    const fs::path p = fs::temp_directory_path() / "ctgfm_logistic_roundtrip.json";
    save_logistic(m, p.string());
    const LogisticModel back = load_logistic(p.string());
    for (int j = 0; j < 4; ++j) {
        CHECK(back.weights[j] == m.weights[j]);
        CHECK(back.means[j] == m.means[j]);
        CHECK(back.stds[j] == m.stds[j]);
    }
    CHECK(back.intercept == m.intercept);
    fs::remove(p);
}

TEST_CASE("config validation") {
    PretrainConfig pcfg;
    pcfg.epochs = 0;
    CHECK_THROWS(pcfg.validate());
    pcfg = PretrainConfig();
    pcfg.mask_ratio = 0.0;
    CHECK_THROWS(pcfg.validate());
    pcfg = PretrainConfig();
    pcfg.batch_size = 0;
    CHECK_THROWS(pcfg.validate());

    FinetuneConfig fcfg;
    fcfg.lr = 0.0;
    CHECK_THROWS(fcfg.validate());
    fcfg = FinetuneConfig();
    fcfg.patience = 0;
    CHECK_THROWS(fcfg.validate());
}

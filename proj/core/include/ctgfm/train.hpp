#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ctgfm/data.hpp"
#include "ctgfm/model.hpp"
#include "ctgfm/patch.hpp"
#include "ctgfm/preprocess.hpp"

namespace ctgfm::train {

struct PretrainConfig {
    double mask_ratio = 0.4;
    double lr = 1e-4;
    std::size_t epochs = 30;
    std::size_t batch_size = 1;  // windows per optimizer step (gradient accumulation)
    std::uint64_t seed = 0;

    void validate() const;
};

struct FinetuneConfig {
    double lr = 1e-4;
    double weight_decay = 0.01;
    std::size_t epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;

    void validate() const;
};

// Tracks the best validation value seen so far; observe() returns true when
// `patience` epochs have passed without a strict improvement.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience);

    bool observe(double value);
    std::size_t best_epoch() const { return best_epoch_; }   // 1-based
    double best_value() const { return best_value_; }
    std::size_t epochs_seen() const { return epochs_seen_; }

private:
    std::size_t patience_;
    std::size_t epochs_seen_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
    double best_value_ = 0.0;
};

struct PretrainResult {
    model::ModelParams params;
    std::vector<double> loss_history;  // epoch-mean masked-reconstruction loss
};

// Masked pretraining over non-overlapping context-length windows tiled from
// each recording (trailing partial windows dropped). Every recording must be
// at least one context window long. Each window visit draws a fresh mask.
// Deterministic given pcfg.seed.
PretrainResult pretrain(const std::vector<preprocess::CleanRecording>& corpus,
                        model::ModelConfig mcfg, const PretrainConfig& pcfg);

// One labeled training example: a tokenized context window from a recording.
struct LabeledWindow {
    std::string id;
    patch::PatchSequence fhr;
    patch::PatchSequence uc;
    int label = 0;
};

// Builds one labeled window per recording from its final context_len
// samples. Recordings shorter than the context or missing from `labels` are
// an error.
std::vector<LabeledWindow> terminal_windows(
    const std::vector<preprocess::CleanRecording>& recs,
    const std::map<std::string, bool>& labels, const model::ModelConfig& mcfg);

struct FinetuneResult {
    model::ModelParams params;  // from the best-validation-AUC epoch
    std::size_t best_epoch = 0;
    std::vector<double> val_auc_history;
};

// Cross-entropy fine-tuning of a classification model initialized from the
// pretrained backbone. Early-stops on validation AUC; the returned
// parameters (including batch-norm buffers) are a snapshot of the best
// epoch. The validation set must contain both classes.
FinetuneResult finetune(const model::ModelParams& backbone,
                        const std::vector<LabeledWindow>& train_set,
                        const std::vector<LabeledWindow>& val_set,
                        const FinetuneConfig& fcfg);

// A candidate recording for positive-class augmentation, identified by a
// second-stage labor duration of zero (deliveries that never reached the
// second stage).
struct ExtraRecording {
    std::string id;
    std::optional<double> stage2_duration_s;
};

// Appends extra recordings with stage-2 duration 0 as positive labels.
// Candidates lacking the duration field are skipped with a warning on
// `warnings` (default: std::cerr).
std::vector<data::Label> augment_positive(const std::vector<data::Label>& labels,
                                          const std::vector<ExtraRecording>& extra,
                                          std::ostream* warnings = nullptr);

// Logistic regression over the four alert-segment features (length, max,
// cumulative sum, weighted integral). Features are standardized internally;
// the standardization is part of the model.
struct LogisticModel {
    std::array<double, 4> weights{};  // on standardized features
    double intercept = 0.0;
    std::array<double, 4> means{};
    std::array<double, 4> stds{1.0, 1.0, 1.0, 1.0};
};

double predict(const LogisticModel& m, const std::array<double, 4>& features);

// Full-batch gradient descent (fixed step 0.1) on the mean logistic loss
// with an L2 penalty of 1e-4 on the weights, run until the gradient norm
// drops below 1e-6 or 1e5 iterations. Zero-variance features keep a zero
// coefficient. Needs at least one example of each class.
LogisticModel fit_logistic(const std::vector<std::array<double, 4>>& features,
                           const std::vector<bool>& labels, std::uint64_t seed);

void save_logistic(const LogisticModel& m, const std::string& path);
LogisticModel load_logistic(const std::string& path);

}  // namespace ctgfm::train

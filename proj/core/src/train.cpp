#include "ctgfm/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "ctgfm/metrics.hpp"
#include "ctgfm/optim.hpp"
#include "ctgfm/rng.hpp"

namespace ctgfm::train {

void PretrainConfig::validate() const {
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
        throw std::invalid_argument("PretrainConfig: mask_ratio must be in (0, 1)");
    }
    if (lr <= 0.0) throw std::invalid_argument("PretrainConfig: lr must be > 0");
    if (epochs == 0) throw std::invalid_argument("PretrainConfig: epochs must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("PretrainConfig: batch_size must be >= 1");
}

void FinetuneConfig::validate() const {
    if (lr <= 0.0) throw std::invalid_argument("FinetuneConfig: lr must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("FinetuneConfig: weight_decay must be >= 0");
    if (epochs == 0) throw std::invalid_argument("FinetuneConfig: epochs must be >= 1");
    if (patience == 0) throw std::invalid_argument("FinetuneConfig: patience must be >= 1");
}

EarlyStopper::EarlyStopper(std::size_t patience) : patience_(patience) {
    if (patience == 0) throw std::invalid_argument("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::observe(double value) {
    ++epochs_seen_;
    if (best_epoch_ == 0 || value > best_value_) {
        best_value_ = value;
        best_epoch_ = epochs_seen_;
        since_best_ = 0;
    } else {
        ++since_best_;
    }
    return since_best_ >= patience_;
}

namespace {

struct WindowRef {
    std::size_t rec = 0;
    std::size_t offset = 0;
};

std::pair<patch::PatchSequence, patch::PatchSequence> window_patches(
    const preprocess::CleanRecording& rec, std::size_t offset,
    const model::ModelConfig& mcfg) {
    const std::size_t L = mcfg.context_len;
    std::vector<double> fhr(rec.fhr_norm.begin() + offset, rec.fhr_norm.begin() + offset + L);
    std::vector<double> uc(rec.uc_norm.begin() + offset, rec.uc_norm.begin() + offset + L);
    return {patch::patchify(fhr, mcfg.patch_len, mcfg.stride, patch::Channel::fhr, offset),
            patch::patchify(uc, mcfg.patch_len, mcfg.stride, patch::Channel::uc, offset)};
}

void accumulate(nn::ParamMap& into, const nn::ParamMap& grads) {
    for (const auto& [name, g] : grads) {
        auto [it, fresh] = into.try_emplace(name, nn::Tensor(g.shape()));
        nn::Tensor& acc = it->second;
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
}

void apply_accumulated(model::ModelParams& params, nn::ParamMap& acc, std::size_t count,
                       nn::OptimizerState& state, bool decoupled) {
    if (count == 0) return;
    for (auto& [name, g] : acc) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] /= static_cast<double>(count);
    }
    if (decoupled) {
        nn::adamw_step(params.tensors, acc, state);
    } else {
        nn::adam_step(params.tensors, acc, state);
    }
    acc.clear();
}

}  // namespace

PretrainResult pretrain(const std::vector<preprocess::CleanRecording>& corpus,
                        model::ModelConfig mcfg, const PretrainConfig& pcfg) {
    pcfg.validate();
    mcfg.head_type = model::HeadType::reconstruction;
    mcfg.validate();
    if (corpus.empty()) throw std::runtime_error("pretrain: empty corpus");

    const std::size_t L = mcfg.context_len;
    std::vector<WindowRef> windows;
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        if (corpus[r].length() < L) {
            throw std::runtime_error("pretrain: recording " + corpus[r].id +
                                     " shorter than the context window");
        }
        for (std::size_t off = 0; off + L <= corpus[r].length(); off += L) {
            windows.push_back({r, off});
        }
    }
    if (windows.empty()) throw std::runtime_error("pretrain: no eligible windows");

    PretrainResult out;
    out.params = model::init_params(mcfg, derive_seed(pcfg.seed, "pretrain-init"));
    const std::size_t N = mcfg.n_patches();

    nn::OptimizerState state;
    state.hyper.lr = pcfg.lr;

    for (std::size_t epoch = 1; epoch <= pcfg.epochs; ++epoch) {
        std::vector<WindowRef> order = windows;
        Rng order_rng(derive_seed(pcfg.seed, "pretrain-order", epoch));
        order_rng.shuffle(order);
        Rng mask_rng(derive_seed(pcfg.seed, "pretrain-mask", epoch));
        Rng drop_rng(derive_seed(pcfg.seed, "pretrain-dropout", epoch));

        double loss_sum = 0.0;
        nn::ParamMap acc;
        std::size_t in_batch = 0;
        for (const WindowRef& w : order) {
            auto [fhr, uc] = window_patches(corpus[w.rec], w.offset, mcfg);
            const patch::MaskPattern mask = patch::generate_mask(N, pcfg.mask_ratio, mask_rng);
            model::StepResult step = model::pretrain_step(fhr, uc, mask, out.params, drop_rng);
            loss_sum += step.loss;
            accumulate(acc, step.grads);
            if (++in_batch == pcfg.batch_size) {
                apply_accumulated(out.params, acc, in_batch, state, false);
                in_batch = 0;
            }
        }
        apply_accumulated(out.params, acc, in_batch, state, false);
        out.loss_history.push_back(loss_sum / static_cast<double>(order.size()));
    }
    return out;
}

std::vector<LabeledWindow> terminal_windows(
    const std::vector<preprocess::CleanRecording>& recs,
    const std::map<std::string, bool>& labels, const model::ModelConfig& mcfg) {
    const std::size_t L = mcfg.context_len;
    std::vector<LabeledWindow> out;
    out.reserve(recs.size());
    for (const auto& rec : recs) {
        if (rec.length() < L) {
            throw std::runtime_error("terminal_windows: recording " + rec.id +
                                     " shorter than the context window");
        }
        auto it = labels.find(rec.id);
        if (it == labels.end()) {
            throw std::runtime_error("terminal_windows: no label for recording " + rec.id);
        }
        const std::size_t off = rec.length() - L;
        auto [fhr, uc] = window_patches(rec, off, mcfg);
        out.push_back({rec.id, std::move(fhr), std::move(uc), it->second ? 1 : 0});
    }
    return out;
}

FinetuneResult finetune(const model::ModelParams& backbone,
                        const std::vector<LabeledWindow>& train_set,
                        const std::vector<LabeledWindow>& val_set,
                        const FinetuneConfig& fcfg) {
    fcfg.validate();
    if (train_set.empty()) throw std::runtime_error("finetune: empty training set");
    bool has_pos = false, has_neg = false;
    for (const auto& w : val_set) (w.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw std::runtime_error("finetune: validation set must contain both classes");
    }

    model::ModelParams params =
        model::with_classification_head(backbone, derive_seed(fcfg.seed, "finetune-head"));

    nn::OptimizerState state;
    state.hyper.lr = fcfg.lr;
    state.hyper.weight_decay = fcfg.weight_decay;

    FinetuneResult out;
    out.params = params;
    EarlyStopper stopper(fcfg.patience);

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= fcfg.epochs; ++epoch) {
        Rng order_rng(derive_seed(fcfg.seed, "finetune-order", epoch));
        order_rng.shuffle(order);
        Rng drop_rng(derive_seed(fcfg.seed, "finetune-dropout", epoch));

        for (std::size_t idx : order) {
            const LabeledWindow& w = train_set[idx];
            model::StepResult step = model::finetune_step(w.fhr, w.uc, w.label, params, drop_rng);
            nn::adamw_step(params.tensors, step.grads, state);
        }

        std::vector<bool> labels;
        std::vector<double> scores;
        labels.reserve(val_set.size());
        scores.reserve(val_set.size());
        for (const auto& w : val_set) {
            labels.push_back(w.label != 0);
            scores.push_back(model::predict_window(w.fhr, w.uc, params));
        }
        const double auc = metrics::auc(labels, scores);
        out.val_auc_history.push_back(auc);

        const bool stop = stopper.observe(auc);
        if (stopper.best_epoch() == epoch) out.params = params;  // snapshot incl. buffers
        if (stop) break;
    }
    out.best_epoch = stopper.best_epoch();
    return out;
}

std::vector<data::Label> augment_positive(const std::vector<data::Label>& labels,
                                          const std::vector<ExtraRecording>& extra,
                                          std::ostream* warnings) {
    std::ostream& warn = warnings ? *warnings : std::cerr;
    std::vector<data::Label> out = labels;
    for (const auto& e : extra) {
        if (!e.stage2_duration_s.has_value()) {
            warn << "augment_positive: recording " << e.id
                 << " has no stage-2 duration; skipped\n";
            continue;
        }
        if (*e.stage2_duration_s == 0.0) out.push_back({e.id, true});
    }
    return out;
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double predict(const LogisticModel& m, const std::array<double, 4>& features) {
    double z = m.intercept;
    for (std::size_t j = 0; j < 4; ++j) {
        z += m.weights[j] * (features[j] - m.means[j]) / m.stds[j];
    }
    return sigmoid(z);
}

LogisticModel fit_logistic(const std::vector<std::array<double, 4>>& features,
                           const std::vector<bool>& labels, std::uint64_t /*seed*/) {
    if (features.size() != labels.size()) {
        throw std::invalid_argument("fit_logistic: feature/label count mismatch");
    }
    const std::size_t n = features.size();
    bool has_pos = false, has_neg = false;
    for (bool y : labels) (y ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw std::runtime_error("fit_logistic: need at least one example of each class");
    }

    constexpr double kL2 = 1e-4;
    constexpr double kStep = 0.1;
    constexpr double kGradTol = 1e-6;
    constexpr std::size_t kMaxIter = 100000;

    LogisticModel m;
    std::array<bool, 4> active{};
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (const auto& x : features) mean += x[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& x : features) {
            const double d = x[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        m.means[j] = mean;
        const double sd = std::sqrt(var);
        active[j] = sd > 1e-12;
        m.stds[j] = active[j] ? sd : 1.0;  // pinned features keep weight 0
    }

    std::vector<std::array<double, 4>> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            z[i][j] = active[j] ? (features[i][j] - m.means[j]) / m.stds[j] : 0.0;
        }
    }

    for (std::size_t iter = 0; iter < kMaxIter; ++iter) {
        std::array<double, 4> gw{};
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double lin = m.intercept;
            for (std::size_t j = 0; j < 4; ++j) lin += m.weights[j] * z[i][j];
            const double r = sigmoid(lin) - (labels[i] ? 1.0 : 0.0);
            for (std::size_t j = 0; j < 4; ++j) gw[j] += r * z[i][j];
            gb += r;
        }
        double norm2 = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            gw[j] = gw[j] / static_cast<double>(n) + 2.0 * kL2 * m.weights[j];
            if (!active[j]) gw[j] = 0.0;
            norm2 += gw[j] * gw[j];
        }
        gb /= static_cast<double>(n);
        norm2 += gb * gb;
        if (std::sqrt(norm2) < kGradTol) break;
        for (std::size_t j = 0; j < 4; ++j) m.weights[j] -= kStep * gw[j];
        m.intercept -= kStep * gb;
    }
    return m;
}

void save_logistic(const LogisticModel& m, const std::string& path) {
    nlohmann::json j;
    j["weights"] = m.weights;
    j["intercept"] = m.intercept;
    j["means"] = m.means;
    j["stds"] = m.stds;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write alert model " + path);
    out << j.dump(2) << "\n";
}

LogisticModel load_logistic(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open alert model " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    LogisticModel m;
    try {
        auto w = j.at("weights").get<std::vector<double>>();
        auto mu = j.at("means").get<std::vector<double>>();
        auto sd = j.at("stds").get<std::vector<double>>();
        if (w.size() != 4 || mu.size() != 4 || sd.size() != 4) {
            throw std::runtime_error(path + ": alert model must have 4 features");
        }
        std::copy(w.begin(), w.end(), m.weights.begin());
        std::copy(mu.begin(), mu.end(), m.means.begin());
        std::copy(sd.begin(), sd.end(), m.stds.begin());
        m.intercept = j.at("intercept").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return m;
}

}  // namespace ctgfm::train

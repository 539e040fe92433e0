#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctgfm/optim.hpp"
#include "ctgfm/patch.hpp"
#include "ctgfm/rng.hpp"
#include "ctgfm/tensor.hpp"

namespace ctgfm::model {

enum class HeadType { reconstruction, classification };

std::string head_type_name(HeadType h);
HeadType parse_head_type(const std::string& name);

struct ModelConfig {
    std::size_t patch_len = 48;
    std::size_t stride = 24;
    std::size_t context_len = 1800;
    std::size_t d_model = 128;
    std::size_t n_heads = 8;
    std::size_t n_layers = 3;
    std::size_t ff_dim = 256;
    double dropout = 0.2;
    HeadType head_type = HeadType::reconstruction;

    std::size_t n_patches() const;
    void validate() const;

    // Grad-checkable size: 6 patches of 4 samples, d_model 8, 2 heads,
    // 1 layer. Dropout stays at the production default; set it to 0 when a
    // test needs a deterministic train-mode forward.
    static ModelConfig tiny(HeadType head);
};

// All weights and batch-norm running buffers, keyed by name:
//   embed.w_p, embed.w_pos,
//   layer<i>.attn.{wq,wk,wv,wo,bq,bk,bv,bo},
//   layer<i>.ff.{w1,b1,w2,b2},
//   layer<i>.bn{1,2}.{gamma,beta,running_mean,running_var},
//   head.recon.{w,b} or head.cls.{w,b}.
struct ModelParams {
    ModelConfig config;
    nn::ParamMap tensors;

    // Running-statistic buffers are carried in `tensors` but are not
    // optimizer targets.
    static bool is_buffer(const std::string& name);
    std::vector<std::string> trainable_names() const;
};

// Seeded initialization: linear weights uniform in ±1/sqrt(fan_in), biases
// zero, positional table normal with sigma 0.02, batch-norm at identity.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Copies the embedding and encoder tensors of a pretrained model bit-for-bit
// into a classification model and freshly initializes the head.
ModelParams with_classification_head(const ModelParams& pretrained, std::uint64_t seed);

// --- Forward passes -------------------------------------------------------
// Train mode draws dropout noise from `dropout_rng` (required when
// config.dropout > 0) and updates batch-norm running buffers in place.
// Infer mode never touches the parameter set and is deterministic.

nn::Tensor embed_patches(const patch::PatchSequence& patches, const ModelParams& params);

nn::Tensor encode(const nn::Tensor& tokens, ModelParams& params, nn::Mode mode,
                  Rng* dropout_rng = nullptr);

std::pair<nn::Tensor, nn::Tensor> forward_channel_independent(
    const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
    ModelParams& params, nn::Mode mode, Rng* dropout_rng = nullptr);

// Per-token linear map from the two aligned channel representations to a
// predicted FHR patch. Requires the reconstruction head.
nn::Tensor reconstruct(const nn::Tensor& fhr_repr, const nn::Tensor& uc_repr,
                       const ModelParams& params);

// Probability of the positive class from a two-logit softmax over the
// concatenated flattened channel representations. Requires the
// classification head.
double classify(const nn::Tensor& fhr_repr, const nn::Tensor& uc_repr,
                const ModelParams& params);

// Mean over masked patches of the squared Euclidean distance between
// predicted and target patch, computed over each patch's samples. Unmasked
// patches contribute nothing. Throws if no patch is masked.
double pretrain_loss(const nn::Tensor& pred, const nn::Tensor& target,
                     const patch::MaskPattern& mask);

// --- Training steps -------------------------------------------------------

struct StepResult {
    double loss = 0.0;
    nn::ParamMap grads;  // trainable tensors only
};

// Masks the FHR patches, runs both channels through the encoder, and
// backpropagates the masked-reconstruction loss. Train mode.
StepResult pretrain_step(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                         const patch::MaskPattern& mask, ModelParams& params,
                         Rng& dropout_rng);

// Same loss without gradients or parameter-buffer updates. Infer mode.
double pretrain_eval(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                     const patch::MaskPattern& mask, const ModelParams& params);

// Cross-entropy of the two-logit head against label ∈ {0,1}. Train mode.
StepResult finetune_step(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                         int label, ModelParams& params, Rng& dropout_rng);

// Infer-mode positive-class probability for one window.
double predict_window(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                      const ModelParams& params);

// Rebuilds the pretraining (or classification, per config head) loss graph
// with externally supplied leaves bound in trainable_names() order, so
// finite-difference checks can perturb any weight. Running buffers are
// copied, never mutated. `label` is only read for the classification head.
nn::NodePtr build_loss_graph(const patch::PatchSequence& fhr, const patch::PatchSequence& uc,
                             const patch::MaskPattern& mask, int label,
                             const ModelParams& params,
                             const std::vector<nn::NodePtr>& leaves, nn::Mode mode,
                             Rng* dropout_rng = nullptr);

// --- Weight file ----------------------------------------------------------
// Binary format: magic "CTGW", u32 version, u32 length + UTF-8 config JSON,
// then per tensor: u32 name length, name, u32 rank, u64 dims, f32
// little-endian values. Tensors appear in name order.

void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace ctgfm::model

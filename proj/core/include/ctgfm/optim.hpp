#pragma once

#include <map>
#include <string>

#include "ctgfm/tensor.hpp"

namespace ctgfm::nn {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// First/second moment accumulators keyed by parameter name. Accumulators are
/// created lazily and must keep the parameter's shape afterwards.
struct OptimizerState {
    AdamHyper hyper;
    long step_count = 0;
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;
};

using ParamMap = std::map<std::string, Tensor>;

/// Standard bias-corrected Adam update. Parameters missing from `grads` are
/// left untouched.
void adam_step(ParamMap& params, const ParamMap& grads, OptimizerState& state);

/// Adam plus decoupled weight decay lr·λ·w. With weight_decay = 0 this is
/// bit-identical to adam_step.
void adamw_step(ParamMap& params, const ParamMap& grads, OptimizerState& state);

}  // namespace ctgfm::nn

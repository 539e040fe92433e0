#include "ctgfm/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ctgfm::nn {

namespace {

void step_impl(ParamMap& params, const ParamMap& grads, OptimizerState& state,
               bool decoupled_decay) {
    state.step_count += 1;
    const auto& h = state.hyper;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step_count));

    for (auto& [name, w] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const Tensor& g = git->second;
        if (!g.same_shape(w)) {
            throw std::invalid_argument("adam: gradient shape mismatch for " + name);
        }
        Tensor& m = state.first_moment.try_emplace(name, Tensor(w.shape())).first->second;
        Tensor& v = state.second_moment.try_emplace(name, Tensor(w.shape())).first->second;
        if (!m.same_shape(w) || !v.same_shape(w)) {
            throw std::invalid_argument("adam: accumulator shape mismatch for " + name);
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            double update = h.lr * mhat / (std::sqrt(vhat) + h.eps);
            if (decoupled_decay) update += h.lr * h.weight_decay * w[i];
            w[i] -= update;
        }
        check_finite(w, "adam_step");
    }
}

}  // namespace

void adam_step(ParamMap& params, const ParamMap& grads, OptimizerState& state) {
    step_impl(params, grads, state, false);
}

void adamw_step(ParamMap& params, const ParamMap& grads, OptimizerState& state) {
    step_impl(params, grads, state, true);
}

}  // namespace ctgfm::nn

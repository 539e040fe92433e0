#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctgfm/rng.hpp"

namespace ctgfm::nn {

/// Dense row-major tensor of 64-bit floats. Rank 1 and 2 are what the model
/// uses; the weight file can carry any rank.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_)) {
            throw std::invalid_argument("Tensor: data length does not match shape");
        }
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const {
        if (rank() == 1) return shape_[0];
        if (rank() == 2) return shape_[1];
        throw std::invalid_argument("Tensor::cols: rank > 2");
    }

    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                               std::multiplies<>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Throws std::runtime_error naming `op` if any value is NaN or infinite.
void check_finite(const Tensor& t, const char* op);

enum class Mode { train, infer };

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the backward tape. `backprop` reads this node's grad and
/// accumulates into the inputs' grads; it must not capture the node itself.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backprop;
};

NodePtr leaf(Tensor value, bool requires_grad = false);
NodePtr constant(Tensor value);

// The closed primitive set. Every op validates shapes and checks its output
// for non-finite values.
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr add_rowwise(const NodePtr& a, const NodePtr& bias);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double c);
NodePtr transpose(const NodePtr& a);
NodePtr softmax_rows(const NodePtr& a);
NodePtr slice_cols(const NodePtr& a, std::size_t c0, std::size_t c1);
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr concat_rows(const std::vector<NodePtr>& parts);
NodePtr reshape(const NodePtr& a, std::vector<std::size_t> shape);
NodePtr flatten_row(const NodePtr& a);
NodePtr sum(const NodePtr& a);
NodePtr mean_all(const NodePtr& a);

/// Inverted dropout. rate 0 is the identity; the mask is drawn from `rng` in
/// row-major order, so a fixed generator state reproduces the mask.
NodePtr dropout(const NodePtr& a, double rate, Rng& rng);

/// Feature-wise batch normalization over the rows of an m×n input. Train mode
/// uses biased batch statistics and updates the running buffers in place;
/// infer mode uses the running buffers.
NodePtr batchnorm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                  Tensor& running_mean, Tensor& running_var, Mode mode,
                  double momentum = 0.1, double eps = 1e-8);

/// Σ_i w_i · ‖pred_i − target_i‖² over rows. The gradient w.r.t. rows with
/// zero weight is exactly zero.
NodePtr weighted_row_sse(const NodePtr& pred, const Tensor& target,
                         const std::vector<double>& row_weights);

/// Mean over rows of −log softmax(logits_r)[label_r].
NodePtr cross_entropy(const NodePtr& logits, const std::vector<int>& labels);

/// Σ (a − b)² / n over all entries.
NodePtr mse(const NodePtr& a, const Tensor& b);

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into the
/// `grad` member of every reachable node with requires_grad; leaves that do
/// not influence the loss keep a zero gradient.
void backward(const NodePtr& loss);

/// Central-difference check of `build_loss` against the analytic gradients.
/// `build_loss` is called with freshly bound leaves each evaluation and must
/// be deterministic. Returns max over coordinates of
/// |analytic − numeric| / max(1, |numeric|).
double grad_check(
    const std::function<NodePtr(const std::vector<NodePtr>&)>& build_loss,
    const std::vector<Tensor>& params, double eps);

}  // namespace ctgfm::nn
